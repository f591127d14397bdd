#pragma once

#include "ppfilter/event_data.hpp"
#include "ppfilter/link.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ppfilter {

/// Raised when a simulation exceeds its event cap.
class ExplosionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// g(s) = exp(alpha s + beta) for s > 0, alpha < 0.
struct ExpFilter {
    double alpha{-1.0};
    double beta{0.0};
};

/// Piecewise-constant filter on [0, support]: g(s) = values[k] for
/// k A / N <= s < (k+1) A / N, with N = values.size(); zero beyond A.
struct TabulatedFilter {
    double support{1.0};
    std::vector<double> values;

    [[nodiscard]] double operator()(double s) const;
};

using FilterFunction = std::variant<std::monostate, ExpFilter, TabulatedFilter>;

[[nodiscard]] double filter_value(const FilterFunction& f, double s);

/// Channel i has intensity phi_i(baseline_i + sum_j sum_{sigma < t} g_ij(t - sigma))
/// where sigma runs over the events of channel j.
struct SimConfig {
    std::vector<std::string> channels;
    double horizon{1.0};
    std::vector<LinkFunction> links;
    std::vector<double> baselines;
    std::vector<std::vector<FilterFunction>> filters;  // filters[i][j]: effect of j on i
    std::uint64_t seed{0};
    std::size_t max_events{1'000'000};

    [[nodiscard]] std::size_t p() const noexcept { return channels.size(); }
    /// Checks sizes, alpha < 0 for exponential filters and a positive cap.
    void validate() const;

    /// p channels named c1..cp with log links, zero filters and the given baseline.
    [[nodiscard]] static SimConfig uniform(std::size_t p, double horizon, double baseline, std::uint64_t seed);
};

/// Y_t = sum_{sigma < t} exp(alpha (t - sigma) + beta), computed by the
/// recursion Y_t = exp(alpha (t - s)) Y_{s+} over sorted events.
[[nodiscard]] double exp_hawkes_intensity(std::span<const double> events, double alpha, double beta, double t);

/// Same quantity by direct summation.
[[nodiscard]] double exp_hawkes_direct(std::span<const double> events, double alpha, double beta, double t);

/// Ogata thinning on [0, horizon) for one trial using substream `stream`.
[[nodiscard]] Trial thinning_simulate(const SimConfig& cfg, std::uint64_t stream = 0, int trial_id = 1);

/// Trials 1..n_trials from substreams 0..n_trials-1 of cfg.seed.
[[nodiscard]] EventData simulate_trials(const SimConfig& cfg, std::size_t n_trials);

/// Conditional intensity of channel i at time t given the trial's history before t.
[[nodiscard]] double conditional_intensity(const SimConfig& cfg, const Trial& trial, std::size_t channel, double t);

/// Compensator increments int lambda_i between consecutive events of
/// channel i (the first from time 0). Integrated by Gauss-Legendre between
/// the event times of all channels.
[[nodiscard]] std::vector<double> compensator_increments(const SimConfig& cfg, const Trial& trial,
                                                         std::size_t channel);

/// Kolmogorov-Smirnov distance between the sample and Exp(1).
[[nodiscard]] double ks_statistic_exp1(std::vector<double> sample);

/// Asymptotic 1% critical value 1.628 / sqrt(n).
[[nodiscard]] double ks_critical_1pct(std::size_t n);

} // namespace ppfilter
