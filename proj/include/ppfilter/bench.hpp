#pragma once

#include "ppfilter/event_data.hpp"
#include "ppfilter/objective.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ppfilter {

struct BenchCase {
    FilterMode mode{FilterMode::direct};
    std::size_t n{10'000};      // base grid intervals per trial
    std::size_t delta_n{400};
    std::size_t q{33};          // basis size (basis mode)
    double support{0.4};
};

struct BenchRow {
    BenchCase config;
    std::size_t p{0};
    std::size_t rows{0};
    std::size_t nnz{0};
    std::size_t sparse_bytes{0};
    std::size_t dense_bytes{0};
    double nll_ms{0.0};   // medians
    double grad_ms{0.0};
};

/// Mutually exciting p-channel data at about `rate` events per second per
/// channel (log link, short exponential filters), one trial of `horizon` s.
[[nodiscard]] EventData hawkes_bench_data(std::size_t p, double horizon, double rate, std::uint64_t seed);

/// Builds H (direct) or Z (basis) for the first channel as target with every
/// channel as input, then times `reps` evaluations of the nll and of the
/// gradient at a fixed random parameter.
[[nodiscard]] BenchRow run_bench_case(const EventData& data, const BenchCase& bc, std::size_t reps = 20,
                                      std::uint64_t seed = 1);

/// Median of a nonempty sample.
[[nodiscard]] double median(std::vector<double> values);

/// Least-squares slope of log(y) against log(x).
[[nodiscard]] double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace ppfilter
