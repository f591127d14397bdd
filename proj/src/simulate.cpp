#include "ppfilter/simulate.hpp"

#include "ppfilter/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace ppfilter {

namespace {

constexpr std::size_t kCandidatesPerEvent = 100;

// 53-bit uniform on [0, 1) from mt19937_64.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t stream) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
        rng_.seed(seq);
    }
    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

private:
    std::mt19937_64 rng_;
};

double intensity_of(const LinkFunction& link, double x) {
    return std::max(phi(link, x).value, 0.0);
}

// Filter state of a trial under construction (or replay). Exponential pairs
// are tracked recursively at `time_`; tabulated pairs scan the history.
class State {
public:
    explicit State(const SimConfig& cfg) : cfg_(cfg), hist_(cfg.p()), y_(cfg.p(), std::vector<double>(cfg.p(), 0.0)) {}

    void advance_to(double t) {
        for (std::size_t i = 0; i < cfg_.p(); ++i) {
            for (std::size_t j = 0; j < cfg_.p(); ++j) {
                if (const auto* e = std::get_if<ExpFilter>(&cfg_.filters[i][j])) {
                    y_[i][j] *= std::exp(e->alpha * (t - time_));
                }
            }
        }
        time_ = t;
    }

    // Event on channel j at the current time.
    void add_event(std::size_t j) {
        hist_[j].push_back(time_);
        for (std::size_t i = 0; i < cfg_.p(); ++i) {
            if (const auto* e = std::get_if<ExpFilter>(&cfg_.filters[i][j])) y_[i][j] += std::exp(e->beta);
        }
    }

    // Linear predictor of channel i at s >= time_, counting history events before s.
    [[nodiscard]] double predictor(std::size_t i, double s) const {
        double x = cfg_.baselines[i];
        for (std::size_t j = 0; j < cfg_.p(); ++j) {
            const auto& f = cfg_.filters[i][j];
            if (const auto* e = std::get_if<ExpFilter>(&f)) {
                x += y_[i][j] * std::exp(e->alpha * (s - time_));
            } else if (const auto* tab = std::get_if<TabulatedFilter>(&f)) {
                for (auto it = hist_[j].rbegin(); it != hist_[j].rend(); ++it) {
                    const double lag = s - *it;
                    if (lag <= 0.0) continue;
                    if (lag >= tab->support) break;
                    x += (*tab)(lag);
                }
            }
        }
        return x;
    }

    // Upper bound of the predictor of channel i on [time_, next event).
    [[nodiscard]] double predictor_bound(std::size_t i) const {
        double x = cfg_.baselines[i];
        for (std::size_t j = 0; j < cfg_.p(); ++j) {
            const auto& f = cfg_.filters[i][j];
            if (std::holds_alternative<ExpFilter>(f)) {
                x += y_[i][j];
            } else if (const auto* tab = std::get_if<TabulatedFilter>(&f)) {
                // lags only grow until the next event, so each event is bounded by the
                // largest value from its current bin onwards
                const auto n = tab->values.size();
                for (auto it = hist_[j].rbegin(); it != hist_[j].rend() && time_ - *it < tab->support; ++it) {
                    const double lag = std::max(time_ - *it, 0.0);
                    const auto k = std::min(static_cast<std::size_t>(lag / tab->support * static_cast<double>(n)), n - 1);
                    x += std::max(0.0, *std::max_element(tab->values.begin() + static_cast<std::ptrdiff_t>(k), tab->values.end()));
                }
            }
        }
        return x;
    }

    [[nodiscard]] const std::vector<std::vector<double>>& history() const noexcept { return hist_; }

private:
    const SimConfig& cfg_;
    std::vector<std::vector<double>> hist_;
    std::vector<std::vector<double>> y_;
    double time_{0.0};
};

// Longest integration piece for the compensator.
double piece_length(const SimConfig& cfg) {
    double h = cfg.horizon / 1000.0;
    for (const auto& row : cfg.filters) {
        for (const auto& f : row) {
            if (const auto* e = std::get_if<ExpFilter>(&f)) h = std::min(h, 1.0 / -e->alpha);
            if (const auto* tab = std::get_if<TabulatedFilter>(&f)) {
                h = std::min(h, tab->support / static_cast<double>(tab->values.size()));
            }
        }
    }
    return h;
}

} // namespace

double TabulatedFilter::operator()(double s) const {
    if (s < 0.0 || s >= support || values.empty()) return 0.0;
    const auto n = values.size();
    const auto k = std::min(static_cast<std::size_t>(s / support * static_cast<double>(n)), n - 1);
    return values[k];
}

double filter_value(const FilterFunction& f, double s) {
    if (s <= 0.0) return 0.0;
    if (const auto* e = std::get_if<ExpFilter>(&f)) return std::exp(e->alpha * s + e->beta);
    if (const auto* tab = std::get_if<TabulatedFilter>(&f)) return (*tab)(s);
    return 0.0;
}

void SimConfig::validate() const {
    const std::size_t n = p();
    if (n == 0) throw std::invalid_argument("simulation needs at least one channel");
    if (!(horizon > 0.0)) throw std::invalid_argument("simulation horizon must be positive");
    if (links.size() != n || baselines.size() != n || filters.size() != n) {
        throw std::invalid_argument("links, baselines and filters must have one entry per channel");
    }
    for (const auto& row : filters) {
        if (row.size() != n) throw std::invalid_argument("filter matrix must be p x p");
        for (const auto& f : row) {
            if (const auto* e = std::get_if<ExpFilter>(&f); e && !(e->alpha < 0.0)) {
                throw std::invalid_argument("exponential filters need alpha < 0");
            }
            if (const auto* tab = std::get_if<TabulatedFilter>(&f);
                tab && (!(tab->support > 0.0) || tab->values.empty())) {
                throw std::invalid_argument("tabulated filters need a positive support and values");
            }
        }
    }
    if (max_events < 1) throw std::invalid_argument("event cap must be at least 1");
}

SimConfig SimConfig::uniform(std::size_t p, double horizon, double baseline, std::uint64_t seed) {
    SimConfig cfg;
    for (std::size_t i = 0; i < p; ++i) cfg.channels.push_back("c" + std::to_string(i + 1));
    cfg.horizon = horizon;
    cfg.links.assign(p, LinkFunction::log());
    cfg.baselines.assign(p, baseline);
    cfg.filters.assign(p, std::vector<FilterFunction>(p));
    cfg.seed = seed;
    return cfg;
}

double exp_hawkes_intensity(std::span<const double> events, double alpha, double beta, double t) {
    if (!(alpha < 0.0)) throw std::invalid_argument("alpha must be negative");
    if (!std::is_sorted(events.begin(), events.end())) throw std::invalid_argument("events must be sorted");
    double y = 0.0;
    double last = 0.0;
    const double jump = std::exp(beta);
    for (const double s : events) {
        if (s >= t) break;
        y = y * std::exp(alpha * (s - last)) + jump;
        last = s;
    }
    return y * std::exp(alpha * (t - last));
}

double exp_hawkes_direct(std::span<const double> events, double alpha, double beta, double t) {
    double y = 0.0;
    for (const double s : events) {
        if (s < t) y += std::exp(alpha * (t - s) + beta);
    }
    return y;
}

Trial thinning_simulate(const SimConfig& cfg, std::uint64_t stream, int trial_id) {
    cfg.validate();
    const std::size_t p = cfg.p();
    Stream rng(cfg.seed, stream);
    State state(cfg);
    std::vector<double> rates(p);
    std::size_t total = 0;
    std::size_t candidates = 0;
    const std::size_t max_candidates = kCandidatesPerEvent * cfg.max_events;
    double t = 0.0;
    for (;;) {
        double bound = 0.0;
        for (std::size_t i = 0; i < p; ++i) bound += intensity_of(cfg.links[i], state.predictor_bound(i));
        if (!std::isfinite(bound)) {
            throw ExplosionError("intensity bound overflowed at t = " + std::to_string(t));
        }
        if (bound <= 0.0) break;
        t += rng.exponential(bound);
        if (t >= cfg.horizon) break;
        state.advance_to(t);
        if (++candidates > max_candidates) {
            std::ostringstream msg;
            msg << "simulation exceeded " << max_candidates << " thinning candidates before t = " << t << " of "
                << cfg.horizon;
            throw ExplosionError(msg.str());
        }

        double sum = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            rates[i] = intensity_of(cfg.links[i], state.predictor(i, t));
            sum += rates[i];
        }
        const double v = rng.uniform() * bound;
        if (v >= sum) continue;
        std::size_t channel = 0;
        for (double acc = rates[0]; acc <= v && channel + 1 < p; acc += rates[++channel]) {
        }
        state.add_event(channel);
        if (++total > cfg.max_events) {
            std::ostringstream msg;
            msg << "simulation exceeded " << cfg.max_events << " events before t = " << t << " of "
                << cfg.horizon;
            throw ExplosionError(msg.str());
        }
    }

    Trial trial;
    trial.id = trial_id;
    trial.t_end = cfg.horizon;
    for (std::size_t i = 0; i < p; ++i) trial.events[cfg.channels[i]] = state.history()[i];
    return trial;
}

EventData simulate_trials(const SimConfig& cfg, std::size_t n_trials) {
    if (n_trials < 1) throw std::invalid_argument("need at least one trial");
    std::vector<Trial> trials;
    trials.reserve(n_trials);
    for (std::size_t k = 0; k < n_trials; ++k) {
        trials.push_back(thinning_simulate(cfg, k, static_cast<int>(k + 1)));
    }
    return EventData(std::move(trials), cfg.channels);
}

double conditional_intensity(const SimConfig& cfg, const Trial& trial, std::size_t channel, double t) {
    cfg.validate();
    if (channel >= cfg.p()) throw std::out_of_range("channel index out of range");
    double x = cfg.baselines[channel];
    for (std::size_t j = 0; j < cfg.p(); ++j) {
        for (const double s : trial.channel(cfg.channels[j])) {
            if (s >= t) break;
            x += filter_value(cfg.filters[channel][j], t - s);
        }
    }
    return intensity_of(cfg.links[channel], x);
}

std::vector<double> compensator_increments(const SimConfig& cfg, const Trial& trial, std::size_t channel) {
    cfg.validate();
    if (channel >= cfg.p()) throw std::out_of_range("channel index out of range");
    // All events in time order with their channel.
    std::vector<std::pair<double, std::size_t>> events;
    for (std::size_t j = 0; j < cfg.p(); ++j) {
        for (const double s : trial.channel(cfg.channels[j])) events.emplace_back(s, j);
    }
    std::sort(events.begin(), events.end());

    const auto rule = gauss_legendre(16);
    const double h = piece_length(cfg);
    State state(cfg);
    std::vector<double> out;
    double acc = 0.0;
    double a = 0.0;
    for (const auto& [b, j] : events) {
        const auto pieces = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((b - a) / h)));
        const double w = (b - a) / static_cast<double>(pieces);
        for (std::size_t k = 0; k < pieces; ++k) {
            const double lo = a + w * static_cast<double>(k);
            for (std::size_t r = 0; r < rule.nodes.size(); ++r) {
                const double s = lo + 0.5 * w * (rule.nodes[r] + 1.0);
                acc += 0.5 * w * rule.weights[r] * intensity_of(cfg.links[channel], state.predictor(channel, s));
            }
        }
        state.advance_to(b);
        state.add_event(j);
        if (j == channel) {
            out.push_back(acc);
            acc = 0.0;
        }
        a = b;
    }
    return out;
}

double ks_statistic_exp1(std::vector<double> sample) {
    if (sample.empty()) throw std::invalid_argument("KS statistic of an empty sample");
    std::sort(sample.begin(), sample.end());
    const auto n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t k = 0; k < sample.size(); ++k) {
        const double f = -std::expm1(-std::max(sample[k], 0.0));
        d = std::max({d, f - static_cast<double>(k) / n, static_cast<double>(k + 1) / n - f});
    }
    return d;
}

double ks_critical_1pct(std::size_t n) {
    return 1.628 / std::sqrt(static_cast<double>(n));
}

} // namespace ppfilter
