#pragma once

#include "ppfilter/event_data.hpp"
#include "ppfilter/inference.hpp"
#include "ppfilter/objective.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace fixtures {

using namespace ppfilter;

// p = 1, events {0.3, 0.6} on [0, 1], self-exciting channel "a".
inline EventData t1_data() {
    Trial trial;
    trial.id = 1;
    trial.t_end = 1.0;
    trial.events["a"] = {0.3, 0.6};
    return EventData({trial}, {"a"});
}

inline FitConfig t1_config(FilterMode mode = FilterMode::direct) {
    FitConfig cfg;
    cfg.target = "a";
    cfg.inputs = {"a"};
    cfg.support = 0.5;
    cfg.base_n = 10;
    cfg.delta_n = 5;
    cfg.mode = mode;
    cfg.q = mode == FilterMode::basis ? 4 : 0;
    return cfg;
}

inline ObjectiveContext t1_context(FilterMode mode = FilterMode::direct, LinkFunction link = LinkFunction::log(),
                                   double lambda = 0.0) {
    FitConfig cfg = t1_config(mode);
    cfg.link = link;
    cfg.lambda = lambda;
    return make_context(t1_data(), cfg);
}

inline Coefficients random_coef(std::size_t dim_beta, std::uint64_t seed, double beta0, double scale) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    Coefficients c;
    c.beta0 = beta0;
    c.beta.resize(static_cast<Eigen::Index>(dim_beta));
    for (auto& v : c.beta) v = normal(rng);
    return c;
}

// Independent evaluation of the discretized likelihood: builds the grid
// by sorting the union of uniform points and target events, then sums
// g(t_l - sigma) over every earlier input event with a linear bin search.
struct BruteForce {
    const EventData& data;
    std::string target;
    std::vector<std::string> inputs;
    std::size_t base_n;
    std::vector<double> delta;  // delta grid points, N + 1

    std::vector<double> grid(const Trial& trial) const {
        std::vector<double> pts;
        for (std::size_t l = 0; l <= base_n; ++l) {
            pts.push_back(l == base_n ? trial.t_end
                                      : trial.t_end * static_cast<double>(l) / static_cast<double>(base_n));
        }
        for (const double e : trial.channel(target)) {
            bool merged = false;
            for (std::size_t l = 1; l + 1 < pts.size(); ++l) {
                if (std::abs(pts[l] - e) <= 1e-12) {
                    pts[l] = e;
                    merged = true;
                }
            }
            if (!merged) pts.push_back(e);
        }
        std::sort(pts.begin(), pts.end());
        return pts;
    }

    int bin(double lag) const {
        const std::size_t n = delta.size() - 1;
        if (lag < 0.0 || lag > delta[n]) return -1;
        for (std::size_t k = 0; k < n; ++k) {
            if (delta[k] <= lag && (lag < delta[k + 1] || k + 1 == n)) return static_cast<int>(k);
        }
        return -1;
    }

    // filters[i][k]: value of filter i at lag delta_k
    double xi(const Trial& trial, double t, double beta0, const std::vector<std::vector<double>>& filters) const {
        double x = beta0;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            for (const double s : trial.channel(inputs[i])) {
                if (!(s < t)) continue;
                const int k = bin(t - s);
                if (k >= 0) x += filters[i][static_cast<std::size_t>(k)];
            }
        }
        return x;
    }

    double nll(double beta0, const std::vector<std::vector<double>>& filters, const LinkFunction& link) const {
        double total = 0.0;
        for (const auto& trial : data.trials()) {
            const auto pts = grid(trial);
            const auto& ev = trial.channel(target);
            for (std::size_t l = 1; l < pts.size(); ++l) {
                const double x = xi(trial, pts[l], beta0, filters);
                total += phi(link, x).value * (pts[l] - pts[l - 1]);
                if (std::find(ev.begin(), ev.end(), pts[l]) != ev.end()) total -= std::log(phi(link, x).value);
            }
        }
        return total;
    }
};

inline std::vector<std::vector<double>> curves(const FilterSpec& spec, const Coefficients& coef) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < spec.p; ++i) {
        const Eigen::VectorXd g = reconstruct_filter(spec, coef.block(i, spec.q()));
        out.emplace_back(g.data(), g.data() + g.size());
    }
    return out;
}

// Richardson-extrapolated central differences.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                   double h = 1e-4) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const auto central = [&](double step) {
            Eigen::VectorXd xp = x;
            Eigen::VectorXd xm = x;
            xp(i) += step;
            xm(i) -= step;
            return (f(xp) - f(xm)) / (2.0 * step);
        };
        g(i) = (4.0 * central(0.5 * h) - central(h)) / 3.0;
    }
    return g;
}

// max_i |a_i - b_i| / max(|a_i|, floor)
inline double max_rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-8) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a(i) - b(i)) / std::max(std::abs(a(i)), floor));
    }
    return worst;
}

// max_i |a_i - b_i| / max(max_i |a_i|, 1)
inline double sup_scaled_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(a.cwiseAbs().maxCoeff(), 1.0);
}

inline double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

} // namespace fixtures
