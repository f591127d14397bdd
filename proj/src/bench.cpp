#include "ppfilter/bench.hpp"

#include "ppfilter/inference.hpp"
#include "ppfilter/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

namespace ppfilter {

namespace {

template <class F>
double time_ms(F&& f) {
    const auto start = std::chrono::steady_clock::now();
    f();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count();
}

volatile double g_sink = 0.0;

} // namespace

EventData hawkes_bench_data(std::size_t p, double horizon, double rate, std::uint64_t seed) {
    if (!(rate > 0.0)) throw std::invalid_argument("bench rate must be positive");
    // Each filter adds e^-2 to the log intensity per event and decays within
    // about 0.1 s; the baseline sits a little below log(rate).
    SimConfig cfg = SimConfig::uniform(p, horizon, std::log(rate) - 0.01 * static_cast<double>(p), seed);
    for (auto& row : cfg.filters) {
        for (auto& f : row) f = ExpFilter{-20.0, -2.0};
    }
    return simulate_trials(cfg, 1);
}

BenchRow run_bench_case(const EventData& data, const BenchCase& bc, std::size_t reps, std::uint64_t seed) {
    if (reps < 1) throw std::invalid_argument("need at least one timed repetition");
    FitConfig config;
    config.target = data.channels().front();
    config.inputs = data.channels();
    config.support = bc.support;
    config.base_n = bc.n;
    config.delta_n = bc.delta_n;
    config.mode = bc.mode;
    config.q = bc.mode == FilterMode::basis ? bc.q : 0;
    config.lambda = 0.1;
    const ObjectiveContext ctx = make_context(data, config);

    BenchRow row;
    row.config = bc;
    row.p = ctx.spec->p;
    row.rows = ctx.matrices->rows();
    const auto& design = ctx.design();
    row.nnz = design.nnz();
    const MemoryFootprint mem = memory_footprint(design);
    row.sparse_bytes = mem.sparse_bytes;
    row.dense_bytes = mem.dense_bytes;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 0.01);
    Eigen::VectorXd theta(static_cast<Eigen::Index>(ctx.dimension()));
    for (auto& v : theta) v = normal(rng);
    theta(0) = -0.5;

    Eigen::VectorXd grad;
    g_sink = evaluate(ctx, theta, &grad);  // warm-up
    std::vector<double> nll_times;
    std::vector<double> grad_times;
    for (std::size_t r = 0; r < reps; ++r) {
        nll_times.push_back(time_ms([&] { g_sink = evaluate(ctx, theta, nullptr); }));
        grad_times.push_back(time_ms([&] { g_sink = evaluate(ctx, theta, &grad); }));
    }
    row.nll_ms = median(std::move(nll_times));
    row.grad_ms = median(std::move(grad_times));
    return row;
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of an empty sample");
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (values.size() % 2 == 1) return *mid;
    return 0.5 * (*mid + *std::max_element(values.begin(), mid));
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope needs two or more paired points");
    const auto n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace ppfilter
