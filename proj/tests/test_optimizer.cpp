#include "fixtures.hpp"

#include "ppfilter/optimizer.hpp"
#include "ppfilter/simulate.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace ppfilter;
using namespace fixtures;

namespace {

double rosenbrock(const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const double a = 1.0 - x(0);
    const double b = x(1) - x(0) * x(0);
    if (g) {
        g->resize(2);
        (*g)(0) = -2.0 * a - 400.0 * x(0) * b;
        (*g)(1) = 200.0 * b;
    }
    return a * a + 100.0 * b * b;
}

void check_monotone(const std::vector<TraceEntry>& trace) {
    for (std::size_t k = 1; k < trace.size(); ++k) CHECK(trace[k].value <= trace[k - 1].value);
}

} // namespace

TEST_CASE("quadratic converges in a few iterations") {
    Eigen::VectorXd a(5);
    a << 1.0, -2.0, 3.0, 0.5, -0.25;
    const ObjectiveFunction f = [&a](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) *g = x - a;
        return 0.5 * (x - a).squaredNorm();
    };
    const auto r = minimize_bfgs(f, Eigen::VectorXd::Zero(5));
    CHECK(r.converged);
    CHECK(r.iterations <= 7);
    CHECK(r.value <= 1e-12);
    CHECK((r.x - a).cwiseAbs().maxCoeff() <= 1e-6);
    check_monotone(r.trace);
}

TEST_CASE("rosenbrock from the standard start") {
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    OptimSettings s;
    s.grad_tol = 1e-9;
    const auto r = minimize_bfgs(rosenbrock, x0, s);
    CHECK(r.converged);
    CHECK(std::abs(r.x(0) - 1.0) <= 1e-6);
    CHECK(std::abs(r.x(1) - 1.0) <= 1e-6);
    CHECK(rosenbrock(r.x, nullptr) <= 1e-12);
    check_monotone(r.trace);
}

TEST_CASE("infinite values shrink the step") {
    // f = x - log x on x > 0, minimum at 1; +inf for x <= 0
    const ObjectiveFunction f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (x(0) <= 0.0) return std::numeric_limits<double>::infinity();
        if (g) *g = Eigen::VectorXd::Constant(1, 1.0 - 1.0 / x(0));
        return x(0) - std::log(x(0));
    };
    const auto r = minimize_bfgs(f, Eigen::VectorXd::Constant(1, 30.0));
    CHECK(r.converged);
    CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-6));
    check_monotone(r.trace);
}

TEST_CASE("errors") {
    const ObjectiveFunction inf = [](const Eigen::VectorXd&, Eigen::VectorXd*) {
        return std::numeric_limits<double>::infinity();
    };
    CHECK_THROWS_AS((void)minimize_bfgs(inf, Eigen::VectorXd::Zero(2)), std::invalid_argument);

    const ObjectiveFunction nan_grad = [](const Eigen::VectorXd&, Eigen::VectorXd* g) {
        if (g) *g = Eigen::VectorXd::Constant(2, std::numeric_limits<double>::quiet_NaN());
        return 1.0;
    };
    CHECK_THROWS_AS((void)minimize_bfgs(nan_grad, Eigen::VectorXd::Zero(2)), std::runtime_error);

    OptimSettings bad;
    bad.c1 = 0.95;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("iteration limit is reported") {
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    OptimSettings s;
    s.max_iter = 3;
    const auto r = minimize_bfgs(rosenbrock, x0, s);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 3);
    CHECK(r.message == "iteration limit reached");
}

TEST_CASE("initial point from the empirical rate") {
    Trial t;
    t.id = 1;
    t.t_end = 10.0;
    for (int k = 1; k <= 10; ++k) t.events["a"].push_back(k - 0.5);
    const EventData data({t}, {"a"});
    FitConfig cfg = t1_config();
    cfg.inputs = {};
    CHECK(initial_point(make_context(data, cfg)).beta0 == doctest::Approx(0.0).epsilon(1e-14));

    Trial t2 = t;
    t2.events["a"].clear();
    for (int k = 0; k < 20; ++k) t2.events["a"].push_back(0.25 + 0.5 * k);
    cfg.link = LinkFunction::identity();
    CHECK(initial_point(make_context(EventData({t2}, {"a"}), cfg)).beta0 == doctest::Approx(2.0));

    Trial empty = t;
    empty.events["a"].clear();
    cfg.link = LinkFunction::log();
    const auto start = initial_point(make_context(EventData({empty}, {"a"}), cfg));
    CHECK(start.beta0 == doctest::Approx(std::log(1e-6)));
    CHECK(start.beta.size() == 0);
}

TEST_CASE("point-process fit converges") {
    auto sim = SimConfig::uniform(2, 40.0, std::log(1.5), 6);
    sim.channels = {"a", "b"};
    sim.filters[0][0] = ExpFilter{-10.0, -0.5};
    sim.filters[0][1] = ExpFilter{-10.0, -0.5};
    const auto data = simulate_trials(sim, 2);
    for (const auto mode : {FilterMode::direct, FilterMode::basis}) {
        FitConfig cfg;
        cfg.target = "a";
        cfg.inputs = {"a", "b"};
        cfg.base_n = 2000;
        cfg.delta_n = 40;
        cfg.mode = mode;
        cfg.q = mode == FilterMode::basis ? 10 : 0;
        cfg.lambda = 0.1;
        const auto ctx = make_context(data, cfg);
        const auto r = minimize(ctx);
        CAPTURE(r.message);
        CHECK(r.converged);
        CHECK(r.grad_norm <= 1e-6);
        check_monotone(r.trace);
        CHECK(r.nll_value == doctest::Approx(penalized_nll(ctx, r.coef)).epsilon(1e-14));
    }
}
