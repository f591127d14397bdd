#pragma once

#include "ppfilter/objective.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace ppfilter {

struct OptimSettings {
    std::size_t max_iter{500};
    double grad_tol{1e-6};  // sup-norm
    double c1{1e-4};
    double c2{0.9};
    std::size_t max_line_search{50};

    void validate() const;
};

struct TraceEntry {
    double value;
    double grad_norm;
};

/// Objective callback: returns f(x) (possibly +inf) and fills *grad when it
/// is non-null and f(x) is finite.
using ObjectiveFunction = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct MinimizeResult {
    Eigen::VectorXd x;
    double value{0.0};
    double grad_norm{0.0};
    std::size_t iterations{0};
    std::size_t evaluations{0};
    bool converged{false};
    std::string message;
    std::vector<TraceEntry> trace;
};

/// BFGS on the inverse Hessian with a strong Wolfe line search. Infinite
/// objective values shrink the step. Accepted values never increase.
[[nodiscard]] MinimizeResult minimize_bfgs(const ObjectiveFunction& f, Eigen::VectorXd x0,
                                           const OptimSettings& settings = {});

struct OptimResult {
    Coefficients coef;
    double nll_value{0.0};  // penalized objective at coef
    double grad_norm{0.0};
    std::size_t iterations{0};
    bool converged{false};
    std::string message;
    std::vector<TraceEntry> trace;
};

/// beta = 0 and phi(beta0) equal to the empirical target rate (floored at 1e-6).
[[nodiscard]] Coefficients initial_point(const ObjectiveContext& ctx);

[[nodiscard]] OptimResult minimize(const ObjectiveContext& ctx, const OptimSettings& settings = {});
[[nodiscard]] OptimResult minimize(const ObjectiveContext& ctx, const Coefficients& start,
                                   const OptimSettings& settings = {});

} // namespace ppfilter
