#include "ppfilter/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace ppfilter {

namespace {

struct LinePoint {
    double alpha{0.0};
    double f{std::numeric_limits<double>::infinity()};
    double dg{0.0};  // directional derivative at alpha (finite f only)
    Eigen::VectorXd x;
    Eigen::VectorXd g;
};

struct LineSearchOutcome {
    std::optional<LinePoint> accepted;
    std::optional<LinePoint> best;  // lowest f found, if below f0
};

class LineSearch {
public:
    LineSearch(const ObjectiveFunction& f, const OptimSettings& settings, const Eigen::VectorXd& x0, double f0,
               const Eigen::VectorXd& d, double dphi0, std::size_t& evaluations)
        : f_(f), settings_(settings), x0_(x0), f0_(f0), d_(d), dphi0_(dphi0), evaluations_(evaluations) {}

    LineSearchOutcome run(double alpha_init) {
        LinePoint prev;
        prev.alpha = 0.0;
        prev.f = f0_;
        prev.dg = dphi0_;
        double alpha = alpha_init;
        for (std::size_t i = 0; budget_left(); ++i) {
            LinePoint cur = probe(alpha);
            if (indistinguishable(cur, prev)) {
                if (acceptable_flat(cur)) return done(cur);
                if (cur.dg >= 0.0) return zoom(prev, cur);
                prev = cur;
                alpha *= 2.0;
                continue;
            }
            if (!std::isfinite(cur.f) || cur.f > armijo(alpha) || (i > 0 && cur.f >= prev.f)) {
                if (acceptable_flat(cur)) return done(cur);
                return zoom(prev, cur);
            }
            if (curvature_ok(cur)) return done(cur);
            if (cur.dg >= 0.0) return zoom(cur, prev);
            prev = cur;
            alpha *= 2.0;
        }
        return {std::nullopt, best_};
    }

private:
    bool budget_left() const { return used_ < settings_.max_line_search; }
    double armijo(double alpha) const { return f0_ + settings_.c1 * alpha * dphi0_; }
    bool curvature_ok(const LinePoint& p) const { return std::abs(p.dg) <= -settings_.c2 * dphi0_; }
    // Near the optimum the sufficient-decrease test is below roundoff; a
    // non-increasing point with a small enough slope is taken instead.
    bool acceptable_flat(const LinePoint& p) const { return std::isfinite(p.f) && p.f <= f0_ && curvature_ok(p); }
    // Values this close carry no ordering information; the slope decides instead.
    bool indistinguishable(const LinePoint& a, const LinePoint& b) const {
        const double noise = 1e-12 * std::max(std::abs(f0_), 1.0);
        return std::isfinite(a.f) && std::isfinite(b.f) && std::abs(a.f - b.f) <= noise;
    }

    LineSearchOutcome done(LinePoint p) { return {std::move(p), best_}; }

    LinePoint probe(double alpha) {
        ++used_;
        ++evaluations_;
        LinePoint p;
        p.alpha = alpha;
        p.x = x0_ + alpha * d_;
        p.f = f_(p.x, &p.g);
        if (std::isfinite(p.f)) {
            if (!p.g.allFinite()) {
                throw std::runtime_error("objective returned a non-finite gradient");
            }
            p.dg = p.g.dot(d_);
            if (p.f < f0_ && (!best_ || p.f < best_->f)) best_ = p;
        } else {
            p.f = std::numeric_limits<double>::infinity();
        }
        return p;
    }

    LineSearchOutcome zoom(LinePoint lo, LinePoint hi) {
        while (budget_left()) {
            const double width = std::abs(hi.alpha - lo.alpha);
            if (width <= 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
            const double alpha = interpolate(lo, hi);
            LinePoint cur = probe(alpha);
            if (indistinguishable(cur, lo)) {
                if (acceptable_flat(cur)) return done(cur);
                if (cur.dg * (hi.alpha - lo.alpha) >= 0.0) {
                    hi = std::move(cur);
                } else {
                    lo = std::move(cur);
                }
                continue;
            }
            if (!std::isfinite(cur.f) || cur.f > armijo(alpha) || cur.f >= lo.f) {
                if (acceptable_flat(cur)) return done(cur);
                hi = std::move(cur);
            } else {
                if (curvature_ok(cur)) return done(cur);
                if (cur.dg * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                lo = std::move(cur);
            }
        }
        return {std::nullopt, best_};
    }

    // Safeguarded cubic interpolation; bisection when the upper end is infinite.
    static double interpolate(const LinePoint& lo, const LinePoint& hi) {
        const double a = lo.alpha;
        const double b = hi.alpha;
        const double left = std::min(a, b);
        const double right = std::max(a, b);
        const double margin = 0.1 * (right - left);
        double alpha = 0.5 * (a + b);
        if (std::isfinite(hi.f) && std::isfinite(lo.f)) {
            const double d1 = lo.dg + hi.dg - 3.0 * (lo.f - hi.f) / (a - b);
            const double disc = d1 * d1 - lo.dg * hi.dg;
            if (disc >= 0.0) {
                const double d2 = std::copysign(std::sqrt(disc), b - a);
                const double denom = hi.dg - lo.dg + 2.0 * d2;
                if (denom != 0.0) {
                    const double cubic = b - (b - a) * (hi.dg + d2 - d1) / denom;
                    if (std::isfinite(cubic)) alpha = cubic;
                }
            }
        }
        return std::clamp(alpha, left + margin, right - margin);
    }

    const ObjectiveFunction& f_;
    const OptimSettings& settings_;
    const Eigen::VectorXd& x0_;
    double f0_;
    const Eigen::VectorXd& d_;
    double dphi0_;
    std::size_t& evaluations_;
    std::size_t used_{0};
    std::optional<LinePoint> best_;
};

} // namespace

void OptimSettings::validate() const {
    if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) {
        throw std::invalid_argument("line search constants must satisfy 0 < c1 < c2 < 1");
    }
    if (!(grad_tol > 0.0)) {
        throw std::invalid_argument("gradient tolerance must be positive");
    }
}

MinimizeResult minimize_bfgs(const ObjectiveFunction& f, Eigen::VectorXd x0, const OptimSettings& settings) {
    settings.validate();
    MinimizeResult result;
    const Eigen::Index n = x0.size();
    Eigen::VectorXd x = std::move(x0);
    Eigen::VectorXd g;
    double fx = f(x, &g);
    result.evaluations = 1;
    if (!std::isfinite(fx)) {
        throw std::invalid_argument("objective is not finite at the initial point");
    }
    if (!g.allFinite()) {
        throw std::runtime_error("objective returned a non-finite gradient");
    }

    Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
    bool scaled = false;
    for (std::size_t iter = 0;; ++iter) {
        const double gnorm = n > 0 ? g.cwiseAbs().maxCoeff() : 0.0;
        result.trace.push_back({fx, gnorm});
        result.iterations = iter;
        if (gnorm <= settings.grad_tol) {
            result.converged = true;
            result.message = "gradient tolerance reached";
            break;
        }
        if (iter >= settings.max_iter) {
            result.message = "iteration limit reached";
            break;
        }

        Eigen::VectorXd d = -hinv * g;
        double dphi0 = g.dot(d);
        if (!(dphi0 < 0.0)) {
            hinv.setIdentity();
            scaled = false;
            d = -g;
            dphi0 = g.dot(d);
        }
        const double alpha_init = scaled ? 1.0 : std::min(1.0, 1.0 / gnorm);

        LineSearch search(f, settings, x, fx, d, dphi0, result.evaluations);
        auto outcome = search.run(alpha_init);
        if (!outcome.accepted) {
            if (outcome.best && scaled) {
                // Restart from steepest descent at the best point seen.
                x = std::move(outcome.best->x);
                fx = outcome.best->f;
                g = std::move(outcome.best->g);
                hinv.setIdentity();
                scaled = false;
                continue;
            }
            if (outcome.best) {
                x = std::move(outcome.best->x);
                fx = outcome.best->f;
                g = std::move(outcome.best->g);
            }
            result.trace.push_back({fx, g.cwiseAbs().maxCoeff()});
            result.message = "line search failed";
            break;
        }

        LinePoint& next = *outcome.accepted;
        const Eigen::VectorXd s = next.x - x;
        const Eigen::VectorXd y = next.g - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (!scaled) {
                hinv = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
                scaled = true;
            }
            const double rho = 1.0 / sy;
            const Eigen::VectorXd hy = hinv * y;
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T, expanded
            hinv.noalias() += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) -
                              rho * (hy * s.transpose() + s * hy.transpose());
        }
        x = std::move(next.x);
        fx = next.f;
        g = std::move(next.g);
    }

    result.x = std::move(x);
    result.value = fx;
    result.grad_norm = result.trace.back().grad_norm;
    return result;
}

Coefficients initial_point(const ObjectiveContext& ctx) {
    const auto& mm = *ctx.matrices;
    double total_time = 0.0;
    for (const double w : mm.weights) total_time += w;
    double rate = total_time > 0.0 ? static_cast<double>(mm.jump_rows.size()) / total_time : 0.0;
    rate = std::max(rate, 1e-6);
    Coefficients coef = Coefficients::zeros(ctx.spec->p, ctx.spec->q());
    coef.beta0 = ctx.link.inverse(rate);
    return coef;
}

OptimResult minimize(const ObjectiveContext& ctx, const Coefficients& start, const OptimSettings& settings) {
    ctx.validate();
    const ObjectiveFunction fn = [&ctx](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
        return evaluate(ctx, theta, grad);
    };
    auto res = minimize_bfgs(fn, start.pack(), settings);
    OptimResult out;
    out.coef = Coefficients::unpack(res.x);
    out.nll_value = res.value;
    out.grad_norm = res.grad_norm;
    out.iterations = res.iterations;
    out.converged = res.converged;
    out.message = std::move(res.message);
    out.trace = std::move(res.trace);
    return out;
}

OptimResult minimize(const ObjectiveContext& ctx, const OptimSettings& settings) {
    return minimize(ctx, initial_point(ctx), settings);
}

} // namespace ppfilter
