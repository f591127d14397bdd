#include "ppfilter/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ppfilter {

QuadratureRule gauss_legendre(std::size_t order) {
    if (order == 0) {
        throw std::invalid_argument("quadrature order must be positive");
    }
    QuadratureRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const auto n = static_cast<double>(order);
    for (std::size_t i = 0; i < (order + 1) / 2; ++i) {
        // Tricomi initial guess for the i-th root
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (n + 0.5));
        double derivative = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= order; ++k) {
                const double kk = static_cast<double>(k);
                const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
                p0 = p1;
                p1 = p2;
            }
            if (order == 1) p0 = 1.0;
            derivative = n * (x * p1 - p0) / (x * x - 1.0);
            const double step = p1 / derivative;
            x -= step;
            if (std::abs(step) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
        rule.nodes[i] = -x;
        rule.nodes[order - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    return rule;
}

} // namespace ppfilter
