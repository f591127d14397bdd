#pragma once

#include <cstddef>
#include <vector>

namespace ppfilter {

struct QuadratureRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

/// Gauss-Legendre rule with `order` nodes (Newton iteration on P_order).
[[nodiscard]] QuadratureRule gauss_legendre(std::size_t order);

} // namespace ppfilter
