#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ppfilter {

/// Cubic B-spline basis on [0, support] with uniform interior knots and
/// boundary knots repeated four times.
class SplineBasis {
public:
    static constexpr int kDegree = 3;
    static constexpr int kOrder = kDegree + 1;

    SplineBasis(double support, std::size_t q);

    [[nodiscard]] double support() const noexcept { return support_; }
    [[nodiscard]] std::size_t size() const noexcept { return q_; }
    [[nodiscard]] const std::vector<double>& knots() const noexcept { return knots_; }

    /// Values (and derivatives up to order 2) of the four basis functions that
    /// are nonzero on the knot span containing x. `first` is the index of the
    /// first of them; derivs[d][r] is the d-th derivative of B_{first + r}.
    struct LocalValues {
        std::size_t first{0};
        std::array<std::array<double, kOrder>, 3> derivs{};
    };
    [[nodiscard]] LocalValues local(double x, int max_deriv = 0) const;

    /// B_j^{(deriv)}(x) for a single basis function.
    [[nodiscard]] double eval(std::size_t j, double x, int deriv = 0) const;

    /// Knot span index s with knots[s] <= x < knots[s+1] (x = support maps to
    /// the last nonempty span).
    [[nodiscard]] std::size_t find_span(double x) const;

private:
    double support_;
    std::size_t q_;
    std::vector<double> knots_;
};

[[nodiscard]] SplineBasis make_basis(double support, std::size_t q);

/// N x q matrix B_j(delta_k).
[[nodiscard]] Eigen::MatrixXd basis_eval_matrix(const SplineBasis& basis, std::span<const double> lags);

enum class InnerProduct { sobolev2, second_derivative };

[[nodiscard]] InnerProduct parse_inner_product(const std::string& text);
[[nodiscard]] std::string to_string(InnerProduct ip);

/// Gram matrix <B_k, B_l> and its Cholesky factor V (lower), G = V V^T.
/// The isometric parameter is beta = V^T beta0, so beta0 = V^{-T} beta.
struct BasisGramFactor {
    InnerProduct inner_product{InnerProduct::second_derivative};
    Eigen::MatrixXd gram;    // includes the ridge, if any
    Eigen::MatrixXd factor;  // V, lower triangular
    double ridge{0.0};

    /// beta0 = V^{-T} beta (triangular solve, V^{-1} never formed).
    [[nodiscard]] Eigen::VectorXd to_basis_coefficients(const Eigen::Ref<const Eigen::VectorXd>& beta) const;
    /// beta = V^T beta0
    [[nodiscard]] Eigen::VectorXd from_basis_coefficients(const Eigen::Ref<const Eigen::VectorXd>& beta0) const;
    /// Chain rule for a gradient w.r.t. beta0: V^{-1} g.
    [[nodiscard]] Eigen::VectorXd pull_back(const Eigen::Ref<const Eigen::VectorXd>& grad_beta0) const;
};

inline constexpr std::size_t kGramQuadratureNodes = 32;
inline constexpr double kAffineRidge = 1e-8;

/// Gauss-Legendre (32 nodes per knot interval) Gram matrix. For the
/// curvature inner product the affine null space is given a ridge of
/// 1e-8 * trace / q so that V is invertible.
[[nodiscard]] BasisGramFactor basis_gram(const SplineBasis& basis,
                                         InnerProduct inner_product = InnerProduct::second_derivative);

} // namespace ppfilter
