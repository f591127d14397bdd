#include "ppfilter/spline_basis.hpp"

#include "ppfilter/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ppfilter {

SplineBasis::SplineBasis(double support, std::size_t q) : support_(support), q_(q) {
    if (q < static_cast<std::size_t>(kOrder)) {
        throw std::invalid_argument("a cubic B-spline basis needs at least 4 functions");
    }
    if (!(support > 0.0)) {
        throw std::invalid_argument("basis support must be positive");
    }
    const std::size_t spans = q - kDegree;
    knots_.resize(q + kOrder);
    for (std::size_t i = 0; i < knots_.size(); ++i) {
        if (i <= static_cast<std::size_t>(kDegree)) {
            knots_[i] = 0.0;
        } else if (i >= q) {
            knots_[i] = support;
        } else {
            knots_[i] = support * static_cast<double>(i - kDegree) / static_cast<double>(spans);
        }
    }
}

std::size_t SplineBasis::find_span(double x) const {
    if (x < 0.0 || x > support_) {
        throw std::domain_error("B-spline evaluation point outside [0, support]");
    }
    if (x >= support_) return q_ - 1;
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    auto span = static_cast<std::size_t>(it - knots_.begin()) - 1;
    return std::clamp(span, static_cast<std::size_t>(kDegree), q_ - 1);
}

// Derivatives of the nonzero basis functions (Piegl & Tiller, A2.3).
SplineBasis::LocalValues SplineBasis::local(double x, int max_deriv) const {
    constexpr int p = kDegree;
    max_deriv = std::clamp(max_deriv, 0, 2);
    const std::size_t span = find_span(x);

    double ndu[p + 1][p + 1];
    double left[p + 1];
    double right[p + 1];
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - knots_[span + 1 - j];
        right[j] = knots_[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    LocalValues out;
    out.first = span - p;
    for (int j = 0; j <= p; ++j) out.derivs[0][j] = ndu[j][p];

    double a[2][p + 1];
    for (int r = 0; r <= p; ++r) {
        int s1 = 0;
        int s2 = 1;
        a[0][0] = 1.0;
        for (int k = 1; k <= max_deriv; ++k) {
            double d = 0.0;
            const int rk = r - k;
            const int pk = p - k;
            if (r >= k) {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
                d += a[s2][j] * ndu[rk + j][pk];
            }
            if (r <= pk) {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            out.derivs[k][r] = d;
            std::swap(s1, s2);
        }
    }
    double factor = p;
    for (int k = 1; k <= max_deriv; ++k) {
        for (int j = 0; j <= p; ++j) out.derivs[k][j] *= factor;
        factor *= p - k;
    }
    return out;
}

double SplineBasis::eval(std::size_t j, double x, int deriv) const {
    if (j >= q_) {
        throw std::out_of_range("basis function index out of range");
    }
    const auto lv = local(x, deriv);
    if (j < lv.first || j > lv.first + kDegree) return 0.0;
    return lv.derivs[static_cast<std::size_t>(deriv)][j - lv.first];
}

SplineBasis make_basis(double support, std::size_t q) {
    return SplineBasis(support, q);
}

Eigen::MatrixXd basis_eval_matrix(const SplineBasis& basis, std::span<const double> lags) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(lags.size()),
                                                static_cast<Eigen::Index>(basis.size()));
    for (std::size_t k = 0; k < lags.size(); ++k) {
        const auto lv = basis.local(lags[k]);
        for (int r = 0; r < SplineBasis::kOrder; ++r) {
            out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(lv.first + r)) = lv.derivs[0][r];
        }
    }
    return out;
}

InnerProduct parse_inner_product(const std::string& text) {
    if (text == "sobolev2") return InnerProduct::sobolev2;
    if (text == "second_derivative") return InnerProduct::second_derivative;
    throw std::invalid_argument("unknown inner product '" + text + "'");
}

std::string to_string(InnerProduct ip) {
    return ip == InnerProduct::sobolev2 ? "sobolev2" : "second_derivative";
}

Eigen::VectorXd BasisGramFactor::to_basis_coefficients(const Eigen::Ref<const Eigen::VectorXd>& beta) const {
    return factor.transpose().triangularView<Eigen::Upper>().solve(beta);
}

Eigen::VectorXd BasisGramFactor::from_basis_coefficients(const Eigen::Ref<const Eigen::VectorXd>& beta0) const {
    return factor.transpose() * beta0;
}

Eigen::VectorXd BasisGramFactor::pull_back(const Eigen::Ref<const Eigen::VectorXd>& grad_beta0) const {
    return factor.triangularView<Eigen::Lower>().solve(grad_beta0);
}

BasisGramFactor basis_gram(const SplineBasis& basis, InnerProduct inner_product) {
    const auto q = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(q, q);
    const auto rule = gauss_legendre(kGramQuadratureNodes);
    const auto& knots = basis.knots();

    for (std::size_t s = SplineBasis::kDegree; s + 1 < knots.size(); ++s) {
        const double a = knots[s];
        const double b = knots[s + 1];
        if (!(b > a)) continue;
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        for (std::size_t m = 0; m < rule.nodes.size(); ++m) {
            const double x = mid + half * rule.nodes[m];
            const double w = half * rule.weights[m];
            const auto lv = basis.local(x, 2);
            for (int r = 0; r < SplineBasis::kOrder; ++r) {
                for (int c = 0; c < SplineBasis::kOrder; ++c) {
                    gram(static_cast<Eigen::Index>(lv.first + r), static_cast<Eigen::Index>(lv.first + c)) +=
                        w * lv.derivs[2][r] * lv.derivs[2][c];
                }
            }
        }
    }

    BasisGramFactor out;
    out.inner_product = inner_product;
    if (inner_product == InnerProduct::sobolev2) {
        const auto lv = basis.local(0.0, 1);
        for (int r = 0; r < SplineBasis::kOrder; ++r) {
            for (int c = 0; c < SplineBasis::kOrder; ++c) {
                gram(static_cast<Eigen::Index>(lv.first + r), static_cast<Eigen::Index>(lv.first + c)) +=
                    lv.derivs[0][r] * lv.derivs[0][c] + lv.derivs[1][r] * lv.derivs[1][c];
            }
        }
    }
    // exact symmetry
    gram = 0.5 * (gram + gram.transpose()).eval();
    if (!gram.allFinite()) {
        throw std::runtime_error("basis Gram quadrature produced non-finite values");
    }
    if (inner_product == InnerProduct::second_derivative) {
        out.ridge = kAffineRidge * gram.trace() / static_cast<double>(q);
        gram.diagonal().array() += out.ridge;
    }

    double jitter = 0.0;
    for (int attempt = 0; attempt <= 3; ++attempt) {
        Eigen::MatrixXd shifted = gram;
        shifted.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(shifted);
        if (llt.info() == Eigen::Success) {
            out.gram = std::move(shifted);
            out.factor = llt.matrixL();
            out.ridge += jitter;
            return out;
        }
        jitter = jitter > 0.0 ? jitter * 10.0 : 1e-12 * gram.trace() / static_cast<double>(q);
    }
    throw std::runtime_error("basis Gram matrix is not positive definite");
}

} // namespace ppfilter
