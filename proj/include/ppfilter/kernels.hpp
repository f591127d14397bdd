#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>

namespace ppfilter {

enum class KernelFamily { sobolev2, gaussian };

/// Reproducing kernel on [0, support].
///
/// `sobolev2` is the kernel of the cubic-spline Sobolev space with inner
/// product f(0)g(0) + f'(0)g'(0) + \int_0^A f''g'':
///   R(s,u) = 1 + su + su m - (s+u) m^2/2 + m^3/3,   m = min(s,u).
/// `gaussian` is exp(-(s-u)^2 / (2 bandwidth^2)).
struct Kernel {
    KernelFamily family{KernelFamily::sobolev2};
    double support{1.0};
    double bandwidth{1.0};

    [[nodiscard]] static Kernel sobolev2(double support) { return {KernelFamily::sobolev2, support, 1.0}; }
    [[nodiscard]] static Kernel gaussian(double support, double bandwidth) {
        return {KernelFamily::gaussian, support, bandwidth};
    }

    /// Parses `sobolev2` or `gaussian:<bandwidth>`.
    [[nodiscard]] static Kernel parse(const std::string& text, double support);
    [[nodiscard]] std::string describe() const;
};

[[nodiscard]] double kernel_eval(const Kernel& k, double s, double u);

/// N x N matrix R(delta_k, delta_l) over the given lag points.
[[nodiscard]] Eigen::MatrixXd gram_matrix(const Kernel& k, std::span<const double> lags);

enum class FactorMethod { spectral, cholesky };

/// G ~ U U^T with U of size N x q.
struct GramFactor {
    FactorMethod method{FactorMethod::spectral};
    Eigen::MatrixXd gram;
    Eigen::MatrixXd factor;
    Eigen::VectorXd eigenvalues;  // retained eigenvalues (spectral only), descending
    double threshold{0.0};        // relative cutoff (spectral) or applied jitter (cholesky)

    [[nodiscard]] Eigen::Index rank() const noexcept { return factor.cols(); }
};

inline constexpr double kDefaultSpectralThreshold = 1e-8;

/// Keeps eigenpairs with lambda_j >= threshold * lambda_max; U = Q diag(sqrt(lambda)).
[[nodiscard]] GramFactor spectral_factorize(const Eigen::MatrixXd& gram,
                                            double threshold = kDefaultSpectralThreshold);

/// Keeps exactly the `rank` leading eigenpairs; the recorded threshold is the
/// smallest retained eigenvalue relative to the largest.
[[nodiscard]] GramFactor spectral_factorize_rank(const Eigen::MatrixXd& gram, Eigen::Index rank);

/// Lower-triangular U with U U^T = G + jitter I. The jitter is multiplied by
/// ten up to three times if the factorization breaks down.
[[nodiscard]] GramFactor cholesky_factorize(const Eigen::MatrixXd& gram, double jitter = 0.0);

} // namespace ppfilter
