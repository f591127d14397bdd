#include "ppfilter/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ppfilter {

namespace {

void require_symmetric(const Eigen::MatrixXd& g) {
    if (g.rows() != g.cols()) {
        throw std::invalid_argument("Gram matrix must be square");
    }
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw std::invalid_argument("Gram matrix is not symmetric");
    }
}

GramFactor from_eigenpairs(const Eigen::MatrixXd& gram, const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& eig,
                           Eigen::Index keep, double threshold) {
    const Eigen::Index n = gram.rows();
    GramFactor out;
    out.method = FactorMethod::spectral;
    out.gram = gram;
    out.threshold = threshold;
    out.factor.resize(n, keep);
    out.eigenvalues.resize(keep);
    // Eigen returns ascending eigenvalues; columns of U are ordered descending.
    for (Eigen::Index j = 0; j < keep; ++j) {
        const Eigen::Index src = n - 1 - j;
        const double lambda = eig.eigenvalues()(src);
        out.eigenvalues(j) = lambda;
        out.factor.col(j) = eig.eigenvectors().col(src) * std::sqrt(lambda);
    }
    return out;
}

} // namespace

Kernel Kernel::parse(const std::string& text, double support) {
    if (text == "sobolev2") return sobolev2(support);
    if (text.rfind("gaussian:", 0) == 0) {
        const double bw = std::stod(text.substr(9));
        if (!(bw > 0.0)) throw std::invalid_argument("gaussian bandwidth must be positive");
        return gaussian(support, bw);
    }
    throw std::invalid_argument("unknown kernel '" + text + "' (expected sobolev2 or gaussian:<bandwidth>)");
}

std::string Kernel::describe() const {
    return family == KernelFamily::sobolev2 ? "sobolev2" : "gaussian:" + std::to_string(bandwidth);
}

double kernel_eval(const Kernel& k, double s, double u) {
    if (s < 0.0 || u < 0.0 || s > k.support || u > k.support) {
        throw std::domain_error("kernel lag outside [0, support]");
    }
    switch (k.family) {
    case KernelFamily::sobolev2: {
        const double m = std::min(s, u);
        return 1.0 + s * u + s * u * m - (s + u) * m * m / 2.0 + m * m * m / 3.0;
    }
    case KernelFamily::gaussian: {
        const double d = s - u;
        return std::exp(-d * d / (2.0 * k.bandwidth * k.bandwidth));
    }
    }
    return 0.0;
}

Eigen::MatrixXd gram_matrix(const Kernel& k, std::span<const double> lags) {
    const auto n = static_cast<Eigen::Index>(lags.size());
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = kernel_eval(k, lags[i], lags[j]);
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

GramFactor spectral_factorize(const Eigen::MatrixXd& gram, double threshold) {
    require_symmetric(gram);
    if (!(threshold > 0.0)) {
        throw std::invalid_argument("spectral threshold must be positive");
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) {
        throw std::runtime_error("symmetric eigendecomposition failed");
    }
    const Eigen::Index n = gram.rows();
    const double lambda_max = eig.eigenvalues()(n - 1);
    if (!(lambda_max > 0.0)) {
        throw std::runtime_error("Gram matrix has no positive eigenvalue");
    }
    Eigen::Index keep = 0;
    while (keep < n && eig.eigenvalues()(n - 1 - keep) >= threshold * lambda_max) ++keep;
    return from_eigenpairs(gram, eig, keep, threshold);
}

GramFactor spectral_factorize_rank(const Eigen::MatrixXd& gram, Eigen::Index rank) {
    require_symmetric(gram);
    const Eigen::Index n = gram.rows();
    if (rank < 1 || rank > n) {
        throw std::invalid_argument("requested rank outside [1, N]");
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) {
        throw std::runtime_error("symmetric eigendecomposition failed");
    }
    const double lambda_max = eig.eigenvalues()(n - 1);
    const double lambda_last = eig.eigenvalues()(n - rank);
    if (!(lambda_last > 0.0)) {
        throw std::runtime_error("requested rank exceeds the number of positive eigenvalues");
    }
    return from_eigenpairs(gram, eig, rank, lambda_last / lambda_max);
}

GramFactor cholesky_factorize(const Eigen::MatrixXd& gram, double jitter) {
    require_symmetric(gram);
    const Eigen::Index n = gram.rows();
    if (jitter < 0.0) {
        throw std::invalid_argument("jitter must be nonnegative");
    }
    double current = jitter;
    for (int attempt = 0; attempt <= 3; ++attempt) {
        Eigen::MatrixXd shifted = gram;
        shifted.diagonal().array() += current;
        Eigen::LLT<Eigen::MatrixXd> llt(shifted);
        if (llt.info() == Eigen::Success) {
            GramFactor out;
            out.method = FactorMethod::cholesky;
            out.gram = gram;
            out.factor = llt.matrixL();
            out.threshold = current;
            return out;
        }
        current = current > 0.0 ? current * 10.0 : 1e-12 * std::max(gram.trace() / static_cast<double>(n), 1.0);
    }
    throw std::runtime_error("Cholesky factorization failed after jitter escalation");
}

} // namespace ppfilter
