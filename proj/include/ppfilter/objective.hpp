#pragma once

#include "ppfilter/discretize.hpp"
#include "ppfilter/kernels.hpp"
#include "ppfilter/link.hpp"
#include "ppfilter/spline_basis.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

namespace ppfilter {

enum class FilterMode { direct, basis };

[[nodiscard]] FilterMode parse_mode(const std::string& text);
[[nodiscard]] std::string to_string(FilterMode mode);

/// Parametrization of the p filter functions. Both modes use an isometric
/// parameter beta_i in R^q:
///   direct: evaluations g_i = U beta_i on the delta grid, G = U U^T
///   basis:  g_i = sum_j beta0_ij B_j with beta0_i = V^{-T} beta_i, G = V V^T
struct FilterSpec {
    FilterMode mode{FilterMode::direct};
    std::size_t p{0};
    DeltaGrid delta;

    Kernel kernel;                           // direct
    GramFactor gram;                         // direct
    std::optional<SplineBasis> basis;        // basis
    BasisGramFactor basis_gram;              // basis
    Eigen::MatrixXd basis_matrix;            // basis: B_j(delta_k), N x q

    [[nodiscard]] std::size_t q() const;
    [[nodiscard]] double support() const noexcept { return delta.support(); }
    /// Columns per channel block of the design matrix (N for H, q for Z).
    [[nodiscard]] std::size_t block_width() const;

    /// beta_i -> column-space coefficients (U beta_i, or V^{-T} beta_i).
    [[nodiscard]] Eigen::VectorXd forward(const Eigen::Ref<const Eigen::VectorXd>& beta_i) const;
    /// Adjoint of forward, applied to a column-space gradient block.
    [[nodiscard]] Eigen::VectorXd adjoint(const Eigen::Ref<const Eigen::VectorXd>& grad_i) const;
    /// N x q linear map from beta_i to the filter values at the delta lags.
    [[nodiscard]] Eigen::MatrixXd curve_map() const;
};

/// Direct approximation. With `rank` > 0 the leading `rank` eigenpairs are
/// kept, otherwise those above `threshold` relative to the largest.
[[nodiscard]] FilterSpec make_direct_spec(const DeltaGrid& delta, std::size_t p, const Kernel& kernel,
                                          double threshold = kDefaultSpectralThreshold, std::size_t rank = 0);

[[nodiscard]] FilterSpec make_basis_spec(const DeltaGrid& delta, std::size_t p, std::size_t q,
                                         InnerProduct inner_product = InnerProduct::second_derivative);

/// Baseline plus p blocks of length q.
struct Coefficients {
    double beta0{0.0};
    Eigen::VectorXd beta;

    [[nodiscard]] static Coefficients zeros(std::size_t p, std::size_t q);
    [[nodiscard]] auto block(std::size_t i, std::size_t q) const {
        return beta.segment(static_cast<Eigen::Index>(i * q), static_cast<Eigen::Index>(q));
    }
    [[nodiscard]] Eigen::VectorXd pack() const;
    [[nodiscard]] static Coefficients unpack(const Eigen::Ref<const Eigen::VectorXd>& theta);
};

struct ObjectiveContext {
    std::shared_ptr<const ModelMatrices> matrices;
    std::shared_ptr<const FilterSpec> spec;
    LinkFunction link;
    double lambda{0.0};

    [[nodiscard]] const SparseCsr& design() const;
    [[nodiscard]] std::size_t dimension() const { return 1 + spec->p * spec->q(); }
    void validate() const;
};

[[nodiscard]] Eigen::VectorXd linear_predictor(const ObjectiveContext& ctx, const Coefficients& coef);

/// Right-Riemann discretized negative log-likelihood summed over trials;
/// +inf when the intensity at a target event is not positive.
[[nodiscard]] double nll(const ObjectiveContext& ctx, const Coefficients& coef);

[[nodiscard]] double penalized_nll(const ObjectiveContext& ctx, const Coefficients& coef);

struct Gradient {
    double d_beta0{0.0};
    Eigen::VectorXd d_beta;
};

/// Gradient of penalized_nll; throws if the objective is infinite at coef.
[[nodiscard]] Gradient gradient(const ObjectiveContext& ctx, const Coefficients& coef);

/// Penalized objective and (optionally) its gradient in the packed
/// [beta0, beta] layout, sharing one pass over the design.
[[nodiscard]] double evaluate(const ObjectiveContext& ctx, const Eigen::Ref<const Eigen::VectorXd>& theta,
                              Eigen::VectorXd* grad);

/// Filter values at the delta lags for one coefficient block.
[[nodiscard]] Eigen::VectorXd reconstruct_filter(const FilterSpec& spec,
                                                 const Eigen::Ref<const Eigen::VectorXd>& beta_i);

} // namespace ppfilter
