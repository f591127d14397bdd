#pragma once

#include "ppfilter/event_data.hpp"
#include "ppfilter/objective.hpp"
#include "ppfilter/optimizer.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ppfilter {

/// Everything needed to go from event data to a fitted model.
struct FitConfig {
    std::string target;
    std::vector<std::string> inputs;
    double support{0.4};
    std::size_t base_n{1000};
    std::size_t validation_base_n{0};  // 0: use base_n
    std::size_t delta_n{100};
    FilterMode mode{FilterMode::direct};
    std::size_t q{0};                  // basis size; for direct mode a target rank (0: threshold)
    double threshold{kDefaultSpectralThreshold};
    std::string kernel{"sobolev2"};
    InnerProduct inner_product{InnerProduct::second_derivative};
    bool z_direct{false};
    LinkFunction link{LinkFunction::log()};
    double lambda{0.0};
    OptimSettings optim{};

    void validate() const;
};

[[nodiscard]] std::shared_ptr<const FilterSpec> make_filter_spec(const FitConfig& config);
[[nodiscard]] std::shared_ptr<const ModelMatrices> make_model_matrices(const EventData& data, const FitConfig& config,
                                                                       const FilterSpec& spec,
                                                                       std::size_t base_n = 0);
[[nodiscard]] ObjectiveContext make_context(const EventData& data, const FitConfig& config);

/// Rows x_l of the working design, [1, blocks mapped through U or V^{-T}],
/// so that xi_l = x_l^T theta.
[[nodiscard]] Eigen::MatrixXd working_design(const ObjectiveContext& ctx);

/// K = sum_l x_l x_l^T phi'(xi_l)^2 / phi(xi_l) Delta_l.
[[nodiscard]] Eigen::MatrixXd fisher_hat(const ObjectiveContext& ctx, const Coefficients& coef);

/// Diagonal of P: 0 for the baseline, 1 for filter coefficients.
[[nodiscard]] Eigen::VectorXd penalty_pattern(Eigen::Index dimension);

/// J = K + 2 lambda P.
[[nodiscard]] Eigen::MatrixXd j_hat(const Eigen::MatrixXd& k_hat, double lambda);

/// J^{-1} K J^{-1} via linear solves.
[[nodiscard]] Eigen::MatrixXd sandwich_cov(const Eigen::MatrixXd& k_hat, double lambda);

struct TicValue {
    double nll{0.0};
    double trace{0.0};  // tr(J^{-1} K)
    double tic{0.0};
};

[[nodiscard]] TicValue tic(double nll_at_opt, const Eigen::MatrixXd& k_hat, double lambda);

struct FitResult {
    Coefficients coef;
    double nll{0.0};            // unpenalized, at coef
    double penalized_nll{0.0};
    Eigen::MatrixXd k_hat;
    Eigen::MatrixXd j_hat;
    Eigen::MatrixXd sandwich;
    TicValue tic;
    double lambda{0.0};
    LinkFunction link;
    OptimResult optim;
    std::shared_ptr<const FilterSpec> spec;
    std::vector<std::string> inputs;
    std::size_t multiple_hits{0};
};

/// Minimizes the penalized objective and computes K, J, the sandwich and TIC.
[[nodiscard]] FitResult fit_model(const ObjectiveContext& ctx, const OptimSettings& settings = {});
[[nodiscard]] FitResult fit_model(const EventData& data, const FitConfig& config);

struct FilterBand {
    std::vector<double> lags;
    std::vector<double> estimate;
    std::vector<double> lower;
    std::vector<double> upper;
};

inline constexpr double kBandZ = 1.96;

/// Pointwise 95% bands for filter i from the sandwich block of beta_i.
[[nodiscard]] FilterBand filter_bands(const FitResult& fit, std::size_t channel);
[[nodiscard]] FilterBand filter_bands(const FilterSpec& spec, const Coefficients& coef,
                                      const Eigen::MatrixXd& sandwich, std::size_t channel);

struct CvFold {
    std::size_t holdout{0};
    int trial_id{0};
    double nll{0.0};
    bool converged{false};
    std::string message;
};

struct CvResult {
    std::vector<CvFold> folds;
    double mean_nll{0.0};       // over converged folds
    std::size_t used_folds{0};
    double mean_train_nll{0.0}; // training nll per trial, averaged over converged folds
};

/// Leave-one-trial-out cross-validation; each held-out trial is scored with the
/// unpenalized nll on the validation grid.
[[nodiscard]] CvResult cross_validate(const EventData& data, const FitConfig& config);

struct ScanRow {
    double c{0.0};
    double lambda{0.0};
    TicValue tic;
    bool converged{false};
    bool ok{false};
    std::string message;
};

struct ScanResult {
    std::vector<ScanRow> rows;
    std::optional<std::size_t> argmin;  // empty when every cell failed
};

/// TIC over a (c, lambda) grid with the logaffine family (c = inf gives the
/// log link). Ties go to the larger lambda.
[[nodiscard]] ScanResult model_scan(const EventData& data, const FitConfig& config, const std::vector<double>& c_grid,
                                    const std::vector<double>& lambda_grid);

/// TIC scan over lambda with the configured link; returns the rows and argmin.
[[nodiscard]] ScanResult lambda_scan(const ObjectiveContext& base, const std::vector<double>& lambda_grid,
                                     const OptimSettings& settings = {});

} // namespace ppfilter
