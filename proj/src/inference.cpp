#include "ppfilter/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ppfilter {

namespace {

// width x q matrix of the map beta_i -> column-space coefficients.
Eigen::MatrixXd forward_matrix(const FilterSpec& spec) {
    const auto q = static_cast<Eigen::Index>(spec.q());
    Eigen::MatrixXd out(static_cast<Eigen::Index>(spec.block_width()), q);
    for (Eigen::Index j = 0; j < q; ++j) out.col(j) = spec.forward(Eigen::VectorXd::Unit(q, j));
    return out;
}

Eigen::FullPivLU<Eigen::MatrixXd> factor_j(const Eigen::MatrixXd& j) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(j);
    if (!lu.isInvertible()) {
        throw std::runtime_error("J = K + 2 lambda P is singular");
    }
    return lu;
}

void check_square(const Eigen::MatrixXd& k) {
    if (k.rows() != k.cols() || k.rows() == 0) {
        throw std::invalid_argument("K must be a nonempty square matrix");
    }
}

} // namespace

void FitConfig::validate() const {
    if (target.empty()) throw std::invalid_argument("a target channel is required");
    if (!(support > 0.0)) throw std::invalid_argument("support A must be positive");
    if (base_n < 1) throw std::invalid_argument("base grid size must be at least 1");
    if (delta_n < 2) throw std::invalid_argument("delta grid needs at least 2 bins");
    if (mode == FilterMode::basis && q < 4) {
        throw std::invalid_argument("basis mode needs q >= 4 cubic B-splines");
    }
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
    optim.validate();
}

std::shared_ptr<const FilterSpec> make_filter_spec(const FitConfig& config) {
    const DeltaGrid delta = make_delta_grid(config.support, config.delta_n);
    const std::size_t p = config.inputs.size();
    if (config.mode == FilterMode::direct) {
        const Kernel kernel = Kernel::parse(config.kernel, config.support);
        return std::make_shared<const FilterSpec>(make_direct_spec(delta, p, kernel, config.threshold, config.q));
    }
    return std::make_shared<const FilterSpec>(make_basis_spec(delta, p, config.q, config.inner_product));
}

std::shared_ptr<const ModelMatrices> make_model_matrices(const EventData& data, const FitConfig& config,
                                                         const FilterSpec& spec, std::size_t base_n) {
    ZOptions z;
    if (spec.mode == FilterMode::basis) {
        z.basis = &*spec.basis;
        z.direct = config.z_direct;
    }
    return std::make_shared<const ModelMatrices>(build_model_matrices(
        data, config.target, config.inputs, base_n > 0 ? base_n : config.base_n, spec.delta, z));
}

ObjectiveContext make_context(const EventData& data, const FitConfig& config) {
    config.validate();
    auto spec = make_filter_spec(config);
    auto mm = make_model_matrices(data, config, *spec);
    ObjectiveContext ctx{std::move(mm), std::move(spec), config.link, config.lambda};
    ctx.validate();
    return ctx;
}

Eigen::MatrixXd working_design(const ObjectiveContext& ctx) {
    const auto& spec = *ctx.spec;
    const auto& design = ctx.design();
    const std::size_t q = spec.q();
    const std::size_t width = spec.block_width();
    const Eigen::MatrixXd fwd = forward_matrix(spec);
    const auto rows = static_cast<Eigen::Index>(design.rows());
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(ctx.dimension()));
    x.col(0).setOnes();
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto cols = design.row_cols(static_cast<std::size_t>(r));
        const auto vals = design.row_values(static_cast<std::size_t>(r));
        for (std::size_t e = 0; e < cols.size(); ++e) {
            const std::size_t i = cols[e] / width;
            const std::size_t k = cols[e] % width;
            x.row(r).segment(static_cast<Eigen::Index>(1 + i * q), static_cast<Eigen::Index>(q)) +=
                vals[e] * fwd.row(static_cast<Eigen::Index>(k));
        }
    }
    return x;
}

Eigen::MatrixXd fisher_hat(const ObjectiveContext& ctx, const Coefficients& coef) {
    ctx.validate();
    const auto& mm = *ctx.matrices;
    const Eigen::VectorXd xi = linear_predictor(ctx, coef);
    Eigen::VectorXd w(xi.size());
    for (Eigen::Index r = 0; r < xi.size(); ++r) {
        const double delta = mm.weights[static_cast<std::size_t>(r)];
        if (delta <= 0.0) {
            w(r) = 0.0;
            continue;
        }
        const PhiValue v = phi(ctx.link, xi(r));
        if (v.deriv == 0.0) {
            w(r) = 0.0;
        } else if (v.value <= 0.0) {
            std::ostringstream msg;
            msg << "intensity is zero at grid index " << r << " where phi' is not";
            throw std::domain_error(msg.str());
        } else {
            w(r) = v.deriv * v.deriv / v.value * delta;
        }
    }
    const Eigen::MatrixXd x = working_design(ctx);
    Eigen::MatrixXd k = x.transpose() * w.asDiagonal() * x;
    return 0.5 * (k + k.transpose());
}

Eigen::VectorXd penalty_pattern(Eigen::Index dimension) {
    Eigen::VectorXd p = Eigen::VectorXd::Ones(dimension);
    if (dimension > 0) p(0) = 0.0;
    return p;
}

Eigen::MatrixXd j_hat(const Eigen::MatrixXd& k_hat, double lambda) {
    check_square(k_hat);
    Eigen::MatrixXd j = k_hat;
    j.diagonal() += 2.0 * lambda * penalty_pattern(k_hat.rows());
    return j;
}

Eigen::MatrixXd sandwich_cov(const Eigen::MatrixXd& k_hat, double lambda) {
    const auto lu = factor_j(j_hat(k_hat, lambda));
    // J symmetric: J^{-1} K J^{-1} = J^{-1} (J^{-1} K)^T
    const Eigen::MatrixXd jk = lu.solve(k_hat);
    Eigen::MatrixXd s = lu.solve(Eigen::MatrixXd(jk.transpose()));
    return 0.5 * (s + s.transpose());
}

TicValue tic(double nll_at_opt, const Eigen::MatrixXd& k_hat, double lambda) {
    const auto lu = factor_j(j_hat(k_hat, lambda));
    TicValue out;
    out.nll = nll_at_opt;
    out.trace = lu.solve(k_hat).trace();
    out.tic = out.nll + out.trace;
    return out;
}

FitResult fit_model(const ObjectiveContext& ctx, const OptimSettings& settings) {
    FitResult res;
    res.optim = minimize(ctx, settings);
    res.coef = res.optim.coef;
    res.nll = nll(ctx, res.coef);
    res.penalized_nll = res.optim.nll_value;
    res.lambda = ctx.lambda;
    res.link = ctx.link;
    res.spec = ctx.spec;
    res.inputs = ctx.matrices->inputs;
    res.multiple_hits = ctx.matrices->multiple_hits;
    res.k_hat = fisher_hat(ctx, res.coef);
    res.j_hat = j_hat(res.k_hat, ctx.lambda);
    res.sandwich = sandwich_cov(res.k_hat, ctx.lambda);
    res.tic = tic(res.nll, res.k_hat, ctx.lambda);
    return res;
}

FitResult fit_model(const EventData& data, const FitConfig& config) {
    return fit_model(make_context(data, config), config.optim);
}

FilterBand filter_bands(const FilterSpec& spec, const Coefficients& coef, const Eigen::MatrixXd& sandwich,
                        std::size_t channel) {
    if (channel >= spec.p) throw std::out_of_range("filter channel index out of range");
    const auto q = static_cast<Eigen::Index>(spec.q());
    const Eigen::Index offset = 1 + static_cast<Eigen::Index>(channel) * q;
    if (sandwich.rows() < offset + q || sandwich.cols() < offset + q) {
        throw std::invalid_argument("sandwich matrix is too small for the filter spec");
    }
    const Eigen::MatrixXd m = spec.curve_map();
    const Eigen::MatrixXd sigma = sandwich.block(offset, offset, q, q);
    const Eigen::VectorXd est = m * coef.block(channel, spec.q());
    const Eigen::VectorXd var = (m * sigma).cwiseProduct(m).rowwise().sum();

    FilterBand band;
    const auto lags = spec.delta.lags();
    band.lags.assign(lags.begin(), lags.end());
    band.estimate.resize(static_cast<std::size_t>(est.size()));
    band.lower.resize(band.estimate.size());
    band.upper.resize(band.estimate.size());
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff() * m.cwiseAbs2().rowwise().sum().maxCoeff());
    for (Eigen::Index k = 0; k < est.size(); ++k) {
        double v = var(k);
        if (v < -1e-12 * scale) {
            std::ostringstream msg;
            msg << "negative band variance " << v << " at lag index " << k;
            throw std::domain_error(msg.str());
        }
        v = std::max(v, 0.0);
        const double half = kBandZ * std::sqrt(v);
        const auto u = static_cast<std::size_t>(k);
        band.estimate[u] = est(k);
        band.lower[u] = est(k) - half;
        band.upper[u] = est(k) + half;
    }
    return band;
}

FilterBand filter_bands(const FitResult& fit, std::size_t channel) {
    return filter_bands(*fit.spec, fit.coef, fit.sandwich, channel);
}

CvResult cross_validate(const EventData& data, const FitConfig& config) {
    if (data.num_trials() < 2) {
        throw std::invalid_argument("cross-validation needs at least 2 trials");
    }
    config.validate();
    const auto spec = make_filter_spec(config);
    const std::size_t validation_n = config.validation_base_n > 0 ? config.validation_base_n : config.base_n;

    CvResult out;
    double sum = 0.0;
    double train_sum = 0.0;
    for (std::size_t h = 0; h < data.num_trials(); ++h) {
        auto [train, hold] = split_replications(data, h);
        CvFold fold;
        fold.holdout = h;
        fold.trial_id = data.trials()[h].id;
        try {
            const ObjectiveContext train_ctx{make_model_matrices(train, config, *spec), spec, config.link,
                                             config.lambda};
            const OptimResult opt = minimize(train_ctx, config.optim);
            fold.converged = opt.converged;
            fold.message = opt.message;
            const ObjectiveContext hold_ctx{make_model_matrices(hold, config, *spec, validation_n), spec,
                                            config.link, config.lambda};
            fold.nll = nll(hold_ctx, opt.coef);
            if (fold.converged && std::isfinite(fold.nll)) {
                sum += fold.nll;
                train_sum += nll(train_ctx, opt.coef) / static_cast<double>(train.num_trials());
                ++out.used_folds;
            }
        } catch (const std::exception& e) {
            fold.converged = false;
            fold.nll = std::numeric_limits<double>::quiet_NaN();
            fold.message = e.what();
        }
        out.folds.push_back(std::move(fold));
    }
    if (out.used_folds > 0) {
        out.mean_nll = sum / static_cast<double>(out.used_folds);
        out.mean_train_nll = train_sum / static_cast<double>(out.used_folds);
    } else {
        out.mean_nll = std::numeric_limits<double>::quiet_NaN();
        out.mean_train_nll = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

namespace {

ScanRow scan_cell(const ObjectiveContext& ctx, double c, const OptimSettings& settings) {
    ScanRow row;
    row.c = c;
    row.lambda = ctx.lambda;
    try {
        const FitResult fit = fit_model(ctx, settings);
        row.tic = fit.tic;
        row.converged = fit.optim.converged;
        row.ok = row.converged && std::isfinite(row.tic.tic);
        row.message = fit.optim.message;
    } catch (const std::exception& e) {
        row.message = e.what();
    }
    return row;
}

std::optional<std::size_t> select_argmin(const std::vector<ScanRow>& rows) {
    std::optional<std::size_t> best;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!rows[r].ok) continue;
        if (!best) {
            best = r;
            continue;
        }
        const auto& b = rows[*best];
        if (rows[r].tic.tic < b.tic.tic || (rows[r].tic.tic == b.tic.tic && rows[r].lambda > b.lambda)) best = r;
    }
    return best;
}

} // namespace

ScanResult lambda_scan(const ObjectiveContext& base, const std::vector<double>& lambda_grid,
                       const OptimSettings& settings) {
    if (lambda_grid.empty()) throw std::invalid_argument("lambda grid is empty");
    ScanResult out;
    const double c = base.link.family == LinkFamily::log ? std::numeric_limits<double>::infinity() : base.link.c;
    for (const double lambda : lambda_grid) {
        ObjectiveContext ctx = base;
        ctx.lambda = lambda;
        out.rows.push_back(scan_cell(ctx, c, settings));
    }
    out.argmin = select_argmin(out.rows);
    return out;
}

ScanResult model_scan(const EventData& data, const FitConfig& config, const std::vector<double>& c_grid,
                      const std::vector<double>& lambda_grid) {
    if (c_grid.empty() || lambda_grid.empty()) throw std::invalid_argument("scan grid is empty");
    config.validate();
    const auto spec = make_filter_spec(config);
    const auto mm = make_model_matrices(data, config, *spec);
    ScanResult out;
    for (const double c : c_grid) {
        for (const double lambda : lambda_grid) {
            const ObjectiveContext ctx{mm, spec, LinkFunction::logaffine(c), lambda};
            out.rows.push_back(scan_cell(ctx, c, config.optim));
        }
    }
    out.argmin = select_argmin(out.rows);
    return out;
}

} // namespace ppfilter
