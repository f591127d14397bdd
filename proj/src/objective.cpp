#include "ppfilter/objective.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ppfilter {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> column_coefficients(const ObjectiveContext& ctx, const Coefficients& coef) {
    const auto& spec = *ctx.spec;
    const std::size_t q = spec.q();
    const std::size_t width = spec.block_width();
    std::vector<double> out(spec.p * width);
    for (std::size_t i = 0; i < spec.p; ++i) {
        const Eigen::VectorXd g = spec.forward(coef.block(i, q));
        std::copy(g.data(), g.data() + g.size(), out.begin() + static_cast<std::ptrdiff_t>(i * width));
    }
    return out;
}

// Neumaier compensated sum; keeps the objective smooth to near machine
// precision so the line search can resolve steps close to the optimum.
class CompensatedSum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_{0.0};
    double comp_{0.0};
};

// Fills xi = beta0 + design * column coefficients.
void predictor_into(const ObjectiveContext& ctx, const Coefficients& coef, std::vector<double>& xi) {
    const auto& design = ctx.design();
    xi.resize(design.rows());
    if (design.cols() > 0) {
        const auto cc = column_coefficients(ctx, coef);
        design.multiply(cc, xi);
    } else {
        std::fill(xi.begin(), xi.end(), 0.0);
    }
    for (auto& x : xi) x += coef.beta0;
}

// sum_l phi(xi_l) Delta_l - sum_{jumps} log phi(xi_l)
double unpenalized(const ObjectiveContext& ctx, const std::vector<double>& xi) {
    const auto& mm = *ctx.matrices;
    CompensatedSum total;
    for (std::size_t r = 0; r < xi.size(); ++r) {
        if (mm.weights[r] > 0.0) total.add(phi(ctx.link, xi[r]).value * mm.weights[r]);
    }
    for (const auto r : mm.jump_rows) {
        const auto lp = log_phi(ctx.link, xi[r]);
        if (!lp) return kInf;
        total.add(-*lp);
    }
    const double value = total.value();
    return std::isfinite(value) ? value : kInf;
}

} // namespace

FilterMode parse_mode(const std::string& text) {
    if (text == "direct") return FilterMode::direct;
    if (text == "basis") return FilterMode::basis;
    throw std::invalid_argument("unknown mode '" + text + "' (expected direct or basis)");
}

std::string to_string(FilterMode mode) {
    return mode == FilterMode::direct ? "direct" : "basis";
}

std::size_t FilterSpec::q() const {
    return mode == FilterMode::direct ? static_cast<std::size_t>(gram.rank()) : basis->size();
}

std::size_t FilterSpec::block_width() const {
    return mode == FilterMode::direct ? delta.bins() : basis->size();
}

Eigen::VectorXd FilterSpec::forward(const Eigen::Ref<const Eigen::VectorXd>& beta_i) const {
    if (mode == FilterMode::direct) return gram.factor * beta_i;
    return basis_gram.to_basis_coefficients(beta_i);
}

Eigen::VectorXd FilterSpec::adjoint(const Eigen::Ref<const Eigen::VectorXd>& grad_i) const {
    if (mode == FilterMode::direct) return gram.factor.transpose() * grad_i;
    return basis_gram.pull_back(grad_i);
}

Eigen::MatrixXd FilterSpec::curve_map() const {
    if (mode == FilterMode::direct) return gram.factor;
    // B V^{-T}, computed as (V^{-1} B^T)^T
    const Eigen::MatrixXd bt = basis_gram.factor.triangularView<Eigen::Lower>().solve(basis_matrix.transpose());
    return bt.transpose();
}

FilterSpec make_direct_spec(const DeltaGrid& delta, std::size_t p, const Kernel& kernel, double threshold,
                            std::size_t rank) {
    FilterSpec spec;
    spec.mode = FilterMode::direct;
    spec.p = p;
    spec.delta = delta;
    spec.kernel = kernel;
    spec.kernel.support = delta.support();
    const Eigen::MatrixXd g = gram_matrix(spec.kernel, delta.lags());
    spec.gram = rank > 0 ? spectral_factorize_rank(g, static_cast<Eigen::Index>(rank))
                         : spectral_factorize(g, threshold);
    return spec;
}

FilterSpec make_basis_spec(const DeltaGrid& delta, std::size_t p, std::size_t q, InnerProduct inner_product) {
    FilterSpec spec;
    spec.mode = FilterMode::basis;
    spec.p = p;
    spec.delta = delta;
    spec.basis = make_basis(delta.support(), q);
    spec.basis_gram = basis_gram(*spec.basis, inner_product);
    spec.basis_matrix = basis_eval_matrix(*spec.basis, delta.lags());
    return spec;
}

Coefficients Coefficients::zeros(std::size_t p, std::size_t q) {
    return {0.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p * q))};
}

Eigen::VectorXd Coefficients::pack() const {
    Eigen::VectorXd theta(beta.size() + 1);
    theta(0) = beta0;
    theta.tail(beta.size()) = beta;
    return theta;
}

Coefficients Coefficients::unpack(const Eigen::Ref<const Eigen::VectorXd>& theta) {
    return {theta(0), theta.tail(theta.size() - 1)};
}

const SparseCsr& ObjectiveContext::design() const {
    if (spec->mode == FilterMode::direct) return matrices->h;
    if (!matrices->z) {
        throw std::logic_error("basis mode requires Z matrices");
    }
    return *matrices->z;
}

void ObjectiveContext::validate() const {
    if (!matrices || !spec) {
        throw std::invalid_argument("objective context is incomplete");
    }
    if (matrices->num_inputs() != spec->p) {
        throw std::invalid_argument("channel count of model matrices and filter spec differ");
    }
    if (design().cols() != spec->p * spec->block_width()) {
        throw std::invalid_argument("design column count does not match the filter spec");
    }
    if (!(lambda >= 0.0)) {
        throw std::invalid_argument("penalty lambda must be nonnegative");
    }
}

Eigen::VectorXd linear_predictor(const ObjectiveContext& ctx, const Coefficients& coef) {
    if (static_cast<std::size_t>(coef.beta.size()) != ctx.spec->p * ctx.spec->q()) {
        throw std::invalid_argument("coefficient length does not match p * q");
    }
    std::vector<double> xi;
    predictor_into(ctx, coef, xi);
    return Eigen::Map<const Eigen::VectorXd>(xi.data(), static_cast<Eigen::Index>(xi.size()));
}

double evaluate(const ObjectiveContext& ctx, const Eigen::Ref<const Eigen::VectorXd>& theta, Eigen::VectorXd* grad) {
    const auto& spec = *ctx.spec;
    const std::size_t q = spec.q();
    if (static_cast<std::size_t>(theta.size()) != ctx.dimension()) {
        throw std::invalid_argument("parameter length does not match 1 + p * q");
    }
    const Coefficients coef = Coefficients::unpack(theta);
    const auto& mm = *ctx.matrices;
    std::vector<double> xi;
    predictor_into(ctx, coef, xi);

    const double value = unpenalized(ctx, xi) + ctx.lambda * coef.beta.squaredNorm();
    if (!std::isfinite(value)) return kInf;
    if (!grad) return value;

    std::vector<double> w(xi.size());
    for (std::size_t r = 0; r < xi.size(); ++r) {
        w[r] = mm.weights[r] > 0.0 ? phi(ctx.link, xi[r]).deriv * mm.weights[r] : 0.0;
    }
    for (const auto r : mm.jump_rows) w[r] -= phi_log_deriv(ctx.link, xi[r]);

    grad->resize(theta.size());
    CompensatedSum d0;
    for (const double v : w) d0.add(v);
    (*grad)(0) = d0.value();

    const auto& design = ctx.design();
    if (design.cols() > 0) {
        std::vector<double> colgrad(design.cols());
        design.multiply_transpose(w, colgrad);
        const std::size_t width = spec.block_width();
        for (std::size_t i = 0; i < spec.p; ++i) {
            const Eigen::Map<const Eigen::VectorXd> block(colgrad.data() + i * width, static_cast<Eigen::Index>(width));
            grad->segment(static_cast<Eigen::Index>(1 + i * q), static_cast<Eigen::Index>(q)) =
                spec.adjoint(block) + 2.0 * ctx.lambda * coef.block(i, q);
        }
    }
    return value;
}

double nll(const ObjectiveContext& ctx, const Coefficients& coef) {
    std::vector<double> xi;
    predictor_into(ctx, coef, xi);
    return unpenalized(ctx, xi);
}

double penalized_nll(const ObjectiveContext& ctx, const Coefficients& coef) {
    return evaluate(ctx, coef.pack(), nullptr);
}

Gradient gradient(const ObjectiveContext& ctx, const Coefficients& coef) {
    Eigen::VectorXd g;
    const double value = evaluate(ctx, coef.pack(), &g);
    if (!std::isfinite(value)) {
        throw std::domain_error("gradient requested where the objective is infinite");
    }
    return {g(0), g.tail(g.size() - 1)};
}

Eigen::VectorXd reconstruct_filter(const FilterSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& beta_i) {
    if (static_cast<std::size_t>(beta_i.size()) != spec.q()) {
        throw std::invalid_argument("coefficient block length does not match q");
    }
    if (spec.mode == FilterMode::direct) return spec.gram.factor * beta_i;
    return spec.basis_matrix * spec.basis_gram.to_basis_coefficients(beta_i);
}

} // namespace ppfilter
