#include "ppfilter/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ppfilter {

std::optional<std::size_t> DeltaGrid::bin_of(double lag) const {
    const std::size_t n = bins();
    if (lag < 0.0 || lag > points[n]) return std::nullopt;
    const double spacing = points[n] / static_cast<double>(n);
    auto k = static_cast<std::size_t>(std::min(std::floor(lag / spacing), static_cast<double>(n - 1)));
    while (k + 1 < n && lag >= points[k + 1]) ++k;
    while (k > 0 && lag < points[k]) --k;
    return k;
}

DeltaGrid make_delta_grid(double support, std::size_t n_bins) {
    if (n_bins < 2) {
        throw std::invalid_argument("delta grid needs at least 2 bins");
    }
    if (!(support > 0.0)) {
        throw std::invalid_argument("support must be positive");
    }
    DeltaGrid grid;
    grid.points.resize(n_bins + 1);
    for (std::size_t k = 0; k < n_bins; ++k) {
        grid.points[k] = support * static_cast<double>(k) / static_cast<double>(n_bins);
    }
    grid.points[n_bins] = support;
    return grid;
}

SparseCsr build_h(const Trial& trial, const TimeGrid& grid, const DeltaGrid& delta,
                  std::span<const std::string> channels) {
    const std::size_t n_bins = delta.bins();
    const double support = delta.support();
    const std::size_t p = channels.size();

    std::vector<const std::vector<double>*> events(p);
    for (std::size_t i = 0; i < p; ++i) events[i] = &trial.channel(channels[i]);
    std::vector<std::size_t> lo(p, 0);
    std::vector<std::size_t> hi(p, 0);

    CsrRowBuilder builder(p * n_bins, grid.points.size());
    for (const double t : grid.points) {
        for (std::size_t i = 0; i < p; ++i) {
            const auto& sigma = *events[i];
            while (hi[i] < sigma.size() && sigma[hi[i]] < t) ++hi[i];
            while (lo[i] < hi[i] && t - sigma[lo[i]] > support) ++lo[i];
            for (std::size_t j = lo[i]; j < hi[i]; ++j) {
                const auto k = delta.bin_of(t - sigma[j]);
                if (k) builder.add(i * n_bins + *k, 1.0);
            }
        }
        builder.finish_row();
    }
    return builder.build();
}

std::size_t count_multiple_hits(const SparseCsr& h) {
    const auto v = h.values();
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double x) { return x > 1.0; }));
}

SparseCsr build_z(const SparseCsr& h, const Eigen::MatrixXd& basis_eval, std::size_t p) {
    const auto n_bins = static_cast<std::size_t>(basis_eval.rows());
    const auto q = static_cast<std::size_t>(basis_eval.cols());
    if (h.cols() != p * n_bins) {
        throw std::invalid_argument("build_z: H has " + std::to_string(h.cols()) + " columns, expected " +
                                    std::to_string(p * n_bins));
    }
    // nonzero pattern of each basis row
    std::vector<std::vector<std::pair<std::size_t, double>>> row_nz(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        for (std::size_t j = 0; j < q; ++j) {
            const double b = basis_eval(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
            if (b != 0.0) row_nz[k].emplace_back(j, b);
        }
    }
    CsrRowBuilder builder(p * q, h.rows());
    for (std::size_t l = 0; l < h.rows(); ++l) {
        const auto cols = h.row_cols(l);
        const auto vals = h.row_values(l);
        for (std::size_t e = 0; e < cols.size(); ++e) {
            const std::size_t i = cols[e] / n_bins;
            const std::size_t k = cols[e] % n_bins;
            for (const auto& [j, b] : row_nz[k]) builder.add(i * q + j, vals[e] * b);
        }
        builder.finish_row();
    }
    return builder.build();
}

SparseCsr build_z_direct(const Trial& trial, const TimeGrid& grid, const SplineBasis& basis,
                         std::span<const std::string> channels) {
    const std::size_t p = channels.size();
    const std::size_t q = basis.size();
    const double support = basis.support();
    std::vector<const std::vector<double>*> events(p);
    for (std::size_t i = 0; i < p; ++i) events[i] = &trial.channel(channels[i]);
    std::vector<std::size_t> lo(p, 0);
    std::vector<std::size_t> hi(p, 0);

    CsrRowBuilder builder(p * q, grid.points.size());
    for (const double t : grid.points) {
        for (std::size_t i = 0; i < p; ++i) {
            const auto& sigma = *events[i];
            while (hi[i] < sigma.size() && sigma[hi[i]] < t) ++hi[i];
            while (lo[i] < hi[i] && t - sigma[lo[i]] >= support) ++lo[i];
            for (std::size_t j = lo[i]; j < hi[i]; ++j) {
                const auto lv = basis.local(t - sigma[j]);
                for (int r = 0; r < SplineBasis::kOrder; ++r) {
                    builder.add(i * q + lv.first + static_cast<std::size_t>(r), lv.derivs[0][r]);
                }
            }
        }
        builder.finish_row();
    }
    return builder.build();
}

ModelMatrices build_model_matrices(const EventData& data, const std::string& target,
                                   const std::vector<std::string>& inputs, std::size_t base_n,
                                   const DeltaGrid& delta, ZOptions z_options) {
    if (!data.has_channel(target)) {
        throw DataError("target channel '" + target + "' not present in data");
    }
    for (const auto& name : inputs) {
        if (!data.has_channel(name)) {
            throw DataError("input channel '" + name + "' not present in data");
        }
    }
    if (z_options.basis && std::abs(z_options.basis->support() - delta.support()) > 0.0) {
        throw std::invalid_argument("basis support differs from delta grid support");
    }

    ModelMatrices out;
    out.target = target;
    out.inputs = inputs;
    out.delta = delta;
    out.h = SparseCsr(0, inputs.size() * delta.bins());
    std::optional<Eigen::MatrixXd> basis_eval;
    if (z_options.basis) {
        out.z = SparseCsr(0, inputs.size() * z_options.basis->size());
        if (!z_options.direct) basis_eval = basis_eval_matrix(*z_options.basis, delta.lags());
    }

    for (const auto& trial : data.trials()) {
        auto grid = make_time_grid(trial, target, base_n);
        const std::size_t offset = out.weights.size();
        out.row_offsets.push_back(offset);
        auto h = build_h(trial, grid, delta, inputs);
        if (z_options.basis) {
            out.z->append_rows(z_options.direct ? build_z_direct(trial, grid, *z_options.basis, inputs)
                                                : build_z(h, *basis_eval, inputs.size()));
        }
        out.h.append_rows(h);
        out.weights.insert(out.weights.end(), grid.deltas.begin(), grid.deltas.end());
        for (const auto l : grid.jump_indices) out.jump_rows.push_back(offset + l);
        out.grids.push_back(std::move(grid));
    }
    out.row_offsets.push_back(out.weights.size());
    out.multiple_hits = count_multiple_hits(out.h);
    return out;
}

} // namespace ppfilter
