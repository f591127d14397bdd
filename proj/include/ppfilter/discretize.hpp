#pragma once

#include "ppfilter/event_data.hpp"
#include "ppfilter/sparse_csr.hpp"
#include "ppfilter/spline_basis.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ppfilter {

/// Uniform lag grid 0 = delta_0 < ... < delta_N = A. Filters are evaluated at
/// the N left endpoints delta_0 ... delta_{N-1}.
struct DeltaGrid {
    std::vector<double> points;  // N + 1 entries

    [[nodiscard]] std::size_t bins() const noexcept { return points.size() - 1; }
    [[nodiscard]] double support() const noexcept { return points.back(); }
    [[nodiscard]] std::span<const double> lags() const noexcept { return {points.data(), bins()}; }

    /// Bin k with delta_k <= lag < delta_{k+1}; the last bin is closed at A.
    /// Returns nullopt for lag < 0 or lag > A.
    [[nodiscard]] std::optional<std::size_t> bin_of(double lag) const;
};

[[nodiscard]] DeltaGrid make_delta_grid(double support, std::size_t n_bins);

/// Lag-count matrix for one trial, (n+1) x (p N), channel-major columns:
///   H(l, i N + k) = #{ j : delta_k <= t_l - sigma_j^i < delta_{k+1}, sigma_j^i < t_l }
/// with the last bin closed so an event at exactly t_l - A lands in k = N-1.
[[nodiscard]] SparseCsr build_h(const Trial& trial, const TimeGrid& grid, const DeltaGrid& delta,
                                std::span<const std::string> channels);

/// Number of stored H entries larger than one. The grid is intended to be fine
/// enough that this is zero.
[[nodiscard]] std::size_t count_multiple_hits(const SparseCsr& h);

/// Z^i_{lj} = sum_k H(l, i N + k) B_j(delta_k), assembled as (n+1) x (p q).
[[nodiscard]] SparseCsr build_z(const SparseCsr& h, const Eigen::MatrixXd& basis_eval, std::size_t p);

/// Z^i_{lj} = sum_{t_l - A < sigma < t_l} B_j(t_l - sigma), i.e. exact rather than binned lags.
[[nodiscard]] SparseCsr build_z_direct(const Trial& trial, const TimeGrid& grid, const SplineBasis& basis,
                                       std::span<const std::string> channels);

/// Precomputed design for all trials, stacked as consecutive row groups.
struct ModelMatrices {
    std::string target;
    std::vector<std::string> inputs;
    DeltaGrid delta;
    std::vector<TimeGrid> grids;
    std::vector<std::size_t> row_offsets;  // first stacked row of each trial, plus the total
    SparseCsr h;
    std::optional<SparseCsr> z;
    std::vector<double> weights;            // Delta_l, zero on each trial's row 0
    std::vector<std::size_t> jump_rows;     // stacked rows that are target events
    std::size_t multiple_hits{0};

    [[nodiscard]] std::size_t rows() const noexcept { return weights.size(); }
    [[nodiscard]] std::size_t num_inputs() const noexcept { return inputs.size(); }
};

struct ZOptions {
    const SplineBasis* basis{nullptr};
    bool direct{false};
};

[[nodiscard]] ModelMatrices build_model_matrices(const EventData& data, const std::string& target,
                                                 const std::vector<std::string>& inputs, std::size_t base_n,
                                                 const DeltaGrid& delta, ZOptions z_options = {});

} // namespace ppfilter
