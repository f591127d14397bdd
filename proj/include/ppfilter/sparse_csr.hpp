#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ppfilter {

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

struct MemoryFootprint {
    std::size_t sparse_bytes{0};
    std::size_t dense_bytes{0};
};

/// Compressed sparse row matrix. Column indices are strictly increasing within
/// each row, so products accumulate in a fixed order and are bitwise
/// reproducible.
class SparseCsr {
public:
    using Index = std::uint32_t;

    SparseCsr() : row_ptr_(1, 0) {}
    SparseCsr(std::size_t nrows, std::size_t ncols);

    /// Duplicate coordinates are summed, exact zeros dropped.
    [[nodiscard]] static SparseCsr from_triplets(std::size_t nrows, std::size_t ncols,
                                                 std::vector<Triplet> entries);

    /// Takes ownership of raw arrays after checking every structural invariant.
    [[nodiscard]] static SparseCsr from_arrays(std::size_t nrows, std::size_t ncols,
                                               std::vector<std::size_t> row_ptr,
                                               std::vector<Index> col_idx,
                                               std::vector<double> values);

    [[nodiscard]] std::size_t rows() const noexcept { return nrows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return ncols_; }
    [[nodiscard]] std::size_t nnz() const noexcept { return values_.size(); }

    [[nodiscard]] std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
    [[nodiscard]] std::span<const Index> col_idx() const noexcept { return col_idx_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

    [[nodiscard]] std::span<const Index> row_cols(std::size_t r) const noexcept {
        return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }
    [[nodiscard]] std::span<const double> row_values(std::size_t r) const noexcept {
        return {values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }

    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const;
    /// x = A^T y
    void multiply_transpose(std::span<const double> y, std::span<double> x) const;

    [[nodiscard]] double coeff(std::size_t r, std::size_t c) const;
    [[nodiscard]] std::vector<double> to_dense_row_major() const;

    /// Appends rows of `other` below this matrix (column counts must agree).
    void append_rows(const SparseCsr& other);

    void save_binary(const std::filesystem::path& path) const;
    [[nodiscard]] static SparseCsr load_binary(const std::filesystem::path& path);

    friend bool operator==(const SparseCsr&, const SparseCsr&) = default;

private:
    std::size_t nrows_{0};
    std::size_t ncols_{0};
    std::vector<std::size_t> row_ptr_;
    std::vector<Index> col_idx_;
    std::vector<double> values_;
};

/// Incremental row-by-row builder; entries within a row may arrive in any order.
class CsrRowBuilder {
public:
    CsrRowBuilder(std::size_t ncols, std::size_t expected_rows = 0);

    void add(std::size_t col, double value);
    void finish_row();
    [[nodiscard]] SparseCsr build();

private:
    std::size_t ncols_;
    std::vector<std::size_t> row_ptr_;
    std::vector<SparseCsr::Index> col_idx_;
    std::vector<double> values_;
    std::vector<std::pair<SparseCsr::Index, double>> pending_;
};

[[nodiscard]] SparseCsr from_triplets(std::size_t nrows, std::size_t ncols, std::vector<Triplet> entries);
[[nodiscard]] std::vector<double> spmv(const SparseCsr& a, std::span<const double> x);
[[nodiscard]] std::vector<double> spmv_t(const SparseCsr& a, std::span<const double> y);

/// Exact bytes of the three CSR arrays plus the dimension fields, and the
/// 8-byte-per-entry size of the dense equivalent.
[[nodiscard]] MemoryFootprint memory_footprint(const SparseCsr& a);

} // namespace ppfilter
