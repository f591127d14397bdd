#include "ppfilter/sparse_csr.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

namespace ppfilter {

namespace {

constexpr std::array<char, 4> kMagic{'P', 'P', 'H', '1'};

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    out.write(bytes.data(), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    std::array<char, sizeof(T)> bytes;
    if (!in.read(bytes.data(), sizeof(T))) {
        throw std::runtime_error("truncated sparse matrix file");
    }
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

void check_index_width(std::size_t ncols) {
    if (ncols > std::numeric_limits<SparseCsr::Index>::max()) {
        throw std::length_error("column count exceeds 32-bit index range");
    }
}

} // namespace

SparseCsr::SparseCsr(std::size_t nrows, std::size_t ncols)
    : nrows_(nrows), ncols_(ncols), row_ptr_(nrows + 1, 0) {
    check_index_width(ncols);
}

SparseCsr SparseCsr::from_triplets(std::size_t nrows, std::size_t ncols, std::vector<Triplet> entries) {
    check_index_width(ncols);
    for (const auto& e : entries) {
        if (e.row >= nrows || e.col >= ncols) {
            throw std::out_of_range("triplet (" + std::to_string(e.row) + ", " + std::to_string(e.col) +
                                    ") outside " + std::to_string(nrows) + " x " + std::to_string(ncols));
        }
    }
    // Sorting by value as the last key makes the duplicate sum independent of
    // the input order.
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        if (a.row != b.row) return a.row < b.row;
        if (a.col != b.col) return a.col < b.col;
        return a.value < b.value;
    });

    SparseCsr out(nrows, ncols);
    std::size_t k = 0;
    for (std::size_t r = 0; r < nrows; ++r) {
        while (k < entries.size() && entries[k].row == r) {
            const std::size_t c = entries[k].col;
            double sum = 0.0;
            while (k < entries.size() && entries[k].row == r && entries[k].col == c) {
                sum += entries[k].value;
                ++k;
            }
            if (sum != 0.0) {
                out.col_idx_.push_back(static_cast<Index>(c));
                out.values_.push_back(sum);
            }
        }
        out.row_ptr_[r + 1] = out.values_.size();
    }
    return out;
}

SparseCsr SparseCsr::from_arrays(std::size_t nrows, std::size_t ncols, std::vector<std::size_t> row_ptr,
                                 std::vector<Index> col_idx, std::vector<double> values) {
    check_index_width(ncols);
    if (row_ptr.size() != nrows + 1 || row_ptr.front() != 0 || row_ptr.back() != values.size() ||
        col_idx.size() != values.size()) {
        throw std::invalid_argument("inconsistent CSR array sizes");
    }
    for (std::size_t r = 0; r < nrows; ++r) {
        if (row_ptr[r + 1] < row_ptr[r]) {
            throw std::invalid_argument("CSR row_ptr must be nondecreasing");
        }
        for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
            if (col_idx[k] >= ncols) {
                throw std::invalid_argument("CSR column index out of range");
            }
            if (k > row_ptr[r] && col_idx[k] <= col_idx[k - 1]) {
                throw std::invalid_argument("CSR column indices must increase within a row");
            }
        }
    }
    SparseCsr out;
    out.nrows_ = nrows;
    out.ncols_ = ncols;
    out.row_ptr_ = std::move(row_ptr);
    out.col_idx_ = std::move(col_idx);
    out.values_ = std::move(values);
    return out;
}

void SparseCsr::multiply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != ncols_ || y.size() != nrows_) {
        throw std::invalid_argument("spmv: dimension mismatch");
    }
    const Index* cols = col_idx_.data();
    const double* vals = values_.data();
    for (std::size_t r = 0; r < nrows_; ++r) {
        double sum = 0.0;
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            sum += vals[k] * x[cols[k]];
        }
        y[r] = sum;
    }
}

void SparseCsr::multiply_transpose(std::span<const double> y, std::span<double> x) const {
    if (y.size() != nrows_ || x.size() != ncols_) {
        throw std::invalid_argument("spmv_t: dimension mismatch");
    }
    std::fill(x.begin(), x.end(), 0.0);
    const Index* cols = col_idx_.data();
    const double* vals = values_.data();
    for (std::size_t r = 0; r < nrows_; ++r) {
        const double yr = y[r];
        if (yr == 0.0) continue;
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            x[cols[k]] += vals[k] * yr;
        }
    }
}

double SparseCsr::coeff(std::size_t r, std::size_t c) const {
    const auto cols = row_cols(r);
    const auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<Index>(c));
    if (it == cols.end() || *it != c) return 0.0;
    return values_[row_ptr_[r] + static_cast<std::size_t>(it - cols.begin())];
}

std::vector<double> SparseCsr::to_dense_row_major() const {
    std::vector<double> dense(nrows_ * ncols_, 0.0);
    for (std::size_t r = 0; r < nrows_; ++r) {
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            dense[r * ncols_ + col_idx_[k]] = values_[k];
        }
    }
    return dense;
}

void SparseCsr::append_rows(const SparseCsr& other) {
    if (other.ncols_ != ncols_) {
        throw std::invalid_argument("append_rows: column count mismatch");
    }
    const std::size_t offset = values_.size();
    col_idx_.insert(col_idx_.end(), other.col_idx_.begin(), other.col_idx_.end());
    values_.insert(values_.end(), other.values_.begin(), other.values_.end());
    row_ptr_.reserve(row_ptr_.size() + other.nrows_);
    for (std::size_t r = 1; r <= other.nrows_; ++r) {
        row_ptr_.push_back(offset + other.row_ptr_[r]);
    }
    nrows_ += other.nrows_;
}

void SparseCsr::save_binary(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write sparse matrix file: " + path.string());
    }
    out.write(kMagic.data(), kMagic.size());
    write_le<std::uint64_t>(out, nrows_);
    write_le<std::uint64_t>(out, ncols_);
    write_le<std::uint64_t>(out, values_.size());
    for (const auto p : row_ptr_) write_le<std::uint64_t>(out, p);
    for (const auto c : col_idx_) write_le<std::uint32_t>(out, c);
    for (const auto v : values_) write_le<double>(out, v);
}

SparseCsr SparseCsr::load_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open sparse matrix file: " + path.string());
    }
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
        throw std::runtime_error("not a PPH1 sparse matrix file: " + path.string());
    }
    const auto nrows = read_le<std::uint64_t>(in);
    const auto ncols = read_le<std::uint64_t>(in);
    const auto nnz = read_le<std::uint64_t>(in);
    std::vector<std::size_t> row_ptr(nrows + 1);
    for (auto& p : row_ptr) p = read_le<std::uint64_t>(in);
    std::vector<Index> col_idx(nnz);
    for (auto& c : col_idx) c = read_le<std::uint32_t>(in);
    std::vector<double> values(nnz);
    for (auto& v : values) v = read_le<double>(in);
    return from_arrays(nrows, ncols, std::move(row_ptr), std::move(col_idx), std::move(values));
}

CsrRowBuilder::CsrRowBuilder(std::size_t ncols, std::size_t expected_rows) : ncols_(ncols) {
    check_index_width(ncols);
    row_ptr_.reserve(expected_rows + 1);
    row_ptr_.push_back(0);
}

void CsrRowBuilder::add(std::size_t col, double value) {
    if (col >= ncols_) {
        throw std::out_of_range("CsrRowBuilder: column out of range");
    }
    pending_.emplace_back(static_cast<SparseCsr::Index>(col), value);
}

void CsrRowBuilder::finish_row() {
    std::sort(pending_.begin(), pending_.end());
    for (std::size_t k = 0; k < pending_.size();) {
        const auto c = pending_[k].first;
        double sum = 0.0;
        while (k < pending_.size() && pending_[k].first == c) {
            sum += pending_[k].second;
            ++k;
        }
        if (sum != 0.0) {
            col_idx_.push_back(c);
            values_.push_back(sum);
        }
    }
    pending_.clear();
    row_ptr_.push_back(values_.size());
}

SparseCsr CsrRowBuilder::build() {
    if (!pending_.empty()) finish_row();
    const std::size_t nrows = row_ptr_.size() - 1;
    return SparseCsr::from_arrays(nrows, ncols_, std::move(row_ptr_), std::move(col_idx_), std::move(values_));
}

SparseCsr from_triplets(std::size_t nrows, std::size_t ncols, std::vector<Triplet> entries) {
    return SparseCsr::from_triplets(nrows, ncols, std::move(entries));
}

std::vector<double> spmv(const SparseCsr& a, std::span<const double> x) {
    std::vector<double> y(a.rows());
    a.multiply(x, y);
    return y;
}

std::vector<double> spmv_t(const SparseCsr& a, std::span<const double> y) {
    std::vector<double> x(a.cols());
    a.multiply_transpose(y, x);
    return x;
}

MemoryFootprint memory_footprint(const SparseCsr& a) {
    MemoryFootprint m;
    m.sparse_bytes = 2 * sizeof(std::size_t) + a.row_ptr().size_bytes() + a.col_idx().size_bytes() +
                     a.values().size_bytes();
    m.dense_bytes = a.rows() * a.cols() * sizeof(double);
    return m;
}

} // namespace ppfilter
