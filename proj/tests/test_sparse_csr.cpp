#include "ppfilter/sparse_csr.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

using namespace ppfilter;

namespace {

struct Dense {
    std::size_t rows;
    std::size_t cols;
    std::vector<double> a;  // row-major
    double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
};

std::vector<Triplet> random_triplets(std::size_t rows, std::size_t cols, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> r(0, rows - 1);
    std::uniform_int_distribution<std::size_t> c(0, cols - 1);
    std::uniform_real_distribution<double> v(-1.0, 1.0);
    std::vector<Triplet> out;
    for (std::size_t k = 0; k < count; ++k) out.push_back({r(rng), c(rng), v(rng)});
    return out;
}

Dense dense_sum(std::size_t rows, std::size_t cols, const std::vector<Triplet>& t) {
    Dense d{rows, cols, std::vector<double>(rows * cols, 0.0)};
    for (const auto& e : t) d(e.row, e.col) += e.value;
    return d;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> v(-1.0, 1.0);
    std::vector<double> x(n);
    for (auto& e : x) e = v(rng);
    return x;
}

void check_invariants(const SparseCsr& a) {
    const auto rp = a.row_ptr();
    CHECK(rp.front() == 0);
    CHECK(rp.back() == a.nnz());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        CHECK(rp[r] <= rp[r + 1]);
        const auto cols = a.row_cols(r);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            CHECK(cols[k] < a.cols());
            if (k > 0) CHECK(cols[k - 1] < cols[k]);
        }
    }
}

} // namespace

TEST_CASE("duplicates are summed") {
    const auto a = from_triplets(1, 1, {{0, 0, 1.0}, {0, 0, 1.0}});
    CHECK(a.nnz() == 1);
    CHECK(a.coeff(0, 0) == 2.0);
}

TEST_CASE("empty triplets and zero cancellation") {
    CHECK(from_triplets(3, 4, {}).nnz() == 0);
    CHECK(from_triplets(2, 2, {{1, 1, 1.0}, {1, 1, -1.0}}).nnz() == 0);
}

TEST_CASE("out of range triplet") {
    CHECK_THROWS_AS((void)from_triplets(2, 2, {{2, 0, 1.0}}), std::out_of_range);
    CHECK_THROWS_AS((void)from_triplets(2, 2, {{0, 2, 1.0}}), std::out_of_range);
}

TEST_CASE("random triplets reconstruct the dense accumulation") {
    const auto t = random_triplets(50, 50, 400, 1);
    const auto a = from_triplets(50, 50, t);
    check_invariants(a);
    const auto oracle = dense_sum(50, 50, t);
    const auto dense = a.to_dense_row_major();
    for (std::size_t k = 0; k < dense.size(); ++k) CHECK(dense[k] == doctest::Approx(oracle.a[k]).epsilon(1e-14));
}

TEST_CASE("from_triplets is independent of entry order") {
    auto t = random_triplets(20, 15, 200, 5);
    const auto a = from_triplets(20, 15, t);
    std::mt19937_64 rng(9);
    std::shuffle(t.begin(), t.end(), rng);
    CHECK(from_triplets(20, 15, t) == a);
}

TEST_CASE("identity spmv and spmv_t") {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < 6; ++i) t.push_back({i, i, 1.0});
    const auto a = from_triplets(6, 6, t);
    const auto x = random_vector(6, 2);
    CHECK(spmv(a, x) == x);
    CHECK(spmv_t(a, x) == x);
}

TEST_CASE("zero matrix products") {
    const SparseCsr z(4, 3);
    CHECK(spmv(z, std::vector<double>(3, 1.0)) == std::vector<double>(4, 0.0));
    CHECK(spmv_t(z, std::vector<double>(4, 1.0)) == std::vector<double>(3, 0.0));
}

TEST_CASE("spmv and spmv_t match dense products") {
    const auto t = random_triplets(30, 20, 150, 3);
    const auto a = from_triplets(30, 20, t);
    const auto d = dense_sum(30, 20, t);
    const auto x = random_vector(20, 4);
    const auto y = spmv(a, x);
    for (std::size_t r = 0; r < 30; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < 20; ++c) s += d(r, c) * x[c];
        CHECK(y[r] == doctest::Approx(s).epsilon(1e-14));
    }
    const auto w = random_vector(30, 5);
    const auto xt = spmv_t(a, w);
    for (std::size_t c = 0; c < 20; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < 30; ++r) s += d(r, c) * w[r];
        CHECK(xt[c] == doctest::Approx(s).epsilon(1e-14));
    }
}

TEST_CASE("spmv_t after spmv on a symmetric matrix is A squared") {
    auto t = random_triplets(12, 12, 40, 6);
    const std::size_t n = t.size();
    for (std::size_t k = 0; k < n; ++k) t.push_back({t[k].col, t[k].row, t[k].value});
    const auto a = from_triplets(12, 12, t);
    const auto d = dense_sum(12, 12, t);
    const auto x = random_vector(12, 7);
    const auto got = spmv_t(a, spmv(a, x));
    for (std::size_t r = 0; r < 12; ++r) {
        double s = 0.0;
        for (std::size_t m = 0; m < 12; ++m) {
            for (std::size_t c = 0; c < 12; ++c) s += d(r, m) * d(m, c) * x[c];
        }
        CHECK(got[r] == doctest::Approx(s).epsilon(1e-13));
    }
}

TEST_CASE("dimension mismatch") {
    const SparseCsr a(3, 2);
    CHECK_THROWS_AS((void)spmv(a, std::vector<double>(3)), std::invalid_argument);
    CHECK_THROWS_AS((void)spmv_t(a, std::vector<double>(2)), std::invalid_argument);
}

TEST_CASE("memory footprint") {
    const SparseCsr empty(0, 0);
    const auto m0 = memory_footprint(empty);
    CHECK(m0.sparse_bytes == 2 * sizeof(std::size_t) + sizeof(std::size_t));
    CHECK(m0.dense_bytes == 0);

    const auto a = from_triplets(3, 4, {{0, 1, 1.0}, {2, 3, 2.0}});
    const auto m = memory_footprint(a);
    CHECK(m.sparse_bytes == 2 * sizeof(std::size_t) + 4 * sizeof(std::size_t) + 2 * 4 + 2 * 8);
    CHECK(m.dense_bytes == 96);

    // Dense sizes of H and Z at the scale of the memory study.
    const SparseCsr h(50'000, 1'200);
    CHECK(memory_footprint(h).dense_bytes == 480'000'000);
    const SparseCsr z(50'000, 300);
    CHECK(memory_footprint(z).dense_bytes == 120'000'000);
}

TEST_CASE("from_arrays validates invariants") {
    CHECK_NOTHROW((void)SparseCsr::from_arrays(2, 3, {0, 1, 2}, {2, 0}, {1.0, 2.0}));
    CHECK_THROWS((void)SparseCsr::from_arrays(2, 3, {0, 2, 1}, {2, 0}, {1.0, 2.0}));
    CHECK_THROWS((void)SparseCsr::from_arrays(1, 3, {0, 2}, {2, 1}, {1.0, 2.0}));
    CHECK_THROWS((void)SparseCsr::from_arrays(1, 3, {0, 1}, {3}, {1.0}));
    CHECK_THROWS((void)SparseCsr::from_arrays(1, 3, {0, 1}, {0}, {1.0, 2.0}));
}

TEST_CASE("row builder merges repeated columns") {
    CsrRowBuilder b(5);
    b.add(3, 1.0);
    b.add(1, 1.0);
    b.add(3, 1.0);
    b.finish_row();
    b.finish_row();
    const auto a = b.build();
    check_invariants(a);
    CHECK(a.rows() == 2);
    CHECK(a.coeff(0, 3) == 2.0);
    CHECK(a.coeff(0, 1) == 1.0);
    CHECK(a.row_cols(1).empty());
}

TEST_CASE("append rows stacks matrices") {
    auto a = from_triplets(2, 3, {{0, 0, 1.0}, {1, 2, 2.0}});
    const auto b = from_triplets(1, 3, {{0, 1, 3.0}});
    a.append_rows(b);
    check_invariants(a);
    CHECK(a.rows() == 3);
    CHECK(a.coeff(2, 1) == 3.0);
    CHECK_THROWS((void)a.append_rows(SparseCsr(1, 4)));
}

TEST_CASE("binary round trip") {
    const auto a = from_triplets(40, 30, random_triplets(40, 30, 100, 8));
    const auto path = std::filesystem::temp_directory_path() / "ppfilter_test_h.pph";
    a.save_binary(path);
    CHECK(SparseCsr::load_binary(path) == a);
    std::filesystem::remove(path);
}
