#include "fixtures.hpp"

#include "ppfilter/discretize.hpp"
#include "ppfilter/simulate.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ppfilter;

namespace {

Trial two_channel_trial(double t_end, std::vector<double> a, std::vector<double> b) {
    Trial t;
    t.id = 1;
    t.t_end = t_end;
    t.events["a"] = std::move(a);
    t.events["b"] = std::move(b);
    return t;
}

const std::vector<std::string> kAB{"a", "b"};
const std::vector<std::string> kB{"b"};

} // namespace

TEST_CASE("delta grids") {
    const auto g = make_delta_grid(0.4, 200);
    CHECK(g.bins() == 200);
    CHECK(g.points[1] == doctest::Approx(0.002).epsilon(1e-15));
    CHECK(g.support() == 0.4);

    const auto five = make_delta_grid(0.5, 5);
    const std::vector<double> expected{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    for (std::size_t k = 0; k <= 5; ++k) CHECK(five.points[k] == doctest::Approx(expected[k]).epsilon(1e-15));
    CHECK(five.lags().size() == 5);

    const auto two = make_delta_grid(0.3, 2);
    CHECK(two.points == std::vector<double>{0.0, 0.15, 0.3});
    CHECK_THROWS((void)make_delta_grid(0.3, 1));
}

TEST_CASE("bin lookup with a closed last bin") {
    const auto g = make_delta_grid(0.5, 4);
    CHECK(*g.bin_of(0.0) == 0);
    CHECK(*g.bin_of(0.125) == 1);
    CHECK(*g.bin_of(0.4999) == 3);
    CHECK(*g.bin_of(0.5) == 3);
    CHECK_FALSE(g.bin_of(0.5000001).has_value());
    CHECK_FALSE(g.bin_of(-1e-9).has_value());
}

TEST_CASE("single event lands in one bin") {
    const auto trial = two_channel_trial(1.0, {}, {0.3});
    const auto grid = make_time_grid(trial, "a", 10);
    const auto delta = make_delta_grid(0.5, 5);
    const auto h = build_h(trial, grid, delta, kB);
    REQUIRE(grid.points[4] == doctest::Approx(0.4));
    CHECK(h.coeff(4, 1) == 1.0);
    CHECK(h.row_cols(4).size() == 1);
    for (std::size_t l = 0; l <= 3; ++l) CHECK(h.row_cols(l).empty());
}

TEST_CASE("an event at the grid time does not count") {
    const auto trial = two_channel_trial(1.0, {0.35}, {0.35});
    const auto grid = make_time_grid(trial, "a", 10);
    const auto delta = make_delta_grid(0.5, 5);
    const auto h = build_h(trial, grid, delta, kAB);
    const std::size_t l = grid.jump_indices[0];
    CHECK(grid.points[l] == 0.35);
    CHECK(h.row_cols(l).empty());
    CHECK(h.coeff(l + 1, 0) == 1.0);
    CHECK(h.coeff(l + 1, 5) == 1.0);
}

TEST_CASE("an event exactly A before the grid time hits the last bin") {
    // dyadic values keep every lag exact
    const auto trial = two_channel_trial(1.0, {}, {0.25});
    const auto grid = make_time_grid(trial, "a", 4);
    const auto delta = make_delta_grid(0.5, 4);
    const auto h = build_h(trial, grid, delta, kB);
    REQUIRE(grid.points[3] == 0.75);
    CHECK(h.coeff(3, 3) == 1.0);
    CHECK(h.row_cols(4).empty());
}

TEST_CASE("H matches brute-force event counting") {
    auto cfg = SimConfig::uniform(2, 30.0, std::log(3.0), 21);
    cfg.channels = {"a", "b"};
    const auto data = simulate_trials(cfg, 1);
    const auto& trial = data.trials()[0];
    const auto grid = make_time_grid(trial, "a", 600);
    const auto delta = make_delta_grid(0.4, 20);
    const auto h = build_h(trial, grid, delta, kAB);
    fixtures::BruteForce bf{data, "a", kAB, 600, delta.points};

    CHECK(h.rows() == grid.points.size());
    CHECK(h.cols() == 40);
    std::vector<double> dense(h.rows() * h.cols(), 0.0);
    for (std::size_t l = 0; l < grid.points.size(); ++l) {
        const double t = grid.points[l];
        for (std::size_t i = 0; i < 2; ++i) {
            for (const double s : trial.channel(kAB[i])) {
                if (!(s < t)) continue;
                const int k = bf.bin(t - s);
                if (k >= 0) dense[l * 40 + i * 20 + static_cast<std::size_t>(k)] += 1.0;
            }
        }
    }
    CHECK(h.to_dense_row_major() == dense);
    for (const double v : h.values()) CHECK(v == std::floor(v));
}

TEST_CASE("Z from H") {
    const auto basis = make_basis(0.5, 4);
    const auto delta = make_delta_grid(0.5, 5);
    const Eigen::MatrixXd bm = basis_eval_matrix(basis, delta.lags());

    const auto one_hot = from_triplets(2, 10, {{1, 5 + 2, 1.0}});
    const auto z = build_z(one_hot, bm, 2);
    CHECK(z.row_cols(0).empty());
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(z.coeff(1, j) == 0.0);
        CHECK(z.coeff(1, 4 + j) == bm(2, static_cast<Eigen::Index>(j)));
    }

    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> count(0, 2);
    std::vector<Triplet> t;
    for (std::size_t l = 0; l < 9; ++l)
        for (std::size_t c = 0; c < 10; ++c)
            if (const int v = count(rng); v > 0 && c % 3 != l % 3) t.push_back({l, c, static_cast<double>(v)});
    const auto h = from_triplets(9, 10, t);
    const auto zr = build_z(h, bm, 2);
    for (std::size_t l = 0; l < 9; ++l) {
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 4; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < 5; ++k) s += h.coeff(l, i * 5 + k) * bm(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
                CHECK(zr.coeff(l, i * 4 + j) == doctest::Approx(s).epsilon(1e-14));
            }
        }
    }
    CHECK_THROWS_AS((void)build_z(h, bm, 3), std::invalid_argument);
}

TEST_CASE("direct Z without events is zero") {
    const auto trial = two_channel_trial(1.0, {0.5}, {});
    const auto grid = make_time_grid(trial, "a", 10);
    const auto z = build_z_direct(trial, grid, make_basis(0.5, 6), kB);
    CHECK(z.nnz() == 0);
    CHECK(z.rows() == grid.points.size());
}

TEST_CASE("direct Z agrees with binned Z for grid-aligned events") {
    const double a = 0.5;
    const auto trial = two_channel_trial(2.0, {}, {0.125, 0.375, 0.5, 1.25});
    const auto grid = make_time_grid(trial, "a", 16);
    const auto delta = make_delta_grid(a, 4);
    const auto basis = make_basis(a, 6);
    const auto h = build_h(trial, grid, delta, kB);
    const auto zb = build_z(h, basis_eval_matrix(basis, delta.lags()), 1);
    const auto zd = build_z_direct(trial, grid, basis, kB);
    const auto& ev = trial.channel("b");
    std::size_t compared = 0;
    for (std::size_t l = 0; l < grid.points.size(); ++l) {
        const double t = grid.points[l];
        // lag A sits in the closed last bin of H but outside the open window of direct Z
        if (std::any_of(ev.begin(), ev.end(), [&](double s) { return t - s == a; })) continue;
        ++compared;
        for (std::size_t j = 0; j < 6; ++j) CHECK(std::abs(zd.coeff(l, j) - zb.coeff(l, j)) <= 1e-12);
    }
    CHECK(compared > 10);
}

TEST_CASE("direct Z differs from binned Z by at most Lipschitz times bin width") {
    auto cfg = SimConfig::uniform(1, 20.0, std::log(2.0), 8);
    cfg.channels = {"b"};
    const auto sim = simulate_trials(cfg, 1);
    const auto trial = two_channel_trial(20.0, {}, sim.trials()[0].channel("b"));
    const auto grid = make_time_grid(trial, "a", 2000);
    const auto delta = make_delta_grid(0.4, 40);
    const auto basis = make_basis(0.4, 10);
    const auto zb = build_z(build_h(trial, grid, delta, kB), basis_eval_matrix(basis, delta.lags()), 1);
    const auto zd = build_z_direct(trial, grid, basis, kB);

    double lipschitz = 0.0;
    for (int k = 0; k <= 4000; ++k) {
        const double x = 0.4 * k / 4000.0;
        for (std::size_t j = 0; j < 10; ++j) lipschitz = std::max(lipschitz, std::abs(basis.eval(j, x, 1)));
    }
    const double width = 0.4 / 40.0;
    const auto& ev = trial.channel("b");
    for (std::size_t l = 0; l < grid.points.size(); ++l) {
        const double t = grid.points[l];
        const auto in_window = std::count_if(ev.begin(), ev.end(), [&](double s) { return s < t && t - s < 0.4; });
        for (std::size_t j = 0; j < 10; ++j) {
            CHECK(std::abs(zd.coeff(l, j) - zb.coeff(l, j)) <= lipschitz * width * static_cast<double>(in_window) + 1e-12);
        }
    }
}

TEST_CASE("stacked model matrices") {
    auto cfg = SimConfig::uniform(2, 10.0, std::log(2.0), 4);
    cfg.channels = {"a", "b"};
    const auto data = simulate_trials(cfg, 3);
    const auto delta = make_delta_grid(0.4, 8);
    const auto basis = make_basis(0.4, 5);
    const auto mm = build_model_matrices(data, "a", kAB, 100, delta, {&basis, false});
    REQUIRE(mm.row_offsets.size() == 4);
    CHECK(mm.row_offsets.back() == mm.rows());
    CHECK(mm.h.rows() == mm.rows());
    CHECK(mm.z->rows() == mm.rows());
    CHECK(mm.z->cols() == 10);
    std::size_t jumps = 0;
    for (std::size_t r = 0; r < 3; ++r) {
        const auto& trial = data.trials()[r];
        CHECK(mm.weights[mm.row_offsets[r]] == 0.0);
        const auto h = build_h(trial, mm.grids[r], delta, kAB);
        for (std::size_t l = 0; l < h.rows(); ++l) {
            for (std::size_t c = 0; c < h.cols(); ++c) CHECK(mm.h.coeff(mm.row_offsets[r] + l, c) == h.coeff(l, c));
        }
        jumps += trial.count("a");
    }
    CHECK(mm.jump_rows.size() == jumps);
    double total = 0.0;
    for (const double w : mm.weights) total += w;
    CHECK(total == doctest::Approx(30.0).epsilon(1e-12));
    CHECK(mm.multiple_hits == count_multiple_hits(mm.h));

    CHECK_THROWS_AS((void)build_model_matrices(data, "zz", kAB, 100, delta), DataError);
    CHECK_THROWS_AS((void)build_model_matrices(data, "a", {"zz"}, 100, delta), DataError);
}
