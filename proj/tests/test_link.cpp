#include "ppfilter/link.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace ppfilter;

namespace {

double numeric_deriv(const LinkFunction& link, double x) {
    const double h = 1e-6;
    return (phi(link, x + h).value - phi(link, x - h).value) / (2.0 * h);
}

} // namespace

TEST_CASE("logaffine at c = 0") {
    const auto l = LinkFunction::logaffine(0.0);
    CHECK(phi(l, 0.0).value == 1.0);
    CHECK(phi(l, 1.0).value == 2.0);
    CHECK(phi(l, -1.0).value == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    const double eps = 1e-9;
    CHECK(phi(l, eps).value == doctest::Approx(phi(l, -eps).value).epsilon(1e-8));
    CHECK(phi(l, eps).deriv == doctest::Approx(phi(l, -eps).deriv).epsilon(1e-8));
    CHECK(*log_phi(l, 2.0) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
    CHECK(l.continuously_differentiable());
}

TEST_CASE("root with c = 0 is the positive part") {
    const auto l = LinkFunction::root(0.0);
    for (double x : {-2.0, -0.1, 0.0, 0.3, 5.0}) CHECK(phi(l, x).value == std::max(x, 0.0));
    CHECK_FALSE(l.continuously_differentiable());
    CHECK(LinkFunction::root(2.0).continuously_differentiable());
    CHECK_FALSE(LinkFunction::root(1.0).continuously_differentiable());
}

TEST_CASE("root with c = 2") {
    const auto l = LinkFunction::root(2.0);
    CHECK(phi(l, 2.0).value == doctest::Approx(8.0));
    CHECK(phi(l, 2.0).deriv == doctest::Approx(12.0));
    CHECK(phi(l, -1.0).value == 0.0);
    CHECK(phi(l, -1.0).deriv == 0.0);
}

TEST_CASE("log link") {
    const auto l = LinkFunction::log();
    CHECK(phi(l, 0.0).value == 1.0);
    CHECK(phi(l, 0.0).deriv == 1.0);
    CHECK(*log_phi(l, 3.0) == 3.0);
}

TEST_CASE("nonpositive intensity is a barrier") {
    CHECK_FALSE(log_phi(LinkFunction::identity(), 0.0).has_value());
    CHECK_FALSE(log_phi(LinkFunction::identity(), -1.0).has_value());
    CHECK_FALSE(log_phi(LinkFunction::root(2.0), 0.0).has_value());
    CHECK(log_phi(LinkFunction::identity(), 2.0).has_value());
}

TEST_CASE("derivatives agree with finite differences and phi is nonnegative") {
    const LinkFunction links[] = {LinkFunction::log(), LinkFunction::root(2.0), LinkFunction::root(0.5),
                                  LinkFunction::logaffine(0.0), LinkFunction::logaffine(-1.5)};
    for (const auto& l : links) {
        for (double x : {-2.3, -0.7, 0.4, 1.9, 3.2}) {
            CHECK(phi(l, x).value >= 0.0);
            CHECK(phi(l, x).deriv == doctest::Approx(numeric_deriv(l, x)).epsilon(1e-6));
            if (phi(l, x).value > 0.0) {
                CHECK(*log_phi(l, x) == doctest::Approx(std::log(phi(l, x).value)).epsilon(1e-13));
                CHECK(phi_log_deriv(l, x) == doctest::Approx(phi(l, x).deriv / phi(l, x).value).epsilon(1e-13));
            }
        }
    }
}

TEST_CASE("logaffine with infinite c is the log link") {
    const auto l = LinkFunction::logaffine(std::numeric_limits<double>::infinity());
    for (double x : {-3.0, 0.0, 7.5}) {
        CHECK(phi(l, x).value == phi(LinkFunction::log(), x).value);
        CHECK(*log_phi(l, x) == x);
    }
}

TEST_CASE("parsing and description") {
    CHECK(LinkFunction::parse("log").family == LinkFamily::log);
    CHECK(LinkFunction::parse("identity").family == LinkFamily::identity);
    CHECK(LinkFunction::parse("root:2").c == 2.0);
    CHECK(LinkFunction::parse("root").c == 0.0);
    CHECK(std::isinf(LinkFunction::parse("logaffine:inf").c));
    CHECK(LinkFunction::parse("logaffine:-0.5").c == -0.5);
    CHECK(LinkFunction::parse(LinkFunction::logaffine(1.5).describe()).c == 1.5);
    CHECK(LinkFunction::parse("logaffine:inf").describe() == "logaffine:inf");
    CHECK_THROWS((void)LinkFunction::parse("probit"));
    CHECK_THROWS((void)LinkFunction::parse("root:-1"));
    CHECK_THROWS((void)LinkFunction::parse("root:2x"));
}

TEST_CASE("inverse reproduces the rate") {
    const LinkFunction links[] = {LinkFunction::log(), LinkFunction::identity(), LinkFunction::root(2.0),
                                  LinkFunction::logaffine(0.0), LinkFunction::logaffine(5.0)};
    for (const auto& l : links) {
        for (double r : {1e-6, 0.3, 1.0, 2.0, 40.0}) {
            CHECK(phi(l, l.inverse(r)).value == doctest::Approx(r).epsilon(1e-12));
        }
    }
    CHECK(LinkFunction::identity().inverse(2.0) == 2.0);
}
