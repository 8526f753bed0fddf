#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ionpot/errors.hpp"
#include "ionpot/hermite.hpp"

using namespace ionpot;

namespace {

// Monotone cubic: the shape-preserving clamps never engage on its samples,
// so the local-cubic slope rule must reproduce it exactly.
double cubic(double x) { return x * x * x + 3.0 * x; }
double cubic_deriv(double x) { return 3.0 * x * x + 3.0; }
double cubic_antideriv(double x) { return 0.25 * x * x * x * x + 1.5 * x * x; }

std::vector<double> nonuniform_nodes() {
    return {-2.0, -1.4, -0.3, 0.1, 0.9, 1.5, 2.75, 3.0};
}

} // namespace

TEST_CASE("two nodes degenerate to the straight line") {
    const std::vector<double> x = {0.0, 2.0};
    const std::vector<double> y = {1.0, 5.0};
    for (SlopeRule rule : {SlopeRule::fritsch_carlson, SlopeRule::extremum_preserving}) {
        const CubicHermite h = CubicHermite::shape_preserving(x, y, rule);
        CHECK(h.value(0.5) == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(h.deriv(1.7) == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(h.integral(0.0, 2.0) == doctest::Approx(6.0).epsilon(1e-15));
    }
}

TEST_CASE("both rules reproduce linear data exactly") {
    const std::vector<double> x = nonuniform_nodes();
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = -0.7 * x[i] + 1.3;
    for (SlopeRule rule : {SlopeRule::fritsch_carlson, SlopeRule::extremum_preserving}) {
        const CubicHermite h = CubicHermite::shape_preserving(x, y, rule);
        for (double t = x.front(); t <= x.back(); t += 0.05) {
            CHECK(h.value(t) == doctest::Approx(-0.7 * t + 1.3).epsilon(1e-13));
        }
    }
}

TEST_CASE("extremum-preserving slopes are exact for cubic data") {
    const std::vector<double> x = nonuniform_nodes();
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = cubic(x[i]);
    const CubicHermite h =
        CubicHermite::shape_preserving(x, y, SlopeRule::extremum_preserving);
    // node slopes equal the analytic derivative, so the interpolant is the
    // cubic itself on every segment
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(h.node_slopes()[i] == doctest::Approx(cubic_deriv(x[i])).epsilon(1e-10));
    }
    for (double t = x.front(); t <= x.back(); t += 0.01) {
        CHECK(h.value(t) == doctest::Approx(cubic(t)).epsilon(1e-10));
    }
}

TEST_CASE("exact integral of cubic data") {
    const std::vector<double> x = nonuniform_nodes();
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = cubic(x[i]);
    const CubicHermite h =
        CubicHermite::shape_preserving(x, y, SlopeRule::extremum_preserving);
    const double a = -1.7, b = 2.9;  // mid-segment endpoints
    CHECK(h.integral(a, b) ==
          doctest::Approx(cubic_antideriv(b) - cubic_antideriv(a)).epsilon(1e-10));
    // signed integral: reversing the limits flips the sign exactly
    CHECK(h.integral(b, a) == doctest::Approx(-h.integral(a, b)).epsilon(1e-15));
    // additivity across segments
    CHECK(h.integral(a, 0.4) + h.integral(0.4, b) ==
          doctest::Approx(h.integral(a, b)).epsilon(1e-13));
    CHECK(h.integral(1.1, 1.1) == 0.0);
}

TEST_CASE("fritsch-carlson preserves monotonicity without overshoot") {
    // steep step data, the classic overshoot trap for plain splines
    const std::vector<double> x = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
    const std::vector<double> y = {0.0, 0.01, 0.02, 5.0, 5.01, 5.02};
    const CubicHermite h =
        CubicHermite::shape_preserving(x, y, SlopeRule::fritsch_carlson);
    double prev = h.value(0.0);
    for (double t = 0.002; t <= 5.0; t += 0.002) {
        const double v = h.value(t);
        CHECK(v >= prev - 1e-12);  // non-decreasing
        prev = v;
    }
    CHECK(h.value(5.0) == doctest::Approx(5.02));
}

TEST_CASE("extremum-preserving clamp keeps monotone data monotone") {
    const std::vector<double> x = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
    const std::vector<double> y = {0.0, 0.01, 0.02, 5.0, 5.01, 5.02};
    const CubicHermite h =
        CubicHermite::shape_preserving(x, y, SlopeRule::extremum_preserving);
    double lo = y.front(), hi = y.back();
    for (double t = 0.0; t <= 5.0; t += 0.002) {
        const double v = h.value(t);
        CHECK(v >= lo - 1e-9);
        CHECK(v <= hi + 1e-9);
    }
}

TEST_CASE("fritsch-carlson pins a zero slope at data extrema") {
    const std::vector<double> x = {-2.0, -1.0, 0.0, 1.0, 2.0};
    const std::vector<double> y = {4.0, 1.0, 0.0, 1.0, 4.0};  // minimum at x=0
    const CubicHermite h =
        CubicHermite::shape_preserving(x, y, SlopeRule::fritsch_carlson);
    CHECK(h.node_slopes()[2] == 0.0);
    // no interpolated value dips below the data minimum
    for (double t = -2.0; t <= 2.0; t += 0.01) CHECK(h.value(t) >= -1e-12);
}

TEST_CASE("extremum-preserving recovers the true parabola minimum") {
    // parabola sampled off-centre: the true minimum (0) lies between nodes;
    // the fritsch-carlson rule flattens it to the node value, the local
    // cubic fit reproduces the dip exactly
    const std::vector<double> x = {-1.7, -0.9, 0.3, 1.1, 1.9};
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * x[i];
    const CubicHermite ep =
        CubicHermite::shape_preserving(x, y, SlopeRule::extremum_preserving);
    CHECK(ep.value(0.0) == doctest::Approx(0.0).epsilon(1e-12));
    const CubicHermite fc =
        CubicHermite::shape_preserving(x, y, SlopeRule::fritsch_carlson);
    CHECK(fc.value(0.0) > 0.01);  // only O(h^2) near the extremum
}

TEST_CASE("caller-supplied slopes are honoured at the nodes") {
    const std::vector<double> x = {0.0, 1.0, 3.0};
    const std::vector<double> y = {0.0, 1.0, -1.0};
    const std::vector<double> d = {2.0, 0.0, -0.5};
    const CubicHermite h = CubicHermite::with_slopes(x, y, d);
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(h.value(x[i]) == doctest::Approx(y[i]).epsilon(1e-15));
        CHECK(h.deriv(x[i]) == doctest::Approx(d[i]).epsilon(1e-13));
    }
    CHECK(h.nodes() == x);
    CHECK(h.node_values() == y);
    CHECK(h.node_slopes() == d);
    CHECK(h.x_min() == 0.0);
    CHECK(h.x_max() == 3.0);
}

TEST_CASE("derivatives are consistent with finite differences") {
    const std::vector<double> x = nonuniform_nodes();
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::sin(1.3 * x[i]);
    const CubicHermite h = CubicHermite::shape_preserving(x, y);
    const double e = 1e-6;
    for (double t : {-1.0, 0.5, 2.0}) {
        CHECK(h.deriv(t) ==
              doctest::Approx((h.value(t + e) - h.value(t - e)) / (2.0 * e)).epsilon(1e-6));
        CHECK(h.second_deriv(t) ==
              doctest::Approx((h.deriv(t + e) - h.deriv(t - e)) / (2.0 * e)).epsilon(1e-5));
    }
}

TEST_CASE("no extrapolation beyond the node range") {
    const std::vector<double> x = {0.0, 1.0, 2.0};
    const std::vector<double> y = {0.0, 1.0, 4.0};
    const CubicHermite h = CubicHermite::shape_preserving(x, y);
    CHECK_NOTHROW(h.value(0.0));
    CHECK_NOTHROW(h.value(2.0));
    CHECK_THROWS_AS(h.value(2.0 + 1e-9), DomainError);
    CHECK_THROWS_AS(h.value(-1e-9), DomainError);
    CHECK_THROWS_AS(h.deriv(3.0), DomainError);
    CHECK_THROWS_AS(h.integral(0.0, 2.5), DomainError);
    CHECK_THROWS_AS(h.value(std::nan("")), DomainError);
}

TEST_CASE("bad node sets are rejected") {
    CHECK_THROWS_AS(CubicHermite::shape_preserving(std::vector<double>{1.0},
                                                   std::vector<double>{1.0}),
                    InvalidArgument);
    CHECK_THROWS_AS(CubicHermite::shape_preserving(std::vector<double>{1.0, 1.0},
                                                   std::vector<double>{1.0, 2.0}),
                    InvalidArgument);
    CHECK_THROWS_AS(CubicHermite::shape_preserving(std::vector<double>{2.0, 1.0},
                                                   std::vector<double>{1.0, 2.0}),
                    InvalidArgument);
    CHECK_THROWS_AS(CubicHermite::shape_preserving(std::vector<double>{0.0, 1.0},
                                                   std::vector<double>{1.0}),
                    InvalidArgument);
    CHECK_THROWS_AS(CubicHermite::with_slopes(std::vector<double>{0.0, 1.0},
                                              std::vector<double>{1.0, 2.0},
                                              std::vector<double>{0.0}),
                    InvalidArgument);
}
