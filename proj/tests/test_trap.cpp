#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ionpot/errors.hpp"
#include "ionpot/trap.hpp"
#include "ionpot/units.hpp"

using namespace ionpot;

namespace {
const UnitSystem kUnits = UnitSystem::micrometre_scale();
}

TEST_CASE("strip unit potential closed-form values") {
    const Strip strip{-50.0, 50.0};
    const double h = 100.0;
    // directly over the strip centre: (2/pi) atan(w/2h)
    CHECK(strip_unit_potential(0.0, strip, h) ==
          doctest::Approx(0.29516723530086653).epsilon(1e-14));
    // a strip as wide as twice the height subtends exactly a quarter turn
    CHECK(strip_unit_potential(0.0, Strip{-100.0, 100.0}, 100.0) ==
          doctest::Approx(0.5).epsilon(1e-14));
    // symmetry about the strip centre
    CHECK(strip_unit_potential(30.0, strip, h) ==
          doctest::Approx(strip_unit_potential(-30.0, strip, h)).epsilon(1e-14));
    // bounded in (0, 1): far field decays to 0, close field saturates at 1
    CHECK(strip_unit_potential(1e5, strip, h) < 1e-4);
    CHECK(strip_unit_potential(0.0, strip, 1e-4) == doctest::Approx(1.0).epsilon(1e-8));
    for (double x : {-200.0, -20.0, 0.0, 35.0, 400.0}) {
        const double u = strip_unit_potential(x, strip, h);
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("strip derivatives match finite differences") {
    const Strip strip{-30.0, 70.0};
    const double h = 80.0;
    const double e = 1e-4;
    for (double x : {-120.0, -30.0, 0.0, 20.0, 70.0, 150.0}) {
        const double fd1 = (strip_unit_potential(x + e, strip, h) -
                            strip_unit_potential(x - e, strip, h)) / (2.0 * e);
        CHECK(strip_unit_potential_deriv(x, strip, h) == doctest::Approx(fd1).epsilon(1e-7));
        const double fd2 = (strip_unit_potential_deriv(x + e, strip, h) -
                            strip_unit_potential_deriv(x - e, strip, h)) / (2.0 * e);
        CHECK(strip_unit_potential_second_deriv(x, strip, h) ==
              doctest::Approx(fd2).epsilon(1e-6));
    }
}

TEST_CASE("five segment default geometry") {
    const TrapGeometry geom = TrapGeometry::five_segment_default();
    REQUIRE(geom.electrode_count() == 5);
    CHECK(geom.strips.front().x0 == -250.0);
    CHECK(geom.strips.back().x1 == 250.0);
    CHECK(geom.height == 100.0);
    for (const Strip& s : geom.strips) CHECK(s.width() == doctest::Approx(100.0));
    CHECK(geom.strips[2].centre() == doctest::Approx(0.0));
    CHECK_NOTHROW(geom.validate());
}

TEST_CASE("uniform tiling") {
    const TrapGeometry geom = TrapGeometry::uniform(4, 25.0, 60.0, 10.0);
    REQUIRE(geom.electrode_count() == 4);
    CHECK(geom.height == 60.0);
    CHECK(geom.strips[0].x0 == 10.0);
    CHECK(geom.strips[3].x1 == doctest::Approx(110.0));
    // gapless: each strip starts where the previous one ends
    for (std::size_t i = 1; i < 4; ++i) {
        CHECK(geom.strips[i].x0 == doctest::Approx(geom.strips[i - 1].x1));
    }
    CHECK_THROWS_AS(TrapGeometry::uniform(0, 25.0, 60.0, 0.0), ConfigError);
    CHECK_THROWS_AS(TrapGeometry::uniform(3, -1.0, 60.0, 0.0), ConfigError);
}

TEST_CASE("geometry validation rejects bad strip sets") {
    TrapGeometry geom = TrapGeometry::five_segment_default();
    geom.height = 0.0;
    CHECK_THROWS_AS(geom.validate(), ConfigError);

    geom = TrapGeometry::five_segment_default();
    geom.strips[1].x1 = geom.strips[1].x0;  // empty strip
    CHECK_THROWS_AS(geom.validate(), ConfigError);

    geom = TrapGeometry::five_segment_default();
    geom.strips[2].x0 -= 30.0;  // overlaps strip 1
    CHECK_THROWS_AS(geom.validate(), ConfigError);

    geom = TrapGeometry::five_segment_default();
    geom.voltage_min = geom.voltage_max;
    CHECK_THROWS_AS(geom.validate(), ConfigError);

    geom = TrapGeometry::five_segment_default();
    geom.strips.clear();
    CHECK_THROWS_AS(geom.validate(), ConfigError);
}

TEST_CASE("axial potential superposes strips exactly") {
    const TrapGeometry geom = TrapGeometry::five_segment_default();
    const std::vector<double> v = {12.0, -3.5, 7.25, 0.0, 40.0};
    const Potential1D total = axial_potential(geom, v, kUnits);

    for (double x : {-240.0, -100.0, -7.5, 0.0, 42.0, 180.0, 249.0}) {
        double expected = 0.0;
        for (std::size_t m = 0; m < 5; ++m) {
            std::vector<double> unit(5, 0.0);
            unit[m] = 1.0;
            expected += v[m] * axial_potential(geom, unit, kUnits).value(x);
        }
        // superposition of the closed form is linear to machine precision
        CHECK(total.value(x) == doctest::Approx(expected).epsilon(1e-14));
    }
}

TEST_CASE("axial potential scales volts into internal energy") {
    const TrapGeometry geom = TrapGeometry::five_segment_default();
    std::vector<double> unit(5, 0.0);
    unit[2] = 1.0;
    const Potential1D pot = axial_potential(geom, unit, kUnits);
    // 1 V on one strip: value = u(x) * (1 eV in internal units)
    const double scale = kUnits.energy_to_internal(1.0);
    const double expected = strip_unit_potential(0.0, geom.strips[2], geom.height) * scale;
    CHECK(pot.value(0.0) == doctest::Approx(expected).epsilon(1e-14));
    // derivative scales the same way
    const double dexp = strip_unit_potential_deriv(33.0, geom.strips[2], geom.height) * scale;
    CHECK(pot.deriv(33.0) == doctest::Approx(dexp).epsilon(1e-12));
}

TEST_CASE("axial potential validates voltages") {
    const TrapGeometry geom = TrapGeometry::five_segment_default();
    CHECK_THROWS_AS(axial_potential(geom, {1.0, 2.0}, kUnits), InvalidArgument);
    // outside [-20, 60]
    CHECK_THROWS_AS(axial_potential(geom, {0.0, 0.0, 61.0, 0.0, 0.0}, kUnits), ConfigError);
    CHECK_THROWS_AS(axial_potential(geom, {-21.0, 0.0, 0.0, 0.0, 0.0}, kUnits), ConfigError);
    CHECK_THROWS_AS(
        axial_potential(geom, {0.0, 0.0, std::nan(""), 0.0, 0.0}, kUnits),
        InvalidArgument);
}

TEST_CASE("named test potential families") {
    CHECK(test_potential("harmonic", {2.0}).value(1.0) == doctest::Approx(1.0));
    CHECK(test_potential("harmonic", {2.0, 0.5}).value(0.5) == doctest::Approx(0.0));
    CHECK(test_potential("quartic", {1.0, 1.0}).value(1.0) == doctest::Approx(0.0));
    CHECK(test_potential("tilt", {0.5}).value(2.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(test_potential("harmonic", {}), InvalidArgument);
    CHECK_THROWS_AS(test_potential("quartic", {1.0}), InvalidArgument);
    CHECK_THROWS_AS(test_potential("tilt", {1.0, 2.0}), InvalidArgument);
    CHECK_THROWS_AS(test_potential("sextic", {1.0}), InvalidArgument);
}
