#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "ionpot/errors.hpp"
#include "ionpot/units.hpp"

using namespace ionpot;

// e/(4 pi eps0) from e = 1.602176634e-19 C, eps0 = 8.8541878128e-12 F/m,
// evaluated independently in extended precision.
constexpr double kCoulombEvM = 1.439964547842567e-9;

TEST_CASE("coulomb constant matches CODATA arithmetic") {
    CHECK(coulomb_constant_ev_m() == doctest::Approx(kCoulombEvM).epsilon(1e-15));
}

TEST_CASE("micrometre scale pins the energy unit") {
    const UnitSystem us = UnitSystem::micrometre_scale();
    CHECK(us.length_unit_m() == 1e-6);
    CHECK(us.energy_unit_ev() == doctest::Approx(1.4399645478425671e-3).epsilon(1e-15));
    CHECK(us.coulomb_constant_internal() == 1.0);
    // energy_unit * length_unit is the Coulomb constant, whatever the scale
    CHECK(us.energy_unit_ev() * us.length_unit_m() ==
          doctest::Approx(coulomb_constant_ev_m()).epsilon(1e-15));
}

TEST_CASE("um <-> internal is the identity at the default scale") {
    const UnitSystem us = UnitSystem::micrometre_scale();
    for (double v : {0.0, 1.0, -3.7, 97.22274115, 1e-12, 4.5e8}) {
        CHECK(us.um_to_internal(v) == v);
        CHECK(us.internal_to_um(v) == v);
    }
}

TEST_CASE("um <-> internal are mutual inverses at any scale") {
    const UnitSystem us = UnitSystem::with_length_unit_m(3.14e-6);
    for (double v : {1.0, -250.0, 0.3333333333333333, 1e5}) {
        CHECK(us.internal_to_um(us.um_to_internal(v)) == doctest::Approx(v).epsilon(1e-15));
        CHECK(us.um_to_internal(us.internal_to_um(v)) == doctest::Approx(v).epsilon(1e-15));
    }
}

TEST_CASE("custom length unit rescales the energy unit inversely") {
    const UnitSystem us = UnitSystem::with_length_unit_m(5e-6);
    CHECK(us.energy_unit_ev() == doctest::Approx(2.8799290956851338e-4).epsilon(1e-15));
    // 5 um is exactly one internal unit
    CHECK(us.um_to_internal(5.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(us.internal_to_um(1.0) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(us.length_to_internal(5e-6) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(us.length_to_m(2.0) == doctest::Approx(1e-5).epsilon(1e-15));
}

TEST_CASE("energy and force conversions round-trip") {
    const UnitSystem us = UnitSystem::micrometre_scale();
    CHECK(us.energy_to_ev(1.0) == us.energy_unit_ev());
    CHECK(us.energy_to_internal(us.energy_unit_ev()) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(us.internal_to_mev(1.0) == doctest::Approx(1.4399645478425671).epsilon(1e-15));
    CHECK(us.mev_to_internal(us.internal_to_mev(0.37)) == doctest::Approx(0.37).epsilon(1e-15));
    // one internal force unit = energy_unit / length_unit
    CHECK(us.force_to_ev_per_m(1.0) ==
          doctest::Approx(us.energy_unit_ev() / us.length_unit_m()).epsilon(1e-15));
    CHECK(us.force_to_internal(us.force_to_ev_per_m(-2.5)) ==
          doctest::Approx(-2.5).epsilon(1e-15));
}

TEST_CASE("invalid length units are rejected") {
    CHECK_THROWS_AS(UnitSystem::with_length_unit_m(0.0), InvalidArgument);
    CHECK_THROWS_AS(UnitSystem::with_length_unit_m(-1e-6), InvalidArgument);
    CHECK_THROWS_AS(UnitSystem::with_length_unit_m(std::numeric_limits<double>::quiet_NaN()),
                    InvalidArgument);
    CHECK_THROWS_AS(UnitSystem::with_length_unit_m(std::numeric_limits<double>::infinity()),
                    InvalidArgument);
}

TEST_CASE("convert handles lengths, energies and forces") {
    const UnitSystem us = UnitSystem::micrometre_scale();
    CHECK(convert(3.0, Unit::micrometre, Unit::metre, us) == doctest::Approx(3e-6));
    CHECK(convert(2e-6, Unit::metre, Unit::micrometre, us) == doctest::Approx(2.0));
    CHECK(convert(7.0, Unit::micrometre, Unit::internal_length, us) == 7.0);
    CHECK(convert(1.0, Unit::electronvolt, Unit::millielectronvolt, us) ==
          doctest::Approx(1000.0));
    CHECK(convert(1.0, Unit::internal_energy, Unit::electronvolt, us) ==
          doctest::Approx(us.energy_unit_ev()));
    CHECK(convert(1.0, Unit::internal_force, Unit::ev_per_metre, us) ==
          doctest::Approx(us.force_to_ev_per_m(1.0)));
    // identity conversion is exact
    CHECK(convert(0.123456789, Unit::micrometre, Unit::micrometre, us) == 0.123456789);
}

TEST_CASE("pixel conversions require a pitch") {
    const UnitSystem us = UnitSystem::micrometre_scale();
    CHECK(convert(3.0, Unit::pixel, Unit::micrometre, us, 2.0) == doctest::Approx(6.0));
    CHECK(convert(6.0, Unit::micrometre, Unit::pixel, us, 2.0) == doctest::Approx(3.0));
    CHECK(convert(1.0, Unit::pixel, Unit::metre, us, 2.0) == doctest::Approx(2e-6));
    CHECK_THROWS_AS(convert(3.0, Unit::pixel, Unit::micrometre, us), InvalidArgument);
    CHECK_THROWS_AS(convert(3.0, Unit::micrometre, Unit::pixel, us), InvalidArgument);
    CHECK_THROWS_AS(convert(3.0, Unit::pixel, Unit::micrometre, us, 0.0), InvalidArgument);
    CHECK_THROWS_AS(convert(3.0, Unit::pixel, Unit::micrometre, us, -2.0), InvalidArgument);
}

TEST_CASE("convert rejects cross-dimension requests") {
    const UnitSystem us = UnitSystem::micrometre_scale();
    CHECK_THROWS_AS(convert(1.0, Unit::micrometre, Unit::electronvolt, us), InvalidArgument);
    CHECK_THROWS_AS(convert(1.0, Unit::internal_energy, Unit::metre, us), InvalidArgument);
    CHECK_THROWS_AS(convert(1.0, Unit::ev_per_metre, Unit::millielectronvolt, us),
                    InvalidArgument);
}
