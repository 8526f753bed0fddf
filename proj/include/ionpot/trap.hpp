#ifndef IONPOT_TRAP_HPP
#define IONPOT_TRAP_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "ionpot/potential.hpp"
#include "ionpot/units.hpp"

namespace ionpot {

// One DC electrode segment on the trap surface: [x0, x1] along the axis,
// internal length units.
struct Strip {
    double x0 = 0.0;
    double x1 = 0.0;

    double width() const { return x1 - x0; }
    double centre() const { return 0.5 * (x0 + x1); }
};

// Gapless planar segmented trap seen from a line at constant height above
// the surface. Unit potentials follow the closed form
//
//   u(x) = (1/pi) * [atan((x1 - x)/h) - atan((x0 - x)/h)]
//
// which is exact for an infinite grounded plane with one strip at 1 V and
// superposes exactly, so differencing fixtures built on it are linear to
// machine precision.
struct TrapGeometry {
    std::vector<Strip> strips;  // ordered, non-overlapping
    double height = 100.0;      // ion height above the surface

    // Accepted DC range, volts.
    double voltage_min = -20.0;
    double voltage_max = 60.0;

    std::size_t electrode_count() const { return strips.size(); }

    // n equal-width strips tiling [x_start, x_start + n*width].
    static TrapGeometry uniform(std::size_t n, double strip_width, double height,
                                double x_start);

    // Five 100 um segments centred on the origin at 100 um height
    // (micrometre-scale internal units).
    static TrapGeometry five_segment_default();

    void validate() const;
};

// Dimensionless unit potential of one strip (per volt, per unit charge);
// in (0, 1), tends to 0 far away and to 1 deep over the strip as h -> 0.
double strip_unit_potential(double x, const Strip& strip, double height);
double strip_unit_potential_deriv(double x, const Strip& strip, double height);
double strip_unit_potential_second_deriv(double x, const Strip& strip, double height);

// Potential energy of a unit positive charge on the axis in internal energy
// units: sum_m V_m * u_m(x) converted from eV. Voltages in volts; one per
// strip, each inside the geometry's accepted range.
Potential1D axial_potential(const TrapGeometry& geometry,
                            const std::vector<double>& voltages_v,
                            const UnitSystem& units);

// Named analytic test families used as solver and reconstruction ground
// truth ("harmonic", "quartic", "tilt").
Potential1D test_potential(const std::string& family, const std::vector<double>& params);

} // namespace ionpot

#endif
