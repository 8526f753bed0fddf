#ifndef IONPOT_UNITS_HPP
#define IONPOT_UNITS_HPP

#include <optional>

namespace ionpot {

// e^2 / (4 pi eps0) in eV*m, from CODATA e = 1.602176634e-19 C (exact) and
// eps0 = 8.8541878128e-12 F/m. All Coulomb arithmetic in this library runs
// in internal units where this constant is exactly 1.
double coulomb_constant_ev_m();

// Dimensionless internal unit system. Positions and energies inside the
// library are scaled such that the Coulomb constant for two unit charges is
// exactly 1; the energy unit is then pinned by the chosen length unit:
//
//   energy_unit_ev * length_unit_m = e^2/(4 pi eps0)  [eV*m]
//
// The default length unit is 1 um, which puts the energy unit at ~1.44 meV,
// a convenient scale for segmented-trap axial wells.
class UnitSystem {
public:
    // Length unit given in metres per internal unit. Throws InvalidArgument
    // for non-positive or non-finite values.
    static UnitSystem with_length_unit_m(double metres_per_unit);

    // 1 um length unit, ~1.4400 meV energy unit.
    static UnitSystem micrometre_scale();

    double length_unit_m() const { return length_unit_m_; }
    double energy_unit_ev() const { return energy_unit_ev_; }

    // Coulomb constant in internal units; exactly 1 by construction.
    double coulomb_constant_internal() const { return 1.0; }

    // Length conversions. um <-> internal use one shared factor, so they are
    // exact mutual inverses at the default scale (factor 1) and never drift
    // by more than rounding otherwise.
    double length_to_internal(double metres) const { return metres / length_unit_m_; }
    double length_to_m(double internal) const { return internal * length_unit_m_; }
    double um_to_internal(double um) const { return um * internal_per_um_; }
    double internal_to_um(double internal) const { return internal / internal_per_um_; }

    // Energy conversions.
    double energy_to_internal(double ev) const { return ev / energy_unit_ev_; }
    double energy_to_ev(double internal) const { return internal * energy_unit_ev_; }
    double mev_to_internal(double mev) const { return mev * 1e-3 / energy_unit_ev_; }
    double internal_to_mev(double internal) const { return internal * energy_unit_ev_ * 1e3; }

    // Force (energy / length) conversions.
    double force_to_internal(double ev_per_m) const {
        return ev_per_m * length_unit_m_ / energy_unit_ev_;
    }
    double force_to_ev_per_m(double internal) const {
        return internal * energy_unit_ev_ / length_unit_m_;
    }

private:
    explicit UnitSystem(double metres_per_unit);

    double length_unit_m_;
    double energy_unit_ev_;
    double internal_per_um_;
};

// Dimensioned units accepted by convert(). The first group are lengths, the
// second energies, the third forces; pixel lengths additionally require a
// pixel pitch.
enum class Unit {
    internal_length,
    metre,
    micrometre,
    pixel,
    internal_energy,
    electronvolt,
    millielectronvolt,
    internal_force,
    ev_per_metre,
};

// Linear unit conversion. Both units must share a dimension, otherwise
// InvalidArgument is thrown. Converting to or from Unit::pixel requires
// pixel_pitch_um.
double convert(double value, Unit from, Unit to, const UnitSystem& units,
               std::optional<double> pixel_pitch_um = std::nullopt);

} // namespace ionpot

#endif
