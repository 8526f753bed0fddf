#include "ionpot/units.hpp"

#include <cmath>
#include <numbers>

#include "ionpot/errors.hpp"

namespace ionpot {

double coulomb_constant_ev_m() {
    // kappa[eV*m] = e[C] / (4 pi eps0): the e^2 turns into eV via the J->eV
    // division by e.
    constexpr double elementary_charge_c = 1.602176634e-19;
    constexpr double vacuum_permittivity = 8.8541878128e-12;
    return elementary_charge_c / (4.0 * std::numbers::pi * vacuum_permittivity);
}

UnitSystem::UnitSystem(double metres_per_unit)
    : length_unit_m_(metres_per_unit),
      energy_unit_ev_(coulomb_constant_ev_m() / metres_per_unit),
      internal_per_um_(1e-6 / metres_per_unit) {}

UnitSystem UnitSystem::with_length_unit_m(double metres_per_unit) {
    if (!(metres_per_unit > 0.0) || !std::isfinite(metres_per_unit)) {
        throw InvalidArgument("length unit must be positive and finite");
    }
    return UnitSystem(metres_per_unit);
}

UnitSystem UnitSystem::micrometre_scale() {
    return UnitSystem(1e-6);
}

namespace {

enum class Dimension { length, energy, force };

Dimension dimension_of(Unit u) {
    switch (u) {
        case Unit::internal_length:
        case Unit::metre:
        case Unit::micrometre:
        case Unit::pixel:
            return Dimension::length;
        case Unit::internal_energy:
        case Unit::electronvolt:
        case Unit::millielectronvolt:
            return Dimension::energy;
        case Unit::internal_force:
        case Unit::ev_per_metre:
            return Dimension::force;
    }
    throw InvalidArgument("unknown unit");
}

// Scale factor turning one of `u` into internal units.
double to_internal_factor(Unit u, const UnitSystem& units,
                          const std::optional<double>& pixel_pitch_um) {
    switch (u) {
        case Unit::internal_length:
            return 1.0;
        case Unit::metre:
            return 1.0 / units.length_unit_m();
        case Unit::micrometre:
            return 1e-6 / units.length_unit_m();
        case Unit::pixel: {
            if (!pixel_pitch_um) {
                throw InvalidArgument("pixel conversion requires a pixel pitch");
            }
            return *pixel_pitch_um * 1e-6 / units.length_unit_m();
        }
        case Unit::internal_energy:
            return 1.0;
        case Unit::electronvolt:
            return 1.0 / units.energy_unit_ev();
        case Unit::millielectronvolt:
            return 1e-3 / units.energy_unit_ev();
        case Unit::internal_force:
            return 1.0;
        case Unit::ev_per_metre:
            return units.length_unit_m() / units.energy_unit_ev();
    }
    throw InvalidArgument("unknown unit");
}

} // namespace

double convert(double value, Unit from, Unit to, const UnitSystem& units,
               std::optional<double> pixel_pitch_um) {
    if (dimension_of(from) != dimension_of(to)) {
        throw InvalidArgument("unit conversion across dimensions");
    }
    if (from == to) {
        return value;
    }
    const double internal = value * to_internal_factor(from, units, pixel_pitch_um);
    return internal / to_internal_factor(to, units, pixel_pitch_um);
}

} // namespace ionpot
