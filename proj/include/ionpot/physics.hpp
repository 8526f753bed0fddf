#ifndef IONPOT_PHYSICS_HPP
#define IONPOT_PHYSICS_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "ionpot/potential.hpp"
#include "ionpot/units.hpp"

namespace ionpot {

// Ions closer than this (internal units) are treated as coincident and
// rejected before any 1/d^2 is formed.
inline constexpr double kMinIonSeparation = 1e-9;

// Ordered 1D Coulomb crystal: strictly increasing axial positions in
// internal length units. The unit system records how to convert in and out.
class IonString {
public:
    IonString(std::vector<double> positions, UnitSystem units);

    std::size_t count() const { return positions_.size(); }
    const std::vector<double>& positions() const { return positions_; }
    const UnitSystem& units() const { return units_; }

    std::vector<double> positions_um() const;

    static IonString from_um(const std::vector<double>& um, UnitSystem units);

private:
    std::vector<double> positions_;
    UnitSystem units_;
};

// One per-ion sample of the external force inferred from force balance.
struct ForceSample {
    double position = 0.0;  // internal length
    double force = 0.0;     // internal energy / length, positive toward +x
    std::size_t ion_index = 0;
};

// Net Coulomb force on ion i from all the others, internal units:
//   F_i = sum_{j != i} sign(x_i - x_j) / (x_i - x_j)^2
// Positive means a push toward +x.
double coulomb_force(const IonString& string, std::size_t i);

// U = sum_i psi(x_i) + sum_{i<j} 1/(x_j - x_i), internal units. Positions
// need not be ordered, but coincident ions are rejected.
double total_energy(std::span<const double> positions, const Potential1D& potential);

// Gradient dU/dx_i; component i is psi'(x_i) minus the Coulomb force on i,
// so it vanishes exactly at equilibrium.
std::vector<double> energy_gradient(std::span<const double> positions,
                                    const Potential1D& potential);

// Symmetric Hessian d2U/dx_i dx_j.
Eigen::MatrixXd energy_hessian(std::span<const double> positions,
                               const Potential1D& potential);

} // namespace ionpot

#endif
