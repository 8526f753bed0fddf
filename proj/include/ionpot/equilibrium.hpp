#ifndef IONPOT_EQUILIBRIUM_HPP
#define IONPOT_EQUILIBRIUM_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "ionpot/physics.hpp"
#include "ionpot/potential.hpp"
#include "ionpot/units.hpp"

namespace ionpot {

struct SolverConfig {
    double gradient_tol = 1e-10;  // max |dU/dx_i|, internal units
    int max_iterations = 300;

    // Search window; defaults to the potential's own domain, which must then
    // be bounded.
    std::optional<Interval> search_interval;

    // User-supplied starting positions; otherwise ions start equally spaced
    // across the central 60% of the search window.
    std::vector<double> initial_positions;

    // Fraction-to-boundary factor: a step may close at most this fraction of
    // any inter-ion gap or the gap to the window edge.
    double max_gap_closure = 0.9;

    // Retry with ions seeded into individual wells when the plain solve
    // fails or lands on a saddle.
    bool well_seeding_retry = true;
};

struct EquilibriumResult {
    IonString string;
    double residual_norm = 0.0;  // max |gradient| at the solution
    int iterations = 0;
    bool converged = false;
    bool stable = false;  // Hessian positive definite at the solution
};

// Minimizes the string energy with a damped, ordering-preserving Newton
// iteration (gradient-descent fallback whenever the Hessian is indefinite).
//
// Throws InvalidArgument for n == 0, ConfigError for an unbounded window and
// NumericError if the window holds no potential well at all. Plain
// non-convergence is reported through the result flags, not thrown.
EquilibriumResult solve_equilibrium(const Potential1D& potential, std::size_t n,
                                    const SolverConfig& config = {},
                                    const UnitSystem& units = UnitSystem::micrometre_scale());

// True iff the Hessian at these positions is positive definite.
bool hessian_positive_definite(std::span<const double> positions,
                               const Potential1D& potential);

bool is_stable(const EquilibriumResult& result, const Potential1D& potential);

// Local minima of psi located by grid scan plus parabolic refinement.
// Used for well seeding and by the shuttle-scan classifier.
std::vector<double> find_potential_wells(const Potential1D& potential,
                                         Interval window, std::size_t grid_points = 2048);

} // namespace ionpot

#endif
