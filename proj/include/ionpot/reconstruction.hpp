#ifndef IONPOT_RECONSTRUCTION_HPP
#define IONPOT_RECONSTRUCTION_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "ionpot/hermite.hpp"
#include "ionpot/physics.hpp"
#include "ionpot/units.hpp"

namespace ionpot {

// Output grid density: either a fixed spacing or a fixed point count over
// the curve's span. Exactly one should be set; spacing wins if both are.
struct GridSpec {
    std::optional<double> spacing;  // internal length units
    std::optional<int> count;

    std::vector<double> build(double lo, double hi) const;
};

// Additive-constant convention for reconstructed curves. The integration
// constant is unobservable, so every curve carries an explicit gauge.
enum class OffsetConvention {
    min_zero,   // min over the sample grid is exactly 0
    mean_zero,  // grid mean is 0
    anchored,   // psi(anchor_x) = 0
};

// Sampled potential-energy curve on a strictly increasing grid, internal
// units, defined only on the span of the data that produced it.
class PotentialCurve {
public:
    PotentialCurve(std::vector<double> x, std::vector<double> psi, UnitSystem units,
                   OffsetConvention offset = OffsetConvention::min_zero,
                   double anchor_x = 0.0);

    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& psi() const { return psi_; }
    const std::vector<double>& sigma() const { return sigma_; }
    bool has_band() const { return !sigma_.empty(); }
    const UnitSystem& units() const { return units_; }
    OffsetConvention offset_convention() const { return offset_; }
    double anchor_x() const { return anchor_x_; }

    std::size_t size() const { return x_.size(); }
    Interval domain() const { return {x_.front(), x_.back()}; }

    // Cubic interpolation of the stored samples; exact at the nodes.
    // Throws DomainError outside the domain.
    double value(double x) const;

    // Re-apply an offset convention; idempotent for the same convention.
    PotentialCurve with_offset(OffsetConvention convention, double anchor_x = 0.0) const;

    void set_band(std::vector<double> sigma);

private:
    std::vector<double> x_;
    std::vector<double> psi_;
    std::vector<double> sigma_;  // optional pointwise 1-sigma band
    UnitSystem units_;
    OffsetConvention offset_;
    double anchor_x_;
    CubicHermite interp_;
};

struct MonteCarloOptions {
    int replicas = 100;
    double sigma_um = 0.5;  // per-ion position jitter
    std::uint64_t seed = 1;
};

struct ReconstructOptions {
    GridSpec grid;  // default: 512 points over the string span
    OffsetConvention offset = OffsetConvention::min_zero;
    double anchor_x = 0.0;
    SlopeRule slope_rule = SlopeRule::extremum_preserving;
    std::optional<MonteCarloOptions> monte_carlo;
};

// Per-ion external force inferred from force balance: at equilibrium the
// external force on each ion is minus its Coulomb force. Needs n >= 1;
// integration downstream needs n >= 2.
std::vector<ForceSample> external_force_samples(const IonString& string);

// C^1 interpolant through the force samples (>= 2, strictly increasing).
CubicHermite interpolate_force(const std::vector<ForceSample>& samples,
                               SlopeRule rule = SlopeRule::extremum_preserving);

// psi(x) = -integral of the force interpolant, sampled on the output grid
// and gauged by the offset convention.
PotentialCurve integrate_potential(const CubicHermite& force, const GridSpec& grid,
                                   OffsetConvention offset, double anchor_x,
                                   const UnitSystem& units);

// Full inverse step: force samples -> interpolation -> exact integration.
// With monte_carlo set, jittered replicas give a pointwise sigma band.
PotentialCurve reconstruct(const IonString& string, const ReconstructOptions& options = {});

} // namespace ionpot

#endif
