#ifndef IONPOT_ISOLATION_HPP
#define IONPOT_ISOLATION_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ionpot/equilibrium.hpp"
#include "ionpot/reconstruction.hpp"

namespace ionpot {

// One reconstructed curve taken at a known electrode setting. `voltages`
// is the full applied vector (perturbation included); `delta` is the
// perturbation on the electrode of interest relative to the scan baseline.
// `station` identifies the shared background configuration (string parking
// spot): only records from the same station may be differenced, since the
// background must cancel exactly.
struct MeasurementRecord {
    std::vector<double> voltages;  // volts, one per electrode
    double delta = 0.0;            // volts
    int station = 0;
    PotentialCurve curve;
};

// A sampled slice of [psi_a - psi_b] / (delta_a - delta_b) on the overlap of
// two record domains, known only up to one additive constant. Values live on
// a shared uniform grid; `first` indexes the segment's first grid point.
struct DifferenceSegment {
    std::size_t first = 0;
    std::vector<double> values;  // internal energy per volt
    std::size_t record_a = 0;
    std::size_t record_b = 0;

    std::size_t last() const { return first + values.size(); }  // one past end
};

enum class PairPolicy { all_pairs, adjacent_delta };
enum class SegmentWeighting { uniform, delta_squared };

struct IsolationOptions {
    double delta_min_v = 0.01;  // reject pairs closer than 10 mV
    PairPolicy pairing = PairPolicy::all_pairs;
    SegmentWeighting weighting = SegmentWeighting::uniform;
    std::optional<double> grid_spacing;  // default: finest source-curve step
    double voltage_match_tol_v = 1e-9;   // background-voltage equality check
};

// Stitched unit-voltage potential of one electrode with a pointwise spread
// estimate and per-point contribution count.
struct ElectrodeUnitPotential {
    std::vector<double> x;       // internal length
    std::vector<double> mean;    // internal energy per volt
    std::vector<double> spread;  // std dev across contributing segments
    std::vector<int> count;

    std::vector<double> mean_ev_per_v(const UnitSystem& units) const;
};

// psi(x, delta) over a delta scan, plus per-column well analysis.
struct ShuttleScanMap {
    std::vector<double> deltas;
    std::vector<double> x;
    // psi[d][k] at (deltas[d], x[k]); NaN where column d's curve does not
    // reach x[k].
    std::vector<std::vector<double>> psi;
    std::vector<std::vector<double>> minima;  // refined well positions per column
    std::vector<int> well_count;
    std::vector<bool> solved;                  // per-delta solver success
    std::vector<std::string> failure_messages; // empty string where solved
};

struct ShuttleOptions {
    // A second well only counts when its confining barrier beats
    // barrier_sigma_factor times the local curve sigma (or barrier_floor
    // when the curve carries no band).
    double barrier_sigma_factor = 3.0;
    double barrier_floor = 1e-9;  // internal energy units
    std::optional<double> grid_spacing;
};

// One polyline in (delta, x) space at one contour level.
struct ContourLine {
    double level = 0.0;
    std::vector<std::pair<double, double>> points;  // (delta, x)
};

// Shared uniform grid covering the union of record domains, spaced by the
// finest source-curve step unless overridden.
std::vector<double> common_grid(const std::vector<MeasurementRecord>& records,
                                std::optional<double> spacing = std::nullopt);

// Eq-difference of two records on `grid`, restricted to the domain overlap.
// Records must agree on every electrode except `electrode` and differ there
// by at least delta_min.
DifferenceSegment pairwise_difference(const MeasurementRecord& a,
                                      const MeasurementRecord& b,
                                      std::size_t electrode,
                                      std::span<const double> grid,
                                      const IsolationOptions& options = {});

// Additive constants minimizing the summed squared mismatch over all
// pairwise overlaps, gauge-fixed by offsets[0] = 0. Throws
// DisconnectedOverlap when the overlap graph has more than one component.
std::vector<double> align_offsets(const std::vector<DifferenceSegment>& segments);

// Pointwise mean / spread / count of the aligned segments on `grid`.
ElectrodeUnitPotential stitch_average(const std::vector<DifferenceSegment>& segments,
                                      const std::vector<double>& offsets,
                                      std::span<const double> grid,
                                      const std::vector<double>& weights = {});

// Full isolation pass: pair selection, differencing, alignment, stitching.
ElectrodeUnitPotential isolate_electrode(const std::vector<MeasurementRecord>& records,
                                         std::size_t electrode,
                                         const IsolationOptions& options = {});

// Delta scan in synthetic mode: solve + reconstruct per delta. Solver
// failures are recorded per column and do not abort the scan.
ShuttleScanMap shuttle_scan(const std::function<Potential1D(double)>& potential_for_delta,
                            const std::vector<double>& deltas, std::size_t ion_count,
                            const SolverConfig& solver, const ReconstructOptions& recon,
                            const ShuttleOptions& options = {},
                            const UnitSystem& units = UnitSystem::micrometre_scale());

// Delta scan in data mode: records already carry reconstructed curves.
ShuttleScanMap shuttle_scan_from_records(const std::vector<MeasurementRecord>& records,
                                         const ShuttleOptions& options = {});

// Level sets of the map at min + k*spacing, k = 1, 2, ... as polylines.
std::vector<ContourLine> equipotential_contours(const ShuttleScanMap& map, double spacing);

// Well positions of one sampled curve (local minima, parabolic refinement),
// filtered by the barrier threshold.
std::vector<double> curve_minima(std::span<const double> x, std::span<const double> psi,
                                 std::span<const double> sigma, const ShuttleOptions& options);

} // namespace ionpot

#endif
