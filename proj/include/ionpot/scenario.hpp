#ifndef IONPOT_SCENARIO_HPP
#define IONPOT_SCENARIO_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ionpot/equilibrium.hpp"
#include "ionpot/imaging.hpp"
#include "ionpot/isolation.hpp"
#include "ionpot/reconstruction.hpp"
#include "ionpot/trap.hpp"

namespace ionpot {

// Scenario configuration. All structs here hold the raw file values
// (lengths in micrometres, voltages in volts, analytic coefficients in
// internal units); conversions happen when library objects are built, so
// to_json round-trips bit-exactly and the config hash is stable across
// pipeline stages.

// External axial potential description. The optional park term is an
// auxiliary harmonic representing everything that holds the string at a
// station (endcaps, RF pseudopotential axial component); it belongs to the
// per-station background, so it cancels in same-station differences.
struct PotentialSpec {
    std::string kind = "harmonic";  // harmonic | quartic | trap

    double stiffness = 1.0;  // harmonic
    double centre_um = 0.0;

    double a = 1.0;  // quartic a x^4 - b x^2
    double b = 1.0;
    double tilt = 0.0;  // + tilt * x

    TrapGeometry geometry_um = TrapGeometry::five_segment_default();  // micrometres
    std::vector<double> voltages;                                     // baseline, volts

    std::optional<double> park_stiffness;
    double park_centre_um = 0.0;
};

// Perturbation schedule. For the trap kind, delta is volts applied along
// delta_pattern (default: +1 on `electrode`); for analytic kinds delta is
// the slope of an added tilt term. Stations reposition the park centre.
struct ScanSpec {
    std::size_t electrode = 2;
    std::vector<double> deltas;
    std::vector<double> delta_pattern;  // empty: unit vector on `electrode`
    std::vector<double> stations_um;    // empty: single station at park centre
};

struct SolverSpec {
    double gradient_tol = 1e-10;
    int max_iterations = 300;
    std::optional<std::array<double, 2>> window_um;
    std::vector<double> initial_positions_um;
    double max_gap_closure = 0.9;
    bool well_seeding_retry = true;

    SolverConfig to_config(const UnitSystem& units) const;
};

struct ReconSpec {
    double grid_um = 1.0;
    OffsetConvention offset = OffsetConvention::min_zero;
    double anchor_x_um = 0.0;
    SlopeRule slope_rule = SlopeRule::extremum_preserving;
    std::optional<MonteCarloOptions> monte_carlo;

    ReconstructOptions to_options(const UnitSystem& units) const;
};

struct IsolateSpec {
    double delta_min_v = 0.01;
    PairPolicy pairing = PairPolicy::all_pairs;
    SegmentWeighting weighting = SegmentWeighting::uniform;
    std::optional<double> grid_um;
    double voltage_match_tol_v = 1e-9;

    IsolationOptions to_options(const UnitSystem& units) const;
};

struct ShuttleSpec {
    double contour_mev = 0.4;
    double barrier_sigma_factor = 3.0;
    double barrier_floor = 1e-9;  // internal energy units
    std::optional<double> grid_um;

    ShuttleOptions to_options(const UnitSystem& units) const;
};

struct ImagingSpec {
    RenderConfig render;
    FitConfig fit;
};

struct ScenarioConfig {
    int schema_version = 1;
    std::uint64_t seed = 1;
    double length_unit_m = 1e-6;
    std::string output_units = "physical";  // physical | internal
    std::size_t ions = 20;

    PotentialSpec potential;
    ScanSpec scan;
    SolverSpec solver;
    ReconSpec recon;
    IsolateSpec isolate;
    ShuttleSpec shuttle;
    ImagingSpec imaging;

    UnitSystem units() const;

    // Canonical form: every field serialized, defaults included, raw values
    // verbatim. The config hash is FNV-1a 64 over this dump.
    nlohmann::json to_json() const;

    static ScenarioConfig from_json(const nlohmann::json& j);
    static ScenarioConfig from_file(const std::string& path);

    // Trap geometry converted to internal length units.
    TrapGeometry geometry_internal() const;

    // Voltage vector at a given delta (trap kind only).
    std::vector<double> voltages_at(double delta) const;

    // The external potential for one (delta, station) point. For analytic
    // kinds both the base term and delta*x tilt; for the trap kind the
    // superposed strips at voltages_at(delta). The park term is added when
    // configured; `station_centre_um` overrides its centre.
    Potential1D build_potential(double delta,
                                std::optional<double> station_centre_um) const;

    // Bounded window for the solver when none is configured: the potential
    // domain, or (trap) the strip span widened by 1.5 strip heights, or
    // (analytic) a generous margin around the confining centre — the
    // station centre when the string is parked there.
    Interval default_window(const Potential1D& potential,
                            std::optional<double> station_centre_um = std::nullopt) const;
};

// 64-bit FNV-1a of the canonical config dump, as 16 hex digits.
std::string config_hash_hex(const nlohmann::json& canonical);
std::string config_hash_hex(const ScenarioConfig& config);

// Offset-convention names used in config files and CSV metadata
// ("min-zero", "mean-zero", "anchor").
std::string offset_convention_name(OffsetConvention convention);
OffsetConvention offset_convention_from_name(const std::string& name);

// Resolve a config path: as given if it exists, else relative to
// $IONPOT_CONFIG_DIR when that is set.
std::string resolve_config_path(const std::string& path);

} // namespace ionpot

#endif
