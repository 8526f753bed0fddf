#include "ionpot/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>

#include "ionpot/errors.hpp"

namespace ionpot {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError("config: " + where + ": " + what);
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(where, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* key : allowed)
            if (it.key() == key) { known = true; break; }
        if (!known) fail(where, "unknown key '" + it.key() + "'");
    }
}

double get_num(const json& j, const std::string& where, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number()) fail(where, std::string("'") + key + "' must be a number");
    return v.get<double>();
}

int get_int(const json& j, const std::string& where, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer()) fail(where, std::string("'") + key + "' must be an integer");
    return v.get<int>();
}

std::uint64_t get_u64(const json& j, const std::string& where, const char* key,
                      std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0 &&
                                   !v.is_number_unsigned()))
        fail(where, std::string("'") + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

bool get_bool(const json& j, const std::string& where, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean()) fail(where, std::string("'") + key + "' must be a boolean");
    return v.get<bool>();
}

std::string get_str(const json& j, const std::string& where, const char* key,
                    const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_string()) fail(where, std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<double> get_num_vec(const json& j, const std::string& where, const char* key,
                                std::vector<double> fallback = {}) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    const json& v = j.at(key);
    if (!v.is_array()) fail(where, std::string("'") + key + "' must be an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const json& e : v) {
        if (!e.is_number()) fail(where, std::string("'") + key + "' must be an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

OffsetConvention parse_offset(const std::string& s, const std::string& where) {
    if (s == "min-zero") return OffsetConvention::min_zero;
    if (s == "mean-zero") return OffsetConvention::mean_zero;
    if (s == "anchor") return OffsetConvention::anchored;
    fail(where, "offset must be one of min-zero, mean-zero, anchor (got '" + s + "')");
}

std::string slope_rule_name(SlopeRule r) {
    return r == SlopeRule::fritsch_carlson ? "fritsch-carlson" : "extremum-preserving";
}

SlopeRule parse_slope_rule(const std::string& s, const std::string& where) {
    if (s == "fritsch-carlson") return SlopeRule::fritsch_carlson;
    if (s == "extremum-preserving") return SlopeRule::extremum_preserving;
    fail(where, "slope_rule must be fritsch-carlson or extremum-preserving (got '" + s + "')");
}

std::string pairing_name(PairPolicy p) {
    return p == PairPolicy::adjacent_delta ? "adjacent-delta" : "all-pairs";
}

PairPolicy parse_pairing(const std::string& s, const std::string& where) {
    if (s == "all-pairs") return PairPolicy::all_pairs;
    if (s == "adjacent-delta") return PairPolicy::adjacent_delta;
    fail(where, "pairing must be all-pairs or adjacent-delta (got '" + s + "')");
}

std::string weighting_name(SegmentWeighting w) {
    return w == SegmentWeighting::delta_squared ? "delta-squared" : "uniform";
}

SegmentWeighting parse_weighting(const std::string& s, const std::string& where) {
    if (s == "uniform") return SegmentWeighting::uniform;
    if (s == "delta-squared") return SegmentWeighting::delta_squared;
    fail(where, "weighting must be uniform or delta-squared (got '" + s + "')");
}

PotentialSpec parse_potential(const json& j) {
    PotentialSpec spec;
    if (j.is_null()) return spec;
    check_keys(j, "potential",
               {"kind", "stiffness", "centre_um", "a", "b", "tilt", "geometry", "voltages",
                "park"});
    spec.kind = get_str(j, "potential", "kind", spec.kind);
    if (spec.kind != "harmonic" && spec.kind != "quartic" && spec.kind != "trap")
        fail("potential", "kind must be harmonic, quartic or trap (got '" + spec.kind + "')");

    spec.stiffness = get_num(j, "potential", "stiffness", spec.stiffness);
    spec.centre_um = get_num(j, "potential", "centre_um", spec.centre_um);
    spec.a = get_num(j, "potential", "a", spec.a);
    spec.b = get_num(j, "potential", "b", spec.b);
    spec.tilt = get_num(j, "potential", "tilt", spec.tilt);

    if (j.contains("geometry") && !j.at("geometry").is_null()) {
        const json& g = j.at("geometry");
        check_keys(g, "potential.geometry",
                   {"strips_um", "height_um", "voltage_min", "voltage_max"});
        TrapGeometry geom;
        geom.height = get_num(g, "potential.geometry", "height_um", 100.0);
        geom.voltage_min = get_num(g, "potential.geometry", "voltage_min", geom.voltage_min);
        geom.voltage_max = get_num(g, "potential.geometry", "voltage_max", geom.voltage_max);
        if (!g.contains("strips_um") || !g.at("strips_um").is_array())
            fail("potential.geometry", "'strips_um' must be an array of [x0, x1] pairs");
        for (const json& s : g.at("strips_um")) {
            if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number())
                fail("potential.geometry", "'strips_um' must be an array of [x0, x1] pairs");
            geom.strips.push_back({s[0].get<double>(), s[1].get<double>()});
        }
        geom.validate();
        spec.geometry_um = geom;
    }

    spec.voltages = get_num_vec(j, "potential", "voltages");

    if (j.contains("park") && !j.at("park").is_null()) {
        const json& p = j.at("park");
        check_keys(p, "potential.park", {"stiffness", "centre_um"});
        double k = get_num(p, "potential.park", "stiffness", 1.0);
        if (!(k > 0.0)) fail("potential.park", "stiffness must be positive");
        spec.park_stiffness = k;
        spec.park_centre_um = get_num(p, "potential.park", "centre_um", 0.0);
    }

    if (spec.kind == "trap") {
        if (spec.voltages.empty())
            fail("potential", "trap kind needs a 'voltages' array (one entry per strip)");
        if (spec.voltages.size() != spec.geometry_um.strips.size())
            fail("potential", "voltages count does not match the strip count");
    }
    return spec;
}

ScanSpec parse_scan(const json& j, const PotentialSpec& pot) {
    ScanSpec scan;
    if (j.is_null()) return scan;
    check_keys(j, "scan", {"electrode", "deltas", "delta_pattern", "stations_um"});
    int e = get_int(j, "scan", "electrode", int(scan.electrode));
    if (e < 0) fail("scan", "electrode must be non-negative");
    scan.electrode = std::size_t(e);
    scan.deltas = get_num_vec(j, "scan", "deltas");
    scan.delta_pattern = get_num_vec(j, "scan", "delta_pattern");
    scan.stations_um = get_num_vec(j, "scan", "stations_um");
    if (pot.kind == "trap") {
        if (scan.electrode >= pot.geometry_um.strips.size())
            fail("scan", "electrode index is out of range for the geometry");
        if (!scan.delta_pattern.empty() &&
            scan.delta_pattern.size() != pot.geometry_um.strips.size())
            fail("scan", "delta_pattern length does not match the strip count");
    }
    for (double d : scan.deltas)
        if (!std::isfinite(d)) fail("scan", "deltas must be finite");
    return scan;
}

SolverSpec parse_solver(const json& j) {
    SolverSpec spec;
    if (j.is_null()) return spec;
    check_keys(j, "solver",
               {"gradient_tol", "max_iterations", "window_um", "initial_positions_um",
                "max_gap_closure", "well_seeding_retry"});
    spec.gradient_tol = get_num(j, "solver", "gradient_tol", spec.gradient_tol);
    spec.max_iterations = get_int(j, "solver", "max_iterations", spec.max_iterations);
    spec.max_gap_closure = get_num(j, "solver", "max_gap_closure", spec.max_gap_closure);
    spec.well_seeding_retry = get_bool(j, "solver", "well_seeding_retry",
                                       spec.well_seeding_retry);
    if (j.contains("window_um") && !j.at("window_um").is_null()) {
        std::vector<double> w = get_num_vec(j, "solver", "window_um");
        if (w.size() != 2 || !(w[0] < w[1]))
            fail("solver", "window_um must be [lo, hi] with lo < hi");
        spec.window_um = {w[0], w[1]};
    }
    spec.initial_positions_um = get_num_vec(j, "solver", "initial_positions_um");
    return spec;
}

ReconSpec parse_recon(const json& j, std::uint64_t seed) {
    ReconSpec spec;
    if (j.is_null()) return spec;
    check_keys(j, "reconstruct",
               {"grid_um", "offset", "anchor_x_um", "slope_rule", "monte_carlo"});
    spec.grid_um = get_num(j, "reconstruct", "grid_um", spec.grid_um);
    if (!(spec.grid_um > 0.0)) fail("reconstruct", "grid_um must be positive");
    spec.offset = parse_offset(get_str(j, "reconstruct", "offset", offset_convention_name(spec.offset)),
                               "reconstruct");
    spec.anchor_x_um = get_num(j, "reconstruct", "anchor_x_um", spec.anchor_x_um);
    spec.slope_rule = parse_slope_rule(
        get_str(j, "reconstruct", "slope_rule", slope_rule_name(spec.slope_rule)),
        "reconstruct");
    if (j.contains("monte_carlo") && !j.at("monte_carlo").is_null()) {
        const json& m = j.at("monte_carlo");
        check_keys(m, "reconstruct.monte_carlo", {"replicas", "sigma_um", "seed"});
        MonteCarloOptions mc;
        mc.replicas = get_int(m, "reconstruct.monte_carlo", "replicas", mc.replicas);
        mc.sigma_um = get_num(m, "reconstruct.monte_carlo", "sigma_um", mc.sigma_um);
        mc.seed = get_u64(m, "reconstruct.monte_carlo", "seed", seed);
        if (mc.replicas < 2) fail("reconstruct.monte_carlo", "replicas must be >= 2");
        if (!(mc.sigma_um >= 0.0)) fail("reconstruct.monte_carlo", "sigma_um must be >= 0");
        spec.monte_carlo = mc;
    }
    return spec;
}

IsolateSpec parse_isolate(const json& j) {
    IsolateSpec spec;
    if (j.is_null()) return spec;
    check_keys(j, "isolate",
               {"delta_min_v", "pairing", "weighting", "grid_um", "voltage_match_tol_v"});
    spec.delta_min_v = get_num(j, "isolate", "delta_min_v", spec.delta_min_v);
    if (!(spec.delta_min_v >= 0.0)) fail("isolate", "delta_min_v must be >= 0");
    spec.pairing = parse_pairing(get_str(j, "isolate", "pairing", pairing_name(spec.pairing)),
                                 "isolate");
    spec.weighting = parse_weighting(
        get_str(j, "isolate", "weighting", weighting_name(spec.weighting)), "isolate");
    if (j.contains("grid_um") && !j.at("grid_um").is_null()) {
        double g = get_num(j, "isolate", "grid_um", 1.0);
        if (!(g > 0.0)) fail("isolate", "grid_um must be positive");
        spec.grid_um = g;
    }
    spec.voltage_match_tol_v = get_num(j, "isolate", "voltage_match_tol_v",
                                       spec.voltage_match_tol_v);
    return spec;
}

ShuttleSpec parse_shuttle(const json& j) {
    ShuttleSpec spec;
    if (j.is_null()) return spec;
    check_keys(j, "shuttle",
               {"contour_mev", "barrier_sigma_factor", "barrier_floor", "grid_um"});
    spec.contour_mev = get_num(j, "shuttle", "contour_mev", spec.contour_mev);
    if (!(spec.contour_mev > 0.0)) fail("shuttle", "contour_mev must be positive");
    spec.barrier_sigma_factor =
        get_num(j, "shuttle", "barrier_sigma_factor", spec.barrier_sigma_factor);
    spec.barrier_floor = get_num(j, "shuttle", "barrier_floor", spec.barrier_floor);
    if (j.contains("grid_um") && !j.at("grid_um").is_null()) {
        double g = get_num(j, "shuttle", "grid_um", 1.0);
        if (!(g > 0.0)) fail("shuttle", "grid_um must be positive");
        spec.grid_um = g;
    }
    return spec;
}

ImagingSpec parse_imaging(const json& j, std::uint64_t seed) {
    ImagingSpec spec;
    spec.render.seed = seed;
    if (j.is_null()) return spec;
    check_keys(j, "imaging", {"render", "fit"});
    if (j.contains("render") && !j.at("render").is_null()) {
        const json& r = j.at("render");
        check_keys(r, "imaging.render",
                   {"width", "height", "pitch_um", "psf_sigma_um", "peak_counts",
                    "exposure_ms", "poisson_noise", "row_centre_px", "background"});
        RenderConfig& rc = spec.render;
        rc.width = get_int(r, "imaging.render", "width", rc.width);
        rc.height = get_int(r, "imaging.render", "height", rc.height);
        rc.pitch_um = get_num(r, "imaging.render", "pitch_um", rc.pitch_um);
        rc.psf_sigma_um = get_num(r, "imaging.render", "psf_sigma_um", rc.psf_sigma_um);
        rc.peak_counts = get_num(r, "imaging.render", "peak_counts", rc.peak_counts);
        rc.exposure_ms = get_num(r, "imaging.render", "exposure_ms", rc.exposure_ms);
        rc.poisson_noise = get_bool(r, "imaging.render", "poisson_noise", rc.poisson_noise);
        rc.row_centre_px = get_num(r, "imaging.render", "row_centre_px", rc.row_centre_px);
        if (r.contains("background") && !r.at("background").is_null()) {
            const json& b = r.at("background");
            check_keys(b, "imaging.render.background",
                       {"offset", "slope", "vignette_amp", "vignette_sigma_px"});
            BackgroundModel& bg = rc.background;
            bg.offset = get_num(b, "imaging.render.background", "offset", bg.offset);
            bg.slope = get_num(b, "imaging.render.background", "slope", bg.slope);
            bg.vignette_amp =
                get_num(b, "imaging.render.background", "vignette_amp", bg.vignette_amp);
            bg.vignette_sigma_px = get_num(b, "imaging.render.background", "vignette_sigma_px",
                                           bg.vignette_sigma_px);
        }
    }
    if (j.contains("fit") && !j.at("fit").is_null()) {
        const json& f = j.at("fit");
        check_keys(f, "imaging.fit",
                   {"background_window", "detection_threshold", "psf_sigma_px",
                    "merge_separation_px", "max_refine_iterations"});
        FitConfig& fc = spec.fit;
        fc.background_window = get_int(f, "imaging.fit", "background_window",
                                       fc.background_window);
        fc.detection_threshold =
            get_num(f, "imaging.fit", "detection_threshold", fc.detection_threshold);
        fc.psf_sigma_px = get_num(f, "imaging.fit", "psf_sigma_px", fc.psf_sigma_px);
        fc.merge_separation_px =
            get_num(f, "imaging.fit", "merge_separation_px", fc.merge_separation_px);
        fc.max_refine_iterations =
            get_int(f, "imaging.fit", "max_refine_iterations", fc.max_refine_iterations);
    }
    return spec;
}

} // namespace

SolverConfig SolverSpec::to_config(const UnitSystem& units) const {
    SolverConfig cfg;
    cfg.gradient_tol = gradient_tol;
    cfg.max_iterations = max_iterations;
    cfg.max_gap_closure = max_gap_closure;
    cfg.well_seeding_retry = well_seeding_retry;
    if (window_um)
        cfg.search_interval = Interval{units.um_to_internal((*window_um)[0]),
                                       units.um_to_internal((*window_um)[1])};
    for (double x : initial_positions_um)
        cfg.initial_positions.push_back(units.um_to_internal(x));
    return cfg;
}

ReconstructOptions ReconSpec::to_options(const UnitSystem& units) const {
    ReconstructOptions opt;
    opt.grid.spacing = units.um_to_internal(grid_um);
    opt.offset = offset;
    opt.anchor_x = units.um_to_internal(anchor_x_um);
    opt.slope_rule = slope_rule;
    opt.monte_carlo = monte_carlo;
    return opt;
}

IsolationOptions IsolateSpec::to_options(const UnitSystem& units) const {
    IsolationOptions opt;
    opt.delta_min_v = delta_min_v;
    opt.pairing = pairing;
    opt.weighting = weighting;
    if (grid_um) opt.grid_spacing = units.um_to_internal(*grid_um);
    opt.voltage_match_tol_v = voltage_match_tol_v;
    return opt;
}

ShuttleOptions ShuttleSpec::to_options(const UnitSystem& units) const {
    ShuttleOptions opt;
    opt.barrier_sigma_factor = barrier_sigma_factor;
    opt.barrier_floor = barrier_floor;
    if (grid_um) opt.grid_spacing = units.um_to_internal(*grid_um);
    return opt;
}

UnitSystem ScenarioConfig::units() const {
    return UnitSystem::with_length_unit_m(length_unit_m);
}

ScenarioConfig ScenarioConfig::from_json(const json& j) {
    check_keys(j, "top level",
               {"schema_version", "seed", "units", "ions", "potential", "scan", "solver",
                "reconstruct", "isolate", "shuttle", "imaging"});
    ScenarioConfig cfg;
    cfg.schema_version = get_int(j, "top level", "schema_version", cfg.schema_version);
    if (cfg.schema_version != 1)
        fail("top level", "unsupported schema_version (expected 1)");
    cfg.seed = get_u64(j, "top level", "seed", cfg.seed);

    if (j.contains("units") && !j.at("units").is_null()) {
        const json& u = j.at("units");
        check_keys(u, "units", {"length_unit_m", "output"});
        cfg.length_unit_m = get_num(u, "units", "length_unit_m", cfg.length_unit_m);
        if (!(cfg.length_unit_m > 0.0) || !std::isfinite(cfg.length_unit_m))
            fail("units", "length_unit_m must be positive and finite");
        cfg.output_units = get_str(u, "units", "output", cfg.output_units);
        if (cfg.output_units != "physical" && cfg.output_units != "internal")
            fail("units", "output must be physical or internal");
    }

    int ions = get_int(j, "top level", "ions", int(cfg.ions));
    if (ions < 1) fail("top level", "ions must be >= 1");
    cfg.ions = std::size_t(ions);

    cfg.potential = parse_potential(j.contains("potential") ? j.at("potential") : json());
    cfg.scan = parse_scan(j.contains("scan") ? j.at("scan") : json(), cfg.potential);
    cfg.solver = parse_solver(j.contains("solver") ? j.at("solver") : json());
    cfg.recon = parse_recon(j.contains("reconstruct") ? j.at("reconstruct") : json(), cfg.seed);
    cfg.isolate = parse_isolate(j.contains("isolate") ? j.at("isolate") : json());
    cfg.shuttle = parse_shuttle(j.contains("shuttle") ? j.at("shuttle") : json());
    cfg.imaging = parse_imaging(j.contains("imaging") ? j.at("imaging") : json(), cfg.seed);
    return cfg;
}

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
    const std::string resolved = resolve_config_path(path);
    std::ifstream in(resolved);
    if (!in) throw IoError("cannot open config file '" + resolved + "'");
    json j;
    try {
        j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + resolved + "': " + e.what());
    }
    return from_json(j);
}

json ScenarioConfig::to_json() const {
    json j;
    j["schema_version"] = schema_version;
    j["seed"] = seed;
    j["units"] = {{"length_unit_m", length_unit_m}, {"output", output_units}};
    j["ions"] = ions;

    json pot;
    pot["kind"] = potential.kind;
    pot["stiffness"] = potential.stiffness;
    pot["centre_um"] = potential.centre_um;
    pot["a"] = potential.a;
    pot["b"] = potential.b;
    pot["tilt"] = potential.tilt;
    json strips = json::array();
    for (const Strip& s : potential.geometry_um.strips) strips.push_back({s.x0, s.x1});
    pot["geometry"] = {{"strips_um", strips},
                       {"height_um", potential.geometry_um.height},
                       {"voltage_min", potential.geometry_um.voltage_min},
                       {"voltage_max", potential.geometry_um.voltage_max}};
    pot["voltages"] = potential.voltages;
    if (potential.park_stiffness)
        pot["park"] = {{"stiffness", *potential.park_stiffness},
                       {"centre_um", potential.park_centre_um}};
    else
        pot["park"] = nullptr;
    j["potential"] = pot;

    j["scan"] = {{"electrode", scan.electrode},
                 {"deltas", scan.deltas},
                 {"delta_pattern", scan.delta_pattern},
                 {"stations_um", scan.stations_um}};

    json sol;
    sol["gradient_tol"] = solver.gradient_tol;
    sol["max_iterations"] = solver.max_iterations;
    if (solver.window_um)
        sol["window_um"] = {(*solver.window_um)[0], (*solver.window_um)[1]};
    else
        sol["window_um"] = nullptr;
    sol["initial_positions_um"] = solver.initial_positions_um;
    sol["max_gap_closure"] = solver.max_gap_closure;
    sol["well_seeding_retry"] = solver.well_seeding_retry;
    j["solver"] = sol;

    json rec;
    rec["grid_um"] = recon.grid_um;
    rec["offset"] = offset_convention_name(recon.offset);
    rec["anchor_x_um"] = recon.anchor_x_um;
    rec["slope_rule"] = slope_rule_name(recon.slope_rule);
    if (recon.monte_carlo)
        rec["monte_carlo"] = {{"replicas", recon.monte_carlo->replicas},
                              {"sigma_um", recon.monte_carlo->sigma_um},
                              {"seed", recon.monte_carlo->seed}};
    else
        rec["monte_carlo"] = nullptr;
    j["reconstruct"] = rec;

    json iso;
    iso["delta_min_v"] = isolate.delta_min_v;
    iso["pairing"] = pairing_name(isolate.pairing);
    iso["weighting"] = weighting_name(isolate.weighting);
    if (isolate.grid_um)
        iso["grid_um"] = *isolate.grid_um;
    else
        iso["grid_um"] = nullptr;
    iso["voltage_match_tol_v"] = isolate.voltage_match_tol_v;
    j["isolate"] = iso;

    json shu;
    shu["contour_mev"] = shuttle.contour_mev;
    shu["barrier_sigma_factor"] = shuttle.barrier_sigma_factor;
    shu["barrier_floor"] = shuttle.barrier_floor;
    if (shuttle.grid_um)
        shu["grid_um"] = *shuttle.grid_um;
    else
        shu["grid_um"] = nullptr;
    j["shuttle"] = shu;

    const RenderConfig& rc = imaging.render;
    const FitConfig& fc = imaging.fit;
    j["imaging"] = {
        {"render",
         {{"width", rc.width},
          {"height", rc.height},
          {"pitch_um", rc.pitch_um},
          {"psf_sigma_um", rc.psf_sigma_um},
          {"peak_counts", rc.peak_counts},
          {"exposure_ms", rc.exposure_ms},
          {"poisson_noise", rc.poisson_noise},
          {"row_centre_px", rc.row_centre_px},
          {"background",
           {{"offset", rc.background.offset},
            {"slope", rc.background.slope},
            {"vignette_amp", rc.background.vignette_amp},
            {"vignette_sigma_px", rc.background.vignette_sigma_px}}}}},
        {"fit",
         {{"background_window", fc.background_window},
          {"detection_threshold", fc.detection_threshold},
          {"psf_sigma_px", fc.psf_sigma_px},
          {"merge_separation_px", fc.merge_separation_px},
          {"max_refine_iterations", fc.max_refine_iterations}}}};
    return j;
}

TrapGeometry ScenarioConfig::geometry_internal() const {
    const UnitSystem us = units();
    TrapGeometry geom = potential.geometry_um;
    geom.height = us.um_to_internal(geom.height);
    for (Strip& s : geom.strips) {
        s.x0 = us.um_to_internal(s.x0);
        s.x1 = us.um_to_internal(s.x1);
    }
    return geom;
}

std::vector<double> ScenarioConfig::voltages_at(double delta) const {
    if (potential.kind != "trap")
        throw InvalidArgument("voltages_at is only meaningful for the trap kind");
    std::vector<double> v = potential.voltages;
    if (scan.delta_pattern.empty()) {
        if (scan.electrode >= v.size())
            throw ConfigError("scan electrode index is out of range");
        v[scan.electrode] += delta;
    } else {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += delta * scan.delta_pattern[i];
    }
    return v;
}

Potential1D ScenarioConfig::build_potential(double delta,
                                            std::optional<double> station_centre_um) const {
    const UnitSystem us = units();
    Potential1D base = [&] {
        if (potential.kind == "trap")
            return axial_potential(geometry_internal(), voltages_at(delta), us);
        if (potential.kind == "harmonic") {
            Potential1D p = Potential1D::harmonic(potential.stiffness,
                                                  us.um_to_internal(potential.centre_um));
            if (potential.tilt != 0.0 || delta != 0.0)
                p = p + Potential1D::linear_tilt(potential.tilt + delta);
            return p;
        }
        Potential1D p = Potential1D::quartic(potential.a, potential.b);
        if (potential.tilt != 0.0 || delta != 0.0)
            p = p + Potential1D::linear_tilt(potential.tilt + delta);
        return p;
    }();

    if (potential.park_stiffness) {
        double centre_um = station_centre_um.value_or(potential.park_centre_um);
        base = base + Potential1D::harmonic(*potential.park_stiffness,
                                            us.um_to_internal(centre_um));
    }
    return base;
}

Interval ScenarioConfig::default_window(const Potential1D& pot,
                                        std::optional<double> station_centre_um) const {
    const UnitSystem us = units();
    if (solver.window_um)
        return {us.um_to_internal((*solver.window_um)[0]),
                us.um_to_internal((*solver.window_um)[1])};
    if (pot.domain().bounded()) return pot.domain();
    if (potential.kind == "trap") {
        const TrapGeometry geom = geometry_internal();
        double pad = 1.5 * geom.height;
        return {geom.strips.front().x0 - pad, geom.strips.back().x1 + pad};
    }
    // Analytic kinds: centre the window on the confining term and size it
    // with a large margin over the expected string extent ~ (n^2/k)^(1/3).
    double k = potential.kind == "harmonic" ? potential.stiffness
                                            : std::max(4.0 * potential.b, 1e-6);
    double centre = potential.kind == "harmonic" ? us.um_to_internal(potential.centre_um) : 0.0;
    if (potential.park_stiffness) {
        k = std::max(k, *potential.park_stiffness);
        centre = us.um_to_internal(station_centre_um.value_or(potential.park_centre_um));
    }
    double w = std::max(20.0, 10.0 * std::cbrt(double(ions) * double(ions) /
                                               std::max(k, 1e-6)));
    return {centre - w, centre + w};
}

std::string config_hash_hex(const json& canonical) {
    const std::string dump = canonical.dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string config_hash_hex(const ScenarioConfig& config) {
    return config_hash_hex(config.to_json());
}

std::string offset_convention_name(OffsetConvention convention) {
    switch (convention) {
        case OffsetConvention::min_zero: return "min-zero";
        case OffsetConvention::mean_zero: return "mean-zero";
        case OffsetConvention::anchored: return "anchor";
    }
    return "min-zero";
}

OffsetConvention offset_convention_from_name(const std::string& name) {
    return parse_offset(name, "offset");
}

std::string resolve_config_path(const std::string& path) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (fs::exists(path, ec)) return path;
    if (const char* dir = std::getenv("IONPOT_CONFIG_DIR")) {
        fs::path candidate = fs::path(dir) / path;
        if (fs::exists(candidate, ec)) return candidate.string();
    }
    return path;
}

} // namespace ionpot
