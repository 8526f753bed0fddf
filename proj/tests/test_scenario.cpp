#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

#include "ionpot/errors.hpp"
#include "ionpot/scenario.hpp"

using namespace ionpot;
using nlohmann::json;

namespace {

// A fully populated trap scenario touching every optional block.
json full_trap_json() {
    return json::parse(R"({
        "schema_version": 1,
        "seed": 99,
        "units": {"length_unit_m": 1e-6, "output": "physical"},
        "ions": 6,
        "potential": {
            "kind": "trap",
            "geometry": {
                "strips_um": [[-250, -150], [-150, -50], [-50, 50], [50, 150], [150, 250]],
                "height_um": 100,
                "voltage_min": -20,
                "voltage_max": 60
            },
            "voltages": [40.5, 4.64, 30.8, 4.5, 40.5],
            "park": {"stiffness": 0.002, "centre_um": 0}
        },
        "scan": {"electrode": 2, "deltas": [0.0, 0.2, 0.5]},
        "solver": {"gradient_tol": 1e-10, "max_iterations": 400,
                   "window_um": [-400, 400]},
        "reconstruct": {"grid_um": 2.0, "offset": "anchor", "anchor_x_um": 1.0,
                        "slope_rule": "fritsch-carlson",
                        "monte_carlo": {"replicas": 16, "sigma_um": 0.05, "seed": 3}},
        "isolate": {"delta_min_v": 0.1, "pairing": "adjacent-delta",
                    "weighting": "delta-squared", "grid_um": 2.0},
        "shuttle": {"contour_mev": 0.4, "barrier_floor": 1e-4, "grid_um": 2.0},
        "imaging": {
            "render": {"width": 128, "height": 32, "pitch_um": 2.0,
                       "psf_sigma_um": 1.5, "poisson_noise": true,
                       "background": {"offset": 40, "slope": 0.05,
                                      "vignette_amp": 15, "vignette_sigma_px": 60}},
            "fit": {"background_window": 31, "detection_threshold": 4.0}
        }
    })");
}

std::string config_message(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("canonical dump round-trips and the hash is reproducible") {
    ScenarioConfig cfg = ScenarioConfig::from_json(full_trap_json());

    const json canon = cfg.to_json();
    ScenarioConfig again = ScenarioConfig::from_json(canon);

    // Parsing the canonical dump must be the identity on the dump itself.
    CHECK(again.to_json().dump() == canon.dump());
    CHECK(config_hash_hex(again) == config_hash_hex(cfg));

    // 64-bit FNV-1a rendered as 16 lowercase hex digits.
    const std::string h = config_hash_hex(cfg);
    CHECK(h.size() == 16);
    for (char c : h)
        CHECK(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));

    // Any field change moves the hash.
    ScenarioConfig bumped = cfg;
    bumped.seed += 1;
    CHECK(config_hash_hex(bumped) != h);
}

TEST_CASE("defaults survive an empty document") {
    ScenarioConfig cfg = ScenarioConfig::from_json(json::object());
    CHECK(cfg.schema_version == 1);
    CHECK(cfg.seed == 1);
    CHECK(cfg.length_unit_m == 1e-6);
    CHECK(cfg.output_units == "physical");
    CHECK(cfg.ions == 20);
    CHECK(cfg.potential.kind == "harmonic");
    CHECK(cfg.recon.offset == OffsetConvention::min_zero);
    CHECK(cfg.recon.slope_rule == SlopeRule::extremum_preserving);
    CHECK(cfg.isolate.pairing == PairPolicy::all_pairs);
    CHECK(cfg.isolate.weighting == SegmentWeighting::uniform);
    CHECK_FALSE(cfg.recon.monte_carlo.has_value());
    CHECK_FALSE(cfg.solver.window_um.has_value());
    CHECK_FALSE(cfg.potential.park_stiffness.has_value());

    // The canonical dump of the default config parses back to itself.
    const json canon = cfg.to_json();
    CHECK(ScenarioConfig::from_json(canon).to_json().dump() == canon.dump());
}

TEST_CASE("unknown keys are rejected with their location") {
    auto expect_unknown = [](json j, const std::string& where, const std::string& key) {
        const std::string msg = config_message([&] { ScenarioConfig::from_json(j); });
        CAPTURE(where);
        CAPTURE(key);
        CHECK(msg == "config: " + where + ": unknown key '" + key + "'");
    };

    json top = json::object();
    top["seeed"] = 5;
    expect_unknown(top, "top level", "seeed");

    json units = json::object();
    units["units"] = {{"length_unit_um", 1.0}};
    expect_unknown(units, "units", "length_unit_um");

    json pot = full_trap_json();
    pot["potential"]["tilt_v"] = 0.1;
    expect_unknown(pot, "potential", "tilt_v");

    json geom = full_trap_json();
    geom["potential"]["geometry"]["gap_um"] = 5.0;
    expect_unknown(geom, "potential.geometry", "gap_um");

    json mc = full_trap_json();
    mc["reconstruct"]["monte_carlo"]["sigma"] = 0.1;
    expect_unknown(mc, "reconstruct.monte_carlo", "sigma");

    json bg = full_trap_json();
    bg["imaging"]["render"]["background"]["gain"] = 2.0;
    expect_unknown(bg, "imaging.render.background", "gain");
}

TEST_CASE("field validation failures carry the config prefix") {
    auto msg_for = [](json j) {
        return config_message([&] { ScenarioConfig::from_json(std::move(j)); });
    };

    CHECK(msg_for({{"schema_version", 2}}) ==
          "config: top level: unsupported schema_version (expected 1)");
    CHECK(msg_for({{"ions", 0}}) == "config: top level: ions must be >= 1");
    CHECK(msg_for({{"seed", -4}}).find("config: top level:") == 0);
    CHECK(msg_for({{"units", {{"length_unit_m", 0.0}}}}) ==
          "config: units: length_unit_m must be positive and finite");
    CHECK(msg_for({{"units", {{"output", "both"}}}}) ==
          "config: units: output must be physical or internal");
    CHECK(msg_for({{"potential", {{"kind", "cubic"}}}}) ==
          "config: potential: kind must be harmonic, quartic or trap (got 'cubic')");
    CHECK(msg_for({{"reconstruct", {{"grid_um", -1.0}}}}) ==
          "config: reconstruct: grid_um must be positive");
    CHECK(msg_for({{"reconstruct", {{"offset", "zero"}}}}).find(
              "config: reconstruct:") == 0);
    CHECK(msg_for({{"solver", {{"window_um", {3.0, -3.0}}}}}) ==
          "config: solver: window_um must be [lo, hi] with lo < hi");
    CHECK(msg_for({{"reconstruct", {{"monte_carlo", {{"replicas", 1}}}}}}) ==
          "config: reconstruct.monte_carlo: replicas must be >= 2");
    CHECK(msg_for({{"isolate", {{"delta_min_v", -0.5}}}}) ==
          "config: isolate: delta_min_v must be >= 0");
    CHECK(msg_for({{"shuttle", {{"contour_mev", 0.0}}}}) ==
          "config: shuttle: contour_mev must be positive");

    // Type errors go through the same channel.
    CHECK(msg_for({{"seed", "one"}}).find("config: top level:") == 0);
    CHECK(msg_for({{"solver", {{"max_iterations", 2.5}}}}).find("config: solver:") == 0);
}

TEST_CASE("trap cross-field checks") {
    json j = full_trap_json();
    j["potential"]["voltages"] = {40.5, 4.64, 30.8};
    CHECK(config_message([&] { ScenarioConfig::from_json(j); }) ==
          "config: potential: voltages count does not match the strip count");

    j = full_trap_json();
    j["scan"]["electrode"] = 5;
    CHECK(config_message([&] { ScenarioConfig::from_json(j); }) ==
          "config: scan: electrode index is out of range for the geometry");

    j = full_trap_json();
    j["scan"]["delta_pattern"] = {0.0, 1.0};
    CHECK(config_message([&] { ScenarioConfig::from_json(j); }) ==
          "config: scan: delta_pattern length does not match the strip count");

    j = full_trap_json();
    j["potential"].erase("voltages");
    CHECK(config_message([&] { ScenarioConfig::from_json(j); }) ==
          "config: potential: trap kind needs a 'voltages' array (one entry per strip)");
}

TEST_CASE("offset convention names round trip") {
    for (OffsetConvention c : {OffsetConvention::min_zero, OffsetConvention::mean_zero,
                               OffsetConvention::anchored}) {
        CHECK(offset_convention_from_name(offset_convention_name(c)) == c);
    }
    CHECK(offset_convention_name(OffsetConvention::min_zero) == "min-zero");
    CHECK(offset_convention_name(OffsetConvention::mean_zero) == "mean-zero");
    CHECK(offset_convention_name(OffsetConvention::anchored) == "anchor");
    CHECK_THROWS_AS((void)offset_convention_from_name("minzero"), ConfigError);
}

TEST_CASE("voltages_at applies the scan perturbation") {
    ScenarioConfig cfg = ScenarioConfig::from_json(full_trap_json());

    std::vector<double> v = cfg.voltages_at(0.5);
    CHECK(v[2] == 30.8 + 0.5);
    CHECK(v[0] == 40.5);
    CHECK(v[4] == 40.5);

    cfg.scan.delta_pattern = {1.0, 0.0, -1.0, 0.0, 1.0};
    v = cfg.voltages_at(0.25);
    CHECK(v[0] == doctest::Approx(40.75).epsilon(1e-15));
    CHECK(v[2] == doctest::Approx(30.55).epsilon(1e-15));
    CHECK(v[1] == 4.64);

    ScenarioConfig analytic = ScenarioConfig::from_json(json::object());
    CHECK_THROWS_AS((void)analytic.voltages_at(0.1), InvalidArgument);
}

TEST_CASE("build_potential composes base, delta tilt and park term") {
    // Harmonic base: psi(x) = k/2 (x - c)^2 + (tilt + delta) x.
    json j = {{"potential", {{"kind", "harmonic"}, {"stiffness", 2.0},
                             {"centre_um", 1.0}, {"tilt", 0.25}}}};
    ScenarioConfig cfg = ScenarioConfig::from_json(j);
    Potential1D p = cfg.build_potential(0.5, std::nullopt);
    const double x = 0.4;
    CHECK(p.value(x) == doctest::Approx(1.0 * (x - 1.0) * (x - 1.0) + 0.75 * x)
                            .epsilon(1e-14));
    CHECK(p.deriv(x) == doctest::Approx(2.0 * (x - 1.0) + 0.75).epsilon(1e-14));

    // Trap base matches the strip superposition at the perturbed voltages.
    ScenarioConfig trap = ScenarioConfig::from_json(full_trap_json());
    trap.potential.park_stiffness.reset();
    Potential1D axial = trap.build_potential(0.2, std::nullopt);
    Potential1D direct =
        axial_potential(trap.geometry_internal(), trap.voltages_at(0.2), trap.units());
    for (double xi : {-120.0, -30.0, 0.0, 55.0, 180.0})
        CHECK(axial.value(xi) == doctest::Approx(direct.value(xi)).epsilon(1e-14));

    // The park term adds a harmonic centred on the station.
    ScenarioConfig parked = ScenarioConfig::from_json(full_trap_json());
    Potential1D at_station = parked.build_potential(0.0, 40.0);
    Potential1D bare = trap.build_potential(0.0, std::nullopt);
    const double k = *parked.potential.park_stiffness;
    for (double xi : {-60.0, 10.0, 90.0}) {
        double park = 0.5 * k * (xi - 40.0) * (xi - 40.0);
        CHECK(at_station.value(xi) - bare.value(xi) ==
              doctest::Approx(park).epsilon(1e-12));
    }
}

TEST_CASE("default_window prefers the configured window, then geometry") {
    ScenarioConfig trap = ScenarioConfig::from_json(full_trap_json());
    Potential1D pot = trap.build_potential(0.0, std::nullopt);

    Interval w = trap.default_window(pot);
    CHECK(w.lo == -400.0);
    CHECK(w.hi == 400.0);

    // Without an explicit window the strip span is padded by 1.5 heights.
    trap.solver.window_um.reset();
    w = trap.default_window(pot);
    CHECK(w.lo == doctest::Approx(-250.0 - 150.0).epsilon(1e-12));
    CHECK(w.hi == doctest::Approx(250.0 + 150.0).epsilon(1e-12));

    // Analytic kinds fall back to the (bounded) potential domain.
    ScenarioConfig harm = ScenarioConfig::from_json(json::object());
    Potential1D hp = harm.build_potential(0.0, std::nullopt);
    Interval hw = harm.default_window(hp);
    CHECK(hw.lo == hp.domain().lo);
    CHECK(hw.hi == hp.domain().hi);
}

TEST_CASE("geometry_internal converts strip coordinates to internal units") {
    json j = full_trap_json();
    j["units"]["length_unit_m"] = 2e-6;  // 1 internal unit = 2 um
    ScenarioConfig cfg = ScenarioConfig::from_json(j);

    TrapGeometry g = cfg.geometry_internal();
    REQUIRE(g.strips.size() == 5);
    CHECK(g.strips.front().x0 == doctest::Approx(-125.0).epsilon(1e-15));
    CHECK(g.strips.back().x1 == doctest::Approx(125.0).epsilon(1e-15));
    CHECK(g.height == doctest::Approx(50.0).epsilon(1e-15));
    // Voltage limits are not lengths and stay as configured.
    CHECK(g.voltage_min == -20.0);
    CHECK(g.voltage_max == 60.0);
}

TEST_CASE("from_file resolves paths and wraps parse failures") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path("/tmp/ionpot_scenario_test");
    fs::remove_all(dir);
    fs::create_directories(dir);

    const fs::path good = dir / "good.json";
    std::ofstream(good) << full_trap_json().dump(2);
    ScenarioConfig cfg = ScenarioConfig::from_file(good.string());
    CHECK(cfg.seed == 99);

    // Comments are tolerated in config files.
    const fs::path commented = dir / "commented.json";
    std::ofstream(commented) << "// run settings\n{\"seed\": 7}\n";
    CHECK(ScenarioConfig::from_file(commented.string()).seed == 7);

    const fs::path broken = dir / "broken.json";
    std::ofstream(broken) << "{\"seed\": }";
    try {
        ScenarioConfig::from_file(broken.string());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("config '" + broken.string() + "':") == 0);
    }

    CHECK_THROWS_AS(ScenarioConfig::from_file((dir / "missing.json").string()), IoError);

    // Bare names resolve through IONPOT_CONFIG_DIR when not found directly.
    ::setenv("IONPOT_CONFIG_DIR", dir.string().c_str(), 1);
    CHECK(resolve_config_path("good.json") == (dir / "good.json").string());
    CHECK(ScenarioConfig::from_file("good.json").seed == 99);
    // An existing path wins over the search directory.
    CHECK(resolve_config_path(good.string()) == good.string());
    ::unsetenv("IONPOT_CONFIG_DIR");
    CHECK(resolve_config_path("good.json") == "good.json");

    fs::remove_all(dir);
}

TEST_CASE("spec to_options carries unit conversions") {
    json j = full_trap_json();
    j["units"]["length_unit_m"] = 2e-6;
    ScenarioConfig cfg = ScenarioConfig::from_json(j);
    const UnitSystem us = cfg.units();

    ReconstructOptions ropt = cfg.recon.to_options(us);
    CHECK(ropt.grid.spacing == doctest::Approx(1.0).epsilon(1e-15));  // 2 um
    CHECK(ropt.offset == OffsetConvention::anchored);
    CHECK(ropt.anchor_x == doctest::Approx(0.5).epsilon(1e-15));
    REQUIRE(ropt.monte_carlo.has_value());
    CHECK(ropt.monte_carlo->replicas == 16);
    CHECK(ropt.monte_carlo->seed == 3);

    SolverConfig sopt = cfg.solver.to_config(us);
    REQUIRE(sopt.search_interval.has_value());
    CHECK(sopt.search_interval->lo == doctest::Approx(-200.0).epsilon(1e-15));
    CHECK(sopt.search_interval->hi == doctest::Approx(200.0).epsilon(1e-15));

    IsolationOptions iopt = cfg.isolate.to_options(us);
    REQUIRE(iopt.grid_spacing.has_value());
    CHECK(*iopt.grid_spacing == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(iopt.pairing == PairPolicy::adjacent_delta);
    CHECK(iopt.weighting == SegmentWeighting::delta_squared);

    ShuttleOptions shopt = cfg.shuttle.to_options(us);
    REQUIRE(shopt.grid_spacing.has_value());
    CHECK(*shopt.grid_spacing == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(shopt.barrier_floor == 1e-4);
}

TEST_CASE("monte carlo seed defaults to the scenario seed") {
    json j = {{"seed", 4242},
              {"reconstruct",
               {{"monte_carlo", {{"replicas", 8}, {"sigma_um", 0.1}}}}}};
    ScenarioConfig cfg = ScenarioConfig::from_json(j);
    REQUIRE(cfg.recon.monte_carlo.has_value());
    CHECK(cfg.recon.monte_carlo->seed == 4242);
}
