// ionpot command-line front end. Everything goes through the shared C API;
// this translation unit never touches the C++ library types.
#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ionpot.h"

namespace {

using nlohmann::json;

struct CommonFlags {
    std::optional<std::string> units;
    std::optional<long long> seed;
    std::optional<double> grid_um;
    std::optional<std::string> offset;
    std::optional<double> delta_min_mv;
    std::optional<double> contour_mev;
    std::optional<long long> electrode;
    std::optional<long long> ions;

    std::string overrides_json() const {
        json j = json::object();
        if (units) j["units"] = *units;
        if (seed) j["seed"] = *seed;
        if (grid_um) j["grid_um"] = *grid_um;
        if (offset) j["offset"] = *offset;
        if (delta_min_mv) j["delta_min_mv"] = *delta_min_mv;
        if (contour_mev) j["contour_mev"] = *contour_mev;
        if (electrode) j["electrode"] = *electrode;
        if (ions) j["ions"] = *ions;
        return j.dump();
    }
};

void add_units_flag(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--units", flags.units, "Output units: physical (um/meV) or internal")
        ->check(CLI::IsMember({"physical", "internal"}));
}

void add_seed_flag(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--seed", flags.seed, "Random seed override")
        ->check(CLI::NonNegativeNumber);
}

int finish(ionpot_status status) {
    const char* notes = ionpot_last_notes();
    if (notes && *notes) std::printf("%s\n", notes);
    if (status != IONPOT_OK) {
        const char* err = ionpot_last_error();
        std::fprintf(stderr, "error: %s\n", (err && *err) ? err : "unknown failure");
    }
    return int(status);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Measure 1D trap potentials from equilibrium ion spacings"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "ionpot 0.1.0");
    app.footer("Exit codes: 0 success, 1 usage/config error, 2 partial or numeric failure,\n"
               "3 I/O failure. Config files resolve relative to $IONPOT_CONFIG_DIR when not\n"
               "found directly.");

    std::string config, input, session, positions, frame, out_dir;

    // simulate
    CommonFlags sim_flags;
    CLI::App* sim = app.add_subcommand(
        "simulate", "Solve equilibrium positions for a configured scan");
    sim->add_option("--config", config, "Scenario config JSON")->required();
    sim->add_option("--out", out_dir, "Output directory")->required();
    sim->add_option("--ions", sim_flags.ions, "Ion count override");
    add_units_flag(sim, sim_flags);
    add_seed_flag(sim, sim_flags);

    // reconstruct
    CommonFlags rec_flags;
    CLI::App* rec = app.add_subcommand(
        "reconstruct", "Reconstruct the axial potential from ion positions");
    rec->add_option("--input", input,
                    "Positions CSV (x_um column) or simulate manifest.json")
        ->required();
    rec->add_option("--out", out_dir, "Output directory")->required();
    rec->add_option("--config", config, "Scenario config JSON (CSV input only)");
    rec->add_option("--grid-um", rec_flags.grid_um, "Output grid spacing in um")
        ->check(CLI::PositiveNumber);
    rec->add_option("--offset", rec_flags.offset,
                    "Offset convention: min-zero, mean-zero or anchor=<x_um>");
    add_units_flag(rec, rec_flags);
    add_seed_flag(rec, rec_flags);

    // isolate
    CommonFlags iso_flags;
    CLI::App* iso = app.add_subcommand(
        "isolate", "Isolate one electrode's unit potential from a session");
    iso->add_option("--session", session, "session.json from reconstruct")->required();
    iso->add_option("--out", out_dir, "Output directory")->required();
    iso->add_option("--electrode", iso_flags.electrode, "Electrode index override");
    iso->add_option("--delta-min-mv", iso_flags.delta_min_mv,
                    "Smallest usable pair separation in mV")
        ->check(CLI::NonNegativeNumber);
    iso->add_option("--grid-um", iso_flags.grid_um, "Stitching grid spacing in um")
        ->check(CLI::PositiveNumber);
    add_units_flag(iso, iso_flags);

    // shuttle
    CommonFlags shu_flags;
    CLI::App* shu = app.add_subcommand(
        "shuttle", "Scan a control voltage and track the potential wells");
    shu->add_option("--config", config, "Scenario config JSON (synthetic mode)");
    shu->add_option("--session", session, "session.json (data mode)");
    shu->add_option("--out", out_dir, "Output directory")->required();
    shu->add_option("--contour-mev", shu_flags.contour_mev, "Contour spacing in meV")
        ->check(CLI::PositiveNumber);
    shu->add_option("--grid-um", shu_flags.grid_um, "Map grid spacing in um")
        ->check(CLI::PositiveNumber);
    shu->add_option("--ions", shu_flags.ions, "Ion count override");
    add_units_flag(shu, shu_flags);
    add_seed_flag(shu, shu_flags);

    // image-gen
    CommonFlags gen_flags;
    CLI::App* gen = app.add_subcommand(
        "image-gen", "Render a synthetic camera frame from ion positions");
    gen->add_option("--positions", positions, "Positions CSV (x_um column)")->required();
    gen->add_option("--out", out_dir, "Output directory")->required();
    gen->add_option("--config", config, "Scenario config JSON");
    add_seed_flag(gen, gen_flags);

    // image-fit
    CommonFlags fit_flags;
    CLI::App* fit = app.add_subcommand(
        "image-fit", "Fit sub-pixel ion positions from a camera frame");
    fit->add_option("--frame", frame, "16-bit grayscale PNG frame")->required();
    fit->add_option("--out", out_dir, "Output directory")->required();
    fit->add_option("--config", config, "Scenario config JSON");
    add_units_flag(fit, fit_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // keep --help at 0, any parse failure at 1
    }

    if (sim->parsed()) {
        return finish(ionpot_cmd_simulate(config.c_str(), out_dir.c_str(),
                                          sim_flags.overrides_json().c_str()));
    }
    if (rec->parsed()) {
        return finish(ionpot_cmd_reconstruct(input.c_str(), out_dir.c_str(), config.c_str(),
                                             rec_flags.overrides_json().c_str()));
    }
    if (iso->parsed()) {
        return finish(ionpot_cmd_isolate(session.c_str(), out_dir.c_str(),
                                         iso_flags.overrides_json().c_str()));
    }
    if (shu->parsed()) {
        if (config.empty() && session.empty()) {
            std::fprintf(stderr, "error: shuttle needs --config or --session\n");
            return 1;
        }
        return finish(ionpot_cmd_shuttle(config.c_str(), session.c_str(), out_dir.c_str(),
                                         shu_flags.overrides_json().c_str()));
    }
    if (gen->parsed()) {
        return finish(ionpot_cmd_image_gen(positions.c_str(), out_dir.c_str(),
                                           config.c_str(),
                                           gen_flags.overrides_json().c_str()));
    }
    if (fit->parsed()) {
        return finish(ionpot_cmd_image_fit(frame.c_str(), out_dir.c_str(), config.c_str(),
                                           fit_flags.overrides_json().c_str()));
    }
    return 1;
}
