#include "ionpot/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "ionpot/csv.hpp"
#include "ionpot/equilibrium.hpp"
#include "ionpot/errors.hpp"
#include "ionpot/imaging.hpp"
#include "ionpot/isolation.hpp"
#include "ionpot/png_io.hpp"
#include "ionpot/reconstruction.hpp"
#include "ionpot/svg.hpp"
#include "ionpot/trap.hpp"

namespace fs = std::filesystem;

namespace ionpot {

namespace {

using nlohmann::json;

constexpr const char* kPalette[] = {
    "#1f6fb2", "#d1495b", "#2e8b57", "#8c5fa8", "#c98a26",
    "#2aa2a8", "#b05d2c", "#5c6f2b", "#9f3f6d", "#4a5fb5",
};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string pad3(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%03zu", i);
    return buf;
}

fs::path ensure_dir(const std::string& out_dir) {
    if (out_dir.empty()) throw InvalidArgument("output directory must not be empty");
    fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec && !fs::exists(dir)) {
        throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
    }
    return dir;
}

std::string vec_to_str(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += format_double(v[i]);
    }
    return out;
}

std::vector<double> str_to_vec(const std::string& s) {
    std::istringstream in(s);
    std::vector<double> out;
    double v;
    while (in >> v) out.push_back(v);
    return out;
}

double meta_num(const CsvTable& t, const std::string& key, double fallback) {
    auto v = t.find_meta(key);
    if (!v) return fallback;
    return std::strtod(v->c_str(), nullptr);
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        return json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

ScenarioConfig config_for(const std::string& config_path, const json& overrides) {
    ScenarioConfig cfg;
    if (!config_path.empty()) cfg = ScenarioConfig::from_file(config_path);
    apply_overrides(cfg, overrides);
    return cfg;
}

ScenarioConfig embedded_config(const json& j, const std::string& path, const json& overrides) {
    if (!j.contains("config") || !j.at("config").is_object())
        throw ConfigError("'" + path + "' carries no embedded config");
    ScenarioConfig cfg = ScenarioConfig::from_json(j.at("config"));
    apply_overrides(cfg, overrides);
    return cfg;
}

bool physical_output(const ScenarioConfig& cfg) { return cfg.output_units == "physical"; }

void stamp_common(CsvTable& t, const std::string& kind, const std::string& hash,
                  const ScenarioConfig& cfg) {
    t.add_meta("kind", kind);
    t.add_meta("schema_version", "1");
    t.add_meta("config_hash", hash);
    t.add_meta("length_unit_m", format_double(cfg.length_unit_m));
    t.add_meta("units", cfg.output_units);
}

ReconstructOptions recon_options(const ScenarioConfig& cfg, const UnitSystem& us) {
    return cfg.recon.to_options(us);
}

// ---- positions CSV ----

struct PositionsFile {
    std::vector<double> um;       // sorted
    std::vector<double> sigma_um; // empty when absent
    CsvTable table;
};

PositionsFile load_positions_csv(const std::string& path) {
    PositionsFile out;
    out.table = read_csv(path);
    if (!out.table.has_column("x_um"))
        throw ConfigError("'" + path + "': positions file needs an x_um column");
    out.um = out.table.column("x_um");
    if (out.table.has_column("sigma_um")) out.sigma_um = out.table.column("sigma_um");
    if (out.um.empty()) throw ConfigError("'" + path + "': no rows");
    if (!std::is_sorted(out.um.begin(), out.um.end())) {
        std::sort(out.um.begin(), out.um.end());
        out.sigma_um.clear();  // sigma rows no longer line up
    }
    return out;
}

void write_positions_csv(const fs::path& path, const std::vector<double>& um,
                         const std::string& hash, const ScenarioConfig& cfg,
                         const std::vector<std::pair<std::string, std::string>>& extra) {
    CsvTable t;
    stamp_common(t, "ion_positions", hash, cfg);
    for (const auto& [k, v] : extra) t.add_meta(k, v);
    t.columns = {"index", "x_um"};
    std::vector<double> idx(um.size());
    for (std::size_t i = 0; i < um.size(); ++i) idx[i] = double(i);
    t.data = {idx, um};
    write_csv(path.string(), t);
}

// ---- curve CSV ----

void write_curve_csv(const fs::path& path, const PotentialCurve& curve,
                     const std::string& hash, const ScenarioConfig& cfg,
                     const std::vector<std::pair<std::string, std::string>>& extra) {
    const UnitSystem& us = curve.units();
    const bool phys = physical_output(cfg);
    CsvTable t;
    stamp_common(t, "potential_curve", hash, cfg);
    t.add_meta("offset", offset_convention_name(curve.offset_convention()));
    if (curve.offset_convention() == OffsetConvention::anchored)
        t.add_meta("anchor_x_um", format_double(us.internal_to_um(curve.anchor_x())));
    for (const auto& [k, v] : extra) t.add_meta(k, v);

    const std::size_t n = curve.size();
    std::vector<double> xs(n), ps(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = phys ? us.internal_to_um(curve.x()[i]) : curve.x()[i];
        ps[i] = phys ? us.internal_to_mev(curve.psi()[i]) : curve.psi()[i];
    }
    t.columns = {phys ? "x_um" : "x", phys ? "psi_mev" : "psi"};
    t.data = {xs, ps};
    if (curve.has_band()) {
        std::vector<double> sg(n);
        for (std::size_t i = 0; i < n; ++i) {
            sg[i] = phys ? us.internal_to_mev(curve.sigma()[i]) : curve.sigma()[i];
        }
        t.columns.push_back(phys ? "sigma_mev" : "sigma");
        t.data.push_back(sg);
    }
    write_csv(path.string(), t);
}

MeasurementRecord load_curve_record(const std::string& path) {
    CsvTable t = read_csv(path);
    const UnitSystem us = UnitSystem::with_length_unit_m(meta_num(t, "length_unit_m", 1e-6));
    std::vector<double> x, psi, sigma;
    if (t.has_column("x_um")) {
        for (double v : t.column("x_um")) x.push_back(us.um_to_internal(v));
        for (double v : t.column("psi_mev")) psi.push_back(us.mev_to_internal(v));
        if (t.has_column("sigma_mev"))
            for (double v : t.column("sigma_mev")) sigma.push_back(us.mev_to_internal(v));
    } else {
        x = t.column("x");
        psi = t.column("psi");
        if (t.has_column("sigma")) sigma = t.column("sigma");
    }

    OffsetConvention conv = OffsetConvention::min_zero;
    double anchor = 0.0;
    if (auto name = t.find_meta("offset")) {
        conv = offset_convention_from_name(*name);
        anchor = us.um_to_internal(meta_num(t, "anchor_x_um", 0.0));
    }
    std::optional<PotentialCurve> curve;
    try {
        curve.emplace(x, psi, us, conv, anchor);
    } catch (const Error&) {
        // e.g. anchor outside this curve's span; the gauge is arbitrary here.
        curve.emplace(x, psi, us, OffsetConvention::min_zero);
    }
    if (!sigma.empty()) curve->set_band(std::move(sigma));

    MeasurementRecord rec{str_to_vec(t.find_meta("voltages").value_or("")),
                          meta_num(t, "delta", 0.0),
                          int(meta_num(t, "station", 0.0)), std::move(*curve)};
    return rec;
}

std::vector<MeasurementRecord> session_records(const json& session, const fs::path& base_dir) {
    if (!session.contains("records") || !session.at("records").is_array())
        throw ConfigError("session carries no records array");
    std::vector<MeasurementRecord> records;
    for (const json& r : session.at("records")) {
        const std::string rel = r.value("curve_csv", std::string());
        if (rel.empty()) throw ConfigError("session record without curve_csv");
        MeasurementRecord rec = load_curve_record((base_dir / rel).string());
        // The session is authoritative for scan bookkeeping.
        if (r.contains("delta")) rec.delta = r.at("delta").get<double>();
        if (r.contains("station")) rec.station = r.at("station").get<int>();
        if (r.contains("voltages") && r.at("voltages").is_array())
            rec.voltages = r.at("voltages").get<std::vector<double>>();
        records.push_back(std::move(rec));
    }
    return records;
}

SvgSeries curve_series(const PotentialCurve& curve, const ScenarioConfig& cfg,
                       std::size_t palette_index, const std::string& label) {
    const UnitSystem& us = curve.units();
    const bool phys = physical_output(cfg);
    SvgSeries s;
    s.colour = kPalette[palette_index % kPaletteSize];
    s.label = label;
    s.x.reserve(curve.size());
    s.y.reserve(curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        s.x.push_back(phys ? us.internal_to_um(curve.x()[i]) : curve.x()[i]);
        s.y.push_back(phys ? us.internal_to_mev(curve.psi()[i]) : curve.psi()[i]);
    }
    return s;
}

std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

} // namespace

std::string RunReport::joined() const {
    std::string out;
    for (std::size_t i = 0; i < notes.size(); ++i) {
        if (i) out += '\n';
        out += notes[i];
    }
    return out;
}

void apply_overrides(ScenarioConfig& cfg, const json& overrides) {
    if (overrides.is_null()) return;
    if (!overrides.is_object()) throw InvalidArgument("overrides must be a JSON object");
    for (auto it = overrides.begin(); it != overrides.end(); ++it) {
        const std::string& key = it.key();
        const json& v = it.value();
        if (key == "units") {
            const std::string u = v.get<std::string>();
            if (u != "physical" && u != "internal")
                throw InvalidArgument("units override must be physical or internal");
            cfg.output_units = u;
        } else if (key == "seed") {
            if (!v.is_number_integer())
                throw InvalidArgument("seed override must be an integer");
            cfg.seed = v.get<std::uint64_t>();
            cfg.imaging.render.seed = cfg.seed;
            if (cfg.recon.monte_carlo) cfg.recon.monte_carlo->seed = cfg.seed;
        } else if (key == "grid_um") {
            const double g = v.get<double>();
            if (!(g > 0.0)) throw InvalidArgument("grid_um override must be positive");
            cfg.recon.grid_um = g;
            cfg.isolate.grid_um = g;
            cfg.shuttle.grid_um = g;
        } else if (key == "offset") {
            const std::string s = v.get<std::string>();
            if (s.rfind("anchor=", 0) == 0) {
                cfg.recon.offset = OffsetConvention::anchored;
                char* end = nullptr;
                cfg.recon.anchor_x_um = std::strtod(s.c_str() + 7, &end);
                if (end == s.c_str() + 7 || (end && *end != '\0'))
                    throw InvalidArgument("offset anchor must look like anchor=<x_um>");
            } else {
                cfg.recon.offset = offset_convention_from_name(s);
            }
        } else if (key == "delta_min_mv") {
            const double mv = v.get<double>();
            if (!(mv >= 0.0)) throw InvalidArgument("delta_min_mv override must be >= 0");
            cfg.isolate.delta_min_v = mv * 1e-3;
        } else if (key == "contour_mev") {
            const double c = v.get<double>();
            if (!(c > 0.0)) throw InvalidArgument("contour_mev override must be positive");
            cfg.shuttle.contour_mev = c;
        } else if (key == "electrode") {
            if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
                throw InvalidArgument("electrode override must be a non-negative integer");
            cfg.scan.electrode = v.get<std::size_t>();
        } else if (key == "ions") {
            if (!v.is_number_integer() || v.get<std::int64_t>() < 1)
                throw InvalidArgument("ions override must be >= 1");
            cfg.ions = v.get<std::size_t>();
        } else {
            throw InvalidArgument("unknown override '" + key + "'");
        }
    }
    if (cfg.potential.kind == "trap" &&
        cfg.scan.electrode >= cfg.potential.geometry_um.strips.size())
        throw ConfigError("electrode index is out of range for the geometry");
}

RunReport run_simulate(const std::string& config_path, const std::string& out_dir,
                       const json& overrides) {
    const ScenarioConfig cfg = config_for(config_path, overrides);
    const UnitSystem us = cfg.units();
    const std::string hash = config_hash_hex(cfg);
    const fs::path dir = ensure_dir(out_dir);

    if (!cfg.scan.stations_um.empty() && !cfg.potential.park_stiffness)
        throw ConfigError("scan.stations_um needs potential.park to hold the string");

    std::vector<std::optional<double>> stations;
    if (cfg.scan.stations_um.empty()) {
        stations.push_back(std::nullopt);
    } else {
        for (double s : cfg.scan.stations_um) stations.push_back(s);
    }
    std::vector<double> deltas = cfg.scan.deltas;
    if (deltas.empty()) deltas.push_back(0.0);

    RunReport report;
    json records = json::array();
    std::size_t id = 0, ok = 0;
    for (std::size_t s = 0; s < stations.size(); ++s) {
        for (double delta : deltas) {
            json entry;
            entry["id"] = id;
            entry["delta"] = delta;
            entry["station"] = int(s);
            entry["station_centre_um"] =
                stations[s] ? json(*stations[s]) : json(nullptr);
            entry["positions_csv"] = nullptr;
            entry["converged"] = false;
            entry["stable"] = false;
            entry["residual"] = nullptr;
            entry["iterations"] = 0;
            entry["error"] = nullptr;
            entry["voltages"] = cfg.potential.kind == "trap" ? json(cfg.voltages_at(delta))
                                                             : json(nullptr);
            try {
                const Potential1D pot = cfg.build_potential(delta, stations[s]);
                SolverConfig sol = cfg.solver.to_config(us);
                sol.search_interval = cfg.default_window(pot, stations[s]);
                const EquilibriumResult res = solve_equilibrium(pot, cfg.ions, sol, us);

                const std::string csv_name = "positions_" + pad3(id) + ".csv";
                std::vector<std::pair<std::string, std::string>> extra = {
                    {"delta", format_double(delta)},
                    {"station", std::to_string(s)},
                    {"converged", res.converged ? "1" : "0"},
                    {"stable", res.stable ? "1" : "0"},
                    {"residual", format_double(res.residual_norm)},
                };
                if (stations[s])
                    extra.push_back({"station_centre_um", format_double(*stations[s])});
                if (cfg.potential.kind == "trap")
                    extra.push_back({"voltages", vec_to_str(cfg.voltages_at(delta))});
                write_positions_csv(dir / csv_name, res.string.positions_um(), hash, cfg,
                                    extra);

                entry["positions_csv"] = csv_name;
                entry["converged"] = res.converged;
                entry["stable"] = res.stable;
                entry["residual"] = res.residual_norm;
                entry["iterations"] = res.iterations;
                if (res.converged && res.stable) {
                    ++ok;
                } else {
                    report.notes.push_back("record " + pad3(id) + " (delta=" +
                                           fmt_short(delta) + ", station=" +
                                           std::to_string(s) + "): " +
                                           (res.converged ? "solution is not stable"
                                                          : "solver did not converge"));
                }
            } catch (const Error& e) {
                entry["error"] = e.what();
                report.notes.push_back("record " + pad3(id) + " (delta=" + fmt_short(delta) +
                                       ", station=" + std::to_string(s) + "): " + e.what());
            }
            records.push_back(std::move(entry));
            ++id;
        }
    }

    json manifest;
    manifest["kind"] = "simulate_manifest";
    manifest["schema_version"] = 1;
    manifest["config_hash"] = hash;
    manifest["config"] = cfg.to_json();
    manifest["electrode"] = cfg.scan.electrode;
    manifest["records"] = std::move(records);
    write_json_file(dir / "manifest.json", manifest);

    report.notes.push_back(std::to_string(ok) + "/" + std::to_string(id) +
                           " records converged; manifest.json written to " + dir.string());
    report.exit_code = ok == id ? 0 : 2;
    return report;
}

RunReport run_reconstruct(const std::string& input_path, const std::string& out_dir,
                          const std::string& config_path, const json& overrides) {
    const fs::path dir = ensure_dir(out_dir);
    RunReport report;

    const bool manifest_mode = input_path.size() > 5 &&
                               input_path.substr(input_path.size() - 5) == ".json";
    if (!manifest_mode) {
        const ScenarioConfig cfg = config_for(config_path, overrides);
        const UnitSystem us = cfg.units();
        const std::string hash = config_hash_hex(cfg);

        PositionsFile pos = load_positions_csv(input_path);
        IonString string = IonString::from_um(pos.um, us);
        const PotentialCurve curve = reconstruct(string, recon_options(cfg, us));
        write_curve_csv(dir / "curve.csv", curve, hash, cfg,
                        {{"source", fs::path(input_path).filename().string()}});

        SvgPlot plot;
        plot.title = "Reconstructed potential (" + std::to_string(string.count()) + " ions)";
        const bool phys = physical_output(cfg);
        plot.x_label = phys ? "x (um)" : "x (internal)";
        plot.y_label = phys ? "psi (meV)" : "psi (internal)";
        plot.metadata = {{"kind", "potential_curve"}, {"config_hash", hash}};
        if (curve.has_band()) {
            SvgBand band;
            for (std::size_t i = 0; i < curve.size(); ++i) {
                const double x = phys ? us.internal_to_um(curve.x()[i]) : curve.x()[i];
                const double p = phys ? us.internal_to_mev(curve.psi()[i]) : curve.psi()[i];
                const double s = phys ? us.internal_to_mev(curve.sigma()[i]) : curve.sigma()[i];
                band.x.push_back(x);
                band.y_lo.push_back(p - s);
                band.y_hi.push_back(p + s);
            }
            plot.bands.push_back(std::move(band));
        }
        plot.series.push_back(curve_series(curve, cfg, 0, ""));
        // Ion positions along the bottom of the curve.
        SvgSeries ions;
        ions.colour = "#d1495b";
        ions.markers = true;
        ions.lines = false;
        ions.label = "ion positions";
        for (std::size_t i = 0; i < string.count(); ++i) {
            const double xi = string.positions()[i];
            ions.x.push_back(phys ? us.internal_to_um(xi) : xi);
            ions.y.push_back(phys ? us.internal_to_mev(curve.value(xi)) : curve.value(xi));
        }
        plot.series.push_back(std::move(ions));
        write_svg_plot((dir / "curve.svg").string(), plot);

        report.notes.push_back("curve.csv written (" + std::to_string(curve.size()) +
                               " points) to " + dir.string());
        return report;
    }

    const json manifest = read_json_file(input_path);
    if (manifest.value("kind", std::string()) != "simulate_manifest")
        throw ConfigError("'" + input_path + "' is not a simulate manifest");
    const ScenarioConfig cfg = embedded_config(manifest, input_path, overrides);
    const UnitSystem us = cfg.units();
    const std::string hash = config_hash_hex(cfg);
    const fs::path base = fs::path(input_path).parent_path();

    json session_records_json = json::array();
    SvgPlot overlay;
    overlay.title = "Reconstructed curves";
    const bool phys = physical_output(cfg);
    overlay.x_label = phys ? "x (um)" : "x (internal)";
    overlay.y_label = phys ? "psi (meV)" : "psi (internal)";
    overlay.metadata = {{"kind", "session_curves"}, {"config_hash", hash}};

    std::size_t done = 0, skipped = 0, idx = 0;
    for (const json& r : manifest.at("records")) {
        const std::size_t id = r.value("id", idx);
        ++idx;
        if (!(r.value("converged", false) && r.value("stable", false))) {
            ++skipped;
            report.notes.push_back("record " + pad3(id) + " skipped: no stable equilibrium");
            continue;
        }
        const std::string rel = r.value("positions_csv", std::string());
        if (rel.empty()) {
            ++skipped;
            report.notes.push_back("record " + pad3(id) + " skipped: no positions file");
            continue;
        }
        PositionsFile pos = load_positions_csv((base / rel).string());
        IonString string = IonString::from_um(pos.um, us);
        const PotentialCurve curve = reconstruct(string, recon_options(cfg, us));

        const std::string curve_name = "curve_" + pad3(id) + ".csv";
        const double delta = r.value("delta", 0.0);
        const int station = r.value("station", 0);
        std::vector<std::pair<std::string, std::string>> extra = {
            {"delta", format_double(delta)},
            {"station", std::to_string(station)},
            {"source", rel},
        };
        if (r.contains("voltages") && r.at("voltages").is_array())
            extra.push_back({"voltages",
                             vec_to_str(r.at("voltages").get<std::vector<double>>())});
        write_curve_csv(dir / curve_name, curve, hash, cfg, extra);

        json entry;
        entry["delta"] = delta;
        entry["station"] = station;
        entry["station_centre_um"] = r.contains("station_centre_um")
                                         ? r.at("station_centre_um")
                                         : json(nullptr);
        entry["voltages"] = r.contains("voltages") ? r.at("voltages") : json(nullptr);
        entry["curve_csv"] = curve_name;
        session_records_json.push_back(std::move(entry));

        const bool label_all = manifest.at("records").size() <= 8;
        overlay.series.push_back(curve_series(
            curve, cfg, done,
            label_all ? "delta=" + fmt_short(delta) + ", station " + std::to_string(station)
                      : ""));
        ++done;
    }

    if (done == 0) throw NumericError("no usable records in '" + input_path + "'");

    json session;
    session["kind"] = "session";
    session["schema_version"] = 1;
    session["config_hash"] = hash;
    session["config"] = cfg.to_json();
    session["electrode"] = manifest.value("electrode", cfg.scan.electrode);
    session["records"] = std::move(session_records_json);
    write_json_file(dir / "session.json", session);
    write_svg_plot((dir / "curves.svg").string(), overlay);

    report.notes.push_back(std::to_string(done) + " curves written, " +
                           std::to_string(skipped) + " records skipped; session.json in " +
                           dir.string());
    report.exit_code = skipped == 0 ? 0 : 2;
    return report;
}

RunReport run_isolate(const std::string& session_path, const std::string& out_dir,
                      const json& overrides) {
    const json session = read_json_file(session_path);
    if (session.value("kind", std::string()) != "session")
        throw ConfigError("'" + session_path + "' is not a reconstruction session");
    const ScenarioConfig cfg = embedded_config(session, session_path, overrides);
    const UnitSystem us = cfg.units();
    const std::string hash = config_hash_hex(cfg);
    const fs::path dir = ensure_dir(out_dir);

    std::size_t electrode = session.value("electrode", cfg.scan.electrode);
    if (overrides.contains("electrode")) electrode = cfg.scan.electrode;

    const std::vector<MeasurementRecord> records =
        session_records(session, fs::path(session_path).parent_path());
    const ElectrodeUnitPotential unit =
        isolate_electrode(records, electrode, cfg.isolate.to_options(us));

    const bool phys = physical_output(cfg);
    CsvTable t;
    stamp_common(t, "unit_potential", hash, cfg);
    t.add_meta("electrode", std::to_string(electrode));
    t.add_meta("records", std::to_string(records.size()));
    const std::size_t n = unit.x.size();
    std::vector<double> xs(n), mean(n), spread(n), count(n);
    const std::vector<double> mean_phys = unit.mean_ev_per_v(us);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = phys ? us.internal_to_um(unit.x[i]) : unit.x[i];
        mean[i] = phys ? mean_phys[i] : unit.mean[i];
        spread[i] = phys ? us.energy_to_ev(unit.spread[i]) : unit.spread[i];
        count[i] = double(unit.count[i]);
    }
    t.columns = {phys ? "x_um" : "x", phys ? "u_ev_per_v" : "u",
                 phys ? "spread_ev_per_v" : "spread", "count"};
    t.data = {xs, mean, spread, count};
    write_csv((dir / "unit_potential.csv").string(), t);

    SvgPlot plot;
    plot.title = "Electrode " + std::to_string(electrode) + " unit potential";
    plot.x_label = phys ? "x (um)" : "x (internal)";
    plot.y_label = phys ? "u (eV/V)" : "u (internal energy / V)";
    plot.metadata = {{"kind", "unit_potential"}, {"config_hash", hash}};
    SvgBand band;
    band.x = xs;
    for (std::size_t i = 0; i < n; ++i) {
        band.y_lo.push_back(mean[i] - spread[i]);
        band.y_hi.push_back(mean[i] + spread[i]);
    }
    plot.bands.push_back(std::move(band));
    SvgSeries mean_series;
    mean_series.x = xs;
    mean_series.y = mean;
    mean_series.label = "stitched mean";
    plot.series.push_back(std::move(mean_series));
    if (cfg.potential.kind == "trap" && electrode < cfg.potential.geometry_um.strips.size()) {
        SvgSeries model;
        model.colour = "#d1495b";
        model.dashed = true;
        model.label = "strip model";
        const TrapGeometry geom = cfg.geometry_internal();
        const Strip& strip = geom.strips[electrode];
        for (std::size_t i = 0; i < n; ++i) {
            const double u_ev = strip_unit_potential(unit.x[i], strip, geom.height);
            model.x.push_back(xs[i]);
            model.y.push_back(phys ? u_ev : us.energy_to_internal(u_ev));
        }
        plot.series.push_back(std::move(model));
    }
    write_svg_plot((dir / "unit_potential.svg").string(), plot);

    RunReport report;
    report.notes.push_back("unit potential over [" + fmt_short(xs.front()) + ", " +
                           fmt_short(xs.back()) + "] " + (phys ? "um" : "internal") +
                           " from " + std::to_string(records.size()) + " records; outputs in " +
                           dir.string());
    return report;
}

RunReport run_shuttle(const std::string& config_path, const std::string& session_path,
                      const std::string& out_dir, const json& overrides) {
    RunReport report;
    ShuttleScanMap map;
    ScenarioConfig cfg;
    if (session_path.empty()) {
        if (config_path.empty())
            throw InvalidArgument("shuttle needs a config (synthetic mode) or a session");
        cfg = config_for(config_path, overrides);
        if (cfg.scan.deltas.empty())
            throw ConfigError("scan.deltas must list the scan values for a synthetic shuttle");
        const UnitSystem us = cfg.units();
        const Potential1D pot0 = cfg.build_potential(cfg.scan.deltas.front(), std::nullopt);
        SolverConfig sol = cfg.solver.to_config(us);
        sol.search_interval = cfg.default_window(pot0, std::nullopt);
        map = shuttle_scan(
            [&cfg](double delta) { return cfg.build_potential(delta, std::nullopt); },
            cfg.scan.deltas, cfg.ions, sol, recon_options(cfg, us),
            cfg.shuttle.to_options(us), us);
    } else {
        const json session = read_json_file(session_path);
        if (session.value("kind", std::string()) != "session")
            throw ConfigError("'" + session_path + "' is not a reconstruction session");
        cfg = embedded_config(session, session_path, overrides);
        const std::vector<MeasurementRecord> records =
            session_records(session, fs::path(session_path).parent_path());
        map = shuttle_scan_from_records(records, cfg.shuttle.to_options(cfg.units()));
    }

    const UnitSystem us = cfg.units();
    const std::string hash = config_hash_hex(cfg);
    const fs::path dir = ensure_dir(out_dir);
    const bool phys = physical_output(cfg);

    // Map: one x column plus one psi column per delta.
    CsvTable mt;
    stamp_common(mt, "shuttle_map", hash, cfg);
    mt.add_meta("deltas", vec_to_str(map.deltas));
    {
        std::string solved;
        for (std::size_t d = 0; d < map.solved.size(); ++d) {
            if (d) solved += ' ';
            solved += map.solved[d] ? '1' : '0';
        }
        mt.add_meta("solved", solved);
    }
    mt.columns.push_back(phys ? "x_um" : "x");
    std::vector<double> xs(map.x.size());
    for (std::size_t i = 0; i < map.x.size(); ++i)
        xs[i] = phys ? us.internal_to_um(map.x[i]) : map.x[i];
    mt.data.push_back(xs);
    for (std::size_t d = 0; d < map.deltas.size(); ++d) {
        mt.columns.push_back("psi_" + pad3(d));
        std::vector<double> col(map.x.size());
        for (std::size_t i = 0; i < map.x.size(); ++i)
            col[i] = phys ? us.internal_to_mev(map.psi[d][i]) : map.psi[d][i];
        mt.data.push_back(std::move(col));
    }
    write_csv((dir / "map.csv").string(), mt);

    // Wells: long format, one row per well (or a NaN row for none).
    CsvTable wt;
    stamp_common(wt, "shuttle_wells", hash, cfg);
    wt.columns = {"delta", "solved", "well_count", phys ? "x_well_um" : "x_well"};
    std::vector<double> wc_delta, wc_solved, wc_count, wc_x;
    for (std::size_t d = 0; d < map.deltas.size(); ++d) {
        const auto& minima = map.minima[d];
        if (minima.empty()) {
            wc_delta.push_back(map.deltas[d]);
            wc_solved.push_back(map.solved[d] ? 1.0 : 0.0);
            wc_count.push_back(double(map.well_count[d]));
            wc_x.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        for (double m : minima) {
            wc_delta.push_back(map.deltas[d]);
            wc_solved.push_back(map.solved[d] ? 1.0 : 0.0);
            wc_count.push_back(double(map.well_count[d]));
            wc_x.push_back(phys ? us.internal_to_um(m) : m);
        }
    }
    wt.data = {wc_delta, wc_solved, wc_count, wc_x};
    write_csv((dir / "wells.csv").string(), wt);

    // Contours in the (delta, x) plane plus well trajectories.
    const std::vector<ContourLine> contours =
        equipotential_contours(map, us.mev_to_internal(cfg.shuttle.contour_mev));
    SvgPlot plot;
    plot.title = "Shuttle scan";
    plot.x_label = "delta (V)";
    plot.y_label = phys ? "x (um)" : "x (internal)";
    plot.metadata = {{"kind", "shuttle_contours"},
                     {"config_hash", hash},
                     {"contour_mev", format_double(cfg.shuttle.contour_mev)}};
    for (const ContourLine& line : contours) {
        SvgSeries s;
        s.colour = "#9aa7b5";
        s.stroke_width = 1.0;
        for (const auto& [d, x] : line.points) {
            s.x.push_back(d);
            s.y.push_back(phys ? us.internal_to_um(x) : x);
        }
        plot.series.push_back(std::move(s));
    }
    SvgSeries wells_series;
    wells_series.colour = "#d1495b";
    wells_series.markers = true;
    wells_series.lines = false;
    wells_series.label = "potential wells";
    for (std::size_t d = 0; d < map.deltas.size(); ++d) {
        for (double m : map.minima[d]) {
            wells_series.x.push_back(map.deltas[d]);
            wells_series.y.push_back(phys ? us.internal_to_um(m) : m);
        }
    }
    plot.series.push_back(std::move(wells_series));
    write_svg_plot((dir / "contours.svg").string(), plot);

    json summary;
    summary["kind"] = "shuttle_summary";
    summary["schema_version"] = 1;
    summary["config_hash"] = hash;
    summary["contour_mev"] = cfg.shuttle.contour_mev;
    summary["deltas"] = map.deltas;
    summary["solved"] = map.solved;
    summary["well_count"] = map.well_count;
    {
        json minima = json::array();
        for (const auto& col : map.minima) {
            json row = json::array();
            for (double m : col) row.push_back(phys ? us.internal_to_um(m) : m);
            minima.push_back(std::move(row));
        }
        summary["minima"] = std::move(minima);
        summary["minima_units"] = phys ? "um" : "internal";
    }
    json failures = json::array();
    for (const std::string& f : map.failure_messages) failures.push_back(f);
    summary["failures"] = std::move(failures);
    write_json_file(dir / "shuttle.json", summary);

    std::size_t solved = 0;
    for (std::size_t d = 0; d < map.solved.size(); ++d) {
        if (map.solved[d]) ++solved;
        else report.notes.push_back("delta=" + fmt_short(map.deltas[d]) + ": " +
                                    map.failure_messages[d]);
    }
    std::string wells;
    for (std::size_t d = 0; d < map.well_count.size(); ++d) {
        if (d) wells += ' ';
        wells += std::to_string(map.well_count[d]);
    }
    report.notes.push_back("well counts along the scan: " + wells + "; outputs in " +
                           dir.string());
    report.exit_code = solved == map.deltas.size() ? 0 : 2;
    return report;
}

RunReport run_image_gen(const std::string& positions_path, const std::string& out_dir,
                        const std::string& config_path, const json& overrides) {
    const ScenarioConfig cfg = config_for(config_path, overrides);
    const std::string hash = config_hash_hex(cfg);
    const fs::path dir = ensure_dir(out_dir);

    PositionsFile pos = load_positions_csv(positions_path);
    RenderConfig rc = cfg.imaging.render;
    rc.seed = cfg.seed;
    const Frame frame = render_frame(pos.um, rc);

    write_frame_png((dir / "frame.png").string(), frame,
                    {{"kind", "ion_frame"}, {"schema_version", "1"}, {"config_hash", hash}});

    CsvTable t;
    stamp_common(t, "frame_counts", hash, cfg);
    t.add_meta("width", std::to_string(frame.width));
    t.add_meta("height", std::to_string(frame.height));
    t.add_meta("pitch_um", format_double(frame.pitch_um));
    t.add_meta("exposure_ms", format_double(frame.exposure_ms));
    for (int c = 0; c < frame.width; ++c) {
        t.columns.push_back("col_" + std::to_string(c));
        std::vector<double> col(frame.height);
        for (int r = 0; r < frame.height; ++r) col[std::size_t(r)] = frame.at(r, c);
        t.data.push_back(std::move(col));
    }
    write_csv((dir / "frame_counts.csv").string(), t);

    RunReport report;
    report.notes.push_back(std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                           " frame with " + std::to_string(pos.um.size()) +
                           " ions written to " + dir.string());
    return report;
}

RunReport run_image_fit(const std::string& frame_path, const std::string& out_dir,
                        const std::string& config_path, const json& overrides) {
    const ScenarioConfig cfg = config_for(config_path, overrides);
    const UnitSystem us = cfg.units();
    const std::string hash = config_hash_hex(cfg);
    const fs::path dir = ensure_dir(out_dir);

    const Frame frame = read_frame_png(frame_path);
    const ExtractResult ex = extract_string(frame, cfg.imaging.fit, us);

    CsvTable t;
    stamp_common(t, "ion_positions", hash, cfg);
    t.add_meta("source", fs::path(frame_path).filename().string());
    t.add_meta("pitch_um", format_double(frame.pitch_um));
    const std::size_t n = ex.fit.peaks.size();
    std::vector<double> idx(n), x_px(n), x_um(n), sig_um(n), merged(n);
    for (std::size_t i = 0; i < n; ++i) {
        idx[i] = double(i);
        x_px[i] = ex.fit.peaks[i].position_px;
        x_um[i] = frame.px_to_um(ex.fit.peaks[i].position_px);
        sig_um[i] = ex.fit.peaks[i].position_unc_px * frame.pitch_um;
        merged[i] = ex.fit.peaks[i].merged ? 1.0 : 0.0;
    }
    t.columns = {"index", "x_px", "x_um", "sigma_um", "merged"};
    t.data = {idx, x_px, x_um, sig_um, merged};
    write_csv((dir / "fit.csv").string(), t);

    const std::vector<double> profile = column_profile(frame);
    SvgPlot plot;
    plot.title = "Column profile fit (" + std::to_string(n) + " ions)";
    plot.x_label = "column (px)";
    plot.y_label = "counts";
    plot.metadata = {{"kind", "ion_positions"}, {"config_hash", hash}};
    SvgSeries prof;
    prof.label = "profile";
    for (std::size_t c = 0; c < profile.size(); ++c) {
        prof.x.push_back(double(c) + 0.5);
        prof.y.push_back(profile[c]);
    }
    plot.series.push_back(std::move(prof));
    SvgSeries bg;
    bg.colour = "#2e8b57";
    bg.dashed = true;
    bg.label = "background";
    for (std::size_t c = 0; c < ex.fit.background.size(); ++c) {
        bg.x.push_back(double(c) + 0.5);
        bg.y.push_back(ex.fit.background[c]);
    }
    plot.series.push_back(std::move(bg));
    SvgSeries marks;
    marks.colour = "#d1495b";
    marks.markers = true;
    marks.lines = false;
    marks.label = "fitted ions";
    for (const PeakFit& p : ex.fit.peaks) {
        marks.x.push_back(p.position_px);
        const std::size_t c = std::min(profile.size() - 1,
                                       std::size_t(std::max(0.0, p.position_px)));
        marks.y.push_back(profile[c]);
    }
    plot.series.push_back(std::move(marks));
    write_svg_plot((dir / "fit.svg").string(), plot);

    RunReport report;
    std::size_t merged_count = 0;
    for (const PeakFit& p : ex.fit.peaks)
        if (p.merged) ++merged_count;
    if (merged_count > 0)
        report.notes.push_back(std::to_string(merged_count) +
                               " peaks closer than the merge separation; positions may be "
                               "biased");
    report.notes.push_back(std::to_string(n) + " ions fitted; fit.csv written to " +
                           dir.string());
    return report;
}

} // namespace ionpot
