#ifndef IONPOT_PIPELINE_HPP
#define IONPOT_PIPELINE_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "ionpot/scenario.hpp"

namespace ionpot {

// Outcome of one pipeline command. exit_code follows the CLI convention:
// 0 = success, 2 = partial results (some records failed but outputs were
// written). Hard failures are thrown instead: InvalidArgument/ConfigError
// map to 1, NumericError to 2, IoError to 3.
struct RunReport {
    int exit_code = 0;
    std::vector<std::string> notes;

    std::string joined() const;  // notes joined with '\n'
};

// Flag-style overrides applied on top of a parsed config; the config hash
// stamped on outputs reflects the effective (post-override) config. Keys:
//   units         "physical" | "internal"
//   seed          non-negative integer
//   grid_um       number > 0 (output grids of reconstruct/isolate/shuttle)
//   offset        "min-zero" | "mean-zero" | "anchor=<x_um>"
//   delta_min_mv  number >= 0, millivolts
//   contour_mev   number > 0
//   electrode     non-negative integer
//   ions          integer >= 1
// Unknown keys are rejected.
void apply_overrides(ScenarioConfig& config, const nlohmann::json& overrides);

// Solve the configured scan (stations x deltas). Writes one equilibrium
// positions CSV per record plus manifest.json describing the whole batch.
RunReport run_simulate(const std::string& config_path, const std::string& out_dir,
                       const nlohmann::json& overrides = nlohmann::json::object());

// input_path may be a positions CSV (single curve: curve.csv + curve.svg)
// or a simulate manifest.json (batch: curve_NNN.csv per record, overlay
// curves.svg, session.json for the downstream stages). config_path is
// optional for the single-CSV form; the manifest form reuses the embedded
// config and ignores config_path.
RunReport run_reconstruct(const std::string& input_path, const std::string& out_dir,
                          const std::string& config_path = "",
                          const nlohmann::json& overrides = nlohmann::json::object());

// session.json -> stitched unit-voltage potential of the scanned electrode
// (unit_potential.csv + unit_potential.svg).
RunReport run_isolate(const std::string& session_path, const std::string& out_dir,
                      const nlohmann::json& overrides = nlohmann::json::object());

// Delta scan. Synthetic mode (session_path empty): solve + reconstruct per
// delta from the config. Data mode: reuse the session's curves. Writes
// map.csv, wells.csv, contours.svg and shuttle.json.
RunReport run_shuttle(const std::string& config_path, const std::string& session_path,
                      const std::string& out_dir,
                      const nlohmann::json& overrides = nlohmann::json::object());

// positions CSV -> synthetic camera frame (frame.png + frame_counts.csv).
RunReport run_image_gen(const std::string& positions_path, const std::string& out_dir,
                        const std::string& config_path = "",
                        const nlohmann::json& overrides = nlohmann::json::object());

// frame PNG -> sub-pixel ion positions (fit.csv + fit.svg). fit.csv doubles
// as a positions CSV, so it feeds straight back into run_reconstruct.
RunReport run_image_fit(const std::string& frame_path, const std::string& out_dir,
                        const std::string& config_path = "",
                        const nlohmann::json& overrides = nlohmann::json::object());

} // namespace ionpot

#endif
