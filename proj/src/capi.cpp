#include "ionpot.h"

#include <cstring>
#include <exception>
#include <optional>
#include <string>
#include <utility>

#include <json.hpp>

#include "ionpot/equilibrium.hpp"
#include "ionpot/errors.hpp"
#include "ionpot/pipeline.hpp"
#include "ionpot/potential.hpp"
#include "ionpot/reconstruction.hpp"
#include "ionpot/units.hpp"

using nlohmann::json;

struct ionpot_units {
    ionpot::UnitSystem value;
};
struct ionpot_potential {
    ionpot::Potential1D value;
};
struct ionpot_string {
    ionpot::IonString value;
};
struct ionpot_curve {
    ionpot::PotentialCurve value;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_notes;

ionpot_status status_of(const std::exception& e) {
    g_error = e.what();
    if (dynamic_cast<const ionpot::IoError*>(&e)) return IONPOT_ERR_IO;
    if (dynamic_cast<const ionpot::NumericError*>(&e)) return IONPOT_ERR_NUMERIC;
    if (dynamic_cast<const ionpot::Error*>(&e)) return IONPOT_ERR_INVALID;
    return IONPOT_ERR_NUMERIC;
}

// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
ionpot_status guarded(Fn&& fn) {
    try {
        g_error.clear();
        return fn();
    } catch (const std::exception& e) {
        return status_of(e);
    } catch (...) {
        g_error = "unknown error";
        return IONPOT_ERR_NUMERIC;
    }
}

ionpot_status invalid(const char* msg) {
    g_error = msg;
    return IONPOT_ERR_INVALID;
}

std::string opt_str(const char* s) { return s ? std::string(s) : std::string(); }

json parse_overrides(const char* overrides_json) {
    if (!overrides_json || !*overrides_json) return json::object();
    try {
        return json::parse(overrides_json);
    } catch (const json::parse_error& e) {
        throw ionpot::InvalidArgument(std::string("overrides json: ") + e.what());
    }
}

ionpot_status run_command(ionpot::RunReport (*fn)(const std::string&, const std::string&,
                                                  const json&),
                          const char* a, const char* b, const char* overrides_json) {
    return guarded([&]() -> ionpot_status {
        g_notes.clear();
        const ionpot::RunReport report = fn(opt_str(a), opt_str(b),
                                            parse_overrides(overrides_json));
        g_notes = report.joined();
        if (report.exit_code == 0) return IONPOT_OK;
        g_error = "partial results; see ionpot_last_notes()";
        return IONPOT_ERR_NUMERIC;
    });
}

ionpot_status run_command3(ionpot::RunReport (*fn)(const std::string&, const std::string&,
                                                   const std::string&, const json&),
                           const char* a, const char* b, const char* c,
                           const char* overrides_json) {
    return guarded([&]() -> ionpot_status {
        g_notes.clear();
        const ionpot::RunReport report = fn(opt_str(a), opt_str(b), opt_str(c),
                                            parse_overrides(overrides_json));
        g_notes = report.joined();
        if (report.exit_code == 0) return IONPOT_OK;
        g_error = "partial results; see ionpot_last_notes()";
        return IONPOT_ERR_NUMERIC;
    });
}

} // namespace

extern "C" {

const char* ionpot_last_error(void) { return g_error.c_str(); }
const char* ionpot_last_notes(void) { return g_notes.c_str(); }

ionpot_status ionpot_units_create(double length_unit_m, ionpot_units** out) {
    if (!out) return invalid("out must not be NULL");
    return guarded([&]() -> ionpot_status {
        *out = new ionpot_units{ionpot::UnitSystem::with_length_unit_m(length_unit_m)};
        return IONPOT_OK;
    });
}

void ionpot_units_destroy(ionpot_units* units) { delete units; }

ionpot_status ionpot_units_energy_unit_ev(const ionpot_units* units, double* out) {
    if (!units || !out) return invalid("units and out must not be NULL");
    *out = units->value.energy_unit_ev();
    return IONPOT_OK;
}

ionpot_status ionpot_potential_harmonic(double stiffness, double centre,
                                        ionpot_potential** out) {
    if (!out) return invalid("out must not be NULL");
    return guarded([&]() -> ionpot_status {
        *out = new ionpot_potential{ionpot::Potential1D::harmonic(stiffness, centre)};
        return IONPOT_OK;
    });
}

ionpot_status ionpot_potential_quartic(double a, double b, ionpot_potential** out) {
    if (!out) return invalid("out must not be NULL");
    return guarded([&]() -> ionpot_status {
        *out = new ionpot_potential{ionpot::Potential1D::quartic(a, b)};
        return IONPOT_OK;
    });
}

ionpot_status ionpot_potential_tilt(double slope, ionpot_potential** out) {
    if (!out) return invalid("out must not be NULL");
    return guarded([&]() -> ionpot_status {
        *out = new ionpot_potential{ionpot::Potential1D::linear_tilt(slope)};
        return IONPOT_OK;
    });
}

ionpot_status ionpot_potential_sum(const ionpot_potential* a, const ionpot_potential* b,
                                   ionpot_potential** out) {
    if (!a || !b || !out) return invalid("a, b and out must not be NULL");
    return guarded([&]() -> ionpot_status {
        *out = new ionpot_potential{a->value + b->value};
        return IONPOT_OK;
    });
}

ionpot_status ionpot_potential_value(const ionpot_potential* p, double x, double* out) {
    if (!p || !out) return invalid("p and out must not be NULL");
    return guarded([&]() -> ionpot_status {
        *out = p->value.value(x);
        return IONPOT_OK;
    });
}

ionpot_status ionpot_potential_deriv(const ionpot_potential* p, double x, double* out) {
    if (!p || !out) return invalid("p and out must not be NULL");
    return guarded([&]() -> ionpot_status {
        *out = p->value.deriv(x);
        return IONPOT_OK;
    });
}

void ionpot_potential_destroy(ionpot_potential* p) { delete p; }

ionpot_status ionpot_solve_equilibrium(const ionpot_potential* potential, size_t ions,
                                       double window_lo, double window_hi,
                                       double gradient_tol, int max_iterations,
                                       const ionpot_units* units, ionpot_string** out) {
    if (!potential || !out) return invalid("potential and out must not be NULL");
    return guarded([&]() -> ionpot_status {
        ionpot::SolverConfig config;
        if (window_lo < window_hi) config.search_interval = {window_lo, window_hi};
        if (gradient_tol > 0.0) config.gradient_tol = gradient_tol;
        if (max_iterations > 0) config.max_iterations = max_iterations;
        const ionpot::UnitSystem us =
            units ? units->value : ionpot::UnitSystem::micrometre_scale();
        ionpot::EquilibriumResult result =
            ionpot::solve_equilibrium(potential->value, ions, config, us);
        if (!result.converged)
            throw ionpot::NumericError("equilibrium solver did not converge");
        if (!result.stable)
            throw ionpot::NumericError("equilibrium found but it is not stable");
        *out = new ionpot_string{std::move(result.string)};
        return IONPOT_OK;
    });
}

ionpot_status ionpot_string_create(const double* positions, size_t count,
                                   const ionpot_units* units, ionpot_string** out) {
    if (!positions || !out) return invalid("positions and out must not be NULL");
    return guarded([&]() -> ionpot_status {
        const ionpot::UnitSystem us =
            units ? units->value : ionpot::UnitSystem::micrometre_scale();
        *out = new ionpot_string{
            ionpot::IonString(std::vector<double>(positions, positions + count), us)};
        return IONPOT_OK;
    });
}

ionpot_status ionpot_string_count(const ionpot_string* s, size_t* out) {
    if (!s || !out) return invalid("s and out must not be NULL");
    *out = s->value.count();
    return IONPOT_OK;
}

ionpot_status ionpot_string_positions(const ionpot_string* s, double* buffer,
                                      size_t capacity) {
    if (!s || !buffer) return invalid("s and buffer must not be NULL");
    const auto& positions = s->value.positions();
    if (capacity < positions.size()) return invalid("buffer capacity is too small");
    std::memcpy(buffer, positions.data(), positions.size() * sizeof(double));
    return IONPOT_OK;
}

void ionpot_string_destroy(ionpot_string* s) { delete s; }

ionpot_status ionpot_reconstruct(const ionpot_string* string, double grid_spacing,
                                 int offset, double anchor_x, ionpot_curve** out) {
    if (!string || !out) return invalid("string and out must not be NULL");
    if (offset < 0 || offset > 2) return invalid("offset must be 0, 1 or 2");
    return guarded([&]() -> ionpot_status {
        ionpot::ReconstructOptions options;
        if (grid_spacing > 0.0) options.grid.spacing = grid_spacing;
        options.offset = static_cast<ionpot::OffsetConvention>(offset);
        options.anchor_x = anchor_x;
        *out = new ionpot_curve{ionpot::reconstruct(string->value, options)};
        return IONPOT_OK;
    });
}

ionpot_status ionpot_curve_size(const ionpot_curve* c, size_t* out) {
    if (!c || !out) return invalid("c and out must not be NULL");
    *out = c->value.size();
    return IONPOT_OK;
}

ionpot_status ionpot_curve_samples(const ionpot_curve* c, double* x, double* psi,
                                   size_t capacity) {
    if (!c) return invalid("c must not be NULL");
    const auto& xs = c->value.x();
    const auto& ps = c->value.psi();
    if (capacity < xs.size()) return invalid("buffer capacity is too small");
    if (x) std::memcpy(x, xs.data(), xs.size() * sizeof(double));
    if (psi) std::memcpy(psi, ps.data(), ps.size() * sizeof(double));
    return IONPOT_OK;
}

ionpot_status ionpot_curve_value(const ionpot_curve* c, double x, double* out) {
    if (!c || !out) return invalid("c and out must not be NULL");
    return guarded([&]() -> ionpot_status {
        *out = c->value.value(x);
        return IONPOT_OK;
    });
}

void ionpot_curve_destroy(ionpot_curve* c) { delete c; }

ionpot_status ionpot_cmd_simulate(const char* config_path, const char* out_dir,
                                  const char* overrides_json) {
    return run_command(&ionpot::run_simulate, config_path, out_dir, overrides_json);
}

ionpot_status ionpot_cmd_reconstruct(const char* input_path, const char* out_dir,
                                     const char* config_path, const char* overrides_json) {
    return run_command3(&ionpot::run_reconstruct, input_path, out_dir, config_path,
                        overrides_json);
}

ionpot_status ionpot_cmd_isolate(const char* session_path, const char* out_dir,
                                 const char* overrides_json) {
    return run_command(&ionpot::run_isolate, session_path, out_dir, overrides_json);
}

ionpot_status ionpot_cmd_shuttle(const char* config_path, const char* session_path,
                                 const char* out_dir, const char* overrides_json) {
    return run_command3(&ionpot::run_shuttle, config_path, session_path, out_dir,
                        overrides_json);
}

ionpot_status ionpot_cmd_image_gen(const char* positions_path, const char* out_dir,
                                   const char* config_path, const char* overrides_json) {
    return run_command3(&ionpot::run_image_gen, positions_path, out_dir, config_path,
                        overrides_json);
}

ionpot_status ionpot_cmd_image_fit(const char* frame_path, const char* out_dir,
                                   const char* config_path, const char* overrides_json) {
    return run_command3(&ionpot::run_image_fit, frame_path, out_dir, config_path,
                        overrides_json);
}

} // extern "C"
