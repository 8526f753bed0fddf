/* C interface to the ionpot library.
 *
 * Every function returns an ionpot_status; out-parameters are written only
 * on IONPOT_OK. Objects returned through ** out-parameters are owned by the
 * caller and released with the matching _destroy function. Error messages
 * and pipeline notes are thread-local.
 *
 * Unless noted otherwise, positions and energies are in the library's
 * internal units: lengths scaled by the unit system's length unit (1 um by
 * default), energies scaled so the Coulomb constant of two unit charges
 * equals 1 (~1.44 meV at the 1 um scale).
 */
#ifndef IONPOT_H
#define IONPOT_H

#include <stddef.h>

#ifndef IONPOT_API
#define IONPOT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ionpot_status {
    IONPOT_OK = 0,
    IONPOT_ERR_INVALID = 1, /* bad arguments, configuration or input format */
    IONPOT_ERR_NUMERIC = 2, /* numerical failure or partial results */
    IONPOT_ERR_IO = 3,      /* filesystem failure */
} ionpot_status;

/* Message for the most recent failure in this thread ("" when none). */
IONPOT_API const char* ionpot_last_error(void);

/* Newline-joined notes from the most recent pipeline command in this
 * thread; valid until the next pipeline call on the thread. */
IONPOT_API const char* ionpot_last_notes(void);

typedef struct ionpot_units ionpot_units;
typedef struct ionpot_potential ionpot_potential;
typedef struct ionpot_string ionpot_string;
typedef struct ionpot_curve ionpot_curve;

/* ---- unit system ---------------------------------------------------- */

/* length_unit_m: metres per internal length unit (1e-6 for the default). */
IONPOT_API ionpot_status ionpot_units_create(double length_unit_m, ionpot_units** out);
IONPOT_API void ionpot_units_destroy(ionpot_units* units);

/* Energy unit in eV pinned by the length unit. */
IONPOT_API ionpot_status ionpot_units_energy_unit_ev(const ionpot_units* units, double* out);

/* ---- external potentials -------------------------------------------- */

/* 0.5 * stiffness * (x - centre)^2 */
IONPOT_API ionpot_status ionpot_potential_harmonic(double stiffness, double centre,
                                                   ionpot_potential** out);
/* a x^4 - b x^2 */
IONPOT_API ionpot_status ionpot_potential_quartic(double a, double b, ionpot_potential** out);
/* slope * x */
IONPOT_API ionpot_status ionpot_potential_tilt(double slope, ionpot_potential** out);
IONPOT_API ionpot_status ionpot_potential_sum(const ionpot_potential* a,
                                              const ionpot_potential* b,
                                              ionpot_potential** out);
IONPOT_API ionpot_status ionpot_potential_value(const ionpot_potential* p, double x,
                                                double* out);
IONPOT_API ionpot_status ionpot_potential_deriv(const ionpot_potential* p, double x,
                                                double* out);
IONPOT_API void ionpot_potential_destroy(ionpot_potential* p);

/* ---- equilibrium ----------------------------------------------------- */

/* Minimizes the string energy for `ions` ions inside [window_lo, window_hi]
 * (pass window_lo >= window_hi to use the potential's own domain). Fails
 * with IONPOT_ERR_NUMERIC when no stable equilibrium is found. */
IONPOT_API ionpot_status ionpot_solve_equilibrium(const ionpot_potential* potential,
                                                  size_t ions, double window_lo,
                                                  double window_hi, double gradient_tol,
                                                  int max_iterations,
                                                  const ionpot_units* units,
                                                  ionpot_string** out);

/* Strictly increasing positions, internal units. */
IONPOT_API ionpot_status ionpot_string_create(const double* positions, size_t count,
                                              const ionpot_units* units,
                                              ionpot_string** out);
IONPOT_API ionpot_status ionpot_string_count(const ionpot_string* s, size_t* out);
/* Copies up to `capacity` positions; fails when capacity is too small. */
IONPOT_API ionpot_status ionpot_string_positions(const ionpot_string* s, double* buffer,
                                                 size_t capacity);
IONPOT_API void ionpot_string_destroy(ionpot_string* s);

/* ---- reconstruction -------------------------------------------------- */

/* Inverse step: equilibrium spacings -> potential curve on a uniform grid.
 * offset: 0 = minimum at zero, 1 = zero mean, 2 = zero at anchor_x. */
IONPOT_API ionpot_status ionpot_reconstruct(const ionpot_string* string,
                                            double grid_spacing, int offset,
                                            double anchor_x, ionpot_curve** out);
IONPOT_API ionpot_status ionpot_curve_size(const ionpot_curve* c, size_t* out);
/* Copies the sampled grid and values; either pointer may be NULL. */
IONPOT_API ionpot_status ionpot_curve_samples(const ionpot_curve* c, double* x, double* psi,
                                              size_t capacity);
/* Cubic interpolation inside the curve's span. */
IONPOT_API ionpot_status ionpot_curve_value(const ionpot_curve* c, double x, double* out);
IONPOT_API void ionpot_curve_destroy(ionpot_curve* c);

/* ---- pipeline commands ----------------------------------------------- */
/* File-based entry points mirroring the CLI subcommands. Optional string
 * arguments accept NULL or ""; overrides_json is a JSON object of flag
 * overrides (units, seed, grid_um, offset, delta_min_mv, contour_mev,
 * electrode, ions) or NULL. On IONPOT_ERR_NUMERIC partial outputs may have
 * been written; ionpot_last_notes() describes what happened. */

IONPOT_API ionpot_status ionpot_cmd_simulate(const char* config_path, const char* out_dir,
                                             const char* overrides_json);
IONPOT_API ionpot_status ionpot_cmd_reconstruct(const char* input_path, const char* out_dir,
                                                const char* config_path,
                                                const char* overrides_json);
IONPOT_API ionpot_status ionpot_cmd_isolate(const char* session_path, const char* out_dir,
                                            const char* overrides_json);
IONPOT_API ionpot_status ionpot_cmd_shuttle(const char* config_path,
                                            const char* session_path, const char* out_dir,
                                            const char* overrides_json);
IONPOT_API ionpot_status ionpot_cmd_image_gen(const char* positions_path,
                                              const char* out_dir, const char* config_path,
                                              const char* overrides_json);
IONPOT_API ionpot_status ionpot_cmd_image_fit(const char* frame_path, const char* out_dir,
                                              const char* config_path,
                                              const char* overrides_json);

#ifdef __cplusplus
}
#endif

#endif
