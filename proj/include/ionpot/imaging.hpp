#ifndef IONPOT_IMAGING_HPP
#define IONPOT_IMAGING_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "ionpot/physics.hpp"
#include "ionpot/units.hpp"

namespace ionpot {

// 2D photon-count image. Row-major, counts[row * width + col]. The axial
// direction runs along columns and the sensor is centred on the trap axis:
// physical x = 0 maps to the continuous pixel coordinate width / 2, so a
// string centred at the origin lands mid-frame.
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<double> counts;
    double pitch_um = 2.0;
    double exposure_ms = 100.0;

    double at(int row, int col) const { return counts[std::size_t(row) * width + col]; }
    double um_to_px(double x_um) const { return 0.5 * width + x_um / pitch_um; }
    double px_to_um(double x_px) const { return (x_px - 0.5 * width) * pitch_um; }
    void validate() const;
};

// Slowly varying illumination model underneath the ion spots, specified as
// expected counts per pixel as a function of the column.
struct BackgroundModel {
    double offset = 0.0;        // flat term
    double slope = 0.0;         // linear term per pixel column
    double vignette_amp = 0.0;  // broad Gaussian bump centred mid-frame
    double vignette_sigma_px = 0.0;

    double counts_per_pixel(double col, int width) const;
};

struct RenderConfig {
    int width = 256;
    int height = 32;
    double pitch_um = 2.0;
    double psf_sigma_um = 2.0;
    double peak_counts = 1e4;  // expected photons per ion spot (integral)
    double exposure_ms = 100.0;
    BackgroundModel background;
    bool poisson_noise = true;
    std::uint64_t seed = 1;
    double row_centre_px = -1.0;  // < 0: middle of the frame
};

// Expected image = sum of pixel-integrated Gaussian spots + background;
// with poisson_noise each pixel is an independent Poisson draw, bit-stable
// for a fixed seed. Positions must lie inside the frame.
Frame render_frame(const std::vector<double>& positions_um, const RenderConfig& config);

// Exact per-column sums.
std::vector<double> column_profile(const Frame& frame);

// Moving median with peak masking; window must be odd, >= 3 and no wider
// than the profile. Ends are handled by odd reflection so linear trends
// survive untouched.
std::vector<double> estimate_background(std::span<const double> profile, int window = 25);

struct FitConfig {
    int background_window = 25;
    double detection_threshold = 5.0;  // x robust noise above background
    double psf_sigma_px = 1.0;
    double merge_separation_px = 2.0;
    int max_refine_iterations = 40;
};

struct PeakFit {
    double position_px = 0.0;  // continuous pixel coordinate, 0 at the left edge
    double position_unc_px = 0.0;
    double amplitude = 0.0;
    double sigma_px = 0.0;
    bool merged = false;  // closer than merge_separation_px to a neighbour
};

struct FitResult {
    std::vector<PeakFit> peaks;          // ordered by position
    std::vector<double> background;      // curve actually subtracted
    double pitch_um = 2.0;
    double origin_px = 0.0;              // pixel coordinate of physical x = 0

    std::vector<double> positions_px() const;
    std::vector<double> positions_um() const;  // (px - origin_px) * pitch
    std::vector<double> uncertainties_um() const;
};

// Sub-pixel peak positions: detection against a robust noise floor, then a
// count-weighted centroid refined by a 3-parameter Gaussian least-squares
// fit on a +-3 sigma window. The profile is assumed to span the full frame
// width, so physical x = 0 sits at its midpoint. Throws NumericError when
// nothing clears the detection threshold.
FitResult fit_positions(std::span<const double> profile, std::span<const double> background,
                        const FitConfig& config, double pitch_um);

struct ExtractResult {
    IonString string;                  // physical positions, internal units
    std::vector<double> sigma_um;      // per-ion positional uncertainty
    FitResult fit;
};

// Frame -> column profile -> background -> weighted fit -> IonString.
ExtractResult extract_string(const Frame& frame, const FitConfig& config = {},
                             const UnitSystem& units = UnitSystem::micrometre_scale());

} // namespace ionpot

#endif
