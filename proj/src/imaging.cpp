#include "ionpot/imaging.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ionpot/errors.hpp"

namespace ionpot {

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) throw InvalidArgument("median of empty range");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + long(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + long(mid) - 1, v.begin() + long(mid));
        m = 0.5 * (m + v[mid - 1]);
    }
    return m;
}

// sigma estimate from the median absolute deviation; 1.4826 calibrates the
// MAD to a normal sigma.
double robust_sigma(std::span<const double> v) {
    std::vector<double> tmp(v.begin(), v.end());
    const double med = median_of(tmp);
    for (double& t : tmp) t = std::abs(t - med);
    return 1.4826 * median_of(std::move(tmp));
}

// Integral of a unit Gaussian centred at mu over [a, b].
double gauss_cell(double a, double b, double mu, double sigma) {
    const double s = sigma * std::numbers::sqrt2;
    return 0.5 * (std::erf((b - mu) / s) - std::erf((a - mu) / s));
}

} // namespace

void Frame::validate() const {
    if (width < 1 || height < 1) throw InvalidArgument("frame must be at least 1x1");
    if (counts.size() != std::size_t(width) * std::size_t(height)) {
        throw InvalidArgument("frame count buffer size mismatch");
    }
    if (!(pitch_um > 0.0)) throw InvalidArgument("pixel pitch must be positive");
    if (!(exposure_ms > 0.0)) throw InvalidArgument("exposure must be positive");
    for (double c : counts) {
        if (!std::isfinite(c) || c < 0.0) {
            throw InvalidArgument("frame counts must be finite and non-negative");
        }
    }
}

double BackgroundModel::counts_per_pixel(double col, int width) const {
    double v = offset + slope * col;
    if (vignette_amp != 0.0) {
        if (!(vignette_sigma_px > 0.0)) {
            throw InvalidArgument("vignette needs a positive sigma");
        }
        const double mid = 0.5 * double(width - 1);
        const double z = (col - mid) / vignette_sigma_px;
        v += vignette_amp * std::exp(-0.5 * z * z);
    }
    return v;
}

Frame render_frame(const std::vector<double>& positions_um, const RenderConfig& config) {
    if (config.width < 1 || config.height < 1) {
        throw InvalidArgument("frame must be at least 1x1");
    }
    if (!(config.pitch_um > 0.0)) throw InvalidArgument("pixel pitch must be positive");
    if (!(config.psf_sigma_um > 0.0)) throw InvalidArgument("psf sigma must be positive");
    if (!(config.peak_counts >= 0.0)) throw InvalidArgument("peak counts must be >= 0");
    if (!(config.exposure_ms > 0.0)) throw InvalidArgument("exposure must be positive");

    const double sigma_px = config.psf_sigma_um / config.pitch_um;
    const double row_c =
        config.row_centre_px < 0.0 ? 0.5 * double(config.height) : config.row_centre_px;

    Frame frame;
    frame.width = config.width;
    frame.height = config.height;
    frame.pitch_um = config.pitch_um;
    frame.exposure_ms = config.exposure_ms;
    frame.counts.assign(std::size_t(config.width) * std::size_t(config.height), 0.0);

    for (double x_um : positions_um) {
        const double x_px = frame.um_to_px(x_um);
        if (x_px < 0.0 || x_px > double(config.width)) {
            throw InvalidArgument("ion position outside the frame");
        }
        // Pixel-integrated separable Gaussian; negligible tails are skipped.
        const int c0 = std::max(0, int(std::floor(x_px - 6.0 * sigma_px)));
        const int c1 = std::min(config.width - 1, int(std::ceil(x_px + 6.0 * sigma_px)));
        const int r0 = std::max(0, int(std::floor(row_c - 6.0 * sigma_px)));
        const int r1 = std::min(config.height - 1, int(std::ceil(row_c + 6.0 * sigma_px)));
        for (int r = r0; r <= r1; ++r) {
            const double fr = gauss_cell(double(r), double(r + 1), row_c, sigma_px);
            for (int c = c0; c <= c1; ++c) {
                const double fc = gauss_cell(double(c), double(c + 1), x_px, sigma_px);
                frame.counts[std::size_t(r) * config.width + c] +=
                    config.peak_counts * fr * fc;
            }
        }
    }

    for (int r = 0; r < config.height; ++r) {
        for (int c = 0; c < config.width; ++c) {
            frame.counts[std::size_t(r) * config.width + c] +=
                config.background.counts_per_pixel(double(c), config.width);
        }
    }

    if (config.poisson_noise) {
        std::mt19937_64 rng(config.seed);
        for (double& v : frame.counts) {
            if (v > 0.0) {
                std::poisson_distribution<long> draw(v);
                v = double(draw(rng));
            } else {
                v = 0.0;
            }
        }
    }
    return frame;
}

std::vector<double> column_profile(const Frame& frame) {
    frame.validate();
    std::vector<double> profile(std::size_t(frame.width), 0.0);
    for (int r = 0; r < frame.height; ++r) {
        for (int c = 0; c < frame.width; ++c) {
            profile[std::size_t(c)] += frame.at(r, c);
        }
    }
    return profile;
}

namespace {

// profile value at a possibly out-of-range index, odd-reflected about the
// ends so a straight line continues as the same straight line.
double reflected(std::span<const double> p, long i) {
    const long n = long(p.size());
    if (i < 0) return 2.0 * p[0] - p[std::size_t(-i)];
    if (i >= n) return 2.0 * p[std::size_t(n - 1)] - p[std::size_t(2 * (n - 1) - i)];
    return p[std::size_t(i)];
}

bool reflected_masked(const std::vector<char>& mask, long i) {
    const long n = long(mask.size());
    if (i < 0) return mask[std::size_t(-i)] != 0;
    if (i >= n) return mask[std::size_t(2 * (n - 1) - i)] != 0;
    return mask[std::size_t(i)] != 0;
}

std::vector<double> masked_moving_median(std::span<const double> p,
                                         const std::vector<char>& mask, int window) {
    const long n = long(p.size());
    const long half = window / 2;
    std::vector<double> out(p.size());
    std::vector<double> buf;
    for (long i = 0; i < n; ++i) {
        buf.clear();
        // Widen symmetrically until at least half a window of clean samples.
        for (long grow = half; grow <= 2 * half + n; ++grow) {
            buf.clear();
            for (long j = i - grow; j <= i + grow; ++j) {
                if (j <= -n || j >= 2 * n - 1) continue;
                if (!reflected_masked(mask, j)) buf.push_back(reflected(p, j));
            }
            if (long(buf.size()) > half) break;
        }
        if (buf.empty()) throw NumericError("background window fully masked");
        out[std::size_t(i)] = median_of(buf);
    }
    return out;
}

} // namespace

std::vector<double> estimate_background(std::span<const double> profile, int window) {
    if (profile.size() < 3) throw InvalidArgument("profile too short");
    if (window < 3 || window % 2 == 0) {
        throw InvalidArgument("background window must be odd and >= 3");
    }
    if (std::size_t(window) > profile.size()) {
        throw InvalidArgument("background window wider than the profile");
    }

    // Pass 1: plain moving median, to locate the peaks.
    const std::vector<char> no_mask(profile.size(), 0);
    std::vector<double> rough = masked_moving_median(profile, no_mask, window);
    std::vector<double> resid(profile.size());
    for (std::size_t i = 0; i < profile.size(); ++i) resid[i] = profile[i] - rough[i];
    const double noise = robust_sigma(resid);

    // Pass 2: re-estimate with peak pixels excluded.
    std::vector<char> mask(profile.size(), 0);
    if (noise > 0.0) {
        for (std::size_t i = 0; i < profile.size(); ++i) {
            if (resid[i] > 3.0 * noise) mask[i] = 1;
        }
    } else {
        for (std::size_t i = 0; i < profile.size(); ++i) {
            if (resid[i] > 0.0) mask[i] = 1;
        }
    }
    return masked_moving_median(profile, mask, window);
}

std::vector<double> FitResult::positions_px() const {
    std::vector<double> out;
    out.reserve(peaks.size());
    for (const auto& p : peaks) out.push_back(p.position_px);
    return out;
}

std::vector<double> FitResult::positions_um() const {
    std::vector<double> out;
    out.reserve(peaks.size());
    for (const auto& p : peaks) out.push_back((p.position_px - origin_px) * pitch_um);
    return out;
}

std::vector<double> FitResult::uncertainties_um() const {
    std::vector<double> out;
    out.reserve(peaks.size());
    for (const auto& p : peaks) out.push_back(p.position_unc_px * pitch_um);
    return out;
}

namespace {

struct GaussFit {
    double amplitude;
    double mu;
    double sigma;
    double mu_unc;
    bool ok;
};

// 3-parameter Gaussian least squares on net counts, weighted by the Poisson
// variance of the raw profile. Column c contributes at its centre c + 0.5.
GaussFit refine_gaussian(std::span<const double> net, std::span<const double> raw,
                         long w0, long w1, double a0, double mu0, double sigma0,
                         int max_iterations) {
    const long m = w1 - w0 + 1;
    Eigen::VectorXd y(m), w(m), centre(m);
    for (long i = 0; i < m; ++i) {
        y(i) = net[std::size_t(w0 + i)];
        w(i) = 1.0 / std::max(raw[std::size_t(w0 + i)], 1.0);
        centre(i) = double(w0 + i) + 0.5;
    }

    double A = std::max(a0, 1e-12), mu = mu0, sig = std::max(sigma0, 0.3);
    const auto chi2_of = [&](double A_, double mu_, double sig_) {
        double acc = 0.0;
        for (long i = 0; i < m; ++i) {
            const double z = (centre(i) - mu_) / sig_;
            const double r = y(i) - A_ * std::exp(-0.5 * z * z);
            acc += w(i) * r * r;
        }
        return acc;
    };

    double chi2 = chi2_of(A, mu, sig);
    Eigen::Matrix3d jtj;
    Eigen::Vector3d jtr;
    bool converged = false;
    for (int it = 0; it < max_iterations; ++it) {
        jtj.setZero();
        jtr.setZero();
        for (long i = 0; i < m; ++i) {
            const double z = (centre(i) - mu) / sig;
            const double g = std::exp(-0.5 * z * z);
            const double model = A * g;
            Eigen::Vector3d J(g, model * z / sig, model * z * z / sig);
            jtj += w(i) * J * J.transpose();
            jtr += w(i) * J * (y(i) - model);
        }
        Eigen::LDLT<Eigen::Matrix3d> ldlt(jtj);
        if (ldlt.info() != Eigen::Success) break;
        const Eigen::Vector3d step = ldlt.solve(jtr);
        if (!step.allFinite()) break;

        double t = 1.0;
        bool accepted = false;
        for (int back = 0; back < 8; ++back) {
            const double At = A + t * step(0);
            const double mut = mu + t * step(1);
            const double sigt = std::clamp(sig + t * step(2), 0.3, double(m));
            if (At > 0.0 && mut >= centre(0) - 1.0 && mut <= centre(m - 1) + 1.0) {
                const double c2 = chi2_of(At, mut, sigt);
                if (c2 <= chi2) {
                    A = At;
                    mu = mut;
                    sig = sigt;
                    chi2 = c2;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if (!accepted) break;
        if (std::abs(t * step(1)) < 1e-10) {
            converged = true;
            break;
        }
    }

    // Covariance from the final Jacobian.
    jtj.setZero();
    for (long i = 0; i < m; ++i) {
        const double z = (centre(i) - mu) / sig;
        const double g = std::exp(-0.5 * z * z);
        const double model = A * g;
        Eigen::Vector3d J(g, model * z / sig, model * z * z / sig);
        jtj += w(i) * J * J.transpose();
    }
    double mu_unc = 0.0;
    Eigen::FullPivLU<Eigen::Matrix3d> lu(jtj);
    if (lu.isInvertible()) {
        mu_unc = std::sqrt(std::max(0.0, lu.inverse()(1, 1)));
    }
    return GaussFit{A, mu, sig, mu_unc, converged || mu_unc > 0.0};
}

} // namespace

FitResult fit_positions(std::span<const double> profile, std::span<const double> background,
                        const FitConfig& config, double pitch_um) {
    if (profile.size() != background.size()) {
        throw InvalidArgument("profile/background size mismatch");
    }
    if (profile.size() < 3) throw InvalidArgument("profile too short");
    if (!(config.detection_threshold > 0.0)) {
        throw InvalidArgument("detection threshold must be positive");
    }
    if (!(config.psf_sigma_px > 0.0)) throw InvalidArgument("psf sigma must be positive");
    if (!(pitch_um > 0.0)) throw InvalidArgument("pixel pitch must be positive");

    const std::size_t n = profile.size();
    std::vector<double> net(n);
    for (std::size_t i = 0; i < n; ++i) net[i] = profile[i] - background[i];

    double noise = robust_sigma(net);
    double peak_level = *std::max_element(net.begin(), net.end());
    double threshold = config.detection_threshold * noise;
    if (!(threshold > 0.0)) threshold = 1e-12 * std::max(peak_level, 1.0);
    if (!(peak_level > threshold)) {
        throw NumericError("no peak clears the detection threshold");
    }

    // Local maxima above threshold; plateaus keep their left edge.
    std::vector<std::size_t> cands;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (net[i] > threshold && net[i] > net[i - 1] && net[i] >= net[i + 1]) {
            cands.push_back(i);
        }
    }
    if (cands.empty()) throw NumericError("no peak clears the detection threshold");

    const long half = std::max(2L, long(std::ceil(3.0 * config.psf_sigma_px)));
    FitResult result;
    result.background.assign(background.begin(), background.end());
    result.pitch_um = pitch_um;
    result.origin_px = 0.5 * double(n);  // sensor centred on the trap axis

    for (std::size_t k = 0; k < cands.size(); ++k) {
        const std::size_t c = cands[k];
        long w0 = std::max(0L, long(c) - half);
        long w1 = std::min(long(n) - 1, long(c) + half);
        // Cap the window at the midpoint to each neighbouring candidate so a
        // close neighbour's flank cannot drag the fit; always keep the peak
        // pixel and its two neighbours.
        if (k > 0) w0 = std::max(w0, long((cands[k - 1] + c) / 2) + 1);
        if (k + 1 < cands.size()) w1 = std::min(w1, long((c + cands[k + 1]) / 2));
        w0 = std::min(w0, std::max(0L, long(c) - 1));
        w1 = std::max(w1, std::min(long(n) - 1, long(c) + 1));

        double wsum = 0.0, wx = 0.0;
        for (long i = w0; i <= w1; ++i) {
            const double v = std::max(net[std::size_t(i)], 0.0);
            wsum += v;
            wx += v * (double(i) + 0.5);
        }
        if (wsum <= 0.0) continue;
        const double centroid = wx / wsum;

        const GaussFit fit =
            refine_gaussian(net, profile, w0, w1, net[c], centroid, config.psf_sigma_px,
                            config.max_refine_iterations);

        PeakFit peak;
        peak.position_px = fit.ok ? fit.mu : centroid;
        peak.amplitude = fit.amplitude;
        peak.sigma_px = fit.sigma;
        if (fit.mu_unc > 0.0) {
            peak.position_unc_px = fit.mu_unc;
        } else {
            // Photon statistics floor when the covariance is unavailable.
            peak.position_unc_px = fit.sigma / std::sqrt(std::max(wsum, 1.0));
        }
        result.peaks.push_back(peak);
    }
    if (result.peaks.empty()) throw NumericError("no peak survived refinement");

    std::sort(result.peaks.begin(), result.peaks.end(),
              [](const PeakFit& a, const PeakFit& b) { return a.position_px < b.position_px; });
    for (std::size_t i = 0; i + 1 < result.peaks.size(); ++i) {
        if (result.peaks[i + 1].position_px - result.peaks[i].position_px <
            config.merge_separation_px) {
            result.peaks[i].merged = true;
            result.peaks[i + 1].merged = true;
        }
    }
    return result;
}

ExtractResult extract_string(const Frame& frame, const FitConfig& config,
                             const UnitSystem& units) {
    const std::vector<double> profile = column_profile(frame);
    const std::vector<double> background =
        estimate_background(profile, config.background_window);
    FitResult fit = fit_positions(profile, background, config, frame.pitch_um);

    std::vector<double> um = fit.positions_um();
    std::vector<double> sigma_um = fit.uncertainties_um();
    ExtractResult out{IonString::from_um(um, units), std::move(sigma_um), std::move(fit)};
    return out;
}

} // namespace ionpot
