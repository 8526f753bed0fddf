#include "ionpot/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ionpot/errors.hpp"

namespace ionpot {

std::vector<double> GridSpec::build(double lo, double hi) const {
    if (!(hi > lo)) {
        throw InvalidArgument("grid span must have hi > lo");
    }
    std::size_t m = 512;
    if (spacing) {
        if (!(*spacing > 0.0)) throw InvalidArgument("grid spacing must be positive");
        // Uniform grid with exact endpoints; spacing never exceeds the request.
        m = std::size_t(std::ceil((hi - lo) / *spacing - 1e-9)) + 1;
        m = std::max<std::size_t>(m, 2);
    } else if (count) {
        if (*count < 2) throw InvalidArgument("grid count must be at least 2");
        m = std::size_t(*count);
    }
    std::vector<double> x(m);
    const double h = (hi - lo) / double(m - 1);
    for (std::size_t i = 0; i < m; ++i) x[i] = lo + h * double(i);
    x.back() = hi;
    return x;
}

namespace {

void apply_offset(std::vector<double>& psi, const std::vector<double>& x,
                  const CubicHermite& interp, OffsetConvention offset, double anchor_x) {
    double shift = 0.0;
    switch (offset) {
        case OffsetConvention::min_zero:
            shift = *std::min_element(psi.begin(), psi.end());
            break;
        case OffsetConvention::mean_zero:
            shift = std::accumulate(psi.begin(), psi.end(), 0.0) / double(psi.size());
            break;
        case OffsetConvention::anchored:
            if (anchor_x < x.front() || anchor_x > x.back()) {
                throw InvalidArgument("offset anchor lies outside the curve domain");
            }
            shift = interp.value(anchor_x);
            break;
    }
    for (double& p : psi) p -= shift;
}

void check_grid(const std::vector<double>& x, const std::vector<double>& psi) {
    if (x.size() < 2) throw InvalidArgument("potential curve needs at least 2 samples");
    if (x.size() != psi.size()) throw InvalidArgument("grid/value size mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(psi[i])) {
            throw InvalidArgument("potential curve samples must be finite");
        }
        if (i > 0 && !(x[i] > x[i - 1])) {
            throw InvalidArgument("potential curve grid must be strictly increasing");
        }
    }
}

CubicHermite checked_interp(const std::vector<double>& x, const std::vector<double>& psi) {
    check_grid(x, psi);
    return CubicHermite::shape_preserving(x, psi, SlopeRule::fritsch_carlson);
}

} // namespace

PotentialCurve::PotentialCurve(std::vector<double> x, std::vector<double> psi,
                               UnitSystem units, OffsetConvention offset, double anchor_x)
    : x_(std::move(x)),
      psi_(std::move(psi)),
      units_(units),
      offset_(offset),
      anchor_x_(anchor_x),
      interp_(checked_interp(x_, psi_)) {
    // Normalise so the stored samples actually satisfy the declared gauge.
    apply_offset(psi_, x_, interp_, offset_, anchor_x_);
    interp_ = CubicHermite::shape_preserving(x_, psi_, SlopeRule::fritsch_carlson);
}

double PotentialCurve::value(double x) const { return interp_.value(x); }

PotentialCurve PotentialCurve::with_offset(OffsetConvention convention,
                                           double anchor_x) const {
    PotentialCurve out(x_, psi_, units_, convention, anchor_x);
    if (!sigma_.empty()) out.set_band(sigma_);  // band is shift-invariant
    return out;
}

void PotentialCurve::set_band(std::vector<double> sigma) {
    if (sigma.size() != x_.size()) {
        throw InvalidArgument("sigma band size does not match the grid");
    }
    for (double s : sigma) {
        if (!std::isfinite(s) || s < 0.0) {
            throw InvalidArgument("sigma band must be finite and non-negative");
        }
    }
    sigma_ = std::move(sigma);
}

std::vector<ForceSample> external_force_samples(const IonString& string) {
    const std::size_t n = string.count();
    std::vector<ForceSample> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
        samples[i] = ForceSample{string.positions()[i], -coulomb_force(string, i), i};
    }
    return samples;
}

CubicHermite interpolate_force(const std::vector<ForceSample>& samples, SlopeRule rule) {
    if (samples.size() < 2) {
        throw InvalidArgument("force interpolation needs at least 2 samples");
    }
    std::vector<double> x(samples.size()), f(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        x[i] = samples[i].position;
        f[i] = samples[i].force;
    }
    return CubicHermite::shape_preserving(x, f, rule);
}

PotentialCurve integrate_potential(const CubicHermite& force, const GridSpec& grid,
                                   OffsetConvention offset, double anchor_x,
                                   const UnitSystem& units) {
    const double lo = force.x_min();
    const double hi = force.x_max();
    std::vector<double> x = grid.build(lo, hi);
    std::vector<double> psi(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        psi[i] = -force.integral(lo, x[i]);
    }
    return PotentialCurve(std::move(x), std::move(psi), units, offset, anchor_x);
}

PotentialCurve reconstruct(const IonString& string, const ReconstructOptions& options) {
    if (string.count() < 2) {
        throw InvalidArgument("reconstruction needs at least 2 ions");
    }
    const auto samples = external_force_samples(string);
    const CubicHermite force = interpolate_force(samples, options.slope_rule);
    PotentialCurve curve = integrate_potential(force, options.grid, options.offset,
                                               options.anchor_x, string.units());

    if (options.monte_carlo) {
        const MonteCarloOptions& mc = *options.monte_carlo;
        if (mc.replicas < 2) throw InvalidArgument("monte carlo needs at least 2 replicas");
        if (!(mc.sigma_um >= 0.0)) throw InvalidArgument("monte carlo sigma must be >= 0");

        const std::vector<double>& grid = curve.x();
        const double sigma_int =
            string.units().um_to_internal(mc.sigma_um);
        std::mt19937_64 rng(mc.seed);
        std::normal_distribution<double> jitter(0.0, 1.0);

        // Per-grid-point residuals after removing each replica's best-fit
        // constant against the base curve: the additive gauge is not an
        // observable, so only shape scatter enters the band.
        std::vector<double> sum(grid.size(), 0.0), sum2(grid.size(), 0.0);
        std::vector<std::size_t> hits(grid.size(), 0);
        std::vector<double> jittered(string.count());

        int produced = 0;
        for (int r = 0; r < mc.replicas; ++r) {
            for (std::size_t i = 0; i < string.count(); ++i) {
                jittered[i] = string.positions()[i] + sigma_int * jitter(rng);
            }
            std::sort(jittered.begin(), jittered.end());
            bool ok = true;
            for (std::size_t i = 0; i + 1 < string.count(); ++i) {
                if (jittered[i + 1] - jittered[i] < kMinIonSeparation) ok = false;
            }
            if (!ok) continue;

            IonString rep(jittered, string.units());
            const CubicHermite rep_force =
                interpolate_force(external_force_samples(rep), options.slope_rule);

            // Jitter can shrink the replica span; points outside are skipped.
            std::vector<double> rep_psi(grid.size());
            std::vector<char> covered(grid.size(), 0);
            double mean_diff = 0.0;
            std::size_t n_cov = 0;
            for (std::size_t g = 0; g < grid.size(); ++g) {
                if (grid[g] < rep_force.x_min() || grid[g] > rep_force.x_max()) continue;
                rep_psi[g] = -rep_force.integral(rep_force.x_min(), grid[g]);
                covered[g] = 1;
                mean_diff += rep_psi[g] - curve.psi()[g];
                ++n_cov;
            }
            if (n_cov == 0) continue;
            mean_diff /= double(n_cov);
            for (std::size_t g = 0; g < grid.size(); ++g) {
                if (!covered[g]) continue;
                const double resid = rep_psi[g] - mean_diff - curve.psi()[g];
                sum[g] += resid;
                sum2[g] += resid * resid;
                hits[g] += 1;
            }
            ++produced;
        }
        if (produced < 2) {
            throw NumericError("monte carlo produced fewer than 2 usable replicas");
        }

        std::vector<double> band(grid.size(), 0.0);
        double last_good = 0.0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            if (hits[g] >= 2) {
                const double m = sum[g] / double(hits[g]);
                const double var =
                    std::max(0.0, sum2[g] / double(hits[g]) - m * m) * double(hits[g]) /
                    double(hits[g] - 1);
                band[g] = std::sqrt(var);
                last_good = band[g];
            } else {
                band[g] = last_good;  // edge points missed by shrunken replicas
            }
        }
        // Back-fill any leading edge points before the first covered one.
        for (std::size_t g = grid.size(); g-- > 0;) {
            if (hits[g] >= 2) last_good = band[g];
            else band[g] = last_good;
        }
        curve.set_band(std::move(band));
    }
    return curve;
}

} // namespace ionpot
