#include "ionpot/isolation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "ionpot/errors.hpp"

namespace ionpot {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct UnionFind {
    std::vector<std::size_t> parent;

    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), std::size_t{0});
    }
    std::size_t find(std::size_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

double finest_step(const std::vector<double>& x) {
    double s = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < x.size(); ++i) s = std::min(s, x[i] - x[i - 1]);
    return s;
}

// Uniform lattice k*spacing covering [lo, hi]; anchoring the phase at zero
// makes grids from different record sets line up point-for-point.
std::vector<double> lattice_grid(double lo, double hi, double spacing) {
    const long k0 = long(std::floor(lo / spacing + 1e-9));
    const long k1 = long(std::ceil(hi / spacing - 1e-9));
    std::vector<double> grid;
    grid.reserve(std::size_t(k1 - k0 + 1));
    for (long k = k0; k <= k1; ++k) grid.push_back(double(k) * spacing);
    return grid;
}

double eval_clamped(const PotentialCurve& curve, double x) {
    const double lo = curve.x().front();
    const double hi = curve.x().back();
    const double eps = 1e-9 * (hi - lo);
    if (x < lo && x > lo - eps) x = lo;
    if (x > hi && x < hi + eps) x = hi;
    return curve.value(x);
}

void check_shared_background(const std::vector<MeasurementRecord>& records,
                             std::size_t electrode, double tol) {
    // Background voltages must agree station by station; different stations
    // are never paired, so they may differ freely.
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].voltages.size() != records[0].voltages.size()) {
            throw InvalidArgument("records disagree on electrode count");
        }
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (std::size_t j = i + 1; j < records.size(); ++j) {
            if (records[i].station != records[j].station) continue;
            for (std::size_t m = 0; m < records[i].voltages.size(); ++m) {
                if (m == electrode) continue;
                if (std::abs(records[i].voltages[m] - records[j].voltages[m]) > tol) {
                    throw InvalidArgument("records differ on a background electrode");
                }
            }
        }
    }
}

double parabolic_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
    const double a = x1 - x0;
    const double b = x1 - x2;
    const double num = a * a * (y1 - y2) - b * b * (y1 - y0);
    const double den = a * (y1 - y2) - b * (y1 - y0);
    if (den == 0.0) return x1;
    const double xv = x1 - 0.5 * num / den;
    return (xv >= x0 && xv <= x2) ? xv : x1;
}

} // namespace

std::vector<double> ElectrodeUnitPotential::mean_ev_per_v(const UnitSystem& units) const {
    std::vector<double> out(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) out[i] = units.energy_to_ev(mean[i]);
    return out;
}

std::vector<double> common_grid(const std::vector<MeasurementRecord>& records,
                                std::optional<double> spacing) {
    if (records.empty()) throw InvalidArgument("no records");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    double fine = std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
        lo = std::min(lo, r.curve.x().front());
        hi = std::max(hi, r.curve.x().back());
        fine = std::min(fine, finest_step(r.curve.x()));
    }
    double h = spacing.value_or(fine);
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("grid spacing must be positive");
    return lattice_grid(lo, hi, h);
}

DifferenceSegment pairwise_difference(const MeasurementRecord& a, const MeasurementRecord& b,
                                      std::size_t electrode, std::span<const double> grid,
                                      const IsolationOptions& options) {
    if (a.voltages.size() != b.voltages.size()) {
        throw InvalidArgument("records disagree on electrode count");
    }
    if (electrode >= a.voltages.size()) {
        throw InvalidArgument("electrode index out of range");
    }
    for (std::size_t m = 0; m < a.voltages.size(); ++m) {
        if (m == electrode) continue;
        if (std::abs(a.voltages[m] - b.voltages[m]) > options.voltage_match_tol_v) {
            throw InvalidArgument("records differ on a background electrode");
        }
    }
    const double delta = a.voltages[electrode] - b.voltages[electrode];
    if (std::abs(delta) < options.delta_min_v) {
        throw InvalidArgument("perturbation below the delta_min threshold");
    }

    const double lo = std::max(a.curve.x().front(), b.curve.x().front());
    const double hi = std::min(a.curve.x().back(), b.curve.x().back());
    const double eps = 1e-9 * std::max(1.0, std::abs(hi - lo));

    DifferenceSegment seg;
    std::size_t i = 0;
    while (i < grid.size() && grid[i] < lo - eps) ++i;
    seg.first = i;
    for (; i < grid.size() && grid[i] <= hi + eps; ++i) {
        seg.values.push_back((eval_clamped(a.curve, grid[i]) - eval_clamped(b.curve, grid[i])) /
                             delta);
    }
    if (seg.values.empty()) {
        throw InvalidArgument("record domains do not overlap on the grid");
    }
    return seg;
}

std::vector<double> align_offsets(const std::vector<DifferenceSegment>& segments) {
    const std::size_t n = segments.size();
    if (n == 0) return {};
    if (n == 1) return {0.0};

    UnionFind uf(n);
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(Eigen::Index(n));

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const std::size_t first = std::max(segments[i].first, segments[j].first);
            const std::size_t last = std::min(segments[i].last(), segments[j].last());
            if (last <= first) continue;
            const double w = double(last - first);
            double mean_diff = 0.0;
            for (std::size_t g = first; g < last; ++g) {
                mean_diff += segments[i].values[g - segments[i].first] -
                             segments[j].values[g - segments[j].first];
            }
            mean_diff /= w;
            uf.unite(i, j);
            const auto ii = Eigen::Index(i);
            const auto jj = Eigen::Index(j);
            lap(ii, ii) += w;
            lap(jj, jj) += w;
            lap(ii, jj) -= w;
            lap(jj, ii) -= w;
            rhs(ii) -= w * mean_diff;
            rhs(jj) += w * mean_diff;
        }
    }

    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[uf.find(i)].push_back(i);
    if (groups.size() > 1) {
        std::vector<std::vector<std::size_t>> components;
        components.reserve(groups.size());
        for (auto& [root, members] : groups) components.push_back(std::move(members));
        std::string msg = "segment overlaps split into " +
                          std::to_string(components.size()) + " disconnected groups:";
        for (const auto& comp : components) {
            msg += " {";
            for (std::size_t k = 0; k < comp.size(); ++k) {
                if (k) msg += ',';
                msg += std::to_string(comp[k]);
            }
            msg += '}';
        }
        throw DisconnectedOverlap(msg, std::move(components));
    }

    // Gauge: pin c_0 = 0 and solve the reduced normal equations.
    const auto m = Eigen::Index(n - 1);
    Eigen::VectorXd reduced =
        lap.bottomRightCorner(m, m).ldlt().solve(rhs.tail(m));
    std::vector<double> offsets(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) offsets[i] = reduced(Eigen::Index(i - 1));
    return offsets;
}

ElectrodeUnitPotential stitch_average(const std::vector<DifferenceSegment>& segments,
                                      const std::vector<double>& offsets,
                                      std::span<const double> grid,
                                      const std::vector<double>& weights) {
    if (segments.empty()) throw InvalidArgument("no segments to stitch");
    if (offsets.size() != segments.size()) {
        throw InvalidArgument("one offset per segment required");
    }
    if (!weights.empty() && weights.size() != segments.size()) {
        throw InvalidArgument("one weight per segment required");
    }

    std::vector<double> wsum(grid.size(), 0.0), wv(grid.size(), 0.0), wv2(grid.size(), 0.0);
    std::vector<int> count(grid.size(), 0);
    for (std::size_t s = 0; s < segments.size(); ++s) {
        const double w = weights.empty() ? 1.0 : weights[s];
        if (!(w > 0.0)) throw InvalidArgument("segment weights must be positive");
        for (std::size_t k = 0; k < segments[s].values.size(); ++k) {
            const std::size_t g = segments[s].first + k;
            const double v = segments[s].values[k] + offsets[s];
            wsum[g] += w;
            wv[g] += w * v;
            wv2[g] += w * v * v;
            count[g] += 1;
        }
    }

    std::size_t g0 = 0;
    while (g0 < grid.size() && count[g0] == 0) ++g0;
    std::size_t g1 = grid.size();
    while (g1 > g0 && count[g1 - 1] == 0) --g1;
    if (g0 == g1) throw InvalidArgument("segments cover no grid points");
    for (std::size_t g = g0; g < g1; ++g) {
        if (count[g] == 0) throw NumericError("stitched coverage has an interior hole");
    }

    ElectrodeUnitPotential out;
    out.x.reserve(g1 - g0);
    out.mean.reserve(g1 - g0);
    out.spread.reserve(g1 - g0);
    out.count.reserve(g1 - g0);
    for (std::size_t g = g0; g < g1; ++g) {
        const double mean = wv[g] / wsum[g];
        const double var = std::max(0.0, wv2[g] / wsum[g] - mean * mean);
        out.x.push_back(grid[g]);
        out.mean.push_back(mean);
        out.spread.push_back(std::sqrt(var));
        out.count.push_back(count[g]);
    }
    return out;
}

ElectrodeUnitPotential isolate_electrode(const std::vector<MeasurementRecord>& records,
                                         std::size_t electrode,
                                         const IsolationOptions& options) {
    if (records.size() < 2) throw InvalidArgument("isolation needs at least 2 records");
    if (electrode >= records[0].voltages.size()) {
        throw InvalidArgument("electrode index out of range");
    }
    check_shared_background(records, electrode, options.voltage_match_tol_v);

    const std::vector<double> grid = common_grid(records, options.grid_spacing);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    if (options.pairing == PairPolicy::all_pairs) {
        for (std::size_t i = 0; i < records.size(); ++i) {
            for (std::size_t j = i + 1; j < records.size(); ++j) {
                if (records[i].station == records[j].station) pairs.emplace_back(i, j);
            }
        }
    } else {
        // Adjacent-delta pairs, taken within each station.
        std::vector<std::size_t> order(records.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (records[a].station != records[b].station) {
                return records[a].station < records[b].station;
            }
            return records[a].voltages[electrode] < records[b].voltages[electrode];
        });
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            if (records[order[k]].station == records[order[k + 1]].station) {
                pairs.emplace_back(order[k], order[k + 1]);
            }
        }
    }

    std::vector<DifferenceSegment> segments;
    std::vector<double> weights;
    for (auto [i, j] : pairs) {
        const double delta =
            records[i].voltages[electrode] - records[j].voltages[electrode];
        if (std::abs(delta) < options.delta_min_v) continue;
        const double alo = records[i].curve.x().front();
        const double ahi = records[i].curve.x().back();
        const double blo = records[j].curve.x().front();
        const double bhi = records[j].curve.x().back();
        if (std::min(ahi, bhi) <= std::max(alo, blo)) continue;
        DifferenceSegment seg = pairwise_difference(records[i], records[j], electrode, grid,
                                                    options);
        seg.record_a = i;
        seg.record_b = j;
        segments.push_back(std::move(seg));
        if (options.weighting == SegmentWeighting::delta_squared) {
            weights.push_back(delta * delta);
        }
    }
    if (segments.empty()) {
        throw InvalidArgument("no usable record pairs after delta_min filtering");
    }

    const std::vector<double> offsets = align_offsets(segments);
    return stitch_average(segments, offsets, grid, weights);
}

std::vector<double> curve_minima(std::span<const double> x, std::span<const double> psi,
                                 std::span<const double> sigma,
                                 const ShuttleOptions& options) {
    if (x.size() != psi.size()) throw InvalidArgument("x/psi size mismatch");
    if (!sigma.empty() && sigma.size() != psi.size()) {
        throw InvalidArgument("sigma size mismatch");
    }

    // Restrict to the contiguous finite core (map columns pad with NaN).
    std::size_t lo = 0;
    while (lo < psi.size() && !std::isfinite(psi[lo])) ++lo;
    std::size_t hi = psi.size();
    while (hi > lo && !std::isfinite(psi[hi - 1])) --hi;
    if (hi - lo < 3) return {};
    for (std::size_t i = lo; i < hi; ++i) {
        if (!std::isfinite(psi[i])) return {};
    }

    std::vector<std::size_t> mins;
    for (std::size_t i = lo + 1; i + 1 < hi; ++i) {
        if (psi[i] < psi[i - 1] && psi[i] <= psi[i + 1]) mins.push_back(i);
    }
    if (mins.empty()) return {};

    // Interior saddle between consecutive wells: the highest sample between
    // them. Shallow wells merge across any saddle whose barrier over the
    // shallower side is below the noise threshold.
    std::vector<std::size_t> saddles(mins.size() > 1 ? mins.size() - 1 : 0);
    for (std::size_t s = 0; s + 1 < mins.size(); ++s) {
        std::size_t arg = mins[s];
        for (std::size_t i = mins[s]; i <= mins[s + 1]; ++i) {
            if (psi[i] > psi[arg]) arg = i;
        }
        saddles[s] = arg;
    }

    const auto threshold_at = [&](std::size_t idx) {
        if (sigma.empty()) return options.barrier_floor;
        return std::max(options.barrier_floor, options.barrier_sigma_factor * sigma[idx]);
    };

    while (mins.size() > 1) {
        std::size_t worst = mins.size();
        double worst_margin = 0.0;
        for (std::size_t s = 0; s + 1 < mins.size(); ++s) {
            const double barrier =
                psi[saddles[s]] - std::max(psi[mins[s]], psi[mins[s + 1]]);
            const double margin = barrier - threshold_at(saddles[s]);
            if (margin < 0.0 && (worst == mins.size() || margin < worst_margin)) {
                worst = s;
                worst_margin = margin;
            }
        }
        if (worst == mins.size()) break;
        // Merge across saddle `worst`: drop the shallower adjacent minimum.
        const std::size_t drop = psi[mins[worst]] >= psi[mins[worst + 1]] ? worst : worst + 1;
        mins.erase(mins.begin() + long(drop));
        // Recompute the saddles adjacent to the merged gap.
        saddles.erase(saddles.begin() + long(worst));
        for (std::size_t s = worst > 0 ? worst - 1 : 0; s < saddles.size() && s <= worst;
             ++s) {
            std::size_t arg = mins[s];
            for (std::size_t i = mins[s]; i <= mins[s + 1]; ++i) {
                if (psi[i] > psi[arg]) arg = i;
            }
            saddles[s] = arg;
        }
    }

    std::vector<double> out;
    out.reserve(mins.size());
    for (std::size_t i : mins) {
        out.push_back(parabolic_vertex(x[i - 1], psi[i - 1], x[i], psi[i], x[i + 1],
                                       psi[i + 1]));
    }
    return out;
}

namespace {

void analyse_column(ShuttleScanMap& map, std::size_t d, const PotentialCurve& curve,
                    const ShuttleOptions& options) {
    auto& row = map.psi[d];
    row.assign(map.x.size(), kNaN);
    std::vector<double> sig(map.x.size(), 0.0);
    const double clo = curve.x().front();
    const double chi = curve.x().back();
    const double eps = 1e-9 * (chi - clo);
    // Interpolate the per-curve band linearly onto the map grid.
    const auto band_at = [&](double xx) {
        const auto& cx = curve.x();
        const auto& cs = curve.sigma();
        auto it = std::upper_bound(cx.begin(), cx.end(), xx);
        std::size_t k = it == cx.begin() ? 0 : std::size_t(it - cx.begin()) - 1;
        if (k + 1 >= cx.size()) k = cx.size() - 2;
        const double t = (xx - cx[k]) / (cx[k + 1] - cx[k]);
        return cs[k] * (1.0 - t) + cs[k + 1] * t;
    };
    for (std::size_t k = 0; k < map.x.size(); ++k) {
        double xx = map.x[k];
        if (xx < clo - eps || xx > chi + eps) continue;
        xx = std::clamp(xx, clo, chi);
        row[k] = curve.value(xx);
        if (curve.has_band()) sig[k] = band_at(xx);
    }
    const std::span<const double> sig_span =
        curve.has_band() ? std::span<const double>(sig) : std::span<const double>();
    map.minima[d] = curve_minima(map.x, row, sig_span, options);
    map.well_count[d] = int(map.minima[d].size());
}

} // namespace

ShuttleScanMap shuttle_scan(const std::function<Potential1D(double)>& potential_for_delta,
                            const std::vector<double>& deltas, std::size_t ion_count,
                            const SolverConfig& solver, const ReconstructOptions& recon,
                            const ShuttleOptions& options, const UnitSystem& units) {
    if (deltas.empty()) throw InvalidArgument("delta scan needs at least one delta");
    if (ion_count < 2) throw InvalidArgument("delta scan needs at least 2 ions");

    const std::size_t nd = deltas.size();
    std::vector<std::optional<PotentialCurve>> curves(nd);
    ShuttleScanMap map;
    map.deltas = deltas;
    map.psi.resize(nd);
    map.minima.resize(nd);
    map.well_count.assign(nd, 0);
    map.solved.assign(nd, false);
    map.failure_messages.assign(nd, "");

    for (std::size_t d = 0; d < nd; ++d) {
        try {
            const Potential1D pot = potential_for_delta(deltas[d]);
            const EquilibriumResult eq = solve_equilibrium(pot, ion_count, solver, units);
            if (!eq.converged) {
                map.failure_messages[d] = "equilibrium solver did not converge";
                continue;
            }
            if (!eq.stable) {
                map.failure_messages[d] = "equilibrium is not a stable minimum";
                continue;
            }
            curves[d] = reconstruct(eq.string, recon);
            map.solved[d] = true;
        } catch (const Error& e) {
            map.failure_messages[d] = e.what();
        }
    }

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    double fine = std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& c : curves) {
        if (!c) continue;
        any = true;
        lo = std::min(lo, c->x().front());
        hi = std::max(hi, c->x().back());
        fine = std::min(fine, finest_step(c->x()));
    }
    if (!any) throw NumericError("delta scan failed for every delta");
    map.x = lattice_grid(lo, hi, options.grid_spacing.value_or(fine));

    for (std::size_t d = 0; d < nd; ++d) {
        if (curves[d]) {
            analyse_column(map, d, *curves[d], options);
        } else {
            map.psi[d].assign(map.x.size(), kNaN);
        }
    }
    return map;
}

ShuttleScanMap shuttle_scan_from_records(const std::vector<MeasurementRecord>& records,
                                         const ShuttleOptions& options) {
    if (records.empty()) throw InvalidArgument("delta scan needs at least one record");
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return records[a].delta < records[b].delta;
    });
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        if (std::abs(records[order[k]].delta - records[order[k + 1]].delta) < 1e-12) {
            throw InvalidArgument("duplicate delta in record set");
        }
    }

    ShuttleScanMap map;
    const std::size_t nd = records.size();
    map.deltas.reserve(nd);
    for (std::size_t k : order) map.deltas.push_back(records[k].delta);
    map.x = common_grid(records, options.grid_spacing);
    map.psi.resize(nd);
    map.minima.resize(nd);
    map.well_count.assign(nd, 0);
    map.solved.assign(nd, true);
    map.failure_messages.assign(nd, "");
    for (std::size_t d = 0; d < nd; ++d) {
        analyse_column(map, d, records[order[d]].curve, options);
    }
    return map;
}

namespace {

using Pt = std::pair<double, double>;

struct SegmentSink {
    std::vector<std::pair<Pt, Pt>> segments;

    void add(const Pt& a, const Pt& b) {
        if (a != b) segments.emplace_back(a, b);
    }
};

// Crossing of the level on the edge between (c0, v0) and (c1, v1); the
// varying coordinate is passed explicitly, the fixed one by value.
double edge_cross(double c0, double c1, double v0, double v1, double level) {
    const double t = (level - v0) / (v1 - v0);
    return c0 + t * (c1 - c0);
}

} // namespace

std::vector<ContourLine> equipotential_contours(const ShuttleScanMap& map, double spacing) {
    if (!(spacing > 0.0) || !std::isfinite(spacing)) {
        throw InvalidArgument("contour spacing must be positive");
    }
    double vmin = std::numeric_limits<double>::infinity();
    double vmax = -std::numeric_limits<double>::infinity();
    for (const auto& col : map.psi) {
        for (double v : col) {
            if (!std::isfinite(v)) continue;
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        }
    }
    std::vector<ContourLine> out;
    if (!(vmax > vmin)) return out;
    const double nlev = std::floor((vmax - vmin) / spacing);
    if (nlev > 10000.0) throw InvalidArgument("contour spacing too fine for the map range");

    for (int k = 1; double(k) <= nlev; ++k) {
        const double level = vmin + spacing * double(k);
        SegmentSink sink;

        for (std::size_t d = 0; d + 1 < map.deltas.size(); ++d) {
            for (std::size_t r = 0; r + 1 < map.x.size(); ++r) {
                const double v00 = map.psi[d][r];        // (delta_d, x_r)
                const double v10 = map.psi[d + 1][r];
                const double v11 = map.psi[d + 1][r + 1];
                const double v01 = map.psi[d][r + 1];
                if (!std::isfinite(v00) || !std::isfinite(v10) || !std::isfinite(v11) ||
                    !std::isfinite(v01)) {
                    continue;
                }
                const double d0 = map.deltas[d];
                const double d1 = map.deltas[d + 1];
                const double x0 = map.x[r];
                const double x1 = map.x[r + 1];

                int code = 0;
                if (v00 < level) code |= 1;
                if (v10 < level) code |= 2;
                if (v11 < level) code |= 4;
                if (v01 < level) code |= 8;
                if (code == 0 || code == 15) continue;

                const Pt bottom{edge_cross(d0, d1, v00, v10, level), x0};
                const Pt top{edge_cross(d0, d1, v01, v11, level), x1};
                const Pt left{d0, edge_cross(x0, x1, v00, v01, level)};
                const Pt right{d1, edge_cross(x0, x1, v10, v11, level)};

                switch (code) {
                    case 1: case 14: sink.add(left, bottom); break;
                    case 2: case 13: sink.add(bottom, right); break;
                    case 3: case 12: sink.add(left, right); break;
                    case 4: case 11: sink.add(right, top); break;
                    case 6: case 9:  sink.add(bottom, top); break;
                    case 7: case 8:  sink.add(left, top); break;
                    case 5: case 10: {
                        // Saddle cell: split by the centre value.
                        const double centre = 0.25 * (v00 + v10 + v11 + v01);
                        const bool centre_below = centre < level;
                        if ((code == 5) == centre_below) {
                            sink.add(left, top);
                            sink.add(bottom, right);
                        } else {
                            sink.add(left, bottom);
                            sink.add(right, top);
                        }
                        break;
                    }
                    default: break;
                }
            }
        }

        // Chain segments into polylines via quantised endpoint matching.
        const double qd = 1e-9 * std::max(1.0, std::abs(map.deltas.back() - map.deltas.front()));
        const double qx = 1e-9 * std::max(1.0, std::abs(map.x.back() - map.x.front()));
        const auto key = [&](const Pt& p) {
            return std::make_pair(std::llround(p.first / qd), std::llround(p.second / qx));
        };
        std::multimap<std::pair<long long, long long>, std::size_t> by_end;
        for (std::size_t s = 0; s < sink.segments.size(); ++s) {
            by_end.emplace(key(sink.segments[s].first), s);
            by_end.emplace(key(sink.segments[s].second), s);
        }
        std::vector<bool> used(sink.segments.size(), false);

        for (std::size_t s = 0; s < sink.segments.size(); ++s) {
            if (used[s]) continue;
            used[s] = true;
            std::vector<Pt> chain{sink.segments[s].first, sink.segments[s].second};
            // Extend forward, then backward.
            for (int dir = 0; dir < 2; ++dir) {
                for (;;) {
                    const Pt& tip = dir == 0 ? chain.back() : chain.front();
                    const auto range = by_end.equal_range(key(tip));
                    std::size_t next = sink.segments.size();
                    for (auto it = range.first; it != range.second; ++it) {
                        if (!used[it->second]) {
                            next = it->second;
                            break;
                        }
                    }
                    if (next == sink.segments.size()) break;
                    used[next] = true;
                    const auto& [p, q] = sink.segments[next];
                    const Pt add = key(p) == key(tip) ? q : p;
                    if (dir == 0) chain.push_back(add);
                    else chain.insert(chain.begin(), add);
                }
            }
            ContourLine line;
            line.level = level;
            line.points = std::move(chain);
            out.push_back(std::move(line));
        }
    }
    return out;
}

} // namespace ionpot
