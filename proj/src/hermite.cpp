#include "ionpot/hermite.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ionpot/errors.hpp"

namespace ionpot {

namespace {

void check_nodes(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw InvalidArgument("node/value size mismatch");
    }
    if (x.size() < 2) {
        throw InvalidArgument("interpolation needs at least two nodes");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
            throw InvalidArgument("non-finite interpolation node");
        }
        if (i > 0 && !(x[i] > x[i - 1])) {
            throw InvalidArgument("interpolation nodes must be strictly increasing");
        }
    }
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Derivative at xi of the Lagrange polynomial through (xs, ys).
double lagrange_deriv_at(std::span<const double> xs, std::span<const double> ys, double xi) {
    const std::size_t m = xs.size();
    double total = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        // d/dx of L_k at xi: sum over j != k of prod_{l != k, j} terms.
        double denom = 1.0;
        for (std::size_t l = 0; l < m; ++l) {
            if (l != k) denom *= xs[k] - xs[l];
        }
        double dsum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == k) continue;
            double prod = 1.0;
            for (std::size_t l = 0; l < m; ++l) {
                if (l == k || l == j) continue;
                prod *= xi - xs[l];
            }
            dsum += prod;
        }
        total += ys[k] * dsum / denom;
    }
    return total;
}

std::vector<double> fritsch_carlson_slopes(std::span<const double> x,
                                           std::span<const double> y) {
    const std::size_t n = x.size();
    std::vector<double> d(n);
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x[i + 1] - x[i];
        delta[i] = (y[i + 1] - y[i]) / h[i];
    }
    if (n == 2) {
        d[0] = d[1] = delta[0];
        return d;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] == 0.0 || delta[i] == 0.0 ||
            sign(delta[i - 1]) != sign(delta[i])) {
            d[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    // Non-centred three-point ends, clipped to stay shape preserving.
    auto edge = [](double h0, double h1, double d0, double d1) {
        double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (sign(d) != sign(d0)) {
            d = 0.0;
        } else if (sign(d0) != sign(d1) && std::abs(d) > 3.0 * std::abs(d0)) {
            d = 3.0 * d0;
        }
        return d;
    };
    d[0] = edge(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    return d;
}

std::vector<double> extremum_preserving_slopes(std::span<const double> x,
                                               std::span<const double> y) {
    const std::size_t n = x.size();
    std::vector<double> d(n);
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        delta[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    }
    if (n == 2) {
        d[0] = d[1] = delta[0];
        return d;
    }
    const std::size_t stencil = std::min<std::size_t>(4, n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j0 = (i == 0) ? 0 : i - 1;
        j0 = std::min(j0, n - stencil);
        d[i] = lagrange_deriv_at(x.subspan(j0, stencil), y.subspan(j0, stencil), x[i]);
    }
    // Limit so monotone data stays monotone and nothing runs past 3x the
    // neighbouring secants; genuine extrema keep their accurate slopes.
    for (std::size_t i = 0; i < n; ++i) {
        const bool has_left = i > 0;
        const bool has_right = i + 1 < n;
        const double dl = has_left ? delta[i - 1] : delta[i];
        const double dr = has_right ? delta[i] : delta[i - 1];
        if (!has_left || !has_right) {
            const double edge_delta = has_right ? delta[i] : delta[i - 1];
            const double cap = 3.0 * std::abs(edge_delta);
            d[i] = std::clamp(d[i], -cap, cap);
            continue;
        }
        if (dl == 0.0 || dr == 0.0) {
            d[i] = 0.0;
        } else if (sign(dl) == sign(dr)) {
            if (sign(d[i]) != sign(dl)) {
                d[i] = 0.0;
            } else {
                const double cap = 3.0 * std::min(std::abs(dl), std::abs(dr));
                d[i] = std::clamp(d[i], -cap, cap);
            }
        } else {
            const double cap = 3.0 * std::max(std::abs(dl), std::abs(dr));
            d[i] = std::clamp(d[i], -cap, cap);
        }
    }
    return d;
}

} // namespace

CubicHermite::CubicHermite(std::vector<double> x, std::vector<double> y,
                           std::vector<double> d)
    : x_(std::move(x)), y_(std::move(y)), d_(std::move(d)) {
    const std::size_t n = x_.size();
    cumint_.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = x_[i + 1] - x_[i];
        const double dd = (y_[i + 1] - y_[i]) / h;
        const double c2 = (3.0 * dd - 2.0 * d_[i] - d_[i + 1]) / h;
        const double c3 = (d_[i] + d_[i + 1] - 2.0 * dd) / (h * h);
        cumint_[i + 1] = cumint_[i] +
            h * (y_[i] + h * (d_[i] / 2.0 + h * (c2 / 3.0 + h * c3 / 4.0)));
    }
}

CubicHermite CubicHermite::shape_preserving(std::span<const double> x,
                                            std::span<const double> y, SlopeRule rule) {
    check_nodes(x, y);
    std::vector<double> d = (rule == SlopeRule::fritsch_carlson)
                                ? fritsch_carlson_slopes(x, y)
                                : extremum_preserving_slopes(x, y);
    return CubicHermite(std::vector<double>(x.begin(), x.end()),
                        std::vector<double>(y.begin(), y.end()), std::move(d));
}

CubicHermite CubicHermite::with_slopes(std::span<const double> x,
                                       std::span<const double> y,
                                       std::span<const double> slopes) {
    check_nodes(x, y);
    if (slopes.size() != x.size()) {
        throw InvalidArgument("slope count must match node count");
    }
    return CubicHermite(std::vector<double>(x.begin(), x.end()),
                        std::vector<double>(y.begin(), y.end()),
                        std::vector<double>(slopes.begin(), slopes.end()));
}

std::size_t CubicHermite::segment_of(double x) const {
    if (!(x >= x_.front() && x <= x_.back())) {
        throw DomainError("evaluation at " + std::to_string(x) + " outside [" +
                          std::to_string(x_.front()) + ", " + std::to_string(x_.back()) +
                          "]");
    }
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t idx = static_cast<std::size_t>(it - x_.begin());
    if (idx == 0) return 0;
    return std::min(idx - 1, x_.size() - 2);
}

double CubicHermite::value(double x) const {
    const std::size_t i = segment_of(x);
    const double h = x_[i + 1] - x_[i];
    const double s = x - x_[i];
    const double dd = (y_[i + 1] - y_[i]) / h;
    const double c2 = (3.0 * dd - 2.0 * d_[i] - d_[i + 1]) / h;
    const double c3 = (d_[i] + d_[i + 1] - 2.0 * dd) / (h * h);
    return y_[i] + s * (d_[i] + s * (c2 + s * c3));
}

double CubicHermite::deriv(double x) const {
    const std::size_t i = segment_of(x);
    const double h = x_[i + 1] - x_[i];
    const double s = x - x_[i];
    const double dd = (y_[i + 1] - y_[i]) / h;
    const double c2 = (3.0 * dd - 2.0 * d_[i] - d_[i + 1]) / h;
    const double c3 = (d_[i] + d_[i + 1] - 2.0 * dd) / (h * h);
    return d_[i] + s * (2.0 * c2 + 3.0 * s * c3);
}

double CubicHermite::second_deriv(double x) const {
    const std::size_t i = segment_of(x);
    const double h = x_[i + 1] - x_[i];
    const double s = x - x_[i];
    const double dd = (y_[i + 1] - y_[i]) / h;
    const double c2 = (3.0 * dd - 2.0 * d_[i] - d_[i + 1]) / h;
    const double c3 = (d_[i] + d_[i + 1] - 2.0 * dd) / (h * h);
    return 2.0 * c2 + 6.0 * s * c3;
}

double CubicHermite::integral(double a, double b) const {
    auto prefix = [this](double x) {
        const std::size_t i = segment_of(x);
        const double h = x_[i + 1] - x_[i];
        const double s = x - x_[i];
        const double dd = (y_[i + 1] - y_[i]) / h;
        const double c2 = (3.0 * dd - 2.0 * d_[i] - d_[i + 1]) / h;
        const double c3 = (d_[i] + d_[i + 1] - 2.0 * dd) / (h * h);
        return cumint_[i] +
               s * (y_[i] + s * (d_[i] / 2.0 + s * (c2 / 3.0 + s * c3 / 4.0)));
    };
    return prefix(b) - prefix(a);
}

} // namespace ionpot
