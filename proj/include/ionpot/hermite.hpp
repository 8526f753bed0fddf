#ifndef IONPOT_HERMITE_HPP
#define IONPOT_HERMITE_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace ionpot {

// Node-slope rules for the shape-preserving piecewise cubic.
//
// fritsch_carlson: the classic monotone rule — weighted harmonic mean of
// adjacent secants, zero slope wherever the data has a local extremum.
// Strictly avoids overshoot but is only O(h^2) around extrema.
//
// extremum_preserving: slopes from a local cubic fit (exact for data sampled
// from any cubic), clamped to at most 3x the neighbouring secants so monotone
// stretches stay monotone and no new extrema are invented between nodes.
enum class SlopeRule {
    fritsch_carlson,
    extremum_preserving,
};

// C^1 piecewise cubic Hermite interpolant through strictly increasing nodes,
// with an exact segment-polynomial antiderivative. No extrapolation:
// evaluation outside [x.front(), x.back()] throws DomainError.
class CubicHermite {
public:
    // Interpolate (x, y) with slopes chosen by `rule`. Needs >= 2 nodes;
    // two nodes degenerate to the straight line through them.
    static CubicHermite shape_preserving(std::span<const double> x,
                                         std::span<const double> y,
                                         SlopeRule rule = SlopeRule::extremum_preserving);

    // Hermite interpolant with caller-supplied node slopes.
    static CubicHermite with_slopes(std::span<const double> x,
                                    std::span<const double> y,
                                    std::span<const double> slopes);

    double value(double x) const;
    double deriv(double x) const;
    double second_deriv(double x) const;

    // Exact integral of the piecewise cubic over [a, b] (both inside the
    // node range; a may exceed b, giving the signed integral).
    double integral(double a, double b) const;

    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }
    const std::vector<double>& nodes() const { return x_; }
    const std::vector<double>& node_values() const { return y_; }
    const std::vector<double>& node_slopes() const { return d_; }

private:
    CubicHermite(std::vector<double> x, std::vector<double> y, std::vector<double> d);

    std::size_t segment_of(double x) const;

    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> d_;       // node slopes
    std::vector<double> cumint_;  // integral from x_[0] to x_[k]
};

} // namespace ionpot

#endif
