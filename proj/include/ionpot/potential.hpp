#ifndef IONPOT_POTENTIAL_HPP
#define IONPOT_POTENTIAL_HPP

#include <limits>
#include <memory>
#include <vector>

namespace ionpot {

// Closed interval on the axis, possibly unbounded.
struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool contains(double x) const { return x >= lo && x <= hi; }
    bool bounded() const;
    double length() const { return hi - lo; }
    static Interval intersect(const Interval& a, const Interval& b);
};

namespace detail {
class PotentialImpl;
}

// External axial potential-energy curve psi(x), internal energy units as a
// function of internal length. Immutable value type; cheap to copy.
//
// Evaluation outside the declared domain throws DomainError — sampled curves
// are never silently extrapolated.
class Potential1D {
public:
    Potential1D() = default;

    double value(double x) const;
    double deriv(double x) const;
    double second_deriv(double x) const;
    Interval domain() const;
    bool valid() const { return impl_ != nullptr; }

    // psi = k/2 * (x - center)^2. Requires k > 0.
    static Potential1D harmonic(double stiffness, double center = 0.0);

    // psi = a x^4 - b x^2. Requires a > 0; b > 0 gives a double well with
    // minima at +-sqrt(b/2a) of depth b^2/4a.
    static Potential1D quartic(double a, double b);

    // psi = slope * x. Unbounded below on its own; usable only as an
    // additive term.
    static Potential1D linear_tilt(double slope);

    // Shape-preserving cubic interpolant through (x, psi) samples, defined
    // on [x.front(), x.back()] only.
    static Potential1D sampled(std::vector<double> x, std::vector<double> psi);

    // Pointwise sum; domain is the intersection of the operands' domains.
    friend Potential1D operator+(const Potential1D& a, const Potential1D& b);

    friend Potential1D operator*(double s, const Potential1D& p);

    // Restrict the domain (used to bound solver search windows).
    Potential1D restricted(Interval window) const;

    // Escape hatch for analytic models defined elsewhere (trap electrodes).
    static Potential1D from_impl(std::shared_ptr<const detail::PotentialImpl> impl);

private:
    std::shared_ptr<const detail::PotentialImpl> impl_;
};

namespace detail {

class PotentialImpl {
public:
    virtual ~PotentialImpl() = default;
    virtual double value(double x) const = 0;
    virtual double deriv(double x) const = 0;
    virtual double second_deriv(double x) const = 0;
    virtual Interval domain() const = 0;
};

} // namespace detail

} // namespace ionpot

#endif
