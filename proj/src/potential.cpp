#include "ionpot/potential.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "ionpot/errors.hpp"
#include "ionpot/hermite.hpp"

namespace ionpot {

bool Interval::bounded() const {
    return std::isfinite(lo) && std::isfinite(hi) && lo < hi;
}

Interval Interval::intersect(const Interval& a, const Interval& b) {
    return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

namespace {

using detail::PotentialImpl;

class HarmonicImpl final : public PotentialImpl {
public:
    HarmonicImpl(double k, double centre, Interval dom) : k_(k), c_(centre), dom_(dom) {}
    double value(double x) const override {
        const double dx = x - c_;
        return 0.5 * k_ * dx * dx;
    }
    double deriv(double x) const override { return k_ * (x - c_); }
    double second_deriv(double) const override { return k_; }
    Interval domain() const override { return dom_; }

private:
    double k_, c_;
    Interval dom_;
};

class QuarticImpl final : public PotentialImpl {
public:
    QuarticImpl(double a, double b, Interval dom) : a_(a), b_(b), dom_(dom) {}
    double value(double x) const override {
        const double x2 = x * x;
        return a_ * x2 * x2 - b_ * x2;
    }
    double deriv(double x) const override { return 4.0 * a_ * x * x * x - 2.0 * b_ * x; }
    double second_deriv(double x) const override { return 12.0 * a_ * x * x - 2.0 * b_; }
    Interval domain() const override { return dom_; }

private:
    double a_, b_;
    Interval dom_;
};

class TiltImpl final : public PotentialImpl {
public:
    explicit TiltImpl(double slope) : s_(slope) {}
    double value(double x) const override { return s_ * x; }
    double deriv(double) const override { return s_; }
    double second_deriv(double) const override { return 0.0; }
    Interval domain() const override { return {}; }

private:
    double s_;
};

class SampledImpl final : public PotentialImpl {
public:
    explicit SampledImpl(CubicHermite interp) : interp_(std::move(interp)) {}
    double value(double x) const override { return interp_.value(x); }
    double deriv(double x) const override { return interp_.deriv(x); }
    double second_deriv(double x) const override { return interp_.second_deriv(x); }
    Interval domain() const override { return {interp_.x_min(), interp_.x_max()}; }

private:
    CubicHermite interp_;
};

class SumImpl final : public PotentialImpl {
public:
    SumImpl(Potential1D a, Potential1D b) : a_(std::move(a)), b_(std::move(b)) {}
    double value(double x) const override { return a_.value(x) + b_.value(x); }
    double deriv(double x) const override { return a_.deriv(x) + b_.deriv(x); }
    double second_deriv(double x) const override {
        return a_.second_deriv(x) + b_.second_deriv(x);
    }
    Interval domain() const override {
        return Interval::intersect(a_.domain(), b_.domain());
    }

private:
    Potential1D a_, b_;
};

class ScaledImpl final : public PotentialImpl {
public:
    ScaledImpl(double s, Potential1D p) : s_(s), p_(std::move(p)) {}
    double value(double x) const override { return s_ * p_.value(x); }
    double deriv(double x) const override { return s_ * p_.deriv(x); }
    double second_deriv(double x) const override { return s_ * p_.second_deriv(x); }
    Interval domain() const override { return p_.domain(); }

private:
    double s_;
    Potential1D p_;
};

class RestrictedImpl final : public PotentialImpl {
public:
    RestrictedImpl(Potential1D p, Interval window)
        : p_(std::move(p)), window_(window) {}
    double value(double x) const override {
        check(x);
        return p_.value(x);
    }
    double deriv(double x) const override {
        check(x);
        return p_.deriv(x);
    }
    double second_deriv(double x) const override {
        check(x);
        return p_.second_deriv(x);
    }
    Interval domain() const override { return window_; }

private:
    void check(double x) const {
        if (!window_.contains(x)) {
            throw DomainError("potential evaluated outside restricted window");
        }
    }
    Potential1D p_;
    Interval window_;
};

const PotentialImpl& require(const std::shared_ptr<const PotentialImpl>& impl) {
    if (!impl) {
        throw InvalidArgument("empty potential");
    }
    return *impl;
}

} // namespace

double Potential1D::value(double x) const { return require(impl_).value(x); }
double Potential1D::deriv(double x) const { return require(impl_).deriv(x); }
double Potential1D::second_deriv(double x) const { return require(impl_).second_deriv(x); }
Interval Potential1D::domain() const { return require(impl_).domain(); }

Potential1D Potential1D::from_impl(std::shared_ptr<const detail::PotentialImpl> impl) {
    Potential1D p;
    p.impl_ = std::move(impl);
    return p;
}

Potential1D Potential1D::harmonic(double stiffness, double centre) {
    if (!(stiffness > 0.0) || !std::isfinite(stiffness)) {
        throw InvalidArgument("harmonic stiffness must be positive");
    }
    // Default solve window: generously wider than any crystal this library
    // deals with (N <= O(100)) at the single-pair length scale k^(-1/3).
    const double scale = std::cbrt(1.0 / stiffness);
    const Interval dom{centre - 64.0 * scale, centre + 64.0 * scale};
    return from_impl(std::make_shared<HarmonicImpl>(stiffness, centre, dom));
}

Potential1D Potential1D::quartic(double a, double b) {
    if (!(a > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw InvalidArgument("quartic needs a > 0 and finite b");
    }
    const double well = b > 0.0 ? std::sqrt(b / (2.0 * a)) : 0.0;
    const double span = std::max(8.0 * std::pow(a, -1.0 / 6.0), 4.0 * well);
    const Interval dom{-span, span};
    return from_impl(std::make_shared<QuarticImpl>(a, b, dom));
}

Potential1D Potential1D::linear_tilt(double slope) {
    if (!std::isfinite(slope)) {
        throw InvalidArgument("tilt slope must be finite");
    }
    return from_impl(std::make_shared<TiltImpl>(slope));
}

Potential1D Potential1D::sampled(std::vector<double> x, std::vector<double> psi) {
    auto interp = CubicHermite::shape_preserving(x, psi);
    return from_impl(std::make_shared<SampledImpl>(std::move(interp)));
}

Potential1D operator+(const Potential1D& a, const Potential1D& b) {
    require(a.impl_);
    require(b.impl_);
    return Potential1D::from_impl(std::make_shared<SumImpl>(a, b));
}

Potential1D operator*(double s, const Potential1D& p) {
    require(p.impl_);
    return Potential1D::from_impl(std::make_shared<ScaledImpl>(s, p));
}

Potential1D Potential1D::restricted(Interval window) const {
    require(impl_);
    if (!(window.lo < window.hi)) {
        throw InvalidArgument("restriction window is empty");
    }
    return from_impl(std::make_shared<RestrictedImpl>(*this, window));
}

} // namespace ionpot
