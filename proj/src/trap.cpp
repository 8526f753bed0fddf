#include "ionpot/trap.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <utility>

#include "ionpot/errors.hpp"

namespace ionpot {

namespace {
constexpr double kInvPi = std::numbers::inv_pi;
}

TrapGeometry TrapGeometry::uniform(std::size_t n, double strip_width, double height,
                                   double x_start) {
    if (n == 0) throw ConfigError("trap needs at least one strip");
    if (!(strip_width > 0.0)) throw ConfigError("strip width must be positive");
    TrapGeometry g;
    g.height = height;
    g.strips.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        g.strips.push_back(Strip{x_start + strip_width * double(k),
                                 x_start + strip_width * double(k + 1)});
    }
    g.validate();
    return g;
}

TrapGeometry TrapGeometry::five_segment_default() {
    return uniform(5, 100.0, 100.0, -250.0);
}

void TrapGeometry::validate() const {
    if (strips.empty()) throw ConfigError("trap needs at least one strip");
    if (!(height > 0.0) || !std::isfinite(height)) {
        throw ConfigError("trap height must be positive and finite");
    }
    for (std::size_t k = 0; k < strips.size(); ++k) {
        const Strip& s = strips[k];
        if (!std::isfinite(s.x0) || !std::isfinite(s.x1) || !(s.width() > 0.0)) {
            throw ConfigError("strip endpoints must be finite with x1 > x0");
        }
        if (k > 0 && strips[k - 1].x1 > s.x0 + 1e-12) {
            throw ConfigError("strips must be ordered and non-overlapping");
        }
    }
    if (!(voltage_min < voltage_max)) {
        throw ConfigError("voltage range must satisfy min < max");
    }
}

double strip_unit_potential(double x, const Strip& strip, double height) {
    return kInvPi * (std::atan((strip.x1 - x) / height) - std::atan((strip.x0 - x) / height));
}

double strip_unit_potential_deriv(double x, const Strip& strip, double height) {
    const double a = strip.x0 - x;
    const double b = strip.x1 - x;
    const double h2 = height * height;
    return kInvPi * height * (1.0 / (h2 + a * a) - 1.0 / (h2 + b * b));
}

double strip_unit_potential_second_deriv(double x, const Strip& strip, double height) {
    const double a = strip.x0 - x;
    const double b = strip.x1 - x;
    const double h2 = height * height;
    const double da = h2 + a * a;
    const double db = h2 + b * b;
    return kInvPi * 2.0 * height * (a / (da * da) - b / (db * db));
}

namespace {

class TrapAxialImpl final : public detail::PotentialImpl {
public:
    TrapAxialImpl(TrapGeometry geometry, std::vector<double> voltages_v, double scale)
        : geometry_(std::move(geometry)), voltages_(std::move(voltages_v)), scale_(scale) {}

    double value(double x) const override {
        double v = 0.0;
        for (std::size_t m = 0; m < voltages_.size(); ++m) {
            v += voltages_[m] * strip_unit_potential(x, geometry_.strips[m], geometry_.height);
        }
        return scale_ * v;
    }

    double deriv(double x) const override {
        double v = 0.0;
        for (std::size_t m = 0; m < voltages_.size(); ++m) {
            v += voltages_[m] *
                 strip_unit_potential_deriv(x, geometry_.strips[m], geometry_.height);
        }
        return scale_ * v;
    }

    double second_deriv(double x) const override {
        double v = 0.0;
        for (std::size_t m = 0; m < voltages_.size(); ++m) {
            v += voltages_[m] *
                 strip_unit_potential_second_deriv(x, geometry_.strips[m], geometry_.height);
        }
        return scale_ * v;
    }

    Interval domain() const override { return {}; }

private:
    TrapGeometry geometry_;
    std::vector<double> voltages_;
    double scale_;
};

} // namespace

Potential1D axial_potential(const TrapGeometry& geometry,
                            const std::vector<double>& voltages_v,
                            const UnitSystem& units) {
    geometry.validate();
    if (voltages_v.size() != geometry.strips.size()) {
        throw InvalidArgument("one voltage per strip required");
    }
    for (double v : voltages_v) {
        if (!std::isfinite(v)) throw InvalidArgument("voltages must be finite");
        if (v < geometry.voltage_min || v > geometry.voltage_max) {
            throw ConfigError("voltage outside the accepted electrode range");
        }
    }
    // A unit positive charge at potential V volts has energy V eV.
    const double scale = units.energy_to_internal(1.0);
    return Potential1D::from_impl(
        std::make_shared<TrapAxialImpl>(geometry, voltages_v, scale));
}

Potential1D test_potential(const std::string& family, const std::vector<double>& params) {
    if (family == "harmonic") {
        if (params.size() == 1) return Potential1D::harmonic(params[0]);
        if (params.size() == 2) return Potential1D::harmonic(params[0], params[1]);
        throw InvalidArgument("harmonic takes params {k} or {k, center}");
    }
    if (family == "quartic") {
        if (params.size() != 2) throw InvalidArgument("quartic takes params {a, b}");
        return Potential1D::quartic(params[0], params[1]);
    }
    if (family == "tilt") {
        if (params.size() != 1) throw InvalidArgument("tilt takes params {slope}");
        return Potential1D::linear_tilt(params[0]);
    }
    throw InvalidArgument("unknown test potential family: " + family);
}

} // namespace ionpot
