#include "ionpot/physics.hpp"

#include <cmath>
#include <string>

#include "ionpot/errors.hpp"

namespace ionpot {

namespace {

void check_ordered_finite(std::span<const double> positions) {
    if (positions.empty()) {
        throw InvalidArgument("ion string needs at least one ion");
    }
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (!std::isfinite(positions[i])) {
            throw InvalidArgument("ion position " + std::to_string(i) + " is not finite");
        }
        if (i > 0 && !(positions[i] > positions[i - 1])) {
            throw InvalidArgument("ion positions must be strictly increasing");
        }
    }
}

void check_separations(std::span<const double> positions) {
    for (std::size_t i = 0; i < positions.size(); ++i) {
        for (std::size_t j = i + 1; j < positions.size(); ++j) {
            if (std::abs(positions[j] - positions[i]) < kMinIonSeparation) {
                throw NumericError("coincident ions: |x_" + std::to_string(j) + " - x_" +
                                   std::to_string(i) + "| < 1e-9");
            }
        }
    }
}

} // namespace

IonString::IonString(std::vector<double> positions, UnitSystem units)
    : positions_(std::move(positions)), units_(units) {
    check_ordered_finite(positions_);
    check_separations(positions_);
}

std::vector<double> IonString::positions_um() const {
    std::vector<double> um(positions_.size());
    for (std::size_t i = 0; i < positions_.size(); ++i) {
        um[i] = units_.internal_to_um(positions_[i]);
    }
    return um;
}

IonString IonString::from_um(const std::vector<double>& um, UnitSystem units) {
    std::vector<double> internal(um.size());
    for (std::size_t i = 0; i < um.size(); ++i) {
        internal[i] = units.um_to_internal(um[i]);
    }
    return IonString(std::move(internal), units);
}

double coulomb_force(const IonString& string, std::size_t i) {
    const auto& x = string.positions();
    if (i >= x.size()) {
        throw InvalidArgument("ion index " + std::to_string(i) + " out of range");
    }
    double force = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (j == i) continue;
        const double d = x[i] - x[j];
        force += (d > 0.0 ? 1.0 : -1.0) / (d * d);
    }
    return force;
}

double total_energy(std::span<const double> positions, const Potential1D& potential) {
    if (positions.empty()) {
        throw InvalidArgument("empty configuration");
    }
    check_separations(positions);
    double u = 0.0;
    for (double x : positions) {
        u += potential.value(x);
    }
    for (std::size_t i = 0; i < positions.size(); ++i) {
        for (std::size_t j = i + 1; j < positions.size(); ++j) {
            u += 1.0 / std::abs(positions[j] - positions[i]);
        }
    }
    return u;
}

std::vector<double> energy_gradient(std::span<const double> positions,
                                    const Potential1D& potential) {
    if (positions.empty()) {
        throw InvalidArgument("empty configuration");
    }
    check_separations(positions);
    const std::size_t n = positions.size();
    std::vector<double> grad(n);
    for (std::size_t i = 0; i < n; ++i) {
        grad[i] = potential.deriv(positions[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = positions[i] - positions[j];
            const double f = (d > 0.0 ? 1.0 : -1.0) / (d * d);
            // d/dx_i of 1/|x_i - x_j| is -sign(d)/d^2.
            grad[i] -= f;
            grad[j] += f;
        }
    }
    return grad;
}

Eigen::MatrixXd energy_hessian(std::span<const double> positions,
                               const Potential1D& potential) {
    if (positions.empty()) {
        throw InvalidArgument("empty configuration");
    }
    check_separations(positions);
    const Eigen::Index n = static_cast<Eigen::Index>(positions.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        h(i, i) = potential.second_deriv(positions[i]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = std::abs(positions[i] - positions[j]);
            const double c = 2.0 / (d * d * d);
            h(i, i) += c;
            h(j, j) += c;
            h(i, j) -= c;
            h(j, i) -= c;
        }
    }
    return h;
}

} // namespace ionpot
