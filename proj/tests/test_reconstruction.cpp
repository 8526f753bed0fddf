#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "ionpot/equilibrium.hpp"
#include "ionpot/errors.hpp"
#include "ionpot/physics.hpp"
#include "ionpot/reconstruction.hpp"
#include "ionpot/units.hpp"

using namespace ionpot;

namespace {

const UnitSystem kUnits = UnitSystem::micrometre_scale();

// Exact harmonic k=1 equilibrium for 5 ions (independent 40-digit solve).
const std::vector<double> kFive = {-1.7429032118739348, -0.82210075656808562, 0.0,
                                   0.82210075656808562, 1.7429032118739348};

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

// Best remaining error once the free additive constant is fitted out.
double aligned_max_error(const PotentialCurve& curve,
                         const std::function<double(double)>& truth) {
    std::vector<double> diff(curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        diff[i] = curve.psi()[i] - truth(curve.x()[i]);
    }
    const double c = mean(diff);
    double worst = 0.0;
    for (double d : diff) worst = std::max(worst, std::abs(d - c));
    return worst;
}

} // namespace

TEST_CASE("force samples balance the Coulomb repulsion") {
    const IonString s(kFive, kUnits);
    const auto samples = external_force_samples(s);
    REQUIRE(samples.size() == 5);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(samples[i].position == kFive[i]);
        CHECK(samples[i].ion_index == i);
        CHECK(samples[i].force == doctest::Approx(-coulomb_force(s, i)).epsilon(1e-15));
        // at a harmonic k=1 equilibrium the external force is exactly -x
        CHECK(samples[i].force == doctest::Approx(-kFive[i]).epsilon(1e-12));
    }
}

TEST_CASE("harmonic potential is recovered exactly") {
    // the external force of a harmonic well is linear, inside the
    // interpolation class, so integration reproduces k/2 x^2 to rounding
    const IonString s(kFive, kUnits);
    ReconstructOptions opt;
    opt.offset = OffsetConvention::anchored;
    opt.anchor_x = 0.0;
    const PotentialCurve curve = reconstruct(s, opt);
    for (std::size_t i = 0; i < curve.size(); ++i) {
        CHECK(std::abs(curve.psi()[i] - 0.5 * curve.x()[i] * curve.x()[i]) <= 1e-12);
    }
    CHECK(curve.domain().lo == kFive.front());
    CHECK(curve.domain().hi == kFive.back());
}

TEST_CASE("quartic double well is recovered after offset alignment") {
    const Potential1D pot = Potential1D::quartic(1.0, 1.0);
    const EquilibriumResult res = solve_equilibrium(pot, 12);
    REQUIRE(res.converged);
    const PotentialCurve curve = reconstruct(res.string);
    CHECK(aligned_max_error(curve, [&](double x) { return pot.value(x); }) <= 1e-3);
}

TEST_CASE("offset conventions hold on the sample grid") {
    const IonString s(kFive, kUnits);

    ReconstructOptions min_zero;
    min_zero.offset = OffsetConvention::min_zero;
    const PotentialCurve a = reconstruct(s, min_zero);
    CHECK(*std::min_element(a.psi().begin(), a.psi().end()) == 0.0);
    CHECK(a.offset_convention() == OffsetConvention::min_zero);

    ReconstructOptions mean_zero;
    mean_zero.offset = OffsetConvention::mean_zero;
    const PotentialCurve b = reconstruct(s, mean_zero);
    CHECK(std::abs(mean(b.psi())) <= 1e-13);

    ReconstructOptions anchored;
    anchored.offset = OffsetConvention::anchored;
    anchored.anchor_x = 0.5;
    const PotentialCurve c = reconstruct(s, anchored);
    CHECK(std::abs(c.value(0.5)) <= 1e-12);
    CHECK(c.anchor_x() == 0.5);
}

TEST_CASE("with_offset re-gauges and is idempotent") {
    const IonString s(kFive, kUnits);
    const PotentialCurve a = reconstruct(s);
    const PotentialCurve b = a.with_offset(OffsetConvention::mean_zero);
    CHECK(std::abs(mean(b.psi())) <= 1e-13);
    const PotentialCurve c = b.with_offset(OffsetConvention::min_zero);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(c.psi()[i] == doctest::Approx(a.psi()[i]).epsilon(1e-13));
    }
    const PotentialCurve d = a.with_offset(OffsetConvention::min_zero);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(d.psi()[i] == a.psi()[i]);
}

TEST_CASE("grid spec controls the output grid") {
    const IonString s(kFive, kUnits);

    ReconstructOptions by_spacing;
    by_spacing.grid.spacing = 0.37;  // does not divide the span evenly
    const PotentialCurve a = reconstruct(s, by_spacing);
    CHECK(a.x().front() == kFive.front());
    CHECK(a.x().back() == kFive.back());
    for (std::size_t i = 1; i < a.size(); ++i) {
        CHECK(a.x()[i] - a.x()[i - 1] <= 0.37 * (1.0 + 1e-12));
    }

    ReconstructOptions by_count;
    by_count.grid.count = 101;
    const PotentialCurve b = reconstruct(s, by_count);
    CHECK(b.size() == 101);

    // default: 512 points
    const PotentialCurve c = reconstruct(s);
    CHECK(c.size() == 512);

    // spacing wins when both are set
    ReconstructOptions both;
    both.grid.spacing = 0.5;
    both.grid.count = 7;
    const PotentialCurve d = reconstruct(s, both);
    CHECK(d.size() != 7);
}

TEST_CASE("curve evaluation covers the exact endpoints") {
    const IonString s(kFive, kUnits);
    const PotentialCurve curve = reconstruct(s);
    CHECK_NOTHROW(curve.value(curve.domain().lo));
    CHECK_NOTHROW(curve.value(curve.domain().hi));
    CHECK_NOTHROW(curve.value(s.positions().front()));
    CHECK_NOTHROW(curve.value(s.positions().back()));
    CHECK_THROWS_AS(curve.value(curve.domain().hi + 1e-9), DomainError);
    CHECK_THROWS_AS(curve.value(curve.domain().lo - 1e-9), DomainError);
    // interpolation is exact at the nodes
    for (std::size_t i = 0; i < curve.size(); i += 50) {
        CHECK(curve.value(curve.x()[i]) == curve.psi()[i]);
    }
}

TEST_CASE("monte carlo jitter produces a deterministic sigma band") {
    const IonString s(kFive, kUnits);
    ReconstructOptions opt;
    opt.monte_carlo = MonteCarloOptions{200, 0.02, 7};
    const PotentialCurve a = reconstruct(s, opt);
    REQUIRE(a.has_band());
    REQUIRE(a.sigma().size() == a.size());
    double peak = 0.0;
    for (double v : a.sigma()) {
        CHECK(v >= 0.0);
        CHECK(std::isfinite(v));
        peak = std::max(peak, v);
    }
    CHECK(peak > 0.0);

    // bit-identical for the same seed
    const PotentialCurve b = reconstruct(s, opt);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.sigma()[i] == b.sigma()[i]);

    // a different seed gives a different band
    opt.monte_carlo->seed = 8;
    const PotentialCurve c = reconstruct(s, opt);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) any_diff |= (a.sigma()[i] != c.sigma()[i]);
    CHECK(any_diff);

    // doubling the jitter roughly doubles the band
    opt.monte_carlo = MonteCarloOptions{200, 0.04, 7};
    const PotentialCurve d = reconstruct(s, opt);
    CHECK(mean(d.sigma()) / mean(a.sigma()) == doctest::Approx(2.0).epsilon(0.35));
}

TEST_CASE("curve construction validates its inputs") {
    CHECK_THROWS_AS(PotentialCurve({0.0}, {1.0}, kUnits), InvalidArgument);
    CHECK_THROWS_AS(PotentialCurve({0.0, 0.0}, {1.0, 2.0}, kUnits), InvalidArgument);
    CHECK_THROWS_AS(PotentialCurve({1.0, 0.0}, {1.0, 2.0}, kUnits), InvalidArgument);
    CHECK_THROWS_AS(PotentialCurve({0.0, 1.0}, {1.0}, kUnits), InvalidArgument);
    CHECK_THROWS_AS(
        PotentialCurve({0.0, 1.0}, {1.0, 2.0}, kUnits, OffsetConvention::anchored, 5.0),
        InvalidArgument);

    PotentialCurve curve({0.0, 1.0, 2.0}, {1.0, 0.0, 1.0}, kUnits);
    CHECK_THROWS_AS(curve.set_band({1.0}), InvalidArgument);
    CHECK_THROWS_AS(curve.set_band({1.0, -1.0, 0.0}), InvalidArgument);
    curve.set_band({0.1, 0.2, 0.3});
    CHECK(curve.has_band());
}

TEST_CASE("reconstruction needs at least two ions") {
    const IonString one({0.0}, kUnits);
    CHECK_THROWS_AS(reconstruct(one), InvalidArgument);
    CHECK_THROWS_AS(interpolate_force(external_force_samples(one)), InvalidArgument);
}
