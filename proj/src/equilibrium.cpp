#include "ionpot/equilibrium.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ionpot/errors.hpp"

namespace ionpot {

namespace {

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

std::vector<double> equal_spacing_guess(Interval window, std::size_t n) {
    const double lo = window.lo + 0.2 * window.length();
    const double hi = window.hi - 0.2 * window.length();
    std::vector<double> x(n);
    if (n == 1) {
        x[0] = 0.5 * (lo + hi);
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = lo + (hi - lo) * double(i) / double(n - 1);
        }
    }
    return x;
}

// Largest step fraction keeping the ion ordering and the window margins:
// no inter-ion gap and no gap to a window edge may close by more than
// max_gap_closure in a single step.
double clip_fraction(const std::vector<double>& x, const std::vector<double>& step,
                     Interval window, double max_gap_closure) {
    double t = 1.0;
    const std::size_t n = x.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double dgap = step[i + 1] - step[i];
        if (dgap < 0.0) {
            t = std::min(t, max_gap_closure * (x[i + 1] - x[i]) / (-dgap));
        }
    }
    if (step.front() < 0.0) {
        t = std::min(t, max_gap_closure * (x.front() - window.lo) / (-step.front()));
    }
    if (step.back() > 0.0) {
        t = std::min(t, max_gap_closure * (window.hi - x.back()) / step.back());
    }
    return t;
}

struct SolveAttempt {
    std::vector<double> x;
    double residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    bool stable = false;
};

SolveAttempt run_newton(const Potential1D& potential, std::vector<double> x,
                        Interval window, const SolverConfig& config) {
    SolveAttempt out;
    const std::size_t n = x.size();
    std::vector<double> step(n), trial(n);

    for (int iter = 0; iter < config.max_iterations; ++iter) {
        out.iterations = iter;
        const std::vector<double> grad = energy_gradient(x, potential);
        out.residual = max_abs(grad);
        if (out.residual <= config.gradient_tol) {
            out.converged = true;
            break;
        }

        const Eigen::MatrixXd hess = energy_hessian(x, potential);
        Eigen::Map<const Eigen::VectorXd> g(grad.data(), Eigen::Index(n));

        Eigen::LLT<Eigen::MatrixXd> llt(hess);
        Eigen::VectorXd s;
        if (llt.info() == Eigen::Success) {
            s = llt.solve(-g);
        } else {
            // Indefinite Hessian: scaled steepest descent keeps progress.
            const double scale = std::max(hess.diagonal().cwiseAbs().maxCoeff(), 1e-12);
            s = -g / scale;
        }
        double descent = g.dot(s);
        if (!(descent < 0.0)) {
            const double scale = std::max(hess.diagonal().cwiseAbs().maxCoeff(), 1e-12);
            s = -g / scale;
            descent = g.dot(s);
        }
        for (std::size_t i = 0; i < n; ++i) step[i] = s[Eigen::Index(i)];

        double t = clip_fraction(x, step, window, config.max_gap_closure);
        const double u0 = total_energy(x, potential);
        // Near the minimum the predicted decrease drops below the energy's
        // own rounding granularity and an energy comparison is pure noise;
        // judge the (clipped) Newton step by gradient decrease instead.
        const double granularity = 16.0 * std::numeric_limits<double>::epsilon() *
                                   std::max(std::abs(u0), 1.0);
        bool accepted = false;
        if (-t * descent <= granularity) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + t * step[i];
            accepted = max_abs(energy_gradient(trial, potential)) < out.residual;
        } else {
            while (t > 1e-14) {
                for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + t * step[i];
                const double ut = total_energy(trial, potential);
                if (ut <= u0 + 1e-4 * t * descent) {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
        }
        if (!accepted) {
            break;  // stalled; residual reported as-is
        }
        x = trial;
    }

    if (!out.converged) {
        // Residual at the final iterate.
        out.residual = max_abs(energy_gradient(x, potential));
        if (out.residual <= config.gradient_tol) out.converged = true;
    }
    out.stable = hessian_positive_definite(x, potential);
    out.x = std::move(x);
    return out;
}

// Seed ions clustered around each well, deepest wells first when there are
// fewer ions than wells.
std::vector<double> well_seeded_guess(const Potential1D& potential,
                                      const std::vector<double>& wells, std::size_t n) {
    std::vector<std::size_t> order(wells.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return potential.value(wells[a]) < potential.value(wells[b]);
    });

    const std::size_t used = std::min(n, wells.size());
    std::vector<std::size_t> counts(wells.size(), 0);
    for (std::size_t k = 0; k < used; ++k) counts[order[k]] = 1;
    for (std::size_t extra = used; extra < n; ++extra) {
        counts[order[extra % used]] += 1;
    }

    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t w = 0; w + 1 < wells.size(); ++w) {
        min_gap = std::min(min_gap, wells[w + 1] - wells[w]);
    }

    std::vector<double> x;
    x.reserve(n);
    for (std::size_t w = 0; w < wells.size(); ++w) {
        const std::size_t c = counts[w];
        if (c == 0) continue;
        // Local crystal scale from the well curvature, capped so clusters
        // from neighbouring wells cannot interleave.
        double curv = std::max(potential.second_deriv(wells[w]), 1e-12);
        double a = std::cbrt(2.0 / curv);
        if (wells.size() > 1) {
            a = std::min(a, 0.8 * min_gap / double(c + 1));
        }
        for (std::size_t k = 0; k < c; ++k) {
            x.push_back(wells[w] + a * (double(k) - 0.5 * double(c - 1)));
        }
    }
    std::sort(x.begin(), x.end());
    return x;
}

} // namespace

std::vector<double> find_potential_wells(const Potential1D& potential, Interval window,
                                         std::size_t grid_points) {
    if (!window.bounded()) {
        throw ConfigError("well scan needs a bounded window");
    }
    const std::size_t m = std::max<std::size_t>(grid_points, 8);
    std::vector<double> psi(m);
    const double h = window.length() / double(m - 1);
    for (std::size_t i = 0; i < m; ++i) {
        psi[i] = potential.value(window.lo + h * double(i));
    }
    std::vector<double> wells;
    for (std::size_t i = 1; i + 1 < m; ++i) {
        if (psi[i] < psi[i - 1] && psi[i] <= psi[i + 1]) {
            const double denom = psi[i + 1] - 2.0 * psi[i] + psi[i - 1];
            double xw = window.lo + h * double(i);
            if (denom > 0.0) {
                xw += 0.5 * h * (psi[i - 1] - psi[i + 1]) / denom;
            }
            wells.push_back(xw);
        }
    }
    return wells;
}

bool hessian_positive_definite(std::span<const double> positions,
                               const Potential1D& potential) {
    const Eigen::MatrixXd hess = energy_hessian(positions, potential);
    Eigen::LLT<Eigen::MatrixXd> llt(hess);
    return llt.info() == Eigen::Success;
}

bool is_stable(const EquilibriumResult& result, const Potential1D& potential) {
    return hessian_positive_definite(result.string.positions(), potential);
}

EquilibriumResult solve_equilibrium(const Potential1D& potential, std::size_t n,
                                    const SolverConfig& config, const UnitSystem& units) {
    if (n == 0) {
        throw InvalidArgument("ion count must be at least 1");
    }
    if (!(config.gradient_tol > 0.0)) {
        throw InvalidArgument("gradient tolerance must be positive");
    }
    if (config.max_iterations < 1) {
        throw InvalidArgument("max iterations must be at least 1");
    }

    Interval window = potential.domain();
    if (config.search_interval) {
        window = Interval::intersect(*config.search_interval, potential.domain());
    }
    if (!window.bounded()) {
        throw ConfigError("search window is unbounded; set SolverConfig::search_interval");
    }

    const std::vector<double> wells = find_potential_wells(potential, window);
    if (wells.empty()) {
        throw NumericError("potential has no well inside the search window");
    }

    std::vector<double> x0;
    if (!config.initial_positions.empty()) {
        if (config.initial_positions.size() != n) {
            throw InvalidArgument("initial positions size does not match ion count");
        }
        x0 = config.initial_positions;
        for (std::size_t i = 0; i < n; ++i) {
            if (!window.contains(x0[i])) {
                throw InvalidArgument("initial position outside search window");
            }
        }
    } else {
        x0 = equal_spacing_guess(window, n);
    }

    SolveAttempt best = run_newton(potential, x0, window, config);
    int total_iterations = best.iterations;

    if (config.well_seeding_retry && !(best.converged && best.stable)) {
        const auto seeded = well_seeded_guess(potential, wells, n);
        SolveAttempt retry = run_newton(potential, seeded, window, config);
        total_iterations += retry.iterations;
        const auto better = [&](const SolveAttempt& a, const SolveAttempt& b) {
            const int ra = (a.converged ? 2 : 0) + (a.stable ? 1 : 0);
            const int rb = (b.converged ? 2 : 0) + (b.stable ? 1 : 0);
            if (ra != rb) return ra > rb;
            if (a.converged && b.converged) {
                return total_energy(a.x, potential) < total_energy(b.x, potential);
            }
            return a.residual < b.residual;
        };
        if (better(retry, best)) best = std::move(retry);
    }

    EquilibriumResult result{IonString(best.x, units), best.residual, total_iterations,
                             best.converged, best.stable};
    return result;
}

} // namespace ionpot
