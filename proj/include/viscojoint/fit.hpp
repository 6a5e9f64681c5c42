#pragma once

/**
 * @file fit.hpp
 * @brief Friction/damping identification from pendulum drop trajectories,
 *        case-bootstrap uncertainty, and Monte-Carlo response bands.
 *
 * Friction coefficients are fitted on damper-free drops with the damping
 * fixed at zero; the damping coefficient is then fitted on damped drops with
 * the friction coefficients held at their fitted values.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "viscojoint/error.hpp"
#include "viscojoint/pendulum.hpp"
#include "viscojoint/simplex.hpp"
#include "viscojoint/stats.hpp"

namespace vj::fit {

enum class Param { mu_k = 0, mu_d = 1, damping_b = 2 };
inline constexpr std::size_t kParamCount = 3;

inline std::string_view param_name(Param p) {
    switch (p) {
        case Param::mu_k: return "mu_k";
        case Param::mu_d: return "mu_d";
        case Param::damping_b: return "damping_b";
    }
    return "?";
}

/// (mu_k, mu_d, damping_b)
using ParamVector = std::array<double, kParamCount>;

inline ParamVector params_of(const pendulum::PendulumParams& p) { return {p.mu_k, p.mu_d, p.damping_b}; }

inline pendulum::PendulumParams with_params(pendulum::PendulumParams base, const ParamVector& v) {
    base.mu_k = v[0];
    base.mu_d = v[1];
    base.damping_b = v[2];
    return base;
}

enum class FitMode { undamped_friction, damped };

struct Bounds {
    double lo = 0.0;
    double hi = 1.0;
};

struct FitSpec {
    FitMode mode = FitMode::undamped_friction;
    std::vector<Param> free_params{Param::mu_k, Param::mu_d};
    std::array<Bounds, kParamCount> bounds{{{0.0, 0.05}, {0.0, 1e-3}, {0.0, 0.05}}};
    double penalty_weight = 1e6;
    int max_iters = 300;
    double tol = 1e-9;
    int restarts = 3;
    std::uint64_t seed = 0;

    static FitSpec for_mode(FitMode mode) {
        FitSpec s;
        s.mode = mode;
        if (mode == FitMode::damped) {
            // One free parameter: extra restarts cost four times the time and
            // never moved the optimum in testing.
            s.free_params = {Param::damping_b};
            s.restarts = 1;
        }
        return s;
    }
};

/// Returned by `loss` when the simulation diverges for the trial parameters.
inline constexpr double kLossSentinel = 1e6;

inline bool is_free(const FitSpec& spec, Param p) {
    return std::find(spec.free_params.begin(), spec.free_params.end(), p) != spec.free_params.end();
}

inline void validate(const FitSpec& spec) {
    if (spec.free_params.empty()) throw Error("fit needs at least one free parameter");
    if (spec.mode == FitMode::undamped_friction && is_free(spec, Param::damping_b)) {
        throw Error("damping_b is fixed at zero when fitting damper-free trials");
    }
    for (const auto& b : spec.bounds) {
        if (!(b.lo >= 0) || !(b.hi > b.lo)) throw Error("fit bounds need 0 <= lo < hi");
    }
    if (spec.max_iters < 1) throw Error("max_iters must be positive");
}

/// Per-trial initial state: the first sample's angle and its recorded
/// velocity, or a forward difference of the first two samples.
/// Starting angle and rate for replaying `t`. Without a rate column both come
/// from a least-squares cubic through the first `window` seconds, which keeps
/// tracker noise out of the launch rate.
inline std::pair<double, double> initial_state(const pendulum::Trajectory& t, double window = 0.08) {
    if (t.has_omega()) return {t.angles.front(), t.omegas.front()};
    constexpr int kTerms = 4;
    const std::size_t n = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(window / t.dt)) + 1, kTerms, t.size());
    // normal equations in s = sample index / n, which keeps them well scaled
    std::array<std::array<double, kTerms + 1>, kTerms> m{};
    for (std::size_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / static_cast<double>(n);
        std::array<double, kTerms> basis{1.0, s, s * s, s * s * s};
        for (int r = 0; r < kTerms; ++r) {
            for (int c = 0; c < kTerms; ++c) m[r][c] += basis[r] * basis[c];
            m[r][kTerms] += basis[r] * t.angles[i];
        }
    }
    for (int k = 0; k < kTerms; ++k) {
        int piv = k;
        for (int r = k + 1; r < kTerms; ++r)
            if (std::abs(m[r][k]) > std::abs(m[piv][k])) piv = r;
        std::swap(m[k], m[piv]);
        for (int r = 0; r < kTerms; ++r) {
            if (r == k) continue;
            const double f = m[r][k] / m[k][k];
            for (int c = k; c <= kTerms; ++c) m[r][c] -= f * m[k][c];
        }
    }
    const double a0 = m[0][kTerms] / m[0][0];
    const double a1 = m[1][kTerms] / m[1][1];
    return {a0, a1 / (static_cast<double>(n) * t.dt)};
}

inline double bound_penalty(const ParamVector& v, const FitSpec& spec) {
    double pen = 0.0;
    for (Param p : spec.free_params) {
        const auto i = static_cast<std::size_t>(p);
        const double below = std::max(0.0, -v[i]);
        const double above = std::max(0.0, v[i] - spec.bounds[i].hi);
        pen += below * below + above * above;
    }
    return spec.penalty_weight * pen;
}

inline ParamVector clamp_to_bounds(ParamVector v, const FitSpec& spec) {
    for (Param p : spec.free_params) {
        const auto i = static_cast<std::size_t>(p);
        v[i] = std::clamp(v[i], spec.bounds[i].lo, spec.bounds[i].hi);
    }
    return v;
}

namespace detail {

inline double angle_mse(const ParamVector& v, const pendulum::Trajectory& observed,
                        const pendulum::PendulumParams& base) {
    const auto [theta0, omega0] = initial_state(observed);
    pendulum::SimOptions opt;
    opt.dt_exp = observed.dt;
    try {
        const auto sim = pendulum::simulate(with_params(base, v), theta0, omega0, observed.span(), opt);
        double sse = 0.0;
        const std::size_t n = std::min(sim.size(), observed.size());
        for (std::size_t i = 0; i < n; ++i) {
            const double e = sim.angles[i] - observed.angles[i];
            sse += e * e;
        }
        const double mse = sse / static_cast<double>(n);
        return std::isfinite(mse) ? std::min(mse, kLossSentinel) : kLossSentinel;
    } catch (const IntegrationDiverged&) {
        return kLossSentinel;
    }
}

}  // namespace detail

/// Mean squared angle error of the simulated response against `observed`,
/// plus the quadratic bound-violation penalty. Parameters outside their
/// bounds are clamped before simulating, so the value is always finite.
inline double loss(const ParamVector& v, const pendulum::Trajectory& observed, const FitSpec& spec,
                   const pendulum::PendulumParams& base) {
    pendulum::validate(observed);
    return detail::angle_mse(clamp_to_bounds(v, spec), observed, base) + bound_penalty(v, spec);
}

struct FitResult {
    ParamVector params{};
    double loss = 0.0;
    bool converged = false;
    int evaluations = 0;
};

namespace detail {

inline bool trajectory_less(const pendulum::Trajectory& a, const pendulum::Trajectory& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    if (a.dt != b.dt) return a.dt < b.dt;
    if (a.angles != b.angles) return a.angles < b.angles;
    return a.omegas < b.omegas;
}

inline bool trajectory_equal(const pendulum::Trajectory& a, const pendulum::Trajectory& b) {
    return a.dt == b.dt && a.angles == b.angles && a.omegas == b.omegas;
}

/// Canonical (sorted, de-duplicated with multiplicities) view of a trial set,
/// so the objective does not depend on trial order.
struct WeightedSet {
    std::vector<const pendulum::Trajectory*> trials;
    std::vector<double> weights;
};

inline WeightedSet canonical(std::span<const pendulum::Trajectory* const> trials) {
    std::vector<const pendulum::Trajectory*> sorted(trials.begin(), trials.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](auto* a, auto* b) { return trajectory_less(*a, *b); });
    WeightedSet set;
    for (auto* t : sorted) {
        if (!set.trials.empty() && trajectory_equal(*set.trials.back(), *t)) {
            set.weights.back() += 1.0;
        } else {
            set.trials.push_back(t);
            set.weights.push_back(1.0);
        }
    }
    return set;
}

inline FitResult fit_pointers(std::span<const pendulum::Trajectory* const> observed, const FitSpec& spec,
                              const ParamVector& params0, const pendulum::PendulumParams& base) {
    validate(spec);
    if (observed.empty()) throw InsufficientData("fit needs at least one trajectory");
    for (auto* t : observed) pendulum::validate(*t);
    for (Param p : spec.free_params) {
        const auto i = static_cast<std::size_t>(p);
        if (params0[i] < spec.bounds[i].lo || params0[i] > spec.bounds[i].hi) {
            throw Error("initial " + std::string(param_name(p)) + " outside its bounds");
        }
    }

    ParamVector fixed = params0;
    if (spec.mode == FitMode::undamped_friction) fixed[static_cast<std::size_t>(Param::damping_b)] = 0.0;

    const WeightedSet set = canonical(observed);
    const std::size_t n_free = spec.free_params.size();
    std::vector<double> scale(n_free);
    for (std::size_t j = 0; j < n_free; ++j) {
        const auto& b = spec.bounds[static_cast<std::size_t>(spec.free_params[j])];
        scale[j] = b.hi - b.lo;
    }

    auto unpack = [&](std::span<const double> x) {
        ParamVector v = fixed;
        for (std::size_t j = 0; j < n_free; ++j) v[static_cast<std::size_t>(spec.free_params[j])] = x[j] * scale[j];
        return v;
    };
    auto objective = [&](std::span<const double> x) {
        const ParamVector v = unpack(x);
        const ParamVector inside = clamp_to_bounds(v, spec);
        double total = 0.0;
        for (std::size_t k = 0; k < set.trials.size(); ++k) {
            total += set.weights[k] * detail::angle_mse(inside, *set.trials[k], base);
        }
        return total + bound_penalty(v, spec);
    };

    std::vector<double> x0(n_free);
    for (std::size_t j = 0; j < n_free; ++j) x0[j] = fixed[static_cast<std::size_t>(spec.free_params[j])] / scale[j];

    optim::SimplexOptions nm;
    nm.max_iters = spec.max_iters;
    nm.f_tol = spec.tol;
    nm.x_tol = 1e-7;
    nm.initial_step = {0.02};

    FitResult best;
    auto run = [&](const std::vector<double>& start, std::vector<double> steps) {
        nm.initial_step = std::move(steps);
        const auto r = optim::nelder_mead(objective, start, nm);
        best.evaluations += r.evaluations;
        if (best.evaluations == r.evaluations || r.f < best.loss) {
            best.loss = r.f;
            best.params = clamp_to_bounds(unpack(r.x), spec);
            best.converged = r.converged;
        }
    };

    run(x0, {0.02});
    auto rng = stats::split_stream(spec.seed, 0);
    std::uniform_real_distribution<double> step_dist(-0.05, 0.05);
    for (int r = 0; r < spec.restarts; ++r) {
        std::vector<double> start(n_free), steps(n_free);
        for (std::size_t j = 0; j < n_free; ++j) {
            start[j] = best.params[static_cast<std::size_t>(spec.free_params[j])] / scale[j];
            const double s = step_dist(rng);
            steps[j] = std::abs(s) < 1e-3 ? 1e-3 : s;
        }
        run(start, steps);
    }
    return best;
}

inline std::vector<const pendulum::Trajectory*> pointers(std::span<const pendulum::Trajectory> trials) {
    std::vector<const pendulum::Trajectory*> out;
    out.reserve(trials.size());
    for (const auto& t : trials) out.push_back(&t);
    return out;
}

}  // namespace detail

/// Minimises the summed loss over `observed` with restarted Nelder-Mead.
/// The search runs in coordinates normalised by each bound width. Entries of
/// `params0` that are not free stay fixed at their given values, and `base`
/// supplies the rig geometry.
inline FitResult fit(std::span<const pendulum::Trajectory> observed, const FitSpec& spec,
                     const ParamVector& params0, const pendulum::PendulumParams& base) {
    const auto ptrs = detail::pointers(observed);
    return detail::fit_pointers(ptrs, spec, params0, base);
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct ParamDistribution {
    std::vector<ParamVector> samples;
    ParamVector point_estimate{};
    std::array<Interval, kParamCount> credible_intervals{};
    int failed_resamples = 0;
};

/// Per-parameter mean and nearest-rank [2.5%, 97.5%] interval of `samples`.
inline ParamDistribution summarize(std::vector<ParamVector> samples) {
    if (samples.empty()) throw InsufficientData("empty parameter sample");
    ParamDistribution d;
    d.samples = std::move(samples);
    for (std::size_t i = 0; i < kParamCount; ++i) {
        std::vector<double> column;
        column.reserve(d.samples.size());
        for (const auto& s : d.samples) column.push_back(s[i]);
        d.point_estimate[i] = stats::mean(column);
        d.credible_intervals[i] = {stats::order_statistic(column, 0.025), stats::order_statistic(column, 0.975)};
    }
    return d;
}

/// Case bootstrap: whole trajectories are resampled with replacement and each
/// resample is refitted. Resample `r` draws from its own split stream.
inline ParamDistribution bootstrap(std::span<const pendulum::Trajectory> observed, const FitSpec& spec,
                                   int n_resamples, std::uint64_t seed, const ParamVector& params0,
                                   const pendulum::PendulumParams& base) {
    if (n_resamples < 2) throw Error("bootstrap needs at least two resamples");
    if (observed.size() < 2) throw InsufficientData("case bootstrap needs at least two trajectories");

    std::vector<ParamVector> samples;
    int failures = 0;
    std::vector<const pendulum::Trajectory*> pick(observed.size());
    for (int r = 0; r < n_resamples; ++r) {
        auto rng = stats::split_stream(seed, static_cast<std::uint64_t>(r) + 1);
        std::uniform_int_distribution<std::size_t> idx(0, observed.size() - 1);
        for (auto& p : pick) p = &observed[idx(rng)];
        try {
            samples.push_back(detail::fit_pointers(pick, spec, params0, base).params);
        } catch (const Error&) {
            ++failures;
        }
    }
    if (2 * failures > n_resamples) {
        throw BootstrapFailed(std::to_string(failures) + " of " + std::to_string(n_resamples) +
                              " bootstrap fits failed");
    }
    auto d = summarize(std::move(samples));
    d.failed_resamples = failures;
    return d;
}

/// b ~ U(lo, hi); every other parameter comes from the base set.
struct UniformDamping {
    double lo = 8.1e-3;
    double hi = 14.2e-3;
    int n = 100;
    std::uint64_t seed = 0;
};

inline std::vector<ParamVector> draw(const UniformDamping& u, const pendulum::PendulumParams& base) {
    if (!(u.hi >= u.lo) || u.n < 1) throw Error("invalid uniform damping spec");
    auto rng = stats::split_stream(u.seed, 0);
    std::uniform_real_distribution<double> dist(u.lo, u.hi);
    std::vector<ParamVector> out(static_cast<std::size_t>(u.n), params_of(base));
    for (auto& v : out) v[static_cast<std::size_t>(Param::damping_b)] = dist(rng);
    return out;
}

struct Band {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<double> mean, lo, hi;
    std::vector<pendulum::Trajectory> trajectories;
    int excluded = 0;
};

/// Simulates every parameter sample from the same release and returns the
/// pointwise mean and nearest-rank 2.5/97.5 % envelopes of theta(t).
inline Band monte_carlo_band(std::span<const ParamVector> samples, const pendulum::PendulumParams& base,
                             double theta0, double duration, const pendulum::SimOptions& opt = {},
                             double omega0 = 0.0) {
    if (samples.empty()) throw InsufficientData("band needs at least one parameter sample");
    Band band;
    band.dt = opt.dt_exp;
    for (const auto& s : samples) {
        try {
            band.trajectories.push_back(pendulum::simulate(with_params(base, s), theta0, omega0, duration, opt));
        } catch (const IntegrationDiverged&) {
            ++band.excluded;
        }
    }
    if (band.trajectories.empty()) throw InsufficientData("every band sample diverged");
    const std::size_t n = band.trajectories.front().size();
    band.mean.resize(n);
    band.lo.resize(n);
    band.hi.resize(n);
    std::vector<double> column(band.trajectories.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < band.trajectories.size(); ++k) column[k] = band.trajectories[k].angles[i];
        band.mean[i] = stats::mean(column);
        band.lo[i] = stats::order_statistic(column, 0.025);
        band.hi[i] = stats::order_statistic(column, 0.975);
    }
    return band;
}

}  // namespace vj::fit
