#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "viscojoint/fit.hpp"
#include "viscojoint/pendulum.hpp"

using namespace vj;
using fit::Param;
using fit::ParamVector;
using pendulum::PendulumParams;
using pendulum::Trajectory;

namespace {

constexpr auto kMuK = static_cast<std::size_t>(Param::mu_k);
constexpr auto kB = static_cast<std::size_t>(Param::damping_b);

std::vector<Trajectory> undamped_set(const PendulumParams& p, int n, double duration) {
    std::vector<Trajectory> out;
    for (int k = 0; k < n; ++k) out.push_back(pendulum::simulate(p, pendulum::undamped_release + 0.1 * k, 0.0, duration));
    return out;
}

std::vector<Trajectory> damped_set(const PendulumParams& p, int n, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nz(0.0, noise);
    std::vector<Trajectory> out;
    for (int k = 0; k < n; ++k) {
        auto tr = pendulum::simulate(p, pendulum::damped_release - 0.05 * k, 0.0, 0.75);
        tr.omegas.clear();
        if (noise > 0)
            for (auto& a : tr.angles) a += nz(rng);
        out.push_back(std::move(tr));
    }
    return out;
}

PendulumParams rig_with_damper() {
    PendulumParams p;
    p.damping_b = pendulum::rig_damping;
    return p;
}

}  // namespace

TEST(FitLoss, ZeroOnOwnData) {
    PendulumParams p;
    p.mu_d = 2e-5;
    const auto tr = pendulum::simulate(p, pendulum::undamped_release, 0.0, 2.0);
    const auto spec = fit::FitSpec{};
    EXPECT_EQ(fit::loss(fit::params_of(p), tr, spec, p), 0.0);
    auto bumped = fit::params_of(p);
    bumped[kMuK] *= 1.1;
    EXPECT_GT(fit::loss(bumped, tr, spec, p), 0.0);
}

TEST(FitLoss, GridMinimumAtGeneratingValue) {
    const PendulumParams p;
    const auto tr = pendulum::simulate(p, pendulum::undamped_release, 0.0, 3.0);
    const auto spec = fit::FitSpec{};
    double best = 0.0, best_loss = 1e300;
    for (int i = 0; i <= 40; ++i) {
        const double mu = 1.0e-3 + i * 0.1e-3;
        auto v = fit::params_of(p);
        v[kMuK] = mu;
        const double l = fit::loss(v, tr, spec, p);
        if (l < best_loss) {
            best_loss = l;
            best = mu;
        }
    }
    EXPECT_NEAR(best, p.mu_k, 0.05e-3 + 1e-12);
}

TEST(FitLoss, PenaltyOutsideBounds) {
    const PendulumParams p;
    const auto tr = pendulum::simulate(p, pendulum::undamped_release, 0.0, 1.0);
    const auto spec = fit::FitSpec{};
    ParamVector v = fit::params_of(p);
    v[kMuK] = -0.01;
    const double inside = fit::loss(fit::clamp_to_bounds(v, spec), tr, spec, p);
    EXPECT_NEAR(fit::loss(v, tr, spec, p) - inside, spec.penalty_weight * 1e-4, 1e-9);
}

TEST(FitLoss, OmegaFreeTraceUsesSmoothedLaunchRate) {
    const auto p = rig_with_damper();
    auto tr = pendulum::simulate(p, pendulum::damped_release, 0.0, 0.75);
    const double omega = tr.omegas.front();
    tr.omegas.clear();
    const auto [theta0, omega0] = fit::initial_state(tr);
    EXPECT_NEAR(theta0, pendulum::damped_release, 1e-4);
    EXPECT_NEAR(omega0, omega, 0.01);
}

TEST(FitSpecTest, Validation) {
    auto spec = fit::FitSpec{};
    spec.free_params.push_back(Param::damping_b);
    EXPECT_THROW(fit::validate(spec), Error);
    spec = fit::FitSpec{};
    spec.free_params.clear();
    EXPECT_THROW(fit::validate(spec), Error);
    spec = fit::FitSpec{};
    spec.bounds[0] = {0.1, 0.05};
    EXPECT_THROW(fit::validate(spec), Error);
    EXPECT_NO_THROW(fit::validate(fit::FitSpec::for_mode(fit::FitMode::damped)));
}

TEST(Fit, RecoversFrictionFromNoiselessData) {
    const PendulumParams p;
    const auto data = undamped_set(p, 2, 3.0);
    const auto r = fit::fit(data, fit::FitSpec{}, {4e-3, 1e-4, 0.0}, p);
    EXPECT_NEAR(r.params[kMuK] / p.mu_k, 1.0, 0.02);
    EXPECT_EQ(r.params[kB], 0.0);
}

TEST(Fit, FrictionlessDataGivesZero) {
    PendulumParams p;
    p.mu_k = 0.0;
    const auto data = undamped_set(p, 1, 2.0);
    const auto r = fit::fit(data, fit::FitSpec{}, {0.0, 0.0, 0.0}, p);
    EXPECT_NEAR(r.params[0], 0.0, 1e-6);
    EXPECT_NEAR(r.params[1], 0.0, 1e-6);
}

TEST(Fit, DampedFitWithinTenPercent) {
    const auto p = rig_with_damper();
    const auto data = damped_set(p, 4, 0.005, 5);
    const auto r = fit::fit(data, fit::FitSpec::for_mode(fit::FitMode::damped), {p.mu_k, 0.0, 1e-3}, p);
    EXPECT_NEAR(r.params[kB] / p.damping_b, 1.0, 0.10);
    EXPECT_EQ(r.params[kMuK], p.mu_k);
}

TEST(Fit, ResultIndependentOfTrialOrderAndInsideBounds) {
    const auto p = rig_with_damper();
    auto data = damped_set(p, 3, 0.005, 9);
    const auto spec = fit::FitSpec::for_mode(fit::FitMode::damped);
    const auto a = fit::fit(data, spec, {p.mu_k, 0.0, 1e-3}, p);
    std::rotate(data.begin(), data.begin() + 1, data.end());
    std::swap(data[0], data[1]);
    const auto b = fit::fit(data, spec, {p.mu_k, 0.0, 1e-3}, p);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.loss, b.loss);
    for (std::size_t i = 0; i < fit::kParamCount; ++i) {
        EXPECT_GE(a.params[i], spec.bounds[i].lo);
        EXPECT_LE(a.params[i], spec.bounds[i].hi);
    }
}

TEST(Fit, RejectsBadStart) {
    const PendulumParams p;
    const auto data = undamped_set(p, 1, 1.0);
    EXPECT_THROW(fit::fit(data, fit::FitSpec{}, {0.5, 0.0, 0.0}, p), Error);
    EXPECT_THROW(fit::fit(std::span<const Trajectory>{}, fit::FitSpec{}, {1e-3, 0.0, 0.0}, p), InsufficientData);
}

TEST(Bootstrap, IdenticalTrialsGiveZeroWidth) {
    const auto p = rig_with_damper();
    auto one = damped_set(p, 1, 0.0, 0);
    std::vector<Trajectory> data(3, one.front());
    const auto d = fit::bootstrap(data, fit::FitSpec::for_mode(fit::FitMode::damped), 4, 1, {p.mu_k, 0.0, 1e-3}, p);
    ASSERT_EQ(d.samples.size(), 4u);
    for (const auto& s : d.samples) EXPECT_EQ(s, d.samples.front());
    EXPECT_EQ(d.credible_intervals[kB].lo, d.credible_intervals[kB].hi);
}

TEST(Bootstrap, ReproducibleAndEndpointsAreSamples) {
    const auto p = rig_with_damper();
    const auto data = damped_set(p, 3, 0.005, 2);
    const auto spec = fit::FitSpec::for_mode(fit::FitMode::damped);
    const auto a = fit::bootstrap(data, spec, 20, 7, {p.mu_k, 0.0, 1e-3}, p);
    const auto b = fit::bootstrap(data, spec, 20, 7, {p.mu_k, 0.0, 1e-3}, p);
    ASSERT_EQ(a.samples.size(), 20u);
    EXPECT_EQ(a.samples, b.samples);
    std::vector<double> col;
    for (const auto& s : a.samples) col.push_back(s[kB]);
    std::sort(col.begin(), col.end());
    // nearest rank: ceil(0.025 * 20) = 1st and ceil(0.975 * 20) = 20th
    EXPECT_EQ(a.credible_intervals[kB].lo, col.front());
    EXPECT_EQ(a.credible_intervals[kB].hi, col.back());
}

TEST(Bootstrap, FailsWhenMostResamplesFail) {
    const PendulumParams p;
    Trajectory bad;
    bad.angles = {1.0, std::nan(""), 1.0};
    std::vector<Trajectory> data(3, bad);
    EXPECT_THROW(fit::bootstrap(data, fit::FitSpec{}, 4, 0, {1e-3, 0.0, 0.0}, p), BootstrapFailed);
}

TEST(Summary, NearestRankQuantiles) {
    std::vector<ParamVector> s;
    for (int i = 1; i <= 40; ++i) s.push_back({static_cast<double>(i), 0.0, 0.0});
    const auto d = fit::summarize(s);
    EXPECT_EQ(d.credible_intervals[0].lo, 1.0);   // ceil(1.0) = 1
    EXPECT_EQ(d.credible_intervals[0].hi, 39.0);  // ceil(39.0) = 39
    EXPECT_DOUBLE_EQ(d.point_estimate[0], 20.5);
}

TEST(Band, SingleSampleCollapses) {
    const PendulumParams p;
    const std::vector<ParamVector> one{fit::params_of(p)};
    const auto band = fit::monte_carlo_band(one, p, pendulum::undamped_release, 1.0);
    const auto tr = pendulum::simulate(p, pendulum::undamped_release, 0.0, 1.0);
    ASSERT_EQ(band.mean.size(), tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        EXPECT_EQ(band.mean[i], tr.angles[i]);
        EXPECT_EQ(band.lo[i], tr.angles[i]);
        EXPECT_EQ(band.hi[i], tr.angles[i]);
    }
}

TEST(Band, MeanInsideSampleEnvelope) {
    const PendulumParams p;
    fit::UniformDamping u;
    u.n = 30;
    const auto samples = fit::draw(u, p);
    const auto band = fit::monte_carlo_band(samples, p, pendulum::damped_release, 1.5);
    for (std::size_t i = 0; i < band.mean.size(); ++i) {
        double lo = 1e300, hi = -1e300;
        for (const auto& tr : band.trajectories) {
            lo = std::min(lo, tr.angles[i]);
            hi = std::max(hi, tr.angles[i]);
        }
        EXPECT_GE(band.mean[i], lo - 1e-12);
        EXPECT_LE(band.mean[i], hi + 1e-12);
        EXPECT_LE(band.lo[i], band.hi[i]);
    }
}

TEST(Band, HumanDampingIsOverdamped) {
    const PendulumParams p;
    fit::UniformDamping u;
    u.n = 40;
    u.seed = 3;
    const auto samples = fit::draw(u, p);
    for (const auto& s : samples) {
        EXPECT_GE(s[kB], u.lo);
        EXPECT_LE(s[kB], u.hi);
    }
    const auto band = fit::monte_carlo_band(samples, p, pendulum::damped_release, 3.0);
    EXPECT_EQ(band.excluded, 0);
    for (const auto& tr : band.trajectories) EXPECT_EQ(pendulum::metrics(tr).crossings, 0);
}

TEST(Band, RigDamperSamplesOscillateOnce) {
    const PendulumParams p;
    std::vector<ParamVector> samples;
    // Spread over the rig's reported credible interval [0.671, 0.920]e-3.
    for (int i = 0; i <= 10; ++i) samples.push_back({p.mu_k, 0.0, 0.671e-3 + 0.0249e-3 * i});
    const auto band = fit::monte_carlo_band(samples, p, pendulum::damped_release, 3.0);
    for (const auto& tr : band.trajectories) EXPECT_EQ(pendulum::metrics(tr).n_oscillations, 1);
}

TEST(Band, EmptySampleRejected) {
    EXPECT_THROW(fit::monte_carlo_band(std::span<const ParamVector>{}, PendulumParams{}, 1.0, 1.0), InsufficientData);
}
