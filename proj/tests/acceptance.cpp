// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria, so ctest reports the suite as failed if any is.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "viscojoint/viscojoint.hpp"

using namespace vj;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

Outcome damper_viscosity_range() {
    const damper::DamperGeometry g;
    const double lo = units::pas_to_centipoise(damper::required_viscosity(g, 8.1e-3));
    const double hi = units::pas_to_centipoise(damper::required_viscosity(g, 14.2e-3));
    const bool ok = std::abs(lo / 135000.0 - 1) <= 0.10 && std::abs(hi / 236000.0 - 1) <= 0.10;
    return {ok, fmt("viscosity [%.0f, %.0f] cP vs [135000, 236000] +/-10%%", lo, hi)};
}

Outcome g_factor_oracle() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> w(0.3e-3, 1.5e-3), d(0.1e-3, 1.0e-3), len(0.0, 15e-3), inner(1e-3, 6e-3);
    std::uniform_int_distribution<int> fins(1, 8);
    int geometries = 0, fin_checks = 0;
    double worst = 0.0;
    while (geometries < 120) {
        damper::DamperGeometry g;
        g.n_fins = fins(rng);
        g.wall_width = w(rng);
        g.channel_width = d(rng);
        g.fin_length = len(rng);
        g.inner_radius = std::max(inner(rng), 0.6 * g.wall_width);
        g.outer_radius_bound = 1.0;
        if (damper::geometry_defect(g)) continue;
        for (int i = 0; i < g.n_fins; ++i) {
            const oracle::Fin f{damper::fin_radius(g, i), g.wall_width, g.channel_width, g.fin_length, i > 0,
                                i < g.n_fins - 1};
            worst = std::max(worst, std::abs(damper::fin_g_factor(g, i) / oracle::fin_g(f) - 1.0));
            ++fin_checks;
        }
        ++geometries;
    }
    return {worst <= 1e-6, fmt("%d geometries, %d fins, worst relative error %.2e (<= 1e-6)", geometries, fin_checks,
                               worst)};
}

Outcome undamped_character() {
    const pendulum::PendulumParams p;
    const auto m = pendulum::metrics(pendulum::simulate(p, pendulum::undamped_release, 0.0, 8.0));
    const bool ok = within(m.n_oscillations, 7, 9) && within(m.settle_time, 4.4, 5.4);
    return {ok, fmt("release %.0f deg: %d oscillations in [7, 9], settle %.3f s in [4.4, 5.4]",
                    units::rad_to_deg(pendulum::undamped_release), m.n_oscillations, m.settle_time)};
}

Outcome damped_character() {
    pendulum::PendulumParams p;
    p.damping_b = pendulum::rig_damping;
    const auto m = pendulum::metrics(pendulum::simulate(p, pendulum::damped_release, 0.0, 3.0));
    const bool ok = m.n_oscillations == 1 && within(m.settle_time, 0.40, 0.56);
    return {ok, fmt("release %.0f deg: %d oscillation (== 1), settle %.3f s in [0.40, 0.56]",
                    units::rad_to_deg(pendulum::damped_release), m.n_oscillations, m.settle_time)};
}

Outcome human_overdamped() {
    const pendulum::PendulumParams p;
    fit::UniformDamping u;
    u.n = 100;
    u.seed = 1;
    const auto samples = fit::draw(u, p);
    int worst = 0, n = 0;
    for (double release : {pendulum::damped_release, pendulum::undamped_release}) {
        const auto band = fit::monte_carlo_band(samples, p, release, 3.0);
        for (const auto& tr : band.trajectories) {
            worst = std::max(worst, pendulum::metrics(tr).crossings);
            ++n;
        }
        if (band.excluded) return {false, "band samples diverged"};
    }
    return {worst == 0, fmt("%d trajectories from both releases, max crossings %d (== 0)", n, worst)};
}

Outcome fit_round_trip() {
    const pendulum::PendulumParams truth;
    constexpr auto kMuK = static_cast<std::size_t>(fit::Param::mu_k);
    constexpr auto kB = static_cast<std::size_t>(fit::Param::damping_b);

    std::vector<pendulum::Trajectory> undamped;
    for (int k = 0; k < 6; ++k) {
        undamped.push_back(pendulum::simulate(truth, pendulum::undamped_release + 0.1 * k, 0.0, 0.75));
    }
    const auto r = fit::fit(undamped, fit::FitSpec{}, {4e-3, 1e-4, 0.0}, truth);
    const double mu_err = std::abs(r.params[kMuK] / truth.mu_k - 1.0);

    auto damped = truth;
    damped.damping_b = pendulum::rig_damping;
    const auto spec = fit::FitSpec::for_mode(fit::FitMode::damped);
    const fit::ParamVector start{truth.mu_k, 0.0, 1e-3};
    constexpr int reps = 50;
    int covered = 0;
    double worst_b = 0.0;
    constexpr int drops = 12;
    for (int rep = 0; rep < reps; ++rep) {
        auto rng = stats::split_stream(1234, static_cast<std::uint64_t>(rep));
        std::normal_distribution<double> noise(0.0, 0.005);
        std::vector<pendulum::Trajectory> data;
        for (int k = 0; k < drops; ++k) {
            const double release = pendulum::damped_release - 0.3 * k / drops;
            auto tr = pendulum::simulate(damped, release, 0.0, 0.5);
            tr.omegas.clear();
            for (auto& a : tr.angles) a += noise(rng);
            data.push_back(std::move(tr));
        }
        const auto point = fit::fit(data, spec, start, truth);
        worst_b = std::max(worst_b, std::abs(point.params[kB] / damped.damping_b - 1.0));
        const auto dist = fit::bootstrap(data, spec, 20, static_cast<std::uint64_t>(rep), start, truth);
        const auto ci = dist.credible_intervals[kB];
        if (ci.lo <= damped.damping_b && damped.damping_b <= ci.hi) ++covered;
    }
    const bool ok = mu_err <= 0.02 && worst_b <= 0.10 && covered * 10 >= reps * 9;
    return {ok, fmt("mu_k error %.3f%% (<= 2%%), worst b error %.2f%% (<= 10%%), CI coverage %d/%d (>= 90%%)",
                    100 * mu_err, 100 * worst_b, covered, reps)};
}

Outcome flexion_ordering() {
    const auto sweep = finger::default_sweep();
    const double elastic =
        finger::mean_off_diagonal(finger::correlation_matrix(finger::quasi_static_sweep(finger::FingerChain{}, {}, sweep)));
    const double loose = finger::mean_off_diagonal(
        finger::correlation_matrix(finger::quasi_static_sweep(finger::FingerChain::without_elastic(), {}, sweep)));
    const bool ok = elastic >= 0.90 && loose <= 0.50 && elastic > loose;
    return {ok, fmt("mean correlation elastic %.4f (>= 0.90), without %.4f (<= 0.50)", elastic, loose)};
}

Outcome closing_time() {
    const double target = units::deg_to_rad(60.0);
    const double t = finger::dynamic_close(finger::human_like_chain(), {}, 0.4, {target, target, target});
    return {within(t, 0.1, 0.45), fmt("0.4 N*m to 60 deg: %.3f s in [0.10, 0.45]", t)};
}

Outcome catch_campaign() {
    auto c = catching::default_config();
    c.motor_max_speed = catching::generous_motor_speed;
    auto nominal = c;
    nominal.sensor_noise = 0.0;
    nominal.sensor_latency = 0.0;
    const int clean = catching::run_campaign(nominal, 22, 7).caught;

    auto noisy = c;
    noisy.sensor_noise = 5e-3;
    noisy.sensor_latency = 1.0 / noisy.sensor_rate;
    const double rate = catching::run_campaign(noisy, 22, 7).rate;

    bool monotone = true;
    std::string ladder;
    int prev = 23;
    for (double lat : {0.0, 0.005, 0.01, 0.015, 0.02, 0.03, 0.04}) {
        noisy.sensor_latency = lat;
        const int caught = catching::run_campaign(noisy, 22, 7).caught;
        monotone = monotone && caught <= prev;
        prev = caught;
        ladder += (ladder.empty() ? "" : " ") + std::to_string(caught);
    }
    const bool ok = clean == 22 && within(rate, 0.30, 1.00) && monotone;
    return {ok, fmt("noiseless %d/22, sigma 5 mm + one-period latency %.0f%% in [30, 100], latency ladder [%s] %s",
                    clean, 100 * rate, ladder.c_str(), monotone ? "non-increasing" : "NOT monotone")};
}

Outcome controller_boundaries() {
    const auto c = catching::default_config();
    const double eps = 1e-9;
    const double slope = (c.d_s - c.d_c) / (c.y_t - c.y_c);
    bool ok = catching::controller_target(c.y_t + eps, c) == c.d_s &&
              catching::controller_target(2 * c.y_t, c) == c.d_s &&
              catching::controller_target(c.y_c - eps, c) == c.d_u &&
              catching::controller_target(0.0, c) == c.d_u &&
              std::abs(catching::controller_target(c.y_t - eps, c) - (c.d_s - slope * eps)) <= 1e-12 &&
              std::abs(catching::controller_target(c.y_c + eps, c) - (c.d_c + slope * eps)) <= 1e-12 &&
              std::abs(catching::controller_target(c.y_c, c) - c.d_c) <= 1e-12 &&
              std::abs(catching::controller_target(c.y_t, c) - c.d_s) <= 1e-12;
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double y = c.y_c + (c.y_t - c.y_c) * i / 1000.0;
        worst = std::max(worst, std::abs(catching::controller_target(y, c) - (c.d_c + slope * (y - c.y_c))));
    }
    const double mid = catching::controller_target(0.5 * (c.y_t + c.y_c), c);
    ok = ok && worst <= 1e-12 && std::abs(mid - 0.5 * (c.d_s + c.d_c)) <= 1e-12;
    return {ok, fmt("boundaries at y_t, y_c +/- 1e-9 exact; linear segment worst deviation %.1e (<= 1e-12)", worst)};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "damper viscosity range", 1.0, damper_viscosity_range},
        {2, "G-factor oracle equivalence", 10.0, g_factor_oracle},
        {3, "undamped pendulum character", 5.0, undamped_character},
        {4, "damped pendulum character", 5.0, damped_character},
        {5, "human damping overdamps", 30.0, human_overdamped},
        {6, "fit round trip and CI coverage", 600.0, fit_round_trip},
        {7, "concurrent flexion ordering", 5.0, flexion_ordering},
        {8, "closing time", 5.0, closing_time},
        {9, "catch determinism and plausibility", 10.0, catch_campaign},
        {10, "controller boundaries", 1.0, controller_boundaries},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = Clock::now();
        Outcome o{false, ""};
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = seconds_since(t0);
        const bool pass = o.pass && secs < c.budget;
        failed += !pass;
        std::printf("criterion %2d %s: %s; %s; %.2f s (< %.0f s)\n", c.id, pass ? "PASS" : "FAIL", c.name,
                    o.detail.c_str(), secs, c.budget);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed;
}
