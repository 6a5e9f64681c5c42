#pragma once

/**
 * @file catch.hpp
 * @brief Closed-loop ball-catch simulation: a dropped ball, a slow noisy
 *        range sensor, the piecewise aperture controller and a P-controlled
 *        tendon motor.
 *
 * Heights are measured from the palm plane, positive up. The ball is
 * released from rest at t = 0.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "viscojoint/error.hpp"
#include "viscojoint/finger.hpp"
#include "viscojoint/stats.hpp"
#include "viscojoint/units.hpp"

namespace vj::catching {

/// Aperture and fingertip height as functions of the motor angle, tabulated
/// from the quasi-static finger model. Aperture is non-increasing in the motor
/// angle; it is flat only until the tendon tension overcomes joint friction.
struct ApertureMap {
    std::vector<double> motor_angles;
    std::vector<double> apertures;
    std::vector<double> tip_heights;

    double open() const { return apertures.front(); }
    double closed() const { return apertures.back(); }
    double max_angle() const { return motor_angles.back(); }

    double aperture(double phi) const { return interpolate(apertures, phi); }
    double tip_height(double phi) const { return interpolate(tip_heights, phi); }

    /// Motor angle giving aperture `d`, clamped to the tabulated range.
    double angle_for(double d) const {
        if (d >= apertures.front()) return motor_angles.front();
        if (d <= apertures.back()) return motor_angles.back();
        const auto it = std::lower_bound(apertures.begin(), apertures.end(), d, std::greater<>());
        const auto i = static_cast<std::size_t>(it - apertures.begin());
        const double a0 = apertures[i - 1], a1 = apertures[i];
        const double f = a0 > a1 ? (a0 - d) / (a0 - a1) : 0.0;
        return motor_angles[i - 1] + f * (motor_angles[i] - motor_angles[i - 1]);
    }

private:
    double interpolate(const std::vector<double>& ys, double phi) const {
        if (phi <= motor_angles.front()) return ys.front();
        if (phi >= motor_angles.back()) return ys.back();
        const auto it = std::upper_bound(motor_angles.begin(), motor_angles.end(), phi);
        const auto i = static_cast<std::size_t>(it - motor_angles.begin());
        const double f = (phi - motor_angles[i - 1]) / (motor_angles[i] - motor_angles[i - 1]);
        return ys[i - 1] + f * (ys[i] - ys[i - 1]);
    }
};

inline ApertureMap aperture_map(const finger::FingerChain& chain, const finger::TendonDrive& drive,
                                double max_motor_angle = units::deg_to_rad(270.0), int steps = 270) {
    if (!(max_motor_angle > 0) || steps < 2) throw Error("aperture map needs a positive motor range");
    std::vector<double> sweep(static_cast<std::size_t>(steps) + 1);
    for (int i = 0; i <= steps; ++i) sweep[static_cast<std::size_t>(i)] = max_motor_angle * i / steps;
    const auto rec = finger::quasi_static_sweep(chain, drive, sweep);
    ApertureMap map;
    map.motor_angles = rec.motor_angles;
    map.apertures = rec.fingertip_distance;
    for (std::size_t k = 0; k < rec.size(); ++k) {
        const finger::JointArray q{rec.joint_angles[0][k], rec.joint_angles[1][k], rec.joint_angles[2][k]};
        map.tip_heights.push_back(finger::fingertip_height(chain, q));
    }
    for (std::size_t k = 1; k < map.apertures.size(); ++k) {
        if (map.apertures[k] > map.apertures[k - 1]) throw Error("aperture grows with motor angle");
    }
    if (!(map.closed() < map.open())) throw Error("finger does not close over the motor range");
    return map;
}

/// The default finger with its parallel elastic element, swept to 270 deg.
inline const ApertureMap& default_aperture_map() {
    static const ApertureMap map = aperture_map(finger::FingerChain{}, finger::TendonDrive{});
    return map;
}

/// Output-shaft speed fast enough for the default geometry to catch. The
/// 11 rad/s default cannot track the ball between y_t and y_c.
inline constexpr double generous_motor_speed = 40.0;  // rad/s

struct CatchConfig {
    double y_t = 0.5;   ///< m, above this the hand stays open
    double y_c = 0.1;   ///< m, capture height
    double d_s = 0.28;  ///< m, open aperture
    /// Below the ball diameter, so the hand passes through the ball size while
    /// still tracking rather than waiting for the capture step.
    double d_c = 0.05;  ///< m, aperture commanded at y_c
    double d_u = 0.0098;  ///< m, closed aperture
    double gain = 20.0;     ///< PWM counts per degree of error
    double pwm_max = 255.0;
    double sensor_noise = 5e-3;  ///< m, 1 sigma
    double sensor_rate = 50.0;   ///< Hz
    double control_rate = 1000.0;  ///< Hz
    double motor_max_speed = 11.0;  ///< rad/s at the output shaft
    int encoder_cpr = 64;
    int gear_ratio = 30;
    double ball_diameter = 0.065;  ///< m
    double ball_mass = 0.057;      ///< kg
    double drop_height = 0.6;      ///< m, ball centre above the palm at release
    double sensor_latency = 0.02;  ///< s, one sensor period
    /// Release instant is uniform over this span relative to the sensor
    /// clock; the claw is not synchronised with the range sensor.
    double release_jitter = 0.02;  ///< s
    double gravity = units::standard_gravity;
    /// Success needs the aperture within d_u + arrest_margin this soon after
    /// the ball centre passes the palm plane.
    double arrest_window = 0.050;  ///< s
    double arrest_margin = 1e-3;   ///< m

    /// Encoder resolution at the output shaft [rad].
    double encoder_step() const { return 2.0 * units::pi / (encoder_cpr * gear_ratio); }
};

/// Defaults with the open and closed apertures taken from `map`.
inline CatchConfig default_config(const ApertureMap& map = default_aperture_map()) {
    CatchConfig c;
    c.d_s = map.open();
    c.d_u = map.closed();
    return c;
}

inline void validate(const CatchConfig& c) {
    if (!(c.y_t > c.y_c) || !(c.y_c > 0)) throw ConfigError("catch config needs y_t > y_c > 0");
    if (!(c.d_s > c.d_c) || !(c.d_c > c.d_u) || !(c.d_u >= 0)) {
        throw ConfigError("catch config needs d_s > d_c > d_u >= 0");
    }
    if (!(c.gain > 0) || !(c.pwm_max > 0)) throw ConfigError("gain and pwm_max must be positive");
    if (!(c.sensor_rate > 0) || !(c.control_rate > 0)) throw ConfigError("loop rates must be positive");
    if (!(c.motor_max_speed >= 0)) throw ConfigError("motor_max_speed must be non-negative");
    if (c.encoder_cpr < 1 || c.gear_ratio < 1) throw ConfigError("encoder resolution must be positive");
    if (!(c.sensor_noise >= 0) || !(c.sensor_latency >= 0) || !(c.release_jitter >= 0)) {
        throw ConfigError("noise, latency and jitter must be non-negative");
    }
    if (!(c.ball_diameter > 0) || !(c.ball_mass > 0) || !(c.drop_height > 0)) {
        throw ConfigError("ball size, mass and drop height must be positive");
    }
    if (!(c.arrest_window > 0) || !(c.arrest_margin >= 0)) throw ConfigError("invalid arrest window");
}

/// Problems that do not stop a run but make it meaningless.
inline std::vector<std::string> config_warnings(const CatchConfig& c) {
    std::vector<std::string> out;
    if (c.y_t >= c.drop_height) {
        out.push_back("y_t is at or above the drop height; the controller never sees the open phase");
    }
    if (c.d_s <= c.ball_diameter) out.push_back("open aperture does not clear the ball");
    return out;
}

/// Piecewise aperture command. Continuous at y_t and y_c.
inline double controller_target(double height, const CatchConfig& c) {
    if (height > c.y_t) return c.d_s;
    if (height < c.y_c) return c.d_u;
    return c.d_c + (c.d_s - c.d_c) * (height - c.y_c) / (c.y_t - c.y_c);
}

inline double quantize(double angle, double step) { return std::round(angle / step) * step; }

/// One control period of the P-controlled motor. The error is taken from
/// the quantised encoder reading; the motor never steps past its target.
inline double motor_step(double current, double target, const CatchConfig& c, double dt) {
    if (!(dt > 0)) throw Error("motor step needs dt > 0");
    const double error = target - quantize(current, c.encoder_step());
    const double pwm = std::min(c.gain * std::abs(units::rad_to_deg(error)), c.pwm_max);
    const double travel = c.motor_max_speed * pwm / c.pwm_max * dt;
    if (travel >= std::abs(error)) return current + error;
    return current + (error > 0 ? travel : -travel);
}

struct Event {
    double t = 0.0;
    std::string name;
    double value = 0.0;
};

struct TrialResult {
    bool caught = false;
    /// First instant the aperture is at or below the ball diameter; NaN if never.
    double close_time = std::numeric_limits<double>::quiet_NaN();
    double aperture_at_pass = 0.0;
    std::string failure;  ///< empty when caught
    std::vector<Event> event_log;
};

namespace detail {

inline TrialResult simulate_trial(const CatchConfig& c, const ApertureMap& map, std::mt19937_64& rng) {
    validate(c);
    const double dt = 1.0 / c.control_rate;
    const double sample_period = 1.0 / c.sensor_rate;
    const double radius = 0.5 * c.ball_diameter;
    const double t_pass = std::sqrt(2.0 * c.drop_height / c.gravity);
    const double t_end = t_pass + c.arrest_window;

    std::uniform_real_distribution<double> phase_dist(0.0, 1.0);
    const double phase = c.release_jitter > 0 ? c.release_jitter * phase_dist(rng) : 0.0;
    std::normal_distribution<double> noise(0.0, 1.0);

    auto ball_height = [&](double t) { return c.drop_height - 0.5 * c.gravity * t * t; };
    const auto ticks = static_cast<long>(std::ceil(t_end / dt - 1e-9));

    // Sensor samples are taken at phase + k * period and become usable
    // `sensor_latency` later. Noise is drawn per sample index so changing the
    // latency does not change the readings.
    std::vector<double> sample_times, readings;
    for (double ts = phase; ts <= t_end + 1e-12; ts += sample_period) {
        sample_times.push_back(ts);
        readings.push_back(ball_height(ts) + c.sensor_noise * noise(rng));
    }

    TrialResult r;
    r.event_log.push_back({0.0, "release", c.drop_height});

    double phi = 0.0;
    std::size_t next_sample = 0;
    bool have_reading = false;
    double sensed = 0.0;
    int regime = 0;
    bool passed = false, arrested = false, premature = false;

    for (long k = 0; k <= ticks; ++k) {
        const double t = static_cast<double>(k) * dt;
        while (next_sample < sample_times.size() &&
               sample_times[next_sample] + c.sensor_latency <= t + 1e-12) {
            sensed = readings[next_sample];
            have_reading = true;
            r.event_log.push_back({t, "sensor", sensed});
            ++next_sample;
        }
        const double target = have_reading ? controller_target(sensed, c) : c.d_s;
        const int new_regime = !have_reading || sensed > c.y_t ? 0 : (sensed >= c.y_c ? 1 : 2);
        if (new_regime != regime) {
            static const char* names[] = {"open", "tracking", "closing"};
            r.event_log.push_back({t, names[new_regime], target});
            regime = new_regime;
        }

        const double aperture = map.aperture(phi);
        const double y = ball_height(t);
        if (std::isnan(r.close_time) && aperture <= c.ball_diameter) {
            r.close_time = t;
            r.event_log.push_back({t, "aperture_below_ball", aperture});
            if (y - radius > map.tip_height(phi)) {
                premature = true;
                r.event_log.push_back({t, "premature_close", y});
            }
        }
        if (!passed && y <= 0.0) {
            passed = true;
            r.aperture_at_pass = aperture;
            r.event_log.push_back({t, "pass", aperture});
        }
        if (passed && !arrested && aperture <= c.d_u + c.arrest_margin) {
            arrested = true;
            r.event_log.push_back({t, "arrest", aperture});
        }
        if (k < ticks) {
            phi = std::clamp(motor_step(phi, map.angle_for(target), c, dt), 0.0, map.max_angle());
        }
    }
    if (!passed) {
        r.aperture_at_pass = map.aperture(phi);
        r.event_log.push_back({static_cast<double>(ticks) * dt, "pass", r.aperture_at_pass});
    }

    if (premature) {
        r.failure = "premature_close";
    } else if (r.aperture_at_pass > c.ball_diameter) {
        r.failure = "open_at_pass";
    } else if (!arrested) {
        r.failure = "not_arrested";
    }
    r.caught = r.failure.empty();
    r.event_log.push_back({static_cast<double>(ticks) * dt, r.caught ? "caught" : "missed", r.caught ? 1.0 : 0.0});
    return r;
}

}  // namespace detail

inline TrialResult run_trial(const CatchConfig& c, std::uint64_t seed,
                             const ApertureMap& map = default_aperture_map()) {
    auto rng = stats::split_stream(seed, 0);
    return detail::simulate_trial(c, map, rng);
}

struct CampaignResult {
    int caught = 0;
    double rate = 0.0;
    std::vector<TrialResult> trials;
    std::vector<std::string> warnings;
};

/// Independent trials; trial i draws from split stream i of `seed`, so trial
/// 0 reproduces run_trial(c, seed).
inline CampaignResult run_campaign(const CatchConfig& c, int n_trials, std::uint64_t seed,
                                   const ApertureMap& map = default_aperture_map()) {
    if (n_trials < 1) throw Error("campaign needs at least one trial");
    validate(c);
    CampaignResult out;
    out.warnings = config_warnings(c);
    for (int i = 0; i < n_trials; ++i) {
        auto rng = stats::split_stream(seed, static_cast<std::uint64_t>(i));
        out.trials.push_back(detail::simulate_trial(c, map, rng));
        if (out.trials.back().caught) ++out.caught;
    }
    out.rate = static_cast<double>(out.caught) / n_trials;
    return out;
}

}  // namespace vj::catching
