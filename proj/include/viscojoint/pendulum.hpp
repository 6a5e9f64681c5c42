#pragma once

/**
 * @file pendulum.hpp
 * @brief Drop-test pendulum: one rotary joint, a rectangular bar and a point
 *        weight, with Coulomb + viscous running-surface friction and an
 *        optional viscous damper.
 *
 * Angle convention: theta is measured from the positive (upward) vertical
 * axis, so the hanging rest position is theta = pi.
 */

#include <cmath>
#include <cstddef>
#include <vector>

#include "viscojoint/error.hpp"
#include "viscojoint/units.hpp"

namespace vj::pendulum {

/// Defaults reproduce the drop-test rig. Masses and friction coefficients are
/// measured; lengths, the joint inertia and the friction radius are calibrated
/// (see config/default.cfg).
struct PendulumParams {
    double joint_inertia = 4.0e-6;    ///< kg·m², calibrated
    double bar_mass = 0.020;          ///< kg, calibrated
    double bar_length = 0.065;        ///< m, calibrated
    double bar_width = 0.020;         ///< m, calibrated
    double bar_com_radius = 0.0325;   ///< m, calibrated
    double weight_mass = 0.0112;      ///< kg (nut, bolt and washers)
    double weight_radius = 0.060;     ///< m, calibrated
    double joint_radius = 3.4;        ///< m, effective friction radius, calibrated
    double mu_k = 2.88e-3;            ///< Coulomb coefficient
    double mu_d = 0.0;                ///< s/m
    double damping_b = 0.0;           ///< N·m·s/rad
    double gravity = units::standard_gravity;
};

/// Release angles used with the calibrated defaults: a horizontal drop for the
/// damper-free rig and a 40 degree drop from hanging with the damper fitted.
inline constexpr double undamped_release = units::pi / 2;
inline constexpr double damped_release = units::pi - units::deg_to_rad(40.0);
/// Damping of the peanut-butter damper fitted on the rig [N·m·s/rad].
inline constexpr double rig_damping = 0.759e-3;

struct Trajectory {
    double t0 = 0.0;
    double dt = 1.0 / 240.0;
    std::vector<double> angles;
    /// Same length as `angles` when present, otherwise empty.
    std::vector<double> omegas;

    std::size_t size() const { return angles.size(); }
    double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
    double span() const { return angles.empty() ? 0.0 : dt * static_cast<double>(angles.size() - 1); }
    bool has_omega() const { return !omegas.empty(); }
};

inline void validate(const Trajectory& traj) {
    if (!(traj.dt > 0) || !std::isfinite(traj.dt)) throw InsufficientData("trajectory dt must be positive");
    if (traj.angles.size() < 2) throw InsufficientData("trajectory needs at least two samples");
    if (traj.has_omega() && traj.omegas.size() != traj.angles.size()) {
        throw InsufficientData("omega column length differs from angle column");
    }
    for (double a : traj.angles) {
        if (!std::isfinite(a)) throw InsufficientData("trajectory contains a non-finite angle");
    }
}

struct OscillationMetrics {
    int n_oscillations = 0;
    int crossings = 0;
    double settle_time = 0.0;
    double final_angle = 0.0;
    bool settled = true;
};

inline double bar_inertia(const PendulumParams& p) {
    return p.bar_mass * (p.bar_length * p.bar_length + p.bar_width * p.bar_width) / 12.0 +
           p.bar_mass * p.bar_com_radius * p.bar_com_radius;
}

inline double total_inertia(const PendulumParams& p) {
    return p.joint_inertia + bar_inertia(p) + p.weight_mass * p.weight_radius * p.weight_radius;
}

/// Sum of m_i r_i over the bar and the weight [kg·m].
inline double mass_radius_sum(const PendulumParams& p) {
    return p.bar_mass * p.bar_com_radius + p.weight_mass * p.weight_radius;
}

inline void validate(const PendulumParams& p) {
    const double fields[] = {p.joint_inertia, p.bar_mass, p.bar_length, p.bar_width,
                             p.bar_com_radius, p.weight_mass, p.weight_radius, p.joint_radius,
                             p.mu_k, p.mu_d, p.damping_b};
    for (double f : fields) {
        if (!(f >= 0) || !std::isfinite(f)) throw Error("pendulum parameters must be finite and non-negative");
    }
    if (!(p.gravity > 0)) throw Error("gravity must be positive");
    if (!(total_inertia(p) > 0)) throw Error("total inertia must be positive");
    if (!(mass_radius_sum(p) > 0)) throw Error("pendulum has no restoring torque (sum m r = 0)");
}

inline double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

/// Running-surface normal force, clamped at zero (the contact cannot pull).
inline double normal_force(double theta, double omega, const PendulumParams& p) {
    const double smr = mass_radius_sum(p);
    const double n = smr * omega * omega + smr * p.gravity * std::cos(theta - units::pi);
    return n > 0 ? n : 0.0;
}

/// Gravity torque about the joint. Positive drives theta toward increasing
/// values. sin(pi - theta) is exactly zero at the hanging position.
inline double gravity_torque(double theta, const PendulumParams& p) {
    return mass_radius_sum(p) * p.gravity * std::sin(units::pi - theta);
}

/// Friction torque magnitude-signed to oppose omega. sign(0) = 0.
/// The viscous part grows with |omega| so it stays dissipative in both directions.
inline double friction_torque(double theta, double omega, const PendulumParams& p) {
    const double n = normal_force(theta, omega, p);
    return n * p.joint_radius * sign(omega) * (p.mu_k + p.mu_d * p.joint_radius * std::abs(omega));
}

/// Angular acceleration [rad/s^2].
inline double acceleration(double theta, double omega, const PendulumParams& p) {
    return (gravity_torque(theta, p) - p.damping_b * omega - friction_torque(theta, omega, p)) /
           total_inertia(p);
}

/// Kinetic + gravitational potential energy, zero potential at the joint height.
inline double mechanical_energy(double theta, double omega, const PendulumParams& p) {
    return 0.5 * total_inertia(p) * omega * omega + mass_radius_sum(p) * p.gravity * std::cos(theta);
}

/// Small-oscillation period about the hanging position, frictionless.
inline double linearized_period(const PendulumParams& p) {
    return 2.0 * units::pi * std::sqrt(total_inertia(p) / (mass_radius_sum(p) * p.gravity));
}

struct SimOptions {
    double dt_exp = 1.0 / 240.0;  ///< sample interval of the recorded trajectory [s]
    int substeps = 100;           ///< Euler steps per sample
    double rest_velocity = 1e-4;  ///< rad/s; below this the joint may stick
};

/// Forward explicit Euler at dt_exp / substeps, recorded every dt_exp.
///
/// When the velocity is tiny (or changes sign within a step) and the gravity
/// torque cannot overcome the Coulomb torque at rest, the joint is clamped to
/// rest. Without this the sign(omega) term chatters forever.
inline Trajectory simulate(const PendulumParams& p, double theta0, double omega0, double duration,
                           const SimOptions& opt = {}) {
    validate(p);
    if (!(duration > 0)) throw Error("duration must be positive");
    if (!(opt.dt_exp > 0) || opt.substeps < 1) throw Error("invalid integrator step");
    if (!std::isfinite(theta0) || !std::isfinite(omega0)) throw Error("initial state must be finite");

    const double inertia = total_inertia(p);
    const double smr = mass_radius_sum(p);
    const double h = opt.dt_exp / opt.substeps;
    const auto n_samples = static_cast<std::size_t>(std::llround(duration / opt.dt_exp));

    Trajectory out;
    out.dt = opt.dt_exp;
    out.angles.reserve(n_samples + 1);
    out.omegas.reserve(n_samples + 1);
    out.angles.push_back(theta0);
    out.omegas.push_back(omega0);

    double theta = theta0;
    double omega = omega0;
    for (std::size_t k = 0; k < n_samples; ++k) {
        for (int s = 0; s < opt.substeps; ++s) {
            const double sin_t = std::sin(units::pi - theta);
            const double cos_t = std::cos(theta);
            double normal = smr * omega * omega - smr * p.gravity * cos_t;
            if (normal < 0) normal = 0;
            const double friction =
                normal * p.joint_radius * sign(omega) * (p.mu_k + p.mu_d * p.joint_radius * std::abs(omega));
            const double accel = (smr * p.gravity * sin_t - p.damping_b * omega - friction) / inertia;

            const double next_theta = theta + h * omega;
            double next_omega = omega + h * accel;

            if (std::abs(next_omega) < opt.rest_velocity || next_omega * omega < 0) {
                double rest_normal = -smr * p.gravity * std::cos(next_theta);
                if (rest_normal < 0) rest_normal = 0;
                const double holding = rest_normal * p.joint_radius * p.mu_k;
                if (std::abs(smr * p.gravity * std::sin(units::pi - next_theta)) <= holding) next_omega = 0.0;
            }
            theta = next_theta;
            omega = next_omega;
        }
        if (!std::isfinite(theta) || !std::isfinite(omega)) {
            throw IntegrationDiverged(out.time(k + 1), "pendulum integration diverged");
        }
        out.angles.push_back(theta);
        out.omegas.push_back(omega);
    }
    return out;
}

/// Oscillation count and settling time relative to the final sample.
///
/// A crossing is counted each time the signal leaves the rest band on the
/// side opposite to where it last left it; one oscillation is two crossings.
/// The settle time is measured from the first sample and is the start of the
/// first in-band run lasting at least `hold_time`.
inline OscillationMetrics metrics(const Trajectory& traj, double rest_band = 0.02,
                                  double hold_time = 0.5) {
    if (traj.angles.empty()) throw InsufficientData("empty trajectory");
    if (traj.span() < hold_time) throw InsufficientData("trajectory shorter than hold time");

    OscillationMetrics m;
    m.final_angle = traj.angles.back();

    int side = 0;
    for (double a : traj.angles) {
        const double d = a - m.final_angle;
        const int s = d > rest_band ? 1 : (d < -rest_band ? -1 : 0);
        if (s == 0) continue;
        if (side != 0 && s != side) ++m.crossings;
        side = s;
    }
    m.n_oscillations = m.crossings / 2;

    const std::size_t n = traj.angles.size();
    std::size_t run_start = 0;
    bool in_run = false;
    m.settled = false;
    for (std::size_t i = 0; i < n; ++i) {
        const bool inside = std::abs(traj.angles[i] - m.final_angle) < rest_band;
        if (!inside) {
            in_run = false;
            continue;
        }
        if (!in_run) {
            in_run = true;
            run_start = i;
        }
        if (traj.dt * static_cast<double>(i - run_start) >= hold_time - 1e-12) {
            m.settled = true;
            break;
        }
    }
    m.settle_time = m.settled ? traj.dt * static_cast<double>(run_start) : traj.span();
    return m;
}

}  // namespace vj::pendulum
