#pragma once

/**
 * @file finger.hpp
 * @brief Tendon-driven three-joint finger: quasi-static motor sweep,
 *        planar fingertip kinematics, flexion correlation and a simplified
 *        closing-time integration.
 *
 * Joint 0 is proximal, joint 2 distal. Flexion angles are relative to the
 * previous link; zero is the straight (open) finger.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "viscojoint/error.hpp"
#include "viscojoint/stats.hpp"
#include "viscojoint/units.hpp"

namespace vj::finger {

inline constexpr int kJoints = 3;
using JointArray = std::array<double, kJoints>;

struct FingerChain {
    JointArray link_lengths{0.045, 0.045, 0.030};   ///< m, assumed
    JointArray joint_stiffness{0.066, 0.066, 0.066};  ///< N·m/rad, parallel elastic element
    JointArray joint_damping{11e-3, 11e-3, 11e-3};  ///< N·m·s/rad
    /// Coulomb holding torque; lowest distally so the tip breaks away first.
    JointArray joint_coulomb{0.006, 0.004, 0.002};
    JointArray tendon_moment_arms{3.4e-3, 3.4e-3, 3.4e-3};  ///< m
    JointArray joint_upper_limits{units::pi / 2, units::pi / 2, units::pi / 2};  ///< rad, lower limit 0
    JointArray link_masses{0.008, 0.008, 0.005};  ///< kg
    /// Centroidal inertia of each link; slender-rod estimate from the defaults.
    JointArray link_inertias{0.008 * 0.045 * 0.045 / 12, 0.008 * 0.045 * 0.045 / 12, 0.005 * 0.030 * 0.030 / 12};
    double palm_offset = 0.02;  ///< m, palm centre to proximal joint

    static FingerChain without_elastic() {
        FingerChain c;
        c.joint_stiffness = {0.0, 0.0, 0.0};
        return c;
    }
};

struct TendonDrive {
    double series_stiffness = 9.52e3;  ///< N/m (9.52 N/mm)
    double pulley_radius = 2.5e-3;     ///< m
    double motor_angle = 0.0;          ///< rad
    double tendon_tension = 0.0;       ///< N
    /// Motor plus gearbox inertia reflected to the output shaft. Only used by
    /// dynamic_close.
    double motor_inertia = 2.0e-3;  ///< kg·m²
};

inline void validate(const FingerChain& c) {
    for (int i = 0; i < kJoints; ++i) {
        if (!(c.link_lengths[i] > 0)) throw Error("link lengths must be positive");
        if (!(c.tendon_moment_arms[i] > 0)) throw Error("tendon moment arms must be positive");
        if (!(c.joint_stiffness[i] >= 0) || !(c.joint_damping[i] >= 0) || !(c.joint_coulomb[i] >= 0)) {
            throw Error("joint stiffness, damping and Coulomb torque must be non-negative");
        }
        if (!(c.joint_upper_limits[i] > 0) || c.joint_upper_limits[i] > units::pi) {
            throw Error("joint limits must lie in (0, pi]");
        }
        if (!(c.link_masses[i] >= 0) || !(c.link_inertias[i] >= 0)) throw Error("link inertia must be non-negative");
    }
    if (!(c.palm_offset >= 0)) throw Error("palm offset must be non-negative");
}

inline void validate(const TendonDrive& d) {
    if (!(d.series_stiffness > 0)) throw Error("series stiffness must be positive");
    if (!(d.pulley_radius > 0)) throw Error("pulley radius must be positive");
    if (!(d.motor_inertia > 0)) throw Error("motor inertia must be positive");
}

struct FlexionRecord {
    std::vector<double> motor_angles;  ///< rad
    std::array<std::vector<double>, kJoints> joint_angles;
    std::vector<double> fingertip_distance;  ///< m
    std::vector<double> tension;             ///< N

    std::size_t size() const { return motor_angles.size(); }
};

/// Aperture between two opposing fingers: twice the horizontal reach of one
/// finger from the palm centre.
inline double fingertip_distance(const FingerChain& c, const JointArray& q) {
    double heading = 0.0;
    double reach = c.palm_offset;
    for (int i = 0; i < kJoints; ++i) {
        if (q[i] < -1e-12 || q[i] > c.joint_upper_limits[i] + 1e-12) {
            throw Error("joint " + std::to_string(i) + " angle outside its limits");
        }
        heading += q[i];
        reach += c.link_lengths[i] * std::cos(heading);
    }
    return 2.0 * reach;
}

inline double open_aperture(const FingerChain& c) { return fingertip_distance(c, {0.0, 0.0, 0.0}); }

/// Height of the fingertip above the palm plane; positive as the finger curls.
inline double fingertip_height(const FingerChain& c, const JointArray& q) {
    double heading = 0.0;
    double height = 0.0;
    for (int i = 0; i < kJoints; ++i) {
        heading += q[i];
        height += c.link_lengths[i] * std::sin(heading);
    }
    return height;
}

namespace detail {

inline bool locks_at_threshold(const FingerChain& c, int i) { return c.joint_stiffness[i] == 0.0; }

inline double breakaway_tension(const FingerChain& c, int i) { return c.joint_coulomb[i] / c.tendon_moment_arms[i]; }

/// Joint angle carried at tension T. For a joint without a parallel spring
/// the angle jumps from 0 to its limit at the breakaway tension; `upper`
/// picks the side of the jump.
inline double joint_angle_at(const FingerChain& c, int i, double tension, bool upper) {
    if (locks_at_threshold(c, i)) {
        const double breakaway = breakaway_tension(c, i);
        if (tension > breakaway || (upper && tension == breakaway)) return c.joint_upper_limits[i];
        return 0.0;
    }
    const double torque = tension * c.tendon_moment_arms[i] - c.joint_coulomb[i];
    return std::clamp(torque / c.joint_stiffness[i], 0.0, c.joint_upper_limits[i]);
}

inline double tendon_length(const FingerChain& c, const TendonDrive& d, double tension, bool upper) {
    double s = tension / d.series_stiffness;
    for (int i = 0; i < kJoints; ++i) s += c.tendon_moment_arms[i] * joint_angle_at(c, i, tension, upper);
    return s;
}

struct Equilibrium {
    double tension = 0.0;
    JointArray q{};
};

/// Solves  x = T/k_s + sum r_i q_i(T)  for the tendon tension, where x is the
/// tendon pulled in by the motor. Both sides are monotone in T, so the root
/// is bracketed between breakaway tensions and found by bisection.
inline Equilibrium solve(const FingerChain& c, const TendonDrive& d, double motor_angle) {
    Equilibrium eq;
    const double x = d.pulley_radius * motor_angle;
    if (x <= 0) return eq;

    std::vector<std::pair<double, int>> jumps;
    for (int i = 0; i < kJoints; ++i) {
        if (locks_at_threshold(c, i)) jumps.emplace_back(breakaway_tension(c, i), -i);
    }
    // Ties break distal first.
    std::sort(jumps.begin(), jumps.end());

    double lo = 0.0;
    bool found = false;
    for (const auto& [tau, neg_index] : jumps) {
        if (tendon_length(c, d, tau, false) >= x) {
            eq.tension = tau;  // refined by bisection below on [lo, tau]
            break;
        }
        if (tendon_length(c, d, tau, true) >= x) {
            // The breakaway joint(s) at this tension absorb the remainder.
            eq.tension = tau;
            double rest = x - tau / d.series_stiffness;
            std::vector<int> at_jump;
            for (int i = 0; i < kJoints; ++i) {
                if (locks_at_threshold(c, i) && breakaway_tension(c, i) == tau) {
                    at_jump.push_back(i);
                } else {
                    eq.q[i] = joint_angle_at(c, i, tau, false);
                    rest -= c.tendon_moment_arms[i] * eq.q[i];
                }
            }
            std::sort(at_jump.rbegin(), at_jump.rend());
            for (int i : at_jump) {
                const double q = std::clamp(rest / c.tendon_moment_arms[i], 0.0, c.joint_upper_limits[i]);
                eq.q[i] = q;
                rest -= c.tendon_moment_arms[i] * q;
            }
            found = true;
            break;
        }
        lo = tau;
    }
    if (found) return eq;

    double hi = eq.tension > lo ? eq.tension : std::max(lo, 0.0) + d.series_stiffness * x;
    for (int it = 0; it < 400 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (tendon_length(c, d, mid, false) < x) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    eq.tension = 0.5 * (lo + hi);
    for (int i = 0; i < kJoints; ++i) eq.q[i] = joint_angle_at(c, i, eq.tension, false);
    if (!std::isfinite(eq.tension)) throw SolverError(motor_angle, "tendon tension is not finite");
    return eq;
}

/// Largest joint-torque imbalance of an equilibrium [N·m].
inline double torque_residual(const FingerChain& c, const TendonDrive& d, double motor_angle, const Equilibrium& eq) {
    double stretch = d.pulley_radius * motor_angle;
    for (int i = 0; i < kJoints; ++i) stretch -= c.tendon_moment_arms[i] * eq.q[i];
    const double tension_from_stretch = d.series_stiffness * std::max(0.0, stretch);
    double worst = 0.0;
    for (int i = 0; i < kJoints; ++i) {
        worst = std::max(worst, std::abs(tension_from_stretch - eq.tension) * c.tendon_moment_arms[i]);
        if (c.joint_stiffness[i] > 0 && eq.q[i] > 0 && eq.q[i] < c.joint_upper_limits[i]) {
            const double balance =
                eq.tension * c.tendon_moment_arms[i] - c.joint_stiffness[i] * eq.q[i] - c.joint_coulomb[i];
            worst = std::max(worst, std::abs(balance));
        }
    }
    return worst;
}

}  // namespace detail

/// Quasi-static equilibrium at every motor angle [rad] of a monotone sweep.
inline FlexionRecord quasi_static_sweep(const FingerChain& chain, const TendonDrive& drive,
                                        const std::vector<double>& motor_angles, double tolerance = 1e-8) {
    validate(chain);
    validate(drive);
    for (std::size_t i = 1; i < motor_angles.size(); ++i) {
        if (motor_angles[i] < motor_angles[i - 1]) throw Error("motor sweep must be monotone non-decreasing");
    }
    FlexionRecord rec;
    for (double phi : motor_angles) {
        const auto eq = detail::solve(chain, drive, phi);
        if (detail::torque_residual(chain, drive, phi, eq) > tolerance) {
            throw SolverError(phi, "quasi-static equilibrium did not converge at motor angle " +
                                       std::to_string(units::rad_to_deg(phi)) + " deg");
        }
        rec.motor_angles.push_back(phi);
        for (int i = 0; i < kJoints; ++i) rec.joint_angles[i].push_back(eq.q[i]);
        rec.fingertip_distance.push_back(fingertip_distance(chain, eq.q));
        rec.tension.push_back(eq.tension);
    }
    return rec;
}

/// 0 to 270 degrees in 10 degree steps.
inline std::vector<double> default_sweep() {
    std::vector<double> out;
    for (int deg = 0; deg <= 270; deg += 10) out.push_back(units::deg_to_rad(deg));
    return out;
}

using Matrix3 = std::array<std::array<double, kJoints>, kJoints>;

/// Pairwise Pearson correlation of the min-max normalised joint series.
inline Matrix3 correlation_matrix(const std::array<std::vector<double>, kJoints>& series) {
    std::array<std::vector<double>, kJoints> norm;
    for (int i = 0; i < kJoints; ++i) {
        const auto& s = series[i];
        if (s.size() < 3) throw InsufficientData("correlation needs at least three samples");
        if (s.size() != series[0].size()) throw InsufficientData("joint series differ in length");
        const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
        if (!(*mx > *mn)) throw DegenerateSeries(i, "joint " + std::to_string(i + 1) + " series has zero range");
        norm[i].reserve(s.size());
        for (double v : s) norm[i].push_back((v - *mn) / (*mx - *mn));
    }
    Matrix3 m{};
    for (int i = 0; i < kJoints; ++i) {
        m[i][i] = 1.0;
        for (int j = i + 1; j < kJoints; ++j) m[i][j] = m[j][i] = stats::pearson(norm[i], norm[j]);
    }
    return m;
}

inline Matrix3 correlation_matrix(const FlexionRecord& rec) { return correlation_matrix(rec.joint_angles); }

inline double mean_off_diagonal(const Matrix3& m) { return (m[0][1] + m[0][2] + m[1][2]) / 3.0; }

// ---------------------------------------------------------------------------
// Closing dynamics

namespace detail {

/// Mass matrix of the planar chain (horizontal plane, so no gravity).
/// Link j's centre sits at mid-length.
inline Matrix3 mass_matrix(const FingerChain& c, const JointArray& q) {
    std::array<double, kJoints> heading{};
    double h = 0.0;
    for (int i = 0; i < kJoints; ++i) heading[i] = (h += q[i]);

    Matrix3 m{};
    for (int link = 0; link < kJoints; ++link) {
        // Jacobian of the link centre: column k is d(position)/d(q_k).
        std::array<double, kJoints> jx{}, jy{};
        for (int k = 0; k <= link; ++k) {
            for (int s = k; s <= link; ++s) {
                const double len = s == link ? 0.5 * c.link_lengths[s] : c.link_lengths[s];
                jx[k] += -len * std::sin(heading[s]);
                jy[k] += len * std::cos(heading[s]);
            }
        }
        for (int a = 0; a <= link; ++a) {
            for (int b = 0; b <= link; ++b) {
                m[a][b] += c.link_masses[link] * (jx[a] * jx[b] + jy[a] * jy[b]) + c.link_inertias[link];
            }
        }
    }
    return m;
}

inline JointArray solve3(Matrix3 a, JointArray b) {
    for (int col = 0; col < kJoints; ++col) {
        int pivot = col;
        for (int r = col + 1; r < kJoints; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        if (a[col][col] == 0.0) throw Error("singular finger mass matrix");
        for (int r = col + 1; r < kJoints; ++r) {
            const double f = a[r][col] / a[col][col];
            for (int k = col; k < kJoints; ++k) a[r][k] -= f * a[col][k];
            b[r] -= f * b[col];
        }
    }
    JointArray x{};
    for (int r = kJoints - 1; r >= 0; --r) {
        double s = b[r];
        for (int k = r + 1; k < kJoints; ++k) s -= a[r][k] * x[k];
        x[r] = s / a[r][r];
    }
    return x;
}

/// Velocity-product torques  dM/dt qd - 1/2 d(qd' M qd)/dq, by central differences.
inline JointArray coriolis(const FingerChain& c, const JointArray& q, const JointArray& qd) {
    constexpr double eps = 1e-7;
    auto quad = [&](const JointArray& at) {
        const auto m = mass_matrix(c, at);
        double s = 0.0;
        for (int a = 0; a < kJoints; ++a) {
            for (int b = 0; b < kJoints; ++b) s += qd[a] * m[a][b] * qd[b];
        }
        return s;
    };
    JointArray qp = q, qm = q;
    for (int k = 0; k < kJoints; ++k) {
        qp[k] += eps * qd[k];
        qm[k] -= eps * qd[k];
    }
    const auto mp = mass_matrix(c, qp);
    const auto mm = mass_matrix(c, qm);
    JointArray out{};
    for (int a = 0; a < kJoints; ++a) {
        for (int b = 0; b < kJoints; ++b) out[a] += (mp[a][b] - mm[a][b]) / (2 * eps) * qd[b];
    }
    for (int k = 0; k < kJoints; ++k) {
        JointArray up = q, dn = q;
        up[k] += eps;
        dn[k] -= eps;
        out[k] -= 0.5 * (quad(up) - quad(dn)) / (2 * eps);
    }
    return out;
}

}  // namespace detail

struct CloseOptions {
    double dt = 1e-5;
    double max_time = 5.0;
};

/// Time for every joint to reach `target` when the motor applies a constant
/// `motor_torque` [N·m] from rest.
///
/// The motor inertia pulls the tendon through the series spring; each joint
/// sees tendon torque, the parallel spring and viscous damping. Joint limits
/// are hard stops. Semi-implicit Euler.
inline double dynamic_close(const FingerChain& chain, const TendonDrive& drive, double motor_torque,
                            const JointArray& target, const CloseOptions& opt = {}) {
    validate(chain);
    validate(drive);
    if (motor_torque < 0) throw Error("motor torque must be non-negative");
    for (int i = 0; i < kJoints; ++i) {
        if (target[i] < 0 || target[i] > chain.joint_upper_limits[i]) {
            throw Error("target angle of joint " + std::to_string(i) + " outside its limits");
        }
    }

    // Static equilibrium under the stalled motor: T = tau / r_p.
    const double stall_tension = motor_torque / drive.pulley_radius;
    for (int i = 0; i < kJoints; ++i) {
        const double drive_torque = stall_tension * chain.tendon_moment_arms[i];
        const double reach = chain.joint_stiffness[i] > 0
                                 ? std::min(chain.joint_upper_limits[i], drive_torque / chain.joint_stiffness[i])
                                 : (drive_torque > 0 ? chain.joint_upper_limits[i] : 0.0);
        if (reach < target[i] || (reach == target[i] && target[i] > 0 && drive_torque == 0)) {
            throw UnreachableTarget(i, "joint " + std::to_string(i) + " equilibrium lies below its target");
        }
    }

    JointArray q{}, qd{};
    double phi = 0.0, phid = 0.0;
    const double h = opt.dt;
    for (double t = 0.0; t < opt.max_time; t += h) {
        bool reached = true;
        for (int i = 0; i < kJoints; ++i) reached = reached && q[i] >= target[i];
        if (reached) return t;

        double stretch = drive.pulley_radius * phi;
        for (int i = 0; i < kJoints; ++i) stretch -= chain.tendon_moment_arms[i] * q[i];
        const double tension = drive.series_stiffness * std::max(0.0, stretch);

        phid += h * (motor_torque - tension * drive.pulley_radius) / drive.motor_inertia;
        phi += h * phid;

        JointArray tau = detail::coriolis(chain, q, qd);
        for (int i = 0; i < kJoints; ++i) {
            tau[i] = tension * chain.tendon_moment_arms[i] - chain.joint_stiffness[i] * q[i] -
                     chain.joint_damping[i] * qd[i] - tau[i];
        }
        const JointArray qdd = detail::solve3(detail::mass_matrix(chain, q), tau);
        for (int i = 0; i < kJoints; ++i) {
            qd[i] += h * qdd[i];
            q[i] += h * qd[i];
            if (q[i] < 0) {
                q[i] = 0;
                qd[i] = std::max(0.0, qd[i]);
            } else if (q[i] > chain.joint_upper_limits[i]) {
                q[i] = chain.joint_upper_limits[i];
                qd[i] = std::min(0.0, qd[i]);
            }
        }
        if (!std::isfinite(phi) || !std::isfinite(q[0] + q[1] + q[2])) {
            throw IntegrationDiverged(t, "finger closing dynamics diverged");
        }
    }
    throw SolverError(phi, "finger did not close within " + std::to_string(opt.max_time) + " s");
}

/// Human-hand viscoelasticity used for the closing-time estimate.
inline FingerChain human_like_chain() {
    FingerChain c;
    c.joint_stiffness = {0.1, 0.1, 0.1};
    c.joint_damping = {11e-3, 11e-3, 11e-3};
    c.joint_coulomb = {0.0, 0.0, 0.0};
    return c;
}

}  // namespace vj::finger
