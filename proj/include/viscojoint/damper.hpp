#pragma once

/**
 * @file damper.hpp
 * @brief Couette-flow model of the concentric-fin rotary damper.
 *
 * A damper half carries `n_fins` coaxial cylindrical fins that interdigitate
 * with the fins of the opposite half. Every fin shears fluid in three places:
 * the channel on its medial side, the channel on its lateral side, and the gap
 * between its free end and the opposite base. Each contribution is linear in
 * viscosity and angular velocity, so the damper reduces to
 *
 *     T = -mu * G * omega
 *
 * where G [m^3] depends only on geometry.
 */

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "viscojoint/error.hpp"
#include "viscojoint/units.hpp"

namespace vj::damper {

struct DamperGeometry {
    int n_fins = 5;
    double wall_width = 0.5e-3;     ///< w [m]
    double channel_width = 0.4e-3;  ///< delta [m]
    double fin_length = 6.875e-3;   ///< L [m], calibrated
    double inner_radius = 2.0e-3;   ///< midline radius of the innermost pin [m], calibrated
    double outer_radius_bound = 6.5e-3;  ///< joint bore radius [m], calibrated
};

struct FluidSpec {
    double viscosity = 185.0;  ///< Pa·s
    std::string name = "peanut butter";
};

/// Midline radius of fin `i` under uniform packing.
inline double fin_radius(const DamperGeometry& g, int i) {
    return g.inner_radius + i * (g.wall_width + g.channel_width);
}

/// Outer surface of the outermost channel. Must fit inside the joint bore.
inline double packed_outer_radius(const DamperGeometry& g) {
    return fin_radius(g, g.n_fins - 1) + 0.5 * g.wall_width + g.channel_width;
}

enum class Feasibility { feasible, below_print_tolerance, wall_intersection };

inline std::string_view to_string(Feasibility f) {
    switch (f) {
        case Feasibility::feasible: return "ok";
        case Feasibility::below_print_tolerance: return "print_tol";
        case Feasibility::wall_intersection: return "intersect";
    }
    return "?";
}

/// Returns the reason a geometry cannot be built, or nothing when it can.
inline std::optional<std::string> geometry_defect(const DamperGeometry& g) {
    if (g.n_fins < 1) return "n_fins must be >= 1";
    if (!(g.wall_width > 0) || !(g.channel_width > 0) || !(g.fin_length >= 0) ||
        !(g.inner_radius > 0) || !(g.outer_radius_bound > 0)) {
        return "damper lengths must be positive";
    }
    // The innermost pin's inner surface is its own axis side; it needs a
    // positive radius and, when it has a medial channel, room for it.
    const double innermost_surface = g.inner_radius - 0.5 * g.wall_width;
    if (innermost_surface <= 0) return "non-positive inner pin radius";
    if (packed_outer_radius(g) > g.outer_radius_bound) {
        return "fin stack intersects the joint wall";
    }
    return std::nullopt;
}

inline void require_feasible(const DamperGeometry& g) {
    if (auto why = geometry_defect(g)) throw GeometryError(*why);
}

namespace detail {

// Couette torque per unit (mu * omega) for one channel of length L between
// radii r_in < r_out:  4 pi r_in^2 r_out^2 L / (r_out^2 - r_in^2).
// r_out^2 - r_in^2 is expanded as delta * (2 r_fin +/- delta) so the form
// matches the closed expression term by term.
inline double medial_term(double rho, double w, double delta, double length) {
    const double surface = rho - 0.5 * w;
    const double neighbour = surface - delta;
    return neighbour * neighbour * surface * surface * length /
           (delta * (2.0 * surface - delta));
}

inline double lateral_term(double rho, double w, double delta, double length) {
    const double surface = rho + 0.5 * w;
    const double neighbour = surface + delta;
    return neighbour * neighbour * surface * surface * length /
           (delta * (2.0 * surface + delta));
}

inline double end_term(double rho, double w, double delta) {
    const double outer = rho + 0.5 * w;
    const double inner = rho - 0.5 * w;
    return (std::pow(outer, 4) - std::pow(inner, 4)) / (8.0 * delta);
}

}  // namespace detail

/// G factor of one fin [m^3]. The innermost pin has no medial channel and the
/// outermost fin no lateral channel.
inline double fin_g_factor(const DamperGeometry& g, int fin_index) {
    require_feasible(g);
    if (fin_index < 0 || fin_index >= g.n_fins) {
        throw GeometryError("fin index " + std::to_string(fin_index) + " out of range");
    }
    const double rho = fin_radius(g, fin_index);
    const double w = g.wall_width;
    const double d = g.channel_width;
    double sum = detail::end_term(rho, w, d);
    if (fin_index > 0) sum += detail::medial_term(rho, w, d, g.fin_length);
    if (fin_index < g.n_fins - 1) sum += detail::lateral_term(rho, w, d, g.fin_length);
    return 4.0 * units::pi * sum;
}

/// Sum over the fins of one damper half.
inline double total_g_factor(const DamperGeometry& g) {
    require_feasible(g);
    double total = 0.0;
    for (int i = 0; i < g.n_fins; ++i) total += fin_g_factor(g, i);
    return total;
}

/// Resisting torque [N·m]; opposes `omega`.
inline double damper_torque(double mu, const DamperGeometry& g, double omega) {
    if (!(mu > 0)) throw Error("viscosity must be positive");
    return -mu * total_g_factor(g) * omega;
}

/// Viscosity [Pa·s] that yields `target_damping` [N·m·s/rad].
inline double required_viscosity(const DamperGeometry& g, double target_damping) {
    if (!(target_damping > 0)) throw Error("target damping must be positive");
    return target_damping / total_g_factor(g);
}

struct SweepGrid {
    std::vector<double> wall_values;
    std::vector<double> channel_values;
    int n_fins = 0;
    /// Row-major, [wall][channel]. Empty for flagged cells.
    std::vector<std::vector<std::optional<double>>> g_values;
    std::vector<std::vector<Feasibility>> feasibility;
};

inline bool strictly_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] > v[i - 1])) return false;
    }
    return true;
}

/// Evenly spaced values from `lo` to `hi` inclusive.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return out;
}

/// Evaluates G over a wall x channel grid. Cells below the print tolerance
/// or whose fin stack overruns the bore are flagged rather than thrown.
inline SweepGrid sweep_g(const std::vector<double>& wall_values,
                         const std::vector<double>& channel_values, int n_fins,
                         const DamperGeometry& geometry_template,
                         double print_tolerance = 0.3e-3) {
    if (wall_values.empty() || channel_values.empty()) {
        throw Error("sweep ranges must be non-empty");
    }
    if (!strictly_increasing(wall_values) || !strictly_increasing(channel_values)) {
        throw Error("sweep ranges must be strictly increasing");
    }
    SweepGrid grid;
    grid.wall_values = wall_values;
    grid.channel_values = channel_values;
    grid.n_fins = n_fins;
    grid.g_values.assign(wall_values.size(),
                         std::vector<std::optional<double>>(channel_values.size()));
    grid.feasibility.assign(wall_values.size(),
                            std::vector<Feasibility>(channel_values.size()));

    for (std::size_t i = 0; i < wall_values.size(); ++i) {
        for (std::size_t j = 0; j < channel_values.size(); ++j) {
            DamperGeometry g = geometry_template;
            g.n_fins = n_fins;
            g.wall_width = wall_values[i];
            g.channel_width = channel_values[j];
            if (g.wall_width < print_tolerance || g.channel_width < print_tolerance) {
                grid.feasibility[i][j] = Feasibility::below_print_tolerance;
            } else if (geometry_defect(g)) {
                grid.feasibility[i][j] = Feasibility::wall_intersection;
            } else {
                grid.feasibility[i][j] = Feasibility::feasible;
                grid.g_values[i][j] = total_g_factor(g);
            }
        }
    }
    return grid;
}

}  // namespace vj::damper
