#pragma once

#include <numbers>

// All internal quantities are SI. These helpers exist only for the I/O edges.
namespace vj::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double standard_gravity = 9.81;

/// 1000 cP = 1 Pa·s
constexpr double centipoise_to_pas(double cp) { return cp * 1e-3; }
constexpr double pas_to_centipoise(double pas) { return pas * 1e3; }

constexpr double mm_to_m(double mm) { return mm * 1e-3; }
constexpr double m_to_mm(double m) { return m * 1e3; }

constexpr double deg_to_rad(double deg) { return deg * pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / pi; }

/// N/mm -> N/m
constexpr double n_per_mm_to_n_per_m(double k) { return k * 1e3; }

}  // namespace vj::units
