#pragma once

/**
 * @file config.hpp
 * @brief Flat sectioned `key = value` configuration covering every module.
 *
 * Values are stored in the unit named by the key suffix (`_mm`, `_cP`,
 * `_deg`, `_N_per_mm`; SI otherwise) and converted when a domain struct is
 * built. Saving prints every key in a fixed order in shortest round-trip
 * form, so load followed by save reproduces a saved file byte for byte.
 */

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "viscojoint/catch.hpp"
#include "viscojoint/csv.hpp"
#include "viscojoint/damper.hpp"
#include "viscojoint/error.hpp"
#include "viscojoint/finger.hpp"
#include "viscojoint/fit.hpp"
#include "viscojoint/pendulum.hpp"
#include "viscojoint/units.hpp"

namespace vj::config {

/// Where a default value comes from.
enum class Source { measured, assumed, calibrated };

inline std::string_view to_string(Source s) {
    switch (s) {
        case Source::measured: return "measured";
        case Source::assumed: return "assumed";
        case Source::calibrated: return "calibrated";
    }
    return "?";
}

struct Entry {
    std::string section;
    std::string key;
    double value = 0.0;
    Source source = Source::assumed;
    bool integral = false;
};

namespace detail {

inline std::vector<Entry> schema() {
    using S = Source;
    const finger::FingerChain fc;
    const finger::TendonDrive fd;
    const pendulum::PendulumParams pp;
    const damper::DamperGeometry dg;
    const catching::CatchConfig cc;
    const fit::FitSpec fs;
    return {
        {"damper", "n_fins", static_cast<double>(dg.n_fins), S::measured, true},
        {"damper", "wall_width_mm", 0.5, S::measured},
        {"damper", "channel_width_mm", 0.4, S::measured},
        {"damper", "fin_length_mm", 6.875, S::calibrated},
        {"damper", "inner_radius_mm", 2.0, S::calibrated},
        {"damper", "outer_radius_bound_mm", 6.5, S::calibrated},
        {"damper", "print_tolerance_mm", 0.3, S::measured},

        {"fluid", "viscosity_cP", 185000.0, S::measured},

        {"human", "damping_lo", 8.1e-3, S::measured},
        {"human", "damping_hi", 14.2e-3, S::measured},

        {"pendulum", "joint_inertia", pp.joint_inertia, S::calibrated},
        {"pendulum", "bar_mass", pp.bar_mass, S::calibrated},
        {"pendulum", "bar_length_mm", 65.0, S::calibrated},
        {"pendulum", "bar_width_mm", 20.0, S::calibrated},
        {"pendulum", "bar_com_radius_mm", 32.5, S::calibrated},
        {"pendulum", "weight_mass", pp.weight_mass, S::measured},
        {"pendulum", "weight_radius_mm", 60.0, S::calibrated},
        {"pendulum", "joint_radius", pp.joint_radius, S::calibrated},
        {"pendulum", "mu_k", pp.mu_k, S::measured},
        {"pendulum", "mu_d", pp.mu_d, S::measured},
        {"pendulum", "damping_b", pp.damping_b, S::assumed},
        {"pendulum", "rig_damping", pendulum::rig_damping, S::measured},
        {"pendulum", "gravity", pp.gravity, S::assumed},
        {"pendulum", "undamped_release_deg", 90.0, S::calibrated},
        {"pendulum", "damped_release_deg", 140.0, S::calibrated},
        {"pendulum", "sample_rate", 240.0, S::measured},
        {"pendulum", "substeps", 100.0, S::assumed, true},
        {"pendulum", "rest_band", 0.02, S::assumed},
        {"pendulum", "hold_time", 0.5, S::assumed},

        {"fit", "penalty_weight", fs.penalty_weight, S::assumed},
        {"fit", "max_iters", static_cast<double>(fs.max_iters), S::assumed, true},
        {"fit", "restarts", static_cast<double>(fs.restarts), S::assumed, true},
        {"fit", "mu_k_max", fs.bounds[0].hi, S::assumed},
        {"fit", "mu_d_max", fs.bounds[1].hi, S::assumed},
        {"fit", "damping_b_max", fs.bounds[2].hi, S::assumed},
        {"fit", "bootstrap", 20.0, S::measured, true},
        {"fit", "band_samples", 100.0, S::assumed, true},
        {"fit", "seed", 0.0, S::assumed, true},

        {"finger", "link1_mm", 45.0, S::assumed},
        {"finger", "link2_mm", 45.0, S::assumed},
        {"finger", "link3_mm", 30.0, S::assumed},
        {"finger", "link1_mass", fc.link_masses[0], S::assumed},
        {"finger", "link2_mass", fc.link_masses[1], S::assumed},
        {"finger", "link3_mass", fc.link_masses[2], S::assumed},
        {"finger", "stiffness", fc.joint_stiffness[0], S::measured},
        {"finger", "damping", fc.joint_damping[0], S::measured},
        {"finger", "coulomb1", fc.joint_coulomb[0], S::assumed},
        {"finger", "coulomb2", fc.joint_coulomb[1], S::assumed},
        {"finger", "coulomb3", fc.joint_coulomb[2], S::assumed},
        {"finger", "moment_arm1_mm", 3.4, S::assumed},
        {"finger", "moment_arm2_mm", 3.4, S::assumed},
        {"finger", "moment_arm3_mm", 3.4, S::assumed},
        {"finger", "joint_limit_deg", 90.0, S::assumed},
        {"finger", "palm_offset_mm", 20.0, S::assumed},
        {"finger", "series_stiffness_N_per_mm", 9.52, S::measured},
        {"finger", "pulley_radius_mm", 2.5, S::measured},
        {"finger", "motor_inertia", fd.motor_inertia, S::calibrated},
        {"finger", "sweep_max_deg", 270.0, S::measured},
        {"finger", "sweep_step_deg", 10.0, S::measured},
        {"finger", "close_torque", 0.4, S::measured},
        {"finger", "close_target_deg", 60.0, S::assumed},
        {"finger", "human_stiffness", 0.1, S::assumed},

        {"catch", "y_t", cc.y_t, S::assumed},
        {"catch", "y_c", cc.y_c, S::assumed},
        {"catch", "d_c_mm", 50.0, S::assumed},
        {"catch", "gain", cc.gain, S::measured},
        {"catch", "pwm_max", cc.pwm_max, S::measured},
        {"catch", "sensor_noise_mm", 5.0, S::measured},
        {"catch", "sensor_rate", cc.sensor_rate, S::assumed},
        {"catch", "control_rate", cc.control_rate, S::assumed},
        {"catch", "motor_max_speed", cc.motor_max_speed, S::assumed},
        {"catch", "encoder_cpr", static_cast<double>(cc.encoder_cpr), S::measured, true},
        {"catch", "gear_ratio", static_cast<double>(cc.gear_ratio), S::measured, true},
        {"catch", "ball_diameter_mm", 65.0, S::assumed},
        {"catch", "ball_mass", cc.ball_mass, S::assumed},
        {"catch", "drop_height", cc.drop_height, S::assumed},
        {"catch", "sensor_latency", cc.sensor_latency, S::assumed},
        {"catch", "release_jitter", cc.release_jitter, S::assumed},
        {"catch", "arrest_window", cc.arrest_window, S::assumed},
        {"catch", "arrest_margin_mm", 1.0, S::assumed},
        {"catch", "trials", 22.0, S::measured, true},
    };
}

}  // namespace detail

class ToolConfig {
public:
    ToolConfig() : entries_(detail::schema()) {}

    const std::vector<Entry>& entries() const { return entries_; }

    bool has(std::string_view section, std::string_view key) const { return find(section, key) != nullptr; }

    double get(std::string_view section, std::string_view key) const {
        if (const Entry* e = find(section, key)) return e->value;
        throw ConfigError("unknown key " + std::string(section) + "." + std::string(key));
    }

    int get_int(std::string_view section, std::string_view key) const {
        return static_cast<int>(std::llround(get(section, key)));
    }

    void set(std::string_view section, std::string_view key, double value) {
        Entry* e = find(section, key);
        if (!e) throw ConfigError("unknown key " + std::string(section) + "." + std::string(key));
        if (!std::isfinite(value)) throw ConfigError(e->section + "." + e->key + " must be finite");
        if (e->integral && value != std::floor(value)) {
            throw ConfigError(e->section + "." + e->key + " must be an integer");
        }
        e->value = value;
    }

    // -- domain views -------------------------------------------------------

    damper::DamperGeometry damper_geometry() const {
        damper::DamperGeometry g;
        g.n_fins = get_int("damper", "n_fins");
        g.wall_width = units::mm_to_m(get("damper", "wall_width_mm"));
        g.channel_width = units::mm_to_m(get("damper", "channel_width_mm"));
        g.fin_length = units::mm_to_m(get("damper", "fin_length_mm"));
        g.inner_radius = units::mm_to_m(get("damper", "inner_radius_mm"));
        g.outer_radius_bound = units::mm_to_m(get("damper", "outer_radius_bound_mm"));
        return g;
    }

    double viscosity() const { return units::centipoise_to_pas(get("fluid", "viscosity_cP")); }

    pendulum::PendulumParams pendulum_params() const {
        pendulum::PendulumParams p;
        p.joint_inertia = get("pendulum", "joint_inertia");
        p.bar_mass = get("pendulum", "bar_mass");
        p.bar_length = units::mm_to_m(get("pendulum", "bar_length_mm"));
        p.bar_width = units::mm_to_m(get("pendulum", "bar_width_mm"));
        p.bar_com_radius = units::mm_to_m(get("pendulum", "bar_com_radius_mm"));
        p.weight_mass = get("pendulum", "weight_mass");
        p.weight_radius = units::mm_to_m(get("pendulum", "weight_radius_mm"));
        p.joint_radius = get("pendulum", "joint_radius");
        p.mu_k = get("pendulum", "mu_k");
        p.mu_d = get("pendulum", "mu_d");
        p.damping_b = get("pendulum", "damping_b");
        p.gravity = get("pendulum", "gravity");
        return p;
    }

    pendulum::SimOptions sim_options() const {
        pendulum::SimOptions o;
        const double rate = get("pendulum", "sample_rate");
        if (!(rate > 0)) throw ConfigError("pendulum.sample_rate must be positive");
        o.dt_exp = 1.0 / rate;
        o.substeps = get_int("pendulum", "substeps");
        return o;
    }

    fit::FitSpec fit_spec(fit::FitMode mode) const {
        auto s = fit::FitSpec::for_mode(mode);
        s.penalty_weight = get("fit", "penalty_weight");
        s.max_iters = get_int("fit", "max_iters");
        s.restarts = get_int("fit", "restarts");
        s.bounds[0].hi = get("fit", "mu_k_max");
        s.bounds[1].hi = get("fit", "mu_d_max");
        s.bounds[2].hi = get("fit", "damping_b_max");
        s.seed = static_cast<std::uint64_t>(get_int("fit", "seed"));
        return s;
    }

    finger::FingerChain finger_chain(bool elastic) const {
        finger::FingerChain c;
        for (int i = 0; i < finger::kJoints; ++i) {
            const std::string n = std::to_string(i + 1);
            c.link_lengths[i] = units::mm_to_m(get("finger", "link" + n + "_mm"));
            c.link_masses[i] = get("finger", "link" + n + "_mass");
            c.link_inertias[i] = c.link_masses[i] * c.link_lengths[i] * c.link_lengths[i] / 12.0;
            c.joint_stiffness[i] = elastic ? get("finger", "stiffness") : 0.0;
            c.joint_damping[i] = get("finger", "damping");
            c.joint_coulomb[i] = get("finger", "coulomb" + n);
            c.tendon_moment_arms[i] = units::mm_to_m(get("finger", "moment_arm" + n + "_mm"));
            c.joint_upper_limits[i] = units::deg_to_rad(get("finger", "joint_limit_deg"));
        }
        c.palm_offset = units::mm_to_m(get("finger", "palm_offset_mm"));
        return c;
    }

    /// Chain used for the closing-time estimate: human-hand joint stiffness
    /// and damping, no Coulomb holding torque.
    finger::FingerChain human_chain() const {
        auto c = finger_chain(true);
        c.joint_stiffness.fill(get("finger", "human_stiffness"));
        c.joint_coulomb.fill(0.0);
        return c;
    }

    finger::TendonDrive tendon_drive() const {
        finger::TendonDrive d;
        d.series_stiffness = units::n_per_mm_to_n_per_m(get("finger", "series_stiffness_N_per_mm"));
        d.pulley_radius = units::mm_to_m(get("finger", "pulley_radius_mm"));
        d.motor_inertia = get("finger", "motor_inertia");
        return d;
    }

    std::vector<double> motor_sweep() const {
        const double max = get("finger", "sweep_max_deg");
        const double step = get("finger", "sweep_step_deg");
        if (!(step > 0) || !(max >= 0)) throw ConfigError("finger sweep needs a positive step");
        std::vector<double> out;
        const auto n = static_cast<long>(std::floor(max / step + 1e-9));
        for (long i = 0; i <= n; ++i) out.push_back(units::deg_to_rad(step * static_cast<double>(i)));
        return out;
    }

    catching::ApertureMap aperture_map() const {
        return catching::aperture_map(finger_chain(true), tendon_drive(),
                                      units::deg_to_rad(get("finger", "sweep_max_deg")));
    }

    /// d_s and d_u come from the open and fully driven finger in `map`.
    catching::CatchConfig catch_config(const catching::ApertureMap& map) const {
        catching::CatchConfig c = catching::default_config(map);
        c.y_t = get("catch", "y_t");
        c.y_c = get("catch", "y_c");
        c.d_c = units::mm_to_m(get("catch", "d_c_mm"));
        c.gain = get("catch", "gain");
        c.pwm_max = get("catch", "pwm_max");
        c.sensor_noise = units::mm_to_m(get("catch", "sensor_noise_mm"));
        c.sensor_rate = get("catch", "sensor_rate");
        c.control_rate = get("catch", "control_rate");
        c.motor_max_speed = get("catch", "motor_max_speed");
        c.encoder_cpr = get_int("catch", "encoder_cpr");
        c.gear_ratio = get_int("catch", "gear_ratio");
        c.ball_diameter = units::mm_to_m(get("catch", "ball_diameter_mm"));
        c.ball_mass = get("catch", "ball_mass");
        c.drop_height = get("catch", "drop_height");
        c.sensor_latency = get("catch", "sensor_latency");
        c.release_jitter = get("catch", "release_jitter");
        c.arrest_window = get("catch", "arrest_window");
        c.arrest_margin = units::mm_to_m(get("catch", "arrest_margin_mm"));
        return c;
    }

private:
    const Entry* find(std::string_view section, std::string_view key) const {
        for (const auto& e : entries_) {
            if (e.section == section && e.key == key) return &e;
        }
        return nullptr;
    }
    Entry* find(std::string_view section, std::string_view key) {
        return const_cast<Entry*>(static_cast<const ToolConfig*>(this)->find(section, key));
    }

    std::vector<Entry> entries_;
};

/// Parses a config file over the defaults. Unknown sections or keys, repeated
/// keys and malformed values are errors naming the line.
inline ToolConfig load(std::istream& in) {
    ToolConfig cfg;
    std::string line, section;
    std::map<std::string, std::size_t> seen;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        std::string_view s = line;
        if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = csv::trim(s);
        if (s.empty()) continue;
        const std::string where = "line " + std::to_string(n) + ": ";
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(where + "unterminated section header");
            section = std::string(csv::trim(s.substr(1, s.size() - 2)));
            bool known = false;
            for (const auto& e : cfg.entries()) known = known || e.section == section;
            if (!known) throw ConfigError(where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
        const std::string key(csv::trim(s.substr(0, eq)));
        if (section.empty()) throw ConfigError(where + "key '" + key + "' outside any section");
        if (!cfg.has(section, key)) throw ConfigError(where + "unknown key " + section + "." + key);
        const auto value = csv::parse_number(s.substr(eq + 1));
        if (!value) throw ConfigError(where + "value of " + section + "." + key + " is not a number");
        const std::string full = section + "." + key;
        if (auto [it, fresh] = seen.emplace(full, n); !fresh) {
            throw ConfigError(where + full + " repeats line " + std::to_string(it->second));
        }
        try {
            cfg.set(section, key, *value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    return cfg;
}

inline ToolConfig load_string(const std::string& text) {
    std::istringstream in(text);
    return load(in);
}

inline void save(std::ostream& out, const ToolConfig& cfg) {
    out << "# viscojoint configuration\n"
           "# Units follow the key suffix (_mm, _cP, _deg, _N_per_mm); other values are SI.\n"
           "# The trailing tag says where the default came from.\n";
    std::string section;
    for (const auto& e : cfg.entries()) {
        if (e.section != section) {
            section = e.section;
            out << "\n[" << section << "]\n";
        }
        out << e.key << " = " << csv::format(e.value) << "  # " << to_string(e.source) << '\n';
    }
}

inline std::string save_string(const ToolConfig& cfg) {
    std::ostringstream out;
    save(out, cfg);
    return out.str();
}

}  // namespace vj::config
