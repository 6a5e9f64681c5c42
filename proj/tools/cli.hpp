#pragma once

// Command-line front end. Kept out of include/ so the library itself does
// not depend on CLI11 or the JSON writer.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "viscojoint/viscojoint.hpp"

namespace vj::cli {

namespace fs = std::filesystem;

/// Output goes to the file named by --out, or to `fallback` when none is given.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw Error("cannot open '" + path + "' for writing");
            stream_ = file_.get();
        }
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_;
};

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    return in;
}

inline void apply_override(config::ToolConfig& cfg, const std::string& item) {
    const auto eq = item.find('=');
    const auto dot = item.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
        throw UsageError("--set expects section.key=value, got '" + item + "'");
    }
    const auto value = csv::parse_number(std::string_view(item).substr(eq + 1));
    if (!value) throw UsageError("--set value is not a number: '" + item + "'");
    const std::string section = item.substr(0, dot);
    const std::string key = item.substr(dot + 1, eq - dot - 1);
    if (!cfg.has(section, key)) throw UsageError("--set names an unknown key " + section + "." + key);
    cfg.set(section, key, *value);
}

inline std::vector<pendulum::Trajectory> load_directory(const std::string& dir) {
    if (!fs::is_directory(dir)) throw Error("'" + dir + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InsufficientData("no .csv trajectories in '" + dir + "'");
    std::vector<pendulum::Trajectory> out;
    for (const auto& f : files) {
        auto in = open_input(f.string());
        try {
            out.push_back(csv::read_trajectory(in));
        } catch (const IngestError& e) {
            throw IngestError(e.row(), f.filename().string() + ": " + e.what());
        }
    }
    return out;
}

inline void report_distribution(std::ostream& out, const fit::FitSpec& spec, const fit::FitResult& point,
                                const fit::ParamDistribution* dist) {
    out << "param,estimate,mean,ci_lo,ci_hi\n";
    for (fit::Param p : spec.free_params) {
        const auto i = static_cast<std::size_t>(p);
        out << fit::param_name(p) << ',' << csv::format(point.params[i]);
        if (dist) {
            out << ',' << csv::format(dist->point_estimate[i]) << ',' << csv::format(dist->credible_intervals[i].lo)
                << ',' << csv::format(dist->credible_intervals[i].hi);
        } else {
            out << ",,,";
        }
        out << '\n';
    }
}

struct Options {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out;
};

/// Runs the tool. Returns 0 on success, 1 on usage errors and 2 on data or
/// solver errors. `log` receives the resolved configuration and diagnostics.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& log) {
    CLI::App app{"viscojoint: damper design, pendulum identification, finger and catch simulation"};
    app.require_subcommand(1);
    Options opt;
    app.add_option("--config", opt.config_path, "configuration file (defaults are built in)");
    app.add_option("--set", opt.overrides, "override one value: section.key=value (repeatable)");
    app.add_option("--out", opt.out, "output file (default: standard output)");

    auto* damper_cmd = app.add_subcommand("damper", "G factor and required fluid viscosity");

    auto* sweep_cmd = app.add_subcommand("sweep", "G factor over a wall x channel grid");
    double wall_min = 0.2, wall_max = 1.0, ch_min = 0.2, ch_max = 1.0;
    int wall_steps = 9, ch_steps = 9, sweep_fins = 0;
    sweep_cmd->add_option("--wall-min-mm", wall_min);
    sweep_cmd->add_option("--wall-max-mm", wall_max);
    sweep_cmd->add_option("--wall-steps", wall_steps)->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--channel-min-mm", ch_min);
    sweep_cmd->add_option("--channel-max-mm", ch_max);
    sweep_cmd->add_option("--channel-steps", ch_steps)->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--n-fins", sweep_fins, "fin count (default: damper.n_fins)");

    auto* pend_cmd = app.add_subcommand("pendulum", "drop-test pendulum");
    pend_cmd->require_subcommand(1);
    auto* sim_cmd = pend_cmd->add_subcommand("simulate", "write a simulated trajectory CSV");
    double theta0_deg = 90.0, omega0 = 0.0, duration = 6.0;
    bool damped = false;
    sim_cmd->add_option("--theta0-deg", theta0_deg, "release angle from the upward vertical");
    sim_cmd->add_option("--omega0", omega0, "initial angular velocity [rad/s]");
    sim_cmd->add_option("--duration", duration, "seconds")->check(CLI::PositiveNumber);
    sim_cmd->add_flag("--damped", damped, "fit the damper (damping_b = pendulum.rig_damping)");

    auto* fit_cmd = app.add_subcommand("fit", "identify friction or damping from trajectory CSVs");
    std::string data_dir, mode = "undamped", samples_path;
    int n_boot = -1;
    long long seed = -1;
    fit_cmd->add_option("--data", data_dir, "directory of t,theta[,omega] CSV files")->required();
    fit_cmd->add_option("--mode", mode)->check(CLI::IsMember({"undamped", "damped"}));
    fit_cmd->add_option("--bootstrap", n_boot, "resamples (0 for a point fit; default: fit.bootstrap)");
    fit_cmd->add_option("--seed", seed);
    fit_cmd->add_option("--samples", samples_path, "per-resample parameter CSV");

    auto* band_cmd = app.add_subcommand("band", "Monte-Carlo response band");
    std::string band_from = "uniform";
    double band_theta0_deg = -1.0, band_duration = 2.0;
    band_cmd->add_option("--from", band_from, "parameter-sample CSV, or uniform[:lo,hi] for damping_b");
    band_cmd->add_option("--theta0-deg", band_theta0_deg, "release angle (default: damped release)");
    band_cmd->add_option("--duration", band_duration)->check(CLI::PositiveNumber);
    band_cmd->add_option("--seed", seed);

    auto* flex_cmd = app.add_subcommand("flexion", "quasi-static motor sweep and flexion correlation");
    std::string elastic = "on", report_path;
    std::vector<std::string> joint_data;
    flex_cmd->add_option("--elastic", elastic)->check(CLI::IsMember({"on", "off"}));
    flex_cmd->add_option("--report", report_path, "correlation report file (default: log)");
    flex_cmd->add_option("--joint-data", joint_data, "three t,theta CSVs (j1 j2 j3) to correlate instead")
        ->expected(3);

    auto* catch_cmd = app.add_subcommand("catch", "ball-catch trial campaign");
    int trials = -1;
    std::string events_path;
    catch_cmd->add_option("--trials", trials)->check(CLI::PositiveNumber);
    catch_cmd->add_option("--seed", seed);
    catch_cmd->add_option("--events", events_path, "JSON-lines event log");

    auto* ingest_cmd = app.add_subcommand("ingest", "convert tracked positions to a trajectory CSV");
    std::string input, col_map;
    double pivot_x = 0.0, pivot_y = 0.0;
    ingest_cmd->add_option("--input", input)->required();
    ingest_cmd->add_option("--pivot-x", pivot_x)->required();
    ingest_cmd->add_option("--pivot-y", pivot_y)->required();
    ingest_cmd->add_option("--col-map", col_map, "column names, e.g. t=time,x=x_px,y=y_px");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, log);
        return code == 0 ? 0 : 1;
    }

    try {
        config::ToolConfig cfg;
        if (!opt.config_path.empty()) {
            auto in = open_input(opt.config_path);
            cfg = config::load(in);
        }
        for (const auto& item : opt.overrides) apply_override(cfg, item);
        log << "# resolved configuration\n" << config::save_string(cfg) << "# end configuration\n";

        if (damper_cmd->parsed()) {
            const auto g = cfg.damper_geometry();
            const double total = damper::total_g_factor(g);
            const double lo = cfg.get("human", "damping_lo"), hi = cfg.get("human", "damping_hi");
            Sink sink(opt.out, out);
            auto& o = *sink;
            o << "n_fins = " << g.n_fins << '\n';
            for (int i = 0; i < g.n_fins; ++i) {
                o << "fin_" << i << "_g_m3 = " << csv::format(damper::fin_g_factor(g, i)) << '\n';
            }
            o << "g_m3 = " << csv::format(total) << '\n';
            o << "damping_with_fluid = " << csv::format(cfg.viscosity() * total) << '\n';
            o << "required_viscosity_lo_cP = "
              << csv::format(units::pas_to_centipoise(damper::required_viscosity(g, lo))) << '\n';
            o << "required_viscosity_hi_cP = "
              << csv::format(units::pas_to_centipoise(damper::required_viscosity(g, hi))) << '\n';
        } else if (sweep_cmd->parsed()) {
            auto templ = cfg.damper_geometry();
            const int fins = sweep_fins > 0 ? sweep_fins : templ.n_fins;
            auto walls = damper::linspace(units::mm_to_m(wall_min), units::mm_to_m(wall_max),
                                          static_cast<std::size_t>(wall_steps));
            auto chans = damper::linspace(units::mm_to_m(ch_min), units::mm_to_m(ch_max),
                                          static_cast<std::size_t>(ch_steps));
            const auto grid = damper::sweep_g(walls, chans, fins, templ,
                                              units::mm_to_m(cfg.get("damper", "print_tolerance_mm")));
            Sink sink(opt.out, out);
            csv::write_sweep(*sink, grid);
        } else if (sim_cmd->parsed()) {
            auto p = cfg.pendulum_params();
            if (damped) p.damping_b = cfg.get("pendulum", "rig_damping");
            const auto traj = pendulum::simulate(p, units::deg_to_rad(theta0_deg), omega0, duration, cfg.sim_options());
            Sink sink(opt.out, out);
            csv::write_trajectory(*sink, traj);
            if (traj.span() >= cfg.get("pendulum", "hold_time")) {
                const auto m = pendulum::metrics(traj, cfg.get("pendulum", "rest_band"), cfg.get("pendulum", "hold_time"));
                log << "oscillations = " << m.n_oscillations << "\nsettle_time = " << csv::format(m.settle_time)
                    << "\nfinal_angle = " << csv::format(m.final_angle) << '\n';
            }
        } else if (fit_cmd->parsed()) {
            const auto fmode = mode == "damped" ? fit::FitMode::damped : fit::FitMode::undamped_friction;
            auto spec = cfg.fit_spec(fmode);
            if (seed >= 0) spec.seed = static_cast<std::uint64_t>(seed);
            const auto data = load_directory(data_dir);
            const auto base = cfg.pendulum_params();
            auto params0 = fit::params_of(base);
            if (fmode == fit::FitMode::damped) {
                params0[2] = cfg.get("pendulum", "rig_damping");
            } else {
                params0[2] = 0.0;
            }
            const auto point = fit::fit(data, spec, params0, base);
            if (!point.converged) log << "warning: simplex hit max_iters before converging\n";
            const int boots = n_boot >= 0 ? n_boot : cfg.get_int("fit", "bootstrap");
            std::optional<fit::ParamDistribution> dist;
            if (boots > 0) dist = fit::bootstrap(data, spec, boots, spec.seed, params0, base);

            Sink sink(opt.out, out);
            auto& o = *sink;
            o << "# mode = " << mode << "\n# trajectories = " << data.size() << "\n# bootstrap = " << boots
              << "\n# seed = " << spec.seed << "\n# loss = " << csv::format(point.loss) << '\n';
            if (dist) o << "# failed_resamples = " << dist->failed_resamples << '\n';
            report_distribution(o, spec, point, dist ? &*dist : nullptr);

            if (dist) {
                std::string path = samples_path;
                if (path.empty() && !opt.out.empty()) path = opt.out + ".samples.csv";
                if (!path.empty()) {
                    Sink s(path, out);
                    csv::write_param_samples(*s, dist->samples);
                }
            }
        } else if (band_cmd->parsed()) {
            const auto base = cfg.pendulum_params();
            std::vector<fit::ParamVector> samples;
            if (band_from.rfind("uniform", 0) == 0) {
                fit::UniformDamping u;
                u.lo = cfg.get("human", "damping_lo");
                u.hi = cfg.get("human", "damping_hi");
                u.n = cfg.get_int("fit", "band_samples");
                u.seed = seed >= 0 ? static_cast<std::uint64_t>(seed) : static_cast<std::uint64_t>(cfg.get_int("fit", "seed"));
                if (band_from.size() > 7) {
                    if (band_from[7] != ':') throw UsageError("expected uniform:lo,hi");
                    const auto parts = csv::split(std::string_view(band_from).substr(8));
                    if (parts.size() != 2) throw UsageError("expected uniform:lo,hi");
                    const auto lo = csv::parse_number(parts[0]), hi = csv::parse_number(parts[1]);
                    if (!lo || !hi) throw UsageError("uniform bounds must be numbers");
                    u.lo = *lo;
                    u.hi = *hi;
                }
                samples = fit::draw(u, base);
            } else {
                auto in = open_input(band_from);
                samples = csv::read_param_samples(in);
            }
            const double theta0 = band_theta0_deg >= 0 ? units::deg_to_rad(band_theta0_deg)
                                                       : units::deg_to_rad(cfg.get("pendulum", "damped_release_deg"));
            const auto band = fit::monte_carlo_band(samples, base, theta0, band_duration, cfg.sim_options());
            if (band.excluded > 0) log << "warning: " << band.excluded << " band samples diverged\n";
            Sink sink(opt.out, out);
            csv::write_band(*sink, band);
        } else if (flex_cmd->parsed()) {
            std::array<std::vector<double>, finger::kJoints> series;
            if (!joint_data.empty()) {
                for (int j = 0; j < finger::kJoints; ++j) {
                    auto in = open_input(joint_data[static_cast<std::size_t>(j)]);
                    series[j] = csv::read_trajectory(in).angles;
                }
            } else {
                const auto rec = finger::quasi_static_sweep(cfg.finger_chain(elastic == "on"), cfg.tendon_drive(),
                                                            cfg.motor_sweep());
                Sink sink(opt.out, out);
                csv::write_flexion(*sink, rec);
                series = rec.joint_angles;
            }
            const auto m = finger::correlation_matrix(series);
            Sink rep(report_path, log);
            auto& r = *rep;
            r << "correlation (normalised joint angles)\n";
            for (const auto& row : m) {
                r << csv::format(row[0]) << ',' << csv::format(row[1]) << ',' << csv::format(row[2]) << '\n';
            }
            r << "mean_off_diagonal = " << csv::format(finger::mean_off_diagonal(m)) << '\n';
            if (joint_data.empty()) {
                const double target = units::deg_to_rad(cfg.get("finger", "close_target_deg"));
                const double t = finger::dynamic_close(cfg.human_chain(), cfg.tendon_drive(),
                                                       cfg.get("finger", "close_torque"), {target, target, target});
                r << "closing_time_s = " << csv::format(t) << '\n';
            }
        } else if (catch_cmd->parsed()) {
            const auto map = cfg.aperture_map();
            const auto cc = cfg.catch_config(map);
            const int n = trials > 0 ? trials : cfg.get_int("catch", "trials");
            const auto s = seed >= 0 ? static_cast<std::uint64_t>(seed) : std::uint64_t{0};
            const auto res = catching::run_campaign(cc, n, s, map);
            for (const auto& w : res.warnings) log << "warning: " << w << '\n';
            log << "d_s = " << csv::format(cc.d_s) << "\nd_u = " << csv::format(cc.d_u) << '\n';
            log << "caught = " << res.caught << " / " << n << "\nrate = " << csv::format(res.rate) << '\n';
            Sink sink(opt.out, out);
            csv::write_trials(*sink, res.trials);
            if (!events_path.empty()) {
                Sink ev(events_path, out);
                for (std::size_t i = 0; i < res.trials.size(); ++i) {
                    for (const auto& e : res.trials[i].event_log) {
                        nlohmann::ordered_json j;
                        j["trial"] = i;
                        j["t"] = e.t;
                        j["event"] = e.name;
                        j["value"] = e.value;
                        *ev << j.dump() << '\n';
                    }
                }
            }
        } else if (ingest_cmd->parsed()) {
            const auto cols = col_map.empty() ? csv::ColumnMap{} : csv::ColumnMap::parse(col_map);
            auto in = open_input(input);
            const auto traj = csv::ingest_tracker(in, {pivot_x, pivot_y}, cols);
            Sink sink(opt.out, out);
            csv::write_trajectory(*sink, traj);
        }
    } catch (const UsageError& e) {
        log << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const IngestError& e) {
        log << "error (row " << e.row() << "): " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace vj::cli
