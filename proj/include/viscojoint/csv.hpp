#pragma once

/**
 * @file csv.hpp
 * @brief Plain CSV readers and writers for every table the toolkit emits,
 *        plus the tracker-export ingester.
 *
 * Numbers are written in shortest round-trip form with `std::to_chars`, so
 * output never depends on the locale and re-reading gives the same doubles.
 */

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "viscojoint/catch.hpp"
#include "viscojoint/damper.hpp"
#include "viscojoint/error.hpp"
#include "viscojoint/finger.hpp"
#include "viscojoint/fit.hpp"
#include "viscojoint/pendulum.hpp"
#include "viscojoint/units.hpp"

namespace vj::csv {

inline std::string format(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

/// A parsed table. `rows[i]` came from file line `line_numbers[i]` (1-based,
/// the header is line 1 when there is no preamble).
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;

    std::optional<std::size_t> column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        return std::nullopt;
    }

    std::size_t require(std::string_view name) const {
        if (auto c = column(name)) return *c;
        throw SchemaError("missing column '" + std::string(name) + "'");
    }

    double number(std::size_t row, std::size_t col) const {
        if (col >= rows[row].size()) throw IngestError(line_numbers[row], "row has too few fields");
        if (auto v = parse_number(rows[row][col])) return *v;
        throw IngestError(line_numbers[row], "not a number: '" + rows[row][col] + "'");
    }
};

/// Reads a header line followed by data rows; blank lines and lines starting
/// with '#' are skipped.
inline Table read_table(std::istream& in) {
    Table t;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto s = trim(line);
        if (s.empty() || s.front() == '#') continue;
        if (t.header.empty()) {
            t.header = split(s);
        } else {
            t.rows.push_back(split(s));
            t.line_numbers.push_back(n);
        }
    }
    if (t.header.empty()) throw SchemaError("empty CSV input");
    return t;
}

// ---------------------------------------------------------------------------
// Uniform resampling

/// Largest deviation of a step from the median step allowed before the
/// series is resampled, as a fraction of the median step.
inline constexpr double kJitterTolerance = 0.01;

struct Uniform {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<std::vector<double>> columns;
    bool resampled = false;
};

/// Puts `columns` sampled at `times` onto a uniform grid. Steps within 1% of
/// the median are taken as uniform; otherwise the columns are linearly
/// interpolated onto t0 + k * median step.
inline Uniform uniformize(const std::vector<double>& times, const std::vector<std::vector<double>>& columns,
                          const std::vector<std::size_t>& rows) {
    if (times.size() < 2) throw InsufficientData("need at least two samples");
    std::vector<double> steps;
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) {
            throw IngestError(rows[i], "timestamps must be strictly increasing");
        }
        steps.push_back(times[i] - times[i - 1]);
    }
    std::vector<double> sorted = steps;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
    const double nominal = sorted[sorted.size() / 2];

    double worst = 0.0;
    for (double s : steps) worst = std::max(worst, std::abs(s - nominal));

    Uniform u;
    u.t0 = times.front();
    if (worst <= kJitterTolerance * nominal) {
        u.dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
        u.columns = columns;
        return u;
    }
    u.dt = nominal;
    u.resampled = true;
    const auto n = static_cast<std::size_t>(std::floor((times.back() - times.front()) / nominal + 1e-9)) + 1;
    u.columns.assign(columns.size(), std::vector<double>(n));
    std::size_t j = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = u.t0 + nominal * static_cast<double>(k);
        while (j + 2 < times.size() && times[j + 1] < t) ++j;
        const double f = std::clamp((t - times[j]) / (times[j + 1] - times[j]), 0.0, 1.0);
        for (std::size_t c = 0; c < columns.size(); ++c) {
            u.columns[c][k] = columns[c][j] + f * (columns[c][j + 1] - columns[c][j]);
        }
    }
    return u;
}

// ---------------------------------------------------------------------------
// Trajectory CSV: t,theta[,omega]

inline void write_trajectory(std::ostream& out, const pendulum::Trajectory& traj) {
    out << (traj.has_omega() ? "t,theta,omega\n" : "t,theta\n");
    for (std::size_t i = 0; i < traj.size(); ++i) {
        out << format(traj.time(i)) << ',' << format(traj.angles[i]);
        if (traj.has_omega()) out << ',' << format(traj.omegas[i]);
        out << '\n';
    }
}

inline pendulum::Trajectory read_trajectory(std::istream& in) {
    const Table table = read_table(in);
    const std::size_t ct = table.require("t");
    const std::size_t ca = table.require("theta");
    const auto cw = table.column("omega");

    std::vector<double> times;
    std::vector<std::vector<double>> cols(cw ? 2 : 1);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        times.push_back(table.number(r, ct));
        cols[0].push_back(table.number(r, ca));
        if (cw) cols[1].push_back(table.number(r, *cw));
    }
    auto u = uniformize(times, cols, table.line_numbers);
    pendulum::Trajectory traj;
    traj.t0 = u.t0;
    traj.dt = u.dt;
    traj.angles = std::move(u.columns[0]);
    if (cw) traj.omegas = std::move(u.columns[1]);
    pendulum::validate(traj);
    return traj;
}

// ---------------------------------------------------------------------------
// Tracker export ingestion

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Column names of the time and position fields in a tracker export.
struct ColumnMap {
    std::string t = "t";
    std::string x = "x";
    std::string y = "y";

    /// Parses "t=time,x=xpos,y=ypos"; any subset may be given.
    static ColumnMap parse(std::string_view spec) {
        ColumnMap m;
        for (const auto& item : split(spec)) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw UsageError("col-map entries look like key=column, got '" + item + "'");
            const std::string key(trim(std::string_view(item).substr(0, eq)));
            const std::string value(trim(std::string_view(item).substr(eq + 1)));
            if (key == "t") {
                m.t = value;
            } else if (key == "x") {
                m.x = value;
            } else if (key == "y") {
                m.y = value;
            } else {
                throw UsageError("unknown col-map key '" + key + "'");
            }
        }
        return m;
    }
};

/// Angle from the upward vertical of the vector pivot -> (x, y), in [0, 2 pi).
inline double angle_from_vertical(Point pivot, Point p) {
    const double dx = (p.x - pivot.x) + 0.0;  // folds -0 into +0
    const double dy = p.y - pivot.y;
    double a = std::atan2(dx, dy);
    if (a < 0) a += 2.0 * units::pi;
    return a;
}

/// Converts tracked weight positions to a pendulum trajectory. The angle is
/// unwrapped so consecutive samples never jump by more than pi.
inline pendulum::Trajectory ingest_tracker(std::istream& in, Point pivot, const ColumnMap& cols = {}) {
    const Table table = read_table(in);
    const std::size_t ct = table.require(cols.t);
    const std::size_t cx = table.require(cols.x);
    const std::size_t cy = table.require(cols.y);
    if (table.rows.size() < 2) throw InsufficientData("tracker data needs at least two rows");

    std::vector<double> times;
    std::vector<std::vector<double>> angle(1);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const Point p{table.number(r, cx), table.number(r, cy)};
        if (p.x == pivot.x && p.y == pivot.y) throw IngestError(table.line_numbers[r], "sample coincides with the pivot");
        double a = angle_from_vertical(pivot, p);
        if (!angle[0].empty()) {
            const double prev = angle[0].back();
            a += 2.0 * units::pi * std::round((prev - a) / (2.0 * units::pi));
        }
        times.push_back(table.number(r, ct));
        angle[0].push_back(a);
    }
    auto u = uniformize(times, angle, table.line_numbers);
    pendulum::Trajectory traj;
    traj.t0 = u.t0;
    traj.dt = u.dt;
    traj.angles = std::move(u.columns[0]);
    return traj;
}

// ---------------------------------------------------------------------------
// Damper sweep CSV: wall_m,channel_m,g_m3,feasibility

inline void write_sweep(std::ostream& out, const damper::SweepGrid& grid) {
    out << "wall_m,channel_m,g_m3,feasibility\n";
    for (std::size_t i = 0; i < grid.wall_values.size(); ++i) {
        for (std::size_t j = 0; j < grid.channel_values.size(); ++j) {
            const auto& g = grid.g_values[i][j];
            out << format(grid.wall_values[i]) << ',' << format(grid.channel_values[j]) << ','
                << (g ? format(*g) : std::string()) << ',' << damper::to_string(grid.feasibility[i][j]) << '\n';
        }
    }
}

struct SweepRow {
    double wall = 0.0;
    double channel = 0.0;
    std::optional<double> g;
    std::string feasibility;
};

inline std::vector<SweepRow> read_sweep(std::istream& in) {
    const Table table = read_table(in);
    const auto cw = table.require("wall_m"), cc = table.require("channel_m");
    const auto cg = table.require("g_m3"), cf = table.require("feasibility");
    std::vector<SweepRow> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        SweepRow row{table.number(r, cw), table.number(r, cc), std::nullopt, table.rows[r].at(cf)};
        if (!table.rows[r].at(cg).empty()) row.g = table.number(r, cg);
        out.push_back(row);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Flexion CSV: motor_deg,j1,j2,j3,d_m

inline void write_flexion(std::ostream& out, const finger::FlexionRecord& rec) {
    out << "motor_deg,j1,j2,j3,d_m\n";
    for (std::size_t k = 0; k < rec.size(); ++k) {
        out << format(units::rad_to_deg(rec.motor_angles[k]));
        for (int j = 0; j < finger::kJoints; ++j) out << ',' << format(rec.joint_angles[j][k]);
        out << ',' << format(rec.fingertip_distance[k]) << '\n';
    }
}

inline finger::FlexionRecord read_flexion(std::istream& in) {
    const Table table = read_table(in);
    const auto cm = table.require("motor_deg");
    const std::size_t cj[] = {table.require("j1"), table.require("j2"), table.require("j3")};
    const auto cd = table.require("d_m");
    finger::FlexionRecord rec;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        rec.motor_angles.push_back(units::deg_to_rad(table.number(r, cm)));
        for (int j = 0; j < finger::kJoints; ++j) rec.joint_angles[j].push_back(table.number(r, cj[j]));
        rec.fingertip_distance.push_back(table.number(r, cd));
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Catch trial CSV: trial,caught,close_time,aperture_at_pass,failure

inline void write_trials(std::ostream& out, const std::vector<catching::TrialResult>& trials) {
    out << "trial,caught,close_time,aperture_at_pass,failure\n";
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const auto& t = trials[i];
        out << i << ',' << (t.caught ? 1 : 0) << ',' << format(t.close_time) << ',' << format(t.aperture_at_pass)
            << ',' << t.failure << '\n';
    }
}

inline std::vector<catching::TrialResult> read_trials(std::istream& in) {
    const Table table = read_table(in);
    const auto cc = table.require("caught"), ct = table.require("close_time");
    const auto ca = table.require("aperture_at_pass"), cf = table.require("failure");
    std::vector<catching::TrialResult> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        catching::TrialResult t;
        t.caught = table.number(r, cc) != 0.0;
        t.close_time = table.number(r, ct);
        t.aperture_at_pass = table.number(r, ca);
        t.failure = table.rows[r].size() > cf ? table.rows[r][cf] : std::string();
        out.push_back(std::move(t));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Band CSV: t,mean,lo,hi

inline void write_band(std::ostream& out, const fit::Band& band) {
    out << "t,mean,lo,hi\n";
    for (std::size_t i = 0; i < band.mean.size(); ++i) {
        out << format(band.t0 + band.dt * static_cast<double>(i)) << ',' << format(band.mean[i]) << ','
            << format(band.lo[i]) << ',' << format(band.hi[i]) << '\n';
    }
}

inline fit::Band read_band(std::istream& in) {
    const Table table = read_table(in);
    const auto ct = table.require("t"), cm = table.require("mean");
    const auto cl = table.require("lo"), ch = table.require("hi");
    fit::Band band;
    std::vector<double> t;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        t.push_back(table.number(r, ct));
        band.mean.push_back(table.number(r, cm));
        band.lo.push_back(table.number(r, cl));
        band.hi.push_back(table.number(r, ch));
    }
    if (t.size() >= 2) {
        band.t0 = t.front();
        band.dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    }
    return band;
}

// ---------------------------------------------------------------------------
// Parameter samples CSV: mu_k,mu_d,damping_b

inline void write_param_samples(std::ostream& out, const std::vector<fit::ParamVector>& samples) {
    out << "mu_k,mu_d,damping_b\n";
    for (const auto& s : samples) out << format(s[0]) << ',' << format(s[1]) << ',' << format(s[2]) << '\n';
}

inline std::vector<fit::ParamVector> read_param_samples(std::istream& in) {
    const Table table = read_table(in);
    const std::size_t cols[] = {table.require("mu_k"), table.require("mu_d"), table.require("damping_b")};
    std::vector<fit::ParamVector> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        out.push_back({table.number(r, cols[0]), table.number(r, cols[1]), table.number(r, cols[2])});
    }
    if (out.empty()) throw InsufficientData("parameter sample file has no rows");
    return out;
}

}  // namespace vj::csv
