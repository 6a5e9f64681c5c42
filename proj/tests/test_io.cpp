#include <gtest/gtest.h>

#include <sstream>

#include "viscojoint/config.hpp"
#include "viscojoint/csv.hpp"

using namespace vj;

namespace {

template <class Write, class Read>
auto round_trip(Write write, Read read) {
    std::stringstream buf;
    write(buf);
    return read(buf);
}

std::string tracker_csv(const std::vector<std::array<double, 3>>& rows, const std::string& header = "t,x,y") {
    std::ostringstream out;
    out << "# exported positions\n" << header << '\n';
    for (const auto& r : rows) out << csv::format(r[0]) << ',' << csv::format(r[1]) << ',' << csv::format(r[2]) << '\n';
    return out.str();
}

}  // namespace

TEST(Csv, NumberFormatRoundTrips) {
    for (double v : {0.0, -1.5, 1e-300, 0.1, 2.88e-3, 123456.789}) {
        EXPECT_EQ(*csv::parse_number(csv::format(v)), v);
    }
    EXPECT_TRUE(std::isnan(*csv::parse_number("nan")));
    EXPECT_FALSE(csv::parse_number("1.0x").has_value());
    EXPECT_FALSE(csv::parse_number("").has_value());
}

TEST(Csv, TrajectoryRoundTrip) {
    const auto tr = pendulum::simulate(pendulum::PendulumParams{}, 1.0, 0.0, 1.0);
    const auto back = round_trip([&](std::ostream& o) { csv::write_trajectory(o, tr); },
                                 [](std::istream& i) { return csv::read_trajectory(i); });
    EXPECT_EQ(back.angles, tr.angles);
    EXPECT_EQ(back.omegas, tr.omegas);
    EXPECT_NEAR(back.dt, tr.dt, 1e-15);
}

TEST(Csv, JitteredTimestampsResampled) {
    std::string text = "t,theta\n";
    double t = 0.0;
    for (int i = 0; i < 50; ++i) {
        text += csv::format(t) + "," + csv::format(2.0 * t) + "\n";
        t += i % 2 ? 0.011 : 0.009;
    }
    std::istringstream in(text);
    const auto tr = csv::read_trajectory(in);
    EXPECT_NEAR(tr.dt, 0.009, 1e-12);  // median step
    for (std::size_t i = 0; i < tr.size(); ++i) EXPECT_NEAR(tr.angles[i], 2.0 * tr.time(i), 1e-12);
}

TEST(Csv, NonIncreasingTimestampNamesRow) {
    std::istringstream in("t,theta\n0,1\n0.1,1\n0.1,1\n0.3,1\n");
    try {
        csv::read_trajectory(in);
        FAIL() << "expected an ingest error";
    } catch (const IngestError& e) {
        EXPECT_EQ(e.row(), 4u);
    }
}

TEST(Csv, MissingColumnIsSchemaError) {
    std::istringstream in("time,theta\n0,1\n");
    EXPECT_THROW(csv::read_trajectory(in), SchemaError);
}

TEST(Csv, SweepFlexionTrialsBandSamplesRoundTrip) {
    const auto grid = damper::sweep_g(damper::linspace(0.2e-3, 1e-3, 4), damper::linspace(0.3e-3, 0.6e-3, 3), 5,
                                      damper::DamperGeometry{});
    const auto rows = round_trip([&](std::ostream& o) { csv::write_sweep(o, grid); },
                                 [](std::istream& i) { return csv::read_sweep(i); });
    ASSERT_EQ(rows.size(), 12u);
    EXPECT_EQ(rows[5].g, grid.g_values[1][2]);
    EXPECT_EQ(rows[0].feasibility, "print_tol");

    const auto rec = finger::quasi_static_sweep(finger::FingerChain{}, finger::TendonDrive{}, finger::default_sweep());
    const auto flex = round_trip([&](std::ostream& o) { csv::write_flexion(o, rec); },
                                 [](std::istream& i) { return csv::read_flexion(i); });
    EXPECT_EQ(flex.joint_angles, rec.joint_angles);
    EXPECT_EQ(flex.fingertip_distance, rec.fingertip_distance);
    for (std::size_t k = 0; k < rec.size(); ++k) EXPECT_NEAR(flex.motor_angles[k], rec.motor_angles[k], 1e-15);

    const auto camp = catching::run_campaign(catching::default_config(), 3, 1);
    const auto trials = round_trip([&](std::ostream& o) { csv::write_trials(o, camp.trials); },
                                   [](std::istream& i) { return csv::read_trials(i); });
    ASSERT_EQ(trials.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(trials[i].caught, camp.trials[i].caught);
        EXPECT_EQ(trials[i].failure, camp.trials[i].failure);
        EXPECT_EQ(trials[i].aperture_at_pass, camp.trials[i].aperture_at_pass);
    }

    fit::UniformDamping u;
    u.n = 5;
    const auto samples = fit::draw(u, pendulum::PendulumParams{});
    const auto band = fit::monte_carlo_band(samples, pendulum::PendulumParams{}, 2.0, 0.5);
    const auto band2 = round_trip([&](std::ostream& o) { csv::write_band(o, band); },
                                  [](std::istream& i) { return csv::read_band(i); });
    EXPECT_EQ(band2.mean, band.mean);
    EXPECT_EQ(band2.hi, band.hi);
    const auto s2 = round_trip([&](std::ostream& o) { csv::write_param_samples(o, samples); },
                               [](std::istream& i) { return csv::read_param_samples(i); });
    EXPECT_EQ(s2, samples);
}

TEST(Ingest, AxisDirections) {
    const csv::Point pivot{10.0, 5.0};
    EXPECT_DOUBLE_EQ(csv::angle_from_vertical(pivot, {10.0, 1.0}), units::pi);
    EXPECT_DOUBLE_EQ(csv::angle_from_vertical(pivot, {10.0, 9.0}), 0.0);
    EXPECT_DOUBLE_EQ(csv::angle_from_vertical(pivot, {12.0, 5.0}), units::pi / 2);
}

TEST(Ingest, CircularMotionUnwrapsLinearly) {
    const double rate = 3.0, dt = 1.0 / 240.0;
    std::vector<std::array<double, 3>> rows;
    for (int i = 0; i < 720; ++i) {
        const double t = i * dt, a = 0.2 + rate * t;
        rows.push_back({t, 1.0 + 0.3 * std::sin(a), 2.0 + 0.3 * std::cos(a)});
    }
    std::istringstream in(tracker_csv(rows));
    const auto tr = csv::ingest_tracker(in, {1.0, 2.0});
    ASSERT_EQ(tr.size(), rows.size());
    for (std::size_t i = 0; i < tr.size(); ++i) EXPECT_NEAR(tr.angles[i], 0.2 + rate * tr.time(i), 1e-9);
}

TEST(Ingest, ColumnMapAndErrors) {
    std::istringstream in(tracker_csv({{0, 0, -1}, {0.1, 0, -1}, {0.2, 0, -1}}, "time,px,py"));
    const auto tr = csv::ingest_tracker(in, {0, 0}, csv::ColumnMap::parse("t=time,x=px,y=py"));
    EXPECT_DOUBLE_EQ(tr.angles[1], units::pi);
    EXPECT_THROW(csv::ColumnMap::parse("z=foo"), UsageError);

    std::istringstream back(tracker_csv({{0, 0, -1}, {0.1, 0, -1}, {0.05, 0, -1}}));
    try {
        csv::ingest_tracker(back, {0, 0});
        FAIL() << "expected an ingest error";
    } catch (const IngestError& e) {
        EXPECT_EQ(e.row(), 5u);
    }
    std::istringstream onpivot(tracker_csv({{0, 0, -1}, {0.1, 0, 0}}));
    EXPECT_THROW(csv::ingest_tracker(onpivot, {0, 0}), IngestError);
}

TEST(Config, SaveLoadIsByteIdentical) {
    const config::ToolConfig defaults;
    const std::string text = config::save_string(defaults);
    EXPECT_EQ(config::save_string(config::load_string(text)), text);

    auto edited = config::load_string(text);
    edited.set("fluid", "viscosity_cP", 150000.1);
    edited.set("catch", "trials", 30);
    const std::string text2 = config::save_string(edited);
    EXPECT_EQ(config::save_string(config::load_string(text2)), text2);
    EXPECT_EQ(config::load_string(text2).get("fluid", "viscosity_cP"), 150000.1);
}

TEST(Config, UnitSuffixesConvertOnUse) {
    auto cfg = config::load_string("[damper]\nwall_width_mm = 0.6\n[fluid]\nviscosity_cP = 200000\n");
    EXPECT_NEAR(cfg.damper_geometry().wall_width, 0.6e-3, 1e-18);
    EXPECT_NEAR(cfg.viscosity(), 200.0, 1e-12);
}

TEST(Config, DefaultsMatchLibraryDefaults) {
    const config::ToolConfig cfg;
    const auto p = cfg.pendulum_params();
    const pendulum::PendulumParams lib;
    EXPECT_EQ(p.mu_k, lib.mu_k);
    EXPECT_NEAR(p.weight_radius, lib.weight_radius, 1e-15);
    EXPECT_NEAR(cfg.damper_geometry().fin_length, damper::DamperGeometry{}.fin_length, 1e-15);
    const auto c = cfg.catch_config(catching::default_aperture_map());
    EXPECT_EQ(c.gain, catching::CatchConfig{}.gain);
    EXPECT_NEAR(c.sensor_latency, catching::CatchConfig{}.sensor_latency, 1e-15);
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(config::load_string("[damper]\nfin_colour = 3\n"), ConfigError);
    EXPECT_THROW(config::load_string("[nozzle]\n"), ConfigError);
    EXPECT_THROW(config::load_string("wall_width_mm = 1\n"), ConfigError);
    EXPECT_THROW(config::load_string("[damper]\nwall_width_mm = wide\n"), ConfigError);
    EXPECT_THROW(config::load_string("[damper]\nn_fins = 2.5\n"), ConfigError);
    EXPECT_THROW(config::load_string("[damper]\nn_fins = 2\nn_fins = 3\n"), ConfigError);
    try {
        config::load_string("[damper]\n\nbogus = 1\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}
