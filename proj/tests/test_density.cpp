#include "curvedim/density.hpp"
#include "curvedim/error.hpp"
#include "curvedim/identification.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace curvedim;

namespace {

constexpr double kMinute = 60.0;

double hm(int h, int m) { return h * 3600.0 + m * kMinute; }

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Io;
}

std::string message_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    FAIL("expected an error");
    return {};
}

std::vector<double> sample_standardized(std::size_t m) {
    const Matrix g = oracle::gaussian_matrix(static_cast<Eigen::Index>(m), 1, 17);
    std::vector<double> r(m);
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean += r[i] = g(static_cast<Eigen::Index>(i), 0);
    mean /= static_cast<double>(m);
    double ss = 0.0;
    for (double& v : r) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(m - 1));
    for (double& v : r) v = (v - mean) / sd;
    return r;
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("curvedim_density_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("config validation") {
    DensityConfig cfg;
    CHECK(returns_per_day(cfg) == 78);
    cfg.interval_minutes = 7.0;
    CHECK(kind_of([&] { validate(cfg); }) == ErrorKind::InvalidArgument);
    cfg = {};
    cfg.support_lo = cfg.support_hi;
    CHECK(kind_of([&] { validate(cfg); }) == ErrorKind::InvalidArgument);
    cfg = {};
    cfg.bandwidth_multiplier = 0.0;
    CHECK(kind_of([&] { validate(cfg); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("previous-tick sampling") {
    DensityConfig cfg;
    TickDay day{"d1", {{hm(9, 31), 100.0}, {hm(9, 34), 101.0}, {hm(9, 37), 102.0}}};
    const auto prices = previous_tick_prices(day, cfg);
    REQUIRE(prices.size() == 79);
    CHECK(prices[1] == 101.0);
    CHECK(prices[0] == 100.0);
    CHECK(prices[2] == 102.0);
    CHECK(prices[78] == 102.0);

    const TickDay lone{"d2", {{hm(9, 0), 50.0}}};
    for (double p : previous_tick_prices(lone, cfg)) CHECK(p == 50.0);

    TickDay dense{"d3", {}};
    for (int l = 0; l <= 78; ++l) dense.ticks.push_back({cfg.session_open + 300.0 * l, 100.0 + l});
    const auto dp = previous_tick_prices(dense, cfg);
    for (int l = 0; l <= 78; ++l) CHECK(dp[static_cast<std::size_t>(l)] == 100.0 + l);

    // equal timestamps: the later tick wins
    TickDay tie{"d4", {{hm(9, 30), 10.0}, {hm(9, 35), 11.0}, {hm(9, 35), 12.0}}};
    CHECK(previous_tick_prices(tie, cfg)[1] == 12.0);
}

TEST_CASE("previous-tick errors") {
    DensityConfig cfg;
    const TickDay late{"2006-01-05", {{hm(9, 36), 100.0}}};
    CHECK(kind_of([&] { previous_tick_prices(late, cfg); }) == ErrorKind::MissingOpening);
    CHECK(message_of([&] { previous_tick_prices(late, cfg); }).find("2006-01-05") != std::string::npos);
    const TickDay empty{"e", {}};
    CHECK(kind_of([&] { previous_tick_prices(empty, cfg); }) == ErrorKind::MissingOpening);
    const TickDay negative{"n", {{hm(9, 30), -1.0}}};
    CHECK(kind_of([&] { previous_tick_prices(negative, cfg); }) == ErrorKind::Domain);
    const TickDay unordered{"u", {{hm(9, 40), 1.0}, {hm(9, 30), 1.0}}};
    CHECK(kind_of([&] { previous_tick_prices(unordered, cfg); }) == ErrorKind::Validation);
}

TEST_CASE("previous-tick sampling is unchanged by refinement") {
    DensityConfig cfg;
    SyntheticTickSpec spec;
    spec.days = 3;
    spec.seed = 5;
    for (const auto& day : synthetic_tick_days(spec, cfg)) {
        // repeat each tick's price a few seconds later whenever no original tick lies in between
        TickDay refined{day.day_id, {}};
        for (std::size_t i = 0; i < day.ticks.size(); ++i) {
            refined.ticks.push_back(day.ticks[i]);
            const double next = i + 1 < day.ticks.size() ? day.ticks[i + 1].time : cfg.session_close + 1.0;
            const double t = day.ticks[i].time + 0.5 * (next - day.ticks[i].time);
            refined.ticks.push_back({t, day.ticks[i].price});
        }
        refined.ticks.push_back({cfg.session_close + 60.0, 1.0});
        CHECK(previous_tick_prices(refined, cfg) == previous_tick_prices(day, cfg));
    }
}

TEST_CASE("log returns") {
    CHECK(log_returns({5.0, 5.0, 5.0}) == std::vector<double>{0.0, 0.0});
    const auto r = log_returns({100.0, 101.0});
    REQUIRE(r.size() == 1);
    CHECK(r[0] == doctest::Approx(0.00995033).epsilon(1e-6));
    const auto t = log_returns({100.0, 101.0, 100.0});
    CHECK(std::abs(t[0] + t[1]) < 1e-15);
    CHECK(kind_of([] { log_returns({1.0, 0.0}); }) == ErrorKind::Domain);
    CHECK(kind_of([] { log_returns({1.0}); }) == ErrorKind::InsufficientSample);
}

TEST_CASE("Silverman bandwidth") {
    const auto z = sample_standardized(78);
    const double h = silverman_bandwidth(z, 1.0);
    CHECK(std::abs(h - 0.4435) < 1e-3);
    CHECK(h == doctest::Approx(1.06 * std::pow(78.0, -0.2)).epsilon(1e-12));
    CHECK(silverman_bandwidth(z, 2.0) == 2.0 * h);
    std::vector<double> scaled = z;
    for (double& v : scaled) v *= 3.5;
    CHECK(silverman_bandwidth(scaled, 1.0) == doctest::Approx(3.5 * h).epsilon(1e-12));
    CHECK(kind_of([] { silverman_bandwidth(std::vector<double>(10, 0.3), 1.0); }) == ErrorKind::DegenerateDay);
    CHECK(kind_of([&] { silverman_bandwidth(z, -1.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("kernel density curves") {
    const double h = 0.3;
    const Grid g = Grid::uniform(-3.0, 3.0, 601);
    const Curve one = kde_curve({0.0}, h, g);
    for (Eigen::Index i = 0; i < one.values.size(); ++i) {
        const double u = g.points()[i];
        const double phi = std::exp(-0.5 * u * u / (h * h)) / (h * std::sqrt(2.0 * std::numbers::pi));
        CHECK(one.values[i] == doctest::Approx(phi).epsilon(1e-12));
    }

    const std::vector<double> data{-0.4, 0.1, 0.25, 0.9, 1.3};
    const double bw = 0.2;
    const Grid wide = Grid::uniform(-0.4 - 8 * bw, 1.3 + 8 * bw, 2001);
    const double mass = oracle::trapezoid(wide.points(), kde_curve(data, bw, wide).values);
    CHECK(mass >= 0.999);
    CHECK(mass <= 1.001);

    const Curve sym = kde_curve({-h, h}, h, g);
    const Eigen::Index last = sym.values.size() - 1;
    for (Eigen::Index i = 0; i <= last; ++i) CHECK(std::abs(sym.values[i] - sym.values[last - i]) < 1e-12);

    CHECK(kind_of([&] { kde_curve(data, 0.0, g); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("density panel") {
    DensityConfig cfg;
    SyntheticTickSpec spec;
    spec.days = 12;
    spec.seed = 8;
    const auto days = synthetic_tick_days(spec, cfg);
    const DensityPanel dp = build_density_panel(days, cfg);
    CHECK(dp.panel.size() == 12);
    CHECK(dp.panel.grid().size() == 201);
    CHECK(dp.panel.grid().points()[0] == doctest::Approx(-0.002));
    CHECK(dp.days.size() == 12);
    CHECK(dp.skipped.empty());
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(dp.days[i].day_id == days[i].day_id);
        CHECK(dp.days[i].return_count == 78);
        const Vector& y = dp.panel.values().row(static_cast<Eigen::Index>(i)).transpose();
        CHECK(y.minCoeff() >= 0.0);
        CHECK(oracle::trapezoid(dp.panel.grid().points(), y) <= 1.0 + 1e-9);
        const auto r = log_returns(previous_tick_prices(days[i], cfg));
        CHECK(dp.days[i].bandwidth == silverman_bandwidth(r, 1.0));
    }
    CHECK(build_density_panel(days, cfg).panel.values() == dp.panel.values());
    CHECK(build_density_panel(days, cfg, false, 4).panel.values() == dp.panel.values());
}

TEST_CASE("identical days give a zero dual matrix") {
    DensityConfig cfg;
    SyntheticTickSpec spec;
    spec.days = 1;
    auto days = synthetic_tick_days(spec, cfg);
    days.push_back(days[0]);
    days[1].day_id = "copy";
    const DensityPanel dp = build_density_panel(days, cfg);
    CHECK(dual_matrix(dp.panel, 1).values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("bad days are aggregated or skipped") {
    DensityConfig cfg;
    SyntheticTickSpec spec;
    spec.days = 5;
    auto days = synthetic_tick_days(spec, cfg);
    while (!days[2].ticks.empty() && days[2].ticks.front().time <= cfg.session_open + 300.0)
        days[2].ticks.erase(days[2].ticks.begin());
    days[4].ticks = {{cfg.session_open, 100.0}};

    const std::string msg = message_of([&] { build_density_panel(days, cfg); });
    CHECK(msg.find(days[2].day_id) != std::string::npos);
    CHECK(msg.find(days[4].day_id) != std::string::npos);
    CHECK(kind_of([&] { build_density_panel(days, cfg); }) == ErrorKind::MissingOpening);

    const DensityPanel dp = build_density_panel(days, cfg, true);
    CHECK(dp.panel.size() == 3);
    REQUIRE(dp.skipped.size() == 2);
    CHECK(dp.skipped[0].day_id == days[2].day_id);
    CHECK(dp.skipped[0].kind == ErrorKind::MissingOpening);
    CHECK(dp.skipped[1].kind == ErrorKind::DegenerateDay);

    const std::vector<TickDay> one{days[0], days[2]};
    CHECK(kind_of([&] { build_density_panel(one, cfg, true); }) == ErrorKind::InsufficientSample);
}

TEST_CASE("tick files and manifests round trip") {
    const auto dir = scratch_dir("files");
    DensityConfig cfg;
    SyntheticTickSpec spec;
    spec.days = 3;
    spec.seed = 2;
    const auto days = synthetic_tick_days(spec, cfg);
    std::vector<ManifestEntry> entries;
    for (std::size_t i = 0; i < days.size(); ++i) {
        const double start = 1136419200.0 + 86400.0 * static_cast<double>(i);
        const std::string file = days[i].day_id + ".csv";
        write_tick_csv(dir / file, days[i], start);
        entries.push_back({days[i].day_id, file, start});
    }
    write_manifest(dir / "manifest.json", entries);
    const auto loaded = load_manifest_days(dir / "manifest.json");
    REQUIRE(loaded.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(loaded[i].day_id == days[i].day_id);
        REQUIRE(loaded[i].ticks.size() == days[i].ticks.size());
        CHECK(previous_tick_prices(loaded[i], cfg) == previous_tick_prices(days[i], cfg));
    }
    CHECK(build_density_panel(loaded, cfg).panel.values() == build_density_panel(days, cfg).panel.values());

    CHECK(kind_of([&] { read_tick_csv(dir / "missing.csv", "x"); }) == ErrorKind::Io);
    {
        std::ofstream bad(dir / "bad.csv");
        bad << "epoch_seconds,price\n34200,100\n34500,abc\n";
    }
    CHECK(kind_of([&] { read_tick_csv(dir / "bad.csv", "x"); }) == ErrorKind::Parse);
    {
        std::ofstream bad(dir / "bad.json");
        bad << "{\"days\": [{\"id\": 3}]}";
    }
    CHECK(kind_of([&] { read_manifest(dir / "bad.json"); }) == ErrorKind::Parse);
    std::filesystem::remove_all(dir);
}
