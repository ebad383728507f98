#include "curvedim/density.hpp"

#include "curvedim/csv.hpp"
#include "curvedim/parallel.hpp"
#include "curvedim/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <cstdio>
#include <numbers>
#include <random>

namespace curvedim {

void validate(const DensityConfig& cfg) {
    require(cfg.session_open < cfg.session_close, ErrorKind::InvalidArgument, "session open must precede close");
    require(cfg.interval_minutes > 0.0, ErrorKind::InvalidArgument, "sampling interval must be positive");
    const double steps = (cfg.session_close - cfg.session_open) / (60.0 * cfg.interval_minutes);
    require(std::abs(steps - std::round(steps)) < 1e-9 && std::round(steps) >= 2, ErrorKind::InvalidArgument,
            "sampling interval must divide the session into at least 2 steps");
    require(cfg.support_lo < cfg.support_hi, ErrorKind::InvalidArgument, "density support needs lo < hi");
    require(cfg.bandwidth_multiplier > 0.0, ErrorKind::InvalidArgument, "bandwidth multiplier must be positive");
    require(cfg.grid_points >= 2, ErrorKind::InvalidArgument, "density grid needs at least 2 points");
}

std::size_t returns_per_day(const DensityConfig& cfg) {
    validate(cfg);
    return static_cast<std::size_t>(std::llround((cfg.session_close - cfg.session_open) / (60.0 * cfg.interval_minutes)));
}

std::vector<double> previous_tick_prices(const TickDay& day, const DensityConfig& cfg) {
    const std::size_t m = returns_per_day(cfg);
    const auto& ticks = day.ticks;
    for (std::size_t i = 0; i < ticks.size(); ++i) {
        require(ticks[i].price > 0.0 && std::isfinite(ticks[i].price), ErrorKind::Domain,
                "day " + day.day_id + ": nonpositive price at tick " + std::to_string(i));
        if (i > 0)
            require(ticks[i].time >= ticks[i - 1].time, ErrorKind::Validation,
                    "day " + day.day_id + ": tick timestamps decrease at tick " + std::to_string(i));
    }
    const double step = 60.0 * cfg.interval_minutes;
    const double first_sample = cfg.session_open + step;
    if (ticks.empty() || ticks.front().time > first_sample)
        fail(ErrorKind::MissingOpening, "day " + day.day_id + ": no tick at or before the first sampling time");

    std::vector<double> prices(m + 1);
    for (std::size_t l = 0; l <= m; ++l) {
        const double tau = l == m ? cfg.session_close : cfg.session_open + step * static_cast<double>(l);
        const auto it = std::upper_bound(ticks.begin(), ticks.end(), tau,
                                         [](double t, const Tick& tick) { return t < tick.time; });
        prices[l] = it == ticks.begin() ? ticks.front().price : std::prev(it)->price;
    }
    return prices;
}

std::vector<double> log_returns(const std::vector<double>& prices) {
    require(prices.size() >= 2, ErrorKind::InsufficientSample, "log returns need at least 2 prices");
    std::vector<double> out(prices.size() - 1);
    for (std::size_t i = 0; i < prices.size(); ++i)
        require(prices[i] > 0.0, ErrorKind::Domain, "log returns need positive prices");
    for (std::size_t i = 1; i < prices.size(); ++i) out[i - 1] = std::log(prices[i] / prices[i - 1]);
    return out;
}

double silverman_bandwidth(const std::vector<double>& returns, double multiplier) {
    require(returns.size() >= 2, ErrorKind::InsufficientSample, "bandwidth needs at least 2 returns");
    require(multiplier > 0.0, ErrorKind::InvalidArgument, "bandwidth multiplier must be positive");
    const double m = static_cast<double>(returns.size());
    double mean = 0.0;
    for (double r : returns) mean += r;
    mean /= m;
    double ss = 0.0, scale = 0.0;
    for (double r : returns) {
        ss += (r - mean) * (r - mean);
        scale = std::max(scale, std::abs(r));
    }
    const double sd = std::sqrt(ss / (m - 1.0));
    require(sd > 1e-12 * scale && sd > 0.0, ErrorKind::DegenerateDay, "returns have zero variance");
    return multiplier * 1.06 * sd * std::pow(m, -0.2);
}

Curve kde_curve(const std::vector<double>& returns, double bandwidth, const Grid& grid) {
    require(bandwidth > 0.0, ErrorKind::InvalidArgument, "bandwidth must be positive");
    require(!returns.empty(), ErrorKind::InsufficientSample, "density needs at least one observation");
    const double norm = 1.0 / (static_cast<double>(returns.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
    Vector values = Vector::Zero(static_cast<Eigen::Index>(grid.size()));
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        const double u = grid.points()[i];
        double acc = 0.0;
        for (double z : returns) {
            const double x = (z - u) / bandwidth;
            acc += std::exp(-0.5 * x * x);
        }
        values[i] = norm * acc;
    }
    return Curve(grid, std::move(values));
}

Grid density_grid(const DensityConfig& cfg) {
    validate(cfg);
    return Grid::uniform(cfg.support_lo, cfg.support_hi, cfg.grid_points);
}

DensityPanel build_density_panel(const std::vector<TickDay>& days, const DensityConfig& cfg, bool skip_bad_days,
                                 unsigned threads) {
    const Grid grid = density_grid(cfg);
    struct Outcome {
        std::optional<Curve> curve;
        DayMetadata meta;
        std::optional<SkippedDay> failure;
    };
    std::vector<Outcome> outcomes(days.size());
    parallel_for(days.size(), threads, [&](std::size_t i) {
        const TickDay& day = days[i];
        Outcome& o = outcomes[i];
        o.meta.day_id = day.day_id;
        o.meta.tick_count = day.ticks.size();
        try {
            const auto returns = log_returns(previous_tick_prices(day, cfg));
            o.meta.return_count = returns.size();
            o.meta.bandwidth = silverman_bandwidth(returns, cfg.bandwidth_multiplier);
            o.meta.sigma = o.meta.bandwidth / (cfg.bandwidth_multiplier * 1.06 *
                                               std::pow(static_cast<double>(returns.size()), -0.2));
            o.curve = kde_curve(returns, o.meta.bandwidth, grid);
        } catch (const Error& e) {
            o.failure = SkippedDay{day.day_id, e.kind(), e.what()};
        }
    });

    std::vector<SkippedDay> failures;
    for (const auto& o : outcomes)
        if (o.failure) failures.push_back(*o.failure);
    if (!failures.empty() && !skip_bad_days) {
        std::string msg = std::to_string(failures.size()) + " day(s) failed:";
        for (const auto& f : failures) msg += " [" + f.day_id + ": " + f.message + "]";
        fail(failures.front().kind, msg);
    }

    std::vector<const Outcome*> kept;
    for (const auto& o : outcomes)
        if (o.curve) kept.push_back(&o);
    require(kept.size() >= 2, ErrorKind::InsufficientSample, "density panel needs at least 2 valid days");
    Matrix values(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(grid.size()));
    DensityPanel out{CurvePanel(grid, Matrix::Zero(2, static_cast<Eigen::Index>(grid.size()))), {}, failures};
    for (std::size_t r = 0; r < kept.size(); ++r) {
        values.row(static_cast<Eigen::Index>(r)) = kept[r]->curve->values.transpose();
        out.days.push_back(kept[r]->meta);
    }
    out.panel = CurvePanel(grid, std::move(values));
    return out;
}

TickDay read_tick_csv(const std::filesystem::path& path, std::string day_id, double day_start) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open tick file " + path.string());
    TickDay day;
    day.day_id = std::move(day_id);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_csv_line(line);
        if (line_no == 1 && line.find_first_of("abcdefghijklmnopqrstuvwxyz_") != std::string::npos) continue;
        if (fields.size() != 2)
            fail(ErrorKind::Parse, path.string() + " line " + std::to_string(line_no) + ": expected 2 fields");
        day.ticks.push_back(Tick{parse_double(fields[0], line_no, 1) - day_start, parse_double(fields[1], line_no, 2)});
    }
    return day;
}

void write_tick_csv(const std::filesystem::path& path, const TickDay& day, double day_start) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write tick file " + path.string());
    out << "epoch_seconds,price\n";
    for (const auto& t : day.ticks) out << format_double(t.time + day_start) << ',' << format_double(t.price) << '\n';
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open manifest " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Parse, "manifest " + path.string() + ": " + e.what());
    }
    std::vector<ManifestEntry> out;
    try {
        for (const auto& d : doc.at("days")) {
            ManifestEntry e;
            e.day_id = d.at("id").get<std::string>();
            e.file = d.at("file").get<std::string>();
            e.day_start = d.value("day_start", 0.0);
            out.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Parse, "manifest " + path.string() + ": " + e.what());
    }
    return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
    nlohmann::json doc;
    doc["days"] = nlohmann::json::array();
    for (const auto& e : entries)
        doc["days"].push_back({{"id", e.day_id}, {"file", e.file.string()}, {"day_start", e.day_start}});
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write manifest " + path.string());
    out << doc.dump(2) << '\n';
}

std::vector<TickDay> load_manifest_days(const std::filesystem::path& path) {
    const auto entries = read_manifest(path);
    const auto base = path.parent_path();
    std::vector<TickDay> days;
    days.reserve(entries.size());
    for (const auto& e : entries) {
        const auto file = e.file.is_absolute() ? e.file : base / e.file;
        days.push_back(read_tick_csv(file, e.day_id, e.day_start));
    }
    return days;
}

std::vector<TickDay> synthetic_tick_days(const SyntheticTickSpec& spec, const DensityConfig& cfg) {
    validate(cfg);
    require(spec.days >= 1 && spec.mean_tick_gap > 0.0 && spec.sigma_per_interval > 0.0, ErrorKind::InvalidArgument,
            "invalid synthetic tick specification");
    Rng rng = make_stream(spec.seed, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::exponential_distribution<double> gap(1.0 / spec.mean_tick_gap);
    const double interval = 60.0 * cfg.interval_minutes;
    double log_vol = 0.0;
    double drift = 0.0;
    double price = spec.base_price;
    std::vector<TickDay> out;
    out.reserve(spec.days);
    for (std::size_t d = 0; d < spec.days; ++d) {
        log_vol = spec.log_vol_ar * log_vol + spec.log_vol_sd * normal(rng);
        drift = spec.drift_ar * drift + spec.drift_sd * normal(rng);
        const double sigma = spec.sigma_per_interval * std::exp(log_vol);
        TickDay day;
        char id[32];
        std::snprintf(id, sizeof(id), "day%03zu", d + 1);
        day.day_id = id;
        double t = cfg.session_open;
        day.ticks.push_back(Tick{t, price});
        while (true) {
            const double dt = gap(rng);
            if (t + dt > cfg.session_close) break;
            t += dt;
            const double scale = dt / interval;
            price *= std::exp(drift * scale + sigma * std::sqrt(scale) * normal(rng));
            day.ticks.push_back(Tick{t, price});
        }
        out.push_back(std::move(day));
    }
    return out;
}

}  // namespace curvedim
