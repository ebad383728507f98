#pragma once

// Daily intraday return densities from tick data: previous-tick sampling on
// an equally spaced clock, log returns, and Gaussian kernel density
// estimates with a Silverman rule-of-thumb bandwidth.

#include "curvedim/error.hpp"
#include "curvedim/functional.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace curvedim {

struct Tick {
    double time = 0.0;  // seconds since local midnight
    double price = 0.0;
};

struct TickDay {
    std::string day_id;
    std::vector<Tick> ticks;  // nondecreasing in time
};

struct DensityConfig {
    double session_open = 9.5 * 3600.0;   // 09:30
    double session_close = 16.0 * 3600.0;  // 16:00
    double interval_minutes = 5.0;
    double support_lo = -0.002;
    double support_hi = 0.002;
    double bandwidth_multiplier = 1.0;
    std::size_t grid_points = 201;
};

void validate(const DensityConfig& cfg);

/// Number of returns per day, (close - open) / interval.
std::size_t returns_per_day(const DensityConfig& cfg);

/// Prices at tau_0 = open, tau_1, ..., tau_m = close, each taken from the
/// latest tick not after tau_l (last tick wins on equal times). When no tick
/// precedes the open, tau_0 uses the day's first tick; a day without any tick
/// at or before tau_1 is a missing-opening error.
std::vector<double> previous_tick_prices(const TickDay& day, const DensityConfig& cfg);

std::vector<double> log_returns(const std::vector<double>& prices);

/// multiplier * 1.06 * sd * m^{-1/5}, sd with the m - 1 denominator.
double silverman_bandwidth(const std::vector<double>& returns, double multiplier);

/// Gaussian kernel density estimate evaluated on the grid.
Curve kde_curve(const std::vector<double>& returns, double bandwidth, const Grid& grid);

struct DayMetadata {
    std::string day_id;
    std::size_t tick_count = 0;
    std::size_t return_count = 0;
    double sigma = 0.0;
    double bandwidth = 0.0;
};

struct SkippedDay {
    std::string day_id;
    ErrorKind kind = ErrorKind::Validation;
    std::string message;
};

struct DensityPanel {
    CurvePanel panel;
    std::vector<DayMetadata> days;     // kept days, in input order
    std::vector<SkippedDay> skipped;
};

Grid density_grid(const DensityConfig& cfg);

/// One density curve per day on the support grid, in input order. Failing
/// days abort with an error naming all of them unless skip_bad_days is set.
DensityPanel build_density_panel(const std::vector<TickDay>& days, const DensityConfig& cfg,
                                 bool skip_bad_days = false, unsigned threads = 1);

// ---- files -----------------------------------------------------------------

/// Tick file: CSV with columns epoch_seconds,price (header optional).
/// day_start is subtracted so that times become seconds since local midnight.
TickDay read_tick_csv(const std::filesystem::path& path, std::string day_id, double day_start = 0.0);
void write_tick_csv(const std::filesystem::path& path, const TickDay& day, double day_start = 0.0);

struct ManifestEntry {
    std::string day_id;
    std::filesystem::path file;  // relative paths resolve against the manifest directory
    double day_start = 0.0;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
std::vector<TickDay> load_manifest_days(const std::filesystem::path& path);

// ---- synthetic data --------------------------------------------------------

/// Geometric Brownian tick paths whose daily log-volatility and drift follow
/// AR(1) processes, so that the daily return densities carry serial dependence.
struct SyntheticTickSpec {
    std::size_t days = 250;
    double base_price = 100.0;
    double mean_tick_gap = 10.0;      // seconds between ticks on average
    double sigma_per_interval = 1e-3;  // typical 5-minute return sd
    double log_vol_ar = 0.8;
    double log_vol_sd = 0.25;
    double drift_ar = 0.6;
    double drift_sd = 5e-5;            // per-interval drift innovation sd
    std::uint64_t seed = 1;
};

std::vector<TickDay> synthetic_tick_days(const SyntheticTickSpec& spec, const DensityConfig& cfg = {});

}  // namespace curvedim
