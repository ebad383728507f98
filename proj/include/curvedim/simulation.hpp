#pragma once

// Monte Carlo studies on the cosine-factor / sine-noise curve model:
//   Y_t(u) = sum_i xi_ti sqrt(2) cos(pi i u) + sum_j w_j Z_tj sqrt(2) sin(pi j u),
// with independent AR(1) factors xi_ti and iid N(0, 1) noise scores Z_tj.

#include "curvedim/dimension.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace curvedim {

struct FactorModelSpec {
    std::size_t d = 2;
    std::size_t n = 300;
    Grid grid = Grid::uniform(0.0, 1.0, 101);
    std::vector<double> ar_coefficients;  // one per factor
    std::size_t noise_terms = 10;
    std::vector<double> noise_weights;    // 2^{-(j-1)}, j = 1..noise_terms
    double noise_scale = 1.0;             // multiplies every noise weight; 0 removes the noise
    std::size_t burn_in = 500;
    std::uint64_t seed = 1;

    /// a_i = (-1)^i (0.9 - 0.5 i / d), the default noise weights and a
    /// uniform grid of `grid_points` on [0, 1].
    static FactorModelSpec standard(std::size_t d, std::size_t n, std::uint64_t seed, std::size_t grid_points = 101);
};

void validate(const FactorModelSpec& spec);

std::vector<double> standard_ar_coefficients(std::size_t d);

/// sqrt(2) cos(pi i u), i = 1..d, on the grid.
std::vector<Curve> cosine_basis(const Grid& grid, std::size_t d);

CurvePanel generate_panel(const FactorModelSpec& spec);

/// Spectrum of the population operator for independent AR(1) factors along
/// the cosine basis, computed on the grid from lag kernels
/// M_k = sum_i gamma_i(k) phi_i phi_i' by trapezoid quadrature.
Vector population_spectrum(const std::vector<double>& ar_coefficients, const Grid& grid, std::size_t p);

struct StudyCommon {
    std::size_t replications = 100;
    std::size_t p = kDefaultLagBudget;
    std::size_t grid_points = 101;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

std::uint64_t replication_seed(std::uint64_t seed, std::size_t d, std::size_t n, std::size_t rep);

// ---- eigenvalue gaps -------------------------------------------------------

struct EigenGapRow {
    std::size_t d = 0;
    std::size_t n = 0;
    Vector mean_eigenvalues;  // ten largest, averaged over replications
};

std::vector<EigenGapRow> eigen_gap_study(const std::vector<std::size_t>& ds, const std::vector<std::size_t>& ns,
                                         const StudyCommon& common, double noise_scale = 1.0);

void write_eigen_gap_csv(std::ostream& out, const std::vector<EigenGapRow>& rows);

// ---- bootstrap size and power ---------------------------------------------

struct BootstrapPowerRow {
    std::size_t n = 0;
    std::vector<double> pvalues_dim;   // H0: theta_d = 0, one per replication
    std::vector<double> pvalues_next;  // H0: theta_{d+1} = 0
};

struct BootstrapPowerConfig {
    std::size_t d = 2;
    std::vector<std::size_t> ns;
    StudyCommon common;
    std::size_t B = 200;
};

std::vector<BootstrapPowerRow> bootstrap_power_study(const BootstrapPowerConfig& cfg);

double rejection_rate(const std::vector<double>& pvalues, double alpha);

void write_bootstrap_power_csv(std::ostream& out, std::size_t d, const std::vector<BootstrapPowerRow>& rows);

// ---- subspace error --------------------------------------------------------

struct SubspaceErrorRow {
    std::size_t d = 0;
    std::size_t n = 0;
    std::size_t rep = 0;
    std::size_t d_hat = 0;
    double dtilde = 0.0;
};

/// D-tilde between the estimated space (threshold-rule dimension) and the
/// true cosine span.
std::vector<SubspaceErrorRow> subspace_error_study(const std::vector<std::size_t>& ds,
                                                   const std::vector<std::size_t>& ns, const StudyCommon& common);

void write_subspace_error_csv(std::ostream& out, const std::vector<SubspaceErrorRow>& rows);

// ---- convergence rates -----------------------------------------------------

struct RateStudySpec {
    double ar_coefficient = 0.5;
    std::size_t p = 1;
    std::vector<std::size_t> sample_sizes{100, 200, 400, 800, 1600};
    std::size_t replications = 100;
    std::size_t grid_points = 101;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

struct RateSample {
    std::size_t n = 0;
    std::size_t rep = 0;
    double theta1 = 0.0;
    double theta2 = 0.0;
};

struct RateStudyResult {
    double theta_ref = 0.0;       // leading population eigenvalue on the grid
    double theta_analytic = 0.0;  // gamma(1)^2 ||phi||^4 in closed form
    std::vector<RateSample> samples;  // ordered by (n, rep)
};

RateStudyResult rate_study(const RateStudySpec& spec);

/// Per-n mean of |theta1 - theta_ref| and of theta2, in sample_sizes order.
struct RateSummary {
    std::vector<std::size_t> ns;
    std::vector<double> mean_abs_err1;
    std::vector<double> mean_theta2;
};

RateSummary summarize(const RateStudyResult& result, const std::vector<std::size_t>& ns);

void write_rate_csv(std::ostream& out, const RateStudyResult& result);

// ---- small statistics helpers ---------------------------------------------

/// Least-squares slope of log(y) on log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Two-sample Kolmogorov-Smirnov statistic sup |F1 - F2|.
double ks_distance(std::vector<double> a, std::vector<double> b);

/// Type-7 sample quantile.
double quantile(std::vector<double> values, double prob);

}  // namespace curvedim
