#pragma once

// Scalar AR(1) simulation, VAR(tau) fitting by Yule-Walker with AIC order
// selection, and portmanteau white-noise diagnostics.

#include "curvedim/functional.hpp"
#include "curvedim/rng.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace curvedim {

inline constexpr std::size_t kDefaultBurnIn = 500;

/// x_t = a x_{t-1} + e_t, e_t ~ N(0, 1), started at 0 and run for burn_in
/// steps before recording.
std::vector<double> ar1_simulate(double coefficient, std::size_t length, std::size_t burn_in, std::uint64_t seed);
std::vector<double> ar1_simulate(double coefficient, std::size_t length, std::size_t burn_in, Rng& rng);

/// C_k = T^{-1} sum_t (x_{t+k} - xbar)(x_t - xbar)' for k = 0..max_lag.
std::vector<Matrix> sample_autocovariances(const Matrix& series, std::size_t max_lag);

struct VarFit {
    std::size_t order = 0;
    std::vector<Matrix> coefficients;  // A_1..A_tau
    Matrix innovation_covariance;
    std::map<std::size_t, double> aic_table;  // filled by aic_select, centered at its minimum
};

/// Yule-Walker estimate of a zero-intercept VAR(order). Rows of `series` are
/// time points.
VarFit var_fit_yule_walker(const Matrix& series, std::size_t order);

/// T log det(Sigma_e) + 2 tau d^2.
double aic(const VarFit& fit, std::size_t length);

struct AicSelection {
    std::size_t order = 0;
    std::map<std::size_t, double> raw;
    std::map<std::size_t, double> centered;  // raw - min, so the chosen order maps to 0
    VarFit fit;                              // fit at the chosen order, aic_table = centered
};

AicSelection aic_select(const Matrix& series, std::size_t max_order);

/// e_t = x_t - sum_k A_k x_{t-k} for t = tau..T-1.
Matrix var_residuals(const Matrix& series, const VarFit& fit);

/// Largest modulus among the companion-matrix eigenvalues; < 1 means stable.
double companion_spectral_radius(const VarFit& fit);

/// Simulates x_t = sum_k A_k x_{t-k} + L z_t with z_t ~ N(0, I).
Matrix var_simulate(const std::vector<Matrix>& coefficients, const Matrix& innovation_chol, std::size_t length,
                    std::size_t burn_in, std::uint64_t seed);

struct PortmanteauResult {
    double statistic = 0.0;
    std::size_t lags = 0;
    std::size_t dof = 0;
    double pvalue = 1.0;
};

/// Upper tail P(chi^2_dof > x).
double chi_square_upper_tail(double x, double dof);

/// Sample autocorrelations s(1..q).
std::vector<double> sample_acf(const std::vector<double>& series, std::size_t q);

/// n(n+2) sum_k s(k)^2 / (n-k) from given autocorrelations s(1..q).
double ljung_box_statistic(const std::vector<double>& acf, std::size_t n);

PortmanteauResult ljung_box(const std::vector<double>& series, std::size_t q);

/// T(T+2) sum_k (T-k)^{-1} tr(C_k' C_0^{-1} C_k C_0^{-1}); chi-square with
/// d^2 (q - fitted_order) degrees of freedom, at least 1.
PortmanteauResult multivariate_portmanteau(const Matrix& series, std::size_t q, std::size_t fitted_order = 0);

}  // namespace curvedim
