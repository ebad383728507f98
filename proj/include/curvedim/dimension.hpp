#pragma once

// Choosing the dimension of the dynamic space: bootstrap tests of
// H0: theta_{d0+1} = 0, the eigenvalue threshold rule, and distances between
// estimated and reference subspaces.

#include "curvedim/identification.hpp"

#include <cstdint>
#include <map>
#include <string_view>
#include <vector>

namespace curvedim {

struct BootstrapConfig {
    std::size_t B = 200;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

void validate(const BootstrapConfig& cfg);

struct BootstrapResult {
    double pvalue = 1.0;
    double theta_hat = 0.0;              // theta_{d0+1} of the observed panel
    std::size_t exceedances = 0;         // #{theta* > theta_hat}
    std::vector<double> theta_star;      // replicate statistics, by replicate index
    bool rejected = false;               // exceedances <= floor(alpha * B)
};

/// Residual bootstrap for H0: theta_{d0+1} = 0. Replicate b draws its residual
/// indices from make_stream(cfg.seed, b), so results do not depend on threads.
BootstrapResult bootstrap_test(const CurvePanel& panel, std::size_t d0, std::size_t p, const BootstrapConfig& cfg,
                               EigenRoute route = EigenRoute::Auto);

/// #{j : theta_j >= epsilon}.
std::size_t threshold_estimate(const Vector& eigenvalues, double epsilon);

inline constexpr double kEpsilonScale = 0.15;
inline constexpr double kEpsilonExponent = 0.45;

/// Squared Hilbert-Schmidt norm of the lag-0 covariance kernel,
/// \int\int M_0(u, v)^2 du dv.
double lag0_energy(const CurvePanel& panel, std::size_t p);

/// kEpsilonScale * lag0_energy * n^{-kEpsilonExponent}. Scales like the
/// eigenvalues (fourth power of the data), tends to zero, and epsilon^2 n
/// grows without bound.
double covariance_epsilon(const CurvePanel& panel, std::size_t p);

/// theta_1 * n^{-1/3}.
double cubic_epsilon(const Vector& eigenvalues, std::size_t n);

enum class EpsilonRule { Covariance, Cubic, Fixed };

std::string_view epsilon_rule_name(EpsilonRule rule) noexcept;

double select_epsilon(const CurvePanel& panel, const Vector& eigenvalues, std::size_t p, EpsilonRule rule,
                      double fixed_epsilon = 0.0);

/// D for two d-dimensional subspaces given by orthonormal bases.
double subspace_distance_D(const std::vector<Curve>& basis1, const std::vector<Curve>& basis2);

/// D-tilde for subspaces of possibly different dimensions.
double subspace_distance_Dtilde(const std::vector<Curve>& basis1, const std::vector<Curve>& basis2);

struct DimensionOptions {
    std::size_t p = kDefaultLagBudget;
    std::size_t d_max = 10;
    BootstrapConfig bootstrap;
    EpsilonRule epsilon_rule = EpsilonRule::Covariance;
    double epsilon = 0.0;  // used when epsilon_rule == Fixed
    bool run_bootstrap = true;
    EigenRoute route = EigenRoute::Auto;
};

struct DimensionReport {
    std::size_t d_hat = 0;               // smallest d0 whose H0 is not rejected
    std::map<std::size_t, double> pvalues;  // hypothesis index d0+1 -> p-value
    std::size_t threshold_d = 0;
    double epsilon_used = 0.0;
    Vector eigenvalues;
    std::size_t n = 0;
    std::size_t p = 0;
    bool bootstrap_ran = false;
};

DimensionReport select_dimension(const CurvePanel& panel, const DimensionOptions& options);

}  // namespace curvedim
