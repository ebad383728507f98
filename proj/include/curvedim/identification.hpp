#pragma once

// Eigenanalysis of the nonnegative operator
//   K(u, v) = sum_{k=1..p} \int M_k(u, z) M_k(v, z) dz
// through its (n-p) x (n-p) dual matrix, plus loadings and fitted curves.

#include "curvedim/functional.hpp"

#include <cstddef>
#include <string_view>
#include <vector>

namespace curvedim {

inline constexpr std::size_t kDefaultLagBudget = 5;
/// Relative floor below which eigenvalues are reported as exactly zero.
inline constexpr double kEigenvalueFloor = 1e-12;

struct DualMatrix {
    Matrix values;   // K* = (n-p)^{-2} S G_0
    Matrix gram0;    // G_0
    Matrix lag_sum;  // S = sum_{k=1..p} G_k
    std::size_t p = 0;
    std::size_t n = 0;
};

DualMatrix dual_matrix(const CurvePanel& panel, std::size_t p);

struct DualSpectrum {
    Vector eigenvalues;  // descending
    Matrix vectors;      // column j is a unit-norm gamma_j with K* gamma_j = theta_j gamma_j
    double max_relative_residual = 0.0;
    bool used_null_space_fallback = false;
};

/// Spectrum of K* through the symmetric similar matrix S^{1/2} G_0 S^{1/2};
/// eigenvectors map back as gamma = S^{1/2} v. Directions that S annihilates
/// (zero eigenvalues only) are completed from the null space of K*.
DualSpectrum eigen_dual(const DualMatrix& dm);

/// Raw eigenfunctions sum_t gamma_tj (Y_t - Ybar), t = 1..n-p.
std::vector<Curve> eigenfunctions_from_dual(const CurvePanel& panel, const Matrix& dual_vectors,
                                            std::size_t count);

struct GramSchmidtResult {
    std::vector<Curve> basis;
    std::vector<std::size_t> dropped;  // input indices removed as numerically dependent
};

/// Orthonormalizes in input order (modified Gram-Schmidt with one
/// reorthogonalization pass).
GramSchmidtResult gram_schmidt(const std::vector<Curve>& curves);

/// Flips the sign so that the largest-magnitude grid value is positive.
void normalize_sign(Curve& curve);

/// Weighted symmetric form W^{1/2} K W^{1/2} of the estimated operator on the
/// panel grid, evaluated without forming any (n-p) x (n-p) matrix.
Matrix grid_operator(const CurvePanel& panel, std::size_t p);

enum class EigenRoute { Auto, Dual, Grid };

std::string_view route_name(EigenRoute route) noexcept;

/// Eigenvalues of the estimated operator, descending. Auto solves whichever
/// of the dual and grid problems is smaller; both share the nonzero spectrum.
Vector operator_spectrum(const CurvePanel& panel, std::size_t p, EigenRoute route = EigenRoute::Auto);

struct IdentifyOptions {
    std::size_t p = kDefaultLagBudget;
    std::size_t max_functions = 10;
    EigenRoute route = EigenRoute::Auto;
};

struct EigenDecomposition {
    Vector eigenvalues;              // descending, values below the floor clamped to 0
    Matrix dual_vectors;             // (n-p) x count
    std::vector<Curve> eigenfunctions;  // orthonormal, sign-normalized
    std::size_t count = 0;
    std::size_t p = 0;
    EigenRoute route = EigenRoute::Auto;
};

EigenDecomposition identify(const CurvePanel& panel, const IdentifyOptions& options = {});

/// Number of eigenvalues above kEigenvalueFloor * theta_1.
std::size_t numerical_rank(const Vector& eigenvalues);

struct LoadingsSeries {
    Matrix values;  // n x count, eta_tj = <Y_t - Ybar, psi_j>
    std::vector<Curve> eigenfunctions;
};

LoadingsSeries loadings(const CurvePanel& panel, const std::vector<Curve>& eigenfunctions);

/// Ybar + sum_j eta_tj psi_j for every t.
CurvePanel reconstruct(const CurvePanel& panel, const std::vector<Curve>& eigenfunctions,
                       const LoadingsSeries& loadings);

/// Y_t minus fitted curves, row by row.
Matrix residuals(const CurvePanel& panel, const CurvePanel& fitted);

/// First `count` eigenfunctions of the panel (count may be 0).
std::vector<Curve> leading_eigenfunctions(const CurvePanel& panel, std::size_t p, std::size_t count,
                                          EigenRoute route = EigenRoute::Auto);

}  // namespace curvedim
