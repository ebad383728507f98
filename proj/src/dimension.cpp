#include "curvedim/dimension.hpp"

#include "curvedim/error.hpp"
#include "curvedim/parallel.hpp"
#include "curvedim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace curvedim {

void validate(const BootstrapConfig& cfg) {
    require(cfg.B >= 1, ErrorKind::InvalidArgument, "bootstrap replicate count B must be at least 1");
    require(cfg.alpha > 0.0 && cfg.alpha < 1.0, ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
}

BootstrapResult bootstrap_test(const CurvePanel& panel, std::size_t d0, std::size_t p, const BootstrapConfig& cfg,
                               EigenRoute route) {
    validate(cfg);
    require(p >= 1, ErrorKind::InvalidArgument, "lag budget p must be at least 1");
    check_lag_budget(panel.size(), p, p);
    const std::size_t n = panel.size();
    const std::size_t available = std::min(n - p, panel.grid().size());
    require(d0 < available, ErrorKind::Bounds,
            "hypothesis theta_" + std::to_string(d0 + 1) + " = 0 needs d0 < " + std::to_string(available));

    IdentifyOptions opts;
    opts.p = p;
    opts.max_functions = d0;
    opts.route = route;
    const EigenDecomposition fit = identify(panel, opts);

    BootstrapResult out;
    out.theta_hat = fit.eigenvalues[static_cast<Eigen::Index>(d0)];

    const LoadingsSeries eta = loadings(panel, fit.eigenfunctions);
    const CurvePanel fitted = reconstruct(panel, fit.eigenfunctions, eta);
    const Matrix resid = residuals(panel, fitted);

    out.theta_star.assign(cfg.B, 0.0);
    parallel_for(cfg.B, cfg.threads, [&](std::size_t b) {
        Rng rng = make_stream(cfg.seed, b);
        std::uniform_int_distribution<Eigen::Index> pick(0, static_cast<Eigen::Index>(n) - 1);
        Matrix star = fitted.values();
        for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(n); ++t) star.row(t) += resid.row(pick(rng));
        const Vector theta = operator_spectrum(CurvePanel(panel.grid(), std::move(star)), p, route);
        out.theta_star[b] = theta[static_cast<Eigen::Index>(d0)];
    });

    out.exceedances =
        static_cast<std::size_t>(std::count_if(out.theta_star.begin(), out.theta_star.end(),
                                               [&](double v) { return v > out.theta_hat; }));
    out.pvalue = static_cast<double>(out.exceedances) / static_cast<double>(cfg.B);
    out.rejected = out.exceedances <= static_cast<std::size_t>(std::floor(cfg.alpha * static_cast<double>(cfg.B)));
    return out;
}

std::size_t threshold_estimate(const Vector& eigenvalues, double epsilon) {
    require(epsilon > 0.0, ErrorKind::InvalidArgument, "threshold epsilon must be positive");
    return static_cast<std::size_t>((eigenvalues.array() >= epsilon).count());
}

double lag0_energy(const CurvePanel& panel, std::size_t p) {
    const LagCovKernel m0 = lag_cov_kernel(panel, 0, p);
    const auto& sw = panel.grid().sqrt_weights();
    return (sw.asDiagonal() * m0.values * sw.asDiagonal()).squaredNorm();
}

double covariance_epsilon(const CurvePanel& panel, std::size_t p) {
    const double eps = kEpsilonScale * lag0_energy(panel, p) *
                       std::pow(static_cast<double>(panel.size()), -kEpsilonExponent);
    return eps > 0.0 ? eps : std::numeric_limits<double>::min();
}

std::string_view epsilon_rule_name(EpsilonRule rule) noexcept {
    switch (rule) {
        case EpsilonRule::Covariance: return "covariance";
        case EpsilonRule::Cubic: return "cubic";
        case EpsilonRule::Fixed: return "fixed";
    }
    return "unknown";
}

double select_epsilon(const CurvePanel& panel, const Vector& eigenvalues, std::size_t p, EpsilonRule rule,
                      double fixed_epsilon) {
    switch (rule) {
        case EpsilonRule::Covariance: return covariance_epsilon(panel, p);
        case EpsilonRule::Cubic: return cubic_epsilon(eigenvalues, panel.size());
        case EpsilonRule::Fixed:
            require(fixed_epsilon > 0.0, ErrorKind::InvalidArgument, "fixed epsilon must be positive");
            return fixed_epsilon;
    }
    fail(ErrorKind::InvalidArgument, "unknown epsilon rule");
}

double cubic_epsilon(const Vector& eigenvalues, std::size_t n) {
    require(n >= 1, ErrorKind::InvalidArgument, "sample size must be positive");
    const double top = eigenvalues.size() ? eigenvalues[0] : 0.0;
    const double eps = top * std::pow(static_cast<double>(n), -1.0 / 3.0);
    return eps > 0.0 ? eps : std::numeric_limits<double>::min();
}

namespace {

constexpr double kOrthonormalTolerance = 1e-6;

Matrix basis_matrix(const std::vector<Curve>& basis, const Grid& grid) {
    Matrix out(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t j = 0; j < basis.size(); ++j) {
        require_same_grid(grid, basis[j].grid);
        out.col(static_cast<Eigen::Index>(j)) = basis[j].values;
    }
    return out;
}

// Checks orthonormality to kOrthonormalTolerance, then re-orthonormalizes.
Matrix checked_basis(const std::vector<Curve>& basis, const Grid& grid, const char* which) {
    const Matrix b = basis_matrix(basis, grid);
    const auto d = b.cols();
    const Matrix gram = b.transpose() * grid.weights().asDiagonal() * b;
    const double err = d ? (gram - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() : 0.0;
    require(err <= kOrthonormalTolerance, ErrorKind::Validation,
            std::string(which) + " is not orthonormal (max Gram deviation " + std::to_string(err) + ")");
    if (d == 0) return b;
    const GramSchmidtResult gs = gram_schmidt(basis);
    require(gs.dropped.empty(), ErrorKind::Validation, std::string(which) + " is rank deficient");
    return basis_matrix(gs.basis, grid);
}

double overlap(const std::vector<Curve>& basis1, const std::vector<Curve>& basis2) {
    const Grid& grid = !basis1.empty() ? basis1.front().grid : basis2.front().grid;
    const Matrix b1 = checked_basis(basis1, grid, "basis1");
    const Matrix b2 = checked_basis(basis2, grid, "basis2");
    const Matrix cross = b2.transpose() * grid.weights().asDiagonal() * b1;
    return cross.squaredNorm();
}

}  // namespace

double subspace_distance_D(const std::vector<Curve>& basis1, const std::vector<Curve>& basis2) {
    require(!basis1.empty() && basis1.size() == basis2.size(), ErrorKind::InvalidArgument,
            "D needs two bases of the same positive dimension");
    const double d = static_cast<double>(basis1.size());
    return std::sqrt(std::clamp(1.0 - overlap(basis1, basis2) / d, 0.0, 1.0));
}

double subspace_distance_Dtilde(const std::vector<Curve>& basis1, const std::vector<Curve>& basis2) {
    if (basis1.empty() && basis2.empty()) return 0.0;
    if (basis1.empty() || basis2.empty()) {
        // The trivial subspace is orthogonal to everything; still validate the other side.
        const auto& other = basis1.empty() ? basis2 : basis1;
        checked_basis(other, other.front().grid, "basis");
        return 1.0;
    }
    const double dmax = static_cast<double>(std::max(basis1.size(), basis2.size()));
    return std::sqrt(std::clamp(1.0 - overlap(basis1, basis2) / dmax, 0.0, 1.0));
}

DimensionReport select_dimension(const CurvePanel& panel, const DimensionOptions& options) {
    DimensionReport report;
    report.n = panel.size();
    report.p = options.p;
    report.eigenvalues = operator_spectrum(panel, options.p, options.route);
    report.epsilon_used =
        select_epsilon(panel, report.eigenvalues, options.p, options.epsilon_rule, options.epsilon);
    report.threshold_d = threshold_estimate(report.eigenvalues, report.epsilon_used);
    report.d_hat = report.threshold_d;

    if (options.run_bootstrap) {
        validate(options.bootstrap);
        const std::size_t available = std::min(panel.size() - options.p, panel.grid().size());
        const std::size_t top = std::min(options.d_max, available);
        bool chosen = false;
        for (std::size_t d0 = 0; d0 < top; ++d0) {
            BootstrapConfig cfg = options.bootstrap;
            cfg.seed = derive_seed(options.bootstrap.seed, d0);
            const BootstrapResult r = bootstrap_test(panel, d0, options.p, cfg, options.route);
            report.pvalues[d0 + 1] = r.pvalue;
            if (!chosen && !r.rejected) {
                report.d_hat = d0;
                chosen = true;
            }
        }
        if (!chosen) report.d_hat = top;
        report.bootstrap_ran = true;
    }
    return report;
}

}  // namespace curvedim
