#include "curvedim/simulation.hpp"

#include "curvedim/csv.hpp"
#include "curvedim/error.hpp"
#include "curvedim/parallel.hpp"
#include "curvedim/rng.hpp"
#include "curvedim/ts_models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

namespace curvedim {

std::vector<double> standard_ar_coefficients(std::size_t d) {
    std::vector<double> out(d);
    for (std::size_t i = 1; i <= d; ++i) {
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        out[i - 1] = sign * (0.9 - 0.5 * static_cast<double>(i) / static_cast<double>(d));
    }
    return out;
}

FactorModelSpec FactorModelSpec::standard(std::size_t d, std::size_t n, std::uint64_t seed, std::size_t grid_points) {
    FactorModelSpec spec;
    spec.d = d;
    spec.n = n;
    spec.seed = seed;
    spec.grid = Grid::uniform(0.0, 1.0, grid_points);
    spec.ar_coefficients = standard_ar_coefficients(d);
    spec.noise_weights.resize(spec.noise_terms);
    for (std::size_t j = 0; j < spec.noise_terms; ++j) spec.noise_weights[j] = std::ldexp(1.0, -static_cast<int>(j));
    return spec;
}

void validate(const FactorModelSpec& spec) {
    require(spec.d >= 1, ErrorKind::InvalidArgument, "factor model needs d >= 1");
    require(spec.n >= 2, ErrorKind::InsufficientSample, "factor model needs n >= 2");
    require(spec.ar_coefficients.size() == spec.d, ErrorKind::InvalidArgument,
            "need one AR coefficient per factor");
    for (double a : spec.ar_coefficients)
        require(std::abs(a) < 1.0, ErrorKind::Nonstationary, "AR coefficient must satisfy |a| < 1");
    require(spec.noise_weights.size() == spec.noise_terms, ErrorKind::InvalidArgument,
            "need one weight per noise term");
    for (std::size_t j = 1; j < spec.noise_weights.size(); ++j)
        require(spec.noise_weights[j] < spec.noise_weights[j - 1], ErrorKind::InvalidArgument,
                "noise weights must be strictly decreasing");
    require(spec.noise_scale >= 0.0, ErrorKind::InvalidArgument, "noise scale must be nonnegative");
}

std::vector<Curve> cosine_basis(const Grid& grid, std::size_t d) {
    std::vector<Curve> out;
    for (std::size_t i = 1; i <= d; ++i) {
        Vector v = (std::numbers::pi * static_cast<double>(i) * grid.points().array()).cos() * std::numbers::sqrt2;
        out.emplace_back(grid, std::move(v));
    }
    return out;
}

CurvePanel generate_panel(const FactorModelSpec& spec) {
    validate(spec);
    const auto n = static_cast<Eigen::Index>(spec.n);
    const auto m = static_cast<Eigen::Index>(spec.grid.size());
    const auto d = static_cast<Eigen::Index>(spec.d);
    const auto q = static_cast<Eigen::Index>(spec.noise_terms);
    const Vector& u = spec.grid.points();

    Matrix factors(n, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        Rng rng = make_stream(spec.seed, static_cast<std::uint64_t>(i));
        const auto path = ar1_simulate(spec.ar_coefficients[static_cast<std::size_t>(i)], spec.n, spec.burn_in, rng);
        factors.col(i) = Eigen::Map<const Vector>(path.data(), n);
    }
    Matrix phi(d, m);
    for (Eigen::Index i = 0; i < d; ++i)
        phi.row(i) = ((std::numbers::pi * static_cast<double>(i + 1)) * u.array()).cos().transpose() * std::numbers::sqrt2;

    Matrix values = factors * phi;
    if (q > 0 && spec.noise_scale > 0.0) {
        Rng rng = make_stream(spec.seed, 1000);
        std::normal_distribution<double> normal(0.0, 1.0);
        Matrix scores(n, q);
        for (Eigen::Index t = 0; t < n; ++t)
            for (Eigen::Index j = 0; j < q; ++j) scores(t, j) = normal(rng);
        Matrix zeta(q, m);
        for (Eigen::Index j = 0; j < q; ++j)
            zeta.row(j) = ((std::numbers::pi * static_cast<double>(j + 1)) * u.array()).sin().transpose() *
                          (std::numbers::sqrt2 * spec.noise_weights[static_cast<std::size_t>(j)] * spec.noise_scale);
        values += scores * zeta;
    }
    return CurvePanel(spec.grid, std::move(values));
}

Vector population_spectrum(const std::vector<double>& ar_coefficients, const Grid& grid, std::size_t p) {
    require(p >= 1, ErrorKind::InvalidArgument, "lag budget p must be at least 1");
    const auto m = static_cast<Eigen::Index>(grid.size());
    const auto basis = cosine_basis(grid, ar_coefficients.size());
    Matrix k_op = Matrix::Zero(m, m);
    for (std::size_t k = 1; k <= p; ++k) {
        Matrix mk = Matrix::Zero(m, m);
        for (std::size_t i = 0; i < ar_coefficients.size(); ++i) {
            const double a = ar_coefficients[i];
            const double gamma = std::pow(a, static_cast<double>(k)) / (1.0 - a * a);
            mk += gamma * basis[i].values * basis[i].values.transpose();
        }
        k_op += mk * grid.weights().asDiagonal() * mk.transpose();
    }
    const auto& sw = grid.sqrt_weights();
    const Matrix h = sw.asDiagonal() * k_op * sw.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (h + h.transpose()), Eigen::EigenvaluesOnly);
    Vector out = eig.eigenvalues().reverse();
    return out;
}

std::uint64_t replication_seed(std::uint64_t seed, std::size_t d, std::size_t n, std::size_t rep) {
    return derive_seed(derive_seed(derive_seed(seed, d), n), rep);
}

namespace {

Vector top_eigenvalues(const Vector& values, std::size_t count) {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(count));
    const auto k = std::min<Eigen::Index>(values.size(), out.size());
    out.head(k) = values.head(k);
    return out;
}

void write_csv_header(std::ostream& out, std::initializer_list<const char*> cols) {
    bool first = true;
    for (const char* c : cols) {
        if (!first) out << ',';
        out << c;
        first = false;
    }
    out << '\n';
}

}  // namespace

std::vector<EigenGapRow> eigen_gap_study(const std::vector<std::size_t>& ds, const std::vector<std::size_t>& ns,
                                         const StudyCommon& common, double noise_scale) {
    require(common.replications >= 1, ErrorKind::InvalidArgument, "replications must be at least 1");
    std::vector<EigenGapRow> rows;
    for (std::size_t d : ds) {
        for (std::size_t n : ns) {
            require(n > common.p, ErrorKind::InsufficientSample, "every n must exceed p");
            std::vector<Vector> per_rep(common.replications);
            parallel_for(common.replications, common.threads, [&](std::size_t r) {
                FactorModelSpec spec = FactorModelSpec::standard(d, n, replication_seed(common.seed, d, n, r),
                                                                 common.grid_points);
                spec.noise_scale = noise_scale;
                per_rep[r] = top_eigenvalues(operator_spectrum(generate_panel(spec), common.p), 10);
            });
            Vector mean = Vector::Zero(10);
            for (const auto& v : per_rep) mean += v;
            mean /= static_cast<double>(common.replications);
            rows.push_back(EigenGapRow{d, n, mean});
        }
    }
    return rows;
}

void write_eigen_gap_csv(std::ostream& out, const std::vector<EigenGapRow>& rows) {
    out << "d,n";
    for (int j = 1; j <= 10; ++j) out << ",theta" << j;
    out << '\n';
    for (const auto& r : rows) {
        out << r.d << ',' << r.n;
        for (Eigen::Index j = 0; j < r.mean_eigenvalues.size(); ++j) out << ',' << format_double(r.mean_eigenvalues[j]);
        out << '\n';
    }
}

std::vector<BootstrapPowerRow> bootstrap_power_study(const BootstrapPowerConfig& cfg) {
    require(cfg.d >= 1, ErrorKind::InvalidArgument, "bootstrap power study needs d >= 1");
    std::vector<BootstrapPowerRow> rows;
    for (std::size_t n : cfg.ns) {
        BootstrapPowerRow row;
        row.n = n;
        row.pvalues_dim.assign(cfg.common.replications, 0.0);
        row.pvalues_next.assign(cfg.common.replications, 0.0);
        parallel_for(cfg.common.replications, cfg.common.threads, [&](std::size_t r) {
            const std::uint64_t seed = replication_seed(cfg.common.seed, cfg.d, n, r);
            const CurvePanel panel =
                generate_panel(FactorModelSpec::standard(cfg.d, n, seed, cfg.common.grid_points));
            BootstrapConfig bc;
            bc.B = cfg.B;
            bc.seed = derive_seed(seed, 1);
            row.pvalues_dim[r] = bootstrap_test(panel, cfg.d - 1, cfg.common.p, bc).pvalue;
            bc.seed = derive_seed(seed, 2);
            row.pvalues_next[r] = bootstrap_test(panel, cfg.d, cfg.common.p, bc).pvalue;
        });
        rows.push_back(std::move(row));
    }
    return rows;
}

double rejection_rate(const std::vector<double>& pvalues, double alpha) {
    if (pvalues.empty()) return 0.0;
    const auto hits = std::count_if(pvalues.begin(), pvalues.end(), [&](double p) { return p <= alpha; });
    return static_cast<double>(hits) / static_cast<double>(pvalues.size());
}

void write_bootstrap_power_csv(std::ostream& out, std::size_t d, const std::vector<BootstrapPowerRow>& rows) {
    write_csv_header(out, {"d", "n", "replication", "hypothesis", "pvalue"});
    for (const auto& row : rows) {
        for (std::size_t r = 0; r < row.pvalues_dim.size(); ++r) {
            out << d << ',' << row.n << ',' << r << ',' << d << ',' << format_double(row.pvalues_dim[r]) << '\n';
            out << d << ',' << row.n << ',' << r << ',' << d + 1 << ',' << format_double(row.pvalues_next[r])
                << '\n';
        }
    }
}

std::vector<SubspaceErrorRow> subspace_error_study(const std::vector<std::size_t>& ds,
                                                   const std::vector<std::size_t>& ns, const StudyCommon& common) {
    std::vector<SubspaceErrorRow> rows;
    for (std::size_t d : ds) {
        for (std::size_t n : ns) {
            std::vector<SubspaceErrorRow> block(common.replications);
            parallel_for(common.replications, common.threads, [&](std::size_t r) {
                const FactorModelSpec spec =
                    FactorModelSpec::standard(d, n, replication_seed(common.seed, d, n, r), common.grid_points);
                const CurvePanel panel = generate_panel(spec);
                const Vector theta = operator_spectrum(panel, common.p);
                const std::size_t d_hat = std::min(threshold_estimate(theta, covariance_epsilon(panel, common.p)),
                                                   numerical_rank(theta));
                const std::vector<Curve> est = leading_eigenfunctions(panel, common.p, d_hat);
                block[r] = SubspaceErrorRow{d, n, r, d_hat,
                                            subspace_distance_Dtilde(est, cosine_basis(panel.grid(), d))};
            });
            rows.insert(rows.end(), block.begin(), block.end());
        }
    }
    return rows;
}

void write_subspace_error_csv(std::ostream& out, const std::vector<SubspaceErrorRow>& rows) {
    write_csv_header(out, {"d", "n", "replication", "d_hat", "dtilde"});
    for (const auto& r : rows)
        out << r.d << ',' << r.n << ',' << r.rep << ',' << r.d_hat << ',' << format_double(r.dtilde) << '\n';
}

RateStudyResult rate_study(const RateStudySpec& spec) {
    require(spec.replications >= 1, ErrorKind::InvalidArgument, "replications must be at least 1");
    require(std::abs(spec.ar_coefficient) < 1.0, ErrorKind::Nonstationary, "AR coefficient must satisfy |a| < 1");
    RateStudyResult result;
    const Grid grid = Grid::uniform(0.0, 1.0, spec.grid_points);
    result.theta_ref = population_spectrum({spec.ar_coefficient}, grid, spec.p)[0];
    {
        double analytic = 0.0;
        const double a = spec.ar_coefficient;
        for (std::size_t k = 1; k <= spec.p; ++k) {
            const double gamma = std::pow(a, static_cast<double>(k)) / (1.0 - a * a);
            analytic += gamma * gamma;
        }
        result.theta_analytic = analytic;
    }
    for (std::size_t n : spec.sample_sizes) {
        require(n > spec.p + 1, ErrorKind::InsufficientSample, "rate study sample sizes must exceed p + 1");
        std::vector<RateSample> block(spec.replications);
        parallel_for(spec.replications, spec.threads, [&](std::size_t r) {
            FactorModelSpec fm = FactorModelSpec::standard(1, n, replication_seed(spec.seed, 1, n, r),
                                                           spec.grid_points);
            fm.ar_coefficients = {spec.ar_coefficient};
            const Vector theta = operator_spectrum(generate_panel(fm), spec.p);
            block[r] = RateSample{n, r, theta[0], theta.size() > 1 ? theta[1] : 0.0};
        });
        result.samples.insert(result.samples.end(), block.begin(), block.end());
    }
    return result;
}

RateSummary summarize(const RateStudyResult& result, const std::vector<std::size_t>& ns) {
    RateSummary s;
    for (std::size_t n : ns) {
        double err = 0.0;
        double t2 = 0.0;
        std::size_t count = 0;
        for (const auto& x : result.samples) {
            if (x.n != n) continue;
            err += std::abs(x.theta1 - result.theta_ref);
            t2 += x.theta2;
            ++count;
        }
        require(count > 0, ErrorKind::InvalidArgument, "no rate samples for n=" + std::to_string(n));
        s.ns.push_back(n);
        s.mean_abs_err1.push_back(err / static_cast<double>(count));
        s.mean_theta2.push_back(t2 / static_cast<double>(count));
    }
    return s;
}

void write_rate_csv(std::ostream& out, const RateStudyResult& result) {
    write_csv_header(out, {"n", "replication", "theta1", "theta2", "abs_error_theta1", "sqrt_n_error_theta1",
                           "n_theta2"});
    for (const auto& x : result.samples) {
        const double nn = static_cast<double>(x.n);
        out << x.n << ',' << x.rep << ',' << format_double(x.theta1) << ',' << format_double(x.theta2) << ','
            << format_double(std::abs(x.theta1 - result.theta_ref)) << ','
            << format_double(std::sqrt(nn) * (x.theta1 - result.theta_ref)) << ',' << format_double(nn * x.theta2)
            << '\n';
    }
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, ErrorKind::InvalidArgument, "slope needs >= 2 paired points");
    const auto k = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        require(x[i] > 0.0 && y[i] > 0.0, ErrorKind::Domain, "log-log slope needs positive values");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= k;
    my /= k;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
    require(!a.empty() && !b.empty(), ErrorKind::InvalidArgument, "KS distance needs nonempty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double best = 0.0;
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return best;
}

double quantile(std::vector<double> values, double prob) {
    require(!values.empty(), ErrorKind::InvalidArgument, "quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace curvedim
