#include "curvedim/ts_models.hpp"

#include "curvedim/error.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace curvedim {

std::vector<double> ar1_simulate(double coefficient, std::size_t length, std::size_t burn_in, Rng& rng) {
    require(std::abs(coefficient) < 1.0, ErrorKind::Nonstationary,
            "AR(1) coefficient " + std::to_string(coefficient) + " is not stationary (|a| must be < 1)");
    require(length >= 1, ErrorKind::InvalidArgument, "series length must be at least 1");
    std::normal_distribution<double> noise(0.0, 1.0);
    double x = 0.0;
    for (std::size_t i = 0; i < burn_in; ++i) x = coefficient * x + noise(rng);
    std::vector<double> out(length);
    for (auto& v : out) {
        x = coefficient * x + noise(rng);
        v = x;
    }
    return out;
}

std::vector<double> ar1_simulate(double coefficient, std::size_t length, std::size_t burn_in, std::uint64_t seed) {
    Rng rng = make_stream(seed, 0);
    return ar1_simulate(coefficient, length, burn_in, rng);
}

std::vector<Matrix> sample_autocovariances(const Matrix& series, std::size_t max_lag) {
    const auto T = series.rows();
    require(T > static_cast<Eigen::Index>(max_lag), ErrorKind::InsufficientSample,
            "series of length " + std::to_string(T) + " is too short for lag " + std::to_string(max_lag));
    const Matrix c = series.rowwise() - series.colwise().mean();
    std::vector<Matrix> out;
    out.reserve(max_lag + 1);
    for (std::size_t k = 0; k <= max_lag; ++k) {
        const auto len = T - static_cast<Eigen::Index>(k);
        out.push_back(c.bottomRows(len).transpose() * c.topRows(len) / static_cast<double>(T));
    }
    out[0] = 0.5 * (out[0] + out[0].transpose()).eval();
    return out;
}

VarFit var_fit_yule_walker(const Matrix& series, std::size_t order) {
    const auto T = static_cast<std::size_t>(series.rows());
    const auto d = static_cast<std::size_t>(series.cols());
    require(d >= 1, ErrorKind::InvalidArgument, "VAR series needs at least one component");
    require(T > order * d + 1, ErrorKind::InsufficientSample,
            "VAR(" + std::to_string(order) + ") on " + std::to_string(d) + " series needs more than " +
                std::to_string(order * d + 1) + " observations");
    const auto cov = sample_autocovariances(series, order);
    const auto dd = static_cast<Eigen::Index>(d);

    VarFit fit;
    fit.order = order;
    if (order == 0) {
        fit.innovation_covariance = cov[0];
        return fit;
    }
    const auto dim = static_cast<Eigen::Index>(order) * dd;
    Matrix toeplitz(dim, dim);
    Matrix rhs(dim, dd);  // [C_1 ... C_tau]'
    for (std::size_t i = 0; i < order; ++i) {
        for (std::size_t j = 0; j < order; ++j) {
            const Matrix block = j >= i ? cov[j - i] : Matrix(cov[i - j].transpose());
            toeplitz.block(static_cast<Eigen::Index>(i) * dd, static_cast<Eigen::Index>(j) * dd, dd, dd) = block;
        }
        rhs.middleRows(static_cast<Eigen::Index>(i) * dd, dd) = cov[i + 1].transpose();
    }
    Eigen::LLT<Matrix> llt(toeplitz);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-12)
        fail(ErrorKind::Conditioning, "block-Toeplitz Yule-Walker system is singular");
    const Matrix stacked = llt.solve(rhs);  // [A_1 ... A_tau]'
    Matrix sigma = cov[0];
    for (std::size_t k = 0; k < order; ++k) {
        Matrix a = stacked.middleRows(static_cast<Eigen::Index>(k) * dd, dd).transpose();
        sigma -= a * cov[k + 1].transpose();
        fit.coefficients.push_back(std::move(a));
    }
    fit.innovation_covariance = 0.5 * (sigma + sigma.transpose());
    if (!fit.innovation_covariance.allFinite())
        fail(ErrorKind::NumericalFailure, "non-finite innovation covariance");
    return fit;
}

double aic(const VarFit& fit, std::size_t length) {
    const Eigen::Index d = fit.innovation_covariance.rows();
    const double det = fit.innovation_covariance.determinant();
    require(det > 0.0, ErrorKind::Conditioning, "innovation covariance is singular");
    return static_cast<double>(length) * std::log(det) + 2.0 * static_cast<double>(fit.order * d * d);
}

AicSelection aic_select(const Matrix& series, std::size_t max_order) {
    AicSelection sel;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t tau = 0; tau <= max_order; ++tau) {
        VarFit fit = var_fit_yule_walker(series, tau);
        const double value = aic(fit, static_cast<std::size_t>(series.rows()));
        sel.raw[tau] = value;
        if (value < best) {
            best = value;
            sel.order = tau;
            sel.fit = std::move(fit);
        }
    }
    for (const auto& [tau, value] : sel.raw) sel.centered[tau] = tau == sel.order ? 0.0 : value - best;
    sel.fit.aic_table = sel.centered;
    return sel;
}

Matrix var_residuals(const Matrix& series, const VarFit& fit) {
    const auto tau = static_cast<Eigen::Index>(fit.order);
    require(series.rows() > tau, ErrorKind::InsufficientSample, "series shorter than VAR order");
    Matrix out = series.bottomRows(series.rows() - tau);
    for (Eigen::Index k = 1; k <= tau; ++k)
        out -= series.middleRows(tau - k, series.rows() - tau) * fit.coefficients[static_cast<std::size_t>(k - 1)].transpose();
    return out;
}

double companion_spectral_radius(const VarFit& fit) {
    if (fit.order == 0) return 0.0;
    const Eigen::Index d = fit.coefficients.front().rows();
    const Eigen::Index dim = d * static_cast<Eigen::Index>(fit.order);
    Matrix comp = Matrix::Zero(dim, dim);
    for (std::size_t k = 0; k < fit.order; ++k)
        comp.block(0, static_cast<Eigen::Index>(k) * d, d, d) = fit.coefficients[k];
    if (dim > d) comp.bottomLeftCorner(dim - d, dim - d).setIdentity();
    Eigen::EigenSolver<Matrix> eig(comp, false);
    if (eig.info() != Eigen::Success) fail(ErrorKind::NumericalFailure, "companion eigensolver failed");
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix var_simulate(const std::vector<Matrix>& coefficients, const Matrix& innovation_chol, std::size_t length,
                    std::size_t burn_in, std::uint64_t seed) {
    const Eigen::Index d = innovation_chol.rows();
    const std::size_t tau = coefficients.size();
    Rng rng = make_stream(seed, 0);
    std::normal_distribution<double> noise(0.0, 1.0);
    const std::size_t total = length + burn_in;
    Matrix x = Matrix::Zero(static_cast<Eigen::Index>(total), d);
    Vector z(d);
    for (std::size_t t = 0; t < total; ++t) {
        for (Eigen::Index i = 0; i < d; ++i) z[i] = noise(rng);
        Vector v = innovation_chol * z;
        for (std::size_t k = 1; k <= tau && k <= t; ++k)
            v += coefficients[k - 1] * x.row(static_cast<Eigen::Index>(t - k)).transpose();
        x.row(static_cast<Eigen::Index>(t)) = v.transpose();
    }
    return x.bottomRows(static_cast<Eigen::Index>(length));
}

double chi_square_upper_tail(double x, double dof) {
    require(dof > 0.0, ErrorKind::InvalidArgument, "chi-square degrees of freedom must be positive");
    if (x <= 0.0) return 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(dof), x));
}

std::vector<double> sample_acf(const std::vector<double>& series, std::size_t q) {
    const std::size_t n = series.size();
    require(n > q, ErrorKind::InsufficientSample, "series must be longer than the maximum lag");
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);
    double denom = 0.0;
    for (double v : series) denom += (v - mean) * (v - mean);
    require(denom > 0.0, ErrorKind::UndefinedAutocorrelation, "constant series has no autocorrelation");
    std::vector<double> acf(q);
    for (std::size_t k = 1; k <= q; ++k) {
        double num = 0.0;
        for (std::size_t t = 0; t + k < n; ++t) num += (series[t] - mean) * (series[t + k] - mean);
        acf[k - 1] = num / denom;
    }
    return acf;
}

double ljung_box_statistic(const std::vector<double>& acf, std::size_t n) {
    require(n > acf.size(), ErrorKind::InsufficientSample, "series must be longer than the maximum lag");
    const double nn = static_cast<double>(n);
    double sum = 0.0;
    for (std::size_t k = 1; k <= acf.size(); ++k) sum += acf[k - 1] * acf[k - 1] / (nn - static_cast<double>(k));
    return nn * (nn + 2.0) * sum;
}

PortmanteauResult ljung_box(const std::vector<double>& series, std::size_t q) {
    require(q >= 1, ErrorKind::InvalidArgument, "Ljung-Box needs q >= 1");
    PortmanteauResult r;
    r.lags = q;
    r.dof = q;
    r.statistic = ljung_box_statistic(sample_acf(series, q), series.size());
    r.pvalue = chi_square_upper_tail(r.statistic, static_cast<double>(q));
    return r;
}

PortmanteauResult multivariate_portmanteau(const Matrix& series, std::size_t q, std::size_t fitted_order) {
    require(q >= 1, ErrorKind::InvalidArgument, "portmanteau test needs q >= 1");
    const auto T = static_cast<std::size_t>(series.rows());
    require(T > q, ErrorKind::InsufficientSample, "series must be longer than the maximum lag");
    const auto cov = sample_autocovariances(series, q);
    Eigen::SelfAdjointEigenSolver<Matrix> c0(cov[0]);
    if (c0.info() != Eigen::Success || c0.eigenvalues()[0] <= 1e-12 * c0.eigenvalues().maxCoeff())
        fail(ErrorKind::Conditioning, "sample covariance is singular");
    const Matrix inv = c0.eigenvectors() * c0.eigenvalues().cwiseInverse().asDiagonal() * c0.eigenvectors().transpose();
    const double tt = static_cast<double>(T);
    double sum = 0.0;
    for (std::size_t k = 1; k <= q; ++k)
        sum += (cov[k].transpose() * inv * cov[k] * inv).trace() / (tt - static_cast<double>(k));
    const std::size_t d = static_cast<std::size_t>(series.cols());
    PortmanteauResult r;
    r.lags = q;
    r.statistic = std::max(0.0, tt * (tt + 2.0) * sum);
    r.dof = q > fitted_order ? d * d * (q - fitted_order) : 1;
    r.dof = std::max<std::size_t>(r.dof, 1);
    r.pvalue = chi_square_upper_tail(r.statistic, static_cast<double>(r.dof));
    return r;
}

}  // namespace curvedim
