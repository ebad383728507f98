#include "curvedim/identification.hpp"

#include "curvedim/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace curvedim {

namespace {

Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

// Reorders an ascending self-adjoint spectrum into descending order.
void to_descending(Vector& values, Matrix* vectors) {
    values.reverseInPlace();
    if (vectors) *vectors = vectors->rowwise().reverse().eval();
}

// S = sum_{k=1..p} G_k applied to x without forming S.
Vector apply_lag_sum(const Matrix& yw, std::size_t p, const Vector& x) {
    const auto len = x.size();
    Vector out = Vector::Zero(len);
    for (std::size_t k = 1; k <= p; ++k) {
        const auto block = yw.middleRows(static_cast<Eigen::Index>(k), len);
        out.noalias() += block * (block.transpose() * x);
    }
    return out;
}

// Symmetric square root of a PSD matrix; tiny negative eigenvalues are clipped.
Matrix psd_sqrt(const Matrix& a, double* top = nullptr) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(a));
    if (eig.info() != Eigen::Success) fail(ErrorKind::NumericalFailure, "eigensolver failed on lag Gram sum");
    const Vector vals = eig.eigenvalues().cwiseMax(0.0);
    if (top) *top = vals.size() ? vals.maxCoeff() : 0.0;
    return eig.eigenvectors() * vals.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

double validated_theta_max(const Vector& descending) {
    return descending.size() ? std::max(descending[0], 0.0) : 0.0;
}

void clamp_floor(Vector& values) {
    const double top = validated_theta_max(values);
    for (Eigen::Index i = 0; i < values.size(); ++i)
        if (values[i] <= kEigenvalueFloor * top || top == 0.0) values[i] = 0.0;
}

}  // namespace

std::string_view route_name(EigenRoute route) noexcept {
    switch (route) {
        case EigenRoute::Auto: return "auto";
        case EigenRoute::Dual: return "dual";
        case EigenRoute::Grid: return "grid";
    }
    return "auto";
}

DualMatrix dual_matrix(const CurvePanel& panel, std::size_t p) {
    const std::size_t n = panel.size();
    require(p >= 1, ErrorKind::InvalidArgument, "lag budget p must be at least 1");
    check_lag_budget(n, p, p);
    const Matrix yw = weighted_centered_values(panel);
    const auto len = static_cast<Eigen::Index>(n - p);
    // Full n x n Gram matrix; every G_k is a diagonal block of it.
    Matrix full(yw.rows(), yw.rows());
    full.setZero();
    full.selfadjointView<Eigen::Lower>().rankUpdate(yw);
    full.triangularView<Eigen::StrictlyUpper>() = full.transpose();

    DualMatrix dm;
    dm.p = p;
    dm.n = n;
    dm.gram0 = full.topLeftCorner(len, len);
    dm.lag_sum = Matrix::Zero(len, len);
    for (std::size_t k = 1; k <= p; ++k) {
        const auto off = static_cast<Eigen::Index>(k);
        dm.lag_sum += full.block(off, off, len, len);
    }
    dm.values = dm.lag_sum * dm.gram0 / static_cast<double>(len * len);
    return dm;
}

DualSpectrum eigen_dual(const DualMatrix& dm) {
    const Eigen::Index len = dm.values.rows();
    require(len > 0 && dm.gram0.rows() == len && dm.lag_sum.rows() == len, ErrorKind::InvalidArgument,
            "dual matrix factors have inconsistent sizes");
    const double scale = 1.0 / static_cast<double>(len * len);

    double s_top = 0.0;
    const Matrix s_half = psd_sqrt(dm.lag_sum, &s_top);

    const Matrix sym = symmetrized(scale * (s_half * dm.gram0 * s_half));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.info() != Eigen::Success)
        fail(ErrorKind::NumericalFailure,
             "symmetric eigensolver did not converge on a " + std::to_string(len) + "x" + std::to_string(len) +
                 " dual matrix");

    DualSpectrum out;
    out.eigenvalues = eig.eigenvalues();
    Matrix v = eig.eigenvectors();
    to_descending(out.eigenvalues, &v);

    const double top = validated_theta_max(out.eigenvalues);
    out.vectors = s_half * v;
    std::vector<Eigen::Index> degenerate;
    for (Eigen::Index j = 0; j < len; ++j) {
        const double nrm = out.vectors.col(j).norm();
        if (nrm <= 1e-8 * std::sqrt(s_top) || nrm == 0.0 || out.eigenvalues[j] <= kEigenvalueFloor * top) {
            degenerate.push_back(j);
        } else {
            out.vectors.col(j) /= nrm;
        }
    }
    if (!degenerate.empty()) {
        // Zero eigenvalues: take null vectors of K* from its smallest singular directions.
        out.used_null_space_fallback = true;
        Eigen::BDCSVD<Matrix> svd(dm.values, Eigen::ComputeFullV);
        const Matrix& right = svd.matrixV();
        for (std::size_t i = 0; i < degenerate.size(); ++i) {
            out.vectors.col(degenerate[i]) = right.col(len - 1 - static_cast<Eigen::Index>(i));
            out.eigenvalues[degenerate[i]] = 0.0;
        }
    }

    const double radius = std::max(top, 1e-300);
    for (Eigen::Index j = 0; j < len; ++j) {
        const Vector r = dm.values * out.vectors.col(j) - out.eigenvalues[j] * out.vectors.col(j);
        out.max_relative_residual = std::max(out.max_relative_residual, r.norm() / radius);
    }
    return out;
}

std::vector<Curve> eigenfunctions_from_dual(const CurvePanel& panel, const Matrix& dual_vectors,
                                            std::size_t count) {
    require(count <= static_cast<std::size_t>(dual_vectors.cols()), ErrorKind::Bounds,
            "requested " + std::to_string(count) + " eigenfunctions but only " +
                std::to_string(dual_vectors.cols()) + " dual vectors exist");
    const auto len = dual_vectors.rows();
    require(len <= static_cast<Eigen::Index>(panel.size()), ErrorKind::Bounds, "dual vectors longer than the panel");
    const Matrix c = centered_values(panel);
    std::vector<Curve> out;
    out.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
        Vector f = c.topRows(len).transpose() * dual_vectors.col(static_cast<Eigen::Index>(j));
        out.emplace_back(panel.grid(), std::move(f));
    }
    return out;
}

GramSchmidtResult gram_schmidt(const std::vector<Curve>& curves) {
    require(!curves.empty(), ErrorKind::InvalidArgument, "gram_schmidt needs at least one curve");
    const Grid& grid = curves.front().grid;
    GramSchmidtResult out;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        require_same_grid(grid, curves[i].grid);
        Vector v = curves[i].values;
        const double original = std::sqrt(inner_product(grid, v, v));
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : out.basis) v -= inner_product(grid, q.values, v) * q.values;
        const double remaining = std::sqrt(inner_product(grid, v, v));
        if (original == 0.0 || remaining < 1e-10 * original) {
            out.dropped.push_back(i);
            continue;
        }
        out.basis.emplace_back(grid, v / remaining);
    }
    return out;
}

void normalize_sign(Curve& curve) {
    if (curve.values.size() == 0) return;
    Eigen::Index idx = 0;
    curve.values.cwiseAbs().maxCoeff(&idx);
    if (curve.values[idx] < 0.0) curve.values = -curve.values;
}

Matrix grid_operator(const CurvePanel& panel, std::size_t p) {
    const std::size_t n = panel.size();
    require(p >= 1, ErrorKind::InvalidArgument, "lag budget p must be at least 1");
    check_lag_budget(n, p, p);
    const Matrix yw = weighted_centered_values(panel);
    const auto len = static_cast<Eigen::Index>(n - p);
    const auto m = yw.cols();
    const auto head = yw.topRows(len);
    Matrix h = Matrix::Zero(m, m);
    Matrix cross(m, m);
    for (std::size_t k = 1; k <= p; ++k) {
        cross.noalias() = head.transpose() * yw.middleRows(static_cast<Eigen::Index>(k), len);
        h.selfadjointView<Eigen::Lower>().rankUpdate(cross);
    }
    h.triangularView<Eigen::StrictlyUpper>() = h.transpose();
    return h / static_cast<double>(len * len);
}

namespace {

EigenRoute resolve(EigenRoute route, const CurvePanel& panel, std::size_t p) {
    if (route != EigenRoute::Auto) return route;
    return (panel.size() - std::min(p, panel.size()) <= panel.grid().size()) ? EigenRoute::Dual : EigenRoute::Grid;
}

}  // namespace

Vector operator_spectrum(const CurvePanel& panel, std::size_t p, EigenRoute route) {
    require(p >= 1, ErrorKind::InvalidArgument, "lag budget p must be at least 1");
    check_lag_budget(panel.size(), p, p);
    Vector values;
    if (resolve(route, panel, p) == EigenRoute::Grid) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(grid_operator(panel, p), Eigen::EigenvaluesOnly);
        if (eig.info() != Eigen::Success) fail(ErrorKind::NumericalFailure, "eigensolver failed on grid operator");
        values = eig.eigenvalues();
        to_descending(values, nullptr);
    } else {
        const DualMatrix dm = dual_matrix(panel, p);
        const double scale = 1.0 / static_cast<double>(dm.values.rows() * dm.values.rows());
        const Matrix s_half = psd_sqrt(dm.lag_sum);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(scale * (s_half * dm.gram0 * s_half)),
                                                  Eigen::EigenvaluesOnly);
        if (eig.info() != Eigen::Success) fail(ErrorKind::NumericalFailure, "eigensolver failed on dual matrix");
        values = eig.eigenvalues();
        to_descending(values, nullptr);
    }
    clamp_floor(values);
    return values;
}

std::size_t numerical_rank(const Vector& eigenvalues) {
    if (eigenvalues.size() == 0 || eigenvalues[0] <= 0.0) return 0;
    const double cut = kEigenvalueFloor * eigenvalues[0];
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
        if (eigenvalues[i] > cut) ++r;
    return r;
}

EigenDecomposition identify(const CurvePanel& panel, const IdentifyOptions& options) {
    const std::size_t p = options.p;
    require(p >= 1, ErrorKind::InvalidArgument, "lag budget p must be at least 1");
    check_lag_budget(panel.size(), p, p);
    EigenDecomposition out;
    out.p = p;
    out.route = resolve(options.route, panel, p);
    const auto len = static_cast<Eigen::Index>(panel.size() - p);

    std::vector<Curve> raw;
    if (out.route == EigenRoute::Dual) {
        DualSpectrum spec = eigen_dual(dual_matrix(panel, p));
        out.eigenvalues = spec.eigenvalues;
        clamp_floor(out.eigenvalues);
        const std::size_t count = std::min(options.max_functions, numerical_rank(out.eigenvalues));
        out.dual_vectors = spec.vectors.leftCols(static_cast<Eigen::Index>(count));
        raw = eigenfunctions_from_dual(panel, out.dual_vectors, count);
    } else {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(grid_operator(panel, p));
        if (eig.info() != Eigen::Success) fail(ErrorKind::NumericalFailure, "eigensolver failed on grid operator");
        out.eigenvalues = eig.eigenvalues();
        Matrix v = eig.eigenvectors();
        to_descending(out.eigenvalues, &v);
        clamp_floor(out.eigenvalues);
        const std::size_t count = std::min(options.max_functions, numerical_rank(out.eigenvalues));
        const Matrix yw = weighted_centered_values(panel);
        const Vector inv_sqrt_w = panel.grid().sqrt_weights().cwiseInverse();
        out.dual_vectors.resize(len, static_cast<Eigen::Index>(count));
        for (std::size_t j = 0; j < count; ++j) {
            const auto col = static_cast<Eigen::Index>(j);
            Vector gamma = apply_lag_sum(yw, p, yw.topRows(len) * v.col(col));
            const double nrm = gamma.norm();
            if (nrm > 0.0) gamma /= nrm;
            out.dual_vectors.col(col) = gamma;
            raw.emplace_back(panel.grid(), inv_sqrt_w.cwiseProduct(v.col(col)));
        }
    }

    if (!raw.empty()) {
        GramSchmidtResult gs = gram_schmidt(raw);
        out.eigenfunctions = std::move(gs.basis);
        for (auto& f : out.eigenfunctions) normalize_sign(f);
        // Keep dual vectors aligned with the surviving eigenfunctions.
        if (!gs.dropped.empty()) {
            Matrix kept(len, static_cast<Eigen::Index>(out.eigenfunctions.size()));
            Eigen::Index c = 0;
            for (std::size_t j = 0; j < raw.size(); ++j)
                if (std::find(gs.dropped.begin(), gs.dropped.end(), j) == gs.dropped.end())
                    kept.col(c++) = out.dual_vectors.col(static_cast<Eigen::Index>(j));
            out.dual_vectors = std::move(kept);
        }
    }
    out.count = out.eigenfunctions.size();
    return out;
}

LoadingsSeries loadings(const CurvePanel& panel, const std::vector<Curve>& eigenfunctions) {
    const auto d = static_cast<Eigen::Index>(eigenfunctions.size());
    const Grid& grid = panel.grid();
    Matrix basis(static_cast<Eigen::Index>(grid.size()), d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const Curve& f = eigenfunctions[static_cast<std::size_t>(j)];
        require_same_grid(grid, f.grid);
        basis.col(j) = f.values;
    }
    if (d > 0) {
        const Matrix gram = basis.transpose() * grid.weights().asDiagonal() * basis;
        const double err = (gram - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
        require(err <= 1e-6, ErrorKind::Validation,
                "eigenfunctions must be orthonormal (max Gram deviation " + std::to_string(err) + ")");
    }
    LoadingsSeries out;
    out.values = centered_values(panel) * grid.weights().asDiagonal() * basis;
    out.eigenfunctions = eigenfunctions;
    return out;
}

CurvePanel reconstruct(const CurvePanel& panel, const std::vector<Curve>& eigenfunctions,
                       const LoadingsSeries& loadings) {
    const auto d = static_cast<Eigen::Index>(eigenfunctions.size());
    require(loadings.values.cols() == d && loadings.values.rows() == static_cast<Eigen::Index>(panel.size()),
            ErrorKind::InvalidArgument, "loadings shape does not match panel and eigenfunctions");
    const Grid& grid = panel.grid();
    Matrix basis(d, static_cast<Eigen::Index>(grid.size()));
    for (Eigen::Index j = 0; j < d; ++j) {
        require_same_grid(grid, eigenfunctions[static_cast<std::size_t>(j)].grid);
        basis.row(j) = eigenfunctions[static_cast<std::size_t>(j)].values.transpose();
    }
    Matrix fitted = loadings.values * basis;
    fitted.rowwise() += panel.values().colwise().mean();
    return CurvePanel(grid, std::move(fitted));
}

Matrix residuals(const CurvePanel& panel, const CurvePanel& fitted) {
    require_same_grid(panel.grid(), fitted.grid());
    require(panel.size() == fitted.size(), ErrorKind::InvalidArgument, "panel sizes differ");
    return panel.values() - fitted.values();
}

std::vector<Curve> leading_eigenfunctions(const CurvePanel& panel, std::size_t p, std::size_t count,
                                          EigenRoute route) {
    if (count == 0) return {};
    IdentifyOptions opts;
    opts.p = p;
    opts.max_functions = count;
    opts.route = route;
    return identify(panel, opts).eigenfunctions;
}

}  // namespace curvedim
