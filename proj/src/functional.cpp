#include "curvedim/functional.hpp"

#include "curvedim/error.hpp"

#include <cmath>
#include <string>

namespace curvedim {

std::string_view error_kind_name(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Parse: return "parse";
        case ErrorKind::GridMismatch: return "grid-mismatch";
        case ErrorKind::InsufficientSample: return "insufficient-sample";
        case ErrorKind::InvalidArgument: return "invalid-argument";
        case ErrorKind::Bounds: return "bounds";
        case ErrorKind::Validation: return "validation";
        case ErrorKind::Conditioning: return "conditioning";
        case ErrorKind::NumericalFailure: return "numerical-failure";
        case ErrorKind::Nonstationary: return "nonstationary";
        case ErrorKind::Domain: return "domain";
        case ErrorKind::DegenerateDay: return "degenerate-day";
        case ErrorKind::MissingOpening: return "missing-opening";
        case ErrorKind::UndefinedAutocorrelation: return "undefined-autocorrelation";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

Grid::Grid(Vector points) {
    const Eigen::Index m = points.size();
    require(m >= 2, ErrorKind::InvalidArgument, "grid needs at least 2 points");
    for (Eigen::Index i = 0; i < m; ++i) {
        require(std::isfinite(points[i]), ErrorKind::InvalidArgument, "grid points must be finite");
        if (i > 0)
            require(points[i] > points[i - 1], ErrorKind::InvalidArgument,
                    "grid points must be strictly increasing (index " + std::to_string(i) + ")");
    }
    Vector w = Vector::Zero(m);
    for (Eigen::Index i = 0; i + 1 < m; ++i) {
        const double h = points[i + 1] - points[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    Vector sw = w.cwiseSqrt();
    data_ = std::make_shared<const Data>(Data{std::move(points), std::move(w), std::move(sw)});
}

Grid Grid::uniform(double lo, double hi, std::size_t count) {
    require(count >= 2, ErrorKind::InvalidArgument, "grid needs at least 2 points");
    require(lo < hi, ErrorKind::InvalidArgument, "grid interval must satisfy lo < hi");
    Vector pts(static_cast<Eigen::Index>(count));
    const double h = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) pts[static_cast<Eigen::Index>(i)] = lo + h * static_cast<double>(i);
    pts[pts.size() - 1] = hi;
    return Grid(std::move(pts));
}

bool Grid::operator==(const Grid& other) const noexcept {
    return data_ == other.data_ || data_->points == other.data_->points;
}

Curve::Curve(Grid g, Vector v) : grid(std::move(g)), values(std::move(v)) {
    require(static_cast<std::size_t>(values.size()) == grid.size(), ErrorKind::GridMismatch,
            "curve has " + std::to_string(values.size()) + " values for a grid of " +
                std::to_string(grid.size()) + " points");
}

CurvePanel::CurvePanel(Grid grid, Matrix values) : grid_(std::move(grid)), values_(std::move(values)) {
    require(values_.rows() >= 2, ErrorKind::InsufficientSample, "a curve panel needs at least 2 curves");
    require(static_cast<std::size_t>(values_.cols()) == grid_.size(), ErrorKind::GridMismatch,
            "panel has " + std::to_string(values_.cols()) + " columns for a grid of " +
                std::to_string(grid_.size()) + " points");
    require(values_.allFinite(), ErrorKind::Validation, "panel values must be finite");
}

Curve CurvePanel::curve(std::size_t t) const {
    require(t < size(), ErrorKind::Bounds, "curve index out of range");
    return Curve(grid_, values_.row(static_cast<Eigen::Index>(t)).transpose());
}

void require_same_grid(const Grid& a, const Grid& b) {
    require(a == b, ErrorKind::GridMismatch, "curves are defined on different grids");
}

double inner_product(const Grid& grid, const Eigen::Ref<const Vector>& f, const Eigen::Ref<const Vector>& g) {
    require(static_cast<std::size_t>(f.size()) == grid.size() && static_cast<std::size_t>(g.size()) == grid.size(),
            ErrorKind::GridMismatch, "curve length does not match grid");
    return (grid.weights().array() * f.array() * g.array()).sum();
}

double inner_product(const Curve& f, const Curve& g) {
    require_same_grid(f.grid, g.grid);
    return inner_product(f.grid, f.values, g.values);
}

double norm(const Curve& f) { return std::sqrt(inner_product(f, f)); }

Curve mean_curve(const CurvePanel& panel) {
    return Curve(panel.grid(), panel.values().colwise().mean().transpose());
}

Matrix centered_values(const CurvePanel& panel) {
    return panel.values().rowwise() - panel.values().colwise().mean();
}

Matrix weighted_centered_values(const CurvePanel& panel) {
    Matrix c = centered_values(panel);
    return c * panel.grid().sqrt_weights().asDiagonal();
}

void check_lag_budget(std::size_t n, std::size_t k, std::size_t p) {
    require(p < n, ErrorKind::InsufficientSample,
            "lag budget p=" + std::to_string(p) + " requires more than " + std::to_string(p) +
                " curves (have " + std::to_string(n) + ")");
    require(k <= p, ErrorKind::InvalidArgument,
            "lag k=" + std::to_string(k) + " exceeds lag budget p=" + std::to_string(p));
}

LagCovKernel lag_cov_kernel(const CurvePanel& panel, std::size_t k, std::size_t p) {
    const std::size_t n = panel.size();
    check_lag_budget(n, k, p);
    const Matrix c = centered_values(panel);
    const auto len = static_cast<Eigen::Index>(n - p);
    Matrix m = c.topRows(len).transpose() * c.middleRows(static_cast<Eigen::Index>(k), len);
    m /= static_cast<double>(len);
    if (k == 0) m = 0.5 * (m + m.transpose()).eval();
    return LagCovKernel{panel.grid(), k, std::move(m)};
}

Matrix gram_matrix(const CurvePanel& panel, std::size_t k, std::size_t p) {
    const std::size_t n = panel.size();
    check_lag_budget(n, k, p);
    const Matrix yw = weighted_centered_values(panel);
    const auto len = static_cast<Eigen::Index>(n - p);
    const auto block = yw.middleRows(static_cast<Eigen::Index>(k), len);
    Matrix g(len, len);
    g.setZero();
    g.selfadjointView<Eigen::Lower>().rankUpdate(block);
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
    return g;
}

}  // namespace curvedim
