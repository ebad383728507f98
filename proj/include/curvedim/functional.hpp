#pragma once

// Curves sampled on a shared grid, trapezoid inner products, and the lag
// autocovariance estimators built from a panel of curves.

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <vector>

namespace curvedim {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Strictly increasing abscissae on a compact interval [front, back].
/// Copies share the same immutable storage.
class Grid {
public:
    explicit Grid(Vector points);

    static Grid uniform(double lo, double hi, std::size_t count);

    std::size_t size() const noexcept { return static_cast<std::size_t>(data_->points.size()); }
    const Vector& points() const noexcept { return data_->points; }
    /// Trapezoid quadrature weights; sum equals back() - front().
    const Vector& weights() const noexcept { return data_->weights; }
    const Vector& sqrt_weights() const noexcept { return data_->sqrt_weights; }
    double front() const noexcept { return data_->points[0]; }
    double back() const noexcept { return data_->points[data_->points.size() - 1]; }

    bool operator==(const Grid& other) const noexcept;

private:
    struct Data {
        Vector points;
        Vector weights;
        Vector sqrt_weights;
    };
    std::shared_ptr<const Data> data_;
};

struct Curve {
    Grid grid;
    Vector values;

    Curve(Grid g, Vector v);
};

/// n >= 2 finite curves on one grid; row t of values() is Y_t.
class CurvePanel {
public:
    CurvePanel(Grid grid, Matrix values);

    const Grid& grid() const noexcept { return grid_; }
    const Matrix& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    Curve curve(std::size_t t) const;

private:
    Grid grid_;
    Matrix values_;
};

struct LagCovKernel {
    Grid grid;
    std::size_t lag = 0;
    Matrix values;  // (i, j) = M_k(u_i, v_j)
};

void require_same_grid(const Grid& a, const Grid& b);

/// Trapezoid-rule approximation of the L2 inner product.
double inner_product(const Curve& f, const Curve& g);
double inner_product(const Grid& grid, const Eigen::Ref<const Vector>& f,
                     const Eigen::Ref<const Vector>& g);
double norm(const Curve& f);

Curve mean_curve(const CurvePanel& panel);

/// Rows are Y_t - Ybar, with Ybar averaged over all n curves.
Matrix centered_values(const CurvePanel& panel);

/// Centered curves scaled column-wise by sqrt(w) so that the Euclidean
/// product of two rows equals their trapezoid inner product.
Matrix weighted_centered_values(const CurvePanel& panel);

/// Lag-k autocovariance kernel; the sum always runs over t = 1..n-p.
LagCovKernel lag_cov_kernel(const CurvePanel& panel, std::size_t k, std::size_t p);

/// (n-p) x (n-p) matrix whose (t, s) entry is <Y_{t+k} - Ybar, Y_{s+k} - Ybar>.
Matrix gram_matrix(const CurvePanel& panel, std::size_t k, std::size_t p);

/// Validates 0 <= k <= p < n.
void check_lag_budget(std::size_t n, std::size_t k, std::size_t p);

}  // namespace curvedim
