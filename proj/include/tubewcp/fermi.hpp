#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "tubewcp/errors.hpp"
#include "tubewcp/manifolds.hpp"

namespace tubewcp::fermi {

/// Determinant threshold below which the pullback metric is declared
/// degenerate.
inline constexpr double kDetMin = 1e-12;

/// Safety factor applied to sampled suprema (K1 and friends): sampling
/// underestimates the true sup, the factor keeps certified bounds
/// conservative.
inline constexpr double kSupSafety = 1.05;

/// Metric components of Phi*g at one point, in chart coordinates
/// (x^1..x^{n-k}, y^1..y^k).
struct MetricSample {
    Eigen::MatrixXd g;
    double det = 0.0;
    Eigen::MatrixXd inv;
};

/// Coefficient tensors of the decomposition
///   Phi*g = h + sum_i y^i (r^i + 2 t^i) + sum_ij y^i y^j s^ij.
/// r[i], s[i][j] are (n-k)x(n-k) over dx^a dx^b (s stored symmetrized in
/// the tensor indices, s[i][j] == s[j][i]); t[i] is (n-k)xk over dx^a dy^j.
struct RtsTensors {
    std::vector<Eigen::MatrixXd> r;
    std::vector<Eigen::MatrixXd> t;
    std::vector<std::vector<Eigen::MatrixXd>> s;
};

/// Fermi chart V x B(0, eps) -> R^n, Phi(x, y) = phi(x) + sum_i y^i E^i(x).
///
/// Normal frames: plane curves use E^1 = rot90(T); space curves use
/// (E^1, E^2) = (N, -B) so that the structure equations
/// dE^1/dx = -kappa T - tau E^2, dE^2/dx = tau E^1 hold with the classical
/// torsion reported by frenet_frame; surfaces use the parametrization
/// normal.
struct FermiChart {
    manifolds::NamedManifold base;
    double eps = 0.0;
    int k = 1;  // codimension
    int n = 2;  // ambient dimension

    int base_dims() const { return n - k; }

    /// Maps x into the fundamental domain on periodic axes; throws
    /// OutOfChart when a non-periodic coordinate leaves the window.
    std::array<double, 2> clamp_base(std::span<const double> x) const;

    Eigen::VectorXd base_point(std::span<const double> x) const;
    /// d phi / d x_a
    Eigen::VectorXd base_tangent(int axis, std::span<const double> x) const;
    /// E^1..E^k at x
    std::vector<Eigen::VectorXd> frame(std::span<const double> x) const;
    /// d E^i / d x_axis
    std::vector<Eigen::VectorXd> frame_derivative(int axis, std::span<const double> x) const;

    /// Induced base metric h' at x.
    Eigen::MatrixXd base_metric(std::span<const double> x) const;
};

/// Builds a chart over a named manifold. Checks frame orthonormality on a
/// coarse sample and that eps stays below the sampled local fold radius;
/// violations throw InvalidChart.
FermiChart make_chart(manifolds::NamedManifold base, double eps);

/// Phi(x, y). Throws OutOfChart unless x in V and |y| < eps.
Eigen::VectorXd fermi_map(const FermiChart& chart, std::span<const double> x,
                          std::span<const double> y);

/// g_ab = d_a Phi . d_b Phi from the (analytic or finite-difference)
/// Jacobian. Throws DegenerateMetric if det <= kDetMin.
MetricSample pullback_metric_direct(const FermiChart& chart, std::span<const double> x,
                                    std::span<const double> y);

/// The r/t/s coefficient tensors at x.
RtsTensors rts_tensors(const FermiChart& chart, std::span<const double> x);

/// Reassembles the metric from (h, r, t, s); used to check the
/// decomposition against pullback_metric_direct.
MetricSample reconstruct_metric(const FermiChart& chart, const RtsTensors& rts,
                                std::span<const double> x, std::span<const double> y);

/// Closed-form metric for the three worked bases: plane curve
/// (1 - kappa y)^2 dx^2 + dy^2; space curve via kappa/tau; surface
/// I - 2y II + y^2 III + dy^2.
MetricSample pullback_metric_closed_form(const FermiChart& chart, std::span<const double> x,
                                         std::span<const double> y);

/// lambda = sqrt(det Phi*g / det h); equals 1 on the base.
double volume_distortion(const FermiChart& chart, std::span<const double> x,
                         std::span<const double> y);

/// sqrt(det h'); the base volume density (1 for arc-length curves).
double base_density_mu(const FermiChart& chart, std::span<const double> x);

/// Sampling density for the K1 scan. offset in [0, 1) shifts nodes by a
/// fraction of the spacing (hold-out grids use a nonzero offset).
struct SampleGrid {
    int base_per_axis = 32;
    int normal_radial = 8;
    int normal_angular = 8;  // ignored for k = 1
    double offset = 0.0;
};

/// K1 = sup |lambda - 1| / |y| over the grid, inflated by kSupSafety.
/// Throws EmptySample on an empty grid, and requires eps < 1.
double estimate_K1(const FermiChart& chart, const SampleGrid& grid);

/// eps1 = min(1, 1 / (2 K1)); K1 = 0 gives 1.
double epsilon1(double K1);

/// Simpson integral of f(x, y) lambda mu over [x_lo, x_hi] x (-eps, eps)
/// for 1D-base codimension-1 charts, optionally weighted by a partition
/// function rho(x). Panel counts must be even.
double tube_integral_simpson(const FermiChart& chart,
                             const std::function<double(double, double)>& f, double x_lo,
                             double x_hi, int base_panels, int fiber_panels,
                             const std::function<double(double)>& rho = nullptr);

/// Chart description as a JSON document {base, k, eps, domain, periodic}.
nlohmann::json chart_to_json(const FermiChart& chart);

/// Metric/lambda grid as CSV rows "x[, x2], y[, y2], g entries..., lambda".
void write_metric_grid_csv(const FermiChart& chart, std::ostream& os, int base_samples,
                           int normal_samples);

}  // namespace tubewcp::fermi
