#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include <json.hpp>

#include "tubewcp/analysis.hpp"
#include "tubewcp/fermi.hpp"

namespace tubewcp::pde {

inline constexpr double kSolverTol = 1e-10;
inline constexpr double kCgTol = 1e-12;
inline constexpr double kPicardDamping = 0.7;
inline constexpr int kMaxPicard = 500;

struct AxisSpec {
    int n = 0;
    double lo = 0.0, hi = 0.0;
    bool periodic = false;
    double h = 0.0;
};

/// Structured tensor grid over the chart: base axes first, then normal
/// axes. Normal fibers are the open box inscribed in the eps-ball
/// (half-width eps/sqrt(k)), so the whole grid stays inside the tube.
/// Caches per-node sqrt(det g), the inverse metric, the weight and the
/// ambient point.
struct TubeGrid {
    fermi::FermiChart chart;
    std::vector<AxisSpec> axes;
    int base_axes = 1;
    int normal_axes = 1;
    int total = 0;
    std::vector<int> strides;

    std::vector<std::vector<double>> coords;  // per-axis node coordinates
    std::vector<double> sqrt_det;
    std::vector<double> weight_a;
    std::vector<double> ginv;      // dims x dims, row-major per node
    std::vector<double> node_vol;  // trapezoid cell volume in coordinates
    std::vector<uint8_t> boundary;
    std::vector<Eigen::VectorXd> z;

    int dims() const { return base_axes + normal_axes; }
    int index(std::span<const int> idx) const;
    void unindex(int lin, std::span<int> idx) const;
    double ginv_at(int lin, int d, int e) const {
        return ginv[static_cast<std::size_t>(lin) * dims() * dims() + d * dims() + e];
    }
    /// Coordinates (x..., y...) of a node.
    std::vector<double> node_coords(int lin) const;
};

/// ny is the node count per normal axis; base axes get nx nodes each.
TubeGrid make_tube_grid(const fermi::FermiChart& chart, int nx, int ny,
                        const analysis::Weight& weight);

enum class FieldKind { Solution, TestFn, Residual };

struct GridField {
    std::vector<double> values;
    FieldKind kind = FieldKind::Solution;
};

using BoundaryData =
    std::function<double(const Eigen::VectorXd& z, std::span<const double> xy)>;

struct EllipticProblem {
    analysis::Weight weight;
    double lambda = 0.0;
    double q = 2.0;  // gradient exponent, q >= 1
    analysis::Reaction reaction;
    BoundaryData dirichlet;
    const TubeGrid* grid = nullptr;
};

/// Energy-form discretization of -div(a grad_g u): K is symmetric with
/// psi^T K u = int a g^{ij} d_i u d_j psi sqrt(det g) (trapezoid), diagonal
/// metric terms in conservative flux form with harmonic face averaging,
/// mixed terms node-centered. mass holds the trapezoid measure
/// sqrt(det g) * cell volume, so (K u) / mass is the strong operator.
struct DivergenceOperator {
    Eigen::SparseMatrix<double> K;
    Eigen::VectorXd mass;
};

DivergenceOperator assemble_divergence_operator(const TubeGrid& grid,
                                                const analysis::Weight& weight);

/// |grad u|_g = sqrt(g^{ij} D_i u D_j u), centered differences (one-sided
/// second order at non-periodic ends).
GridField gradient_norm(const TubeGrid& grid, const GridField& field);

struct SolverParams {
    double tol = kSolverTol;
    int max_iter = kMaxPicard;
    double damping = kPicardDamping;
    double cg_tol = kCgTol;
};

struct SolveResult {
    GridField u;
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> residual_history;
};

/// Damped Picard iteration for
///   -div(a grad u) + Lambda |grad u|^q = f(z, u)
/// with Dirichlet data imposed exactly on boundary nodes. The gradient term
/// and the reaction are frozen at the previous iterate; linear solves use
/// Jacobi-preconditioned CG. Throws NoConvergence after max_iter.
SolveResult solve(const EllipticProblem& problem, const SolverParams& params = {});

/// Strong residual -div(a grad u) + Lambda |grad u|^q - f(z, u) at interior
/// nodes (zero at boundary slots).
GridField strong_residual(const EllipticProblem& problem, const GridField& u);

/// int (a grad u . grad psi + Lambda |grad u|^q psi - f(z,u) psi) dvol_g,
/// evaluated with the same discrete energy form and trapezoid weights as
/// the solver, fixed summation order. <= 0 certifies u as a subsolution
/// against psi, >= 0 a supersolution. Throws InvalidTestFunction unless
/// psi >= 0 and psi = 0 on boundary nodes.
double weak_residual(const GridField& u, const GridField& psi, const EllipticProblem& problem);

/// Trapezoid integral of per-node values * sqrt(det g) (deterministic
/// reduction); mask may be empty or per-node {0,1}.
double integrate(const TubeGrid& grid, std::span<const double> values,
                 std::span<const double> mask = {});

void write_field_csv(const TubeGrid& grid, const GridField& field, std::ostream& os);
nlohmann::json grid_meta_json(const TubeGrid& grid);

}  // namespace tubewcp::pde
