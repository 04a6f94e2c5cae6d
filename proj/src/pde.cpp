#include "tubewcp/pde.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <algorithm>
#include <cmath>

#include "tubewcp/parallel.hpp"

namespace tubewcp::pde {

namespace {

double harmonic_mean(double a, double b) {
    if (a <= 0.0 || b <= 0.0) return 0.0;
    return 2.0 * a * b / (a + b);
}

// Difference stencil of d/dx_d at node lin: entries (neighbor, coefficient).
// Centered at interior / periodic nodes, one-sided second order at ends.
struct Stencil {
    int pts[3];
    double w[3];
    int count = 0;
};

Stencil diff_stencil(const TubeGrid& grid, int lin, int d, std::span<const int> idx) {
    const AxisSpec& ax = grid.axes[d];
    const int stride = grid.strides[d];
    const double h = ax.h;
    Stencil s;
    const int i = idx[d];
    auto wrap_neighbor = [&](int step) {
        int j = i + step;
        if (ax.periodic) {
            j = ((j % ax.n) + ax.n) % ax.n;
        }
        return lin + (j - i) * stride;
    };
    if (ax.periodic || (i > 0 && i < ax.n - 1)) {
        s.pts[0] = wrap_neighbor(1);
        s.w[0] = 0.5 / h;
        s.pts[1] = wrap_neighbor(-1);
        s.w[1] = -0.5 / h;
        s.count = 2;
    } else if (i == 0) {
        s.pts[0] = lin;
        s.w[0] = -1.5 / h;
        s.pts[1] = lin + stride;
        s.w[1] = 2.0 / h;
        s.pts[2] = lin + 2 * stride;
        s.w[2] = -0.5 / h;
        s.count = 3;
    } else {
        s.pts[0] = lin;
        s.w[0] = 1.5 / h;
        s.pts[1] = lin - stride;
        s.w[1] = -2.0 / h;
        s.pts[2] = lin - 2 * stride;
        s.w[2] = 0.5 / h;
        s.count = 3;
    }
    return s;
}

double apply_stencil(const Stencil& s, std::span<const double> v) {
    double out = 0.0;
    for (int i = 0; i < s.count; ++i) out += s.w[i] * v[s.pts[i]];
    return out;
}

}  // namespace

int TubeGrid::index(std::span<const int> idx) const {
    int lin = 0;
    for (int d = 0; d < dims(); ++d) lin += idx[d] * strides[d];
    return lin;
}

void TubeGrid::unindex(int lin, std::span<int> idx) const {
    for (int d = 0; d < dims(); ++d) {
        idx[d] = lin / strides[d];
        lin -= idx[d] * strides[d];
    }
}

std::vector<double> TubeGrid::node_coords(int lin) const {
    std::vector<int> idx(dims());
    unindex(lin, idx);
    std::vector<double> out(dims());
    for (int d = 0; d < dims(); ++d) out[d] = coords[d][idx[d]];
    return out;
}

TubeGrid make_tube_grid(const fermi::FermiChart& chart, int nx, int ny,
                        const analysis::Weight& weight) {
    if (nx < 4 || ny < 4) throw ConfigError("make_tube_grid: need nx, ny >= 4");
    TubeGrid g;
    g.chart = chart;
    g.base_axes = chart.base_dims();
    g.normal_axes = chart.k;
    const auto& dom = chart.base.domain;

    for (int a = 0; a < g.base_axes; ++a) {
        AxisSpec ax;
        ax.n = nx;
        ax.lo = dom.lo[a];
        ax.hi = dom.hi[a];
        ax.periodic = dom.periodic[a];
        ax.h = (ax.hi - ax.lo) / (ax.periodic ? nx : nx - 1);
        g.axes.push_back(ax);
    }
    const double ey = chart.eps * (1.0 - 1e-9) / std::sqrt(static_cast<double>(chart.k));
    for (int i = 0; i < g.normal_axes; ++i) {
        AxisSpec ax;
        ax.n = ny;
        ax.lo = -ey;
        ax.hi = ey;
        ax.periodic = false;
        ax.h = 2.0 * ey / (ny - 1);
        g.axes.push_back(ax);
    }

    const int dims = g.dims();
    g.strides.assign(dims, 1);
    for (int d = dims - 2; d >= 0; --d) g.strides[d] = g.strides[d + 1] * g.axes[d + 1].n;
    g.total = g.strides[0] * g.axes[0].n;

    g.coords.resize(dims);
    for (int d = 0; d < dims; ++d) {
        g.coords[d].resize(g.axes[d].n);
        for (int i = 0; i < g.axes[d].n; ++i) g.coords[d][i] = g.axes[d].lo + i * g.axes[d].h;
    }

    g.sqrt_det.resize(g.total);
    g.weight_a.resize(g.total);
    g.ginv.resize(static_cast<std::size_t>(g.total) * dims * dims);
    g.node_vol.resize(g.total);
    g.boundary.assign(g.total, 0);
    g.z.resize(g.total);

    std::vector<int> idx(dims);
    for (int lin = 0; lin < g.total; ++lin) {
        g.unindex(lin, idx);
        std::array<double, 2> x{0.0, 0.0};
        std::array<double, 2> y{0.0, 0.0};
        for (int d = 0; d < g.base_axes; ++d) x[d] = g.coords[d][idx[d]];
        for (int i = 0; i < g.normal_axes; ++i) {
            y[i] = g.coords[g.base_axes + i][idx[g.base_axes + i]];
        }

        const auto sample = fermi::pullback_metric_direct(
            chart, {x.data(), static_cast<std::size_t>(g.base_axes)},
            {y.data(), static_cast<std::size_t>(g.normal_axes)});
        g.sqrt_det[lin] = std::sqrt(sample.det);
        for (int a = 0; a < dims; ++a) {
            for (int b = 0; b < dims; ++b) {
                g.ginv[static_cast<std::size_t>(lin) * dims * dims + a * dims + b] =
                    sample.inv(a, b);
            }
        }
        Eigen::VectorXd p = chart.base_point({x.data(), 2});
        const auto E = chart.frame({x.data(), 2});
        for (int i = 0; i < chart.k; ++i) p += y[i] * E[i];
        Eigen::VectorXd yv(g.normal_axes);
        for (int i = 0; i < g.normal_axes; ++i) yv[i] = y[i];
        g.weight_a[lin] = weight.a ? weight.a(p, yv) : 1.0;
        g.z[lin] = std::move(p);

        double vol = 1.0;
        bool bdry = false;
        for (int d = 0; d < dims; ++d) {
            const auto& ax = g.axes[d];
            double w = 1.0;
            if (!ax.periodic && (idx[d] == 0 || idx[d] == ax.n - 1)) {
                w = 0.5;
                bdry = true;
            }
            vol *= ax.h * w;
        }
        g.node_vol[lin] = vol;
        g.boundary[lin] = bdry ? 1 : 0;
    }
    return g;
}

DivergenceOperator assemble_divergence_operator(const TubeGrid& grid,
                                                const analysis::Weight& weight) {
    const int dims = grid.dims();
    const int N = grid.total;

    // per-node weight (grid caches the construction weight; accept overrides)
    std::vector<double> a(N);
    {
        std::vector<int> idx(dims);
        for (int lin = 0; lin < N; ++lin) {
            if (weight.a) {
                grid.unindex(lin, idx);
                Eigen::VectorXd yv(grid.normal_axes);
                for (int i = 0; i < grid.normal_axes; ++i) {
                    yv[i] = grid.coords[grid.base_axes + i][idx[grid.base_axes + i]];
                }
                a[lin] = weight.a(grid.z[lin], yv);
            } else {
                a[lin] = grid.weight_a[lin];
            }
        }
    }

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(N) * (4 * dims + 18));

    std::vector<int> idx(dims);
    // diagonal terms: conservative flux form over links
    for (int d = 0; d < dims; ++d) {
        const auto& ax = grid.axes[d];
        for (int lin = 0; lin < N; ++lin) {
            grid.unindex(lin, idx);
            const int i = idx[d];
            if (!ax.periodic && i == ax.n - 1) continue;  // no link above
            const int j = ax.periodic && i == ax.n - 1 ? lin - (ax.n - 1) * grid.strides[d]
                                                       : lin + grid.strides[d];
            const double ci = a[lin] * grid.sqrt_det[lin] * grid.ginv_at(lin, d, d);
            const double cj = a[j] * grid.sqrt_det[j] * grid.ginv_at(j, d, d);
            const double c = harmonic_mean(ci, cj);
            if (c == 0.0) continue;
            // transverse trapezoid measure shared by both endpoints
            double transverse = 1.0;
            for (int e = 0; e < dims; ++e) {
                if (e == d) continue;
                const auto& axe = grid.axes[e];
                const double w =
                    (!axe.periodic && (idx[e] == 0 || idx[e] == axe.n - 1)) ? 0.5 : 1.0;
                transverse *= axe.h * w;
            }
            const double coef = c * transverse / ax.h;
            trip.emplace_back(lin, lin, coef);
            trip.emplace_back(j, j, coef);
            trip.emplace_back(lin, j, -coef);
            trip.emplace_back(j, lin, -coef);
        }
    }

    // mixed terms: node-centered, both (d,e) and (e,d) for symmetry
    for (int d = 0; d < dims; ++d) {
        for (int e = 0; e < dims; ++e) {
            if (e == d) continue;
            for (int lin = 0; lin < N; ++lin) {
                const double c =
                    a[lin] * grid.sqrt_det[lin] * grid.ginv_at(lin, d, e) * grid.node_vol[lin];
                if (c == 0.0) continue;
                grid.unindex(lin, idx);
                const Stencil sd = diff_stencil(grid, lin, d, idx);
                const Stencil se = diff_stencil(grid, lin, e, idx);
                for (int p = 0; p < sd.count; ++p) {
                    for (int qq = 0; qq < se.count; ++qq) {
                        trip.emplace_back(sd.pts[p], se.pts[qq], c * sd.w[p] * se.w[qq]);
                    }
                }
            }
        }
    }

    DivergenceOperator op;
    op.K.resize(N, N);
    op.K.setFromTriplets(trip.begin(), trip.end());
    op.mass.resize(N);
    for (int lin = 0; lin < N; ++lin) op.mass[lin] = grid.sqrt_det[lin] * grid.node_vol[lin];
    return op;
}

GridField gradient_norm(const TubeGrid& grid, const GridField& field) {
    const int dims = grid.dims();
    GridField out;
    out.kind = FieldKind::Residual;
    out.values.assign(grid.total, 0.0);
    std::vector<int> idx(dims);
    std::vector<Stencil> st(dims);
    for (int lin = 0; lin < grid.total; ++lin) {
        grid.unindex(lin, idx);
        double grads[3] = {0, 0, 0};
        for (int d = 0; d < dims; ++d) {
            grads[d] = apply_stencil(diff_stencil(grid, lin, d, idx), field.values);
        }
        double s = 0.0;
        for (int d = 0; d < dims; ++d) {
            for (int e = 0; e < dims; ++e) s += grid.ginv_at(lin, d, e) * grads[d] * grads[e];
        }
        out.values[lin] = std::sqrt(std::max(0.0, s));
    }
    return out;
}

namespace {

struct InteriorMap {
    std::vector<int> to_interior;  // -1 for boundary
    std::vector<int> to_full;
};

InteriorMap interior_map(const TubeGrid& grid) {
    InteriorMap m;
    m.to_interior.assign(grid.total, -1);
    for (int lin = 0; lin < grid.total; ++lin) {
        if (!grid.boundary[lin]) {
            m.to_interior[lin] = static_cast<int>(m.to_full.size());
            m.to_full.push_back(lin);
        }
    }
    return m;
}

// K restricted to interior x interior plus the boundary coupling K_IB u_B.
void split_operator(const Eigen::SparseMatrix<double>& K, const TubeGrid& grid,
                    const InteriorMap& m, Eigen::SparseMatrix<double>& K_II,
                    Eigen::SparseMatrix<double>& K_IB) {
    std::vector<Eigen::Triplet<double>> tii, tib;
    for (int col = 0; col < K.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it) {
            const int r = static_cast<int>(it.row());
            const int c = static_cast<int>(it.col());
            if (grid.boundary[r]) continue;
            if (grid.boundary[c]) {
                tib.emplace_back(m.to_interior[r], c, it.value());
            } else {
                tii.emplace_back(m.to_interior[r], m.to_interior[c], it.value());
            }
        }
    }
    const int ni = static_cast<int>(m.to_full.size());
    K_II.resize(ni, ni);
    K_II.setFromTriplets(tii.begin(), tii.end());
    K_IB.resize(ni, grid.total);
    K_IB.setFromTriplets(tib.begin(), tib.end());
}

double reaction_at(const EllipticProblem& p, int lin, double u) {
    return p.reaction.f ? p.reaction.f(p.grid->z[lin], u) : 0.0;
}

}  // namespace

GridField strong_residual(const EllipticProblem& problem, const GridField& u) {
    const TubeGrid& grid = *problem.grid;
    const auto op = assemble_divergence_operator(grid, problem.weight);
    const Eigen::Map<const Eigen::VectorXd> uv(u.values.data(), grid.total);
    const Eigen::VectorXd Ku = op.K * uv;
    const GridField gn = gradient_norm(grid, u);
    GridField r;
    r.kind = FieldKind::Residual;
    r.values.assign(grid.total, 0.0);
    for (int lin = 0; lin < grid.total; ++lin) {
        if (grid.boundary[lin]) continue;
        r.values[lin] = Ku[lin] / op.mass[lin] +
                        problem.lambda * std::pow(gn.values[lin], problem.q) -
                        reaction_at(problem, lin, u.values[lin]);
    }
    return r;
}

SolveResult solve(const EllipticProblem& problem, const SolverParams& params) {
    if (problem.grid == nullptr) throw ConfigError("solve: problem has no grid");
    if (!(problem.q >= 1.0)) throw ConfigError("solve: q must be >= 1");
    const TubeGrid& grid = *problem.grid;
    const auto op = assemble_divergence_operator(grid, problem.weight);
    const auto imap = interior_map(grid);
    Eigen::SparseMatrix<double> K_II, K_IB;
    split_operator(op.K, grid, imap, K_II, K_IB);

    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(params.cg_tol);
    cg.setMaxIterations(20000);
    cg.compute(K_II);

    const int N = grid.total;
    const int ni = static_cast<int>(imap.to_full.size());

    GridField u;
    u.kind = FieldKind::Solution;
    u.values.assign(N, 0.0);
    std::vector<int> idx(grid.dims());
    for (int lin = 0; lin < N; ++lin) {
        if (!grid.boundary[lin]) continue;
        if (!problem.dirichlet) throw ConfigError("solve: missing Dirichlet data");
        const auto xy = grid.node_coords(lin);
        u.values[lin] = problem.dirichlet(grid.z[lin], xy);
    }

    Eigen::Map<Eigen::VectorXd> uv(u.values.data(), N);

    SolveResult result;
    for (int it = 0; it < params.max_iter; ++it) {
        // defect-correction form: residual of the frozen linear problem,
        // so repeated passes also refine the CG leftover
        const GridField gn = gradient_norm(grid, u);
        const Eigen::VectorXd Ku = op.K * uv;
        Eigen::VectorXd rhs(ni);
        for (int ii = 0; ii < ni; ++ii) {
            const int lin = imap.to_full[ii];
            const double f = reaction_at(problem, lin, u.values[lin]) -
                             problem.lambda * std::pow(gn.values[lin], problem.q);
            rhs[ii] = f * op.mass[lin] - Ku[lin];
        }
        const Eigen::VectorXd delta = cg.solve(rhs);
        const double omega = it == 0 ? 1.0 : params.damping;
        for (int ii = 0; ii < ni; ++ii) {
            const int lin = imap.to_full[ii];
            u.values[lin] += omega * delta[ii];
        }

        // strong residual of the updated iterate
        const Eigen::VectorXd Ku2 = op.K * uv;
        const GridField gn2 = gradient_norm(grid, u);
        double res = 0.0;
        for (int ii = 0; ii < ni; ++ii) {
            const int lin = imap.to_full[ii];
            const double r = Ku2[lin] / op.mass[lin] +
                             problem.lambda * std::pow(gn2.values[lin], problem.q) -
                             reaction_at(problem, lin, u.values[lin]);
            res = std::max(res, std::abs(r));
        }
        result.residual_history.push_back(res);
        result.iterations = it + 1;
        if (res <= params.tol) {
            result.u = std::move(u);
            result.residual = res;
            return result;
        }
    }
    throw NoConvergence("solve: Picard iteration did not reach tol " +
                            std::to_string(params.tol) + " (last residual " +
                            std::to_string(result.residual_history.back()) + ")",
                        params.max_iter, result.residual_history);
}

double weak_residual(const GridField& u, const GridField& psi,
                     const EllipticProblem& problem) {
    const TubeGrid& grid = *problem.grid;
    if (psi.values.size() != static_cast<std::size_t>(grid.total) ||
        u.values.size() != static_cast<std::size_t>(grid.total)) {
        throw ConfigError("weak_residual: field size mismatch");
    }
    for (int lin = 0; lin < grid.total; ++lin) {
        if (psi.values[lin] < 0.0) {
            throw InvalidTestFunction("weak_residual: psi has a negative node");
        }
        if (grid.boundary[lin] && psi.values[lin] != 0.0) {
            throw InvalidTestFunction("weak_residual: psi does not vanish on the boundary");
        }
    }
    const auto op = assemble_divergence_operator(grid, problem.weight);
    const Eigen::Map<const Eigen::VectorXd> uv(u.values.data(), grid.total);
    const Eigen::VectorXd Ku = op.K * uv;
    const GridField gn = gradient_norm(grid, u);

    std::vector<double> terms(grid.total);
    for (int lin = 0; lin < grid.total; ++lin) {
        const double nonlinear = problem.lambda * std::pow(gn.values[lin], problem.q) -
                                 reaction_at(problem, lin, u.values[lin]);
        terms[lin] = psi.values[lin] * (Ku[lin] + nonlinear * op.mass[lin]);
    }
    return fixed_order_sum(terms);
}

double integrate(const TubeGrid& grid, std::span<const double> values,
                 std::span<const double> mask) {
    std::vector<double> terms(grid.total);
    for (int lin = 0; lin < grid.total; ++lin) {
        const double m = mask.empty() ? 1.0 : mask[lin];
        terms[lin] = m * values[lin] * grid.sqrt_det[lin] * grid.node_vol[lin];
    }
    return fixed_order_sum(terms);
}

void write_field_csv(const TubeGrid& grid, const GridField& field, std::ostream& os) {
    const int dims = grid.dims();
    for (int d = 0; d < dims; ++d) os << (d ? "," : "") << "i" << d + 1;
    for (int d = 0; d < grid.base_axes; ++d) os << ",x" << d + 1;
    for (int d = 0; d < grid.normal_axes; ++d) os << ",y" << d + 1;
    os << ",value\n";
    std::vector<int> idx(dims);
    for (int lin = 0; lin < grid.total; ++lin) {
        grid.unindex(lin, idx);
        for (int d = 0; d < dims; ++d) os << (d ? "," : "") << idx[d];
        for (int d = 0; d < dims; ++d) os << "," << grid.coords[d][idx[d]];
        os << "," << field.values[lin] << "\n";
    }
}

nlohmann::json grid_meta_json(const TubeGrid& grid) {
    nlohmann::json axes = nlohmann::json::array();
    for (const auto& ax : grid.axes) {
        axes.push_back({{"n", ax.n},
                        {"lo", ax.lo},
                        {"hi", ax.hi},
                        {"periodic", ax.periodic},
                        {"h", ax.h}});
    }
    return {{"chart", fermi::chart_to_json(grid.chart)},
            {"axes", axes},
            {"total_nodes", grid.total}};
}

}  // namespace tubewcp::pde
