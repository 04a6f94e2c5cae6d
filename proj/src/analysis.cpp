#include "tubewcp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace tubewcp::analysis {

namespace {

constexpr double kPi = std::numbers::pi;

double surface_measure_coeff(int k) { return k == 1 ? 2.0 : 2.0 * kPi; }

}  // namespace

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Newton from the Chebyshev-based initial guess
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
}

Weight constant_weight(double c) {
    Weight w;
    w.a = [c](const Eigen::VectorXd&, const Eigen::VectorXd&) { return c; };
    w.fiber_profile = [c](double) { return c; };
    w.sup_norm = c;
    return w;
}

Weight radial_power_weight(double base, double coef, double alpha, double cap, double eps) {
    Weight w;
    w.a = [base, coef, alpha, cap](const Eigen::VectorXd&, const Eigen::VectorXd& y) {
        return base + coef * std::pow(std::min(y.norm(), cap), alpha);
    };
    w.fiber_profile = [base, coef, alpha, cap](double r) {
        return base + coef * std::pow(std::min(std::abs(r), cap), alpha);
    };
    w.sup_norm = base + coef * std::pow(std::min(eps, cap), alpha);
    return w;
}

double weight_admissibility(const Weight& weight, double t, const fermi::FermiChart& chart,
                            int base_samples, int nodes_per_dim) {
    const int k = chart.k;
    if (!(t > k)) {
        throw BadExponent("weight admissibility requires t > k (t = " + std::to_string(t) +
                          ", k = " + std::to_string(k) + ")");
    }
    if (base_samples < 1) throw EmptySample("weight_admissibility: no base samples");

    std::vector<double> gl_nodes, gl_weights;
    gauss_legendre(nodes_per_dim, gl_nodes, gl_weights);
    const double eps = chart.eps * (1.0 - 1e-12);

    const auto& dom = chart.base.domain;
    double worst = 0.0;
    for (int ib = 0; ib < base_samples; ++ib) {
        std::array<double, 2> x{0.0, 0.0};
        for (int a = 0; a < dom.dim; ++a) {
            const double f = (ib + 0.5) / base_samples;
            x[a] = dom.lo[a] + f * (dom.hi[a] - dom.lo[a]);
        }
        double integral = 0.0;
        if (k == 1) {
            for (int i = 0; i < nodes_per_dim; ++i) {
                const double y = eps * gl_nodes[i];
                Eigen::VectorXd yv(1);
                yv << y;
                const Eigen::VectorXd z = fermi_map(chart, {x.data(), 2}, {&y, 1});
                integral += eps * gl_weights[i] * std::pow(weight.a(z, yv), -t);
                if (!(integral < kOverflowCap)) break;
            }
        } else {
            // polar: r in (0, eps) x theta in (0, 2 pi), both Gauss-Legendre
            for (int ir = 0; ir < nodes_per_dim && integral < kOverflowCap; ++ir) {
                const double r = 0.5 * eps * (gl_nodes[ir] + 1.0);
                const double wr = 0.5 * eps * gl_weights[ir];
                for (int it = 0; it < nodes_per_dim; ++it) {
                    const double th = kPi * (gl_nodes[it] + 1.0);
                    const double wt = kPi * gl_weights[it];
                    const double y[2] = {r * std::cos(th), r * std::sin(th)};
                    Eigen::VectorXd yv(2);
                    yv << y[0], y[1];
                    const Eigen::VectorXd z = fermi_map(chart, {x.data(), 2}, {y, 2});
                    integral += wr * wt * r * std::pow(weight.a(z, yv), -t);
                }
            }
        }
        if (!(integral < kOverflowCap)) {
            throw NonIntegrable("fiber integral of a^{-t} exceeds the overflow cap");
        }
        worst = std::max(worst, integral);
    }
    return worst;
}

double sobolev_exponent(double t, int k) {
    if (!(t > 0.5 * k) || !(1.0 + 1.0 / t > 2.0 / k)) {
        throw ExponentOutOfRange("sobolev exponent needs t > k/2 and 1 + 1/t > 2/k (t = " +
                                 std::to_string(t) + ", k = " + std::to_string(k) + ")");
    }
    const double inv = 0.5 - 1.0 / k + 0.5 / t;
    return 1.0 / inv;
}

namespace {

struct RadialTrial {
    double p, m, c;  // profile ((1 - (r/(c eps))^2)_+)^p (r/(c eps))^m
};

// Rayleigh quotient |W|_{L^q}^2 / int |W'|^2 a over the fiber ball.
double rayleigh_quotient(const RadialTrial& trial, const Weight& weight, double q, int k,
                         double eps, std::span<const double> gl_nodes,
                         std::span<const double> gl_weights) {
    const double supp = trial.c * eps;
    const double sigma = surface_measure_coeff(k);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < gl_nodes.size(); ++i) {
        const double s = 0.5 * (gl_nodes[i] + 1.0);  // in (0,1)
        const double w = 0.5 * supp * gl_weights[i];
        const double r = supp * s;
        const double b = 1.0 - s * s;
        const double W = std::pow(b, trial.p) * std::pow(s, trial.m);
        // dW/dr = (1/supp) dW/ds
        const double dW =
            (trial.m > 0.0 ? trial.m * std::pow(s, trial.m - 1.0) * std::pow(b, trial.p) : 0.0) -
            2.0 * trial.p * s * std::pow(b, trial.p - 1.0) * std::pow(s, trial.m);
        const double rk = std::pow(r, k - 1);
        num += w * std::pow(std::abs(W), q) * sigma * rk;
        den += w * (dW / supp) * (dW / supp) * weight.fiber_profile(r) * sigma * rk;
    }
    if (!(den > 0.0)) return 0.0;
    return std::pow(num, 2.0 / q) / den;
}

}  // namespace

SobolevEstimate sobolev_constant_estimate(const Weight& weight, double t, int k, double eps) {
    if (!weight.fiber_profile) {
        throw MissingConstant("sobolev_constant_estimate needs the weight's fiber profile");
    }
    SobolevEstimate out;
    out.two_star = sobolev_exponent(t, k);

    std::vector<double> gl_nodes, gl_weights;
    gauss_legendre(96, gl_nodes, gl_weights);

    const double cs[] = {1.0 / std::numbers::sqrt2, 1.0};
    const double ps[] = {1.0, 1.5, 2.0, 3.0};
    const double ms[] = {0.0, 1.0, 2.0};
    double best = 0.0;
    for (double c : cs) {
        for (double p : ps) {
            for (double m : ms) {
                best = std::max(best, rayleigh_quotient({p, m, c}, weight, out.two_star, k,
                                                        eps, gl_nodes, gl_weights));
            }
        }
    }
    out.family_sup = best;
    out.C_S = 1.5 * best;

    // informational: C_rho^{-t} with C_rho = int a^{-t} over the fiber ball
    double c_rho = 0.0;
    const double sigma = surface_measure_coeff(k);
    for (std::size_t i = 0; i < gl_nodes.size(); ++i) {
        const double r = 0.5 * eps * (gl_nodes[i] + 1.0);
        const double w = 0.5 * eps * gl_weights[i];
        c_rho += w * std::pow(weight.fiber_profile(r), -t) * sigma * std::pow(r, k - 1);
    }
    out.closed_form_weight_factor = std::pow(c_rho, -t);
    return out;
}

double lipschitz_probe(const Reaction& reaction, double m,
                       std::span<const Eigen::VectorXd> z_samples, int u_grid) {
    if (!(m > 0.0)) throw BadExponent("lipschitz_probe: m must be positive");
    if (u_grid < 2) u_grid = 2;
    double worst = 0.0;
    for (const auto& z : z_samples) {
        std::vector<double> fu(u_grid);
        for (int i = 0; i < u_grid; ++i) {
            const double u = -m + 2.0 * m * i / (u_grid - 1);
            fu[i] = reaction.f(z, u);
        }
        for (int i = 0; i < u_grid; ++i) {
            for (int j = i + 1; j < u_grid; ++j) {
                const double du = 2.0 * m * (j - i) / (u_grid - 1);
                worst = std::max(worst, std::abs(fu[i] - fu[j]) / du);
            }
        }
    }
    return kSupSafety * worst;
}

MeshGraph curve_chain(const manifolds::NamedManifold& m, double lo, double hi, int n) {
    if (n < 2) throw MeshTooCoarse("curve_chain: need at least 2 segments");
    const bool periodic = m.domain.periodic[0] &&
                          std::abs((hi - lo) - m.domain.period(0)) <
                              1e-9 * (1.0 + m.domain.period(0));
    const int count = periodic ? n : n + 1;

    MeshGraph mesh;
    mesh.spacing = (hi - lo) / n;
    mesh.pos.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double x = lo + (hi - lo) * i / n;
        const std::array<double, 2> xa{x, 0.0};
        Eigen::Vector3d p = Eigen::Vector3d::Zero();
        std::visit(
            [&](const auto& b) {
                using T = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<T, geometry::PlaneCurve>) {
                    const auto q = b.p(xa[0]);
                    p << q.x(), q.y(), 0.0;
                } else if constexpr (std::is_same_v<T, geometry::SpaceCurve>) {
                    p = b.p(xa[0]);
                } else {
                    throw UnsupportedBase("curve_chain expects a curve manifold");
                }
            },
            m.base);
        mesh.pos.push_back(p);
    }
    mesh.adj.assign(count, {});
    mesh.measure.assign(count, 0.0);
    auto link = [&](int i, int j) {
        const double len = (mesh.pos[i] - mesh.pos[j]).norm();
        mesh.adj[i].push_back({j, len});
        mesh.adj[j].push_back({i, len});
        mesh.measure[i] += 0.5 * len;
        mesh.measure[j] += 0.5 * len;
        mesh.max_edge = std::max(mesh.max_edge, len);
    };
    for (int i = 0; i + 1 < count; ++i) link(i, i + 1);
    if (periodic) link(count - 1, 0);
    return mesh;
}

MeshGraph surface_grid(const manifolds::NamedManifold& m, int n1, int n2) {
    const auto* surf = std::get_if<geometry::ParamSurface>(&m.base);
    if (surf == nullptr) throw UnsupportedBase("surface_grid expects a surface manifold");
    const auto& dom = m.domain;
    const bool per1 = dom.periodic[0], per2 = dom.periodic[1];
    const int c1 = per1 ? n1 : n1 + 1;
    const int c2 = per2 ? n2 : n2 + 1;
    const double h1 = (dom.hi[0] - dom.lo[0]) / n1;
    const double h2 = (dom.hi[1] - dom.lo[1]) / n2;

    MeshGraph mesh;
    mesh.spacing = std::max(h1, h2);
    mesh.pos.resize(static_cast<std::size_t>(c1) * c2);
    mesh.measure.resize(mesh.pos.size());
    mesh.adj.assign(mesh.pos.size(), {});
    auto id = [&](int i, int j) { return i * c2 + j; };

    for (int i = 0; i < c1; ++i) {
        for (int j = 0; j < c2; ++j) {
            const double u = dom.lo[0] + h1 * i;
            const double v = dom.lo[1] + h2 * j;
            mesh.pos[id(i, j)] = surf->p(u, v);
            const Eigen::Vector3d pu = surf->du(u, v), pv = surf->dv(u, v);
            const double mu = std::sqrt(std::max(
                0.0, pu.squaredNorm() * pv.squaredNorm() - std::pow(pu.dot(pv), 2)));
            const double w1 = (!per1 && (i == 0 || i == c1 - 1)) ? 0.5 : 1.0;
            const double w2 = (!per2 && (j == 0 || j == c2 - 1)) ? 0.5 : 1.0;
            mesh.measure[id(i, j)] = mu * h1 * h2 * w1 * w2;
        }
    }

    // 16-neighborhood: axis, diagonal and knight moves keep the graph
    // metric within ~2.7% of the surface metric on flat patches.
    const int offs[][2] = {{1, 0},  {0, 1},  {1, 1},  {1, -1},
                           {2, 1},  {1, 2},  {2, -1}, {1, -2}};
    auto wrap = [](int v, int count, bool per) {
        if (!per) return (v >= 0 && v < count) ? v : -1;
        return ((v % count) + count) % count;
    };
    for (int i = 0; i < c1; ++i) {
        for (int j = 0; j < c2; ++j) {
            for (const auto& o : offs) {
                const int i2 = wrap(i + o[0], c1, per1);
                const int j2 = wrap(j + o[1], c2, per2);
                if (i2 < 0 || j2 < 0) continue;
                const int a = id(i, j), b = id(i2, j2);
                const double len = (mesh.pos[a] - mesh.pos[b]).norm();
                mesh.adj[a].push_back({b, len});
                mesh.adj[b].push_back({a, len});
                mesh.max_edge = std::max(mesh.max_edge, len);
            }
        }
    }
    return mesh;
}

int nearest_node(const MeshGraph& mesh, const manifolds::NamedManifold& m,
                 std::span<const double> x) {
    Eigen::Vector3d target = Eigen::Vector3d::Zero();
    std::visit(
        [&](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, geometry::PlaneCurve>) {
                const auto q = b.p(x[0]);
                target << q.x(), q.y(), 0.0;
            } else if constexpr (std::is_same_v<T, geometry::SpaceCurve>) {
                target = b.p(x[0]);
            } else {
                target = b.p(x[0], x[1]);
            }
        },
        m.base);
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mesh.pos.size(); ++i) {
        const double d = (mesh.pos[i] - target).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

std::vector<double> geodesic_distances(const MeshGraph& mesh, int source) {
    std::vector<double> dist(mesh.pos.size(), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[source] = 0.0;
    pq.push({0.0, source});
    while (!pq.empty()) {
        const auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u]) continue;
        for (const auto& [v, len] : mesh.adj[u]) {
            const double nd = d + len;
            if (nd < dist[v]) {
                dist[v] = nd;
                pq.push({nd, v});
            }
        }
    }
    return dist;
}

double geodesic_ball_volume(const MeshGraph& mesh, int source, double R) {
    if (mesh.max_edge > R / 10.0) {
        throw MeshTooCoarse("geodesic_ball_volume: edge length " +
                            std::to_string(mesh.max_edge) + " exceeds R/10");
    }
    const auto dist = geodesic_distances(mesh, source);
    double vol = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (dist[i] < R) vol += mesh.measure[i];
    }
    return vol;
}

GrowthFit volume_growth_fit(const MeshGraph& mesh, int source, std::span<const double> radii) {
    if (radii.size() < 2) throw EmptySample("volume_growth_fit: need at least 2 radii");
    for (std::size_t i = 1; i < radii.size(); ++i) {
        if (!(radii[i] > radii[i - 1])) {
            throw ConfigError("volume_growth_fit: radii must be increasing");
        }
    }
    const auto dist = geodesic_distances(mesh, source);
    if (mesh.max_edge > radii[0] / 10.0) {
        throw MeshTooCoarse("volume_growth_fit: mesh too coarse for the smallest radius");
    }
    std::vector<double> logR, logV, vols;
    for (double R : radii) {
        double vol = 0.0;
        for (std::size_t i = 0; i < dist.size(); ++i) {
            if (dist[i] < R) vol += mesh.measure[i];
        }
        if (!(vol > 0.0)) throw EmptySample("volume_growth_fit: empty geodesic ball");
        vols.push_back(vol);
        logR.push_back(std::log(R));
        logV.push_back(std::log(vol));
    }
    const double n = static_cast<double>(logR.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < logR.size(); ++i) {
        sx += logR[i];
        sy += logV[i];
        sxx += logR[i] * logR[i];
        sxy += logR[i] * logV[i];
    }
    const double denom = n * sxx - sx * sx;
    double gamma = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
    gamma = std::max(gamma, 1e-3);

    GrowthFit fit;
    fit.gamma = gamma;
    fit.R0 = radii[0];
    fit.C1 = 0.0;
    for (std::size_t i = 0; i < vols.size(); ++i) {
        fit.C1 = std::max(fit.C1, vols[i] / std::pow(radii[i], gamma));
    }
    for (std::size_t i = 0; i < vols.size(); ++i) {
        fit.residual = std::max(
            fit.residual, std::abs(logV[i] - std::log(fit.C1) - gamma * logR[i]));
    }
    return fit;
}

IterationVerdict iteration_lemma_verdict(std::span<const LadderEntry> ladder, double theta,
                                         double gamma, double C) {
    IterationVerdict v;
    v.theta = theta;
    v.gamma = gamma;
    v.C = C;
    auto reject = [&](const std::string& why) {
        v.forced_zero = false;
        v.detail = why;
        return v;
    };
    if (!(theta > 0.0)) return reject("theta must be positive");
    if (!(gamma > 0.0)) return reject("gamma must be positive");
    if (ladder.size() < 2) return reject("ladder needs at least two rungs");
    if (!(theta < std::pow(2.0, -gamma))) {
        return reject("contraction not strict: theta >= 2^{-gamma}");
    }
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        const auto& e = ladder[i];
        if (!(e.R > 0.0)) return reject("rung radii must be positive");
        if (e.L < 0.0) return reject("L must be non-negative");
        if (i > 0) {
            if (ladder[i].L < ladder[i - 1].L) return reject("L must be non-decreasing");
            if (std::abs(ladder[i].R - 2.0 * ladder[i - 1].R) >
                1e-9 * ladder[i].R) {
                return reject("ladder is not dyadic");
            }
        }
    }
    for (std::size_t i = 0; i + 1 < ladder.size(); ++i) {
        if (!(ladder[i].L <= theta * ladder[i + 1].L + ladder[i].g)) {
            return reject("L(R) <= theta L(2R) + g(R) fails at R = " +
                          std::to_string(ladder[i].R));
        }
    }
    for (const auto& e : ladder) {
        if (!(e.L <= C * std::pow(e.R, gamma))) {
            return reject("growth bound L(R) <= C R^gamma fails at R = " +
                          std::to_string(e.R));
        }
    }
    if (!(ladder.back().g < kGTol)) {
        return reject("g does not vanish along the ladder (last value " +
                      std::to_string(ladder.back().g) + ")");
    }
    v.forced_zero = true;
    v.m = static_cast<int>(ladder.size()) - 1;
    v.iterate_bound =
        C * std::pow(std::pow(2.0, gamma) * theta, v.m) * std::pow(ladder.front().R, gamma);
    return v;
}

nlohmann::json growth_fit_json(const GrowthFit& fit) {
    return {{"C1", fit.C1}, {"gamma", fit.gamma}, {"R0", fit.R0}, {"residual", fit.residual}};
}

nlohmann::json iteration_verdict_json(const IterationVerdict& v) {
    nlohmann::json j = {{"verdict", v.forced_zero ? "ForcedZero" : "HypothesisViolated"},
                        {"theta", v.theta},
                        {"gamma", v.gamma},
                        {"C", v.C}};
    if (v.forced_zero) {
        j["m"] = v.m;
        j["iterate_bound"] = v.iterate_bound;
    } else {
        j["detail"] = v.detail;
    }
    return j;
}

}  // namespace tubewcp::analysis
