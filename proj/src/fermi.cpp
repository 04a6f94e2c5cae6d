#include "tubewcp/fermi.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "tubewcp/geometry.hpp"
#include "tubewcp/parallel.hpp"

namespace tubewcp::fermi {

namespace {

using geometry::ParamSurface;
using geometry::PlaneCurve;
using geometry::SpaceCurve;
using geometry::Vec2;
using geometry::Vec3;

Eigen::VectorXd to_xd(const Vec2& v) {
    Eigen::VectorXd out(2);
    out << v.x(), v.y();
    return out;
}
Eigen::VectorXd to_xd(const Vec3& v) {
    Eigen::VectorXd out(3);
    out << v.x(), v.y(), v.z();
    return out;
}

struct SpaceFrame {
    Vec3 T, E1, E2, dE1, dE2;
    double kappa, tau;
};

// Chart frame for a space curve: (E^1, E^2) = (N, -B). With the classical
// torsion tau = (phi' x phi'').phi''' / kappa^2 this satisfies
// dE^1 = -kappa T - tau E^2 and dE^2 = tau E^1.
SpaceFrame space_frame(const SpaceCurve& c, double x) {
    const Vec3 v = c.dp(x);
    const Vec3 acc = c.ddp(x);
    const double kappa = acc.norm();
    if (kappa <= geometry::kKappaMin) {
        throw VanishingCurvature("fermi frame: kappa vanishes at x = " + std::to_string(x));
    }
    SpaceFrame f;
    f.T = v.normalized();
    f.E1 = acc / kappa;
    const Vec3 B = f.T.cross(f.E1);
    f.E2 = -B;
    f.kappa = kappa;
    f.tau = v.cross(acc).dot(c.dddp(x)) / (kappa * kappa);
    f.dE1 = -f.kappa * f.T - f.tau * f.E2;
    f.dE2 = f.tau * f.E1;
    return f;
}

double sym_det(const Eigen::MatrixXd& m) { return m.determinant(); }

}  // namespace

std::array<double, 2> FermiChart::clamp_base(std::span<const double> x) const {
    const auto& dom = base.domain;
    std::array<double, 2> out{0.0, 0.0};
    for (int a = 0; a < dom.dim; ++a) {
        double v = x[a];
        if (dom.periodic[a]) {
            const double L = dom.period(a);
            v = dom.lo[a] + std::fmod(std::fmod(v - dom.lo[a], L) + L, L);
        } else {
            const double slack = 1e-12 * (1.0 + std::abs(dom.hi[a] - dom.lo[a]));
            if (v < dom.lo[a] - slack || v > dom.hi[a] + slack) {
                throw OutOfChart("base coordinate " + std::to_string(v) +
                                 " outside chart window");
            }
        }
        out[a] = v;
    }
    return out;
}

Eigen::VectorXd FermiChart::base_point(std::span<const double> x) const {
    const auto xx = clamp_base(x);
    return std::visit(
        [&](const auto& b) -> Eigen::VectorXd {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, PlaneCurve> || std::is_same_v<T, SpaceCurve>) {
                return to_xd(b.p(xx[0]));
            } else {
                return to_xd(b.p(xx[0], xx[1]));
            }
        },
        base.base);
}

Eigen::VectorXd FermiChart::base_tangent(int axis, std::span<const double> x) const {
    const auto xx = clamp_base(x);
    return std::visit(
        [&](const auto& b) -> Eigen::VectorXd {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, PlaneCurve> || std::is_same_v<T, SpaceCurve>) {
                return to_xd(b.dp(xx[0]));
            } else {
                return to_xd(axis == 0 ? b.du(xx[0], xx[1]) : b.dv(xx[0], xx[1]));
            }
        },
        base.base);
}

std::vector<Eigen::VectorXd> FermiChart::frame(std::span<const double> x) const {
    const auto xx = clamp_base(x);
    return std::visit(
        [&](const auto& b) -> std::vector<Eigen::VectorXd> {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, PlaneCurve>) {
                const Vec2 t = b.dp(xx[0]).normalized();
                return {to_xd(geometry::rot90(t))};
            } else if constexpr (std::is_same_v<T, SpaceCurve>) {
                const auto f = space_frame(b, xx[0]);
                return {to_xd(f.E1), to_xd(f.E2)};
            } else {
                return {to_xd(b.normal(xx[0], xx[1]))};
            }
        },
        base.base);
}

std::vector<Eigen::VectorXd> FermiChart::frame_derivative(int axis,
                                                          std::span<const double> x) const {
    const auto xx = clamp_base(x);
    return std::visit(
        [&](const auto& b) -> std::vector<Eigen::VectorXd> {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, PlaneCurve>) {
                // E = rot90(phi'), arc-length base: dE/dx = rot90(phi'')
                return {to_xd(geometry::rot90(b.ddp(xx[0])))};
            } else if constexpr (std::is_same_v<T, SpaceCurve>) {
                const auto f = space_frame(b, xx[0]);
                return {to_xd(f.dE1), to_xd(f.dE2)};
            } else {
                return {to_xd(b.normal_derivative(axis, xx[0], xx[1]))};
            }
        },
        base.base);
}

Eigen::MatrixXd FermiChart::base_metric(std::span<const double> x) const {
    const int m = base_dims();
    Eigen::MatrixXd h(m, m);
    std::vector<Eigen::VectorXd> tangents(m);
    for (int a = 0; a < m; ++a) tangents[a] = base_tangent(a, x);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b <= a; ++b) h(a, b) = h(b, a) = tangents[a].dot(tangents[b]);
    return h;
}

FermiChart make_chart(manifolds::NamedManifold base, double eps) {
    if (!(eps > 0.0)) throw InvalidChart("chart radius must be positive");
    FermiChart chart;
    chart.k = base.codim;
    chart.n = base.ambient_dim;
    chart.base = std::move(base);
    chart.eps = eps;

    const auto& dom = chart.base.domain;
    const int probes = 33;
    double max_curv = 0.0;
    for (int i = 0; i < probes; ++i) {
        std::array<double, 2> x{0.0, 0.0};
        for (int a = 0; a < dom.dim; ++a) {
            const double f = (i + 0.5) / probes;
            x[a] = dom.lo[a] + f * (dom.hi[a] - dom.lo[a]);
        }
        // unit-speed requirement for curve bases
        if (dom.dim == 1) {
            const double speed = chart.base_tangent(0, x).norm();
            if (std::abs(speed - 1.0) > geometry::kArclenTol) {
                throw InvalidChart("curve chart requires an arc-length base (|phi'| = " +
                                   std::to_string(speed) + "); reparametrize first");
            }
        }
        // frame orthonormality and tangency
        const auto E = chart.frame(x);
        for (int i1 = 0; i1 < chart.k; ++i1) {
            for (int i2 = 0; i2 <= i1; ++i2) {
                const double want = i1 == i2 ? 1.0 : 0.0;
                if (std::abs(E[i1].dot(E[i2]) - want) > 1e-8) {
                    throw InvalidChart("normal frame is not orthonormal on the chart window");
                }
            }
            for (int a = 0; a < dom.dim; ++a) {
                const Eigen::VectorXd t = chart.base_tangent(a, x);
                if (std::abs(t.dot(E[i1])) > 1e-8 * t.norm()) {
                    throw InvalidChart("normal frame is not orthogonal to the base");
                }
            }
        }
        // local fold estimate
        if (dom.dim == 1) {
            std::visit(
                [&](const auto& b) {
                    using T = std::decay_t<decltype(b)>;
                    if constexpr (std::is_same_v<T, PlaneCurve>) {
                        max_curv = std::max(max_curv, std::abs(geometry::plane_curvature(b, x[0])));
                    } else if constexpr (std::is_same_v<T, SpaceCurve>) {
                        max_curv = std::max(max_curv, geometry::space_curvature_general(b, x[0]));
                    }
                },
                chart.base.base);
        } else {
            const auto forms = geometry::fundamental_forms(
                std::get<ParamSurface>(chart.base.base), x[0], x[1]);
            const double disc = std::max(0.0, forms.H * forms.H - forms.K);
            const double kmax = std::max(std::abs(forms.H + std::sqrt(disc)),
                                         std::abs(forms.H - std::sqrt(disc)));
            max_curv = std::max(max_curv, kmax);
        }
    }
    const double fold = std::min(1.0, max_curv > 0.0 ? 1.0 / max_curv : 1.0);
    if (eps >= fold) {
        throw InvalidChart("eps = " + std::to_string(eps) +
                           " is not below the sampled normal injectivity estimate " +
                           std::to_string(fold));
    }
    return chart;
}

Eigen::VectorXd fermi_map(const FermiChart& chart, std::span<const double> x,
                          std::span<const double> y) {
    double ynorm2 = 0.0;
    for (int i = 0; i < chart.k; ++i) ynorm2 += y[i] * y[i];
    if (ynorm2 >= chart.eps * chart.eps) {
        throw OutOfChart("normal coordinate |y| = " + std::to_string(std::sqrt(ynorm2)) +
                         " not inside the open ball of radius " + std::to_string(chart.eps));
    }
    Eigen::VectorXd p = chart.base_point(x);
    const auto E = chart.frame(x);
    for (int i = 0; i < chart.k; ++i) p += y[i] * E[i];
    return p;
}

MetricSample pullback_metric_direct(const FermiChart& chart, std::span<const double> x,
                                    std::span<const double> y) {
    const int m = chart.base_dims();
    const int n = chart.n;
    Eigen::MatrixXd J(n, n);
    for (int a = 0; a < m; ++a) {
        Eigen::VectorXd col = chart.base_tangent(a, x);
        const auto dE = chart.frame_derivative(a, x);
        for (int i = 0; i < chart.k; ++i) col += y[i] * dE[i];
        J.col(a) = col;
    }
    const auto E = chart.frame(x);
    for (int i = 0; i < chart.k; ++i) J.col(m + i) = E[i];

    MetricSample s;
    s.g = J.transpose() * J;
    s.det = sym_det(s.g);
    if (!(s.det > kDetMin)) {
        throw DegenerateMetric("pullback metric degenerate (det = " + std::to_string(s.det) +
                               ")");
    }
    s.inv = s.g.inverse();
    return s;
}

RtsTensors rts_tensors(const FermiChart& chart, std::span<const double> x) {
    const int m = chart.base_dims();
    const int k = chart.k;
    std::vector<Eigen::VectorXd> tang(m), dE[2];
    for (int a = 0; a < m; ++a) {
        tang[a] = chart.base_tangent(a, x);
        dE[a] = chart.frame_derivative(a, x);
    }
    const auto E = chart.frame(x);

    RtsTensors out;
    out.r.assign(k, Eigen::MatrixXd::Zero(m, m));
    out.t.assign(k, Eigen::MatrixXd::Zero(m, k));
    out.s.assign(k, std::vector<Eigen::MatrixXd>(k, Eigen::MatrixXd::Zero(m, m)));
    for (int i = 0; i < k; ++i) {
        for (int a = 0; a < m; ++a) {
            for (int b = 0; b < m; ++b) {
                out.r[i](a, b) = tang[a].dot(dE[b][i]) + tang[b].dot(dE[a][i]);
            }
            for (int j = 0; j < k; ++j) out.t[i](a, j) = dE[a][i].dot(E[j]);
        }
        for (int j = 0; j < k; ++j) {
            for (int a = 0; a < m; ++a) {
                for (int b = 0; b < m; ++b) {
                    out.s[i][j](a, b) =
                        0.5 * (dE[a][i].dot(dE[b][j]) + dE[b][i].dot(dE[a][j]));
                }
            }
        }
    }
    return out;
}

MetricSample reconstruct_metric(const FermiChart& chart, const RtsTensors& rts,
                                std::span<const double> x, std::span<const double> y) {
    const int m = chart.base_dims();
    const int k = chart.k;
    const int n = chart.n;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    g.topLeftCorner(m, m) = chart.base_metric(x);
    g.bottomRightCorner(k, k).setIdentity();
    for (int i = 0; i < k; ++i) {
        g.topLeftCorner(m, m) += y[i] * rts.r[i];
        for (int j = 0; j < k; ++j) g.topLeftCorner(m, m) += y[i] * y[j] * rts.s[i][j];
        for (int a = 0; a < m; ++a) {
            for (int j = 0; j < k; ++j) {
                g(a, m + j) += y[i] * rts.t[i](a, j);
                g(m + j, a) = g(a, m + j);
            }
        }
    }
    MetricSample s;
    s.g = g;
    s.det = sym_det(g);
    s.inv = g.inverse();
    return s;
}

MetricSample pullback_metric_closed_form(const FermiChart& chart, std::span<const double> x,
                                         std::span<const double> y) {
    const auto xx = chart.clamp_base(x);
    MetricSample s;
    std::visit(
        [&](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, PlaneCurve>) {
                const double kappa = geometry::plane_curvature(b, xx[0]);
                const double w = 1.0 - kappa * y[0];
                s.g = Eigen::MatrixXd::Identity(2, 2);
                s.g(0, 0) = w * w;
            } else if constexpr (std::is_same_v<T, SpaceCurve>) {
                const auto f = space_frame(b, xx[0]);
                const double kappa = f.kappa, tau = f.tau;
                const double y1 = y[0], y2 = y[1];
                s.g = Eigen::MatrixXd::Identity(3, 3);
                s.g(0, 0) = 1.0 - 2.0 * y1 * kappa + y1 * y1 * (kappa * kappa + tau * tau) +
                            y2 * y2 * tau * tau;
                s.g(0, 1) = s.g(1, 0) = tau * y2;
                s.g(0, 2) = s.g(2, 0) = -tau * y1;
            } else if constexpr (std::is_same_v<T, ParamSurface>) {
                const auto forms = geometry::fundamental_forms(b, xx[0], xx[1]);
                s.g = Eigen::MatrixXd::Identity(3, 3);
                s.g.topLeftCorner(2, 2) =
                    forms.I - 2.0 * y[0] * forms.II + y[0] * y[0] * forms.III;
            } else {
                throw UnsupportedBase("closed-form metric: base not among the worked cases");
            }
        },
        chart.base.base);
    s.det = sym_det(s.g);
    if (!(s.det > kDetMin)) {
        throw DegenerateMetric("closed-form metric degenerate (det = " + std::to_string(s.det) +
                               ")");
    }
    s.inv = s.g.inverse();
    return s;
}

double volume_distortion(const FermiChart& chart, std::span<const double> x,
                         std::span<const double> y) {
    const MetricSample s = pullback_metric_direct(chart, x, y);
    const double det_h = chart.base_metric(x).determinant();
    if (!(det_h > kDetMin)) {
        throw DegenerateParametrization("base metric degenerate");
    }
    return std::sqrt(s.det / det_h);
}

double base_density_mu(const FermiChart& chart, std::span<const double> x) {
    const double det_h = chart.base_metric(x).determinant();
    if (!(det_h > 0.0)) throw DegenerateParametrization("base metric degenerate");
    return std::sqrt(det_h);
}

double estimate_K1(const FermiChart& chart, const SampleGrid& grid) {
    if (grid.base_per_axis <= 0 || grid.normal_radial <= 0 ||
        (chart.k >= 2 && grid.normal_angular <= 0)) {
        throw EmptySample("estimate_K1: empty sample grid");
    }
    if (!(chart.eps < 1.0)) {
        throw InvalidChart("estimate_K1 requires eps < 1");
    }
    const auto& dom = chart.base.domain;
    const double off = std::fmod(std::abs(grid.offset), 1.0);

    std::vector<std::array<double, 2>> base_pts;
    if (dom.dim == 1) {
        for (int i = 0; i < grid.base_per_axis; ++i) {
            const double f = (i + 0.5 * (1.0 + off)) / grid.base_per_axis;
            base_pts.push_back({dom.lo[0] + f * (dom.hi[0] - dom.lo[0]), 0.0});
        }
    } else {
        for (int i = 0; i < grid.base_per_axis; ++i) {
            for (int j = 0; j < grid.base_per_axis; ++j) {
                const double fi = (i + 0.5 * (1.0 + off)) / grid.base_per_axis;
                const double fj = (j + 0.5 * (1.0 + off)) / grid.base_per_axis;
                base_pts.push_back({dom.lo[0] + fi * (dom.hi[0] - dom.lo[0]),
                                    dom.lo[1] + fj * (dom.hi[1] - dom.lo[1])});
            }
        }
    }

    double worst = 0.0;
    for (const auto& x : base_pts) {
        for (int jr = 0; jr < grid.normal_radial; ++jr) {
            const double r = chart.eps * (jr + 0.5 * (1.0 + off)) / grid.normal_radial;
            if (chart.k == 1) {
                for (const double sgn : {-1.0, 1.0}) {
                    const double y[1] = {sgn * r};
                    worst = std::max(worst,
                                     std::abs(volume_distortion(chart, x, {y, 1}) - 1.0) / r);
                }
            } else {
                for (int l = 0; l < grid.normal_angular; ++l) {
                    const double th =
                        2.0 * std::numbers::pi * (l + off) / grid.normal_angular;
                    const double y[2] = {r * std::cos(th), r * std::sin(th)};
                    worst = std::max(worst,
                                     std::abs(volume_distortion(chart, x, {y, 2}) - 1.0) / r);
                }
            }
        }
    }
    return kSupSafety * worst;
}

double epsilon1(double K1) {
    K1 = std::max(K1, 0.0);
    if (K1 == 0.0) return 1.0;
    return std::min(1.0, 1.0 / (2.0 * K1));
}

double tube_integral_simpson(const FermiChart& chart,
                             const std::function<double(double, double)>& f, double x_lo,
                             double x_hi, int base_panels, int fiber_panels,
                             const std::function<double(double)>& rho) {
    if (chart.base_dims() != 1 || chart.k != 1) {
        throw UnsupportedBase("tube_integral_simpson handles 1D-base codimension-1 charts");
    }
    if (base_panels % 2 != 0 || fiber_panels % 2 != 0) {
        throw ConfigError("tube_integral_simpson: panel counts must be even");
    }
    const double ey = chart.eps * (1.0 - 1e-12);
    const double hx = (x_hi - x_lo) / base_panels;
    const double hy = 2.0 * ey / fiber_panels;
    auto simpson_w = [](int i, int nn) { return i == 0 || i == nn ? 1.0 : (i % 2 ? 4.0 : 2.0); };

    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(base_panels + 1) * (fiber_panels + 1));
    for (int i = 0; i <= base_panels; ++i) {
        const double x = x_lo + i * hx;
        const double xarr[1] = {x};
        const double mu = base_density_mu(chart, {xarr, 1});
        const double w_rho = rho ? rho(x) : 1.0;
        for (int j = 0; j <= fiber_panels; ++j) {
            const double y = -ey + j * hy;
            const double yarr[1] = {y};
            const double lambda = volume_distortion(chart, {xarr, 1}, {yarr, 1});
            terms.push_back(simpson_w(i, base_panels) * simpson_w(j, fiber_panels) * w_rho *
                            f(x, y) * lambda * mu);
        }
    }
    return fixed_order_sum(terms) * hx * hy / 9.0;
}

nlohmann::json chart_to_json(const FermiChart& chart) {
    const auto& dom = chart.base.domain;
    nlohmann::json j;
    j["base"] = {{"id", chart.base.id}, {"params", chart.base.params}};
    j["k"] = chart.k;
    j["eps"] = chart.eps;
    nlohmann::json lo = nlohmann::json::array(), hi = nlohmann::json::array(),
                   per = nlohmann::json::array();
    for (int a = 0; a < dom.dim; ++a) {
        lo.push_back(dom.lo[a]);
        hi.push_back(dom.hi[a]);
        per.push_back(dom.periodic[a]);
    }
    j["domain"] = {{"dim", dom.dim}, {"lo", lo}, {"hi", hi}};
    j["periodic"] = per;
    return j;
}

void write_metric_grid_csv(const FermiChart& chart, std::ostream& os, int base_samples,
                           int normal_samples) {
    const auto& dom = chart.base.domain;
    os << (dom.dim == 1 ? "x" : "x1,x2");
    os << (chart.k == 1 ? ",y" : ",y1,y2");
    for (int a = 0; a < chart.n; ++a)
        for (int b = 0; b < chart.n; ++b) os << ",g" << a + 1 << b + 1;
    os << ",lambda\n";

    const double ey = chart.eps * (1.0 - 1e-9);
    std::vector<std::array<double, 2>> xs;
    if (dom.dim == 1) {
        for (int i = 0; i < base_samples; ++i) {
            const double f = dom.periodic[0] ? static_cast<double>(i) / base_samples
                                             : static_cast<double>(i) / (base_samples - 1);
            xs.push_back({dom.lo[0] + f * (dom.hi[0] - dom.lo[0]), 0.0});
        }
    } else {
        for (int i = 0; i < base_samples; ++i) {
            for (int j = 0; j < base_samples; ++j) {
                const double fi = dom.periodic[0] ? static_cast<double>(i) / base_samples
                                                  : static_cast<double>(i) / (base_samples - 1);
                const double fj = dom.periodic[1] ? static_cast<double>(j) / base_samples
                                                  : static_cast<double>(j) / (base_samples - 1);
                xs.push_back({dom.lo[0] + fi * (dom.hi[0] - dom.lo[0]),
                              dom.lo[1] + fj * (dom.hi[1] - dom.lo[1])});
            }
        }
    }

    std::vector<std::vector<double>> ys;
    if (chart.k == 1) {
        for (int j = 0; j < normal_samples; ++j) {
            ys.push_back({-ey + 2.0 * ey * j / (normal_samples - 1)});
        }
    } else {
        const int nr = std::max(2, normal_samples / 4);
        for (int jr = 0; jr < nr; ++jr) {
            const double r = ey * (jr + 1.0) / nr;
            for (int l = 0; l < normal_samples; ++l) {
                const double th = 2.0 * std::numbers::pi * l / normal_samples;
                ys.push_back({r * std::cos(th), r * std::sin(th)});
            }
        }
    }

    for (const auto& x : xs) {
        for (const auto& y : ys) {
            const auto s = pullback_metric_direct(chart, {x.data(), 2},
                                                  {y.data(), y.size()});
            const double lambda = volume_distortion(chart, {x.data(), 2},
                                                    {y.data(), y.size()});
            for (int a = 0; a < dom.dim; ++a) os << (a ? "," : "") << x[a];
            for (double yv : y) os << "," << yv;
            for (int a = 0; a < chart.n; ++a)
                for (int b = 0; b < chart.n; ++b) os << "," << s.g(a, b);
            os << "," << lambda << "\n";
        }
    }
}

}  // namespace tubewcp::fermi
