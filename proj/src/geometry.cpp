#include "tubewcp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

namespace tubewcp::geometry {

namespace {

// 4th-order central differences.
template <class F, class Vec>
Vec fd1(const F& f, double x, double h) {
    return (-f(x + 2 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2 * h)) / (12.0 * h);
}

template <class F, class Vec>
Vec fd2(const F& f, double x, double h) {
    return (-f(x + 2 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) -
            f(x - 2 * h)) /
           (12.0 * h * h);
}

template <class F, class Vec>
Vec fd3(const F& f, double x, double h) {
    return (f(x + 2 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2 * h)) /
           (2.0 * h * h * h);
}

void require_unit_speed(double speed, const char* who) {
    if (std::abs(speed - 1.0) > kArclenTol) {
        throw NotUnitSpeed(std::string(who) + ": curve is not arc-length parametrized (|phi'| = " +
                           std::to_string(speed) + ")");
    }
}

}  // namespace

Vec2 PlaneCurve::dp(double x) const {
    return d1 ? d1(x) : fd1<decltype(position), Vec2>(position, x, h);
}
Vec2 PlaneCurve::ddp(double x) const {
    return d2 ? d2(x) : fd2<decltype(position), Vec2>(position, x, h);
}
Vec2 PlaneCurve::dddp(double x) const {
    return d3 ? d3(x) : fd3<decltype(position), Vec2>(position, x, h);
}

Vec3 SpaceCurve::dp(double x) const {
    return d1 ? d1(x) : fd1<decltype(position), Vec3>(position, x, h);
}
Vec3 SpaceCurve::ddp(double x) const {
    return d2 ? d2(x) : fd2<decltype(position), Vec3>(position, x, h);
}
Vec3 SpaceCurve::dddp(double x) const {
    return d3 ? d3(x) : fd3<decltype(position), Vec3>(position, x, h);
}

Vec3 ParamSurface::du(double u, double v) const {
    if (d1) return d1(u, v);
    auto f = [&](double t) { return position(t, v); };
    return fd1<decltype(f), Vec3>(f, u, h);
}
Vec3 ParamSurface::dv(double u, double v) const {
    if (d2) return d2(u, v);
    auto f = [&](double t) { return position(u, t); };
    return fd1<decltype(f), Vec3>(f, v, h);
}
Vec3 ParamSurface::duu(double u, double v) const {
    if (d11) return d11(u, v);
    auto f = [&](double t) { return position(t, v); };
    return fd2<decltype(f), Vec3>(f, u, h);
}
Vec3 ParamSurface::dvv(double u, double v) const {
    if (d22) return d22(u, v);
    auto f = [&](double t) { return position(u, t); };
    return fd2<decltype(f), Vec3>(f, v, h);
}
Vec3 ParamSurface::duv(double u, double v) const {
    if (d12) return d12(u, v);
    // nest: d/du of dv
    auto f = [&](double t) { return dv(t, v); };
    return fd1<decltype(f), Vec3>(f, u, h);
}

Vec3 ParamSurface::normal(double u, double v) const {
    const Vec3 w = du(u, v).cross(dv(u, v));
    const double n = w.norm();
    if (n <= 0.0 || !std::isfinite(n)) {
        throw DegenerateParametrization("surface normal undefined: d1 ^ d2 vanishes");
    }
    return w / n;
}

Vec3 ParamSurface::normal_derivative(int axis, double u, double v) const {
    const Vec3 pu = du(u, v);
    const Vec3 pv = dv(u, v);
    const Vec3 w = pu.cross(pv);
    const double n = w.norm();
    if (n <= 0.0 || !std::isfinite(n)) {
        throw DegenerateParametrization("surface normal undefined: d1 ^ d2 vanishes");
    }
    Vec3 dw;
    if (axis == 0) {
        dw = duu(u, v).cross(pv) + pu.cross(duv(u, v));
    } else {
        dw = duv(u, v).cross(pv) + pu.cross(dvv(u, v));
    }
    const Vec3 e = w / n;
    return (dw - e * e.dot(dw)) / n;
}

FrenetFrame frenet_frame(const SpaceCurve& curve, double x) {
    const Vec3 v = curve.dp(x);
    require_unit_speed(v.norm(), "frenet_frame");
    const Vec3 acc = curve.ddp(x);
    const double kappa = acc.norm();
    if (kappa <= kKappaMin) {
        throw VanishingCurvature("frenet_frame: kappa <= " + std::to_string(kKappaMin) +
                                 " at x = " + std::to_string(x));
    }
    FrenetFrame f;
    f.T = v.normalized();
    f.N = acc / kappa;
    f.B = f.T.cross(f.N);
    f.kappa = kappa;
    f.tau = v.cross(acc).dot(curve.dddp(x)) / (kappa * kappa);
    return f;
}

double plane_curvature(const PlaneCurve& curve, double x) {
    const Vec2 v = curve.dp(x);
    require_unit_speed(v.norm(), "plane_curvature");
    const Vec2 n = rot90(v.normalized());
    return curve.ddp(x).dot(n);
}

double space_curvature_general(const SpaceCurve& curve, double x) {
    const Vec3 v = curve.dp(x);
    const double speed = v.norm();
    if (speed <= 0.0) {
        throw SingularCurve("space_curvature_general: zero speed at x = " + std::to_string(x));
    }
    return v.cross(curve.ddp(x)).norm() / (speed * speed * speed);
}

FundamentalForms fundamental_forms(const ParamSurface& surface, double u, double v) {
    const Vec3 pu = surface.du(u, v);
    const Vec3 pv = surface.dv(u, v);
    const double E = pu.dot(pu);
    const double F = pu.dot(pv);
    const double G = pv.dot(pv);
    const double det1 = E * G - F * F;
    if (det1 <= 0.0) {
        throw DegenerateParametrization("fundamental_forms: EG - F^2 <= 0");
    }
    const Vec3 n = surface.normal(u, v);
    const double e = n.dot(surface.duu(u, v));
    const double f = n.dot(surface.duv(u, v));
    const double g = n.dot(surface.dvv(u, v));

    FundamentalForms out;
    out.I << E, F, F, G;
    out.II << e, f, f, g;
    out.H = (e * G - 2.0 * f * F + g * E) / (2.0 * det1);
    out.K = (e * g - f * f) / det1;

    // third form from the normal field itself
    const Vec3 nu = surface.normal_derivative(0, u, v);
    const Vec3 nv = surface.normal_derivative(1, u, v);
    out.III << nu.dot(nu), nu.dot(nv), nu.dot(nv), nv.dot(nv);
    return out;
}

namespace {

// Shared arc-length machinery: cumulative Simpson table + monotone Hermite
// inversion t(s) with dt/ds = 1/speed.
template <class Curve, class Vec>
Reparametrized<Curve> reparametrize_impl(const Curve& curve, double a, double b, double tol) {
    if (!(b > a)) throw SingularCurve("arc_length_reparametrize: empty window");
    const int n = 8192;  // table resolution; inversion error ~ (L/n)^4
    const double dt = (b - a) / n;

    std::vector<double> speed(n + 1);
    for (int i = 0; i <= n; ++i) {
        speed[i] = curve.dp(a + i * dt).norm();
        if (speed[i] <= 1e-10) {
            throw SingularCurve("arc_length_reparametrize: speed vanishes at t = " +
                                std::to_string(a + i * dt));
        }
    }
    // cumulative arc length, Simpson on pairs of intervals
    std::vector<double> s(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        const double mid = curve.dp(a + (i + 0.5) * dt).norm();
        s[i + 1] = s[i] + dt / 6.0 * (speed[i] + 4.0 * mid + speed[i + 1]);
    }
    const double length = s[n];

    // shared_ptr so the returned closure owns the table
    auto table = std::make_shared<std::pair<std::vector<double>, std::vector<double>>>();
    table->first = std::move(s);
    table->second = std::move(speed);

    auto invert = [table, a, b, dt, n](double arc) {
        const auto& sv = table->first;
        const auto& spd = table->second;
        // linear extrapolation outside the window keeps the closure smooth,
        // so downstream finite differences stay valid at the endpoints
        if (arc < 0.0) return a + arc / spd[0];
        if (arc > sv[n]) return b + (arc - sv[n]) / spd[n];
        const auto it = std::upper_bound(sv.begin(), sv.end(), arc);
        int i = static_cast<int>(std::distance(sv.begin(), it)) - 1;
        i = std::clamp(i, 0, n - 1);
        // cubic Hermite of t(s) on [s_i, s_{i+1}] with slopes 1/speed
        const double hseg = sv[i + 1] - sv[i];
        const double w = (arc - sv[i]) / hseg;
        const double t0 = a + i * dt, t1 = a + (i + 1) * dt;
        const double m0 = hseg / spd[i], m1 = hseg / spd[i + 1];
        const double w2 = w * w, w3 = w2 * w;
        return (2 * w3 - 3 * w2 + 1) * t0 + (w3 - 2 * w2 + w) * m0 +
               (-2 * w3 + 3 * w2) * t1 + (w3 - w2) * m1;
    };

    auto pos = curve.position;
    Curve out;
    out.position = [pos, invert](double arc) { return pos(invert(arc)); };
    out.h = curve.h;

    // verify unit speed on a sample grid
    for (int i = 0; i <= 64; ++i) {
        const double arc = length * i / 64.0;
        const double sp = out.dp(arc).norm();
        if (std::abs(sp - 1.0) > tol) {
            throw SingularCurve("arc_length_reparametrize: output speed off by " +
                                std::to_string(std::abs(sp - 1.0)));
        }
    }
    return {std::move(out), length};
}

}  // namespace

Reparametrized<PlaneCurve> arc_length_reparametrize(const PlaneCurve& curve, double a,
                                                    double b, double tol) {
    return reparametrize_impl<PlaneCurve, Vec2>(curve, a, b, tol);
}

Reparametrized<SpaceCurve> arc_length_reparametrize(const SpaceCurve& curve, double a,
                                                    double b, double tol) {
    return reparametrize_impl<SpaceCurve, Vec3>(curve, a, b, tol);
}

}  // namespace tubewcp::geometry
