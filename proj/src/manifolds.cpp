#include "tubewcp/manifolds.hpp"

#include <cmath>
#include <numbers>

#include "tubewcp/errors.hpp"

namespace tubewcp::manifolds {

namespace {

using geometry::PlaneCurve;
using geometry::ParamSurface;
using geometry::SpaceCurve;
using geometry::Vec2;
using geometry::Vec3;

constexpr double kPi = std::numbers::pi;

double param(const nlohmann::json& j, const char* key, double fallback) {
    if (j.contains(key)) return j.at(key).get<double>();
    return fallback;
}

NamedManifold make_circle(const nlohmann::json& params) {
    const double rho = param(params, "radius", 1.0);
    if (rho <= 0.0) throw ConfigError("circle: radius must be > 0");
    PlaneCurve c;
    c.position = [rho](double x) { return Vec2(rho * std::cos(x / rho), rho * std::sin(x / rho)); };
    c.d1 = [rho](double x) { return Vec2(-std::sin(x / rho), std::cos(x / rho)); };
    c.d2 = [rho](double x) {
        return Vec2(-std::cos(x / rho) / rho, -std::sin(x / rho) / rho);
    };
    c.d3 = [rho](double x) {
        return Vec2(std::sin(x / rho) / (rho * rho), -std::cos(x / rho) / (rho * rho));
    };
    NamedManifold m;
    m.id = "circle";
    m.base = std::move(c);
    m.domain = {1, {0.0, 0.0}, {2.0 * kPi * rho, 0.0}, {true, false}};
    m.ambient_dim = 2;
    m.codim = 1;
    m.params = {{"radius", rho}};
    return m;
}

NamedManifold make_line(const nlohmann::json& params) {
    const double lo = param(params, "lo", -8.0);
    const double hi = param(params, "hi", 8.0);
    PlaneCurve c;
    c.position = [](double x) { return Vec2(x, 0.0); };
    c.d1 = [](double) { return Vec2(1.0, 0.0); };
    c.d2 = [](double) { return Vec2(0.0, 0.0); };
    c.d3 = [](double) { return Vec2(0.0, 0.0); };
    NamedManifold m;
    m.id = "line";
    m.base = std::move(c);
    m.domain = {1, {lo, 0.0}, {hi, 0.0}, {false, false}};
    m.ambient_dim = 2;
    m.codim = 1;
    m.params = {{"lo", lo}, {"hi", hi}};
    return m;
}

NamedManifold make_helix(const nlohmann::json& params) {
    const double lo = param(params, "lo", 0.0);
    const double hi = param(params, "hi", 8.0);
    const double s2 = std::numbers::sqrt2;
    SpaceCurve c;
    c.position = [s2](double x) {
        return Vec3(std::cos(x / s2), std::sin(x / s2), x / s2);
    };
    c.d1 = [s2](double x) {
        return Vec3(-std::sin(x / s2) / s2, std::cos(x / s2) / s2, 1.0 / s2);
    };
    c.d2 = [s2](double x) {
        return Vec3(-std::cos(x / s2) / 2.0, -std::sin(x / s2) / 2.0, 0.0);
    };
    c.d3 = [s2](double x) {
        return Vec3(std::sin(x / s2) / (2.0 * s2), -std::cos(x / s2) / (2.0 * s2), 0.0);
    };
    NamedManifold m;
    m.id = "helix";
    m.base = std::move(c);
    m.domain = {1, {lo, 0.0}, {hi, 0.0}, {false, false}};
    m.ambient_dim = 3;
    m.codim = 2;
    m.params = {{"lo", lo}, {"hi", hi}};
    return m;
}

NamedManifold make_arctan_spiral(const nlohmann::json& params) {
    const double lo = param(params, "lo", 0.0);
    const double hi = param(params, "hi", 16.0 * kPi);
    SpaceCurve c;
    c.position = [](double x) { return Vec3(std::sin(x), std::cos(x), std::atan(x)); };
    c.d1 = [](double x) {
        return Vec3(std::cos(x), -std::sin(x), 1.0 / (1.0 + x * x));
    };
    c.d2 = [](double x) {
        const double d = 1.0 + x * x;
        return Vec3(-std::sin(x), -std::cos(x), -2.0 * x / (d * d));
    };
    c.d3 = [](double x) {
        const double d = 1.0 + x * x;
        return Vec3(-std::cos(x), std::sin(x), (6.0 * x * x - 2.0) / (d * d * d));
    };
    NamedManifold m;
    m.id = "arctan-spiral";
    m.base = std::move(c);
    m.domain = {1, {lo, 0.0}, {hi, 0.0}, {false, false}};
    m.ambient_dim = 3;
    m.codim = 2;
    m.params = {{"lo", lo}, {"hi", hi}};
    return m;
}

// Chart order (azimuth, colatitude) makes d1 ^ d2 point inward, matching
// the convention under which the sphere has II = (1/rho) I and H = 1/rho.
NamedManifold make_sphere(const nlohmann::json& params) {
    const double rho = param(params, "radius", 1.0);
    if (rho <= 0.0) throw ConfigError("sphere: radius must be > 0");
    const double pad = param(params, "colatitude_pad", 0.35);
    ParamSurface s;
    s.position = [rho](double u, double t) {
        return Vec3(rho * std::sin(t) * std::cos(u), rho * std::sin(t) * std::sin(u),
                    rho * std::cos(t));
    };
    s.d1 = [rho](double u, double t) {
        return Vec3(-rho * std::sin(t) * std::sin(u), rho * std::sin(t) * std::cos(u), 0.0);
    };
    s.d2 = [rho](double u, double t) {
        return Vec3(rho * std::cos(t) * std::cos(u), rho * std::cos(t) * std::sin(u),
                    -rho * std::sin(t));
    };
    s.d11 = [rho](double u, double t) {
        return Vec3(-rho * std::sin(t) * std::cos(u), -rho * std::sin(t) * std::sin(u), 0.0);
    };
    s.d12 = [rho](double u, double t) {
        return Vec3(-rho * std::cos(t) * std::sin(u), rho * std::cos(t) * std::cos(u), 0.0);
    };
    s.d22 = [rho](double u, double t) {
        return Vec3(-rho * std::sin(t) * std::cos(u), -rho * std::sin(t) * std::sin(u),
                    -rho * std::cos(t));
    };
    NamedManifold m;
    m.id = "sphere";
    m.base = std::move(s);
    m.domain = {2, {0.0, pad}, {2.0 * kPi, kPi - pad}, {true, false}};
    m.ambient_dim = 3;
    m.codim = 1;
    m.params = {{"radius", rho}, {"colatitude_pad", pad}};
    return m;
}

// Chart order (axial, angular) gives the inward normal.
NamedManifold make_cylinder(const nlohmann::json& params) {
    const double rho = param(params, "radius", 1.0);
    const double lo = param(params, "lo", -4.0);
    const double hi = param(params, "hi", 4.0);
    ParamSurface s;
    s.position = [rho](double z, double a) {
        return Vec3(rho * std::cos(a), rho * std::sin(a), z);
    };
    s.d1 = [](double, double) { return Vec3(0.0, 0.0, 1.0); };
    s.d2 = [rho](double, double a) { return Vec3(-rho * std::sin(a), rho * std::cos(a), 0.0); };
    s.d11 = [](double, double) { return Vec3::Zero().eval(); };
    s.d12 = [](double, double) { return Vec3::Zero().eval(); };
    s.d22 = [rho](double, double a) {
        return Vec3(-rho * std::cos(a), -rho * std::sin(a), 0.0);
    };
    NamedManifold m;
    m.id = "cylinder";
    m.base = std::move(s);
    m.domain = {2, {lo, 0.0}, {hi, 2.0 * kPi}, {false, true}};
    m.ambient_dim = 3;
    m.codim = 1;
    m.params = {{"radius", rho}, {"lo", lo}, {"hi", hi}};
    return m;
}

NamedManifold make_torus(const nlohmann::json& params) {
    const double R = param(params, "major_radius", 2.0);
    const double r = param(params, "minor_radius", 0.5);
    if (!(R > r && r > 0.0)) throw ConfigError("torus: need major_radius > minor_radius > 0");
    ParamSurface s;
    s.position = [R, r](double u, double v) {
        const double w = R + r * std::cos(v);
        return Vec3(w * std::cos(u), w * std::sin(u), r * std::sin(v));
    };
    s.d1 = [R, r](double u, double v) {
        const double w = R + r * std::cos(v);
        return Vec3(-w * std::sin(u), w * std::cos(u), 0.0);
    };
    s.d2 = [r](double u, double v) {
        return Vec3(-r * std::sin(v) * std::cos(u), -r * std::sin(v) * std::sin(u),
                    r * std::cos(v));
    };
    s.d11 = [R, r](double u, double v) {
        const double w = R + r * std::cos(v);
        return Vec3(-w * std::cos(u), -w * std::sin(u), 0.0);
    };
    s.d12 = [r](double u, double v) {
        return Vec3(r * std::sin(v) * std::sin(u), -r * std::sin(v) * std::cos(u), 0.0);
    };
    s.d22 = [r](double u, double v) {
        return Vec3(-r * std::cos(v) * std::cos(u), -r * std::cos(v) * std::sin(u),
                    -r * std::sin(v));
    };
    NamedManifold m;
    m.id = "torus";
    m.base = std::move(s);
    m.domain = {2, {0.0, 0.0}, {2.0 * kPi, 2.0 * kPi}, {true, true}};
    m.ambient_dim = 3;
    m.codim = 1;
    m.params = {{"major_radius", R}, {"minor_radius", r}};
    return m;
}

NamedManifold make_plane(const nlohmann::json& params) {
    const double w = param(params, "half_width", 1.5);
    ParamSurface s;
    s.position = [](double u, double v) { return Vec3(u, v, 0.0); };
    s.d1 = [](double, double) { return Vec3(1.0, 0.0, 0.0); };
    s.d2 = [](double, double) { return Vec3(0.0, 1.0, 0.0); };
    s.d11 = [](double, double) { return Vec3::Zero().eval(); };
    s.d12 = [](double, double) { return Vec3::Zero().eval(); };
    s.d22 = [](double, double) { return Vec3::Zero().eval(); };
    NamedManifold m;
    m.id = "plane";
    m.base = std::move(s);
    m.domain = {2, {-w, -w}, {w, w}, {false, false}};
    m.ambient_dim = 3;
    m.codim = 1;
    m.params = {{"half_width", w}};
    return m;
}

}  // namespace

NamedManifold make_manifold(const std::string& id, const nlohmann::json& params) {
    if (id == "circle") return make_circle(params);
    if (id == "line") return make_line(params);
    if (id == "helix") return make_helix(params);
    if (id == "arctan-spiral") return make_arctan_spiral(params);
    if (id == "sphere") return make_sphere(params);
    if (id == "cylinder") return make_cylinder(params);
    if (id == "torus") return make_torus(params);
    if (id == "plane") return make_plane(params);
    throw ConfigError("unknown manifold id '" + id + "'");
}

int base_dim(const NamedManifold& m) { return m.domain.dim; }

}  // namespace tubewcp::manifolds
