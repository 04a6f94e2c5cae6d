#pragma once

#include <array>
#include <string>
#include <variant>

#include <json.hpp>

#include "tubewcp/geometry.hpp"

namespace tubewcp::manifolds {

/// Base-parameter domain of a chart: an interval (dim 1) or rectangle
/// (dim 2), with per-direction periodic identification.
struct ChartDomain {
    int dim = 1;
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{1.0, 1.0};
    std::array<bool, 2> periodic{false, false};

    double period(int axis) const { return hi[axis] - lo[axis]; }
};

using Base = std::variant<geometry::PlaneCurve, geometry::SpaceCurve, geometry::ParamSurface>;

struct NamedManifold {
    std::string id;
    Base base;
    ChartDomain domain;
    int ambient_dim = 2;   // n
    int codim = 1;         // k = n - dim(M)
    nlohmann::json params; // resolved parameters, echoed into reports
};

/// Built-in examples addressable by id:
///   "circle"        plane circle, params: radius (1), arc-length parameter
///   "line"          plane line (x, 0), params: window [lo, hi] ([-8, 8])
///   "helix"         unit-speed helix (cos(x/s2), sin(x/s2), x/s2), s2 = sqrt 2,
///                   kappa = tau = 1/2; params: window ([0, 8])
///   "arctan-spiral" (sin x, cos x, arctan x), natural (non-arc-length)
///                   parameter; params: window ([0, 16 pi])
///   "sphere"        radius rho (1), chart (azimuth, colatitude) so the
///                   parametrization normal points inward; colatitude range
///                   [0.35, pi - 0.35]
///   "cylinder"      radius 1, chart (axial, angular): inward normal;
///                   params: height window ([-4, 4])
///   "torus"         major R (2), minor r (0.5), both directions periodic
///   "plane"         flat patch (x1, x2, 0), params: half_width (1.5)
/// Unknown ids throw ConfigError.
NamedManifold make_manifold(const std::string& id, const nlohmann::json& params = {});

/// Intrinsic dimension of the base (1 for curves, 2 for surfaces).
int base_dim(const NamedManifold& m);

}  // namespace tubewcp::manifolds
