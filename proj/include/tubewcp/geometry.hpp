#pragma once

#include <Eigen/Dense>
#include <functional>

#include "tubewcp/errors.hpp"

namespace tubewcp::geometry {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;

/// Central-difference step for derivative callbacks that are not supplied
/// analytically (4th-order stencils; balances truncation vs round-off).
inline constexpr double kGeoStep = 1e-4;

/// Below this curvature the Frenet frame is declared undefined.
inline constexpr double kKappaMin = 1e-10;

/// Unit-speed tolerance for operations that assume arc-length input.
inline constexpr double kArclenTol = 1e-6;

/// Rotate a plane vector by +90 degrees; the plane-curve normal is
/// N = rot90(T), so the unit circle (cos x, sin x) has kappa = +1 and
/// inward-pointing N.
inline Vec2 rot90(const Vec2& v) { return Vec2(-v.y(), v.x()); }

/// Parametric curve in R^2. Derivative callbacks are optional; when null,
/// 4th-order central differences with step h are used.
struct PlaneCurve {
    std::function<Vec2(double)> position;
    std::function<Vec2(double)> d1;
    std::function<Vec2(double)> d2;
    std::function<Vec2(double)> d3;
    double h = kGeoStep;

    Vec2 p(double x) const { return position(x); }
    Vec2 dp(double x) const;
    Vec2 ddp(double x) const;
    Vec2 dddp(double x) const;
};

/// Parametric curve in R^3.
struct SpaceCurve {
    std::function<Vec3(double)> position;
    std::function<Vec3(double)> d1;
    std::function<Vec3(double)> d2;
    std::function<Vec3(double)> d3;
    double h = kGeoStep;

    Vec3 p(double x) const { return position(x); }
    Vec3 dp(double x) const;
    Vec3 ddp(double x) const;
    Vec3 dddp(double x) const;
};

/// Immersed parametric surface in R^3. Partial-derivative callbacks are
/// optional as for curves.
struct ParamSurface {
    std::function<Vec3(double, double)> position;
    std::function<Vec3(double, double)> d1;
    std::function<Vec3(double, double)> d2;
    std::function<Vec3(double, double)> d11;
    std::function<Vec3(double, double)> d12;
    std::function<Vec3(double, double)> d22;
    double h = kGeoStep;

    Vec3 p(double u, double v) const { return position(u, v); }
    Vec3 du(double u, double v) const;
    Vec3 dv(double u, double v) const;
    Vec3 duu(double u, double v) const;
    Vec3 duv(double u, double v) const;
    Vec3 dvv(double u, double v) const;

    /// Unit normal (d1 ^ d2)/|d1 ^ d2|, orientation exactly as the
    /// parametrization gives it (no re-orientation).
    Vec3 normal(double u, double v) const;

    /// Derivative of the unit normal along base axis 0 or 1.
    Vec3 normal_derivative(int axis, double u, double v) const;
};

/// Orthonormal (T, N, B) with det[T N B] = +1. tau uses the convention
/// tau = (phi' x phi'') . phi''' / kappa^2, so the right-handed unit-speed
/// helix (cos(x/sqrt 2), sin(x/sqrt 2), x/sqrt 2) has kappa = tau = 1/2.
struct FrenetFrame {
    Vec3 T, N, B;
    double kappa = 0.0;
    double tau = 0.0;
};

struct FundamentalForms {
    Mat2 I, II, III;
    double H = 0.0;  // mean curvature
    double K = 0.0;  // Gaussian curvature
};

/// Frenet frame of a unit-speed space curve.
/// Throws VanishingCurvature if kappa <= kKappaMin, NotUnitSpeed if the
/// sampled speed is off arc-length by more than kArclenTol.
FrenetFrame frenet_frame(const SpaceCurve& curve, double x);

/// Signed curvature kappa = phi'' . N with N = rot90(T). Unit-speed input.
double plane_curvature(const PlaneCurve& curve, double x);

/// First, second and third fundamental forms plus H and K.
/// II uses the sheet normal from ParamSurface::normal; III is computed
/// independently from the normal's derivatives (III_ab = dE_a . dE_b), so
/// the identity III = -K I + 2H II is a genuine cross-check.
/// Throws DegenerateParametrization if EG - F^2 <= 0.
FundamentalForms fundamental_forms(const ParamSurface& surface, double u, double v);

/// Curvature of a regular space curve in arbitrary parametrization,
/// kappa = |phi' x phi''| / |phi'|^3. Used where arc-length input is not
/// available (e.g. reach estimation on the arctan spiral).
double space_curvature_general(const SpaceCurve& curve, double x);

template <class Curve>
struct Reparametrized {
    Curve curve;     // arc-length parametrized, domain [0, length]
    double length = 0.0;
};

/// Reparametrize a regular curve on [a, b] by arc length. The output curve
/// exposes only a position callback (derivatives via central differences).
/// Throws SingularCurve if the speed vanishes on the sampled window.
Reparametrized<PlaneCurve> arc_length_reparametrize(const PlaneCurve& curve, double a,
                                                    double b, double tol);
Reparametrized<SpaceCurve> arc_length_reparametrize(const SpaceCurve& curve, double a,
                                                    double b, double tol);

}  // namespace tubewcp::geometry
