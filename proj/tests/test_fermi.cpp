#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "tubewcp/fermi.hpp"
#include "tubewcp/manifolds.hpp"

using namespace tubewcp;
using fermi::FermiChart;

namespace {

constexpr double kPi = std::numbers::pi;

FermiChart chart_of(const std::string& id, double eps, nlohmann::json params = {}) {
    return fermi::make_chart(manifolds::make_manifold(id, params), eps);
}

double max_entry_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

// relative entrywise discrepancy against the scale of the metric
double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return max_entry_diff(a, b) / std::max(1.0, a.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("fermi map on the unit circle") {
    const auto chart = chart_of("circle", 0.5);
    const double x0[1] = {0.0};
    const double y0[1] = {0.0};
    CHECK((fermi_map(chart, {x0, 1}, {y0, 1}) - Eigen::Vector2d(1.0, 0.0)).norm() < 1e-14);

    const double y3[1] = {0.3};  // inward normal
    CHECK((fermi_map(chart, {x0, 1}, {y3, 1}) - Eigen::Vector2d(0.7, 0.0)).norm() < 1e-14);

    const double ye[1] = {0.5};
    CHECK_THROWS_AS(fermi_map(chart, {x0, 1}, {ye, 1}), OutOfChart);
}

TEST_CASE("direct pullback metric on the worked examples") {
    const auto line = chart_of("line", 0.9);
    const double x[1] = {0.25};
    const double y[1] = {0.4};
    const auto s_line = fermi::pullback_metric_direct(line, {x, 1}, {y, 1});
    CHECK(max_entry_diff(s_line.g, Eigen::MatrixXd::Identity(2, 2)) < 1e-12);

    const auto circle = chart_of("circle", 0.5);
    const double yc[1] = {0.1};
    const auto s_circle = fermi::pullback_metric_direct(circle, {x, 1}, {yc, 1});
    Eigen::MatrixXd want = Eigen::MatrixXd::Identity(2, 2);
    want(0, 0) = 0.81;
    CHECK(max_entry_diff(s_circle.g, want) < 1e-12);

    const auto helix = chart_of("helix", 0.3);
    const double y2[2] = {0.0, 0.0};
    const auto s_helix = fermi::pullback_metric_direct(helix, {x, 1}, {y2, 2});
    CHECK(max_entry_diff(s_helix.g, Eigen::MatrixXd::Identity(3, 3)) < 1e-12);
}

TEST_CASE("r/t/s tensors match the worked space-curve values") {
    const auto helix = chart_of("helix", 0.3);
    const double x[1] = {1.2};
    const auto rts = fermi::rts_tensors(helix, {x, 1});
    const double kappa = 0.5, tau = 0.5;
    CHECK(rts.r[0](0, 0) == doctest::Approx(-2.0 * kappa).epsilon(1e-10));
    CHECK(rts.r[1](0, 0) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(rts.t[0](0, 0) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(rts.t[0](0, 1) == doctest::Approx(-tau).epsilon(1e-10));
    CHECK(rts.t[1](0, 0) == doctest::Approx(tau).epsilon(1e-10));
    CHECK(rts.t[1](0, 1) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(rts.s[0][0](0, 0) == doctest::Approx(kappa * kappa + tau * tau).epsilon(1e-10));
    CHECK(rts.s[0][1](0, 0) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(rts.s[1][1](0, 0) == doctest::Approx(tau * tau).epsilon(1e-10));

    const auto circle = chart_of("circle", 0.5);
    const auto rts_c = fermi::rts_tensors(circle, {x, 1});
    CHECK(rts_c.r[0](0, 0) == doctest::Approx(-2.0).epsilon(1e-10));
    CHECK(rts_c.t[0](0, 0) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(rts_c.s[0][0](0, 0) == doctest::Approx(1.0).epsilon(1e-10));

    const auto line = chart_of("line", 0.9);
    const auto rts_l = fermi::rts_tensors(line, {x, 1});
    CHECK(std::abs(rts_l.r[0](0, 0)) < 1e-12);
    CHECK(std::abs(rts_l.t[0](0, 0)) < 1e-12);
    CHECK(std::abs(rts_l.s[0][0](0, 0)) < 1e-12);
}

TEST_CASE("decomposition reassembles the direct metric") {
    for (const auto& [id, eps] :
         std::vector<std::pair<std::string, double>>{{"circle", 0.45}, {"helix", 0.3},
                                                     {"sphere", 0.4}}) {
        const auto chart = chart_of(id, eps);
        const auto& dom = chart.base.domain;
        for (int i = 0; i < 8; ++i) {
            std::array<double, 2> x{0.0, 0.0};
            for (int a = 0; a < dom.dim; ++a) {
                x[a] = dom.lo[a] + (dom.hi[a] - dom.lo[a]) * (i + 0.5) / 8.0;
            }
            const auto rts = fermi::rts_tensors(chart, {x.data(), 2});
            for (int jj = 0; jj < 4; ++jj) {
                std::array<double, 2> y{0.0, 0.0};
                const double r = eps * (jj + 0.5) / 4.5;
                y[0] = r * (chart.k == 2 ? std::cos(1.0 + jj) : 1.0);
                if (chart.k == 2) y[1] = r * std::sin(1.0 + jj);
                const auto direct = fermi::pullback_metric_direct(
                    chart, {x.data(), 2}, {y.data(), static_cast<std::size_t>(chart.k)});
                const auto rebuilt = fermi::reconstruct_metric(
                    chart, rts, {x.data(), 2}, {y.data(), static_cast<std::size_t>(chart.k)});
                CHECK(max_entry_diff(direct.g, rebuilt.g) < 1e-6);
            }
        }
    }
}

TEST_CASE("closed form equals the direct metric on 32x16 grids") {
    for (const auto& [id, eps] :
         std::vector<std::pair<std::string, double>>{{"circle", 0.45}, {"helix", 0.3},
                                                     {"sphere", 0.4}}) {
        const auto chart = chart_of(id, eps);
        const auto& dom = chart.base.domain;
        double worst = 0.0;
        for (int i = 0; i < 32; ++i) {
            std::array<double, 2> x{0.0, 0.0};
            for (int a = 0; a < dom.dim; ++a) {
                x[a] = dom.lo[a] + (dom.hi[a] - dom.lo[a]) * (i + 0.5) / 32.0;
            }
            for (int j = 0; j < 16; ++j) {
                std::array<double, 2> y{0.0, 0.0};
                const double r = eps * (j + 0.5) / 16.5;
                y[0] = r * (chart.k == 2 ? std::cos(0.39 * j) : 1.0);
                if (chart.k == 2) y[1] = r * std::sin(0.39 * j);
                const auto direct = fermi::pullback_metric_direct(
                    chart, {x.data(), 2}, {y.data(), static_cast<std::size_t>(chart.k)});
                const auto closed = fermi::pullback_metric_closed_form(
                    chart, {x.data(), 2}, {y.data(), static_cast<std::size_t>(chart.k)});
                worst = std::max(worst, rel_diff(direct.g, closed.g));
            }
        }
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("volume distortion on curves") {
    const auto circle = chart_of("circle", 0.45);
    const double x[1] = {1.0};
    const double y[1] = {0.25};
    CHECK(fermi::volume_distortion(circle, {x, 1}, {y, 1}) ==
          doctest::Approx(0.75).epsilon(1e-12));
    const double y0[1] = {0.0};
    CHECK(std::abs(fermi::volume_distortion(circle, {x, 1}, {y0, 1}) - 1.0) < 1e-12);

    const auto line = chart_of("line", 0.9);
    const double yl[1] = {0.7};
    CHECK(fermi::volume_distortion(line, {x, 1}, {yl, 1}) == doctest::Approx(1.0));
}

TEST_CASE("lambda equals 1 on the base for every chart") {
    for (const auto& [id, eps] : std::vector<std::pair<std::string, double>>{
             {"circle", 0.45}, {"line", 0.9}, {"helix", 0.3}, {"sphere", 0.4},
             {"torus", 0.3}}) {
        const auto chart = chart_of(id, eps);
        const auto& dom = chart.base.domain;
        for (int i = 0; i < 7; ++i) {
            std::array<double, 2> x{0.0, 0.0};
            for (int a = 0; a < dom.dim; ++a) {
                x[a] = dom.lo[a] + (dom.hi[a] - dom.lo[a]) * (i + 0.5) / 7.0;
            }
            std::array<double, 2> y{0.0, 0.0};
            CHECK(std::abs(fermi::volume_distortion(chart, {x.data(), 2},
                                                    {y.data(),
                                                     static_cast<std::size_t>(chart.k)}) -
                           1.0) < 1e-12);
        }
    }
}

TEST_CASE("K1 estimates and epsilon1") {
    const auto circle = chart_of("circle", 0.5);
    const double k1_circle = fermi::estimate_K1(circle, {});
    CHECK(k1_circle == doctest::Approx(1.05).epsilon(1e-9));

    const auto line = chart_of("line", 0.9);
    CHECK(fermi::estimate_K1(line, {}) == doctest::Approx(0.0));

    const auto big = chart_of("circle", 0.5, {{"radius", 2.0}});
    CHECK(fermi::estimate_K1(big, {}) == doctest::Approx(0.525).epsilon(1e-9));

    CHECK(fermi::epsilon1(1.0) == doctest::Approx(0.5));
    CHECK(fermi::epsilon1(0.0) == doctest::Approx(1.0));
    CHECK(fermi::epsilon1(10.0) == doctest::Approx(0.05));

    CHECK_THROWS_AS(fermi::estimate_K1(circle, {.base_per_axis = 0}), EmptySample);
}

TEST_CASE("distortion bound and lambda sandwich on hold-out grids") {
    // eps is below eps1 for each chart (the unit sphere has K1 ~ 2.5, so a
    // flatter radius-2 sphere is used here)
    for (const auto& [id, eps, params] :
         std::vector<std::tuple<std::string, double, nlohmann::json>>{
             {"circle", 0.45, {}},
             {"helix", 0.3, {}},
             {"sphere", 0.35, {{"radius", 2.0}}}}) {
        const auto chart = chart_of(id, eps, params);
        const double K1 = fermi::estimate_K1(chart, {});
        const double eps1 = fermi::epsilon1(K1);
        CHECK(chart.eps < eps1);  // chosen so the sandwich applies

        // hold-out grid, offset from the estimation nodes
        const fermi::SampleGrid holdout{.base_per_axis = 41,
                                        .normal_radial = 11,
                                        .normal_angular = 9,
                                        .offset = 0.37};
        const auto& dom = chart.base.domain;
        for (int i = 0; i < holdout.base_per_axis; ++i) {
            std::array<double, 2> x{0.0, 0.0};
            for (int a = 0; a < dom.dim; ++a) {
                x[a] = dom.lo[a] +
                       (dom.hi[a] - dom.lo[a]) * (i + 0.685) / holdout.base_per_axis;
            }
            for (int jr = 0; jr < holdout.normal_radial; ++jr) {
                const double r = chart.eps * (jr + 0.685) / holdout.normal_radial;
                for (int l = 0; l < (chart.k == 1 ? 2 : holdout.normal_angular); ++l) {
                    std::array<double, 2> y{0.0, 0.0};
                    if (chart.k == 1) {
                        y[0] = (l == 0 ? -r : r);
                    } else {
                        const double th = 2.0 * kPi * (l + 0.37) / holdout.normal_angular;
                        y[0] = r * std::cos(th);
                        y[1] = r * std::sin(th);
                    }
                    const double lam = fermi::volume_distortion(
                        chart, {x.data(), 2}, {y.data(), static_cast<std::size_t>(chart.k)});
                    CHECK(std::abs(lam - 1.0) <= K1 * r * (1.0 + 1e-12));
                    CHECK(lam >= 0.5);
                    CHECK(lam <= 1.5);
                }
            }
        }
    }
}

TEST_CASE("base density mu") {
    const auto circle = chart_of("circle", 0.45);
    const double x[1] = {0.7};
    CHECK(fermi::base_density_mu(circle, {x, 1}) == doctest::Approx(1.0).epsilon(1e-12));

    const double rho = 2.0;
    const auto sphere = chart_of("sphere", 0.4, {{"radius", rho}});
    const double xs[2] = {0.3, 1.0};  // (azimuth, colatitude)
    CHECK(fermi::base_density_mu(sphere, {xs, 2}) ==
          doctest::Approx(rho * rho * std::sin(1.0)).epsilon(1e-12));

    // rescaled parameter doubles the density; built directly since charts
    // reject non-arc-length curve bases
    fermi::FermiChart stretched;
    geometry::PlaneCurve fast;
    fast.position = [](double t) { return geometry::Vec2(2.0 * t, 0.0); };
    stretched.base.base = fast;
    stretched.base.domain = {1, {0.0, 0.0}, {1.0, 0.0}, {false, false}};
    stretched.k = 1;
    stretched.n = 2;
    stretched.eps = 0.5;
    CHECK(fermi::base_density_mu(stretched, {x, 1}) == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("charts reject inadmissible construction") {
    CHECK_THROWS_AS(chart_of("circle", 1.5), InvalidChart);  // beyond the fold
    CHECK_THROWS_AS(chart_of("arctan-spiral", 0.05), InvalidChart);  // not arc-length
    CHECK_THROWS_AS(chart_of("circle", -0.1), InvalidChart);
}

TEST_CASE("gradient transport: chart gradient pushes forward to the ambient one") {
    const auto chart = chart_of("circle", 0.45);
    auto w = [](const Eigen::Vector2d& z) { return z.x() * z.x() + 0.3 * z.y(); };
    auto grad_w = [](const Eigen::Vector2d& z) {
        return Eigen::Vector2d(2.0 * z.x(), 0.3);
    };
    for (double x0 : {0.2, 2.0, 4.4}) {
        for (double y0 : {-0.3, 0.15}) {
            const double x[1] = {x0};
            const double y[1] = {y0};
            const auto s = fermi::pullback_metric_direct(chart, {x, 1}, {y, 1});
            auto w_chart = [&](double xx, double yy) {
                const double xa[1] = {xx};
                const double ya[1] = {yy};
                const Eigen::VectorXd z = fermi_map(chart, {xa, 1}, {ya, 1});
                return w(Eigen::Vector2d(z[0], z[1]));
            };
            const double dwx = oracle::d1([&](double t) { return w_chart(t, y0); }, x0);
            const double dwy = oracle::d1([&](double t) { return w_chart(x0, t); }, y0);
            const Eigen::Vector2d chart_grad = s.inv * Eigen::Vector2d(dwx, dwy);
            // push forward with the Jacobian of Phi
            Eigen::Matrix2d J;
            J.col(0) = oracle::d1(
                [&](double t) {
                    const double xa[1] = {t};
                    const double ya[1] = {y0};
                    return Eigen::Vector2d(fermi_map(chart, {xa, 1}, {ya, 1}));
                },
                x0);
            J.col(1) = oracle::d1(
                [&](double t) {
                    const double xa[1] = {x0};
                    const double ya[1] = {t};
                    return Eigen::Vector2d(fermi_map(chart, {xa, 1}, {ya, 1}));
                },
                y0);
            const Eigen::Vector2d pushed = J * chart_grad;
            const double xa[1] = {x0};
            const double ya[1] = {y0};
            const Eigen::VectorXd z = fermi_map(chart, {xa, 1}, {ya, 1});
            CHECK((pushed - grad_w(Eigen::Vector2d(z[0], z[1]))).norm() < 1e-6);
        }
    }
}

TEST_CASE("two-chart partition of unity reproduces the single-chart integral") {
    // two overlapping charts on the circle with piecewise-quadratic ramps
    const auto full = chart_of("circle", 0.45);
    auto f = [](double x, double y) { return std::exp(std::sin(x)) * (1.0 + y / 3.0); };

    // single chart: periodic integral over [0, 2 pi)
    const int panels = 1024;
    const double single =
        fermi::tube_integral_simpson(full, f, 0.0, 2.0 * kPi, panels, 64);

    // partition ramp with breakpoints on multiples of pi/8
    const double delta = kPi / 8.0;
    auto ramp = [](double t) {  // C^1 piecewise quadratic, 0 -> 1
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        return t < 0.5 ? 2.0 * t * t : 1.0 - 2.0 * (1.0 - t) * (1.0 - t);
    };
    // chart A covers (-pi/2 - delta, pi/2 + delta), chart B the complement band
    auto rho_A = [&](double x) {
        // wrap to (-pi, pi]
        double w = std::fmod(x + kPi, 2.0 * kPi);
        if (w < 0) w += 2.0 * kPi;
        w -= kPi;
        const double up = ramp((w + kPi / 2 + delta) / (2.0 * delta));
        const double down = ramp((kPi / 2 + delta - w) / (2.0 * delta));
        return up * down;
    };
    auto rho_B = [&](double x) { return 1.0 - rho_A(x); };

    // panel boundaries aligned with the ramp breakpoints (multiples of pi/8)
    const double a_lo = -kPi / 2 - delta, a_hi = kPi / 2 + delta;
    const double b_lo = kPi / 2 - delta, b_hi = 3.0 * kPi / 2 + delta;
    const int pa = static_cast<int>(std::round((a_hi - a_lo) / (kPi / 8))) * 16;
    const int pb = static_cast<int>(std::round((b_hi - b_lo) / (kPi / 8))) * 16;
    const double partA = fermi::tube_integral_simpson(full, f, a_lo, a_hi, pa, 64, rho_A);
    const double partB = fermi::tube_integral_simpson(full, f, b_lo, b_hi, pb, 64, rho_B);

    CHECK(std::abs((partA + partB) - single) < 1e-8 * std::max(1.0, std::abs(single)));
}

TEST_CASE("chart JSON and metric CSV export") {
    const auto chart = chart_of("helix", 0.25);
    const auto j = fermi::chart_to_json(chart);
    CHECK(j["base"]["id"] == "helix");
    CHECK(j["k"] == 2);
    CHECK(j["eps"] == doctest::Approx(0.25));
    CHECK(j["domain"]["dim"] == 1);

    std::ostringstream os;
    fermi::write_metric_grid_csv(chart, os, 4, 8);
    const std::string head = os.str().substr(0, os.str().find('\n'));
    CHECK(head == "x,y1,y2,g11,g12,g13,g21,g22,g23,g31,g32,g33,lambda");
}
