#include "tubewcp/reach.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tubewcp/geometry.hpp"

namespace tubewcp::reach {

namespace {

using geometry::SpaceCurve;
using geometry::Vec2;
using geometry::Vec3;

constexpr double kFoldCap = 1.0;        // delta <= 1 cap on the injectivity radius
constexpr double kNeighborFactor = 4.0; // exclusion window in units of local fold radius

SpaceCurve lift_plane_curve(const geometry::PlaneCurve& c) {
    SpaceCurve out;
    auto pos = c.position;
    out.position = [pos](double x) {
        const Vec2 p = pos(x);
        return Vec3(p.x(), p.y(), 0.0);
    };
    if (c.d1) {
        auto d = c.d1;
        out.d1 = [d](double x) {
            const Vec2 p = d(x);
            return Vec3(p.x(), p.y(), 0.0);
        };
    }
    if (c.d2) {
        auto d = c.d2;
        out.d2 = [d](double x) {
            const Vec2 p = d(x);
            return Vec3(p.x(), p.y(), 0.0);
        };
    }
    if (c.d3) {
        auto d = c.d3;
        out.d3 = [d](double x) {
            const Vec2 p = d(x);
            return Vec3(p.x(), p.y(), 0.0);
        };
    }
    out.h = c.h;
    return out;
}

double param_distance(const Component& comp, double a, double b) {
    const double d = std::abs(a - b);
    if (!comp.periodic) return d;
    const double L = comp.hi - comp.lo;
    return std::min(d, L - d);
}

void append_samples(SampledManifold& m, int comp_idx, int n) {
    const Component& comp = m.components[comp_idx];
    const double span = comp.hi - comp.lo;
    const int count = comp.periodic ? n : n + 1;
    for (int i = 0; i < count; ++i) {
        const double x = comp.lo + span * i / n;
        SampledManifold::Sample s;
        s.component = comp_idx;
        s.param = x;
        s.pos = comp.curve.p(x);
        s.tangent = comp.curve.dp(x);
        s.local_fold = local_fold_radius(comp, x);
        m.samples.push_back(std::move(s));
    }
    m.spacing = std::max(m.spacing, span / n);
}

}  // namespace

SampledManifold sample_manifold(const manifolds::NamedManifold& m, double lo, double hi,
                                int n) {
    if (n < 2) throw InsufficientSamples("sample_manifold: need at least 2 samples");
    SampledManifold out;
    Component comp;
    std::visit(
        [&](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, geometry::PlaneCurve>) {
                comp.curve = lift_plane_curve(b);
            } else if constexpr (std::is_same_v<T, SpaceCurve>) {
                comp.curve = b;
            } else {
                throw UnsupportedBase("reach sampling handles curve manifolds");
            }
        },
        m.base);
    comp.lo = lo;
    comp.hi = hi;
    comp.periodic = m.domain.periodic[0] && std::abs((hi - lo) - m.domain.period(0)) <
                                                1e-9 * (1.0 + m.domain.period(0));
    out.components.push_back(std::move(comp));
    append_samples(out, 0, n);
    return out;
}

SampledManifold make_parallel_lines(double distance, double lo, double hi, int n) {
    if (n < 2) throw InsufficientSamples("make_parallel_lines: need at least 2 samples");
    SampledManifold out;
    for (int c = 0; c < 2; ++c) {
        const double off = c == 0 ? 0.0 : distance;
        Component comp;
        comp.curve.position = [off](double x) { return Vec3(x, off, 0.0); };
        comp.curve.d1 = [](double) { return Vec3(1.0, 0.0, 0.0); };
        comp.curve.d2 = [](double) { return Vec3::Zero().eval(); };
        comp.curve.d3 = [](double) { return Vec3::Zero().eval(); };
        comp.lo = lo;
        comp.hi = hi;
        out.components.push_back(std::move(comp));
    }
    append_samples(out, 0, n);
    append_samples(out, 1, n);
    return out;
}

double local_fold_radius(const fermi::FermiChart& chart, std::span<const double> x) {
    const auto xx = chart.clamp_base(x);
    return std::visit(
        [&](const auto& b) -> double {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, geometry::PlaneCurve>) {
                const double kappa = std::abs(geometry::plane_curvature(b, xx[0]));
                return kappa > 0.0 ? std::min(kFoldCap, 1.0 / kappa) : kFoldCap;
            } else if constexpr (std::is_same_v<T, SpaceCurve>) {
                const double kappa = geometry::space_curvature_general(b, xx[0]);
                return kappa > 0.0 ? std::min(kFoldCap, 1.0 / kappa) : kFoldCap;
            } else {
                const auto f = geometry::fundamental_forms(b, xx[0], xx[1]);
                const double disc = std::max(0.0, f.H * f.H - f.K);
                const double kmax = std::max(std::abs(f.H + std::sqrt(disc)),
                                             std::abs(f.H - std::sqrt(disc)));
                return kmax > 0.0 ? std::min(kFoldCap, 1.0 / kmax) : kFoldCap;
            }
        },
        chart.base.base);
}

double local_fold_radius(const Component& comp, double x) {
    const double kappa = geometry::space_curvature_general(comp.curve, x);
    return kappa > 0.0 ? std::min(kFoldCap, 1.0 / kappa) : kFoldCap;
}

std::vector<ReachEstimate> pairwise_reach(const SampledManifold& m,
                                          double requested_resolution) {
    if (m.samples.size() < 2) {
        throw InsufficientSamples("pairwise_reach: need at least 2 samples");
    }
    if (m.spacing > requested_resolution) {
        throw InsufficientSamples("pairwise_reach: sample spacing " +
                                  std::to_string(m.spacing) + " exceeds requested resolution " +
                                  std::to_string(requested_resolution));
    }

    const std::size_t n = m.samples.size();
    std::vector<ReachEstimate> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& si = m.samples[i];
        ReachEstimate est;
        est.component = si.component;
        est.p = si.param;
        est.rho = si.local_fold;
        est.method = ReachMethod::LocalFold;
        est.spacing = m.spacing;

        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const auto& sj = m.samples[j];
            if (sj.component == si.component &&
                param_distance(m.components[si.component], si.param, sj.param) <
                    kNeighborFactor * si.local_fold) {
                continue;  // covered by the local criterion
            }
            const double d = (si.pos - sj.pos).norm();
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        if (best_j < n && 0.5 * best < est.rho) {
            const auto& sj = m.samples[best_j];
            est.rho = 0.5 * best;
            est.method = ReachMethod::PairwiseDistance;
            Witness w;
            w.comp_p = si.component;
            w.comp_q = sj.component;
            w.p_param = si.param;
            w.q_param = sj.param;
            const Eigen::Vector3d mid = 0.5 * (si.pos + sj.pos);
            w.v = mid - si.pos;
            w.vprime = mid - sj.pos;
            w.separation = ((si.pos + w.v) - (sj.pos + w.vprime)).norm();
            est.witness = w;
        }
        out[i] = std::move(est);
    }
    return out;
}

TubeVerdict tube_exists(const SampledManifold& m, double eps, double requested_resolution) {
    const auto estimates = pairwise_reach(m, requested_resolution);
    TubeVerdict v;
    v.spacing = m.spacing;
    v.min_rho = std::numeric_limits<double>::infinity();
    const ReachEstimate* worst = nullptr;
    for (const auto& est : estimates) {
        if (est.rho < v.min_rho) {
            v.min_rho = est.rho;
            worst = &est;
        }
    }
    v.exists = v.min_rho >= eps;
    if (!v.exists && worst != nullptr && worst->witness) v.witness = worst->witness;
    return v;
}

namespace {

nlohmann::json witness_json(const Witness& w) {
    return {{"component_p", w.comp_p},
            {"component_q", w.comp_q},
            {"p", w.p_param},
            {"q", w.q_param},
            {"v", {w.v.x(), w.v.y(), w.v.z()}},
            {"vprime", {w.vprime.x(), w.vprime.y(), w.vprime.z()}},
            {"separation", w.separation}};
}

}  // namespace

nlohmann::json reach_report_json(const std::vector<ReachEstimate>& estimates) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : estimates) {
        nlohmann::json j = {{"component", e.component},
                            {"p", e.p},
                            {"rho", e.rho},
                            {"method", e.method == ReachMethod::LocalFold
                                           ? "local-fold"
                                           : "pairwise-distance"},
                            {"spacing", e.spacing}};
        if (e.witness) j["witness"] = witness_json(*e.witness);
        arr.push_back(std::move(j));
    }
    return arr;
}

nlohmann::json tube_verdict_json(const TubeVerdict& v, double eps) {
    nlohmann::json j = {{"exists", v.exists},
                        {"eps", eps},
                        {"min_rho", v.min_rho},
                        {"spacing", v.spacing}};
    if (v.witness) j["witness"] = witness_json(*v.witness);
    return j;
}

}  // namespace tubewcp::reach
