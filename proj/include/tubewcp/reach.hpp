#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "tubewcp/fermi.hpp"
#include "tubewcp/manifolds.hpp"

namespace tubewcp::reach {

/// Two normal-exponential points that (nearly) collide; v and vprime are
/// the normal offsets realizing the near self-intersection.
struct Witness {
    int comp_p = 0, comp_q = 0;
    double p_param = 0.0, q_param = 0.0;
    Eigen::Vector3d v = Eigen::Vector3d::Zero();
    Eigen::Vector3d vprime = Eigen::Vector3d::Zero();
    double separation = 0.0;  // |exp(p, v) - exp(q, v')|
};

enum class ReachMethod { LocalFold, PairwiseDistance };

/// rho(p) estimate at one sample. spacing records the sample resolution the
/// estimate was computed at (this is an estimator, not a certifier).
struct ReachEstimate {
    int component = 0;
    double p = 0.0;          // base parameter
    double rho = 0.0;
    ReachMethod method = ReachMethod::LocalFold;
    std::optional<Witness> witness;
    double spacing = 0.0;
};

/// One connected piece of the manifold, as a curve in R^3 (plane curves are
/// embedded with z = 0).
struct Component {
    geometry::SpaceCurve curve;
    double lo = 0.0, hi = 1.0;
    bool periodic = false;
};

struct SampledManifold {
    struct Sample {
        int component = 0;
        double param = 0.0;
        Eigen::Vector3d pos = Eigen::Vector3d::Zero();
        Eigen::Vector3d tangent = Eigen::Vector3d::Zero();
        double local_fold = 1.0;
    };
    std::vector<Component> components;
    std::vector<Sample> samples;
    double spacing = 0.0;
};

/// Samples a named manifold (curve bases only) over [lo, hi] with n points.
SampledManifold sample_manifold(const manifolds::NamedManifold& m, double lo, double hi,
                                int n);

/// Two parallel lines at the given distance, treated as one manifold.
SampledManifold make_parallel_lines(double distance, double lo, double hi, int n);

/// sup{eps : det Phi*g > 0 on |y| < eps}, capped at 1; equals
/// min(1, 1/|kappa|) for curves and min(1, 1/max principal curvature) for
/// surfaces.
double local_fold_radius(const fermi::FermiChart& chart, std::span<const double> x);

/// Local fold radius of a sampled curve at parameter x (general
/// parametrization).
double local_fold_radius(const Component& comp, double x);

/// Per-sample rho estimates: the local fold radius combined with half the
/// distance to non-neighbor samples. Non-neighbors are samples on another
/// component or at base-parameter distance >= 4 x local fold radius; closer
/// samples are covered by the local criterion. Throws InsufficientSamples
/// if the sample spacing exceeds requested_resolution.
std::vector<ReachEstimate> pairwise_reach(const SampledManifold& m,
                                          double requested_resolution);

struct TubeVerdict {
    bool exists = false;
    double min_rho = 0.0;
    double spacing = 0.0;
    std::optional<Witness> witness;  // set when exists == false
};

/// True iff min rho over the samples is >= eps.
TubeVerdict tube_exists(const SampledManifold& m, double eps, double requested_resolution);

nlohmann::json reach_report_json(const std::vector<ReachEstimate>& estimates);
nlohmann::json tube_verdict_json(const TubeVerdict& v, double eps);

}  // namespace tubewcp::reach
