#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tubewcp/analysis.hpp"
#include "tubewcp/pde.hpp"

namespace tubewcp::config {

/// Resolved experiment description. All physical quantities are in the
/// arc-length unit system of the base manifold.
struct ExperimentConfig {
    int schema_version = 1;
    std::string manifold_id = "circle";
    nlohmann::json manifold_params = nlohmann::json::object();
    double eps = 0.1;

    nlohmann::json weight = {{"kind", "constant"}, {"value", 1.0}};
    nlohmann::json reaction = {{"kind", "none"}};
    double lambda = 0.0;
    double q = 2.0;
    double t = 3.0;

    int nx = 64;
    int ny = 16;
    double boundary_u = 0.0;
    double boundary_v = 0.0;

    std::vector<double> ladder;        // dyadic radii; empty -> derived
    double gamma = 0.0;                // <= 0 -> fitted from the manifold
    double C1 = 0.0;                   // <= 0 -> fitted
    std::vector<double> growth_radii;  // empty -> derived from the window
    int growth_mesh_n = 2048;

    double window_lo = 0.0, window_hi = 0.0;
    bool has_window = false;
    int samples = 512;
    double resolution = 1.0;

    std::string synthetic_theta1;  // "identity" bypasses the bundle (test hook)
    double grad_u_inf = 0.0, grad_v_inf = 0.0;
    double L_f_override = -1.0;  // >= 0 replaces the probed constant
    double C_a_override = -1.0;
    double C_S_override = -1.0;
    double R_large = 1e3;

    std::uint64_t seed = 0;
};

/// Parses and validates. The schema_version field is mandatory; unknown
/// kinds and non-positive eps throw ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

analysis::Weight build_weight(const ExperimentConfig& cfg);
analysis::Reaction build_reaction(const ExperimentConfig& cfg);

/// Full resolved config echoed into every report.
nlohmann::json resolved_json(const ExperimentConfig& cfg);

}  // namespace tubewcp::config
