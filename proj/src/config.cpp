#include "tubewcp/config.hpp"

#include <cmath>
#include <fstream>

#include "tubewcp/errors.hpp"

namespace tubewcp::config {

namespace {

template <class T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    if (!j.contains("schema_version")) {
        throw ConfigError("config: schema_version is mandatory");
    }
    cfg.schema_version = j.at("schema_version").get<int>();
    if (cfg.schema_version != 1) {
        throw ConfigError("config: unsupported schema_version " +
                          std::to_string(cfg.schema_version));
    }
    if (j.contains("manifold")) {
        const auto& m = j.at("manifold");
        if (m.is_string()) {
            cfg.manifold_id = m.get<std::string>();
        } else {
            cfg.manifold_id = m.at("id").get<std::string>();
            if (m.contains("params")) cfg.manifold_params = m.at("params");
        }
    }
    read_if(j, "eps", cfg.eps);
    if (!(cfg.eps > 0.0)) throw ConfigError("config: eps must be > 0");
    if (j.contains("weight")) cfg.weight = j.at("weight");
    if (j.contains("reaction")) cfg.reaction = j.at("reaction");
    read_if(j, "lambda", cfg.lambda);
    read_if(j, "q", cfg.q);
    if (!(cfg.q >= 1.0)) throw ConfigError("config: q must be >= 1");
    read_if(j, "t", cfg.t);
    if (j.contains("grid")) {
        read_if(j.at("grid"), "nx", cfg.nx);
        read_if(j.at("grid"), "ny", cfg.ny);
    }
    if (j.contains("boundary")) {
        read_if(j.at("boundary"), "u", cfg.boundary_u);
        read_if(j.at("boundary"), "v", cfg.boundary_v);
    }
    if (j.contains("ladder")) cfg.ladder = j.at("ladder").get<std::vector<double>>();
    read_if(j, "gamma", cfg.gamma);
    read_if(j, "C1", cfg.C1);
    if (j.contains("growth")) {
        const auto& g = j.at("growth");
        if (g.contains("radii")) cfg.growth_radii = g.at("radii").get<std::vector<double>>();
        read_if(g, "mesh_n", cfg.growth_mesh_n);
    }
    if (j.contains("window")) {
        const auto w = j.at("window").get<std::vector<double>>();
        if (w.size() != 2 || !(w[1] > w[0])) throw ConfigError("config: bad window");
        cfg.window_lo = w[0];
        cfg.window_hi = w[1];
        cfg.has_window = true;
    }
    read_if(j, "samples", cfg.samples);
    read_if(j, "resolution", cfg.resolution);
    read_if(j, "synthetic_theta1", cfg.synthetic_theta1);
    read_if(j, "grad_u_inf", cfg.grad_u_inf);
    read_if(j, "grad_v_inf", cfg.grad_v_inf);
    read_if(j, "L_f", cfg.L_f_override);
    read_if(j, "C_a", cfg.C_a_override);
    read_if(j, "C_S", cfg.C_S_override);
    read_if(j, "R_large", cfg.R_large);
    read_if(j, "seed", cfg.seed);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file " + path.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }
    try {
        return config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config field error: " + std::string(e.what()));
    }
}

analysis::Weight build_weight(const ExperimentConfig& cfg) {
    const auto& w = cfg.weight;
    const std::string kind = w.value("kind", "constant");
    if (kind == "constant") {
        const double value = w.value("value", 1.0);
        if (value < 0.0) throw ConfigError("weight: constant must be >= 0");
        return analysis::constant_weight(value);
    }
    if (kind == "radial_power") {
        const double base = w.value("base", 0.0);
        const double coef = w.value("coef", 1.0);
        const double alpha = w.value("alpha", 0.25);
        const double cap = w.value("cap", 1.0);
        if (base < 0.0 || coef < 0.0) throw ConfigError("weight: radial_power must be >= 0");
        return analysis::radial_power_weight(base, coef, alpha, cap, cfg.eps);
    }
    throw ConfigError("weight: unknown kind '" + kind + "'");
}

analysis::Reaction build_reaction(const ExperimentConfig& cfg) {
    const auto& r = cfg.reaction;
    const std::string kind = r.value("kind", "none");
    analysis::Reaction out;
    if (kind == "none") return out;
    if (kind == "linear") {
        const double c = r.value("coef", 0.25);
        out.f = [c](const Eigen::VectorXd&, double u) { return c * u; };
        return out;
    }
    if (kind == "constant") {
        const double c = r.value("value", 1.0);
        out.f = [c](const Eigen::VectorXd&, double) { return c; };
        return out;
    }
    if (kind == "scaled_sin") {
        const double c = r.value("coef", 1.0);
        out.f = [c](const Eigen::VectorXd&, double u) { return c * std::sin(u); };
        return out;
    }
    throw ConfigError("reaction: unknown kind '" + kind + "'");
}

nlohmann::json resolved_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["schema_version"] = cfg.schema_version;
    j["manifold"] = {{"id", cfg.manifold_id}, {"params", cfg.manifold_params}};
    j["eps"] = cfg.eps;
    j["weight"] = cfg.weight;
    j["reaction"] = cfg.reaction;
    j["lambda"] = cfg.lambda;
    j["q"] = cfg.q;
    j["t"] = cfg.t;
    j["grid"] = {{"nx", cfg.nx}, {"ny", cfg.ny}};
    j["boundary"] = {{"u", cfg.boundary_u}, {"v", cfg.boundary_v}};
    j["ladder"] = cfg.ladder;
    j["gamma"] = cfg.gamma;
    j["C1"] = cfg.C1;
    j["growth"] = {{"radii", cfg.growth_radii}, {"mesh_n", cfg.growth_mesh_n}};
    if (cfg.has_window) j["window"] = {cfg.window_lo, cfg.window_hi};
    j["samples"] = cfg.samples;
    j["resolution"] = cfg.resolution;
    if (!cfg.synthetic_theta1.empty()) j["synthetic_theta1"] = cfg.synthetic_theta1;
    j["grad_u_inf"] = cfg.grad_u_inf;
    j["grad_v_inf"] = cfg.grad_v_inf;
    if (cfg.L_f_override >= 0.0) j["L_f"] = cfg.L_f_override;
    if (cfg.C_a_override >= 0.0) j["C_a"] = cfg.C_a_override;
    if (cfg.C_S_override >= 0.0) j["C_S"] = cfg.C_S_override;
    j["R_large"] = cfg.R_large;
    j["seed"] = cfg.seed;
    return j;
}

}  // namespace tubewcp::config
