#include "kyle/config.hpp"

#include <fstream>

#include "json.hpp"

namespace kyle {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void reject_unknown(const json& obj, const char* section,
                    std::initializer_list<const char*> keys) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool known = false;
        for (const char* k : keys)
            if (key == k) known = true;
        if (!known)
            throw ConfigError(std::string("config: unknown key '") + key + "' in " + section);
    }
}

double get_num(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw ConfigError(std::string("config: ") + key + " must be a number");
    return obj[key].get<double>();
}

std::size_t get_size(const json& obj, const char* key, std::size_t fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_unsigned())
        throw ConfigError(std::string("config: ") + key + " must be a nonnegative integer");
    return obj[key].get<std::size_t>();
}

std::vector<double> get_vec(const json& obj, const char* key, std::vector<double> fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_array()) throw ConfigError(std::string("config: ") + key + " must be an array");
    std::vector<double> out;
    for (const auto& v : obj[key]) {
        if (!v.is_number()) throw ConfigError(std::string("config: ") + key + " entries must be numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

std::string effective_config_text(const ExperimentConfig& c) {
    ordered_json j;
    j["model"]["kind"] = to_string(c.kind);
    j["model"]["gamma"] = c.gamma;
    switch (c.kind) {
        case SignalKind::DeterministicVol:
            j["model"]["q"] = c.q;
            j["model"]["Sigma"] = c.Sigma;
            break;
        case SignalKind::Quadratic:
            j["model"]["delta"] = c.delta;
            j["model"]["b"] = c.b;
            j["model"]["d"] = c.d;
            break;
        default:
            j["model"]["base_C"] = c.base_C;
            j["model"]["clock_v0"] = c.clock_v0;
            break;
    }
    if (c.tamper_w) j["model"]["tamper_w"] = *c.tamper_w;
    j["sim"] = {{"n_paths", c.n_paths},
                {"n_steps", c.n_steps},
                {"epsilon", c.epsilon},
                {"seed", c.seed},
                {"scheme", c.scheme == Scheme::TransformedEuler
                               ? "transformed"
                               : (c.scheme == Scheme::XiEuler ? "xi-euler" : "exact-gaussian")}};
    const auto& b = c.battery;
    j["verify"] = {{"tests", b.only.empty() ? std::vector<std::string>{"all"} : b.only},
                   {"paths_major", b.paths_major},
                   {"paths_bridge", b.paths_bridge},
                   {"checkpoints", b.checkpoints},
                   {"n_bins", b.n_bins},
                   {"window_bounds", b.window_bounds},
                   {"bridge_epsilons", b.bridge_epsilons},
                   {"z_threshold", b.z_threshold},
                   {"z_threshold_heavy", b.z_threshold_heavy},
                   {"ks_pvalue_min", b.ks_pvalue_min},
                   {"bridge_ratio_min", b.bridge_ratio_min},
                   {"bridge_final_rms", b.bridge_final_rms},
                   {"jump_penalty_tol", b.jump_penalty_tol},
                   {"exclusion_max", b.exclusion_max},
                   {"kurtosis_warn", b.kurtosis_warn},
                   {"invariance_alt_v0", b.invariance_alt_v0},
                   {"paths_invariance", b.paths_invariance},
                   {"invariance_nodes", b.invariance_nodes}};
    j["sweep"] = {{"parameter", c.sweep_parameter},
                  {"values", c.sweep_values},
                  {"paths", c.sweep_paths}};
    j["density"] = {{"s", c.dens_s},       {"t", c.dens_t},         {"x_values", c.dens_x},
                    {"y_min", c.dens_y_min}, {"y_max", c.dens_y_max}, {"n_y", c.dens_n_y}};
    j["output"] = {{"directory", c.out_dir}, {"dump_paths", c.dump_paths}};
    return j.dump();
}

void refresh_hash(ExperimentConfig& cfg) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(effective_config_text(cfg))));
    cfg.config_hash = buf;
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    refresh_hash(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    json root;
    try {
        in >> root;
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("config: parse error: ") + ex.what());
    }
    if (!root.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown(root, "top level", {"model", "sim", "verify", "sweep", "density", "output"});
    if (!root.contains("model")) throw ConfigError("config: missing model section");

    ExperimentConfig cfg;

    const json& m = root["model"];
    reject_unknown(m, "model",
                   {"kind", "gamma", "q", "Sigma", "delta", "b", "d", "base_C", "clock_v0",
                    "tamper_w"});
    const std::string kind = m.value("kind", "deterministic");
    if (kind == "deterministic")
        cfg.kind = SignalKind::DeterministicVol;
    else if (kind == "quadratic")
        cfg.kind = SignalKind::Quadratic;
    else if (kind == "static")
        cfg.kind = SignalKind::Static;
    else
        throw ConfigError("config: model.kind must be deterministic | quadratic | static");
    cfg.gamma = get_num(m, "gamma", cfg.gamma);
    cfg.q = get_num(m, "q", cfg.q);
    cfg.Sigma = get_num(m, "Sigma", cfg.Sigma);
    cfg.delta = get_num(m, "delta", cfg.delta);
    cfg.b = get_num(m, "b", cfg.b);
    cfg.d = get_num(m, "d", cfg.d);
    cfg.base_C = get_num(m, "base_C", cfg.base_C);
    cfg.clock_v0 = get_num(m, "clock_v0", cfg.clock_v0);
    if (m.contains("tamper_w")) cfg.tamper_w = get_num(m, "tamper_w", 1.0);

    if (root.contains("sim")) {
        const json& s = root["sim"];
        reject_unknown(s, "sim", {"n_paths", "n_steps", "epsilon", "seed", "scheme"});
        cfg.n_paths = get_size(s, "n_paths", cfg.n_paths);
        cfg.n_steps = get_size(s, "n_steps", cfg.n_steps);
        cfg.epsilon = get_num(s, "epsilon", cfg.epsilon);
        cfg.seed = get_size(s, "seed", cfg.seed);
        const std::string scheme = s.value("scheme", "transformed");
        if (scheme == "transformed")
            cfg.scheme = Scheme::TransformedEuler;
        else if (scheme == "xi-euler")
            cfg.scheme = Scheme::XiEuler;
        else if (scheme == "exact-gaussian")
            cfg.scheme = Scheme::TransformedExactGaussian;
        else
            throw ConfigError("config: sim.scheme must be transformed | xi-euler | exact-gaussian");
        if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0))
            throw ConfigError("config: sim.epsilon must lie in (0, 1)");
        if (cfg.n_steps < 2) throw ConfigError("config: sim.n_steps must be at least 2");
        if (cfg.n_paths < 1) throw ConfigError("config: sim.n_paths must be at least 1");
    }

    cfg.battery.seed = cfg.seed;
    cfg.battery.epsilon = cfg.epsilon;
    cfg.battery.grid_nodes = cfg.n_steps;
    if (root.contains("verify")) {
        const json& v = root["verify"];
        reject_unknown(v, "verify",
                       {"tests", "paths_major", "paths_bridge", "checkpoints", "n_bins",
                        "window_bounds", "bridge_epsilons", "z_threshold", "z_threshold_heavy",
                        "ks_pvalue_min", "bridge_ratio_min", "bridge_final_rms",
                        "jump_penalty_tol", "exclusion_max", "kurtosis_warn",
                        "invariance_alt_v0", "paths_invariance", "invariance_nodes"});
        auto& b = cfg.battery;
        if (v.contains("tests")) {
            if (!v["tests"].is_array()) throw ConfigError("config: verify.tests must be an array");
            for (const auto& t : v["tests"]) {
                if (!t.is_string()) throw ConfigError("config: verify.tests entries must be strings");
                const std::string name = t.get<std::string>();
                if (name != "all") b.only.push_back(name);
            }
        }
        b.paths_major = get_size(v, "paths_major", b.paths_major);
        b.paths_bridge = get_size(v, "paths_bridge", b.paths_bridge);
        b.checkpoints = get_vec(v, "checkpoints", b.checkpoints);
        b.n_bins = get_size(v, "n_bins", b.n_bins);
        b.window_bounds = get_vec(v, "window_bounds", b.window_bounds);
        b.bridge_epsilons = get_vec(v, "bridge_epsilons", b.bridge_epsilons);
        b.z_threshold = get_num(v, "z_threshold", b.z_threshold);
        b.z_threshold_heavy = get_num(v, "z_threshold_heavy", b.z_threshold_heavy);
        b.ks_pvalue_min = get_num(v, "ks_pvalue_min", b.ks_pvalue_min);
        b.bridge_ratio_min = get_num(v, "bridge_ratio_min", b.bridge_ratio_min);
        b.bridge_final_rms = get_num(v, "bridge_final_rms", b.bridge_final_rms);
        b.jump_penalty_tol = get_num(v, "jump_penalty_tol", b.jump_penalty_tol);
        b.exclusion_max = get_num(v, "exclusion_max", b.exclusion_max);
        b.kurtosis_warn = get_num(v, "kurtosis_warn", b.kurtosis_warn);
        b.invariance_alt_v0 = get_num(v, "invariance_alt_v0", b.invariance_alt_v0);
        b.paths_invariance = get_size(v, "paths_invariance", b.paths_invariance);
        b.invariance_nodes = get_size(v, "invariance_nodes", b.invariance_nodes);
    }
    cfg.battery.run_static_invariance = cfg.kind == SignalKind::Static;

    if (root.contains("sweep")) {
        const json& s = root["sweep"];
        reject_unknown(s, "sweep", {"parameter", "values", "paths"});
        cfg.sweep_parameter = s.value("parameter", cfg.sweep_parameter);
        cfg.sweep_values = get_vec(s, "values", {});
        cfg.sweep_paths = get_size(s, "paths", cfg.sweep_paths);
        if (cfg.sweep_parameter != "gamma")
            throw ConfigError("config: sweep.parameter must be gamma");
    }

    if (root.contains("density")) {
        const json& dj = root["density"];
        reject_unknown(dj, "density", {"s", "t", "x_values", "y_min", "y_max", "n_y"});
        cfg.dens_s = get_num(dj, "s", cfg.dens_s);
        cfg.dens_t = get_num(dj, "t", cfg.dens_t);
        cfg.dens_x = get_vec(dj, "x_values", cfg.dens_x);
        cfg.dens_y_min = get_num(dj, "y_min", cfg.dens_y_min);
        cfg.dens_y_max = get_num(dj, "y_max", cfg.dens_y_max);
        cfg.dens_n_y = static_cast<int>(get_size(dj, "n_y", cfg.dens_n_y));
        if (cfg.dens_n_y < 2) throw ConfigError("config: density.n_y must be at least 2");
    }

    if (root.contains("output")) {
        const json& o = root["output"];
        reject_unknown(o, "output", {"directory", "dump_paths"});
        cfg.out_dir = o.value("directory", cfg.out_dir);
        if (o.contains("dump_paths")) {
            if (!o["dump_paths"].is_boolean())
                throw ConfigError("config: output.dump_paths must be a boolean");
            cfg.dump_paths = o["dump_paths"].get<bool>();
        }
    }

    refresh_hash(cfg);
    return cfg;
}

BuiltModel build_from_config(const ExperimentConfig& cfg) {
    switch (cfg.kind) {
        case SignalKind::DeterministicVol:
            return build_deterministic(DeterministicVolSpec::constant(cfg.gamma, cfg.q, cfg.Sigma));
        case SignalKind::Quadratic:
            return build_quadratic(QuadraticVolSpec{cfg.gamma, cfg.delta, cfg.b, cfg.d});
        default:
            return build_static(StaticSpec{cfg.gamma, cfg.base_C}, cfg.clock_v0);
    }
}

PricingRule rule_for_checks(const ExperimentConfig& cfg, const BuiltModel& built) {
    if (cfg.tamper_w) return constant_rule(*cfg.tamper_w);
    return built.rule;
}

}  // namespace kyle
