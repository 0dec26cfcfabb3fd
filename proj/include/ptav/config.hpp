#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "ptav/runtime.hpp"

namespace ptav {

// Raised for malformed configuration (unknown keys, bad values); the CLI maps
// it to exit code 3.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using ConfigMap = std::map<std::string, std::string>;

inline const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys{
        "seed",
        "tracker.alpha",
        "tracker.lambda",
        "tracker.learning_rate_cf",
        "tracker.learning_rate_hist",
        "tracker.label_sigma_factor",
        "tracker.search_padding",
        "tracker.scale_factors",
        "tracker.scale_damping",
        "tracker.cell_size",
        "tracker.n_orientations",
        "tracker.hist_bins_rgb",
        "tracker.hist_bins_gray",
        "verifier.embedder",
        "verifier.tau0",
        "verifier.tau1",
        "verifier.tau2",
        "verifier.gamma_init",
        "verifier.gamma_step",
        "verifier.gamma_max",
        "verifier.stride_fraction",
        "verifier.candidate_scales",
        "verifier.score_mode",
        "verifier.patch_size",
        "verifier.staging_size",
        "verifier.max_clusters",
        "verifier.delay_ms",
        "runtime.n_int",
        "runtime.mode",
        "runtime.delta",
        "runtime.lockstep_latency",
    };
    return keys;
}

// Flat `section.key = value` lines; '#' starts a comment.
inline ConfigMap parse_config_text(const std::string& text) {
    ConfigMap map;
    std::stringstream ss(text);
    std::string line;
    const auto trim = [](std::string& s) {
        while (!s.empty() && std::isspace((unsigned char)s.front())) s.erase(s.begin());
        while (!s.empty() && std::isspace((unsigned char)s.back())) s.pop_back();
    };
    while (std::getline(ss, line)) {
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value: " + line);
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        trim(key);
        trim(value);
        if (!known_config_keys().count(key)) throw ConfigError("unknown config key: " + key);
        map[key] = value;
    }
    return map;
}

inline ConfigMap parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

// Later maps win; used for flag-over-file precedence.
inline ConfigMap merge_configs(ConfigMap base, const ConfigMap& overrides) {
    for (const auto& [k, v] : overrides) {
        if (!known_config_keys().count(k)) throw ConfigError("unknown config key: " + k);
        base[k] = v;
    }
    return base;
}

namespace detail {

inline double config_double(const ConfigMap& m, const std::string& key, double fallback) {
    const auto it = m.find(key);
    if (it == m.end()) return fallback;
    try {
        size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw ConfigError("bad number for " + key);
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("bad number for " + key + ": " + it->second);
    }
}

inline int config_int(const ConfigMap& m, const std::string& key, int fallback) {
    const double v = config_double(m, key, double(fallback));
    const int i = int(v);
    if (double(i) != v) throw ConfigError("expected integer for " + key);
    return i;
}

inline std::vector<double> config_list(const ConfigMap& m, const std::string& key,
                                       std::vector<double> fallback) {
    const auto it = m.find(key);
    if (it == m.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (token.empty()) continue;
        try {
            out.push_back(std::stod(token));
        } catch (const std::exception&) {
            throw ConfigError("bad list entry for " + key + ": " + token);
        }
    }
    if (out.empty()) throw ConfigError("empty list for " + key);
    return out;
}

}  // namespace detail

// Typed options assembled from a validated key/value map.
inline PtavOptions build_options(const ConfigMap& map) {
    PtavOptions opt;

    TrackerConfig& t = opt.tracker;
    t.alpha = detail::config_double(map, "tracker.alpha", t.alpha);
    t.lambda = detail::config_double(map, "tracker.lambda", t.lambda);
    t.learning_rate_cf = detail::config_double(map, "tracker.learning_rate_cf", t.learning_rate_cf);
    t.learning_rate_hist =
        detail::config_double(map, "tracker.learning_rate_hist", t.learning_rate_hist);
    t.label_sigma_factor =
        detail::config_double(map, "tracker.label_sigma_factor", t.label_sigma_factor);
    t.search_padding = detail::config_double(map, "tracker.search_padding", t.search_padding);
    t.scale_factors = detail::config_list(map, "tracker.scale_factors", t.scale_factors);
    t.scale_damping = detail::config_double(map, "tracker.scale_damping", t.scale_damping);
    t.cell_size = detail::config_int(map, "tracker.cell_size", t.cell_size);
    t.n_orientations = detail::config_int(map, "tracker.n_orientations", t.n_orientations);
    t.hist_bins_rgb = detail::config_int(map, "tracker.hist_bins_rgb", t.hist_bins_rgb);
    t.hist_bins_gray = detail::config_int(map, "tracker.hist_bins_gray", t.hist_bins_gray);

    VerifierConfig& v = opt.verifier;
    v.tau0 = detail::config_double(map, "verifier.tau0", v.tau0);
    v.tau1 = detail::config_double(map, "verifier.tau1", v.tau1);
    v.tau2 = detail::config_double(map, "verifier.tau2", v.tau2);
    v.gamma_init = detail::config_double(map, "verifier.gamma_init", v.gamma_init);
    v.gamma_step = detail::config_double(map, "verifier.gamma_step", v.gamma_step);
    v.gamma_max = detail::config_double(map, "verifier.gamma_max", v.gamma_max);
    v.stride_fraction = detail::config_double(map, "verifier.stride_fraction", v.stride_fraction);
    v.candidate_scales = detail::config_list(map, "verifier.candidate_scales", v.candidate_scales);
    v.patch_size = detail::config_int(map, "verifier.patch_size", v.patch_size);
    v.L = detail::config_int(map, "verifier.staging_size", v.L);
    v.n_c_max = detail::config_int(map, "verifier.max_clusters", v.n_c_max);
    v.delay_ms = detail::config_double(map, "verifier.delay_ms", v.delay_ms);
    if (const auto it = map.find("verifier.score_mode"); it != map.end()) {
        if (it->second == "cluster-mean") v.score_mode = ScoreMode::kClusterMean;
        else if (it->second == "literal-sum") v.score_mode = ScoreMode::kLiteralSum;
        else throw ConfigError("score_mode must be cluster-mean or literal-sum");
    }

    RuntimeConfig& r = opt.runtime;
    r.n_int_init = detail::config_int(map, "runtime.n_int", r.n_int_init);
    r.delta = detail::config_int(map, "runtime.delta", r.delta);
    r.lockstep_latency = detail::config_int(map, "runtime.lockstep_latency", r.lockstep_latency);
    r.seed = uint64_t(detail::config_int(map, "seed", 1));
    if (const auto it = map.find("runtime.mode"); it != map.end()) {
        if (it->second == "async") r.mode = RuntimeConfig::Mode::kAsync;
        else if (it->second == "lockstep") r.mode = RuntimeConfig::Mode::kLockstep;
        else throw ConfigError("mode must be async or lockstep");
    }
    if (const auto it = map.find("verifier.embedder"); it != map.end()) {
        if (it->second == "none") r.verifier_enabled = false;
        else if (it->second == "hogcolor") r.verifier_enabled = true;
        else throw ConfigError("embedder must be hogcolor or none");
    }

    try {
        t.validate();
        v.validate();
        r.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return opt;
}

}  // namespace ptav
