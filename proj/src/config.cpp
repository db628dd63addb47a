/*
   Copyright 2026 The quench Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include "quench/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "quench/birkhoff.hpp"
#include "quench/error.hpp"

namespace quench {

namespace {

template <class T>
const char* type_name() {
    if constexpr (std::is_same_v<T, std::string>) return "a string";
    else if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else return "a list";
}

struct Reader {
    std::vector<std::string> errs;

    template <class T>
    bool get(const YAML::Node& node, const std::string& key, T& out, const std::string& path) {
        const YAML::Node v = node[key];
        if (!v) return false;
        try {
            out = v.as<T>();
            return true;
        } catch (const YAML::Exception&) {
            errs.push_back(path + key + ": expected " + type_name<T>());
            return false;
        }
    }

    void keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& path) {
        if (!node.IsMap()) {
            errs.push_back((path.empty() ? std::string("config") : path.substr(0, path.size() - 1)) + ": expected a mapping");
            return;
        }
        for (const auto& kv : node) {
            const auto k = kv.first.as<std::string>();
            if (!allowed.count(k)) errs.push_back(path + k + ": unknown key");
        }
    }

    void check(bool ok, const std::string& msg) {
        if (!ok) errs.push_back(msg);
    }

    template <class F>
    void guard(const std::string& prefix, F&& fn) {
        try {
            fn();
        } catch (const ConfigError& e) {
            errs.push_back(prefix + e.what());
        }
    }
};

bool power_of_two(long m) { return m >= 2 && (m & (m - 1)) == 0; }

bool increasing_positive(const std::vector<long>& v) {
    if (v.empty() || v.front() < 1) return false;
    for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] <= v[k - 1]) return false;
    return true;
}

ExperimentConfig from_yaml(const YAML::Node& root) {
    ExperimentConfig cfg = default_config();
    cfg.alphabet.clear();
    cfg.probabilities.clear();
    Reader r;
    r.keys(root, {"name", "seed", "alphabet", "observable", "holder", "grid", "rates", "inducing", "monte_carlo",
                  "triplet", "ly", "hprobe", "asip", "blocks", "output"},
           "");
    if (!r.errs.empty()) throw ConfigError("config: " + r.errs.front());

    r.get(root, "name", cfg.name, "");
    r.get(root, "seed", cfg.seed, "");

    const YAML::Node alpha = root["alphabet"];
    if (!alpha || !alpha.IsSequence() || alpha.size() == 0) {
        r.errs.push_back("alphabet: expected a non-empty list of symbols");
    } else {
        double total = 0.0;
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            const std::string p = "alphabet[" + std::to_string(i) + "].";
            const YAML::Node s = alpha[i];
            r.keys(s, {"d", "b", "eps", "H", "a", "c", "prob"}, p);
            if (!s.IsMap()) continue;
            SymbolParams sp;
            r.get(s, "d", sp.d, p);
            r.get(s, "b", sp.b, p);
            r.get(s, "eps", sp.eps, p);
            r.get(s, "H", sp.holder_bound, p);
            r.get(s, "a", sp.a, p);
            r.get(s, "c", sp.c, p);
            double prob = -1.0;
            if (!r.get(s, "prob", prob, p)) r.errs.push_back(p + "prob: required");
            else if (!(prob >= 0.0)) r.errs.push_back(p + "prob: must be >= 0");
            r.guard(p.substr(0, p.size() - 1) + ": ", [&] { sp.validate(); });
            cfg.alphabet.push_back(sp);
            cfg.probabilities.push_back(prob);
            total += prob;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            std::ostringstream msg;
            msg << "alphabet: probabilities must sum to 1 (got " << total << ")";
            r.errs.push_back(msg.str());
        }
    }

    if (const YAML::Node o = root["observable"]) {
        r.keys(o, {"kind", "scale"}, "observable.");
        r.get(o, "kind", cfg.observable, "observable.");
        r.get(o, "scale", cfg.observable_scale, "observable.");
        r.check(cfg.observable == "trig" || cfg.observable == "coboundary" || cfg.observable == "zero",
                "observable.kind: must be one of trig, coboundary, zero");
        r.check(std::isfinite(cfg.observable_scale), "observable.scale: must be finite");
    }
    if (const YAML::Node h = root["holder"]) {
        r.keys(h, {"alpha", "xi"}, "holder.");
        r.get(h, "alpha", cfg.holder.alpha, "holder.");
        r.get(h, "xi", cfg.holder.xi, "holder.");
    }
    r.guard("", [&] { cfg.holder.validate(); });

    if (const YAML::Node g = root["grid"]) {
        r.keys(g, {"M", "M_long", "long_threshold", "relax"}, "grid.");
        r.get(g, "M", cfg.grid, "grid.");
        r.get(g, "M_long", cfg.grid_long, "grid.");
        r.get(g, "long_threshold", cfg.long_threshold, "grid.");
        r.get(g, "relax", cfg.relax, "grid.");
    }
    r.check(power_of_two(cfg.grid) && cfg.grid >= 8, "grid.M: must be a power of two >= 8");
    r.check(power_of_two(cfg.grid_long) && cfg.grid_long >= 8, "grid.M_long: must be a power of two >= 8");
    r.check(cfg.long_threshold >= 1, "grid.long_threshold: must be >= 1");
    r.check(cfg.relax >= 0, "grid.relax: must be >= 0");

    cfg.beta_defaulted = true;
    if (const YAML::Node rt = root["rates"]) {
        r.keys(rt, {"p", "delta", "beta", "eps_blocks", "slack"}, "rates.");
        r.get(rt, "p", cfg.rates.p, "rates.");
        r.get(rt, "delta", cfg.rates.delta, "rates.");
        if (r.get(rt, "beta", cfg.rates.beta, "rates.")) cfg.beta_defaulted = false;
        r.get(rt, "eps_blocks", cfg.rates.eps, "rates.");
        r.get(rt, "slack", cfg.rates.slack, "rates.");
    }
    if (cfg.beta_defaulted && cfg.rates.p > 2.0) cfg.rates.beta = default_beta(cfg.rates.p);
    r.guard("", [&] { cfg.rates.validate(); });

    if (const YAML::Node in = root["inducing"]) {
        r.keys(in, {"mode", "test_mode_window", "C0", "L", "N_check", "decay_steps", "n_max"}, "inducing.");
        r.get(in, "mode", cfg.membership, "inducing.");
        r.get(in, "test_mode_window", cfg.test_mode_window, "inducing.");
        r.get(in, "C0", cfg.criteria.C0, "inducing.");
        r.get(in, "L", cfg.criteria.L, "inducing.");
        r.get(in, "N_check", cfg.criteria.N_check, "inducing.");
        r.get(in, "decay_steps", cfg.criteria.decay_steps, "inducing.");
        r.get(in, "n_max", cfg.n_max, "inducing.");
    }
    r.check(cfg.membership == "test_window" || cfg.membership == "surrogate",
            "inducing.mode: must be test_window or surrogate");
    for (int s : cfg.test_mode_window)
        r.check(s >= 0 && s < static_cast<int>(cfg.alphabet.size()),
                "inducing.test_mode_window: symbol id " + std::to_string(s) + " out of alphabet range");
    r.check(cfg.criteria.C0 >= 1.0, "inducing.C0: must be >= 1");
    r.guard("", [&] { cfg.criteria.validate(); });
    r.check(cfg.n_max >= 1, "inducing.n_max: must be >= 1");

    if (const YAML::Node mc = root["monte_carlo"]) {
        r.keys(mc, {"N", "checkpoints"}, "monte_carlo.");
        r.get(mc, "N", cfg.mc_paths, "monte_carlo.");
        r.get(mc, "checkpoints", cfg.checkpoints, "monte_carlo.");
    }
    r.check(cfg.mc_paths >= 2, "monte_carlo.N: must be >= 2");
    r.check(increasing_positive(cfg.checkpoints), "monte_carlo.checkpoints: must be positive and increasing");

    if (const YAML::Node t = root["triplet"]) {
        r.keys(t, {"window"}, "triplet.");
        r.get(t, "window", cfg.triplet_window, "triplet.");
    }
    r.check(cfg.triplet_window >= 1, "triplet.window: must be >= 1");

    if (const YAML::Node l = root["ly"]) {
        r.keys(l, {"instances", "n_max", "T", "norm_cocycles"}, "ly.");
        r.get(l, "instances", cfg.ly_instances, "ly.");
        r.get(l, "n_max", cfg.ly_n_max, "ly.");
        r.get(l, "T", cfg.ly_T, "ly.");
        r.get(l, "norm_cocycles", cfg.norm_cocycles, "ly.");
    }
    r.check(cfg.ly_instances >= 1, "ly.instances: must be >= 1");
    r.check(cfg.ly_n_max >= 1 && cfg.ly_n_max <= 64, "ly.n_max: must lie in [1, 64]");
    r.check(cfg.ly_T > 0.0 && cfg.ly_T <= 1.0, "ly.T: must lie in (0, 1]");
    r.check(cfg.norm_cocycles >= 1, "ly.norm_cocycles: must be >= 1");

    if (const YAML::Node h = root["hprobe"]) {
        r.keys(h, {"k_grid", "shapes", "t_vectors", "eps0", "mc_paths"}, "hprobe.");
        r.get(h, "k_grid", cfg.h_k_grid, "hprobe.");
        std::vector<std::vector<long>> shapes;
        if (r.get(h, "shapes", shapes, "hprobe.")) {
            cfg.h_shapes.clear();
            for (const auto& s : shapes) {
                if (s.size() != 2 || s[0] < 0 || s[1] < 0) {
                    r.errs.push_back("hprobe.shapes: each shape is [pre, post] with nonnegative lengths");
                    break;
                }
                cfg.h_shapes.emplace_back(s[0], s[1]);
            }
        }
        r.get(h, "t_vectors", cfg.h_t_vectors, "hprobe.");
        r.get(h, "eps0", cfg.h_eps0, "hprobe.");
        r.get(h, "mc_paths", cfg.h_mc_paths, "hprobe.");
    }
    r.check(increasing_positive(cfg.h_k_grid), "hprobe.k_grid: must be positive and increasing");
    r.check(!cfg.h_shapes.empty(), "hprobe.shapes: must not be empty");
    r.check(cfg.h_t_vectors >= 1, "hprobe.t_vectors: must be >= 1");
    r.check(cfg.h_eps0 > 0.0 && cfg.h_eps0 <= 1.0, "hprobe.eps0: must lie in (0, 1]");
    r.check(cfg.h_mc_paths >= 0, "hprobe.mc_paths: must be >= 0");

    if (const YAML::Node a = root["asip"]) {
        r.keys(a, {"top_window", "paths", "fit_min_n", "clt_checkpoints", "clt_paths"}, "asip.");
        r.get(a, "top_window", cfg.asip_top_window, "asip.");
        r.get(a, "paths", cfg.asip_paths, "asip.");
        r.get(a, "fit_min_n", cfg.asip_fit_min_n, "asip.");
        r.get(a, "clt_checkpoints", cfg.clt_checkpoints, "asip.");
        r.get(a, "clt_paths", cfg.clt_paths, "asip.");
    }
    r.check(cfg.asip_top_window >= 1 && cfg.asip_top_window <= 20, "asip.top_window: must lie in [1, 20]");
    r.check(cfg.asip_paths >= 2, "asip.paths: must be >= 2");
    r.check(cfg.asip_fit_min_n >= 1, "asip.fit_min_n: must be >= 1");
    r.check(increasing_positive(cfg.clt_checkpoints), "asip.clt_checkpoints: must be positive and increasing");
    r.check(cfg.clt_paths >= 2, "asip.clt_paths: must be >= 2");

    if (const YAML::Node b = root["blocks"]) {
        r.keys(b, {"n"}, "blocks.");
        r.get(b, "n", cfg.blocks_n, "blocks.");
    }
    r.check(cfg.blocks_n >= 0 && cfg.blocks_n <= 40, "blocks.n: must lie in [0, 40]");

    if (const YAML::Node o = root["output"]) {
        r.keys(o, {"dir"}, "output.");
        r.get(o, "dir", cfg.out_dir, "output.");
    }

    if (!r.errs.empty()) {
        std::ostringstream msg;
        msg << r.errs.size() << " config violation(s):";
        for (const auto& e : r.errs) msg << "\n  " << e;
        throw ConfigError(msg.str());
    }
    return cfg;
}

}  // namespace

Observable ExperimentConfig::make_observable() const {
    if (observable == "coboundary") return Observable::coboundary(observable_scale);
    if (observable == "zero") return Observable::zero();
    return Observable::trig(observable_scale);
}

bool ExperimentConfig::potential_free() const {
    for (const auto& s : alphabet)
        if (s.eps != 0.0) return false;
    return true;
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.name = "doubling";
    cfg.alphabet = {SymbolParams{}};
    cfg.probabilities = {1.0};
    cfg.rates = RateParams::from_p(6.0);
    cfg.checkpoints = dyadic_grid(5, 14);
    cfg.clt_checkpoints = dyadic_grid(8, 12);
    return cfg;
}

ExperimentConfig parse_config_text(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config: YAML syntax error: ") + e.what());
    }
    return from_yaml(root);
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["name"] = c.name;
    j["seed"] = c.seed;
    auto& alpha = j["alphabet"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < c.alphabet.size(); ++i) {
        const auto& s = c.alphabet[i];
        alpha.push_back({{"d", s.d}, {"b", s.b}, {"eps", s.eps}, {"H", s.holder_bound}, {"a", s.a}, {"c", s.c},
                         {"prob", c.probabilities[i]}});
    }
    j["observable"] = {{"kind", c.observable}, {"scale", c.observable_scale}};
    j["holder"] = {{"alpha", c.holder.alpha}, {"xi", c.holder.xi}};
    j["grid"] = {{"M", c.grid}, {"M_long", c.grid_long}, {"long_threshold", c.long_threshold}, {"relax", c.relax}};
    j["rates"] = {{"p", c.rates.p}, {"delta", c.rates.delta}, {"beta", c.rates.beta}, {"beta_defaulted", c.beta_defaulted},
                  {"eps_blocks", c.rates.eps}, {"slack", c.rates.slack}};
    j["inducing"] = {{"mode", c.membership}, {"test_mode_window", c.test_mode_window}, {"C0", c.criteria.C0},
                     {"L", c.criteria.L}, {"N_check", c.criteria.N_check}, {"decay_steps", c.criteria.decay_steps},
                     {"n_max", c.n_max}};
    j["monte_carlo"] = {{"N", c.mc_paths}, {"checkpoints", c.checkpoints}};
    j["triplet"] = {{"window", c.triplet_window}};
    j["ly"] = {{"instances", c.ly_instances}, {"n_max", c.ly_n_max}, {"T", c.ly_T}, {"norm_cocycles", c.norm_cocycles}};
    auto shapes = nlohmann::ordered_json::array();
    for (const auto& [a, b] : c.h_shapes) shapes.push_back({a, b});
    j["hprobe"] = {{"k_grid", c.h_k_grid}, {"shapes", shapes}, {"t_vectors", c.h_t_vectors}, {"eps0", c.h_eps0},
                   {"mc_paths", c.h_mc_paths}};
    j["asip"] = {{"top_window", c.asip_top_window}, {"paths", c.asip_paths}, {"fit_min_n", c.asip_fit_min_n},
                 {"clt_checkpoints", c.clt_checkpoints}, {"clt_paths", c.clt_paths}};
    j["blocks"] = {{"n", c.blocks_n}};
    return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string s = to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace quench
