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

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "quench/config.hpp"
#include "quench/error.hpp"
#include "quench/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"quench: quenched statistics for random expanding circle maps"};
    app.set_version_flag("--version", quench::kVersion);
    app.require_subcommand(1, 1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    std::string out_dir;
    app.add_option("--config", config_path, "YAML experiment config (default: built-in doubling map)");
    app.add_option("--seed", seed, "RNG seed, overrides config and QUENCH_SEED");
    app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out-dir", out_dir, "output directory (default: output.dir from config)");

    std::optional<int> blocks_n;
    std::optional<double> blocks_beta, blocks_eps;
    for (const auto& name : quench::subcommands()) {
        auto* sub = app.add_subcommand(name);
        if (name == "blocks") {
            sub->add_option("--n", blocks_n, "window exponent n");
            sub->add_option("--beta", blocks_beta, "beta");
            sub->add_option("--eps", blocks_eps, "eps");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        quench::ExperimentConfig cfg = config_path.empty() ? quench::default_config() : quench::parse_config(config_path);
        if (seed) {
            cfg.seed = *seed;
        } else if (const char* env = std::getenv("QUENCH_SEED")) {
            cfg.seed = std::stoull(env);
        }
        if (blocks_n) cfg.blocks_n = *blocks_n;
        if (blocks_beta) cfg.rates.beta = *blocks_beta;
        if (blocks_eps) cfg.rates.eps = *blocks_eps;
        cfg.rates.validate();
        quench::Runner runner(cfg, out_dir.empty() ? cfg.out_dir : out_dir, workers);
        const int rc = runner.run(cmd);
        std::cout << runner.out_dir() << "/" << cmd << ".json " << (rc == 0 ? "ok" : "failed") << "\n";
        return rc;
    } catch (const quench::ConfigError& e) {
        std::cerr << "quench: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "quench: " << e.what() << "\n";
        return 1;
    }
}
