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

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "quench/blocks.hpp"
#include "quench/driving.hpp"
#include "quench/holder.hpp"
#include "quench/inducing.hpp"

namespace quench {

struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t seed = 0;

    std::vector<SymbolParams> alphabet;
    std::vector<double> probabilities;

    std::string observable = "trig";  // trig | coboundary | zero
    double observable_scale = 1.0;

    HolderParams holder;
    int grid = 1024;
    int grid_long = 256;  // stacks longer than long_threshold offsets with eps != 0
    long long_threshold = 2048;
    long relax = 40;

    RateParams rates;
    bool beta_defaulted = true;

    std::string membership = "test_window";  // test_window | surrogate
    std::vector<int> test_mode_window;      // empty: every index is in E
    ECriteria criteria;
    long n_max = 10000;

    long mc_paths = 10000;
    std::vector<long> checkpoints;  // default 2^5..2^14

    long triplet_window = 64;

    long ly_instances = 100;
    long ly_n_max = 8;
    double ly_T = 1.0;
    long norm_cocycles = 50;

    std::vector<long> h_k_grid{1, 2, 4, 8, 16};
    std::vector<std::pair<long, long>> h_shapes{{8, 8}, {4, 16}, {16, 4}};
    int h_t_vectors = 5;
    double h_eps0 = 1.0;
    long h_mc_paths = 2000;

    int asip_top_window = 13;
    long asip_paths = 40000;
    long asip_fit_min_n = 64;
    std::vector<long> clt_checkpoints;  // default 2^8..2^12
    long clt_paths = 10000;

    int blocks_n = 10;

    std::string out_dir = "out";

    OmegaPath path() const { return OmegaPath::sample(seed, alphabet, probabilities); }
    Observable make_observable() const;
    bool potential_free() const;
};

/// Reads and validates a YAML config. Throws ConfigError listing every
/// violation with its field path.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

/// Built-in config: single symbol d=2, eps=0, psi = cos 2 pi x.
ExperimentConfig default_config();

nlohmann::ordered_json to_json(const ExperimentConfig& cfg);
/// FNV-1a 64 over the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace quench
