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

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "quench/config.hpp"

namespace quench {

inline constexpr const char* kVersion = "0.1.0";

/// Subcommands in report order.
const std::vector<std::string>& subcommands();

class Runner {
public:
    Runner(ExperimentConfig cfg, std::string out_dir, int workers = 1);

    /// Runs one subcommand, writes <name>.json (plus tables) and updates
    /// meta.json. Returns 0 on success, 1 on a module failure (the report
    /// then carries status "failed"). Throws ArgumentError for unknown names.
    int run(const std::string& name);

    /// The report body without writing anything.
    nlohmann::ordered_json compute(const std::string& name);

    const ExperimentConfig& config() const noexcept { return cfg_; }
    const std::string& hash() const noexcept { return hash_; }
    const std::string& out_dir() const noexcept { return out_dir_; }

    nlohmann::ordered_json triplet();
    nlohmann::ordered_json variance();
    nlohmann::ordered_json ly();
    nlohmann::ordered_json induce();
    nlohmann::ordered_json blocks();
    nlohmann::ordered_json hprobe();
    nlohmann::ordered_json asip();
    nlohmann::ordered_json report();

private:
    std::shared_ptr<const MeasureStack> stack_for(long last, bool normalized = true) const;
    std::unique_ptr<MembershipOracle> membership(const std::shared_ptr<const MeasureStack>& stack,
                                                 double sigma2) const;
    InducedSystem returns_for(const MembershipOracle& oracle, long count) const;
    nlohmann::ordered_json envelope(const std::string& name) const;
    void write_text(const std::string& file, const std::string& text) const;
    void write_meta(const std::string& name, const std::string& status) const;

    ExperimentConfig cfg_;
    std::string out_dir_;
    int workers_;
    std::string hash_;
    std::vector<std::pair<std::string, std::string>> tables_;  // pending CSV/markdown files
};

/// Shortest round-trip decimal, locale independent.
std::string format_double(double v);

}  // namespace quench
