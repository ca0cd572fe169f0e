// Copyright 2026 The vqeforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "vqeforge/analysis.h"
#include "vqeforge/vqe.h"

namespace vqeforge {

/// Flat run configuration. Keys not listed in RunConfig::defaults() are rejected.
/// Relative paths resolve against the directory of the config file.
class RunConfig {
  public:
    static const nlohmann::json &defaults();

    /// Reads a JSON file. Parse errors name the file and line.
    static RunConfig load(const std::filesystem::path &path);
    static RunConfig from_json(const nlohmann::json &j, std::filesystem::path base_dir = ".");

    /// VQEFORGE_<KEY>=value overrides (values parsed as JSON, falling back to a string).
    void apply_env(char **envp);
    void set(const std::string &key, const nlohmann::json &value);

    const nlohmann::json &json() const { return j_; }
    template <class T>
    T get(const std::string &key) const {
        return j_.at(key).get<T>();
    }
    bool has(const std::string &key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    uint64_t seed() const;
    /// FNV-1a over the canonical dump, leaving out keys that do not change results.
    std::string hash() const;
    std::filesystem::path resolve(const std::string &p) const;

    /// FCIDUMP for one distance: fcidump if given, else data_dir/molecule_D.DD.fcidump.
    std::string fcidump_for(double distance) const;
    std::string fcidump() const;
    std::vector<CurveInput> curve_inputs() const;

    NoiseModel noise(int n_qubits) const;
    ProblemOptions problem() const;
    PipelineConfig pipeline(int n_qubits) const;
    BenchmarkOptions bench() const;

    /// Throws ConfigError for missing seed, bad enums or missing input files.
    void validate() const;

  private:
    nlohmann::json j_;
    std::filesystem::path base_;
};

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(const std::string &data);

}  // namespace vqeforge
