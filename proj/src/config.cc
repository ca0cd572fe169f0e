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

#include "vqeforge/config.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace vqeforge {

const nlohmann::json &RunConfig::defaults() {
    static const nlohmann::json d = {
        {"molecule", nullptr},
        {"data_dir", "data/molecules"},
        {"distance", nullptr},
        {"distances", nullptr},
        {"fcidump", nullptr},
        {"eps_thres", 1e-6},
        {"use_override", true},
        {"symmetry_filter", true},
        {"multireference", false},
        {"layout", nullptr},
        {"shots", 100000},
        {"final_shots", 0},
        {"drop", true},
        {"error_tolerance", 1.6e-3},
        {"plan_iterations", 500},
        {"plan_restarts", 4},
        {"noise", "noiseless"},
        {"stages", "rem,cf,sv,cmx"},
        {"loop_estimator", "rem_cf"},
        {"moments", true},
        {"cdr_moments", true},
        {"cdr_training", 100},
        {"cdr_k", 1},
        {"cdr_r", 10},
        {"cdr_sigma", 0.05},
        {"cdr_mu", 1e-4},
        {"cdr_shots", 20000},
        {"calibration_shots", 100000},
        {"trajectories", 200},
        {"sim_method", "auto"},
        {"max_iters", 15},
        {"lr", 0.2},
        {"convergence_tol", 1e-6},
        {"mask_size", 0},
        {"theta0", nullptr},
        {"seed", nullptr},
        {"threads", 1},
        {"bench_m", {0, 1, 2, 3, 4, 6, 8, 12, 16, 24}},
        {"bench_repeats", 10},
        {"bench_readout", false},
        {"fit_input", nullptr},
    };
    return d;
}

std::string fnv1a_hex(const std::string &data) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

std::string read_text(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path &path) {
    const std::string text = read_text(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        const size_t upto = std::min<size_t>(e.byte, text.size());
        const long line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
        throw ConfigError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
    auto base = path.parent_path();
    if (base.empty()) base = ".";
    try {
        return from_json(j, base);
    } catch (const ConfigError &e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

RunConfig RunConfig::from_json(const nlohmann::json &j, std::filesystem::path base_dir) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig c;
    c.base_ = std::move(base_dir);
    c.j_ = defaults();
    for (auto &[k, v] : j.items()) c.set(k, v);
    return c;
}

void RunConfig::set(const std::string &key, const nlohmann::json &value) {
    if (!defaults().contains(key)) throw ConfigError("unknown config key '" + key + "'");
    j_[key] = value;
}

void RunConfig::apply_env(char **envp) {
    if (!envp) return;
    const std::string prefix = "VQEFORGE_";
    for (char **e = envp; *e; ++e) {
        std::string kv = *e;
        if (kv.rfind(prefix, 0) != 0) continue;
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        std::string key = kv.substr(prefix.size(), eq - prefix.size());
        std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (!defaults().contains(key)) continue;  // other VQEFORGE_ variables are not config keys
        std::string val = kv.substr(eq + 1);
        nlohmann::json v = nlohmann::json::parse(val, nullptr, false);
        if (v.is_discarded()) v = val;
        set(key, v);
    }
}

uint64_t RunConfig::seed() const {
    const auto &s = j_.at("seed");
    if (s.is_number_unsigned()) return s.get<uint64_t>();
    if (s.is_number_integer() && s.get<int64_t>() >= 0) return static_cast<uint64_t>(s.get<int64_t>());
    if (s.is_string()) {
        try {
            size_t used = 0;
            uint64_t v = std::stoull(s.get<std::string>(), &used);
            if (used == s.get<std::string>().size()) return v;
        } catch (const std::exception &) {
        }
    }
    throw ConfigError("seed must be a non-negative integer (set it in the config, --seed or VQEFORGE_SEED)");
}

std::string RunConfig::hash() const {
    nlohmann::json h = j_;
    h.erase("threads");
    return fnv1a_hex(h.dump());
}

std::filesystem::path RunConfig::resolve(const std::string &p) const {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : (base_ / path).lexically_normal();
}

std::string RunConfig::fcidump_for(double distance) const {
    if (!has("molecule")) throw ConfigError("molecule is required to locate the integral files");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", distance);
    return (resolve(get<std::string>("data_dir")) / (get<std::string>("molecule") + "_" + buf + ".fcidump")).string();
}

std::string RunConfig::fcidump() const {
    if (has("fcidump")) return resolve(get<std::string>("fcidump")).string();
    if (!has("distance")) throw ConfigError("either fcidump or distance is required");
    return fcidump_for(get<double>("distance"));
}

std::vector<CurveInput> RunConfig::curve_inputs() const {
    std::vector<CurveInput> out;
    if (!has("distances")) {
        if (has("distance")) out.push_back({get<double>("distance"), fcidump()});
        if (out.empty()) throw ConfigError("distances is required for a curve");
        return out;
    }
    for (auto &d : j_.at("distances")) out.push_back({d.get<double>(), fcidump_for(d.get<double>())});
    return out;
}

NoiseModel RunConfig::noise(int n_qubits) const {
    const auto &v = j_.at("noise");
    if (v.is_object()) return NoiseModel::from_json(v, n_qubits);
    if (!v.is_string()) throw ConfigError("noise must be a preset name, a JSON file or an object");
    const std::string s = v.get<std::string>();
    if (s == "noiseless" || s == "none") return NoiseModel{};
    if (s == "calibrated") return NoiseModel::uniform(0.001, 0.008, 0.037, 0.037, n_qubits);
    auto path = resolve(s);
    if (!std::filesystem::exists(path)) throw ConfigError("unknown noise preset or missing file '" + s + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error &e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return NoiseModel::from_json(j, n_qubits);
}

ProblemOptions RunConfig::problem() const {
    ProblemOptions p;
    p.ansatz.eps_thres = get<double>("eps_thres");
    p.ansatz.use_override = get<bool>("use_override");
    p.ansatz.apply_symmetry_filter = get<bool>("symmetry_filter");
    p.multireference = get<bool>("multireference");
    if (has("layout")) p.layout = Layout::load(resolve(get<std::string>("layout")).string());
    return p;
}

PipelineConfig RunConfig::pipeline(int n_qubits) const {
    PipelineConfig c;
    c.noise = noise(n_qubits);
    c.sim.trajectories = get<int>("trajectories");
    c.sim.threads = get<int>("threads");
    c.sim.method = parse_sim_method(get<std::string>("sim_method"));
    c.shots = get<int>("shots");
    c.final_shots = get<int>("final_shots");
    c.plan.drop = get<bool>("drop");
    c.plan.error_tolerance = get<double>("error_tolerance");
    c.plan.iterations = get<int>("plan_iterations");
    c.plan.restarts = get<int>("plan_restarts");
    c.stages = StageSet::parse(get<std::string>("stages"));
    c.loop = parse_loop_estimator(get<std::string>("loop_estimator"));
    c.moments = get<bool>("moments");
    c.cdr_moments = get<bool>("cdr_moments");
    c.cdr.L = get<int>("cdr_training");
    c.cdr.K = get<int>("cdr_k");
    c.cdr.R = get<int>("cdr_r");
    c.cdr.sigma_T = get<double>("cdr_sigma");
    c.cdr.mu_T = get<double>("cdr_mu");
    c.cdr_shots = get<int>("cdr_shots");
    c.calibration_shots = get<int>("calibration_shots");
    c.vqe.max_iterations = get<int>("max_iters");
    c.vqe.lr = get<double>("lr");
    c.vqe.tolerance = get<double>("convergence_tol");
    c.vqe.mask_size = get<int>("mask_size");
    c.vqe.threads = get<int>("threads");
    c.vqe.seed = seed();
    if (has("theta0")) c.vqe.theta0 = get<std::vector<double>>("theta0");
    return c;
}

BenchmarkOptions RunConfig::bench() const {
    BenchmarkOptions b;
    b.m = get<std::vector<int>>("bench_m");
    b.repeats = get<int>("bench_repeats");
    b.readout = get<bool>("bench_readout");
    b.seed = seed();
    b.sim.trajectories = get<int>("trajectories");
    b.sim.threads = get<int>("threads");
    b.sim.method = parse_sim_method(get<std::string>("sim_method"));
    return b;
}

void RunConfig::validate() const {
    seed();
    try {
        StageSet::parse(get<std::string>("stages"));
        parse_loop_estimator(get<std::string>("loop_estimator"));
        parse_sim_method(get<std::string>("sim_method"));
        if (get<int>("shots") <= 0) throw ConfigError("shots must be positive");
        if (get<int>("threads") < 1) throw ConfigError("threads must be at least 1");
        if (get<int>("max_iters") < 0) throw ConfigError("max_iters must be non-negative");
        if (!(get<double>("lr") > 0)) throw ConfigError("lr must be positive");
        get<double>("eps_thres");
        get<bool>("multireference");
        get<std::vector<int>>("bench_m");
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    if (has("layout") && !std::filesystem::exists(resolve(get<std::string>("layout"))))
        throw ConfigError("layout file not found: " + resolve(get<std::string>("layout")).string());
}

}  // namespace vqeforge
