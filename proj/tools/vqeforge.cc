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

// vqeforge command-line front end.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "vqeforge/analysis.h"
#include "vqeforge/config.h"
#include "vqeforge/mitigation.h"
#include "vqeforge/vqe.h"

extern char **environ;

namespace fs = std::filesystem;
using namespace vqeforge;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitIncomplete = 3;

struct Common {
    std::string config;
    std::optional<uint64_t> seed;
    std::optional<std::string> stages;
    std::string out = "out";
    std::optional<int> threads;
};

void add_common(CLI::App *sub, Common &c) {
    sub->add_option("--config", c.config, "Flat JSON run configuration")->required();
    sub->add_option("--seed", c.seed, "Master seed (overrides config and VQEFORGE_SEED)");
    sub->add_option("--stages", c.stages, "Mitigation stages, e.g. rem,cf,sv,cmx or none");
    sub->add_option("--out", c.out, "Output directory")->capture_default_str();
    sub->add_option("--threads", c.threads, "Worker threads");
}

RunConfig load_config(const Common &c) {
    RunConfig cfg = RunConfig::load(c.config);
    cfg.apply_env(environ);
    if (c.seed) cfg.set("seed", *c.seed);
    if (c.stages) cfg.set("stages", *c.stages);
    if (c.threads) cfg.set("threads", *c.threads);
    cfg.validate();
    return cfg;
}

struct Output {
    fs::path dir;
    std::string hash;
    uint64_t seed;
    std::string command;

    nlohmann::json header() const { return {{"config_hash", hash}, {"seed", seed}, {"command", command}}; }

    fs::path write_json(const std::string &name, nlohmann::json body) const {
        nlohmann::json j = header();
        for (auto &[k, v] : body.items()) j[k] = v;
        return write_text(name, j.dump(2) + "\n");
    }

    fs::path write_text(const std::string &name, const std::string &text) const {
        fs::create_directories(dir);
        fs::path p = dir / name;
        std::ofstream f(p, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + p.string());
        f << text;
        return p;
    }

    std::string csv_header() const { return "# config_hash=" + hash + ",seed=" + std::to_string(seed) + "\n"; }
};

Output make_output(const Common &c, const RunConfig &cfg, const std::string &command) {
    return {fs::path(c.out), cfg.hash(), cfg.seed(), command};
}

Problem load_checked(const RunConfig &cfg, const std::string &path) {
    if (!fs::exists(path)) throw ConfigError("FCIDUMP not found: " + path);
    return load_problem(path, cfg.problem());
}

void print_resources(const nlohmann::json &r) {
    std::printf("molecule %s  qubits %d  hamiltonian terms %d + identity\n", r["molecule"].get<std::string>().c_str(),
                r["n_qubits"].get<int>(), r["hamiltonian_terms"].get<int>());
    std::printf("selected %zu of %d (%d after symmetry filter), %d parameters, %s\n", r["selected"].size(),
                r["pool_size"].get<int>(), r["filtered_size"].get<int>(), r["n_params"].get<int>(),
                r["provenance"].get<std::string>().c_str());
    std::printf("compiled: CZ %d  1q %d  depth %d\n", r["compiled"]["cz"].get<int>(), r["compiled"]["single"].get<int>(),
                r["compiled"]["depth"].get<int>());
    std::printf("naive UCCSD: CZ %d\n", r["naive_uccsd"]["cz"].get<int>());
}

int cmd_prepare(const Common &c) {
    RunConfig cfg = load_config(c);
    Output out = make_output(c, cfg, "prepare");
    Problem prob = load_checked(cfg, cfg.fcidump());
    PipelineConfig pc = cfg.pipeline(prob.h.n_qubits());
    pc.stages = StageSet::parse("none");  // only the energy plan is needed here
    Pipeline pipe(prob.h, prob.ansatz, prob.circuit, pc);

    nlohmann::json ham{{"molecule", prob.h.molecule},
                       {"n_spatial", prob.h.n_spatial},
                       {"n_alpha", prob.h.n_alpha},
                       {"n_beta", prob.h.n_beta},
                       {"n_qubits", prob.h.n_qubits()},
                       {"source", prob.source},
                       {"hamiltonian", prob.h.h.to_json()}};
    if (prob.meta) ham["metadata"] = prob.meta->to_json();
    out.write_json("hamiltonian.json", ham);
    out.write_json("ansatz.json", {{"ansatz", prob.ansatz.to_json()},
                                   {"circuit", prob.circuit.to_json()},
                                   {"layout", prob.layout.to_json()}});
    MeasurementPlan plan = derandomize(pipe.energy_plan(), pc.shots, derive_seed(cfg.seed(), 0));
    out.write_json("plan.json", {{"plan", plan.to_json()}, {"shots", pc.shots}});
    nlohmann::json res = resource_report(prob);
    out.write_json("resources.json", {{"resources", res}});

    print_resources(res);
    const size_t covered = plan.observables.size() - plan.dropped.size() + (prob.h.h.identity_offset != 0 ? 1 : 0);
    std::printf("plan: %zu bases covering %zu Pauli terms (%zu dropped), %d shots\n", plan.n_bases(), covered,
                plan.dropped.size(), plan.total_shots());
    std::printf("artifacts written to %s (config %s, seed %llu)\n", out.dir.string().c_str(), out.hash.c_str(),
                static_cast<unsigned long long>(out.seed));
    return 0;
}

int cmd_run(const Common &c) {
    RunConfig cfg = load_config(c);
    Output out = make_output(c, cfg, "run");
    Problem prob = load_checked(cfg, cfg.fcidump());
    PipelineConfig pc = cfg.pipeline(prob.h.n_qubits());
    const uint64_t seed = cfg.seed();
    const StageSet requested = pc.stages;
    nlohmann::json errors = nlohmann::json::array();

    // calibration first, so a CDR failure can rebuild without losing it
    std::optional<CalibrationMatrix> cal;
    if (pc.stages.rem && pc.noise.readout_noise()) {
        try {
            CalibrationData d =
                calibration_experiment(prob.h.n_qubits(), pc.noise, pc.calibration_shots, derive_seed(seed, 0));
            cal = learn_calibration(d);
        } catch (const std::exception &e) {
            errors.push_back(std::string("rem: ") + e.what());
            pc.stages.rem = false;
        }
    }
    std::optional<Pipeline> pipe;
    pipe.emplace(prob.h, prob.ansatz, prob.circuit, pc);
    if (cal) pipe->set_calibration(*cal);
    if (pc.stages.cf) {
        try {
            pipe->train_cdr(derive_seed(seed, 1));
        } catch (const std::exception &e) {
            errors.push_back(std::string("cf: ") + e.what());
            pc.stages.cf = false;
            if (pc.loop == LoopEstimator::RemCf) pc.loop = LoopEstimator::Rem;
            pipe.emplace(prob.h, prob.ansatz, prob.circuit, pc);
            if (cal) pipe->set_calibration(*cal);
        }
    }

    std::ostringstream trace;
    trace << out.header().dump() << "\n";
    VqeResult res;
    try {
        res = pipe->optimize([&](const IterationRecord &r) {
            trace << r.to_json().dump() << "\n";
            std::fprintf(stderr, "iter %2d  E = %.8f\n", r.k, r.energy);
        });
    } catch (const std::exception &e) {
        out.write_text("trace.jsonl", trace.str());
        out.write_json("report.json", {{"errors", {std::string("vqe: ") + e.what()}}});
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIncomplete;
    }
    out.write_text("trace.jsonl", trace.str());

    StagedReport rep = pipe->evaluate_final(res.theta, derive_seed(seed, 2));
    nlohmann::json report{{"stages_requested", requested.str()},
                          {"loop_estimator", to_string(pc.loop)},
                          {"report", rep.to_json()},
                          {"vqe",
                           {{"theta", res.theta},
                            {"energy", res.energy},
                            {"iterations", static_cast<int>(res.trace.size()) - 1},
                            {"converged", res.converged},
                            {"shots", res.shots}}},
                          {"calibration", pipe->calibration().to_json()},
                          {"cdr",
                           {{"instances", pipe->cdr().instances},
                            {"fits", pipe->cdr().fits.size()},
                            {"warnings", pipe->cdr().warnings}}},
                          {"config", cfg.json()}};
    if (rep.stages.count("raw") && rep.stages.count("rem") && rep.stages.count("rem_cf"))
        report["error_decomposition"] = error_decompose(rep.stages.at("raw").energy, rep.stages.at("rem").energy,
                                                        rep.stages.at("rem_cf").energy, rep.numerical)
                                            .to_json();
    // every requested stage must have produced an energy
    bool complete = errors.empty();
    if (requested.sv) {
        bool any = false;
        for (auto &[k, v] : rep.stages) any = any || (k.size() > 3 && k.substr(k.size() - 3) == "_sv");
        complete = complete && any;
    }
    if (requested.cmx) complete = complete && rep.stages.count("cmx") && pc.moments;
    for (auto &w : rep.warnings) errors.push_back(w);
    report["errors"] = errors;
    report["complete"] = complete;
    out.write_json("report.json", report);

    std::printf("exact %.8f  numerical %.8f\n", *rep.exact, rep.numerical);
    for (auto &[k, v] : rep.stages)
        std::printf("%-10s %.8f  (err %+.2e, sd %.1e)\n", k.c_str(), v.energy, v.energy - *rep.exact,
                    std::sqrt(v.variance));
    for (auto &e : errors) std::fprintf(stderr, "warning: %s\n", e.get<std::string>().c_str());
    return complete ? 0 : kExitIncomplete;
}

int cmd_curve(const Common &c) {
    RunConfig cfg = load_config(c);
    Output out = make_output(c, cfg, "curve");
    auto inputs = cfg.curve_inputs();
    // the noise model is sized from the first readable problem
    int n_qubits = 0;
    for (auto &in : inputs)
        if (fs::exists(in.path)) {
            n_qubits = load_problem(in.path, cfg.problem()).h.n_qubits();
            break;
        }
    auto curve = pec_driver(inputs, cfg.problem(), cfg.pipeline(n_qubits), cfg.seed());
    out.write_text("curve.csv", out.csv_header() + curve_csv(curve));
    nlohmann::json pts = nlohmann::json::array();
    for (auto &p : curve) pts.push_back(p.to_json());
    out.write_json("curve.json", {{"points", pts}});
    int failed = 0;
    for (auto &p : curve) {
        if (!p.ok) {
            ++failed;
            std::fprintf(stderr, "distance %.2f failed: %s\n", p.distance, p.error.c_str());
            continue;
        }
        auto fs_ = p.report.final_stage();
        std::printf("%.2f  exact %.8f  %s %.8f  err %.2e  (numerical err %.2e)\n", p.distance, p.e_exact,
                    p.report.final_stage_name().c_str(), fs_.energy, std::abs(fs_.energy - p.e_exact),
                    std::abs(p.report.numerical - p.e_exact));
    }
    return failed ? kExitIncomplete : 0;
}

int cmd_bench(const Common &c) {
    RunConfig cfg = load_config(c);
    Output out = make_output(c, cfg, "bench-vvdag");
    Problem prob = load_checked(cfg, cfg.fcidump());
    CompiledCircuit v = without_prep(prob.circuit);
    BenchmarkResult r = vvdag_benchmark(v, cfg.noise(v.n_qubits), cfg.bench());
    std::ostringstream csv;
    csv << out.csv_header() << "m,survival,survival_sd,A,p,B\n";
    for (size_t i = 0; i < r.m.size(); ++i) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%d,%.10f,%.10f,%.10f,%.10f,%.10f\n", r.m[i], r.survival[i], r.survival_sd[i],
                      r.A, r.p, r.B);
        csv << buf;
    }
    out.write_text("bench.csv", csv.str());
    out.write_json("bench.json", {{"benchmark", r.to_json()}});
    std::printf("p = %.6f +- %.6f  (F_prod %.6f)  A = %.4f  B = %.4f%s\n", r.p, r.p_sd, r.f_prod, r.A, r.B,
                r.degenerate ? "  [degenerate fit]" : "");
    return 0;
}

std::vector<std::pair<double, double>> read_pairs(const fs::path &p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open fit input " + p.string());
    std::vector<std::pair<double, double>> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#' || std::isalpha(static_cast<unsigned char>(line[0]))) continue;
        auto comma = line.find(',');
        try {
            if (comma == std::string::npos) throw std::invalid_argument("missing comma");
            pts.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
        } catch (const std::exception &) {
            throw ConfigError(p.string() + ":" + std::to_string(lineno) + ": expected 'ideal,noisy'");
        }
    }
    return pts;
}

int cmd_fit_noise(const Common &c) {
    RunConfig cfg = load_config(c);
    Output out = make_output(c, cfg, "fit-noise");
    std::vector<std::pair<double, double>> pts;
    if (cfg.has("fit_input")) {
        pts = read_pairs(cfg.resolve(cfg.get<std::string>("fit_input")));
    } else {
        // noiseless trace, then ideal versus gate-noisy energies along it, offsets excluded
        Problem prob = load_checked(cfg, cfg.fcidump());
        PipelineConfig pc = cfg.pipeline(prob.h.n_qubits());
        PipelineConfig clean = pc;
        clean.loop = LoopEstimator::Exact;
        clean.stages = StageSet::parse("none");
        Pipeline pipe(prob.h, prob.ansatz, prob.circuit, clean);
        VqeResult res = pipe.optimize();
        PauliSum traceless = prob.h.h;
        traceless.identity_offset = 0;
        for (size_t k = 0; k < res.trace.size(); ++k) {
            auto angles = prob.circuit.angles(res.trace[k].theta);
            SimOptions so = pc.sim;
            so.seed = derive_seed(cfg.seed(), k);
            double ideal = run(prob.circuit, angles).expectation(traceless);
            double noisy = simulate(prob.circuit, angles, pc.noise, so).expectation(traceless);
            pts.emplace_back(ideal, noisy);
        }
    }
    NoiseFit f = depolarizing_fit(pts);
    out.write_json("noise_fit.json", {{"fit", f.to_json()}});
    std::printf("p = %.6f  R2 = %.6f  (free fit: slope %.6f, intercept %.6f, R2 %.6f), %zu points\n", f.p, f.r2,
                f.free_slope, f.free_intercept, f.free_r2, f.points.size());
    return 0;
}

int cmd_calibrate(const Common &c) {
    RunConfig cfg = load_config(c);
    Output out = make_output(c, cfg, "calibrate-readout");
    Problem prob = load_checked(cfg, cfg.fcidump());
    const int n = prob.h.n_qubits();
    NoiseModel noise = cfg.noise(n);
    const int shots = cfg.get<int>("calibration_shots");
    CalibrationMatrix cal = learn_calibration(calibration_experiment(n, noise, shots, cfg.seed()));
    out.write_json("calibration.json", {{"calibration", cal.to_json()}, {"shots_per_state", shots}});
    for (int q = 0; q < n; ++q)
        std::printf("qubit %d  eps %.5f  gamma %.5f\n", q, cal.params[q].eps, cal.params[q].gamma);
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"vqeforge: seeded VQE experiments with measurement planning and error mitigation"};
    app.require_subcommand(1);
    Common common;
    struct Cmd {
        const char *name;
        const char *help;
        int (*fn)(const Common &);
    };
    const Cmd cmds[] = {
        {"prepare", "Build the Hamiltonian, ansatz, circuit and measurement plan", cmd_prepare},
        {"run", "Calibrate, train CDR, optimise and evaluate the staged energies", cmd_run},
        {"curve", "Potential energy curve over the configured distances", cmd_curve},
        {"bench-vvdag", "V V-dagger operation benchmark on the compiled circuit", cmd_bench},
        {"fit-noise", "Global depolarizing fit of noisy against ideal energies", cmd_fit_noise},
        {"calibrate-readout", "Learn the readout confusion model from calibration shots", cmd_calibrate},
    };
    std::vector<std::pair<CLI::App *, const Cmd *>> subs;
    for (auto &cmd : cmds) {
        auto *sub = app.add_subcommand(cmd.name, cmd.help);
        add_common(sub, common);
        subs.emplace_back(sub, &cmd);
    }
    CLI11_PARSE(app, argc, argv);
    try {
        for (auto &[sub, cmd] : subs)
            if (sub->parsed()) return cmd->fn(common);
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    }
    return kExitFailure;
}
