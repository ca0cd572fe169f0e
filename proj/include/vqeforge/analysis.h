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

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "vqeforge/ansatz.h"
#include "vqeforge/hamiltonian.h"
#include "vqeforge/simulator.h"
#include "vqeforge/vqe.h"

namespace vqeforge {

struct AnalysisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fit failure with the raw points kept for inspection.
struct BenchmarkError : AnalysisError {
    BenchmarkError(const std::string &what, std::vector<std::pair<int, double>> pts)
        : AnalysisError(what), points(std::move(pts)) {}
    std::vector<std::pair<int, double>> points;
};

// ---- global depolarizing fit ----

struct NoiseFit {
    double p = 1;             // through-origin slope
    double r2 = 1;            // of the through-origin model
    double free_slope = 1;    // diagnostic fit with intercept
    double free_intercept = 0;
    double free_r2 = 1;
    std::vector<std::pair<double, double>> points;  // (ideal, noisy), offsets excluded
    nlohmann::json to_json() const;
};

NoiseFit depolarizing_fit(const std::vector<std::pair<double, double>> &points);

// ---- V V^dagger benchmark ----

struct BenchmarkResult {
    int n_qubits = 0;
    std::vector<int> m;
    std::vector<double> survival;
    std::vector<double> survival_sd;
    double A = 0, p = 1, B = 0;
    double A_sd = 0, p_sd = 0, B_sd = 0;
    double residual = 0;  // RMS of the fit
    bool degenerate = false;
    double fidelity = 1;  // per V, equals p
    double f_prod = 1;    // product of per-gate fidelities of V
    nlohmann::json to_json() const;
};

struct BenchmarkOptions {
    std::vector<int> m{0, 1, 2, 3, 4, 6, 8, 12, 16, 24};
    int repeats = 10;
    uint64_t seed = 1;
    SimOptions sim{200, 1, 1, SimMethod::Auto};
    /// Apply the readout model to the final measurement.
    bool readout = false;
};

/// Literal-angle copy of V followed by its inverse.
/// The circuit with its state-preparation gates removed (the V of a V V-dagger pair).
CompiledCircuit without_prep(const CompiledCircuit &c);

CompiledCircuit vvdag_pair(const CompiledCircuit &v, const std::vector<double> &theta);

/// Fits A p^{2m} + B by damped Gauss-Newton. Throws BenchmarkError on failure.
BenchmarkResult fit_decay(int n_qubits, const std::vector<int> &m, const std::vector<double> &survival);

BenchmarkResult vvdag_benchmark(const CompiledCircuit &v, const NoiseModel &noise, const BenchmarkOptions &opt);

/// Product over the gates of V of (1 - p_gate).
double product_fidelity(const CompiledCircuit &v, const NoiseModel &noise, bool include_prep = false);

// ---- problem loading and curves ----

struct ProblemOptions {
    AnsatzOptions ansatz;
    bool multireference = false;  // beta chosen by optimize_beta
    std::optional<Layout> layout;
};

struct Problem {
    std::string source;
    std::optional<MoleculeMetadata> meta;
    QubitHamiltonian h;
    Ansatz ansatz;
    CompiledCircuit circuit;
    Layout layout;
};

/// FCIDUMP (with sidecar metadata, when present) through active space, Hamiltonian, selection and compilation.
Problem load_problem(const std::string &fcidump_path, const ProblemOptions &opt);

struct CurvePoint {
    double distance = 0;
    std::string source;
    bool ok = false;
    std::string error;
    double e_exact = 0;
    double e_initial = 0;  // raw energy of the starting point
    StagedReport report;
    std::map<std::string, double> abs_error;
    std::map<std::string, double> rel_error;  // (E - E_ground) / (E_initial - E_ground)
    int iterations = 0;
    nlohmann::json to_json() const;
};

struct CurveInput {
    double distance = 0;
    std::string path;
};

/// Runs the full pipeline per distance. A failing distance is recorded and the curve continues.
std::vector<CurvePoint> pec_driver(const std::vector<CurveInput> &inputs, const ProblemOptions &popt,
                                   const PipelineConfig &cfg, uint64_t seed);

/// CSV: distance, e_exact, e_raw, e_rem, e_rem_cf, e_sv, e_cmx, e_numerical and absolute errors.
std::string curve_csv(const std::vector<CurvePoint> &curve);

// ---- error decomposition ----

struct ErrorContributions {
    double readout = 0;   // E_rem - E_raw
    double gate = 0;      // E_rem_cf - E_rem
    double residual = 0;  // E_numerical - E_rem_cf
    nlohmann::json to_json() const;
};

ErrorContributions error_decompose(double e_raw, double e_rem, double e_rem_cf, double e_numerical);

// ---- resources ----

nlohmann::json resource_report(const Problem &p);

}  // namespace vqeforge
