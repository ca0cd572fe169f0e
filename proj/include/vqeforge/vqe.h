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
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vqeforge/ansatz.h"
#include "vqeforge/measurement.h"
#include "vqeforge/mitigation.h"
#include "vqeforge/simulator.h"

namespace vqeforge {

struct BindingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EnergyEstimate {
    double value = 0;
    double variance = 0;
    long shots = 0;
    std::map<std::string, double> stages;  // intermediate mitigation levels, when available
};

/// Energy for explicit per-gate angles. The seed selects the noise and shot streams.
using EnergyFn = std::function<EnergyEstimate(const std::vector<double> &gate_angles, uint64_t seed)>;

struct GradientResult {
    double value = 0;
    double variance = 0;
    long shots = 0;
};

/// Parameter-shift derivative of E with respect to theta_j: every occurrence of
/// theta_j is shifted by +-pi/2 on its own and the halved differences are summed
/// with the occurrence coefficients.
GradientResult gradient(const CompiledCircuit &c, const std::vector<double> &theta, int j, const EnergyFn &energy,
                        uint64_t seed);

/// Central finite difference in theta_j, for checks.
double finite_difference(const CompiledCircuit &c, const std::vector<double> &theta, int j, const EnergyFn &energy,
                         double delta = 1e-6);

/// `size` distinct indices (0: ceil(n/2)), sorted.
std::vector<int> draw_mask(int n_params, std::mt19937_64 &rng, int size = 0);

/// theta_j - lr * g_j for masked j.
std::vector<double> sgd_step(const std::vector<double> &theta, const std::vector<int> &mask,
                             const std::vector<double> &g, double lr);

struct VqeOptions {
    double lr = 0.2;
    int max_iterations = 15;
    double tolerance = 1e-6;
    int window = 3;
    int halvings = 5;
    int mask_size = 0;  // 0: ceil(N_p / 2)
    std::vector<double> theta0;  // empty means zeros
    uint64_t seed = 1;
    /// A step is kept when E' <= E + accept_sigma * sqrt(var + var').
    double accept_sigma = 2.0;
    int threads = 1;
};

struct IterationRecord {
    int k = 0;
    std::vector<int> mask;
    std::map<int, double> gradient;
    std::map<int, double> gradient_variance;
    double lr = 0;
    bool accepted = true;
    std::vector<double> theta;
    double energy = 0;
    double variance = 0;
    std::map<std::string, double> stages;
    long shots = 0;
    nlohmann::json to_json() const;
};

struct VqeResult {
    std::vector<double> theta;
    double energy = 0;
    std::vector<IterationRecord> trace;
    long shots = 0;
    bool converged = false;
};

VqeResult run_vqe(const CompiledCircuit &c, const EnergyFn &energy, const VqeOptions &opt,
                  const std::function<void(const IterationRecord &)> &on_iteration = {});

// ---- the full problem bundle ----

struct StageSet {
    bool rem = true;
    bool cf = true;
    bool sv = true;
    bool cmx = true;
    /// Comma list of rem, cf, sv, cmx (or "none").
    static StageSet parse(const std::string &list);
    std::string str() const;
};

enum class LoopEstimator { Exact, Ensemble, Raw, Rem, RemCf };
LoopEstimator parse_loop_estimator(const std::string &s);
std::string to_string(LoopEstimator e);

struct PipelineConfig {
    NoiseModel noise;
    SimOptions sim;
    int shots = 100000;
    /// Shots for the final staged evaluation (0: same as shots).
    int final_shots = 0;
    OptimizeOptions plan;
    StageSet stages;
    CdrOptions cdr;
    int cdr_shots = 20000;
    int calibration_shots = 100000;
    /// Also measure and mitigate H^2, H^3 (and their parity products) for CMX.
    bool moments = true;
    /// Train CDR fits for the moment observables (expensive at 12 qubits).
    bool cdr_moments = true;
    LoopEstimator loop = LoopEstimator::RemCf;
    VqeOptions vqe;
};

struct StageValue {
    double energy = 0;
    double variance = 0;
};

struct StagedReport {
    std::map<std::string, StageValue> stages;  // raw, rem, rem_cf, rem_cf_sv, cmx
    double numerical = 0;                      // exact expectation at theta*
    std::optional<double> exact;               // reference ground energy
    std::vector<std::string> warnings;
    long shots = 0;
    /// Energy of the last stage present in chain order.
    StageValue final_stage() const;
    std::string final_stage_name() const;
    nlohmann::json to_json() const;
};

/// Hamiltonian, compiled circuit, plans and mitigation state for one run.
class Pipeline {
  public:
    Pipeline(QubitHamiltonian h, Ansatz ansatz, CompiledCircuit circuit, PipelineConfig cfg);

    const QubitHamiltonian &hamiltonian() const { return h_; }
    const Ansatz &ansatz() const { return ansatz_; }
    const CompiledCircuit &circuit() const { return circuit_; }
    const PipelineConfig &config() const { return cfg_; }
    const MeasurementPlan &energy_plan() const { return energy_plan_; }
    const MeasurementPlan &final_plan() const { return final_plan_; }
    double ground_energy() const { return ground_; }
    const CalibrationMatrix &calibration() const { return cal_; }
    const CdrModel &cdr() const { return cdr_; }

    /// Learns the readout calibration from simulated calibration shots.
    void calibrate(uint64_t seed);
    void set_calibration(CalibrationMatrix c) { cal_ = std::move(c); }
    /// Screens and fits CDR over the observables of the final plan.
    void train_cdr(uint64_t seed);
    void set_cdr(CdrModel m) { cdr_ = std::move(m); }
    /// Runs calibrate/train_cdr as required by the stage set.
    void prepare(uint64_t seed);

    EnergyFn energy_fn(LoopEstimator e) const;
    EnergyEstimate energy(const std::vector<double> &theta, LoopEstimator e, uint64_t seed) const;
    VqeResult optimize(const std::function<void(const IterationRecord &)> &on_iteration = {}) const;
    /// Builds the plan over H, HS, S and the moment operators (idempotent).
    void build_final_plan();
    StagedReport evaluate_final(const std::vector<double> &theta, uint64_t seed);

    Ensemble ensemble(const std::vector<double> &gate_angles, uint64_t seed) const;
    StateVector initial_state() const { return StateVector(circuit_.n_qubits, 0); }

  private:
    QubitHamiltonian h_;
    Ansatz ansatz_;
    CompiledCircuit circuit_;
    PipelineConfig cfg_;
    double ground_ = 0;
    /// Named targets measured by the final plan; moments use H - offset.
    std::vector<std::pair<std::string, PauliSum>> targets_;
    MeasurementPlan energy_plan_;
    MeasurementPlan final_plan_;
    CalibrationMatrix cal_;
    CdrModel cdr_;
    bool final_built_ = false;
    // CDR slope/intercept per observable of each plan
    std::vector<double> energy_slope_, energy_intercept_, final_slope_, final_intercept_;
    void refresh_cdr_maps();
    int final_shots() const { return cfg_.final_shots > 0 ? cfg_.final_shots : cfg_.shots; }
};

/// Noise-free pipeline config (exact loop, no stages).
PipelineConfig noiseless_config();

}  // namespace vqeforge
