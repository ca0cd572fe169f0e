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
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vqeforge/circuit.h"
#include "vqeforge/measurement.h"
#include "vqeforge/simulator.h"

namespace vqeforge {

struct CalibrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MitigationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- readout error mitigation ----

/// Calibration counts m(y, x): for each prepared product state x, the observed outcomes.
struct CalibrationData {
    int n_qubits = 0;
    std::vector<uint64_t> prepared;
    std::vector<std::map<uint64_t, int>> counts;
};

/// Tensor-product confusion model with per-qubit (eps, gamma).
struct CalibrationMatrix {
    std::vector<ReadoutError> params;
    /// Shots behind each estimate, for binomial intervals (0 when not learned).
    std::vector<std::pair<int, int>> support;

    int n_qubits() const { return static_cast<int>(params.size()); }
    /// Lambda_j, column-stochastic, row index = observed bit.
    std::array<double, 4> lambda(int q) const;
    std::array<double, 4> inverse(int q) const;
    /// <e| Z Lambda_q^{-1} |bit>
    double z_factor(int q, int bit) const;

    static CalibrationMatrix from_noise(const NoiseModel &noise, int n_qubits);
    nlohmann::json to_json() const;
};

CalibrationMatrix learn_calibration(const CalibrationData &data);

/// Runs the calibration experiment on the simulator readout model. The default
/// prepared set is all-zeros and all-ones.
CalibrationData calibration_experiment(int n_qubits, const NoiseModel &noise, int shots_per_state, uint64_t seed,
                                       std::vector<uint64_t> states = {});

/// Per-shot REM value: prod over the support of <e| Z Lambda^{-1} |s_k>.
ShotValue rem_value(const CalibrationMatrix &cal);

EstimatorOutput rem_estimate(const MeasurementPlan &plan, const std::vector<ShotRecord> &records,
                             double identity_offset, const CalibrationMatrix &cal);

// ---- Clifford data regression ----

struct CdrOptions {
    int L = 100;
    double sigma_T = 0.05;
    double mu_T = 1e-4;
    int K = 1;
    int R = 10;
    /// Non-selected rotations take random Clifford angles; false sets them to zero.
    bool clifford_angles = true;
    int min_bins = 4;
    int cap_factor = 20;
    uint64_t seed = 11;
};

struct CdrScreen {
    std::vector<PauliString> changed;
    std::map<PauliString, double> unchanged;
    std::map<PauliString, std::pair<double, double>> stats;  // (range, variance)
};

CdrScreen cdr_screen(const CompiledCircuit &c, const StateVector &initial, const std::vector<PauliString> &obs,
                     const CdrOptions &opt = {});

struct CdrFit {
    bool changed = true;
    double a = 1;
    double b = 0;
    double r2 = 1;
    double constant = 0;
    int points = 0;
    int bins = 0;
    std::vector<std::pair<double, double>> pairs;  // (noisy, ideal)
};

struct CdrModel {
    std::map<PauliString, CdrFit> fits;
    int K = 1;
    int R = 10;
    int instances = 0;
    std::vector<std::string> warnings;

    /// Mitigated value of one observable.
    double apply(const PauliString &p, double noisy) const;
    nlohmann::json to_json() const;
};

/// Noisy per-observable values for a circuit with explicit per-gate angles.
using NoisyEvaluator =
    std::function<std::vector<double>(const std::vector<double> &gate_angles, const std::vector<PauliString> &obs)>;

CdrModel cdr_train(const CompiledCircuit &c, const StateVector &initial, const CdrScreen &screen,
                   const NoisyEvaluator &noisy, const CdrOptions &opt = {});

/// Identity model over the given observables.
CdrModel cdr_identity(const std::vector<PauliString> &obs);

/// Maps REM per-observable estimates through the model and recombines.
double cdr_apply(const CdrModel &model, const MeasurementPlan &plan, const EstimatorOutput &rem,
                 double identity_offset);

/// Ordinary least squares ideal = a * noisy + b.
CdrFit fit_linear(const std::vector<std::pair<double, double>> &pairs);

// ---- symmetry verification ----

/// S = Z^{\otimes n}
PauliString parity_string(int n_qubits);
/// H S with the identity offset carried into the S term.
PauliSum times_parity(const PauliSum &h);
double symmetry_verify(double h, double hs, double s);

// ---- connected moments ----

struct MomentSet {
    double h1 = 0, h2 = 0, h3 = 0;
    double var1 = 0, var2 = 0, var3 = 0;  // variances of the raw moment estimates
    double I1 = 0, I2 = 0, I3 = 0;
    double S21 = 0, S31 = 0;
};

MomentSet connected_moments(double h1, double h2, double h3);

struct CmxResult {
    double energy = 0;
    double variance = 0;
    bool degenerate = false;
    std::optional<std::string> warning;
};

CmxResult cmx_energy(const MomentSet &m, double tol = 1e-8);

}  // namespace vqeforge
