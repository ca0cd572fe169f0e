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
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "vqeforge/ansatz.h"
#include "vqeforge/circuit.h"
#include "vqeforge/pauli.h"

namespace vqeforge {

class StateVector {
  public:
    StateVector() = default;
    explicit StateVector(int n_qubits, uint64_t basis_state = 0);
    static StateVector from_amplitudes(const Eigen::VectorXcd &v);

    int n_qubits() const { return n_; }
    size_t dim() const { return amp_.size(); }
    std::vector<cplx> &amplitudes() { return amp_; }
    const std::vector<cplx> &amplitudes() const { return amp_; }
    Eigen::VectorXcd to_eigen() const;

    void apply_1q(int q, const Mat2 &m);
    void apply_cz(int a, int b);
    void apply_cnot(int c, int t);
    void apply_pauli(const PauliString &p);
    void apply_gate(const Gate &g, double angle);
    /// Maps the eigenbasis of a full-support Pauli onto the computational basis.
    void rotate_to_basis(const PauliString &basis);

    double norm() const;
    double expectation(const PauliString &p) const;
    double expectation(const PauliSum &h) const;
    std::vector<double> probabilities() const;

  private:
    int n_ = 0;
    std::vector<cplx> amp_;
};

Mat2 gate_matrix(const Gate &g, double angle);

struct ReadoutError {
    double eps = 0;    // P(read 1 | prepared 0)
    double gamma = 0;  // P(read 0 | prepared 1)
};

struct NoiseModel {
    double p1 = 0;
    double p2 = 0;
    std::optional<double> p_global;  // survival probability
    std::vector<ReadoutError> readout;

    bool gate_noise() const { return p1 > 0 || p2 > 0; }
    bool readout_noise() const;
    ReadoutError readout_for(int q) const;
    void validate() const;

    static NoiseModel uniform(double p1, double p2, double eps, double gamma, int n_qubits);
    nlohmann::json to_json() const;
    static NoiseModel from_json(const nlohmann::json &j, int n_qubits);
};

/// Runs from |0...0> with the supplied per-gate angles.
StateVector run(const CompiledCircuit &c, const std::vector<double> &angles);
/// Same, starting from an arbitrary state.
StateVector run_from(const CompiledCircuit &c, const std::vector<double> &angles, StateVector s);

/// One stochastic Pauli trajectory. Returns whether any error was inserted.
bool run_trajectory(const CompiledCircuit &c, const std::vector<double> &angles, const NoiseModel &noise,
                    std::mt19937_64 &rng, StateVector &out);

/// Weighted mixture of pure trajectories plus the global depolarizing factor.
struct Ensemble {
    int n_qubits = 0;
    std::vector<StateVector> states;
    std::vector<double> weights;
    double p_global = 1.0;

    double expectation(const PauliString &p) const;
    double expectation(const PauliSum &h) const;
    /// Outcome distribution in the given full-support basis, before readout error.
    std::vector<double> distribution(const PauliString &basis) const;
};

enum class SimMethod {
    Trajectories,
    Density,  // exact channel via the density matrix, N <= 6
    Auto,     // density matrix when it fits, trajectories otherwise
};

struct SimOptions {
    int trajectories = 200;
    uint64_t seed = 1;
    int threads = 1;
    SimMethod method = SimMethod::Trajectories;
};

Ensemble simulate(const CompiledCircuit &c, const std::vector<double> &angles, const NoiseModel &noise,
                  const SimOptions &opt);

SimMethod parse_sim_method(const std::string &s);
std::string to_string(SimMethod m);

/// E = offset + p * traceless part.
double expectation(const StateVector &s, const PauliSum &o, std::optional<double> p_global = std::nullopt);

struct ShotRecord {
    PauliString basis;
    std::vector<uint64_t> outcomes;  // bit k = qubit k, 1 means eigenvalue -1
    uint64_t seed = 0;

    std::map<uint64_t, int> counts() const;
    nlohmann::json to_json() const;
};

/// Draws shots from a basis distribution, then applies classical readout flips.
ShotRecord sample_distribution(const std::vector<double> &dist, const PauliString &basis, int shots,
                               const NoiseModel &noise, uint64_t seed);
ShotRecord sample(const StateVector &s, const PauliString &basis, int shots, const NoiseModel &noise, uint64_t seed);

/// Readout-confused distribution (exact, for infinite-shot checks).
std::vector<double> apply_readout(const std::vector<double> &dist, const NoiseModel &noise);

StateVector prepare_initial(const InitialState &init, const QubitHamiltonian &h);

/// beta minimising the energy of the multireference state.
double optimize_beta(const QubitHamiltonian &h);

/// Dense density-matrix evolution with per-gate depolarizing channels (validation oracle, N <= 6).
Eigen::MatrixXcd density_matrix_run(const CompiledCircuit &c, const std::vector<double> &angles,
                                    const NoiseModel &noise);

/// Independent stream seed from (seed, stream).
uint64_t derive_seed(uint64_t seed, uint64_t stream);

}  // namespace vqeforge
