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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "vqeforge/circuit.h"
#include "vqeforge/hamiltonian.h"
#include "vqeforge/pauli.h"

namespace vqeforge {

/// a†_b a†_a a_j a_i (double) or a†_a a_i (single), qubit indices.
struct ExcitationOp {
    std::vector<int> occ;  // ascending: i (, j)
    std::vector<int> vir;  // ascending: a (, b)

    bool is_double() const { return occ.size() == 2; }
    /// e.g. "a†3a†1a2a0"
    std::string label() const;
    /// T - T†
    FermionOperator anti_hermitian(int n_modes) const;
    bool operator==(const ExcitationOp &) const = default;
};

/// Singles then doubles; within each kind ordered by (occ..., vir...).
std::vector<ExcitationOp> build_pool(const QubitHamiltonian &h);

/// XOR of the spatial irreps touched by op, with collapsed bits cleared.
int irrep_product(const ExcitationOp &op, const QubitHamiltonian &h);
std::vector<ExcitationOp> symmetry_filter(const std::vector<ExcitationOp> &pool, const QubitHamiltonian &h);

struct Selection {
    ExcitationOp op;
    double e_ref = 0;
    double e_min = 0;
    double delta_e = 0;
    double theta = 0;  // minimiser of E(theta) for exp(theta (T - T†))
};

/// E(theta) along exp(theta A) psi for an excitation generator A, exploiting A^3 = -A.
struct ExcitationScan {
    double c0 = 0, c1 = 0, s1 = 0, c2 = 0, s2 = 0;  // E = c0 + c1 cos + s1 sin + c2 cos2 + s2 sin2
    double operator()(double theta) const;
    /// Global minimum over theta.
    std::pair<double, double> minimum() const;
};

ExcitationScan excitation_scan(const ExcitationOp &op, const PauliSum &h, const Eigen::VectorXcd &psi);

/// Ranks the pool by energy decrease from the reference and keeps those above eps, largest first.
std::vector<Selection> select_dominant(const std::vector<ExcitationOp> &pool, const QubitHamiltonian &h,
                                       const Eigen::VectorXcd &reference, double eps);

/// Ladder shape for one rotation: tree over the support rooted at pivot.
struct LadderTemplate {
    int pivot = -1;
    std::map<int, int> parent;  // child -> parent
    std::vector<int> order;     // CZ order (child of each edge)

    nlohmann::json to_json() const;
    static LadderTemplate from_json(const nlohmann::json &j);
    /// Edges follow consecutive path entries; the last entry is the pivot.
    static LadderTemplate path(const std::vector<int> &nodes);
};

/// One factor exp(-i coef theta_param P / 2).
struct BoundTerm {
    PauliString pauli;
    int param = 0;
    double coef = 1.0;
    std::optional<LadderTemplate> ladder;
};

/// Terms of the JW image of (T - T†) with real weights b_k: JW(T - T†) = i sum b_k P_k.
std::vector<std::pair<PauliString, double>> generator_terms(const ExcitationOp &op, int n_qubits);

/// Keeps the canonically first generator term, bound to param.
BoundTerm single_term_reduce(const ExcitationOp &op, int n_qubits, int param);

struct OverrideTerm {
    PauliString pauli;
    LadderTemplate ladder;
};

struct OverrideEntry {
    ExcitationOp op;
    std::vector<OverrideTerm> terms;
};

/// Published generators, ordering and ladder shapes for the shipped molecules.
struct OverrideTable {
    std::string molecule;
    std::vector<OverrideEntry> entries;
};

std::optional<OverrideTable> builtin_override(const std::string &molecule);

struct InitialState {
    enum class Kind { HartreeFock, MultiReference } kind = Kind::HartreeFock;
    double beta = 0;
};

/// HF determinant, or (|HF> - beta |swap>)/sqrt(1 + beta^2) with the highest alpha and beta
/// electrons promoted to the lowest virtuals.
Eigen::VectorXcd initial_amplitudes(const InitialState &init, const QubitHamiltonian &h);
uint64_t swap_determinant(const QubitHamiltonian &h);

struct AnsatzOptions {
    double eps_thres = 1e-6;
    bool use_override = true;
    bool apply_symmetry_filter = true;
    InitialState initial;
};

struct Ansatz {
    int n_qubits = 0;
    std::vector<Selection> selected;  // in circuit order
    std::vector<BoundTerm> terms;
    int n_params = 0;
    std::string provenance;  // "override:<molecule>" or "canonical"
    InitialState initial;
    int pool_size = 0;
    int filtered_size = 0;

    nlohmann::json to_json() const;
};

Ansatz build_ansatz(const QubitHamiltonian &h, const AnsatzOptions &opt);

/// Pivot/tree chosen from the layout when no template is given.
LadderTemplate auto_ladder(const PauliString &p, const Layout &layout);

/// Gates for exp(-i coef theta P/2) using the ladder; prefix/suffix Cliffords not yet merged.
std::vector<Gate> rotation_gates(const BoundTerm &t, const LadderTemplate &ladder, const Layout &layout);

/// State preparation gates (flagged prep) for the initial state.
std::vector<Gate> initial_state_gates(const InitialState &init, const QubitHamiltonian &h);

CompiledCircuit compile(const std::vector<BoundTerm> &terms, int n_qubits, int n_params,
                        const std::vector<Gate> &prep, const Layout &layout, bool cancel = true);
CompiledCircuit compile(const Ansatz &a, const QubitHamiltonian &h, const Layout &layout, bool cancel = true);

/// Every pool operator, every generator term, CNOT chain ladders, no cancellation.
CompiledCircuit naive_uccsd(const std::vector<ExcitationOp> &pool, int n_qubits);

/// 2 x M grid with alpha qubits on row 0.
Layout default_layout(const QubitHamiltonian &h);

}  // namespace vqeforge
