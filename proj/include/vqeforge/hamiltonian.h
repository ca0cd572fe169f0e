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

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "vqeforge/pauli.h"

namespace vqeforge {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Sidecar produced next to each FCIDUMP.
struct MoleculeMetadata {
    double e_nuc = 0;
    double e_hf = 0;
    double e_fci = 0;
    std::vector<int> orbsym;
    std::vector<double> noons;
    std::string molecule;
    double distance = 0;
    /// Bits ignored when comparing irreps (x/y partners of degenerate pairs).
    int irrep_collapse_mask = 0;
    std::vector<int> frozen;
    std::vector<int> removed;

    static MoleculeMetadata from_json(const nlohmann::json &j);
    nlohmann::json to_json() const;
};

MoleculeMetadata load_metadata(const std::string &path);

struct IntegralSet {
    int n_spatial = 0;
    int n_electrons = 0;
    int ms2 = 0;
    std::vector<double> h;  // n^2, row-major
    std::vector<double> g;  // n^4, chemists' (pq|rs)
    double e_core = 0;
    std::vector<int> orbsym;
    std::optional<MoleculeMetadata> meta;

    IntegralSet() = default;
    IntegralSet(int n, int nelec);

    double &H(int p, int q) { return h[p * n_spatial + q]; }
    double H(int p, int q) const { return h[p * n_spatial + q]; }
    double &G(int p, int q, int r, int s) { return g[((p * n_spatial + q) * n_spatial + r) * n_spatial + s]; }
    double G(int p, int q, int r, int s) const { return g[((p * n_spatial + q) * n_spatial + r) * n_spatial + s]; }

    /// Throws ValidationError on broken permutational symmetry or electron count.
    void validate(double tol = 1e-10) const;
};

IntegralSet parse_fcidump(std::string_view text);
IntegralSet load_fcidump(const std::string &path);

struct ActiveSpaceSpec {
    std::vector<int> frozen;
    std::vector<int> removed;
    std::vector<int> active;

    /// Active orbitals are everything not frozen or removed, ascending.
    static ActiveSpaceSpec make(int n_spatial, std::vector<int> frozen, std::vector<int> removed);
};

IntegralSet freeze_core(const IntegralSet &ints, const ActiveSpaceSpec &spec);

/// Closed-shell determinant energy from the integrals directly.
double hf_energy(const IntegralSet &ints);

/// One product of ladder operators: ops[k] = (mode, is_creation), leftmost first.
struct FermionTerm {
    double coeff = 0;
    std::vector<std::pair<int, bool>> ops;
};

struct FermionOperator {
    int n_modes = 0;
    double constant = 0;
    std::vector<FermionTerm> terms;
};

/// Spin orbital of spatial p: alpha -> p, beta -> p + n_spatial.
FermionOperator build_fermionic(const IntegralSet &ints);

/// Jordan-Wigner image with complex coefficients kept (for anti-Hermitian input).
using ComplexPauliMap = std::vector<std::pair<PauliString, cplx>>;
ComplexPauliMap jw_complex(const FermionOperator &op);
PauliSum jw_transform(const FermionOperator &op);

struct QubitHamiltonian {
    PauliSum h;
    int n_spatial = 0;  // M; alpha qubits [0,M), beta qubits [M,2M)
    int n_alpha = 0;
    int n_beta = 0;
    std::vector<int> orbsym;
    int irrep_collapse_mask = 0;
    std::string molecule;

    int n_qubits() const { return 2 * n_spatial; }
    int alpha_qubit(int p) const { return p; }
    int beta_qubit(int p) const { return p + n_spatial; }
    /// Lowest orbitals occupied in each block.
    uint64_t hf_bits() const;
};

QubitHamiltonian build_qubit_hamiltonian(const IntegralSet &active);

struct Sector {
    int n_spatial = 0;
    int n_alpha = 0;
    int n_beta = 0;
};

std::vector<uint64_t> sector_states(const Sector &s);

struct GroundState {
    double energy = 0;
    Eigen::VectorXcd state;  // full 2^N amplitudes
};

GroundState exact_ground(const PauliSum &h, const std::optional<Sector> &sector);
GroundState exact_ground(const QubitHamiltonian &h, bool restrict_sector);

/// Dense 2^N matrix of a Pauli sum; N <= 12.
Eigen::MatrixXcd dense_matrix(const PauliSum &h);
Eigen::MatrixXcd dense_matrix(const PauliString &p);

}  // namespace vqeforge
