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

#include <string>

#include "vqeforge/ansatz.h"
#include "vqeforge/hamiltonian.h"

namespace vqeforge::testing {

inline std::string data_path(const std::string &name) {
    return std::string(VQEFORGE_SOURCE_DIR) + "/data/molecules/" + name;
}

inline IntegralSet load_active(const std::string &stem) {
    IntegralSet full = load_fcidump(data_path(stem + ".fcidump"));
    auto spec = ActiveSpaceSpec::make(full.n_spatial, full.meta->frozen, full.meta->removed);
    return freeze_core(full, spec);
}

inline QubitHamiltonian load_qubit(const std::string &stem) { return build_qubit_hamiltonian(load_active(stem)); }

/// Selection threshold used for each shipped molecule.
inline double eps_for(const std::string &stem) { return stem.rfind("lih", 0) == 0 ? 1e-3 : 1e-6; }

struct Problem {
    QubitHamiltonian h;
    Ansatz ansatz;
    CompiledCircuit circuit;
    double e_fci = 0;
};

/// Selected, compiled problem for one shipped molecule file.
inline Problem load_problem(const std::string &stem, InitialState init = {}) {
    IntegralSet ints = load_active(stem);
    Problem p;
    p.e_fci = ints.meta->e_fci;
    p.h = build_qubit_hamiltonian(ints);
    AnsatzOptions ao;
    ao.eps_thres = eps_for(stem);
    ao.initial = init;
    p.ansatz = build_ansatz(p.h, ao);
    p.circuit = compile(p.ansatz, p.h, default_layout(p.h));
    return p;
}

/// psi <- exp(-i phi P / 2) psi
inline void apply_pauli_rotation(Eigen::VectorXcd &psi, const PauliString &p, double phi) {
    Eigen::VectorXcd pp = dense_matrix(p) * psi;
    psi = std::cos(phi / 2) * psi - cplx(0, std::sin(phi / 2)) * pp;
}

}  // namespace vqeforge::testing
