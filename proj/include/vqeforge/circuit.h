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

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "vqeforge/pauli.h"

namespace vqeforge {

/// Bad user-supplied configuration value.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct CompileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExecutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Mat2 = std::array<cplx, 4>;  // row-major

/// The 24-element single-qubit Clifford group modulo phase.
namespace clifford {
int size();
int identity();
const Mat2 &matrix(int idx);
const std::string &name(int idx);
int index_of(const Mat2 &m);  // throws if m is not Clifford
int by_name(const std::string &name);
int compose(int later, int earlier);
int inverse(int idx);
/// U^dagger sigma_letter U = sign * sigma_result
std::pair<int, char> conj_dagger(int idx, char letter);
}  // namespace clifford

enum class GateKind { C1, RX, RY, RZ, CZ, CNOT };

struct Gate {
    GateKind kind = GateKind::C1;
    int q0 = -1;
    int q1 = -1;        // second qubit of CZ/CNOT (CNOT target)
    int clifford = -1;  // C1 table index
    int param = -1;     // bound parameter, or -1 for a literal angle
    double coef = 1.0;  // angle = angle + coef * theta[param]
    double angle = 0.0;
    bool prep = false;  // initial-state preparation (not counted in resources)

    static Gate c1(int q, int idx, bool prep = false);
    static Gate c1(int q, const std::string &name, bool prep = false);
    static Gate rot(GateKind k, int q, double literal, int param = -1, double coef = 1.0, bool prep = false);
    static Gate cz(int a, int b, bool prep = false);
    static Gate cnot(int c, int t, bool prep = false);

    bool two_qubit() const { return kind == GateKind::CZ || kind == GateKind::CNOT; }
    bool rotation() const { return kind == GateKind::RX || kind == GateKind::RY || kind == GateKind::RZ; }
    bool touches(int q) const { return q0 == q || (two_qubit() && q1 == q); }
    std::string str() const;
};

/// Qubit coupling graph. A grid places qubit r*cols + c at (r, c).
struct Layout {
    int rows = 0;
    int cols = 0;
    bool all_to_all = false;
    std::vector<std::pair<int, int>> edges;

    static Layout grid(int rows, int cols);
    static Layout complete(int n);
    int n_qubits() const { return rows * cols; }
    bool adjacent(int a, int b) const;
    std::vector<std::vector<int>> adjacency() const;

    nlohmann::json to_json() const;
    static Layout from_json(const nlohmann::json &j);
    static Layout load(const std::string &path);
};

struct CompiledCircuit {
    int n_qubits = 0;
    int n_params = 0;
    std::vector<Gate> gates;
    std::optional<Layout> layout;

    /// Per-gate angles for theta (0 for non-rotations). Throws ExecutionError on unbound parameters.
    std::vector<double> angles(const std::vector<double> &theta) const;
    /// Gate indices that carry parameter j.
    std::vector<int> occurrences(int j) const;
    /// Inverse circuit: gates reversed, Cliffords inverted, rotation angles negated.
    CompiledCircuit dagger() const;

    nlohmann::json to_json() const;
};

struct ResourceCount {
    int cz = 0;
    int single = 0;
    int depth = 0;
    bool operator==(const ResourceCount &) const = default;
};

/// Counts two-qubit gates, single-qubit gates and greedy ASAP depth, skipping prep gates unless asked.
ResourceCount resource_count(const CompiledCircuit &c, bool include_prep = false);

/// Merges adjacent single-qubit Cliffords (dropping identities) and cancels adjacent identical CZ pairs.
std::vector<Gate> peephole(std::vector<Gate> gates);

}  // namespace vqeforge
