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

#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace vqeforge {

using cplx = std::complex<double>;

struct SizeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConsistencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// N-qubit Pauli string in symplectic form. Bit k of x/z belongs to qubit k.
/// Letters: I=(0,0) X=(1,0) Z=(0,1) Y=(1,1). At most 64 qubits.
struct PauliString {
    int n = 0;
    uint64_t x = 0;
    uint64_t z = 0;

    PauliString() = default;
    explicit PauliString(int n_qubits);
    PauliString(int n_qubits, uint64_t xbits, uint64_t zbits);

    /// Parses "XIZY"; position k is qubit k.
    static PauliString parse(std::string_view letters);
    static PauliString single(int n_qubits, int qubit, char letter);

    char letter(int q) const;
    void set(int q, char letter);
    uint64_t support_mask() const { return x | z; }
    std::vector<int> support() const;
    int weight() const;
    bool is_identity() const { return (x | z) == 0; }
    std::string str() const;

    bool operator==(const PauliString &other) const = default;
};

/// Canonical order: support size first, then letters qubit 0 upward with I < X < Y < Z.
bool operator<(const PauliString &a, const PauliString &b);

struct PauliStringHash {
    size_t operator()(const PauliString &p) const noexcept {
        uint64_t h = (p.x * 0x9E3779B97F4A7C15ull) ^ (p.z * 0xC2B2AE3D27D4EB4Full + 0x165667B19E3779F9ull);
        return static_cast<size_t>(h ^ (h >> 29));
    }
};

/// a * b = i^phase * result.
struct PauliProduct {
    int phase = 0;
    PauliString result;
};

PauliProduct pauli_product(const PauliString &a, const PauliString &b);
cplx i_pow(int k);

/// True iff every non-identity letter of q equals the letter of p on that qubit.
bool hits(const PauliString &q, const PauliString &p);
bool qubitwise_compatible(const PauliString &a, const PauliString &b);
bool commutes(const PauliString &a, const PauliString &b);

/// Real-weighted Pauli sum. The all-identity coefficient lives in identity_offset.
class PauliSum {
  public:
    using TermMap = std::map<PauliString, double>;

    PauliSum() = default;
    explicit PauliSum(int n_qubits, double offset = 0.0);

    int n_qubits() const { return n_; }
    double identity_offset = 0.0;

    const TermMap &terms() const { return terms_; }
    size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }

    void add(const PauliString &p, double c);
    double coeff(const PauliString &p) const;
    void prune(double tol = 1e-14);

    /// Sum of |c| over non-identity terms.
    double one_norm() const;
    std::vector<PauliString> strings() const;

    PauliSum &operator+=(const PauliSum &other);
    PauliSum &operator*=(double s);
    PauliSum operator+(const PauliSum &other) const;
    PauliSum operator*(double s) const;

    nlohmann::json to_json() const;
    static PauliSum from_json(const nlohmann::json &j);

  private:
    int n_ = 0;
    TermMap terms_;
};

/// Product of two sums with like-term collection. Terms with |c| < truncate are
/// dropped and their summed |c| is written to *dropped when given.
PauliSum sum_product(const PauliSum &a, const PauliSum &b, double truncate = 0.0, double *dropped = nullptr);

/// h^k for k >= 0.
PauliSum sum_power(const PauliSum &h, int k, double truncate = 0.0, double *dropped = nullptr);

/// Multiplies every term by the fixed string s (s must commute with every term).
PauliSum times_string(const PauliSum &h, const PauliString &s);

}  // namespace vqeforge
