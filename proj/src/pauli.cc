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

#include "vqeforge/pauli.h"

#include <bit>
#include <cmath>
#include <unordered_map>

namespace vqeforge {

namespace {

int letter_rank(uint64_t x, uint64_t z) {
    // I < X < Y < Z
    if (!x && !z) return 0;
    if (x && !z) return 1;
    if (x && z) return 2;
    return 3;
}

// phase exponent of single-qubit product a*b, letters given as (x,z) bits
int letter_phase(int ax, int az, int bx, int bz) {
    int a = ax | (az << 1);
    int b = bx | (bz << 1);
    // index: 0=I 1=X 2=Z 3=Y
    static const int table[4][4] = {
        {0, 0, 0, 0},
        {0, 0, 3, 1},  // X*Z = -iY, X*Y = iZ
        {0, 1, 0, 3},  // Z*X = iY, Z*Y = -iX
        {0, 3, 1, 0},  // Y*X = -iZ, Y*Z = iX
    };
    return table[a][b];
}

void check_n(int n) {
    if (n < 0 || n > 64) throw SizeError("pauli string supports 0..64 qubits, got " + std::to_string(n));
}

}  // namespace

PauliString::PauliString(int n_qubits) : n(n_qubits) { check_n(n_qubits); }

PauliString::PauliString(int n_qubits, uint64_t xbits, uint64_t zbits) : n(n_qubits), x(xbits), z(zbits) {
    check_n(n_qubits);
}

PauliString PauliString::parse(std::string_view letters) {
    PauliString p(static_cast<int>(letters.size()));
    for (size_t k = 0; k < letters.size(); ++k) p.set(static_cast<int>(k), letters[k]);
    return p;
}

PauliString PauliString::single(int n_qubits, int qubit, char letter) {
    PauliString p(n_qubits);
    p.set(qubit, letter);
    return p;
}

char PauliString::letter(int q) const {
    uint64_t b = 1ull << q;
    bool bx = x & b, bz = z & b;
    if (bx && bz) return 'Y';
    if (bx) return 'X';
    if (bz) return 'Z';
    return 'I';
}

void PauliString::set(int q, char c) {
    if (q < 0 || q >= n) throw SizeError("qubit index out of range");
    uint64_t b = 1ull << q;
    x &= ~b;
    z &= ~b;
    switch (c) {
        case 'I': case 'i': case '_': break;
        case 'X': case 'x': x |= b; break;
        case 'Y': case 'y': x |= b; z |= b; break;
        case 'Z': case 'z': z |= b; break;
        default: throw std::invalid_argument(std::string("bad pauli letter '") + c + "'");
    }
}

std::vector<int> PauliString::support() const {
    std::vector<int> out;
    for (uint64_t m = x | z; m; m &= m - 1) out.push_back(std::countr_zero(m));
    return out;
}

int PauliString::weight() const { return std::popcount(x | z); }

std::string PauliString::str() const {
    std::string s(n, 'I');
    for (int q = 0; q < n; ++q) s[q] = letter(q);
    return s;
}

bool operator<(const PauliString &a, const PauliString &b) {
    if (a.n != b.n) return a.n < b.n;
    int wa = a.weight(), wb = b.weight();
    if (wa != wb) return wa < wb;
    uint64_t diff = (a.x ^ b.x) | (a.z ^ b.z);
    if (!diff) return false;
    int q = std::countr_zero(diff);
    uint64_t m = 1ull << q;
    return letter_rank(a.x & m, a.z & m) < letter_rank(b.x & m, b.z & m);
}

cplx i_pow(int k) {
    switch (((k % 4) + 4) % 4) {
        case 0: return {1, 0};
        case 1: return {0, 1};
        case 2: return {-1, 0};
        default: return {0, -1};
    }
}

PauliProduct pauli_product(const PauliString &a, const PauliString &b) {
    if (a.n != b.n) throw SizeError("pauli_product: qubit counts differ");
    PauliProduct out;
    out.result = PauliString(a.n, a.x ^ b.x, a.z ^ b.z);
    int ph = 0;
    for (uint64_t m = (a.x | a.z) & (b.x | b.z); m; m &= m - 1) {
        int q = std::countr_zero(m);
        ph += letter_phase((a.x >> q) & 1, (a.z >> q) & 1, (b.x >> q) & 1, (b.z >> q) & 1);
    }
    out.phase = ph & 3;
    return out;
}

bool hits(const PauliString &q, const PauliString &p) {
    if (q.n != p.n) throw SizeError("hits: qubit counts differ");
    uint64_t s = q.support_mask();
    return ((q.x ^ p.x) & s) == 0 && ((q.z ^ p.z) & s) == 0;
}

bool qubitwise_compatible(const PauliString &a, const PauliString &b) {
    if (a.n != b.n) throw SizeError("qubitwise_compatible: qubit counts differ");
    uint64_t s = a.support_mask() & b.support_mask();
    return ((a.x ^ b.x) & s) == 0 && ((a.z ^ b.z) & s) == 0;
}

bool commutes(const PauliString &a, const PauliString &b) {
    if (a.n != b.n) throw SizeError("commutes: qubit counts differ");
    return (std::popcount((a.x & b.z) ^ (a.z & b.x)) & 1) == 0;
}

PauliSum::PauliSum(int n_qubits, double offset) : identity_offset(offset), n_(n_qubits) { check_n(n_qubits); }

void PauliSum::add(const PauliString &p, double c) {
    if (p.n != n_) throw SizeError("PauliSum::add: qubit counts differ");
    if (p.is_identity()) {
        identity_offset += c;
        return;
    }
    auto [it, inserted] = terms_.try_emplace(p, c);
    if (!inserted) {
        it->second += c;
        if (std::abs(it->second) < 1e-14) terms_.erase(it);
    } else if (std::abs(c) < 1e-14) {
        terms_.erase(it);
    }
}

double PauliSum::coeff(const PauliString &p) const {
    if (p.is_identity()) return identity_offset;
    auto it = terms_.find(p);
    return it == terms_.end() ? 0.0 : it->second;
}

void PauliSum::prune(double tol) {
    std::erase_if(terms_, [tol](const auto &kv) { return std::abs(kv.second) < tol; });
}

double PauliSum::one_norm() const {
    double s = 0;
    for (auto &[p, c] : terms_) s += std::abs(c);
    return s;
}

std::vector<PauliString> PauliSum::strings() const {
    std::vector<PauliString> out;
    out.reserve(terms_.size());
    for (auto &[p, c] : terms_) out.push_back(p);
    return out;
}

PauliSum &PauliSum::operator+=(const PauliSum &other) {
    if (other.n_ != n_) throw SizeError("PauliSum: qubit counts differ");
    identity_offset += other.identity_offset;
    for (auto &[p, c] : other.terms_) add(p, c);
    return *this;
}

PauliSum &PauliSum::operator*=(double s) {
    identity_offset *= s;
    for (auto &[p, c] : terms_) c *= s;
    prune();
    return *this;
}

PauliSum PauliSum::operator+(const PauliSum &other) const {
    PauliSum out = *this;
    out += other;
    return out;
}

PauliSum PauliSum::operator*(double s) const {
    PauliSum out = *this;
    out *= s;
    return out;
}

nlohmann::json PauliSum::to_json() const {
    nlohmann::json j;
    j["n_qubits"] = n_;
    j["identity_offset"] = identity_offset;
    auto arr = nlohmann::json::array();
    for (auto &[p, c] : terms_) arr.push_back({{"pauli", p.str()}, {"coeff", c}});
    j["terms"] = std::move(arr);
    return j;
}

PauliSum PauliSum::from_json(const nlohmann::json &j) {
    PauliSum s(j.at("n_qubits").get<int>(), j.value("identity_offset", 0.0));
    for (auto &t : j.at("terms")) {
        auto p = PauliString::parse(t.at("pauli").get<std::string>());
        if (p.n != s.n_) throw SizeError("pauli-sum json: string length differs from n_qubits");
        s.add(p, t.at("coeff").get<double>());
    }
    return s;
}

PauliSum sum_product(const PauliSum &a, const PauliSum &b, double truncate, double *dropped) {
    if (a.n_qubits() != b.n_qubits()) throw SizeError("sum_product: qubit counts differ");
    const int n = a.n_qubits();
    std::unordered_map<PauliString, cplx, PauliStringHash> acc;
    acc.reserve(a.size() * 4 + b.size() * 4 + 16);
    cplx offset = a.identity_offset * b.identity_offset;
    double scale = std::abs(offset.real());

    for (auto &[pa, ca] : a.terms()) {
        if (b.identity_offset != 0) acc[pa] += ca * b.identity_offset;
        for (auto &[pb, cb] : b.terms()) {
            auto pr = pauli_product(pa, pb);
            cplx v = i_pow(pr.phase) * (ca * cb);
            if (pr.result.is_identity()) offset += v;
            else acc[pr.result] += v;
        }
    }
    if (a.identity_offset != 0)
        for (auto &[pb, cb] : b.terms()) acc[pb] += a.identity_offset * cb;

    for (auto &[p, c] : acc) scale = std::max(scale, std::abs(c));
    double tol = 1e-10 * std::max(1.0, scale);
    if (std::abs(offset.imag()) > tol) throw ConsistencyError("sum_product: imaginary identity coefficient");
    PauliSum out(n, offset.real());
    double drop = 0;
    for (auto &[p, c] : acc) {
        if (std::abs(c.imag()) > tol)
            throw ConsistencyError("sum_product: imaginary coefficient on " + p.str());
        double r = c.real();
        if (std::abs(r) < 1e-14) continue;
        if (truncate > 0 && std::abs(r) < truncate) {
            drop += std::abs(r);
            continue;
        }
        out.add(p, r);
    }
    if (dropped) *dropped = drop;
    return out;
}

PauliSum sum_power(const PauliSum &h, int k, double truncate, double *dropped) {
    if (k < 0) throw std::invalid_argument("sum_power: negative exponent");
    PauliSum out(h.n_qubits(), 1.0);
    double total = 0;
    for (int i = 0; i < k; ++i) {
        double d = 0;
        out = sum_product(out, h, truncate, &d);
        total += d;
    }
    if (dropped) *dropped = total;
    return out;
}

PauliSum times_string(const PauliSum &h, const PauliString &s) {
    PauliSum single(h.n_qubits());
    if (s.is_identity()) return h;
    single.add(s, 1.0);
    return sum_product(h, single);
}

}  // namespace vqeforge
