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

#include "vqeforge/ansatz.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <queue>
#include <set>
#include <sstream>

#include "vqeforge/kernels.h"

namespace vqeforge {

namespace {

// "Y0X1X3Z4X5" style sparse notation
PauliString sparse_pauli(int n, const std::string &s) {
    PauliString p(n);
    size_t i = 0;
    while (i < s.size()) {
        char c = s[i++];
        size_t j = i;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        p.set(std::stoi(s.substr(i, j - i)), c);
        i = j;
    }
    return p;
}

Eigen::VectorXcd apply_map(const ComplexPauliMap &m, const Eigen::VectorXcd &v) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(v.size());
    for (auto &[p, c] : m) {
        const cplx ph = c * i_pow(std::popcount(p.x & p.z));
        for (Eigen::Index b = 0; b < v.size(); ++b) {
            cplx t = (std::popcount(uint64_t(b) & p.z) & 1) ? -v[b] : v[b];
            out[b ^ p.x] += ph * t;
        }
    }
    return out;
}

Eigen::VectorXcd apply_sum(const PauliSum &h, const Eigen::VectorXcd &v) {
    Eigen::VectorXcd out(v.size());
    kernels::apply_pauli_sum(h, v.data(), out.data(), h.n_qubits());
    return out;
}

bool op_less(const ExcitationOp &a, const ExcitationOp &b) {
    if (a.is_double() != b.is_double()) return !a.is_double();
    if (a.occ != b.occ) return a.occ < b.occ;
    return a.vir < b.vir;
}

const char *basis_change(char from, char to) {
    if (from == to) return nullptr;
    if ((from == 'X' && to == 'Z') || (from == 'Z' && to == 'X')) return "H";
    if (from == 'Y' && to == 'Z') return "SX";
    if (from == 'Z' && to == 'Y') return "SXDG";
    if (from == 'X' && to == 'Y') return "S";
    return "SDG";  // Y -> X
}

struct SignedPauli {
    int phase = 0;  // power of i
    PauliString p;
};

SignedPauli mul(const SignedPauli &a, const SignedPauli &b) {
    auto r = pauli_product(a.p, b.p);
    return {(a.phase + b.phase + r.phase) % 4, r.result};
}

// CZ Q CZ for CZ on (a, b)
SignedPauli conj_cz(const SignedPauli &q, int a, int b) {
    const int n = q.p.n;
    SignedPauli rest{q.phase, q.p};
    rest.p.set(a, 'I');
    rest.p.set(b, 'I');
    auto image = [&](int s, int o) {
        char l = q.p.letter(s);
        SignedPauli im{0, PauliString(n)};
        if (l == 'I') return im;
        im.p.set(s, l);
        if (l != 'Z') im.p.set(o, 'Z');
        return im;
    };
    // the letters on a and b commute, so their images can be multiplied in any order
    return mul(mul(rest, image(a, b)), image(b, a));
}

}  // namespace

std::string ExcitationOp::label() const {
    std::ostringstream ss;
    for (auto it = vir.rbegin(); it != vir.rend(); ++it) ss << "a†" << *it;
    for (auto it = occ.rbegin(); it != occ.rend(); ++it) ss << "a" << *it;
    return ss.str();
}

FermionOperator ExcitationOp::anti_hermitian(int n_modes) const {
    FermionOperator f;
    f.n_modes = n_modes;
    FermionTerm t{1.0, {}}, td{-1.0, {}};
    for (auto it = vir.rbegin(); it != vir.rend(); ++it) t.ops.emplace_back(*it, true);
    for (auto it = occ.rbegin(); it != occ.rend(); ++it) t.ops.emplace_back(*it, false);
    // adjoint: reverse order, flip daggers
    for (auto it = t.ops.rbegin(); it != t.ops.rend(); ++it) td.ops.emplace_back(it->first, !it->second);
    f.terms = {t, td};
    return f;
}

std::vector<ExcitationOp> build_pool(const QubitHamiltonian &h) {
    const int m = h.n_spatial;
    std::vector<int> occ, vir;
    for (int p = 0; p < m; ++p) (p < h.n_alpha ? occ : vir).push_back(h.alpha_qubit(p));
    for (int p = 0; p < m; ++p) (p < h.n_beta ? occ : vir).push_back(h.beta_qubit(p));
    auto spin = [m](int q) { return q >= m; };
    std::vector<ExcitationOp> pool;
    for (int i : occ)
        for (int a : vir)
            if (spin(i) == spin(a)) pool.push_back({{i}, {a}});
    for (size_t x = 0; x < occ.size(); ++x)
        for (size_t y = x + 1; y < occ.size(); ++y)
            for (size_t u = 0; u < vir.size(); ++u)
                for (size_t w = u + 1; w < vir.size(); ++w) {
                    int i = occ[x], j = occ[y], a = vir[u], b = vir[w];
                    if (int(spin(i)) + int(spin(j)) != int(spin(a)) + int(spin(b))) continue;
                    pool.push_back({{i, j}, {a, b}});
                }
    std::stable_sort(pool.begin(), pool.end(), op_less);
    return pool;
}

int irrep_product(const ExcitationOp &op, const QubitHamiltonian &h) {
    int x = 0;
    auto spatial = [&](int q) { return q % h.n_spatial; };
    for (int q : op.occ) x ^= h.orbsym.at(spatial(q));
    for (int q : op.vir) x ^= h.orbsym.at(spatial(q));
    return x & ~h.irrep_collapse_mask;
}

std::vector<ExcitationOp> symmetry_filter(const std::vector<ExcitationOp> &pool, const QubitHamiltonian &h) {
    std::vector<ExcitationOp> out;
    for (auto &op : pool)
        if (irrep_product(op, h) == 0) out.push_back(op);
    return out;
}

double ExcitationScan::operator()(double t) const {
    return c0 + c1 * std::cos(t) + s1 * std::sin(t) + c2 * std::cos(2 * t) + s2 * std::sin(2 * t);
}

std::pair<double, double> ExcitationScan::minimum() const {
    const double pi = std::numbers::pi;
    if (std::abs(c1) < 1e-14 && std::abs(s1) < 1e-14) {
        // determinant reference: pure second harmonic
        double r = std::hypot(c2, s2);
        double t = r > 0 ? 0.5 * std::atan2(-s2, -c2) : 0.0;
        return {t, c0 - r};
    }
    const int grid = 720;
    double best_t = 0, best = (*this)(0);
    for (int k = 1; k < grid; ++k) {
        double t = -pi + 2 * pi * k / grid;
        double v = (*this)(t);
        if (v < best) {
            best = v;
            best_t = t;
        }
    }
    double a = best_t - 2 * pi / grid, b = best_t + 2 * pi / grid;
    const double g = (std::sqrt(5.0) - 1) / 2;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = (*this)(x1), f2 = (*this)(x2);
    for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = (*this)(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = (*this)(x2);
        }
    }
    double t = 0.5 * (a + b);
    return {t, (*this)(t)};
}

ExcitationScan excitation_scan(const ExcitationOp &op, const PauliSum &h, const Eigen::VectorXcd &psi) {
    auto gen = jw_complex(op.anti_hermitian(h.n_qubits()));
    Eigen::VectorXcd u = apply_map(gen, psi);
    Eigen::VectorXcd w = apply_map(gen, u);
    Eigen::VectorXcd v = psi + w;
    // psi(t) = v + sin t u - cos t w
    Eigen::VectorXcd hv = apply_sum(h, v), hu = apply_sum(h, u), hw = apply_sum(h, w);
    double vhv = v.dot(hv).real(), uhu = u.dot(hu).real(), whw = w.dot(hw).real();
    double vhu = v.dot(hu).real(), vhw = v.dot(hw).real(), uhw = u.dot(hw).real();
    ExcitationScan s;
    s.c0 = vhv + 0.5 * (uhu + whw);
    s.c1 = -2 * vhw;
    s.s1 = 2 * vhu;
    s.c2 = 0.5 * (whw - uhu);
    s.s2 = -uhw;
    return s;
}

std::vector<Selection> select_dominant(const std::vector<ExcitationOp> &pool, const QubitHamiltonian &h,
                                       const Eigen::VectorXcd &reference, double eps) {
    Eigen::VectorXcd hr = apply_sum(h.h, reference);
    const double e_ref = reference.dot(hr).real();
    std::vector<Selection> all;
    for (auto &op : pool) {
        auto scan = excitation_scan(op, h.h, reference);
        auto [t, e] = scan.minimum();
        Selection s{op, e_ref, e, e_ref - e, t};
        if (s.delta_e > eps) all.push_back(s);
    }
    // quantise so that symmetry-equivalent operators tie and fall back to pool order
    auto key = [](double d) { return std::llround(d * 1e10); };
    std::sort(all.begin(), all.end(), [&](const Selection &a, const Selection &b) {
        if (key(a.delta_e) != key(b.delta_e)) return key(a.delta_e) > key(b.delta_e);
        return op_less(a.op, b.op);
    });
    return all;
}

nlohmann::json LadderTemplate::to_json() const {
    nlohmann::json par = nlohmann::json::object();
    for (auto [c, p] : parent) par[std::to_string(c)] = p;
    return {{"pivot", pivot}, {"parent", par}, {"order", order}};
}

LadderTemplate LadderTemplate::from_json(const nlohmann::json &j) {
    LadderTemplate t;
    t.pivot = j.at("pivot").get<int>();
    for (auto &[k, v] : j.at("parent").items()) t.parent[std::stoi(k)] = v.get<int>();
    t.order = j.at("order").get<std::vector<int>>();
    return t;
}

LadderTemplate LadderTemplate::path(const std::vector<int> &nodes) {
    LadderTemplate t;
    t.pivot = nodes.back();
    for (size_t i = 0; i + 1 < nodes.size(); ++i) {
        t.parent[nodes[i]] = nodes[i + 1];
        t.order.push_back(nodes[i]);
    }
    return t;
}

std::vector<std::pair<PauliString, double>> generator_terms(const ExcitationOp &op, int n_qubits) {
    std::vector<std::pair<PauliString, double>> out;
    for (auto &[p, c] : jw_complex(op.anti_hermitian(n_qubits))) {
        if (std::abs(c.real()) > 1e-12) throw ConsistencyError("excitation generator is not anti-Hermitian");
        out.emplace_back(p, c.imag());
    }
    return out;
}

BoundTerm single_term_reduce(const ExcitationOp &op, int n_qubits, int param) {
    auto terms = generator_terms(op, n_qubits);
    if (terms.empty()) throw ConsistencyError("empty excitation generator " + op.label());
    // exp(theta i b P) = exp(-i (-2b theta) P / 2); keep only the direction
    return {terms.front().first, param, terms.front().second > 0 ? -1.0 : 1.0, std::nullopt};
}

std::optional<OverrideTable> builtin_override(const std::string &molecule) {
    auto T = [](int pivot, std::map<int, int> parent, std::vector<int> order) {
        return LadderTemplate{pivot, std::move(parent), std::move(order)};
    };
    if (molecule == "h2") {
        const int n = 4;
        return OverrideTable{"h2",
                             {{{{0, 2}, {1, 3}},
                               {{sparse_pauli(n, "Y0X1X2X3"), T(1, {{0, 1}, {2, 0}, {3, 2}}, {3, 2, 0})},
                                {sparse_pauli(n, "X0Y1X2X3"), T(2, {{0, 2}, {3, 2}, {1, 0}}, {3, 1, 0})}}}}};
    }
    if (molecule == "lih") {
        const int n = 6;
        return OverrideTable{
            "lih",
            {{{{0, 3}, {1, 5}},
              {{sparse_pauli(n, "Y0X1X3Z4X5"), T(1, {{0, 1}, {4, 1}, {5, 4}, {3, 0}}, {5, 4, 3, 0})}}},
             {{{0, 3}, {2, 4}},
              {{sparse_pauli(n, "Y0Z1X2X3X4"), T(1, {{0, 1}, {2, 1}, {4, 1}, {3, 0}}, {3, 0, 2, 4})}}},
             {{{0, 3}, {2, 5}},
              {{sparse_pauli(n, "Y0Z1X2X3Z4X5"),
                T(4, {{1, 4}, {5, 4}, {0, 1}, {2, 1}, {3, 0}}, {3, 0, 2, 1, 5})}}}}};
    }
    if (molecule == "f2") {
        const int n = 12;
        OverrideTable t{"f2", {}};
        for (int k = 0; k < 5; ++k) {
            std::string s = "Y" + std::to_string(k);
            for (int q = k + 1; q < 5; ++q) s += "Z" + std::to_string(q);
            s += "X5X" + std::to_string(6 + k);
            for (int q = 7 + k; q < 11; ++q) s += "Z" + std::to_string(q);
            s += "X11";
            std::vector<int> path{11, 5};
            if (k < 4) {
                for (int q = 4; q >= k; --q) path.push_back(q);
                for (int q = k + 6; q <= 10; ++q) path.push_back(q);
            } else {
                path = {11, 5, 4, 10};
                s = "X4X5Y10X11";
            }
            t.entries.push_back({{{k, 6 + k}, {5, 11}}, {{sparse_pauli(n, s), LadderTemplate::path(path)}}});
        }
        return t;
    }
    return std::nullopt;
}

uint64_t swap_determinant(const QubitHamiltonian &h) {
    if (h.n_alpha < 1 || h.n_beta < 1 || h.n_alpha >= h.n_spatial || h.n_beta >= h.n_spatial)
        throw std::invalid_argument("multireference state needs an occupied and a virtual orbital per spin");
    uint64_t b = h.hf_bits();
    b ^= uint64_t{1} << h.alpha_qubit(h.n_alpha - 1);
    b ^= uint64_t{1} << h.alpha_qubit(h.n_alpha);
    b ^= uint64_t{1} << h.beta_qubit(h.n_beta - 1);
    b ^= uint64_t{1} << h.beta_qubit(h.n_beta);
    return b;
}

Eigen::VectorXcd initial_amplitudes(const InitialState &init, const QubitHamiltonian &h) {
    if (!std::isfinite(init.beta)) throw ConfigError("multireference beta must be finite");
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(Eigen::Index{1} << h.n_qubits());
    if (init.kind == InitialState::Kind::HartreeFock) {
        v[h.hf_bits()] = 1;
        return v;
    }
    const double norm = std::sqrt(1 + init.beta * init.beta);
    v[h.hf_bits()] = 1 / norm;
    v[swap_determinant(h)] = -init.beta / norm;
    return v;
}

std::vector<Gate> initial_state_gates(const InitialState &init, const QubitHamiltonian &h) {
    if (!std::isfinite(init.beta)) throw ConfigError("multireference beta must be finite");
    std::vector<Gate> g;
    const uint64_t hf = h.hf_bits();
    if (init.kind == InitialState::Kind::HartreeFock) {
        for (int q = 0; q < h.n_qubits(); ++q)
            if (hf >> q & 1) g.push_back(Gate::c1(q, "X", true));
        return g;
    }
    swap_determinant(h);  // validates
    const int ah = h.alpha_qubit(h.n_alpha - 1), al = h.alpha_qubit(h.n_alpha);
    const int bh = h.beta_qubit(h.n_beta - 1), bl = h.beta_qubit(h.n_beta);
    const double phi = 2 * std::atan2(-init.beta, 1.0);
    g.push_back(Gate::rot(GateKind::RY, ah, phi, -1, 1.0, true));
    g.push_back(Gate::cnot(ah, bh, true));
    g.push_back(Gate::cnot(ah, al, true));
    g.push_back(Gate::cnot(bh, bl, true));
    for (int q = 0; q < h.n_qubits(); ++q)
        if (hf >> q & 1) g.push_back(Gate::c1(q, "X", true));
    return g;
}

Layout default_layout(const QubitHamiltonian &h) { return Layout::grid(2, h.n_spatial); }

LadderTemplate auto_ladder(const PauliString &p, const Layout &layout) {
    auto sup = p.support();
    if (sup.empty()) throw CompileError("cannot compile an identity rotation");
    std::set<int> in(sup.begin(), sup.end());
    auto adj = layout.adjacency();
    auto bfs = [&](int root, std::map<int, int> *parent, std::map<int, int> *depth) {
        std::map<int, int> d{{root, 0}};
        std::queue<int> q;
        q.push(root);
        while (!q.empty()) {
            int x = q.front();
            q.pop();
            for (int y : adj.at(x)) {
                if (!in.count(y) || d.count(y)) continue;
                d[y] = d[x] + 1;
                if (parent) (*parent)[y] = x;
                q.push(y);
            }
        }
        if (depth) *depth = d;
        return d;
    };
    std::vector<int> candidates;
    for (int q : sup)
        if (p.letter(q) != 'Z') candidates.push_back(q);
    if (candidates.empty()) candidates = sup;
    int pivot = -1, best_ecc = 1 << 30;
    for (int c : candidates) {
        auto d = bfs(c, nullptr, nullptr);
        if (d.size() != in.size()) throw CompileError("support of " + p.str() + " is not connected on the layout");
        int ecc = 0;
        for (auto [q, v] : d) ecc = std::max(ecc, v);
        if (ecc < best_ecc || (ecc == best_ecc && c > pivot)) {
            best_ecc = ecc;
            pivot = c;
        }
    }
    LadderTemplate t;
    t.pivot = pivot;
    std::map<int, int> depth;
    bfs(pivot, &t.parent, &depth);
    for (auto [c, par] : t.parent) t.order.push_back(c);
    std::sort(t.order.begin(), t.order.end(), [&](int a, int b) {
        if (depth[a] != depth[b]) return depth[a] > depth[b];
        return a > b;
    });
    return t;
}

namespace {

void validate_ladder(const PauliString &p, const LadderTemplate &t) {
    auto sup = p.support();
    std::set<int> in(sup.begin(), sup.end());
    if (!in.count(t.pivot)) throw CompileError("ladder pivot outside the support of " + p.str());
    if (t.parent.size() + 1 != in.size()) throw CompileError("ladder does not span the support of " + p.str());
    std::set<int> done;
    std::map<int, std::vector<int>> children;
    for (auto [c, par] : t.parent) {
        if (!in.count(c) || !in.count(par) || c == t.pivot) throw CompileError("ladder edge outside support");
        children[par].push_back(c);
    }
    if (t.order.size() != t.parent.size()) throw CompileError("ladder order length mismatch");
    for (int c : t.order) {
        if (!t.parent.count(c) || done.count(c)) throw CompileError("ladder order repeats or misses a node");
        for (int k : children[c])
            if (!done.count(k)) throw CompileError("ladder order visits a parent before its child");
        done.insert(c);
    }
}

}  // namespace

std::vector<Gate> rotation_gates(const BoundTerm &t, const LadderTemplate &ladder, const Layout &layout) {
    const PauliString &p = t.pauli;
    validate_ladder(p, ladder);
    std::map<int, int> n_children;
    for (auto [c, par] : ladder.parent) ++n_children[par];
    std::map<int, char> cur;
    std::vector<Gate> pre;
    for (int q : p.support()) {
        char l = p.letter(q);
        bool leaf = n_children[q] == 0 && q != ladder.pivot;
        char tgt = leaf ? 'Z' : (l == 'Z' ? 'X' : l);
        if (auto nm = basis_change(l, tgt)) pre.push_back(Gate::c1(q, nm));
        cur[q] = tgt;
    }
    for (int c : ladder.order) {
        if (cur[c] != 'Z') {
            pre.push_back(Gate::c1(c, basis_change(cur[c], 'Z')));
            cur[c] = 'Z';
        }
        int par = ladder.parent.at(c);
        if (!layout.adjacent(c, par))
            throw CompileError("qubits " + std::to_string(c) + " and " + std::to_string(par) + " are not adjacent");
        pre.push_back(Gate::cz(c, par));
    }
    // Heisenberg-propagate the pivot axis back through the prefix to read off the sign
    SignedPauli q{0, PauliString(p.n)};
    q.p.set(ladder.pivot, cur[ladder.pivot]);
    for (auto it = pre.rbegin(); it != pre.rend(); ++it) {
        if (it->kind == GateKind::CZ) {
            q = conj_cz(q, it->q0, it->q1);
        } else {
            char l = q.p.letter(it->q0);
            if (l == 'I') continue;
            auto [s, nl] = clifford::conj_dagger(it->clifford, l);
            q.p.set(it->q0, nl);
            if (s < 0) q.phase = (q.phase + 2) % 4;
        }
    }
    if (!(q.p == p) || q.phase % 2) throw CompileError("ladder does not realise " + p.str());
    const double sign = q.phase == 0 ? 1.0 : -1.0;
    std::vector<Gate> out = pre;
    out.push_back(Gate::rot(cur[ladder.pivot] == 'X' ? GateKind::RX : GateKind::RY, ladder.pivot, 0.0, t.param,
                            t.coef * sign));
    for (auto it = pre.rbegin(); it != pre.rend(); ++it) {
        Gate g = *it;
        if (g.kind == GateKind::C1) g.clifford = clifford::inverse(g.clifford);
        out.push_back(g);
    }
    return out;
}

CompiledCircuit compile(const std::vector<BoundTerm> &terms, int n_qubits, int n_params,
                        const std::vector<Gate> &prep, const Layout &layout, bool cancel) {
    if (layout.n_qubits() < n_qubits) throw CompileError("layout smaller than the register");
    std::vector<Gate> body;
    for (auto &t : terms) {
        if (t.pauli.n != n_qubits) throw CompileError("term width differs from register");
        if (t.param < 0 || t.param >= n_params) throw CompileError("term bound to a missing parameter");
        LadderTemplate lad = t.ladder ? *t.ladder : auto_ladder(t.pauli, layout);
        auto g = rotation_gates(t, lad, layout);
        body.insert(body.end(), g.begin(), g.end());
    }
    if (cancel) body = peephole(std::move(body));
    CompiledCircuit c;
    c.n_qubits = n_qubits;
    c.n_params = n_params;
    for (auto &g : prep) {
        if (g.two_qubit() && !layout.adjacent(g.q0, g.q1))
            throw CompileError("preparation gate on non-adjacent qubits");
        c.gates.push_back(g);
    }
    c.gates.insert(c.gates.end(), body.begin(), body.end());
    c.layout = layout;
    return c;
}

CompiledCircuit compile(const Ansatz &a, const QubitHamiltonian &h, const Layout &layout, bool cancel) {
    return compile(a.terms, a.n_qubits, a.n_params, initial_state_gates(a.initial, h), layout, cancel);
}

Ansatz build_ansatz(const QubitHamiltonian &h, const AnsatzOptions &opt) {
    Ansatz a;
    a.n_qubits = h.n_qubits();
    a.initial = opt.initial;
    auto pool = build_pool(h);
    a.pool_size = static_cast<int>(pool.size());
    if (opt.apply_symmetry_filter) pool = symmetry_filter(pool, h);
    a.filtered_size = static_cast<int>(pool.size());
    auto sel = select_dominant(pool, h, initial_amplitudes(opt.initial, h), opt.eps_thres);

    std::optional<OverrideTable> ov;
    if (opt.use_override) ov = builtin_override(h.molecule);
    bool use = false;
    if (ov && ov->entries.size() == sel.size()) {
        use = true;
        for (auto &e : ov->entries)
            if (std::none_of(sel.begin(), sel.end(), [&](auto &s) { return s.op == e.op; })) use = false;
        if (ov->entries.empty() || ov->entries.front().terms.front().pauli.n != h.n_qubits()) use = false;
    }
    if (use) {
        a.provenance = "override:" + ov->molecule;
        int param = 0;
        for (auto &e : ov->entries) {
            auto it = std::find_if(sel.begin(), sel.end(), [&](auto &s) { return s.op == e.op; });
            a.selected.push_back(*it);
            auto gens = generator_terms(e.op, h.n_qubits());
            for (auto &ot : e.terms) {
                auto g = std::find_if(gens.begin(), gens.end(), [&](auto &x) { return x.first == ot.pauli; });
                if (g == gens.end())
                    throw ConsistencyError(ot.pauli.str() + " is not a generator term of " + e.op.label());
                a.terms.push_back({ot.pauli, param, g->second > 0 ? -1.0 : 1.0, ot.ladder});
            }
            ++param;
        }
    } else {
        a.provenance = "canonical";
        int param = 0;
        for (auto &s : sel) {
            a.selected.push_back(s);
            a.terms.push_back(single_term_reduce(s.op, h.n_qubits(), param++));
        }
    }
    a.n_params = static_cast<int>(a.selected.size());
    return a;
}

nlohmann::json Ansatz::to_json() const {
    nlohmann::json ops = nlohmann::json::array();
    for (auto &s : selected)
        ops.push_back({{"label", s.op.label()}, {"occ", s.op.occ}, {"vir", s.op.vir}, {"delta_e", s.delta_e}});
    nlohmann::json ts = nlohmann::json::array();
    for (auto &t : terms) {
        nlohmann::json j{{"pauli", t.pauli.str()}, {"param", t.param}, {"coef", t.coef}};
        if (t.ladder) j["ladder"] = t.ladder->to_json();
        ts.push_back(j);
    }
    return {{"n_qubits", n_qubits},
            {"n_params", n_params},
            {"operators", ops},
            {"terms", ts},
            {"provenance", provenance},
            {"pool_size", pool_size},
            {"filtered_size", filtered_size},
            {"initial_state",
             {{"kind", initial.kind == InitialState::Kind::HartreeFock ? "hf" : "multireference"},
              {"beta", initial.beta}}}};
}

CompiledCircuit naive_uccsd(const std::vector<ExcitationOp> &pool, int n_qubits) {
    CompiledCircuit c;
    c.n_qubits = n_qubits;
    c.n_params = static_cast<int>(pool.size());
    c.layout = Layout::complete(n_qubits);
    for (size_t j = 0; j < pool.size(); ++j) {
        for (auto &[p, b] : generator_terms(pool[j], n_qubits)) {
            auto sup = p.support();
            std::vector<Gate> pre;
            for (int q : sup)
                if (auto nm = basis_change(p.letter(q), 'Z')) pre.push_back(Gate::c1(q, nm));
            for (size_t k = 0; k + 1 < sup.size(); ++k) pre.push_back(Gate::cnot(sup[k], sup[k + 1]));
            c.gates.insert(c.gates.end(), pre.begin(), pre.end());
            c.gates.push_back(Gate::rot(GateKind::RZ, sup.back(), 0.0, static_cast<int>(j), -2 * b));
            for (auto it = pre.rbegin(); it != pre.rend(); ++it) {
                Gate g = *it;
                if (g.kind == GateKind::C1) g.clifford = clifford::inverse(g.clifford);
                c.gates.push_back(g);
            }
        }
    }
    return c;
}

}  // namespace vqeforge
