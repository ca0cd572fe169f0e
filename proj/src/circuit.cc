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

#include "vqeforge/circuit.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <queue>

namespace vqeforge {

namespace clifford {

namespace {

Mat2 mul(const Mat2 &a, const Mat2 &b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3]};
}

Mat2 dag(const Mat2 &a) { return {std::conj(a[0]), std::conj(a[2]), std::conj(a[1]), std::conj(a[3])}; }

Mat2 normalise(Mat2 m) {
    for (auto v : m)
        if (std::abs(v) > 1e-9) {
            cplx ph = v / std::abs(v);
            for (auto &x : m) x /= ph;
            break;
        }
    return m;
}

bool same(const Mat2 &a, const Mat2 &b) {
    for (int i = 0; i < 4; ++i)
        if (std::abs(a[i] - b[i]) > 1e-9) return false;
    return true;
}

const Mat2 &pauli_matrix(char c) {
    static const Mat2 X{0, 1, 1, 0}, Y{0, cplx(0, -1), cplx(0, 1), 0}, Z{1, 0, 0, -1};
    return c == 'X' ? X : (c == 'Y' ? Y : Z);
}

struct Table {
    std::vector<Mat2> mats;
    std::vector<std::string> names;
    std::vector<std::vector<int>> product;  // product[later][earlier]
    std::vector<int> inv;
    std::vector<std::array<std::pair<int, char>, 3>> conj;

    int find(const Mat2 &m) const {
        Mat2 n = normalise(m);
        for (size_t i = 0; i < mats.size(); ++i)
            if (same(mats[i], n)) return static_cast<int>(i);
        return -1;
    }

    Table() {
        const double r = 1 / std::sqrt(2.0);
        const cplx i1(0, 1);
        std::vector<std::pair<std::string, Mat2>> gens{
            {"H", {r, r, r, -r}},
            {"S", {1, 0, 0, i1}},
            {"SDG", {1, 0, 0, -i1}},
            {"X", {0, 1, 1, 0}},
            {"Y", {0, -i1, i1, 0}},
            {"Z", {1, 0, 0, -1}},
            {"SX", {r, -i1 * r, -i1 * r, r}},
            {"SXDG", {r, i1 * r, i1 * r, r}},
            {"SY", {r, -r, r, r}},
            {"SYDG", {r, r, -r, r}},
        };
        mats.push_back({1, 0, 0, 1});
        names.push_back("I");
        // breadth-first so each element gets a shortest name
        for (size_t head = 0; head < mats.size(); ++head) {
            for (auto &[gn, gm] : gens) {
                Mat2 m = normalise(mul(gm, mats[head]));
                if (find(m) >= 0) continue;
                mats.push_back(m);
                names.push_back(head == 0 ? gn : names[head] + " " + gn);
            }
        }
        const int n = static_cast<int>(mats.size());
        product.assign(n, std::vector<int>(n));
        inv.resize(n);
        conj.resize(n);
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) product[a][b] = find(mul(mats[a], mats[b]));
            inv[a] = find(dag(mats[a]));
            int k = 0;
            for (char c : {'X', 'Y', 'Z'}) {
                Mat2 t = mul(dag(mats[a]), mul(pauli_matrix(c), mats[a]));
                for (char d : {'X', 'Y', 'Z'}) {
                    if (same(t, pauli_matrix(d))) conj[a][k] = {1, d};
                    Mat2 neg = pauli_matrix(d);
                    for (auto &x : neg) x = -x;
                    if (same(t, neg)) conj[a][k] = {-1, d};
                }
                ++k;
            }
        }
    }
};

const Table &table() {
    static const Table t;
    return t;
}

}  // namespace

int size() { return static_cast<int>(table().mats.size()); }
int identity() { return 0; }
const Mat2 &matrix(int idx) { return table().mats.at(idx); }
const std::string &name(int idx) { return table().names.at(idx); }

int index_of(const Mat2 &m) {
    int k = table().find(m);
    if (k < 0) throw std::invalid_argument("matrix is not a single-qubit Clifford");
    return k;
}

int by_name(const std::string &nm) {
    auto &t = table();
    for (size_t i = 0; i < t.names.size(); ++i)
        if (t.names[i] == nm) return static_cast<int>(i);
    throw std::invalid_argument("unknown Clifford name " + nm);
}

int compose(int later, int earlier) { return table().product.at(later).at(earlier); }
int inverse(int idx) { return table().inv.at(idx); }

std::pair<int, char> conj_dagger(int idx, char letter) {
    int k = letter == 'X' ? 0 : (letter == 'Y' ? 1 : 2);
    return table().conj.at(idx)[k];
}

}  // namespace clifford

Gate Gate::c1(int q, int idx, bool prep) {
    Gate g;
    g.kind = GateKind::C1;
    g.q0 = q;
    g.clifford = idx;
    g.prep = prep;
    return g;
}

Gate Gate::c1(int q, const std::string &nm, bool prep) { return c1(q, clifford::by_name(nm), prep); }

Gate Gate::rot(GateKind k, int q, double literal, int param, double coef, bool prep) {
    Gate g;
    g.kind = k;
    g.q0 = q;
    g.angle = literal;
    g.param = param;
    g.coef = coef;
    g.prep = prep;
    return g;
}

Gate Gate::cz(int a, int b, bool prep) {
    Gate g;
    g.kind = GateKind::CZ;
    g.q0 = a;
    g.q1 = b;
    g.prep = prep;
    return g;
}

Gate Gate::cnot(int c, int t, bool prep) {
    Gate g;
    g.kind = GateKind::CNOT;
    g.q0 = c;
    g.q1 = t;
    g.prep = prep;
    return g;
}

std::string Gate::str() const {
    auto angle_str = [&] {
        std::string s;
        if (param >= 0) s = (coef < 0 ? "-" : "") + std::string("theta") + std::to_string(param);
        if (angle != 0 || param < 0) s += (s.empty() ? "" : "+") + std::to_string(angle);
        return s;
    };
    switch (kind) {
        case GateKind::C1: return clifford::name(clifford) + " q" + std::to_string(q0);
        case GateKind::RX: return "RX(" + angle_str() + ") q" + std::to_string(q0);
        case GateKind::RY: return "RY(" + angle_str() + ") q" + std::to_string(q0);
        case GateKind::RZ: return "RZ(" + angle_str() + ") q" + std::to_string(q0);
        case GateKind::CZ: return "CZ q" + std::to_string(q0) + " q" + std::to_string(q1);
        case GateKind::CNOT: return "CNOT q" + std::to_string(q0) + " q" + std::to_string(q1);
    }
    return "?";
}

Layout Layout::grid(int rows, int cols) {
    Layout l;
    l.rows = rows;
    l.cols = cols;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            int q = r * cols + c;
            if (c + 1 < cols) l.edges.emplace_back(q, q + 1);
            if (r + 1 < rows) l.edges.emplace_back(q, q + cols);
        }
    return l;
}

Layout Layout::complete(int n) {
    Layout l;
    l.rows = 1;
    l.cols = n;
    l.all_to_all = true;
    return l;
}

bool Layout::adjacent(int a, int b) const {
    if (a == b) return false;
    if (all_to_all) return a >= 0 && b >= 0 && a < n_qubits() && b < n_qubits();
    for (auto [x, y] : edges)
        if ((x == a && y == b) || (x == b && y == a)) return true;
    return false;
}

std::vector<std::vector<int>> Layout::adjacency() const {
    std::vector<std::vector<int>> adj(n_qubits());
    for (int a = 0; a < n_qubits(); ++a)
        for (int b = 0; b < n_qubits(); ++b)
            if (adjacent(a, b)) adj[a].push_back(b);
    return adj;
}

nlohmann::json Layout::to_json() const {
    nlohmann::json coords = nlohmann::json::array();
    for (int q = 0; q < n_qubits(); ++q) coords.push_back({q / cols, q % cols});
    nlohmann::json j{{"rows", rows}, {"cols", cols}, {"coords", coords}, {"all_to_all", all_to_all}};
    nlohmann::json e = nlohmann::json::array();
    for (auto [a, b] : edges) e.push_back({a, b});
    j["edges"] = e;
    return j;
}

Layout Layout::from_json(const nlohmann::json &j) {
    Layout l;
    l.rows = j.at("rows").get<int>();
    l.cols = j.at("cols").get<int>();
    l.all_to_all = j.value("all_to_all", false);
    if (j.contains("edges"))
        for (auto &e : j.at("edges")) {
            int a = e.at(0).get<int>(), b = e.at(1).get<int>();
            if (a < 0 || b < 0 || a >= l.n_qubits() || b >= l.n_qubits() || a == b)
                throw std::invalid_argument("layout edge out of range");
            l.edges.emplace_back(a, b);
        }
    return l;
}

Layout Layout::load(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open layout " + path);
    return from_json(nlohmann::json::parse(in));
}

std::vector<double> CompiledCircuit::angles(const std::vector<double> &theta) const {
    if (static_cast<int>(theta.size()) != n_params)
        throw ExecutionError("parameter vector has " + std::to_string(theta.size()) + " entries, circuit needs " +
                             std::to_string(n_params));
    std::vector<double> out(gates.size(), 0.0);
    for (size_t k = 0; k < gates.size(); ++k) {
        const Gate &g = gates[k];
        if (!g.rotation()) continue;
        double a = g.angle;
        if (g.param >= 0) {
            if (g.param >= n_params) throw ExecutionError("unbound parameter " + std::to_string(g.param));
            a += g.coef * theta[g.param];
        }
        out[k] = a;
    }
    return out;
}

std::vector<int> CompiledCircuit::occurrences(int j) const {
    std::vector<int> out;
    for (size_t k = 0; k < gates.size(); ++k)
        if (gates[k].rotation() && gates[k].param == j) out.push_back(static_cast<int>(k));
    return out;
}

CompiledCircuit CompiledCircuit::dagger() const {
    CompiledCircuit d = *this;
    d.gates.assign(gates.rbegin(), gates.rend());
    for (auto &g : d.gates) {
        if (g.kind == GateKind::C1) g.clifford = clifford::inverse(g.clifford);
        if (g.rotation()) {
            g.angle = -g.angle;
            g.coef = -g.coef;
        }
    }
    return d;
}

nlohmann::json CompiledCircuit::to_json() const {
    nlohmann::json gs = nlohmann::json::array();
    for (auto &g : gates) {
        nlohmann::json j;
        switch (g.kind) {
            case GateKind::C1: j["gate"] = clifford::name(g.clifford); break;
            case GateKind::RX: j["gate"] = "RX"; break;
            case GateKind::RY: j["gate"] = "RY"; break;
            case GateKind::RZ: j["gate"] = "RZ"; break;
            case GateKind::CZ: j["gate"] = "CZ"; break;
            case GateKind::CNOT: j["gate"] = "CNOT"; break;
        }
        j["qubits"] = g.two_qubit() ? nlohmann::json{g.q0, g.q1} : nlohmann::json{g.q0};
        if (g.rotation()) {
            j["angle"] = g.angle;
            if (g.param >= 0) {
                j["param"] = g.param;
                j["coef"] = g.coef;
            }
        }
        if (g.prep) j["prep"] = true;
        gs.push_back(j);
    }
    nlohmann::json out{{"n_qubits", n_qubits}, {"n_params", n_params}, {"gates", gs}};
    if (layout) out["layout"] = layout->to_json();
    return out;
}

ResourceCount resource_count(const CompiledCircuit &c, bool include_prep) {
    ResourceCount r;
    std::vector<int> level(c.n_qubits, 0);
    for (auto &g : c.gates) {
        if (g.prep && !include_prep) continue;
        if (g.two_qubit()) {
            ++r.cz;
            int l = std::max(level[g.q0], level[g.q1]) + 1;
            level[g.q0] = level[g.q1] = l;
        } else {
            ++r.single;
            ++level[g.q0];
        }
    }
    for (int l : level) r.depth = std::max(r.depth, l);
    return r;
}

std::vector<Gate> peephole(std::vector<Gate> gs) {
    auto next_on = [&](size_t i, int q) -> long {
        for (size_t j = i + 1; j < gs.size(); ++j)
            if (gs[j].touches(q)) return static_cast<long>(j);
        return -1;
    };
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 0; i < gs.size() && !changed; ++i) {
            const Gate g = gs[i];
            if (g.kind == GateKind::C1) {
                long j = next_on(i, g.q0);
                if (j < 0 || gs[j].kind != GateKind::C1) continue;
                int merged = clifford::compose(gs[j].clifford, g.clifford);
                gs.erase(gs.begin() + j);
                gs.erase(gs.begin() + i);
                if (merged != clifford::identity()) gs.insert(gs.begin() + i, Gate::c1(g.q0, merged, g.prep));
                changed = true;
            } else if (g.kind == GateKind::CZ) {
                long ja = next_on(i, g.q0), jb = next_on(i, g.q1);
                if (ja < 0 || ja != jb || gs[ja].kind != GateKind::CZ) continue;
                gs.erase(gs.begin() + ja);
                gs.erase(gs.begin() + i);
                changed = true;
            }
        }
    }
    return gs;
}

}  // namespace vqeforge
