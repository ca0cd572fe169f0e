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

#include "vqeforge/hamiltonian.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "vqeforge/kernels.h"

namespace vqeforge {

namespace {

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool parse_int(const std::string &s, long &out) {
    try {
        size_t pos = 0;
        out = std::stol(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

std::string upper(std::string s) {
    for (auto &c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

MoleculeMetadata MoleculeMetadata::from_json(const nlohmann::json &j) {
    MoleculeMetadata m;
    m.e_nuc = j.value("e_nuc", 0.0);
    m.e_hf = j.value("e_hf", 0.0);
    m.e_fci = j.value("e_fci", 0.0);
    m.orbsym = j.value("orbsym", std::vector<int>{});
    m.noons = j.value("noons", std::vector<double>{});
    m.molecule = j.value("molecule", std::string{});
    m.distance = j.value("distance", 0.0);
    m.irrep_collapse_mask = j.value("irrep_collapse_mask", 0);
    if (j.contains("active_space")) {
        auto &a = j.at("active_space");
        m.frozen = a.value("frozen", std::vector<int>{});
        m.removed = a.value("removed", std::vector<int>{});
    }
    return m;
}

nlohmann::json MoleculeMetadata::to_json() const {
    return {{"e_nuc", e_nuc},
            {"e_hf", e_hf},
            {"e_fci", e_fci},
            {"orbsym", orbsym},
            {"noons", noons},
            {"molecule", molecule},
            {"distance", distance},
            {"irrep_collapse_mask", irrep_collapse_mask},
            {"active_space", {{"frozen", frozen}, {"removed", removed}}}};
}

MoleculeMetadata load_metadata(const std::string &path) {
    try {
        return MoleculeMetadata::from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(path + ": " + e.what());
    }
}

IntegralSet::IntegralSet(int n, int nelec)
    : n_spatial(n), n_electrons(nelec), h(size_t(n) * n, 0.0), g(size_t(n) * n * n * n, 0.0), orbsym(n, 0) {}

void IntegralSet::validate(double tol) const {
    const int n = n_spatial;
    if (n_electrons % 2 != 0 || n_electrons < 0 || n_electrons > 2 * n)
        throw ValidationError("electron count must be even and at most 2*norb");
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            if (std::abs(H(p, q) - H(q, p)) > tol) throw ValidationError("one-body integrals not symmetric");
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r)
                for (int s = 0; s < n; ++s) {
                    double v = G(p, q, r, s);
                    if (std::abs(v - G(q, p, r, s)) > tol || std::abs(v - G(p, q, s, r)) > tol ||
                        std::abs(v - G(r, s, p, q)) > tol)
                        throw ValidationError("two-body integrals break 8-fold symmetry");
                }
}

IntegralSet parse_fcidump(std::string_view text) {
    std::string src(text);
    std::string up = upper(src);
    size_t start = up.find("&FCI");
    if (start == std::string::npos) throw ParseError("fcidump: missing &FCI header");
    size_t end = up.find("&END", start);
    size_t end_len = 4;
    size_t slash = up.find('/', start);
    if (slash != std::string::npos && (end == std::string::npos || slash < end)) {
        end = slash;
        end_len = 1;
    }
    if (end == std::string::npos) throw ParseError("fcidump: header not terminated");

    std::string header = up.substr(start + 4, end - start - 4);
    std::replace(header.begin(), header.end(), ',', ' ');
    // glue "KEY = V" into "KEY=V"
    std::string norm;
    for (size_t i = 0; i < header.size(); ++i) {
        if (header[i] == '=') {
            while (!norm.empty() && std::isspace(static_cast<unsigned char>(norm.back()))) norm.pop_back();
            norm += '=';
            while (i + 1 < header.size() && std::isspace(static_cast<unsigned char>(header[i + 1]))) ++i;
        } else {
            norm += header[i];
        }
    }
    std::map<std::string, std::vector<long>> keys;
    std::string current;
    std::istringstream hs(norm);
    std::string tok;
    while (hs >> tok) {
        auto eq = tok.find('=');
        std::string val = tok;
        if (eq != std::string::npos) {
            current = tok.substr(0, eq);
            val = tok.substr(eq + 1);
            keys[current];
            if (val.empty()) continue;
        }
        if (current.empty()) throw ParseError("fcidump: value without key in header");
        long v;
        if (!parse_int(val, v)) throw ParseError("fcidump: bad header value '" + val + "'");
        keys[current].push_back(v);
    }
    auto scalar = [&](const char *k) -> long {
        auto it = keys.find(k);
        if (it == keys.end() || it->second.size() != 1) throw ParseError(std::string("fcidump: header lacks ") + k);
        return it->second[0];
    };
    const long norb = scalar("NORB");
    const long nelec = scalar("NELEC");
    if (norb <= 0 || norb > 64) throw ParseError("fcidump: NORB out of range");
    if (nelec < 0) throw ParseError("fcidump: NELEC negative");

    IntegralSet ints(static_cast<int>(norb), static_cast<int>(nelec));
    if (keys.count("MS2")) ints.ms2 = static_cast<int>(scalar("MS2"));
    if (auto it = keys.find("ORBSYM"); it != keys.end()) {
        if (it->second.size() != size_t(norb)) throw ParseError("fcidump: ORBSYM length differs from NORB");
        for (int p = 0; p < norb; ++p) ints.orbsym[p] = static_cast<int>(it->second[p] - 1);
    }

    const int n = ints.n_spatial;
    std::vector<char> g_set(ints.g.size(), 0), h_set(ints.h.size(), 0);
    auto put_g = [&](int p, int q, int r, int s, double v) {
        size_t k = ((size_t(p) * n + q) * n + r) * n + s;
        if (g_set[k] && std::abs(ints.g[k] - v) > 1e-8)
            throw ValidationError("fcidump: conflicting two-body records under permutational symmetry");
        ints.g[k] = v;
        g_set[k] = 1;
    };
    auto put_h = [&](int p, int q, double v) {
        size_t k = size_t(p) * n + q;
        if (h_set[k] && std::abs(ints.h[k] - v) > 1e-8)
            throw ValidationError("fcidump: conflicting one-body records under symmetry");
        ints.h[k] = v;
        h_set[k] = 1;
    };

    std::istringstream body(src.substr(end + end_len));
    std::string line;
    int lineno = 0;
    while (std::getline(body, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::vector<std::string> f;
        std::string t;
        while (ls >> t) f.push_back(t);
        if (f.empty()) continue;
        if (f.size() != 5) throw ParseError("fcidump: body line " + std::to_string(lineno) + " needs 5 fields");
        double v;
        long idx[4];
        try {
            std::string num = f[0];
            std::replace(num.begin(), num.end(), 'D', 'E');
            std::replace(num.begin(), num.end(), 'd', 'e');
            size_t pos = 0;
            v = std::stod(num, &pos);
            if (pos != num.size()) throw std::invalid_argument("trailing");
        } catch (...) {
            throw ParseError("fcidump: bad value on body line " + std::to_string(lineno));
        }
        for (int k = 0; k < 4; ++k) {
            if (!parse_int(f[k + 1], idx[k])) throw ParseError("fcidump: bad index on body line " + std::to_string(lineno));
            if (idx[k] < 0 || idx[k] > norb)
                throw ParseError("fcidump: index out of range on body line " + std::to_string(lineno));
        }
        const int i = int(idx[0]) - 1, j = int(idx[1]) - 1, k = int(idx[2]) - 1, l = int(idx[3]) - 1;
        if (i >= 0 && j >= 0 && k >= 0 && l >= 0) {
            put_g(i, j, k, l, v);
            put_g(j, i, k, l, v);
            put_g(i, j, l, k, v);
            put_g(j, i, l, k, v);
            put_g(k, l, i, j, v);
            put_g(l, k, i, j, v);
            put_g(k, l, j, i, v);
            put_g(l, k, j, i, v);
        } else if (i >= 0 && j >= 0 && k < 0 && l < 0) {
            put_h(i, j, v);
            put_h(j, i, v);
        } else if (i < 0 && j < 0 && k < 0 && l < 0) {
            ints.e_core = v;
        } else if (i >= 0 && j < 0 && k < 0 && l < 0) {
            // orbital energy record; not needed downstream
        } else {
            throw ParseError("fcidump: unsupported index pattern on body line " + std::to_string(lineno));
        }
    }
    ints.validate(1e-8);
    return ints;
}

IntegralSet load_fcidump(const std::string &path) {
    IntegralSet ints = parse_fcidump(read_file(path));
    std::filesystem::path side(path);
    side.replace_extension(".json");
    if (std::filesystem::exists(side)) {
        ints.meta = load_metadata(side.string());
        if (ints.meta->orbsym.size() == size_t(ints.n_spatial)) ints.orbsym = ints.meta->orbsym;
    }
    return ints;
}

ActiveSpaceSpec ActiveSpaceSpec::make(int n_spatial, std::vector<int> frozen, std::vector<int> removed) {
    ActiveSpaceSpec s;
    std::set<int> seen;
    for (int i : frozen) {
        if (i < 0 || i >= n_spatial || !seen.insert(i).second)
            throw ValidationError("active space: frozen orbital " + std::to_string(i) + " invalid or repeated");
    }
    for (int i : removed) {
        if (i < 0 || i >= n_spatial || !seen.insert(i).second)
            throw ValidationError("active space: removed orbital " + std::to_string(i) + " invalid or overlaps");
    }
    s.frozen = std::move(frozen);
    s.removed = std::move(removed);
    for (int p = 0; p < n_spatial; ++p)
        if (!seen.count(p)) s.active.push_back(p);
    return s;
}

IntegralSet freeze_core(const IntegralSet &ints, const ActiveSpaceSpec &spec) {
    const int n = ints.n_spatial;
    std::vector<int> owner(n, 0);
    for (int i : spec.frozen) {
        if (i < 0 || i >= n || owner[i]) throw ValidationError("active space: bad frozen index");
        owner[i] = 1;
    }
    for (int i : spec.removed) {
        if (i < 0 || i >= n || owner[i]) throw ValidationError("active space: bad removed index");
        owner[i] = 2;
    }
    for (int i : spec.active) {
        if (i < 0 || i >= n || owner[i]) throw ValidationError("active space: orbital both active and frozen/removed");
        owner[i] = 3;
    }
    if (std::count(owner.begin(), owner.end(), 0)) throw ValidationError("active space does not cover all orbitals");
    if (2 * int(spec.frozen.size()) > ints.n_electrons) throw ValidationError("active space: too many frozen orbitals");

    const int m = static_cast<int>(spec.active.size());
    IntegralSet out(m, ints.n_electrons - 2 * static_cast<int>(spec.frozen.size()));
    out.ms2 = ints.ms2;
    out.meta = ints.meta;
    double ec = ints.e_core;
    for (int i : spec.frozen) {
        ec += 2 * ints.H(i, i);
        for (int j : spec.frozen) ec += 2 * ints.G(i, i, j, j) - ints.G(i, j, j, i);
    }
    out.e_core = ec;
    for (int a = 0; a < m; ++a) {
        const int p = spec.active[a];
        out.orbsym[a] = ints.orbsym[p];
        for (int b = 0; b < m; ++b) {
            const int q = spec.active[b];
            double v = ints.H(p, q);
            for (int i : spec.frozen) v += 2 * ints.G(p, q, i, i) - ints.G(p, i, i, q);
            out.H(a, b) = v;
            for (int c = 0; c < m; ++c)
                for (int d = 0; d < m; ++d) out.G(a, b, c, d) = ints.G(p, q, spec.active[c], spec.active[d]);
        }
    }
    return out;
}

double hf_energy(const IntegralSet &ints) {
    const int nocc = ints.n_electrons / 2;
    double e = ints.e_core;
    for (int i = 0; i < nocc; ++i) {
        e += 2 * ints.H(i, i);
        for (int j = 0; j < nocc; ++j) e += 2 * ints.G(i, i, j, j) - ints.G(i, j, j, i);
    }
    return e;
}

FermionOperator build_fermionic(const IntegralSet &ints) {
    const int m = ints.n_spatial;
    FermionOperator op;
    op.n_modes = 2 * m;
    op.constant = ints.e_core;
    for (int sigma = 0; sigma < 2; ++sigma) {
        const int off = sigma * m;
        for (int p = 0; p < m; ++p)
            for (int q = 0; q < m; ++q) {
                double v = ints.H(p, q);
                if (std::abs(v) < 1e-14) continue;
                op.terms.push_back({v, {{p + off, true}, {q + off, false}}});
            }
    }
    for (int sigma = 0; sigma < 2; ++sigma)
        for (int tau = 0; tau < 2; ++tau)
            for (int p = 0; p < m; ++p)
                for (int q = 0; q < m; ++q)
                    for (int r = 0; r < m; ++r)
                        for (int s = 0; s < m; ++s) {
                            double v = ints.G(p, q, r, s);
                            if (std::abs(v) < 1e-14) continue;
                            if (sigma == tau && (p == r || q == s)) continue;
                            op.terms.push_back({0.5 * v,
                                                {{p + sigma * m, true},
                                                 {r + tau * m, true},
                                                 {s + tau * m, false},
                                                 {q + sigma * m, false}}});
                        }
    return op;
}

namespace {

using Accum = std::unordered_map<PauliString, cplx, PauliStringHash>;

// JW image of a single ladder operator as two weighted strings.
std::array<std::pair<PauliString, cplx>, 2> jw_ladder(int n, int mode, bool creation) {
    uint64_t zlow = (uint64_t{1} << mode) - 1;
    uint64_t bit = uint64_t{1} << mode;
    PauliString xs(n, bit, zlow);
    PauliString ys(n, bit, zlow | bit);
    // Y = i X Z, but the symplectic form already carries the i^{|x&z|} phase, so ys stands for Y_j Z_{<j}.
    return {{{xs, 0.5}, {ys, creation ? cplx(0, -0.5) : cplx(0, 0.5)}}};
}

void accumulate_term(const FermionTerm &t, int n, Accum &acc) {
    std::vector<std::pair<PauliString, cplx>> cur{{PauliString(n), cplx(t.coeff)}};
    for (auto [mode, cre] : t.ops) {
        if (mode < 0 || mode >= n) throw SizeError("fermion mode out of range");
        auto lad = jw_ladder(n, mode, cre);
        std::vector<std::pair<PauliString, cplx>> next;
        next.reserve(cur.size() * 2);
        for (auto &[p, c] : cur)
            for (auto &[q, d] : lad) {
                auto prod = pauli_product(p, q);
                next.emplace_back(prod.result, c * d * i_pow(prod.phase));
            }
        cur = std::move(next);
    }
    for (auto &[p, c] : cur) acc[p] += c;
}

}  // namespace

ComplexPauliMap jw_complex(const FermionOperator &op) {
    const int n = op.n_modes;
    Accum acc;
    if (op.constant != 0) acc[PauliString(n)] += op.constant;
    for (auto &t : op.terms) accumulate_term(t, n, acc);
    ComplexPauliMap out;
    for (auto &[p, c] : acc)
        if (std::abs(c) > 1e-14) out.emplace_back(p, c);
    std::sort(out.begin(), out.end(), [](auto &a, auto &b) { return a.first < b.first; });
    return out;
}

PauliSum jw_transform(const FermionOperator &op) {
    auto cm = jw_complex(op);
    double scale = 1.0;
    for (auto &[p, c] : cm) scale = std::max(scale, std::abs(c));
    PauliSum out(op.n_modes);
    for (auto &[p, c] : cm) {
        if (std::abs(c.imag()) > 1e-10 * scale)
            throw ConsistencyError("jw_transform: residual imaginary coefficient on " + p.str());
        out.add(p, c.real());
    }
    out.prune(1e-12);
    return out;
}

uint64_t QubitHamiltonian::hf_bits() const {
    uint64_t b = 0;
    for (int i = 0; i < n_alpha; ++i) b |= uint64_t{1} << alpha_qubit(i);
    for (int i = 0; i < n_beta; ++i) b |= uint64_t{1} << beta_qubit(i);
    return b;
}

QubitHamiltonian build_qubit_hamiltonian(const IntegralSet &active) {
    if (active.n_electrons % 2) throw ValidationError("only closed-shell references are supported");
    QubitHamiltonian q;
    q.h = jw_transform(build_fermionic(active));
    q.n_spatial = active.n_spatial;
    q.n_alpha = q.n_beta = active.n_electrons / 2;
    q.orbsym = active.orbsym;
    if (active.meta) {
        q.irrep_collapse_mask = active.meta->irrep_collapse_mask;
        q.molecule = active.meta->molecule;
    }
    return q;
}

std::vector<uint64_t> sector_states(const Sector &s) {
    const int m = s.n_spatial;
    std::vector<uint64_t> blocks_a, blocks_b;
    for (uint64_t v = 0; v < (uint64_t{1} << m); ++v) {
        if (std::popcount(v) == s.n_alpha) blocks_a.push_back(v);
        if (std::popcount(v) == s.n_beta) blocks_b.push_back(v);
    }
    std::vector<uint64_t> out;
    out.reserve(blocks_a.size() * blocks_b.size());
    for (auto b : blocks_b)
        for (auto a : blocks_a) out.push_back(a | (b << m));
    std::sort(out.begin(), out.end());
    return out;
}

Eigen::MatrixXcd dense_matrix(const PauliString &p) {
    if (p.n > 12) throw ResourceError("dense_matrix: too many qubits");
    const size_t dim = size_t{1} << p.n;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    const cplx ph = i_pow(std::popcount(p.x & p.z));
    for (size_t b = 0; b < dim; ++b) m(b ^ p.x, b) = (std::popcount(b & p.z) & 1) ? -ph : ph;
    return m;
}

Eigen::MatrixXcd dense_matrix(const PauliSum &h) {
    if (h.n_qubits() > 12) throw ResourceError("dense_matrix: too many qubits");
    const size_t dim = size_t{1} << h.n_qubits();
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(dim, dim) * h.identity_offset;
    for (auto &[p, c] : h.terms()) {
        const cplx ph = c * i_pow(std::popcount(p.x & p.z));
        for (size_t b = 0; b < dim; ++b) m(b ^ p.x, b) += (std::popcount(b & p.z) & 1) ? -ph : ph;
    }
    return m;
}

namespace {

GroundState lanczos_ground(const PauliSum &h) {
    const int n = h.n_qubits();
    const size_t dim = size_t{1} << n;
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> nd;
    Eigen::VectorXcd x(dim);
    for (size_t i = 0; i < dim; ++i) x[i] = nd(rng);
    x.normalize();
    const int kmax = static_cast<int>(std::min<size_t>(dim, 160));
    Eigen::VectorXcd w(dim);
    double best = 0;
    for (int restart = 0; restart < 50; ++restart) {
        std::vector<Eigen::VectorXcd> V;
        std::vector<double> alpha, beta;
        V.push_back(x);
        for (int k = 0; k < kmax; ++k) {
            kernels::apply_pauli_sum(h, V[k].data(), w.data(), n);
            double a = V[k].dot(w).real();
            alpha.push_back(a);
            for (auto &v : V) w -= v * v.dot(w);  // full reorthogonalisation
            for (auto &v : V) w -= v * v.dot(w);
            double b = w.norm();
            if (k + 1 == kmax || b < 1e-12) break;
            beta.push_back(b);
            V.push_back(w / b);
        }
        const int k = static_cast<int>(alpha.size());
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
        for (int i = 0; i < k; ++i) T(i, i) = alpha[i];
        for (int i = 0; i + 1 < k; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        best = es.eigenvalues()[0];
        Eigen::VectorXd y = es.eigenvectors().col(0);
        x.setZero();
        for (int i = 0; i < k; ++i) x += y[i] * V[i];
        x.normalize();
        kernels::apply_pauli_sum(h, x.data(), w.data(), n);
        double lam = x.dot(w).real();
        double res = (w - lam * x).norm();
        best = lam;
        if (res < 1e-9) break;
    }
    return {best, x};
}

}  // namespace

GroundState exact_ground(const PauliSum &h, const std::optional<Sector> &sector) {
    const int n = h.n_qubits();
    if (n > 16) throw ResourceError("exact_ground: more than 16 qubits");
    const size_t dim = size_t{1} << n;
    if (!sector) {
        if (n <= 10) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense_matrix(h));
            return {es.eigenvalues()[0], es.eigenvectors().col(0)};
        }
        return lanczos_ground(h);
    }
    if (2 * sector->n_spatial != n) throw SizeError("exact_ground: sector does not match qubit count");
    auto states = sector_states(*sector);
    std::vector<int> index(dim, -1);
    for (size_t i = 0; i < states.size(); ++i) index[states[i]] = static_cast<int>(i);
    const size_t d = states.size();
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(d, d) * h.identity_offset;
    for (auto &[p, c] : h.terms()) {
        const cplx ph = c * i_pow(std::popcount(p.x & p.z));
        for (size_t col = 0; col < d; ++col) {
            uint64_t b = states[col];
            int row = index[b ^ p.x];
            if (row < 0) continue;
            m(row, col) += (std::popcount(b & p.z) & 1) ? -ph : ph;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    GroundState g{es.eigenvalues()[0], Eigen::VectorXcd::Zero(dim)};
    for (size_t i = 0; i < d; ++i) g.state[states[i]] = es.eigenvectors()(i, 0);
    return g;
}

GroundState exact_ground(const QubitHamiltonian &h, bool restrict_sector) {
    if (!restrict_sector) return exact_ground(h.h, std::nullopt);
    return exact_ground(h.h, Sector{h.n_spatial, h.n_alpha, h.n_beta});
}

}  // namespace vqeforge
