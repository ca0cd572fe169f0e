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

#include "vqeforge/simulator.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <thread>

#include "vqeforge/kernels.h"

namespace vqeforge {

uint64_t derive_seed(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

StateVector::StateVector(int n_qubits, uint64_t basis_state) : n_(n_qubits) {
    if (n_qubits < 1 || n_qubits > 16) throw SizeError("statevector supports 1..16 qubits");
    amp_.assign(size_t{1} << n_qubits, 0.0);
    if (basis_state >= amp_.size()) throw SizeError("basis state out of range");
    amp_[basis_state] = 1.0;
}

StateVector StateVector::from_amplitudes(const Eigen::VectorXcd &v) {
    int n = std::countr_zero(static_cast<uint64_t>(v.size()));
    if ((Eigen::Index{1} << n) != v.size()) throw SizeError("amplitude vector length is not a power of two");
    StateVector s(n);
    for (Eigen::Index i = 0; i < v.size(); ++i) s.amp_[i] = v[i];
    return s;
}

Eigen::VectorXcd StateVector::to_eigen() const {
    Eigen::VectorXcd v(amp_.size());
    for (size_t i = 0; i < amp_.size(); ++i) v[i] = amp_[i];
    return v;
}

void StateVector::apply_1q(int q, const Mat2 &m) { kernels::apply_1q(amp_.data(), n_, q, m.data()); }
void StateVector::apply_cz(int a, int b) { kernels::apply_cz(amp_.data(), n_, a, b); }

void StateVector::apply_cnot(int c, int t) {
    const Mat2 &h = clifford::matrix(clifford::by_name("H"));
    apply_1q(t, h);
    apply_cz(c, t);
    apply_1q(t, h);
}

void StateVector::apply_pauli(const PauliString &p) {
    if (p.n != n_) throw SizeError("pauli width differs from state");
    kernels::apply_pauli(amp_.data(), n_, p.x, p.z);
}

Mat2 gate_matrix(const Gate &g, double angle) {
    const double c = std::cos(angle / 2), s = std::sin(angle / 2);
    switch (g.kind) {
        case GateKind::C1: return clifford::matrix(g.clifford);
        case GateKind::RX: return {c, cplx(0, -s), cplx(0, -s), c};
        case GateKind::RY: return {c, -s, s, c};
        case GateKind::RZ: return {std::polar(1.0, -angle / 2), 0, 0, std::polar(1.0, angle / 2)};
        default: throw ExecutionError("gate_matrix: not a single-qubit gate");
    }
}

void StateVector::apply_gate(const Gate &g, double angle) {
    if (g.q0 < 0 || g.q0 >= n_ || (g.two_qubit() && (g.q1 < 0 || g.q1 >= n_)))
        throw ExecutionError("gate qubit out of range: " + g.str());
    switch (g.kind) {
        case GateKind::CZ: apply_cz(g.q0, g.q1); break;
        case GateKind::CNOT: apply_cnot(g.q0, g.q1); break;
        default: apply_1q(g.q0, gate_matrix(g, angle));
    }
}

void StateVector::rotate_to_basis(const PauliString &basis) {
    if (basis.n != n_) throw SizeError("basis width differs from state");
    static const int h = clifford::by_name("H");
    static const int hsdg = clifford::compose(h, clifford::by_name("SDG"));
    for (int q = 0; q < n_; ++q) {
        char l = basis.letter(q);
        if (l == 'X') apply_1q(q, clifford::matrix(h));
        if (l == 'Y') apply_1q(q, clifford::matrix(hsdg));
    }
}

double StateVector::norm() const {
    double s = 0;
    for (auto &a : amp_) s += std::norm(a);
    return std::sqrt(s);
}

double StateVector::expectation(const PauliString &p) const {
    if (p.n != n_) throw SizeError("pauli width differs from state");
    return kernels::pauli_expectation(amp_.data(), n_, p.x, p.z);
}

double StateVector::expectation(const PauliSum &h) const {
    if (h.n_qubits() != n_) throw SizeError("observable width differs from state");
    double e = h.identity_offset;
    for (auto &[p, c] : h.terms()) e += c * expectation(p);
    return e;
}

std::vector<double> StateVector::probabilities() const {
    std::vector<double> p(amp_.size());
    for (size_t i = 0; i < amp_.size(); ++i) p[i] = std::norm(amp_[i]);
    return p;
}

bool NoiseModel::readout_noise() const {
    return std::any_of(readout.begin(), readout.end(), [](auto &r) { return r.eps > 0 || r.gamma > 0; });
}

ReadoutError NoiseModel::readout_for(int q) const {
    return q < static_cast<int>(readout.size()) ? readout[q] : ReadoutError{};
}

void NoiseModel::validate() const {
    auto unit = [](double v) { return std::isfinite(v) && v >= 0 && v <= 1; };
    if (!unit(p1) || !unit(p2)) throw ConfigError("depolarizing rates must lie in [0,1]");
    if (p_global && !unit(*p_global)) throw ConfigError("p_global must lie in [0,1]");
    for (auto &r : readout)
        if (!unit(r.eps) || !unit(r.gamma)) throw ConfigError("readout rates must lie in [0,1]");
}

NoiseModel NoiseModel::uniform(double p1, double p2, double eps, double gamma, int n_qubits) {
    NoiseModel m;
    m.p1 = p1;
    m.p2 = p2;
    m.readout.assign(n_qubits, {eps, gamma});
    m.validate();
    return m;
}

nlohmann::json NoiseModel::to_json() const {
    nlohmann::json ro = nlohmann::json::array();
    for (auto &r : readout) ro.push_back({{"eps", r.eps}, {"gamma", r.gamma}});
    nlohmann::json j{{"p1", p1}, {"p2", p2}, {"readout", ro}};
    j["p_global"] = p_global ? nlohmann::json(*p_global) : nlohmann::json(nullptr);
    return j;
}

NoiseModel NoiseModel::from_json(const nlohmann::json &j, int n_qubits) {
    NoiseModel m;
    m.p1 = j.value("p1", 0.0);
    m.p2 = j.value("p2", 0.0);
    if (j.contains("p_global") && !j.at("p_global").is_null()) m.p_global = j.at("p_global").get<double>();
    if (j.contains("readout") && j.at("readout").is_array()) {
        for (auto &r : j.at("readout")) m.readout.push_back({r.value("eps", 0.0), r.value("gamma", 0.0)});
        if (static_cast<int>(m.readout.size()) != n_qubits)
            throw ConfigError("readout list length differs from the qubit count");
    } else {
        m.readout.assign(n_qubits, {j.value("eps", 0.0), j.value("gamma", 0.0)});
    }
    m.validate();
    return m;
}

StateVector run_from(const CompiledCircuit &c, const std::vector<double> &angles, StateVector s) {
    if (angles.size() != c.gates.size()) throw ExecutionError("angle list does not match the gate list");
    if (s.n_qubits() != c.n_qubits) throw ExecutionError("state width differs from circuit");
    for (size_t k = 0; k < c.gates.size(); ++k) s.apply_gate(c.gates[k], angles[k]);
    return s;
}

StateVector run(const CompiledCircuit &c, const std::vector<double> &angles) {
    return run_from(c, angles, StateVector(c.n_qubits));
}

namespace {

// uniform non-identity Pauli on the gate support
void insert_error(StateVector &s, const Gate &g, std::mt19937_64 &rng) {
    PauliString p(s.n_qubits());
    if (g.two_qubit()) {
        int k = 1 + static_cast<int>(rng() % 15);
        p.set(g.q0, "IXYZ"[k % 4]);
        p.set(g.q1, "IXYZ"[k / 4]);
    } else {
        p.set(g.q0, "XYZ"[rng() % 3]);
    }
    s.apply_pauli(p);
}

}  // namespace

bool run_trajectory(const CompiledCircuit &c, const std::vector<double> &angles, const NoiseModel &noise,
                    std::mt19937_64 &rng, StateVector &out) {
    if (angles.size() != c.gates.size()) throw ExecutionError("angle list does not match the gate list");
    out = StateVector(c.n_qubits);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    bool any = false;
    for (size_t k = 0; k < c.gates.size(); ++k) {
        const Gate &g = c.gates[k];
        out.apply_gate(g, angles[k]);
        double p = g.two_qubit() ? noise.p2 : noise.p1;
        if (p > 0 && u(rng) < p) {
            insert_error(out, g, rng);
            any = true;
        }
    }
    return any;
}

double Ensemble::expectation(const PauliString &p) const {
    if (p.is_identity()) return 1.0;
    double e = 0;
    for (size_t i = 0; i < states.size(); ++i) e += weights[i] * states[i].expectation(p);
    return p_global * e;
}

double Ensemble::expectation(const PauliSum &h) const {
    double e = 0;
    for (size_t i = 0; i < states.size(); ++i) e += weights[i] * (states[i].expectation(h) - h.identity_offset);
    return h.identity_offset + p_global * e;
}

std::vector<double> Ensemble::distribution(const PauliString &basis) const {
    const size_t dim = size_t{1} << n_qubits;
    std::vector<double> d(dim, 0.0);
    for (size_t i = 0; i < states.size(); ++i) {
        StateVector s = states[i];
        s.rotate_to_basis(basis);
        auto pr = s.probabilities();
        for (size_t b = 0; b < dim; ++b) d[b] += weights[i] * pr[b];
    }
    if (p_global < 1.0)
        for (auto &v : d) v = p_global * v + (1 - p_global) / static_cast<double>(dim);
    return d;
}

namespace {

// rho as a 2n-qubit vector (column-major): qubit k < n indexes rows, n + k columns.
// U rho U^dagger applies U to the row qubits and conj(U) to the column qubits.
Eigen::MatrixXcd density_evolve(const CompiledCircuit &c, const std::vector<double> &angles,
                                const NoiseModel &noise) {
    const int n = c.n_qubits;
    if (n > 8) throw ResourceError("density-matrix simulation limited to 8 qubits");
    if (angles.size() != c.gates.size()) throw ExecutionError("angle list does not match the gate list");
    StateVector v(2 * n, 0);
    for (size_t k = 0; k < c.gates.size(); ++k) {
        const Gate &g = c.gates[k];
        if (g.q0 < 0 || g.q0 >= n || (g.two_qubit() && (g.q1 < 0 || g.q1 >= n)))
            throw ExecutionError("gate qubit out of range: " + g.str());
        switch (g.kind) {
            case GateKind::CZ:
                v.apply_cz(g.q0, g.q1);
                v.apply_cz(g.q0 + n, g.q1 + n);
                break;
            case GateKind::CNOT:
                v.apply_cnot(g.q0, g.q1);
                v.apply_cnot(g.q0 + n, g.q1 + n);
                break;
            default: {
                Mat2 m = gate_matrix(g, angles[k]);
                v.apply_1q(g.q0, m);
                for (auto &e : m) e = std::conj(e);
                v.apply_1q(g.q0 + n, m);
            }
        }
        const double p = g.two_qubit() ? noise.p2 : noise.p1;
        if (p <= 0) continue;
        const int count = g.two_qubit() ? 15 : 3;
        std::vector<cplx> mix(v.dim(), 0.0);
        for (int kk = 1; kk <= count; ++kk) {
            PauliString ps(2 * n);
            ps.set(g.q0, "IXYZ"[kk % 4]);
            ps.set(g.q0 + n, "IXYZ"[kk % 4]);
            if (g.two_qubit()) {
                ps.set(g.q1, "IXYZ"[kk / 4]);
                ps.set(g.q1 + n, "IXYZ"[kk / 4]);
            }
            StateVector w = v;
            w.apply_pauli(ps);
            // the column factor should be conj(P) = (-1)^{#Y} P; ps carries each Y twice
            const double sg = std::popcount(ps.x & ps.z) / 2 % 2 ? -1.0 : 1.0;
            const auto &a = w.amplitudes();
            for (size_t i = 0; i < mix.size(); ++i) mix[i] += sg * a[i];
        }
        auto &amp = v.amplitudes();
        for (size_t i = 0; i < amp.size(); ++i) amp[i] = (1 - p) * amp[i] + (p / count) * mix[i];
    }
    const Eigen::Index dim = Eigen::Index{1} << n;
    Eigen::MatrixXcd rho(dim, dim);
    for (Eigen::Index col = 0; col < dim; ++col)
        for (Eigen::Index row = 0; row < dim; ++row) rho(row, col) = v.amplitudes()[row + dim * col];
    return rho;
}

}  // namespace

Ensemble simulate(const CompiledCircuit &c, const std::vector<double> &angles, const NoiseModel &noise,
                  const SimOptions &opt) {
    Ensemble e;
    e.n_qubits = c.n_qubits;
    e.p_global = noise.p_global.value_or(1.0);
    StateVector ideal = run(c, angles);
    if (!noise.gate_noise()) {
        e.states.push_back(std::move(ideal));
        e.weights.push_back(1.0);
        return e;
    }
    if (opt.method == SimMethod::Density || (opt.method == SimMethod::Auto && c.n_qubits <= 6)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(density_evolve(c, angles, noise));
        for (Eigen::Index k = es.eigenvalues().size() - 1; k >= 0; --k) {
            double w = es.eigenvalues()(k);
            if (w < 1e-13) continue;
            e.states.push_back(StateVector::from_amplitudes(es.eigenvectors().col(k)));
            e.weights.push_back(w);
        }
        return e;
    }
    const int T = std::max(1, opt.trajectories);
    std::vector<StateVector> traj(T);
    std::vector<char> hit(T, 0);
    auto work = [&](int begin, int end) {
        for (int t = begin; t < end; ++t) {
            std::mt19937_64 rng(derive_seed(opt.seed, t));
            hit[t] = run_trajectory(c, angles, noise, rng, traj[t]);
            if (!hit[t]) traj[t] = StateVector();  // clean runs reuse the ideal state
        }
    };
    const int threads = std::clamp(opt.threads, 1, T);
    if (threads == 1) {
        work(0, T);
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < threads; ++k) pool.emplace_back(work, k * T / threads, (k + 1) * T / threads);
        for (auto &th : pool) th.join();
    }
    int clean = 0;
    for (int t = 0; t < T; ++t) {
        if (!hit[t]) {
            ++clean;
            continue;
        }
        e.states.push_back(std::move(traj[t]));
        e.weights.push_back(1.0 / T);
    }
    if (clean > 0) {
        e.states.push_back(std::move(ideal));
        e.weights.push_back(static_cast<double>(clean) / T);
    }
    return e;
}

double expectation(const StateVector &s, const PauliSum &o, std::optional<double> p_global) {
    double e = s.expectation(o);
    if (!p_global) return e;
    return o.identity_offset + *p_global * (e - o.identity_offset);
}

std::map<uint64_t, int> ShotRecord::counts() const {
    std::map<uint64_t, int> m;
    for (auto o : outcomes) ++m[o];
    return m;
}

nlohmann::json ShotRecord::to_json() const {
    nlohmann::json c = nlohmann::json::object();
    for (auto [b, n] : counts()) {
        std::string s(basis.n, '0');
        for (int q = 0; q < basis.n; ++q)
            if (b >> q & 1) s[q] = '1';
        c[s] = n;
    }
    return {{"basis", basis.str()}, {"shots", outcomes.size()}, {"counts", c}, {"seed", seed}};
}

ShotRecord sample_distribution(const std::vector<double> &dist, const PauliString &basis, int shots,
                               const NoiseModel &noise, uint64_t seed) {
    if (shots < 1) throw std::invalid_argument("shots must be positive");
    if (dist.size() != (size_t{1} << basis.n)) throw SizeError("distribution width differs from basis");
    ShotRecord r{basis, {}, seed};
    r.outcomes.resize(shots);
    std::mt19937_64 rng(seed);
    std::discrete_distribution<uint64_t> pick(dist.begin(), dist.end());
    for (auto &o : r.outcomes) o = pick(rng);
    if (noise.readout_noise()) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (auto &o : r.outcomes)
            for (int q = 0; q < basis.n; ++q) {
                auto ro = noise.readout_for(q);
                bool one = o >> q & 1;
                double flip = one ? ro.gamma : ro.eps;
                if (flip > 0 && u(rng) < flip) o ^= uint64_t{1} << q;
            }
    }
    return r;
}

ShotRecord sample(const StateVector &s, const PauliString &basis, int shots, const NoiseModel &noise, uint64_t seed) {
    StateVector r = s;
    r.rotate_to_basis(basis);
    return sample_distribution(r.probabilities(), basis, shots, noise, seed);
}

std::vector<double> apply_readout(const std::vector<double> &dist, const NoiseModel &noise) {
    std::vector<double> d = dist;
    const int n = std::countr_zero(d.size());
    for (int q = 0; q < n; ++q) {
        auto ro = noise.readout_for(q);
        const size_t bit = size_t{1} << q;
        for (size_t b = 0; b < d.size(); ++b) {
            if (b & bit) continue;
            double p0 = d[b], p1 = d[b | bit];
            d[b] = (1 - ro.eps) * p0 + ro.gamma * p1;
            d[b | bit] = ro.eps * p0 + (1 - ro.gamma) * p1;
        }
    }
    return d;
}

StateVector prepare_initial(const InitialState &init, const QubitHamiltonian &h) {
    return StateVector::from_amplitudes(initial_amplitudes(init, h));
}

double optimize_beta(const QubitHamiltonian &h) {
    StateVector hf(h.n_qubits(), h.hf_bits()), sw(h.n_qubits(), swap_determinant(h));
    std::vector<cplx> hsw(sw.dim());
    kernels::apply_pauli_sum(h.h, sw.amplitudes().data(), hsw.data(), h.n_qubits());
    const double e_hf = hf.expectation(h.h), e_sw = sw.expectation(h.h);
    const double v = hsw[h.hf_bits()].real();
    auto energy = [&](double b) { return (e_hf - 2 * b * v + b * b * e_sw) / (1 + b * b); };
    double best = 0, best_e = energy(0);
    for (int k = 0; k <= 4000; ++k) {
        double b = -5 + 10.0 * k / 4000;
        if (energy(b) < best_e) {
            best_e = energy(b);
            best = b;
        }
    }
    double a = best - 10.0 / 4000, c = best + 10.0 / 4000;
    const double g = (std::sqrt(5.0) - 1) / 2;
    for (int it = 0; it < 200 && c - a > 1e-13; ++it) {
        double x1 = c - g * (c - a), x2 = a + g * (c - a);
        if (energy(x1) < energy(x2))
            c = x2;
        else
            a = x1;
    }
    double b = 0.5 * (a + c);
    return energy(b) <= best_e ? b : best;
}

namespace {

Eigen::MatrixXcd apply_columns(const Eigen::MatrixXcd &m, const Gate &g, double angle, int n) {
    Eigen::MatrixXcd out(m.rows(), m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        Eigen::VectorXcd col = m.col(c);
        StateVector s = StateVector::from_amplitudes(col);
        if (n != s.n_qubits()) throw SizeError("density width mismatch");
        s.apply_gate(g, angle);
        out.col(c) = s.to_eigen();
    }
    return out;
}

Eigen::MatrixXcd conj_pauli(const Eigen::MatrixXcd &rho, const PauliString &p) {
    Eigen::MatrixXcd pm = dense_matrix(p);
    return pm * rho * pm.adjoint();
}

}  // namespace

SimMethod parse_sim_method(const std::string &s) {
    if (s == "trajectories") return SimMethod::Trajectories;
    if (s == "density") return SimMethod::Density;
    if (s == "auto") return SimMethod::Auto;
    throw ConfigError("unknown simulation method '" + s + "'");
}

std::string to_string(SimMethod m) {
    switch (m) {
        case SimMethod::Trajectories: return "trajectories";
        case SimMethod::Density: return "density";
        default: return "auto";
    }
}

Eigen::MatrixXcd density_matrix_run(const CompiledCircuit &c, const std::vector<double> &angles,
                                    const NoiseModel &noise) {
    const int n = c.n_qubits;
    if (n > 6) throw ResourceError("density-matrix oracle limited to 6 qubits");
    const Eigen::Index dim = Eigen::Index{1} << n;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
    rho(0, 0) = 1;
    for (size_t k = 0; k < c.gates.size(); ++k) {
        const Gate &g = c.gates[k];
        Eigen::MatrixXcd a = apply_columns(rho, g, angles[k], n);
        rho = apply_columns(a.adjoint(), g, angles[k], n);
        double p = g.two_qubit() ? noise.p2 : noise.p1;
        if (p <= 0) continue;
        Eigen::MatrixXcd mix = Eigen::MatrixXcd::Zero(dim, dim);
        int count = 0;
        for (int kk = 1; kk < (g.two_qubit() ? 16 : 4); ++kk) {
            PauliString ps(n);
            ps.set(g.q0, "IXYZ"[kk % 4]);
            if (g.two_qubit()) ps.set(g.q1, "IXYZ"[kk / 4]);
            mix += conj_pauli(rho, ps);
            ++count;
        }
        rho = (1 - p) * rho + (p / count) * mix;
    }
    if (noise.p_global) {
        double pg = *noise.p_global;
        rho = pg * rho + (1 - pg) * Eigen::MatrixXcd::Identity(dim, dim) / static_cast<double>(dim);
    }
    return rho;
}

}  // namespace vqeforge
