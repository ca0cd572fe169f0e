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

#include "vqeforge/analysis.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

namespace vqeforge {

// ---- global depolarizing fit ----

nlohmann::json NoiseFit::to_json() const {
    nlohmann::json j;
    j["p"] = p;
    j["r2"] = r2;
    j["free_slope"] = free_slope;
    j["free_intercept"] = free_intercept;
    j["free_r2"] = free_r2;
    nlohmann::json pts = nlohmann::json::array();
    for (auto [x, y] : points) pts.push_back({x, y});
    j["points"] = pts;
    return j;
}

NoiseFit depolarizing_fit(const std::vector<std::pair<double, double>> &points) {
    if (points.size() < 3) throw AnalysisError("depolarizing fit needs at least 3 points");
    NoiseFit f;
    f.points = points;
    const double n = static_cast<double>(points.size());
    double sxx = 0, sxy = 0, sx = 0, sy = 0;
    for (auto [x, y] : points) {
        if (!std::isfinite(x) || !std::isfinite(y)) throw AnalysisError("non-finite energy in fit input");
        sxx += x * x;
        sxy += x * y;
        sx += x;
        sy += y;
    }
    if (sxx == 0) throw AnalysisError("all ideal energies are zero");
    f.p = sxy / sxx;
    const double my = sy / n, mx = sx / n;
    double ss_tot = 0, ss_res = 0;
    for (auto [x, y] : points) {
        ss_tot += (y - my) * (y - my);
        ss_res += (y - f.p * x) * (y - f.p * x);
    }
    f.r2 = ss_tot > 0 ? 1 - ss_res / ss_tot : 1.0;
    const double cxx = sxx - n * mx * mx, cxy = sxy - n * mx * my;
    if (cxx > 0) {
        f.free_slope = cxy / cxx;
        f.free_intercept = my - f.free_slope * mx;
        double res = 0;
        for (auto [x, y] : points) {
            double d = y - f.free_slope * x - f.free_intercept;
            res += d * d;
        }
        f.free_r2 = ss_tot > 0 ? 1 - res / ss_tot : 1.0;
    } else {
        f.free_slope = f.p;
        f.free_intercept = 0;
        f.free_r2 = f.r2;
    }
    return f;
}

// ---- V V^dagger benchmark ----

nlohmann::json BenchmarkResult::to_json() const {
    nlohmann::json j;
    j["n_qubits"] = n_qubits;
    j["m"] = m;
    j["survival"] = survival;
    j["survival_sd"] = survival_sd;
    j["A"] = A;
    j["p"] = p;
    j["B"] = B;
    j["A_sd"] = A_sd;
    j["p_sd"] = p_sd;
    j["B_sd"] = B_sd;
    j["residual"] = residual;
    j["degenerate"] = degenerate;
    j["fidelity"] = fidelity;
    j["f_prod"] = f_prod;
    return j;
}

CompiledCircuit without_prep(const CompiledCircuit &c) {
    CompiledCircuit v = c;
    v.gates.clear();
    for (auto &g : c.gates)
        if (!g.prep) v.gates.push_back(g);
    return v;
}

CompiledCircuit vvdag_pair(const CompiledCircuit &v, const std::vector<double> &theta) {
    CompiledCircuit lit;
    lit.n_qubits = v.n_qubits;
    lit.layout = v.layout;
    const auto angles = v.angles(theta);
    for (size_t i = 0; i < v.gates.size(); ++i) {
        Gate g = v.gates[i];
        if (g.rotation()) {
            g.param = -1;
            g.coef = 1;
            g.angle = angles[i];
        }
        lit.gates.push_back(g);
    }
    CompiledCircuit inv = lit.dagger();
    lit.gates.insert(lit.gates.end(), inv.gates.begin(), inv.gates.end());
    return lit;
}

double product_fidelity(const CompiledCircuit &v, const NoiseModel &noise, bool include_prep) {
    double f = 1;
    for (auto &g : v.gates) {
        if (g.prep && !include_prep) continue;
        f *= 1 - (g.two_qubit() ? noise.p2 : noise.p1);
    }
    return f;
}

BenchmarkResult fit_decay(int n_qubits, const std::vector<int> &m, const std::vector<double> &survival) {
    if (m.size() != survival.size() || m.size() < 3) throw AnalysisError("decay fit needs at least 3 points");
    std::vector<std::pair<int, double>> pts;
    for (size_t i = 0; i < m.size(); ++i) pts.emplace_back(m[i], survival[i]);
    BenchmarkResult r;
    r.n_qubits = n_qubits;
    r.m = m;
    r.survival = survival;
    const double floor = std::ldexp(1.0, -n_qubits);
    double dev = 0;
    for (double s : survival) dev = std::max(dev, std::abs(s - 1));
    if (dev < 1e-9) {
        // survival identically 1: any A + B = 1 with p = 1 fits; report the depolarizing-limit member
        r.A = 1 - floor;
        r.p = 1;
        r.B = floor;
        r.degenerate = true;
        r.fidelity = 1;
        return r;
    }

    // start from a log-linear fit above the floor
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (auto [mm, s] : pts) {
        if (s - floor <= 1e-6) continue;
        double x = 2.0 * mm, y = std::log(s - floor);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
    }
    Eigen::Vector3d th(1 - floor, 0.95, floor);  // A, p, B
    if (cnt >= 2 && sxx * cnt - sx * sx > 0) {
        double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
        double icpt = (sy - slope * sx) / cnt;
        th = Eigen::Vector3d(std::exp(icpt), std::clamp(std::exp(slope), 1e-3, 1.0), floor);
    }
    const size_t n = pts.size();
    auto residuals = [&](const Eigen::Vector3d &t, Eigen::VectorXd &res, Eigen::MatrixXd *jac) {
        res.resize(n);
        if (jac) jac->resize(n, 3);
        for (size_t i = 0; i < n; ++i) {
            double e = 2.0 * pts[i].first;
            double pe = std::pow(t(1), e);
            res(i) = t(0) * pe + t(2) - pts[i].second;
            if (jac) {
                (*jac)(i, 0) = pe;
                (*jac)(i, 1) = e == 0 ? 0.0 : t(0) * e * std::pow(t(1), e - 1);
                (*jac)(i, 2) = 1;
            }
        }
    };
    Eigen::VectorXd res;
    Eigen::MatrixXd J;
    residuals(th, res, &J);
    double cost = res.squaredNorm(), lambda = 1e-3;
    bool converged = false;
    for (int it = 0; it < 500; ++it) {
        Eigen::Matrix3d JtJ = J.transpose() * J;
        Eigen::Vector3d g = J.transpose() * res;
        Eigen::Matrix3d D = JtJ;
        for (int k = 0; k < 3; ++k) D(k, k) += lambda * std::max(JtJ(k, k), 1e-12);
        Eigen::Vector3d step = D.ldlt().solve(-g);
        Eigen::Vector3d trial = th + step;
        trial(1) = std::clamp(trial(1), 1e-6, 1.5);
        Eigen::VectorXd r2;
        residuals(trial, r2, nullptr);
        double c2 = r2.squaredNorm();
        if (c2 <= cost) {
            const bool small = std::abs(cost - c2) <= 1e-15 + 1e-12 * cost || step.norm() < 1e-12;
            th = trial;
            cost = c2;
            residuals(th, res, &J);
            lambda = std::max(lambda / 3, 1e-12);
            if (small) {
                converged = true;
                break;
            }
        } else {
            lambda *= 4;
            if (lambda > 1e12) {
                converged = cost < 1e-20 || step.norm() < 1e-10;
                break;
            }
        }
    }
    if (!converged || !th.allFinite()) throw BenchmarkError("decay fit did not converge", pts);
    r.A = th(0);
    r.p = th(1);
    r.B = th(2);
    r.residual = std::sqrt(cost / n);
    if (n > 3) {
        Eigen::Matrix3d JtJ = J.transpose() * J;
        Eigen::Matrix3d cov = JtJ.completeOrthogonalDecomposition().pseudoInverse() * (cost / (n - 3));
        r.A_sd = std::sqrt(std::max(0.0, cov(0, 0)));
        r.p_sd = std::sqrt(std::max(0.0, cov(1, 1)));
        r.B_sd = std::sqrt(std::max(0.0, cov(2, 2)));
    }
    r.fidelity = r.p;
    return r;
}

BenchmarkResult vvdag_benchmark(const CompiledCircuit &v, const NoiseModel &noise, const BenchmarkOptions &opt) {
    if (opt.repeats < 1) throw ConfigError("repeats must be at least 1");
    if (opt.m.size() < 3) throw ConfigError("at least 3 sequence lengths are needed");
    noise.validate();
    const int n = v.n_qubits;
    PauliString zbasis(n, 0, n == 64 ? ~0ull : (uint64_t{1} << n) - 1);
    std::vector<double> surv, sd;
    std::uniform_real_distribution<double> u(0.0, 2 * std::numbers::pi);
    for (size_t mi = 0; mi < opt.m.size(); ++mi) {
        const int m = opt.m[mi];
        if (m < 0) throw ConfigError("negative sequence length");
        double s1 = 0, s2 = 0;
        for (int r = 0; r < opt.repeats; ++r) {
            std::mt19937_64 rng(derive_seed(opt.seed, mi * 100003 + r));
            CompiledCircuit seq;
            seq.n_qubits = n;
            for (int k = 0; k < m; ++k) {
                std::vector<double> theta(v.n_params);
                for (auto &t : theta) t = u(rng);
                auto pair = vvdag_pair(v, theta);
                seq.gates.insert(seq.gates.end(), pair.gates.begin(), pair.gates.end());
            }
            SimOptions so = opt.sim;
            so.seed = derive_seed(opt.seed, (mi * 100003 + r) ^ 0x5bd1e995u);
            Ensemble ens = simulate(seq, std::vector<double>(seq.gates.size(), 0.0), noise, so);
            auto dist = ens.distribution(zbasis);
            if (opt.readout) dist = apply_readout(dist, noise);
            s1 += dist[0];
            s2 += dist[0] * dist[0];
        }
        const double mean = s1 / opt.repeats;
        surv.push_back(mean);
        double var = opt.repeats > 1 ? std::max(0.0, (s2 - opt.repeats * mean * mean) / (opt.repeats - 1)) : 0.0;
        sd.push_back(std::sqrt(var / opt.repeats));
    }
    BenchmarkResult r = fit_decay(n, opt.m, surv);
    r.survival_sd = sd;
    r.f_prod = product_fidelity(v, noise, true);
    return r;
}

// ---- problem loading and curves ----

Problem load_problem(const std::string &fcidump_path, const ProblemOptions &opt) {
    Problem p;
    p.source = fcidump_path;
    IntegralSet full = load_fcidump(fcidump_path);
    p.meta = full.meta;
    IntegralSet active = full;
    if (full.meta && (!full.meta->frozen.empty() || !full.meta->removed.empty())) {
        auto spec = ActiveSpaceSpec::make(full.n_spatial, full.meta->frozen, full.meta->removed);
        active = freeze_core(full, spec);
    }
    p.h = build_qubit_hamiltonian(active);
    AnsatzOptions ao = opt.ansatz;
    if (opt.multireference) ao.initial = {InitialState::Kind::MultiReference, optimize_beta(p.h)};
    p.ansatz = build_ansatz(p.h, ao);
    p.layout = opt.layout ? *opt.layout : default_layout(p.h);
    p.circuit = compile(p.ansatz, p.h, p.layout);
    return p;
}

nlohmann::json CurvePoint::to_json() const {
    nlohmann::json j;
    j["distance"] = distance;
    j["source"] = source;
    j["ok"] = ok;
    if (!ok) {
        j["error"] = error;
        return j;
    }
    j["e_exact"] = e_exact;
    j["e_initial"] = e_initial;
    j["report"] = report.to_json();
    j["abs_error"] = abs_error;
    j["rel_error"] = rel_error;
    j["iterations"] = iterations;
    return j;
}

std::vector<CurvePoint> pec_driver(const std::vector<CurveInput> &inputs, const ProblemOptions &popt,
                                   const PipelineConfig &cfg, uint64_t seed) {
    std::vector<CurvePoint> out;
    for (size_t i = 0; i < inputs.size(); ++i) {
        CurvePoint pt;
        pt.distance = inputs[i].distance;
        pt.source = inputs[i].path;
        try {
            Problem prob = load_problem(inputs[i].path, popt);
            PipelineConfig c = cfg;
            c.vqe.seed = derive_seed(seed, 3 * i + 1);
            Pipeline pipe(prob.h, prob.ansatz, prob.circuit, c);
            pipe.prepare(derive_seed(seed, 3 * i));
            VqeResult res = pipe.optimize();
            pt.report = pipe.evaluate_final(res.theta, derive_seed(seed, 3 * i + 2));
            pt.iterations = static_cast<int>(res.trace.size()) - 1;
            pt.e_exact = pipe.ground_energy();
            const auto &first = res.trace.front();
            auto raw = first.stages.find("raw");
            pt.e_initial = raw != first.stages.end() ? raw->second : first.energy;
            const double den = pt.e_initial - pt.e_exact;
            auto record = [&](const std::string &k, double e) {
                pt.abs_error[k] = std::abs(e - pt.e_exact);
                if (std::abs(den) > 1e-12) pt.rel_error[k] = (e - pt.e_exact) / den;
            };
            for (auto &[k, v] : pt.report.stages) record(k, v.energy);
            record("numerical", pt.report.numerical);
            pt.ok = true;
        } catch (const std::exception &e) {
            pt.ok = false;
            pt.error = e.what();
        }
        out.push_back(std::move(pt));
    }
    return out;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10f", v);
    return buf;
}

}  // namespace

std::string curve_csv(const std::vector<CurvePoint> &curve) {
    std::ostringstream os;
    const std::vector<std::string> cols = {"raw", "rem", "rem_cf", "sv", "cmx", "numerical"};
    os << "distance,e_exact";
    for (auto &c : cols) os << ",e_" << c;
    for (auto &c : cols) os << ",abs_err_" << c;
    os << ",status\n";
    for (auto &pt : curve) {
        os << fmt(pt.distance);
        if (!pt.ok) {
            os << ",";
            for (size_t k = 0; k < 2 * cols.size(); ++k) os << ",";
            std::string e = pt.error;
            std::replace(e.begin(), e.end(), ',', ';');
            std::replace(e.begin(), e.end(), '\n', ' ');
            os << ",error: " << e << "\n";
            continue;
        }
        os << "," << fmt(pt.e_exact);
        std::map<std::string, std::optional<double>> e;
        for (auto &[k, v] : pt.report.stages) {
            if (k.size() > 3 && k.compare(k.size() - 3, 3, "_sv") == 0)
                e["sv"] = v.energy;
            else
                e[k] = v.energy;
        }
        e["numerical"] = pt.report.numerical;
        for (auto &c : cols) os << "," << (e[c] ? fmt(*e[c]) : "");
        for (auto &c : cols) os << "," << (e[c] ? fmt(std::abs(*e[c] - pt.e_exact)) : "");
        os << ",ok\n";
    }
    return os.str();
}

// ---- error decomposition ----

nlohmann::json ErrorContributions::to_json() const {
    return {{"readout", readout}, {"gate", gate}, {"residual", residual}};
}

ErrorContributions error_decompose(double e_raw, double e_rem, double e_rem_cf, double e_numerical) {
    return {e_rem - e_raw, e_rem_cf - e_rem, e_numerical - e_rem_cf};
}

// ---- resources ----

nlohmann::json resource_report(const Problem &p) {
    auto pool = build_pool(p.h);
    auto compiled = resource_count(p.circuit);
    auto with_prep = resource_count(p.circuit, true);
    auto naive = resource_count(naive_uccsd(pool, p.h.n_qubits()));
    nlohmann::json j;
    j["molecule"] = p.h.molecule;
    j["n_qubits"] = p.h.n_qubits();
    j["hamiltonian_terms"] = p.h.h.size();
    j["pool_size"] = p.ansatz.pool_size;
    j["filtered_size"] = p.ansatz.filtered_size;
    nlohmann::json sel = nlohmann::json::array();
    for (auto &s : p.ansatz.selected) sel.push_back(s.op.label());
    j["selected"] = sel;
    j["n_params"] = p.ansatz.n_params;
    j["provenance"] = p.ansatz.provenance;
    j["compiled"] = {{"cz", compiled.cz}, {"single", compiled.single}, {"depth", compiled.depth}};
    j["compiled_with_prep"] = {{"cz", with_prep.cz}, {"single", with_prep.single}, {"depth", with_prep.depth}};
    j["naive_uccsd"] = {{"cz", naive.cz}, {"single", naive.single}, {"depth", naive.depth}};
    return j;
}

}  // namespace vqeforge
