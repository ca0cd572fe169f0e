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

#include "vqeforge/vqe.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace vqeforge {

GradientResult gradient(const CompiledCircuit &c, const std::vector<double> &theta, int j, const EnergyFn &energy,
                        uint64_t seed) {
    if (j < 0 || j >= c.n_params) throw BindingError("parameter index " + std::to_string(j) + " out of range");
    auto occ = c.occurrences(j);
    if (occ.empty()) throw BindingError("parameter " + std::to_string(j) + " has no gate occurrence");
    const std::vector<double> base = c.angles(theta);
    constexpr double shift = std::numbers::pi / 2;
    GradientResult g;
    for (size_t o = 0; o < occ.size(); ++o) {
        const int gi = occ[o];
        // a shift of pi/2 in theta_j moves this gate angle by coef * pi/2; shift the
        // gate angle itself so the rule stays exact for any coefficient
        std::vector<double> plus = base, minus = base;
        plus[gi] += shift;
        minus[gi] -= shift;
        EnergyEstimate ep = energy(plus, derive_seed(seed, 2 * o));
        EnergyEstimate em = energy(minus, derive_seed(seed, 2 * o + 1));
        const double coef = c.gates[gi].coef;
        g.value += coef * (ep.value - em.value) / 2;
        g.variance += coef * coef * (ep.variance + em.variance) / 4;
        g.shots += ep.shots + em.shots;
    }
    return g;
}

double finite_difference(const CompiledCircuit &c, const std::vector<double> &theta, int j, const EnergyFn &energy,
                         double delta) {
    std::vector<double> tp = theta, tm = theta;
    tp[j] += delta;
    tm[j] -= delta;
    return (energy(c.angles(tp), 0).value - energy(c.angles(tm), 0).value) / (2 * delta);
}

std::vector<int> draw_mask(int n_params, std::mt19937_64 &rng, int size) {
    if (size < 0 || size > n_params) throw ConfigError("mask size out of range");
    std::vector<int> idx(n_params);
    std::iota(idx.begin(), idx.end(), 0);
    const int m = size > 0 ? size : (n_params + 1) / 2;
    // partial Fisher-Yates with explicit draws so the stream is library independent
    for (int k = 0; k < m; ++k) {
        int r = k + static_cast<int>(rng() % static_cast<uint64_t>(n_params - k));
        std::swap(idx[k], idx[r]);
    }
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<double> sgd_step(const std::vector<double> &theta, const std::vector<int> &mask,
                             const std::vector<double> &g, double lr) {
    std::vector<double> out = theta;
    for (int j : mask) out[j] -= lr * g[j];
    return out;
}

nlohmann::json IterationRecord::to_json() const {
    nlohmann::json j;
    j["k"] = k;
    j["mask"] = mask;
    nlohmann::json g = nlohmann::json::object(), gv = nlohmann::json::object();
    for (auto [idx, v] : gradient) g[std::to_string(idx)] = v;
    for (auto [idx, v] : gradient_variance) gv[std::to_string(idx)] = v;
    j["gradient"] = g;
    j["gradient_variance"] = gv;
    j["lr"] = lr;
    j["accepted"] = accepted;
    j["theta"] = theta;
    j["energy"] = energy;
    j["variance"] = variance;
    j["stages"] = stages;
    j["shots"] = shots;
    return j;
}

VqeResult run_vqe(const CompiledCircuit &c, const EnergyFn &energy, const VqeOptions &opt,
                  const std::function<void(const IterationRecord &)> &on_iteration) {
    const int np = c.n_params;
    std::vector<double> theta = opt.theta0.empty() ? std::vector<double>(np, 0.0) : opt.theta0;
    if (static_cast<int>(theta.size()) != np) throw ConfigError("theta0 length does not match the circuit");
    for (double t : theta)
        if (!std::isfinite(t)) throw ConfigError("theta0 has a non-finite entry");

    std::mt19937_64 mask_rng(derive_seed(opt.seed, 0));
    uint64_t eval_counter = 0;
    auto eval = [&](const std::vector<double> &th) {
        return energy(c.angles(th), derive_seed(opt.seed, 1'000'000 + eval_counter++));
    };

    VqeResult res;
    EnergyEstimate cur = eval(theta);
    res.shots += cur.shots;
    res.theta = theta;
    res.energy = cur.value;

    IterationRecord r0;
    r0.theta = theta;
    r0.energy = cur.value;
    r0.variance = cur.variance;
    r0.stages = cur.stages;
    r0.shots = cur.shots;
    r0.lr = 0;
    res.trace.push_back(r0);
    if (on_iteration) on_iteration(r0);
    if (np == 0) {
        res.converged = true;
        return res;
    }

    int quiet = 0;
    for (int k = 1; k <= opt.max_iterations; ++k) {
        IterationRecord rec;
        rec.k = k;
        rec.mask = draw_mask(np, mask_rng, std::min(opt.mask_size, np));
        const uint64_t grad_seed = derive_seed(opt.seed, k);
        std::vector<GradientResult> gr(rec.mask.size());
        try {
            if (opt.threads > 1 && rec.mask.size() > 1) {
                std::vector<std::future<GradientResult>> fut;
                for (int j : rec.mask)
                    fut.push_back(std::async(std::launch::async, [&, j] {
                        return gradient(c, theta, j, energy, derive_seed(grad_seed, j));
                    }));
                for (size_t m = 0; m < fut.size(); ++m) gr[m] = fut[m].get();
            } else {
                for (size_t m = 0; m < rec.mask.size(); ++m)
                    gr[m] = gradient(c, theta, rec.mask[m], energy, derive_seed(grad_seed, rec.mask[m]));
            }
        } catch (const std::exception &e) {
            throw std::runtime_error("iteration " + std::to_string(k) + ": " + e.what());
        }
        std::vector<double> g(np, 0.0);
        for (size_t m = 0; m < rec.mask.size(); ++m) {
            g[rec.mask[m]] = gr[m].value;
            rec.gradient[rec.mask[m]] = gr[m].value;
            rec.gradient_variance[rec.mask[m]] = gr[m].variance;
            rec.shots += gr[m].shots;
        }

        double lr = opt.lr;
        bool accepted = false;
        EnergyEstimate next;
        std::vector<double> trial;
        for (int h = 0; h <= opt.halvings; ++h, lr /= 2) {
            trial = sgd_step(theta, rec.mask, g, lr);
            next = eval(trial);
            rec.shots += next.shots;
            double slack = opt.accept_sigma * std::sqrt(std::max(0.0, cur.variance + next.variance));
            if (next.value <= cur.value + slack) {
                accepted = true;
                break;
            }
        }
        const double prev = cur.value;
        rec.accepted = accepted;
        if (accepted) {
            rec.lr = lr;
            theta = trial;
            cur = next;
        } else {
            rec.lr = 0;
        }
        rec.theta = theta;
        rec.energy = cur.value;
        rec.variance = cur.variance;
        rec.stages = cur.stages;
        res.shots += rec.shots;
        if (cur.value < res.energy) {
            res.energy = cur.value;
            res.theta = theta;
        }
        res.trace.push_back(rec);
        if (on_iteration) on_iteration(rec);

        quiet = std::abs(cur.value - prev) < opt.tolerance ? quiet + 1 : 0;
        if (quiet >= opt.window) {
            res.converged = true;
            break;
        }
    }
    return res;
}

// ---- stages ----

StageSet StageSet::parse(const std::string &list) {
    StageSet s{false, false, false, false};
    if (list.empty() || list == "none") return s;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "rem")
            s.rem = true;
        else if (item == "cf" || item == "cdr")
            s.cf = true;
        else if (item == "sv")
            s.sv = true;
        else if (item == "cmx")
            s.cmx = true;
        else if (item == "all")
            s = StageSet{};
        else
            throw ConfigError("unknown mitigation stage '" + item + "'");
    }
    return s;
}

std::string StageSet::str() const {
    std::vector<std::string> parts;
    if (rem) parts.push_back("rem");
    if (cf) parts.push_back("cf");
    if (sv) parts.push_back("sv");
    if (cmx) parts.push_back("cmx");
    if (parts.empty()) return "none";
    std::string out = parts[0];
    for (size_t i = 1; i < parts.size(); ++i) out += "," + parts[i];
    return out;
}

LoopEstimator parse_loop_estimator(const std::string &s) {
    if (s == "exact") return LoopEstimator::Exact;
    if (s == "ensemble") return LoopEstimator::Ensemble;
    if (s == "raw") return LoopEstimator::Raw;
    if (s == "rem") return LoopEstimator::Rem;
    if (s == "rem_cf") return LoopEstimator::RemCf;
    throw ConfigError("unknown loop estimator '" + s + "'");
}

std::string to_string(LoopEstimator e) {
    switch (e) {
        case LoopEstimator::Exact: return "exact";
        case LoopEstimator::Ensemble: return "ensemble";
        case LoopEstimator::Raw: return "raw";
        case LoopEstimator::Rem: return "rem";
        default: return "rem_cf";
    }
}

namespace {

const std::vector<std::string> kChain = {"raw", "rem", "rem_cf", "cf", "rem_cf_sv", "rem_sv", "cf_sv", "raw_sv",
                                         "cmx"};

std::string mitigated_name(const StageSet &s) {
    if (s.rem && s.cf) return "rem_cf";
    if (s.rem) return "rem";
    if (s.cf) return "cf";
    return "raw";
}

}  // namespace

StageValue StagedReport::final_stage() const { return stages.at(final_stage_name()); }

std::string StagedReport::final_stage_name() const {
    for (auto it = kChain.rbegin(); it != kChain.rend(); ++it)
        if (stages.count(*it)) return *it;
    throw MitigationError("report has no stages");
}

nlohmann::json StagedReport::to_json() const {
    nlohmann::json j;
    nlohmann::json st = nlohmann::json::object();
    for (auto &[k, v] : stages) st[k] = {{"energy", v.energy}, {"variance", v.variance}};
    j["stages"] = st;
    j["numerical"] = numerical;
    if (exact) j["exact"] = *exact;
    j["final_stage"] = final_stage_name();
    j["warnings"] = warnings;
    j["shots"] = shots;
    return j;
}

// ---- pipeline ----

PipelineConfig noiseless_config() {
    PipelineConfig c;
    c.stages = StageSet::parse("none");
    c.loop = LoopEstimator::Exact;
    return c;
}

namespace {

MeasurementPlan make_plan(const PauliSum &weights, int shots, const OptimizeOptions &opt) {
    MeasurementPlan p = build_groups(weights);
    return optimize_distribution(std::move(p), shots, opt);
}

std::vector<double> coefficients(const MeasurementPlan &plan, const PauliSum &t) {
    std::vector<double> c(plan.observables.size(), 0.0);
    for (size_t l = 0; l < c.size(); ++l) c[l] = t.coeff(plan.observables[l]);
    return c;
}

}  // namespace

Pipeline::Pipeline(QubitHamiltonian h, Ansatz ansatz, CompiledCircuit circuit, PipelineConfig cfg)
    : h_(std::move(h)), ansatz_(std::move(ansatz)), circuit_(std::move(circuit)), cfg_(std::move(cfg)) {
    if (circuit_.n_qubits != h_.n_qubits()) throw ConfigError("circuit and Hamiltonian qubit counts differ");
    if (cfg_.shots <= 0) throw ConfigError("shots must be positive");
    cfg_.noise.validate();
    ground_ = exact_ground(h_, true).energy;
    energy_plan_ = make_plan(h_.h, cfg_.shots, cfg_.plan);
    cal_ = CalibrationMatrix::from_noise(NoiseModel{}, h_.n_qubits());
    cdr_ = cdr_identity(energy_plan_.observables);

    const int n = h_.n_qubits();
    PauliSum shifted = h_.h;
    shifted.identity_offset = 0;
    targets_.emplace_back("H", h_.h);
    if (cfg_.stages.sv) {
        targets_.emplace_back("HS", times_parity(h_.h));
        PauliSum s(n);
        s.add(parity_string(n), 1.0);
        targets_.emplace_back("S", s);
    }
    if (cfg_.stages.cmx && cfg_.moments) {
        PauliSum h2 = sum_product(shifted, shifted);
        PauliSum h3 = sum_product(h2, shifted);
        h2.prune(1e-12);
        h3.prune(1e-12);
        if (cfg_.stages.sv) {
            targets_.emplace_back("H2S", times_parity(h2));
            targets_.emplace_back("H3S", times_parity(h3));
        }
        targets_.emplace_back("H2", std::move(h2));
        targets_.emplace_back("H3", std::move(h3));
    }
    refresh_cdr_maps();
}

void Pipeline::build_final_plan() {
    if (final_built_) return;
    const int n = h_.n_qubits();
    // each target weighted by its own one-norm so H^3 does not swamp H
    std::unordered_map<PauliString, double, PauliStringHash> w;
    for (auto &[name, t] : targets_) {
        double norm = t.one_norm();
        if (norm <= 0) continue;
        for (auto &[p, c] : t.terms()) {
            double &v = w[p];
            v = std::max(v, std::abs(c) / norm);
        }
    }
    PauliSum weights(n);
    for (auto &[p, v] : w) weights.add(p, v);
    OptimizeOptions opt = cfg_.plan;
    // dropped terms would bias the stage energies; the energy plan keeps the drop policy
    opt.drop = false;
    final_plan_ = make_plan(weights, final_shots(), opt);
    final_built_ = true;
    refresh_cdr_maps();
}

void Pipeline::refresh_cdr_maps() {
    auto fill = [&](const MeasurementPlan &plan, std::vector<double> &a, std::vector<double> &b) {
        a.assign(plan.observables.size(), 1.0);
        b.assign(plan.observables.size(), 0.0);
        for (size_t l = 0; l < plan.observables.size(); ++l) {
            auto it = cdr_.fits.find(plan.observables[l]);
            if (it == cdr_.fits.end()) continue;
            if (it->second.changed) {
                a[l] = it->second.a;
                b[l] = it->second.b;
            } else {
                a[l] = 0;
                b[l] = it->second.constant;
            }
        }
    };
    fill(energy_plan_, energy_slope_, energy_intercept_);
    if (final_built_) fill(final_plan_, final_slope_, final_intercept_);
}

Ensemble Pipeline::ensemble(const std::vector<double> &gate_angles, uint64_t seed) const {
    SimOptions so = cfg_.sim;
    so.seed = seed;
    return simulate(circuit_, gate_angles, cfg_.noise, so);
}

void Pipeline::calibrate(uint64_t seed) {
    CalibrationData d = calibration_experiment(h_.n_qubits(), cfg_.noise, cfg_.calibration_shots, seed);
    cal_ = learn_calibration(d);
}

void Pipeline::train_cdr(uint64_t seed) {
    build_final_plan();
    // observables that feed H, HS and S always get fits; moment-only strings only when asked
    std::vector<PauliString> obs;
    std::set<PauliString> core;
    for (auto &[name, t] : targets_) {
        if (!cfg_.cdr_moments && name != "H" && name != "HS" && name != "S") continue;
        for (auto &[p, c] : t.terms()) core.insert(p);
    }
    obs.assign(core.begin(), core.end());
    CdrOptions co = cfg_.cdr;
    co.seed = derive_seed(seed, 0);
    CdrScreen screen = cdr_screen(circuit_, initial_state(), obs, co);

    uint64_t counter = 0;
    const CalibrationMatrix cal = cal_;
    std::optional<MeasurementPlan> train_plan;
    std::vector<int> position;
    NoisyEvaluator noisy = [&](const std::vector<double> &angles, const std::vector<PauliString> &want) {
        const uint64_t s = derive_seed(seed, 1 + counter++);
        Ensemble ens = ensemble(angles, derive_seed(s, 0));
        std::vector<double> out(want.size());
        if (cfg_.cdr_shots <= 0) {
            // infinite-shot limit of REM with the true confusion model
            for (size_t i = 0; i < want.size(); ++i) out[i] = ens.expectation(want[i]);
            return out;
        }
        if (!train_plan) {
            PauliSum w(h_.n_qubits());
            for (auto &p : want) w.add(p, 1.0);
            MeasurementPlan p = build_groups(w);
            std::unordered_map<PauliString, int, PauliStringHash> at;
            for (size_t l = 0; l < p.observables.size(); ++l) at[p.observables[l]] = static_cast<int>(l);
            for (auto &q : want) position.push_back(at.at(q));
            train_plan = std::move(p);
        }
        MeasurementPlan p = derandomize(*train_plan, cfg_.cdr_shots, derive_seed(s, 1));
        auto rec = measure_plan(p, ens, cfg_.noise, derive_seed(s, 2));
        EstimatorOutput est = estimate(p, rec, 0.0, cfg_.stages.rem ? rem_value(cal) : ShotValue(parity_value));
        for (size_t i = 0; i < want.size(); ++i) out[i] = est.per_observable[position[i]].value;
        return out;
    };
    cdr_ = cdr_train(circuit_, initial_state(), screen, noisy, co);
    if (!cfg_.cdr_moments && cfg_.stages.cmx && cfg_.moments)
        cdr_.warnings.push_back("moment observables not covered by CDR; REM values used");
    refresh_cdr_maps();
}

void Pipeline::prepare(uint64_t seed) {
    if (cfg_.stages.rem && cfg_.noise.readout_noise()) calibrate(derive_seed(seed, 0));
    if (cfg_.stages.cf) train_cdr(derive_seed(seed, 1));
}

EnergyFn Pipeline::energy_fn(LoopEstimator e) const {
    return [this, e](const std::vector<double> &angles, uint64_t seed) {
        EnergyEstimate out;
        if (e == LoopEstimator::Exact) {
            out.value = run(circuit_, angles).expectation(h_.h);
            return out;
        }
        Ensemble ens = ensemble(angles, derive_seed(seed, 0));
        if (e == LoopEstimator::Ensemble) {
            out.value = ens.expectation(h_.h);
            return out;
        }
        MeasurementPlan p = derandomize(energy_plan_, cfg_.shots, derive_seed(seed, 1));
        auto rec = measure_plan(p, ens, cfg_.noise, derive_seed(seed, 2));
        std::vector<Combination> t{{h_.h.identity_offset, coefficients(p, h_.h)}};
        auto raw = estimate_combinations(p, rec, t)[0];
        out.stages["raw"] = raw.value;
        out.shots = p.total_shots();
        out.value = raw.value;
        out.variance = raw.variance;
        if (e == LoopEstimator::Raw) return out;
        ShotValue v = rem_value(cal_);
        auto rem = estimate_combinations(p, rec, t, v)[0];
        out.stages["rem"] = rem.value;
        out.value = rem.value;
        out.variance = rem.variance;
        if (e == LoopEstimator::Rem) return out;
        auto cf = estimate_combinations(p, rec, t, v, energy_slope_, energy_intercept_)[0];
        out.stages["rem_cf"] = cf.value;
        out.value = cf.value;
        out.variance = cf.variance;
        return out;
    };
}

EnergyEstimate Pipeline::energy(const std::vector<double> &theta, LoopEstimator e, uint64_t seed) const {
    return energy_fn(e)(circuit_.angles(theta), seed);
}

VqeResult Pipeline::optimize(const std::function<void(const IterationRecord &)> &on_iteration) const {
    return run_vqe(circuit_, energy_fn(cfg_.loop), cfg_.vqe, on_iteration);
}

StagedReport Pipeline::evaluate_final(const std::vector<double> &theta, uint64_t seed) {
    build_final_plan();
    StagedReport rep;
    const std::vector<double> angles = circuit_.angles(theta);
    rep.numerical = run(circuit_, angles).expectation(h_.h);
    rep.exact = ground_;

    Ensemble ens = ensemble(angles, derive_seed(seed, 0));
    MeasurementPlan p = derandomize(final_plan_, final_shots(), derive_seed(seed, 1));
    auto rec = measure_plan(p, ens, cfg_.noise, derive_seed(seed, 2));
    rep.shots = p.total_shots();

    std::vector<Combination> comb;
    std::map<std::string, size_t> at;
    for (auto &[name, t] : targets_) {
        at[name] = comb.size();
        comb.push_back({t.identity_offset, coefficients(p, t)});
    }
    auto raw = estimate_combinations(p, rec, comb);
    rep.stages["raw"] = {raw[0].value, raw[0].variance};
    std::vector<CombinationEstimate> last = raw;
    ShotValue v = rem_value(cal_);
    if (cfg_.stages.rem) {
        last = estimate_combinations(p, rec, comb, v);
        rep.stages["rem"] = {last[0].value, last[0].variance};
    }
    if (cfg_.stages.cf) {
        last = estimate_combinations(p, rec, comb, cfg_.stages.rem ? v : ShotValue(parity_value), final_slope_,
                                     final_intercept_);
        rep.stages[mitigated_name(cfg_.stages)] = {last[0].value, last[0].variance};
    }
    const std::string base = mitigated_name(cfg_.stages);
    for (auto &w : cdr_.warnings) rep.warnings.push_back("cdr: " + w);

    // SV projection of target t: (<T> + <T S>) / (1 + <S>), first-order variance without cross terms
    auto project = [&](const std::string &t, const std::string &ts, double &val, double &var) {
        const auto &a = last[at.at(t)], &b = last[at.at(ts)], &s = last[at.at("S")];
        const double den = 1 + s.value;
        val = symmetry_verify(a.value, b.value, s.value);
        var = (a.variance + b.variance) / (den * den) + val * val / (den * den) * s.variance;
    };
    if (cfg_.stages.sv) {
        try {
            StageValue sv;
            project("H", "HS", sv.energy, sv.variance);
            rep.stages[base + "_sv"] = sv;
        } catch (const MitigationError &e) {
            rep.warnings.push_back(std::string("sv: ") + e.what());
        }
    }
    if (cfg_.stages.cmx && cfg_.moments) {
        try {
            const double off = h_.h.identity_offset;
            double m1, v1, m2, v2, m3, v3;
            if (cfg_.stages.sv) {
                project("H", "HS", m1, v1);
                m1 -= off;
                project("H2", "H2S", m2, v2);
                project("H3", "H3S", m3, v3);
            } else {
                m1 = last[0].value - off;
                v1 = last[0].variance;
                m2 = last[at.at("H2")].value;
                v2 = last[at.at("H2")].variance;
                m3 = last[at.at("H3")].value;
                v3 = last[at.at("H3")].variance;
            }
            MomentSet ms = connected_moments(m1, m2, m3);
            ms.var1 = v1;
            ms.var2 = v2;
            ms.var3 = v3;
            CmxResult cr = cmx_energy(ms);
            rep.stages["cmx"] = {cr.energy + off, cr.variance};
            if (cr.warning) rep.warnings.push_back("cmx: " + *cr.warning);
            if (cr.degenerate) rep.warnings.push_back("cmx: degenerate moments, first moment returned");
            if (rep.exact && cr.energy + off < *rep.exact - 2 * std::sqrt(cr.variance))
                rep.warnings.push_back("cmx: estimate lies below the exact ground energy (not variational)");
        } catch (const MitigationError &e) {
            rep.warnings.push_back(std::string("cmx: ") + e.what());
        }
    }
    return rep;
}

}  // namespace vqeforge
