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

#include "vqeforge/mitigation.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

namespace vqeforge {

// ---- readout ----

std::array<double, 4> CalibrationMatrix::lambda(int q) const {
    auto [e, g] = params.at(q);
    return {1 - e, g, e, 1 - g};
}

std::array<double, 4> CalibrationMatrix::inverse(int q) const {
    auto [e, g] = params.at(q);
    double det = 1 - e - g;
    if (det <= 0) throw CalibrationError("calibration matrix for qubit " + std::to_string(q) + " is not invertible");
    return {(1 - g) / det, -g / det, -e / det, (1 - e) / det};
}

double CalibrationMatrix::z_factor(int q, int bit) const {
    auto inv = inverse(q);
    // <e| Z = (1, -1); column `bit` of the inverse
    return inv[bit] - inv[2 + bit];
}

CalibrationMatrix CalibrationMatrix::from_noise(const NoiseModel &noise, int n_qubits) {
    CalibrationMatrix c;
    for (int q = 0; q < n_qubits; ++q) c.params.push_back(noise.readout_for(q));
    c.support.assign(n_qubits, {0, 0});
    return c;
}

nlohmann::json CalibrationMatrix::to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (int q = 0; q < n_qubits(); ++q) {
        nlohmann::json e{{"qubit", q}, {"eps", params[q].eps}, {"gamma", params[q].gamma}};
        if (q < static_cast<int>(support.size())) e["shots"] = {support[q].first, support[q].second};
        j.push_back(e);
    }
    return j;
}

CalibrationMatrix learn_calibration(const CalibrationData &data) {
    const int n = data.n_qubits;
    if (data.prepared.size() != data.counts.size()) throw CalibrationError("prepared states and counts differ");
    std::vector<double> flip0(n, 0), flip1(n, 0);
    std::vector<int> n0(n, 0), n1(n, 0);
    for (size_t i = 0; i < data.prepared.size(); ++i) {
        uint64_t x = data.prepared[i];
        for (auto [y, m] : data.counts[i])
            for (int q = 0; q < n; ++q) {
                bool xq = x >> q & 1, yq = y >> q & 1;
                if (!xq) {
                    n0[q] += m;
                    if (yq) flip0[q] += m;
                } else {
                    n1[q] += m;
                    if (!yq) flip1[q] += m;
                }
            }
    }
    CalibrationMatrix c;
    for (int q = 0; q < n; ++q) {
        if (n0[q] == 0 || n1[q] == 0)
            throw CalibrationError("calibration states never prepare both values on qubit " + std::to_string(q));
        ReadoutError r{flip0[q] / n0[q], flip1[q] / n1[q]};
        if (r.eps + r.gamma >= 1) throw CalibrationError("eps + gamma >= 1 on qubit " + std::to_string(q));
        c.params.push_back(r);
        c.support.emplace_back(n0[q], n1[q]);
    }
    return c;
}

CalibrationData calibration_experiment(int n_qubits, const NoiseModel &noise, int shots_per_state, uint64_t seed,
                                       std::vector<uint64_t> states) {
    if (states.empty()) states = {0, (uint64_t{1} << n_qubits) - 1};
    CalibrationData d;
    d.n_qubits = n_qubits;
    const PauliString zbasis(n_qubits, 0, (uint64_t{1} << n_qubits) - 1);
    const size_t dim = size_t{1} << n_qubits;
    for (size_t i = 0; i < states.size(); ++i) {
        std::vector<double> dist(dim, 0.0);
        dist[states[i]] = 1;
        auto rec = sample_distribution(dist, zbasis, shots_per_state, noise, derive_seed(seed, i));
        d.prepared.push_back(states[i]);
        d.counts.push_back(rec.counts());
    }
    return d;
}

ShotValue rem_value(const CalibrationMatrix &cal) {
    std::vector<std::array<double, 2>> f;
    for (int q = 0; q < cal.n_qubits(); ++q) f.push_back({cal.z_factor(q, 0), cal.z_factor(q, 1)});
    return [f](const PauliString &obs, uint64_t outcome) {
        double v = 1;
        for (uint64_t m = obs.support_mask(); m; m &= m - 1) {
            int q = std::countr_zero(m);
            v *= f.at(q)[outcome >> q & 1];
        }
        return v;
    };
}

EstimatorOutput rem_estimate(const MeasurementPlan &plan, const std::vector<ShotRecord> &records,
                             double identity_offset, const CalibrationMatrix &cal) {
    return estimate(plan, records, identity_offset, rem_value(cal));
}

// ---- CDR ----

namespace {

std::vector<double> ideal_values(const CompiledCircuit &c, const StateVector &initial,
                                 const std::vector<double> &angles, const std::vector<PauliString> &obs) {
    auto s = run_from(c, angles, initial);
    std::vector<double> v;
    v.reserve(obs.size());
    for (auto &p : obs) v.push_back(s.expectation(p));
    return v;
}

int bin_of(double v) { return std::clamp(static_cast<int>(std::floor((v + 1) / 0.1)), 0, 19); }

}  // namespace

CdrScreen cdr_screen(const CompiledCircuit &c, const StateVector &initial, const std::vector<PauliString> &obs,
                     const CdrOptions &opt) {
    if (opt.L < 2) throw ConfigError("screening needs at least two instances");
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> u(0, 2 * std::numbers::pi);
    std::vector<double> lo(obs.size(), 1e300), hi(obs.size(), -1e300), s1(obs.size(), 0), s2(obs.size(), 0);
    for (int i = 0; i < opt.L; ++i) {
        std::vector<double> theta(c.n_params);
        for (auto &t : theta) t = u(rng);
        auto v = ideal_values(c, initial, c.angles(theta), obs);
        for (size_t l = 0; l < obs.size(); ++l) {
            lo[l] = std::min(lo[l], v[l]);
            hi[l] = std::max(hi[l], v[l]);
            s1[l] += v[l];
            s2[l] += v[l] * v[l];
        }
    }
    CdrScreen out;
    for (size_t l = 0; l < obs.size(); ++l) {
        double mean = s1[l] / opt.L;
        double var = std::max(0.0, s2[l] / opt.L - mean * mean);
        double range = hi[l] - lo[l];
        out.stats[obs[l]] = {range, var};
        // with zero thresholds everything counts as changed
        bool changed = (opt.sigma_T <= 0 || range > opt.sigma_T) && (opt.mu_T <= 0 || var > opt.mu_T);
        if (changed)
            out.changed.push_back(obs[l]);
        else
            out.unchanged[obs[l]] = mean;
    }
    return out;
}

CdrFit fit_linear(const std::vector<std::pair<double, double>> &pairs) {
    CdrFit f;
    f.pairs = pairs;
    f.points = static_cast<int>(pairs.size());
    const double n = pairs.size();
    if (pairs.empty()) return f;
    double mx = 0, my = 0;
    for (auto [x, y] : pairs) {
        mx += x / n;
        my += y / n;
    }
    double sxx = 0, sxy = 0, syy = 0;
    for (auto [x, y] : pairs) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (sxx < 1e-14) {
        // no spread in the noisy values: shift only
        f.a = 1;
        f.b = my - mx;
    } else {
        f.a = sxy / sxx;
        f.b = my - f.a * mx;
    }
    double ss_res = 0;
    for (auto [x, y] : pairs) ss_res += std::pow(y - (f.a * x + f.b), 2);
    f.r2 = syy > 1e-14 ? 1 - ss_res / syy : 1.0;
    std::set<int> bins;
    for (auto [x, y] : pairs) bins.insert(bin_of(y));
    f.bins = static_cast<int>(bins.size());
    return f;
}

CdrModel cdr_train(const CompiledCircuit &c, const StateVector &initial, const CdrScreen &screen,
                   const NoisyEvaluator &noisy, const CdrOptions &opt) {
    if (opt.R < 10) throw ConfigError("cdr needs R >= 10 training circuits");
    if (opt.K < 0) throw ConfigError("cdr K must be non-negative");
    CdrModel model;
    model.K = opt.K;
    model.R = opt.R;
    for (auto &[p, v] : screen.unchanged) {
        CdrFit f;
        f.changed = false;
        f.constant = v;
        model.fits[p] = f;
    }
    const auto &obs = screen.changed;
    if (obs.empty()) return model;

    std::vector<size_t> rot;
    for (size_t i = 0; i < c.gates.size(); ++i)
        if (c.gates[i].rotation() && !c.gates[i].prep && c.gates[i].param >= 0) rot.push_back(i);
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> u(0, 2 * std::numbers::pi);

    auto draw = [&] {
        // literal angles (state preparation) stay as compiled
        std::vector<double> angles = c.angles(std::vector<double>(c.n_params, 0.0));
        std::vector<size_t> idx = rot;
        std::shuffle(idx.begin(), idx.end(), rng);
        for (size_t k = 0; k < idx.size(); ++k) {
            if (static_cast<int>(k) < opt.K)
                angles[idx[k]] = u(rng);
            else
                angles[idx[k]] = opt.clifford_angles ? (std::numbers::pi / 2) * static_cast<double>(rng() % 4) : 0.0;
        }
        return angles;
    };

    std::vector<std::vector<double>> kept;
    std::vector<std::vector<double>> ideal;
    std::vector<std::set<int>> bins(obs.size());
    auto keep = [&](std::vector<double> a, std::vector<double> v) {
        for (size_t l = 0; l < obs.size(); ++l) bins[l].insert(bin_of(v[l]));
        kept.push_back(std::move(a));
        ideal.push_back(std::move(v));
    };
    const int cap = opt.cap_factor * opt.R;
    int draws = 0;
    while (static_cast<int>(kept.size()) < opt.R && draws < cap) {
        auto a = draw();
        ++draws;
        keep(a, ideal_values(c, initial, a, obs));
    }
    auto unmet = [&] {
        for (auto &b : bins)
            if (static_cast<int>(b.size()) < opt.min_bins) return true;
        return false;
    };
    while (unmet() && draws < cap) {
        auto a = draw();
        ++draws;
        auto v = ideal_values(c, initial, a, obs);
        bool useful = false;
        for (size_t l = 0; l < obs.size(); ++l)
            useful |= static_cast<int>(bins[l].size()) < opt.min_bins && !bins[l].count(bin_of(v[l]));
        if (useful) keep(a, v);
    }
    model.instances = static_cast<int>(kept.size());

    std::vector<std::vector<double>> noisy_vals;
    for (auto &a : kept) noisy_vals.push_back(noisy(a, obs));
    for (size_t l = 0; l < obs.size(); ++l) {
        std::vector<std::pair<double, double>> pairs;
        for (size_t i = 0; i < kept.size(); ++i) pairs.emplace_back(noisy_vals[i][l], ideal[i][l]);
        auto f = fit_linear(pairs);
        if (f.bins < opt.min_bins)
            model.warnings.push_back("cdr degraded fit for " + obs[l].str() + ": ideal values span " +
                                     std::to_string(f.bins) + " bins");
        model.fits[obs[l]] = f;
    }
    return model;
}

CdrModel cdr_identity(const std::vector<PauliString> &obs) {
    CdrModel m;
    for (auto &p : obs) m.fits[p] = CdrFit{};
    return m;
}

double CdrModel::apply(const PauliString &p, double noisy) const {
    auto it = fits.find(p);
    if (it == fits.end()) throw MitigationError("observable " + p.str() + " missing from the CDR model");
    const auto &f = it->second;
    return f.changed ? f.a * noisy + f.b : f.constant;
}

nlohmann::json CdrModel::to_json() const {
    nlohmann::json j;
    j["K"] = K;
    j["R"] = R;
    j["instances"] = instances;
    j["warnings"] = warnings;
    j["observables"] = nlohmann::json::array();
    for (auto &[p, f] : fits) {
        nlohmann::json e{{"pauli", p.str()}, {"changed", f.changed}};
        if (f.changed) {
            e["a"] = f.a;
            e["b"] = f.b;
            e["r2"] = f.r2;
            e["points"] = f.points;
        } else {
            e["constant"] = f.constant;
        }
        j["observables"].push_back(e);
    }
    return j;
}

double cdr_apply(const CdrModel &model, const MeasurementPlan &plan, const EstimatorOutput &rem,
                 double identity_offset) {
    double v = identity_offset;
    for (size_t l = 0; l < plan.observables.size(); ++l) {
        const auto &p = plan.observables[l];
        auto it = model.fits.find(p);
        if (it == model.fits.end()) throw MitigationError("observable " + p.str() + " missing from the CDR model");
        if (!it->second.changed) {
            v += plan.alpha[l] * it->second.constant;
            continue;
        }
        if (plan.hit_map[l].empty()) continue;  // dropped from the plan
        v += plan.alpha[l] * model.apply(p, rem.per_observable.at(l).value);
    }
    return v;
}

// ---- symmetry verification ----

PauliString parity_string(int n_qubits) {
    return PauliString(n_qubits, 0, n_qubits == 64 ? ~0ull : (uint64_t{1} << n_qubits) - 1);
}

PauliSum times_parity(const PauliSum &h) {
    // sum_product carries the identity offset into the S term
    return times_string(h, parity_string(h.n_qubits()));
}

double symmetry_verify(double h, double hs, double s) {
    if (!std::isfinite(h) || !std::isfinite(hs) || !std::isfinite(s)) throw MitigationError("non-finite SV input");
    if (1 + s < 0.05) throw MitigationError("symmetry projection is ill-conditioned (1 + <S> < 0.05)");
    return (h + hs) / (1 + s);
}

// ---- connected moments ----

MomentSet connected_moments(double h1, double h2, double h3) {
    MomentSet m;
    m.h1 = h1;
    m.h2 = h2;
    m.h3 = h3;
    m.I1 = h1;
    m.I2 = h2 - h1 * h1;
    m.I3 = h3 - 3 * h1 * h2 + 2 * h1 * h1 * h1;
    m.S21 = m.I2;
    m.S31 = m.I3;
    return m;
}

CmxResult cmx_energy(const MomentSet &m, double tol) {
    CmxResult r;
    const double a = m.h1, b = m.h2, S21 = m.S21, S31 = m.S31;
    if (std::abs(S31) < 1e-10 * std::max(1.0, S21)) {
        r.energy = m.I1;
        r.variance = m.var1;
        r.degenerate = true;
        return r;
    }
    r.energy = m.I1 - S21 * S21 / S31;
    // first-order propagation through a = <H>, b = <H^2>, c = <H^3>
    const double da = 1 + 4 * a * S21 / S31 + S21 * S21 * (6 * a * a - 3 * b) / (S31 * S31);
    const double db = -2 * S21 / S31 - 3 * a * S21 * S21 / (S31 * S31);
    const double dc = S21 * S21 / (S31 * S31);
    r.variance = da * da * m.var1 + db * db * m.var2 + dc * dc * m.var3;
    if (m.I3 <= 0 && m.I2 > tol) r.warning = "CMX ascent direction: I3 <= 0 with I2 > 0";
    return r;
}

}  // namespace vqeforge
