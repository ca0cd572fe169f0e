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

#include "vqeforge/measurement.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

namespace vqeforge {

namespace {

bool compatible(const PauliString &a, const PauliString &b) {
    return (((a.x ^ b.x) | (a.z ^ b.z)) & a.support_mask() & b.support_mask()) == 0;
}

// Fills identity slots of b with the letters of q.
void merge_into(PauliString &b, const PauliString &q) {
    uint64_t free = ~b.support_mask() & q.support_mask();
    b.x |= q.x & free;
    b.z |= q.z & free;
}

void rebuild_hits(MeasurementPlan &p) {
    p.hit_map.assign(p.observables.size(), {});
    for (size_t l = 0; l < p.observables.size(); ++l)
        for (size_t j = 0; j < p.bases.size(); ++j)
            if (hits(p.observables[l], p.bases[j])) p.hit_map[l].push_back(static_cast<int>(j));
}

struct LossEval {
    const MeasurementPlan &plan;
    double n_shots;

    double loss(const std::vector<double> &k) const {
        double total = 0;
        for (size_t l = 0; l < plan.observables.size(); ++l) {
            double chi = 0;
            for (int j : plan.hit_map[l]) chi += k[j];
            double a2 = plan.alpha[l] * plan.alpha[l];
            total += chi > 0 ? a2 / chi : a2 * n_shots;
        }
        return total;
    }

    // d loss / d k_j
    std::vector<double> grad(const std::vector<double> &k) const {
        std::vector<double> g(k.size(), 0.0);
        for (size_t l = 0; l < plan.observables.size(); ++l) {
            double chi = 0;
            for (int j : plan.hit_map[l]) chi += k[j];
            if (chi <= 0) continue;
            double d = -plan.alpha[l] * plan.alpha[l] / (chi * chi);
            for (int j : plan.hit_map[l]) g[j] += d;
        }
        return g;
    }
};

// Exponentiated-gradient descent restricted to entries with k_j > 0. The step
// size backtracks until the loss decreases, so the loss is monotone.
double descend(const LossEval &ev, std::vector<double> &k, int iterations, double rel_tol,
               std::vector<double> *trace) {
    double cur = ev.loss(k);
    if (trace) trace->push_back(cur);
    double eta = 1.0;
    for (int it = 0; it < iterations; ++it) {
        auto g = ev.grad(k);
        double gmax = 0;
        for (size_t j = 0; j < k.size(); ++j)
            if (k[j] > 0) gmax = std::max(gmax, std::abs(g[j]));
        if (gmax == 0) break;
        // stationarity on the simplex: active gradient entries all equal
        double gbar = 0, gap = 0;
        for (size_t j = 0; j < k.size(); ++j) gbar += k[j] * g[j];
        for (size_t j = 0; j < k.size(); ++j) gap += k[j] * std::abs(g[j] - gbar);
        bool stationary = gap <= 1e-7 * std::abs(gbar);
        if (stationary && it > 0 && gap == 0) break;
        auto step_to = [&](double e, std::vector<double> &out) {
            double step = e / gmax, sum = 0;
            out.resize(k.size());
            for (size_t j = 0; j < k.size(); ++j) {
                out[j] = k[j] > 0 ? k[j] * std::exp(-step * g[j]) : 0.0;
                sum += out[j];
            }
            for (auto &t : out) t /= sum;
            return ev.loss(out);
        };
        // coarse line search over a few step sizes around the last good one, then
        // halve until the loss goes down
        std::vector<double> best_k, trial;
        double best_l = cur, best_eta = 0;
        for (double f : {4.0, 2.0, 1.0, 0.5, 0.25}) {
            double l = step_to(eta * f, trial);
            if (l < best_l) {
                best_l = l;
                best_k = trial;
                best_eta = eta * f;
            }
        }
        for (int back = 0; back < 40 && best_k.empty(); ++back) {
            eta /= 2;
            double l = step_to(eta * 0.25, trial);
            if (l < best_l) {
                best_l = l;
                best_k = trial;
                best_eta = eta * 0.25;
            }
        }
        bool moved = !best_k.empty();
        if (moved) {
            double rel = (cur - best_l) / cur;
            k = std::move(best_k);
            cur = best_l;
            eta = std::min(best_eta, 1e3);
            if (trace) trace->push_back(cur);
            if (rel < rel_tol && stationary) return cur;
        }
        if (!moved) break;
    }
    return cur;
}

}  // namespace

double MeasurementPlan::chi(int l) const {
    double c = 0;
    for (int j : hit_map[l]) c += probabilities[j];
    return c;
}

int MeasurementPlan::total_shots() const { return std::accumulate(shots.begin(), shots.end(), 0); }

std::vector<int> MeasurementPlan::hits_of(int j) const {
    std::vector<int> out;
    for (size_t l = 0; l < hit_map.size(); ++l)
        if (std::find(hit_map[l].begin(), hit_map[l].end(), j) != hit_map[l].end()) out.push_back(static_cast<int>(l));
    return out;
}

nlohmann::json MeasurementPlan::to_json() const {
    nlohmann::json j;
    j["n_qubits"] = n_qubits;
    j["bases"] = nlohmann::json::array();
    for (auto &b : bases) j["bases"].push_back(b.str());
    j["probabilities"] = probabilities;
    j["shots"] = shots;
    j["observables"] = nlohmann::json::array();
    for (size_t l = 0; l < observables.size(); ++l)
        j["observables"].push_back({{"pauli", observables[l].str()}, {"alpha", alpha[l]}});
    j["hit_map"] = hit_map;
    j["dropped"] = dropped;
    j["loss"] = loss;
    j["initial_error_bound"] = initial_error_bound;
    return j;
}

MeasurementPlan MeasurementPlan::from_json(const nlohmann::json &j) {
    MeasurementPlan p;
    p.n_qubits = j.at("n_qubits");
    for (auto &b : j.at("bases")) p.bases.push_back(PauliString::parse(b.get<std::string>()));
    p.probabilities = j.at("probabilities").get<std::vector<double>>();
    p.shots = j.value("shots", std::vector<int>{});
    for (auto &o : j.at("observables")) {
        p.observables.push_back(PauliString::parse(o.at("pauli").get<std::string>()));
        p.alpha.push_back(o.at("alpha"));
    }
    p.dropped = j.value("dropped", std::vector<int>{});
    p.loss = j.value("loss", 0.0);
    p.initial_error_bound = j.value("initial_error_bound", 0.0);
    rebuild_hits(p);
    return p;
}

MeasurementPlan build_groups(const PauliSum &obs) {
    if (obs.empty()) throw PlanningError("no observables to measure");
    MeasurementPlan p;
    p.n_qubits = obs.n_qubits();
    std::vector<std::pair<PauliString, double>> order(obs.terms().begin(), obs.terms().end());
    std::stable_sort(order.begin(), order.end(),
                     [](auto &a, auto &b) { return std::abs(a.second) > std::abs(b.second); });
    for (auto &[s, a] : order) {
        p.observables.push_back(s);
        p.alpha.push_back(a);
    }
    const size_t n_obs = p.observables.size();
    const uint64_t full = p.n_qubits == 64 ? ~0ull : (1ull << p.n_qubits) - 1;
    std::vector<char> covered(n_obs, 0);
    std::vector<double> weight;
    for (size_t l = 0; l < n_obs; ++l) {
        if (covered[l]) continue;
        PauliString b = p.observables[l];
        for (size_t m = l + 1; m < n_obs && b.support_mask() != full; ++m)
            if (compatible(b, p.observables[m])) merge_into(b, p.observables[m]);
        b.z |= full & ~b.support_mask();
        double w = 0;
        for (size_t m = 0; m < n_obs; ++m)
            if (hits(p.observables[m], b)) {
                covered[m] = 1;
                w += std::abs(p.alpha[m]);
            }
        p.bases.push_back(b);
        weight.push_back(w);
    }
    double total = std::accumulate(weight.begin(), weight.end(), 0.0);
    for (double w : weight) p.probabilities.push_back(w / total);
    rebuild_hits(p);
    p.loss = plan_loss(p, p.probabilities, 0);
    return p;
}

double plan_loss(const MeasurementPlan &plan, const std::vector<double> &k, double n_shots) {
    return LossEval{plan, n_shots}.loss(k);
}

MeasurementPlan optimize_distribution(MeasurementPlan plan, double n_shots, const OptimizeOptions &opt,
                                      std::vector<double> *trace) {
    if (plan.bases.empty()) throw PlanningError("plan has no bases");
    LossEval ev{plan, n_shots};
    std::mt19937_64 rng(opt.seed);

    auto multi_start = [&](const std::vector<double> &start, std::vector<double> *tr) {
        std::vector<double> best = start;
        std::vector<double> best_trace;
        double best_loss = descend(ev, best, opt.iterations, opt.rel_tol, tr ? &best_trace : nullptr);
        std::gamma_distribution<double> gam(1.0, 1.0);
        for (int r = 0; r < opt.restarts; ++r) {
            std::vector<double> k(start.size(), 0.0);
            double sum = 0;
            for (size_t j = 0; j < k.size(); ++j)
                if (start[j] > 0) sum += k[j] = gam(rng) + 1e-3;
            for (auto &v : k) v /= sum;
            std::vector<double> t;
            double l = descend(ev, k, opt.iterations, opt.rel_tol, tr ? &t : nullptr);
            if (l < best_loss) {
                best_loss = l;
                best = k;
                best_trace = std::move(t);
            }
        }
        if (tr) tr->insert(tr->end(), best_trace.begin(), best_trace.end());
        return std::pair{best, best_loss};
    };

    auto [k, cur] = multi_start(plan.probabilities, trace);

    if (opt.drop) {
        // Remove bases one at a time, smallest weight first, while the loss at the
        // renormalised distribution goes down and the uncovered weight stays in budget.
        const size_t no = plan.observables.size();
        std::vector<std::vector<int>> hit_by(k.size());
        for (size_t l = 0; l < no; ++l)
            for (int j : plan.hit_map[l]) hit_by[j].push_back(static_cast<int>(l));
        bool changed = true;
        while (changed) {
            changed = false;
            std::vector<double> chi(no, 0.0);
            std::vector<int> active(no, 0);
            double retained = 0, penalty = 0, bound = 0;
            for (size_t l = 0; l < no; ++l) {
                for (int j : plan.hit_map[l])
                    if (k[j] > 0) {
                        chi[l] += k[j];
                        ++active[l];
                    }
                double a2 = plan.alpha[l] * plan.alpha[l];
                if (active[l]) {
                    retained += a2 / chi[l];
                } else {
                    penalty += a2 * n_shots;
                    bound += std::abs(plan.alpha[l]);
                }
            }
            std::vector<size_t> idx;
            for (size_t j = 0; j < k.size(); ++j)
                if (k[j] > 0) idx.push_back(j);
            if (idx.size() <= 1) break;
            std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return k[a] < k[b]; });
            for (size_t j : idx) {
                const double kj = k[j], rest = 1 - kj;
                if (rest <= 0) continue;
                // loss after removing j and renormalising, from the hits of j only
                double touched_old = 0, touched_new = 0, extra_pen = 0, extra_bound = 0;
                for (int l : hit_by[j]) {
                    double a2 = plan.alpha[l] * plan.alpha[l];
                    touched_old += a2 / chi[l];
                    if (active[l] > 1) {
                        touched_new += a2 * rest / std::max(chi[l] - kj, 1e-300);
                    } else {
                        extra_pen += a2 * n_shots;
                        extra_bound += std::abs(plan.alpha[l]);
                    }
                }
                if (bound + extra_bound > opt.error_tolerance) continue;
                double l_new = rest * (retained - touched_old) + touched_new + penalty + extra_pen;
                if (l_new >= retained + penalty) continue;
                for (size_t l = 0; l < no; ++l) chi[l] /= rest;
                for (int l : hit_by[j]) {
                    chi[l] -= kj / rest;
                    --active[l];
                }
                for (auto &v : k) v /= rest;
                k[j] = 0;
                retained = l_new - penalty - extra_pen;
                penalty += extra_pen;
                bound += extra_bound;
                changed = true;
            }
            if (changed) {
                std::vector<double> t;
                cur = descend(ev, k, opt.iterations, opt.rel_tol, trace ? &t : nullptr);
                if (trace) trace->insert(trace->end(), t.begin(), t.end());
            }
        }
    }

    // compact: keep bases with positive weight
    MeasurementPlan out;
    out.n_qubits = plan.n_qubits;
    out.observables = plan.observables;
    out.alpha = plan.alpha;
    for (size_t j = 0; j < k.size(); ++j)
        if (k[j] > 0) {
            out.bases.push_back(plan.bases[j]);
            out.probabilities.push_back(k[j]);
        }
    if (out.bases.empty()) throw PlanningError("all bases dropped");
    rebuild_hits(out);
    for (size_t l = 0; l < out.observables.size(); ++l)
        if (out.hit_map[l].empty()) {
            out.dropped.push_back(static_cast<int>(l));
            out.initial_error_bound += std::abs(out.alpha[l]);
        }
    out.loss = cur;
    return out;
}

MeasurementPlan derandomize(MeasurementPlan plan, int n_shots, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    plan.shots.assign(plan.bases.size(), 0);
    for (size_t j = 0; j < plan.bases.size(); ++j) {
        double want = n_shots * plan.probabilities[j];
        double fl = std::floor(want + 1e-9);
        double frac = want - fl;
        int extra = frac > 1e-9 && u(rng) < frac ? 1 : 0;
        plan.shots[j] = static_cast<int>(fl) + extra;
    }
    return plan;
}

double parity_value(const PauliString &obs, uint64_t outcome) {
    return std::popcount(outcome & obs.support_mask()) % 2 ? -1.0 : 1.0;
}

nlohmann::json EstimatorOutput::to_json() const {
    nlohmann::json j;
    j["value"] = value;
    j["variance_estimate"] = variance_estimate;
    j["variance_covariance"] = variance_covariance;
    return j;
}

namespace {

// Weighted outcome tables per basis; weights are shot counts or probabilities.
using Outcomes = std::vector<std::pair<uint64_t, double>>;

EstimatorOutput estimate_core(const MeasurementPlan &plan, const std::vector<Outcomes> &tables,
                              const std::vector<double> &n_j, double identity_offset, const ShotValue &value,
                              bool shot_weighted) {
    const size_t nb = plan.bases.size(), no = plan.observables.size();
    EstimatorOutput out;
    out.value = identity_offset;
    out.per_observable.resize(no);
    // y_j(outcome) = sum_l alpha_l w_lj v_l(outcome), for the covariance-aware variance
    std::vector<std::vector<double>> y(nb);
    for (size_t j = 0; j < nb; ++j) y[j].assign(tables[j].size(), 0.0);

    for (size_t l = 0; l < no; ++l) {
        auto &est = out.per_observable[l];
        std::vector<int> used;
        for (int j : plan.hit_map[l])
            if (n_j[j] > 0) used.push_back(j);
        if (used.empty()) continue;  // dropped or unsampled
        const auto &o = plan.observables[l];
        double total = 0;
        for (int j : used) total += n_j[j];
        double combined = 0, var_sum = 0;
        for (int j : used) {
            double s1 = 0, s2 = 0;
            std::vector<double> v(tables[j].size());
            for (size_t k = 0; k < tables[j].size(); ++k) {
                v[k] = value(o, tables[j][k].first);
                s1 += tables[j][k].second * v[k];
                s2 += tables[j][k].second * v[k] * v[k];
            }
            double n = n_j[j], mean = s1 / n;
            double var_shot = n > 1 ? std::max(0.0, (s2 - n * mean * mean) / (n - 1)) : 0.0;
            est.basis_means[j] = mean;
            double w = shot_weighted ? n / total : 1.0 / used.size();
            combined += w * mean;
            var_sum += w * w * var_shot / n;
            for (size_t k = 0; k < v.size(); ++k) y[j][k] += plan.alpha[l] * w * v[k];
        }
        est.value = combined;
        est.shots = static_cast<int>(total);
        out.value += plan.alpha[l] * combined;
        out.variance_estimate += plan.alpha[l] * plan.alpha[l] * var_sum;
    }
    for (size_t j = 0; j < nb; ++j) {
        double n = n_j[j];
        if (n <= 1) continue;
        double s1 = 0, s2 = 0;
        for (size_t k = 0; k < tables[j].size(); ++k) {
            s1 += tables[j][k].second * y[j][k];
            s2 += tables[j][k].second * y[j][k] * y[j][k];
        }
        double mean = s1 / n;
        out.variance_covariance += std::max(0.0, (s2 - n * mean * mean) / (n - 1)) / n;
    }
    return out;
}

}  // namespace

EstimatorOutput estimate(const MeasurementPlan &plan, const std::vector<ShotRecord> &records, double identity_offset,
                         const ShotValue &value, bool shot_weighted) {
    std::unordered_map<PauliString, const ShotRecord *, PauliStringHash> by_basis;
    for (auto &r : records) by_basis[r.basis] = &r;
    const size_t nb = plan.bases.size();
    std::vector<Outcomes> tables(nb);
    std::vector<double> n_j(nb, 0.0);
    for (size_t j = 0; j < nb; ++j) {
        int planned = plan.shots.empty() ? 1 : plan.shots[j];
        if (planned == 0) continue;
        auto it = by_basis.find(plan.bases[j]);
        if (it == by_basis.end()) throw EstimationError("no shot record for basis " + plan.bases[j].str());
        if (it->second->outcomes.empty()) throw EstimationError("empty shot record for basis " + plan.bases[j].str());
        for (auto [b, n] : it->second->counts()) tables[j].emplace_back(b, n);
        n_j[j] = static_cast<double>(it->second->outcomes.size());
    }
    return estimate_core(plan, tables, n_j, identity_offset, value, shot_weighted);
}

std::vector<CombinationEstimate> estimate_combinations(const MeasurementPlan &plan,
                                                       const std::vector<ShotRecord> &records,
                                                       const std::vector<Combination> &targets,
                                                       const ShotValue &value, const std::vector<double> &slope,
                                                       const std::vector<double> &intercept) {
    const size_t nb = plan.bases.size(), no = plan.observables.size(), nt = targets.size();
    for (auto &t : targets)
        if (t.coef.size() != no) throw EstimationError("combination length does not match the plan");
    std::unordered_map<PauliString, const ShotRecord *, PauliStringHash> by_basis;
    for (auto &r : records) by_basis[r.basis] = &r;
    std::vector<Outcomes> tables(nb);
    std::vector<double> n_j(nb, 0.0);
    for (size_t j = 0; j < nb; ++j) {
        if (!plan.shots.empty() && plan.shots[j] == 0) continue;
        auto it = by_basis.find(plan.bases[j]);
        if (it == by_basis.end() || it->second->outcomes.empty())
            throw EstimationError("no shot record for basis " + plan.bases[j].str());
        for (auto [b, n] : it->second->counts()) tables[j].emplace_back(b, n);
        n_j[j] = static_cast<double>(it->second->outcomes.size());
    }
    auto a_of = [&](size_t l) { return slope.empty() ? 1.0 : slope[l]; };
    auto b_of = [&](size_t l) { return intercept.empty() ? 0.0 : intercept[l]; };

    std::vector<CombinationEstimate> out(nt);
    for (size_t t = 0; t < nt; ++t) out[t].value = targets[t].offset;
    // y[j][t][k]: per-shot contribution of basis j to target t
    std::vector<std::vector<std::vector<double>>> y(nb);
    for (size_t j = 0; j < nb; ++j) y[j].assign(nt, std::vector<double>(tables[j].size(), 0.0));
    std::vector<double> v;
    for (size_t l = 0; l < no; ++l) {
        const double a = a_of(l), b = b_of(l);
        bool any = false;
        for (size_t t = 0; t < nt; ++t) any = any || targets[t].coef[l] != 0;
        if (!any) continue;
        if (a == 0) {
            for (size_t t = 0; t < nt; ++t) out[t].value += targets[t].coef[l] * b;
            continue;
        }
        std::vector<int> used;
        for (int j : plan.hit_map[l])
            if (n_j[j] > 0) used.push_back(j);
        if (used.empty()) continue;
        const double w = 1.0 / used.size();
        double mean_sum = 0;
        for (int j : used) {
            v.resize(tables[j].size());
            double s1 = 0;
            for (size_t k = 0; k < v.size(); ++k) {
                v[k] = value(plan.observables[l], tables[j][k].first);
                s1 += tables[j][k].second * v[k];
            }
            mean_sum += s1 / n_j[j];
            for (size_t t = 0; t < nt; ++t) {
                double c = targets[t].coef[l];
                if (c == 0) continue;
                for (size_t k = 0; k < v.size(); ++k) y[j][t][k] += c * a * w * v[k];
            }
        }
        const double o = a * mean_sum * w + b;
        for (size_t t = 0; t < nt; ++t) out[t].value += targets[t].coef[l] * o;
    }
    for (size_t j = 0; j < nb; ++j) {
        const double n = n_j[j];
        if (n <= 1) continue;
        for (size_t t = 0; t < nt; ++t) {
            double s1 = 0, s2 = 0;
            for (size_t k = 0; k < tables[j].size(); ++k) {
                s1 += tables[j][k].second * y[j][t][k];
                s2 += tables[j][k].second * y[j][t][k] * y[j][t][k];
            }
            double mean = s1 / n;
            out[t].variance += std::max(0.0, (s2 - n * mean * mean) / (n - 1)) / n;
        }
    }
    return out;
}

double estimate_distributions(const MeasurementPlan &plan, const std::vector<std::vector<double>> &dists,
                              double identity_offset, const ShotValue &value) {
    if (dists.size() != plan.bases.size()) throw EstimationError("one distribution per basis required");
    std::vector<Outcomes> tables(dists.size());
    std::vector<double> n_j(dists.size(), 1.0);
    for (size_t j = 0; j < dists.size(); ++j)
        for (size_t b = 0; b < dists[j].size(); ++b)
            if (dists[j][b] != 0) tables[j].emplace_back(b, dists[j][b]);
    return estimate_core(plan, tables, n_j, identity_offset, value, false).value;
}

double estimate_exact(const MeasurementPlan &plan, const StateVector &s, double identity_offset) {
    double v = identity_offset;
    for (size_t l = 0; l < plan.observables.size(); ++l)
        if (!plan.hit_map[l].empty()) v += plan.alpha[l] * s.expectation(plan.observables[l]);
    return v;
}

double plan_variance(const MeasurementPlan &plan, const std::function<double(const PauliString &)> &expect) {
    const size_t no = plan.observables.size();
    std::vector<double> chi(no);
    double mean = 0;
    for (size_t l = 0; l < no; ++l) {
        chi[l] = plan.chi(static_cast<int>(l));
        if (chi[l] > 0) mean += plan.alpha[l] * expect(plan.observables[l]);
    }
    double second = 0;
    for (size_t j = 0; j < plan.bases.size(); ++j) {
        double kj = plan.probabilities[j];
        if (kj <= 0) continue;
        auto hit = plan.hits_of(static_cast<int>(j));
        double acc = 0;
        for (int a : hit)
            for (int b : hit) {
                // compatible strings multiply without phase
                auto prod = pauli_product(plan.observables[a], plan.observables[b]).result;
                acc += plan.alpha[a] * plan.alpha[b] * expect(prod) / (chi[a] * chi[b]);
            }
        second += kj * acc;
    }
    return second - mean * mean;
}

std::vector<ShotRecord> measure_plan(const MeasurementPlan &plan, const Ensemble &ens, const NoiseModel &noise,
                                     uint64_t seed) {
    std::vector<ShotRecord> out;
    for (size_t j = 0; j < plan.bases.size(); ++j) {
        int shots = plan.shots.empty() ? 0 : plan.shots[j];
        if (shots <= 0) continue;
        out.push_back(sample_distribution(ens.distribution(plan.bases[j]), plan.bases[j], shots, noise,
                                          derive_seed(seed, j)));
    }
    return out;
}

}  // namespace vqeforge
