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

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "vqeforge/pauli.h"
#include "vqeforge/simulator.h"

namespace vqeforge {

struct PlanningError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EstimationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Overlapped-grouping measurement plan. Observables are indexed in the order
/// of `observables` (|alpha| descending).
struct MeasurementPlan {
    int n_qubits = 0;
    std::vector<PauliString> observables;
    std::vector<double> alpha;
    std::vector<PauliString> bases;
    std::vector<double> probabilities;
    std::vector<int> shots;
    std::vector<std::vector<int>> hit_map;  // observable -> hitting bases
    std::vector<int> dropped;               // observables left uncovered
    double loss = 0;
    double initial_error_bound = 0;

    size_t n_bases() const { return bases.size(); }
    /// chi(O_l) = sum of probabilities over hitting bases.
    double chi(int l) const;
    int total_shots() const;
    /// Observables hit by basis j.
    std::vector<int> hits_of(int j) const;

    nlohmann::json to_json() const;
    static MeasurementPlan from_json(const nlohmann::json &j);
};

/// Greedy overlapped grouping. Identity slots of each new basis are filled by the
/// next compatible observables in priority order, then with Z.
MeasurementPlan build_groups(const PauliSum &obs);

struct OptimizeOptions {
    int iterations = 500;
    int restarts = 4;
    double rel_tol = 1e-8;
    uint64_t seed = 7;
    /// Upper bound on sum |alpha| of uncovered observables.
    double error_tolerance = 1.6e-3;
    bool drop = true;
};

/// Loss of the given probabilities. Observables with chi = 0 pay alpha^2 * n_shots.
double plan_loss(const MeasurementPlan &plan, const std::vector<double> &k, double n_shots);

/// Minimises the overlapped-grouping loss over the simplex with exponentiated
/// gradient steps. When `trace` is given, the loss after every accepted step of
/// the winning run is appended.
MeasurementPlan optimize_distribution(MeasurementPlan plan, double n_shots, const OptimizeOptions &opt = {},
                                      std::vector<double> *trace = nullptr);

MeasurementPlan derandomize(MeasurementPlan plan, int n_shots, uint64_t seed);

/// Per-shot value of observable `obs` given the outcome bits. Default is the parity.
using ShotValue = std::function<double(const PauliString &obs, uint64_t outcome)>;
double parity_value(const PauliString &obs, uint64_t outcome);

struct ObservableEstimate {
    double value = 0;
    std::map<int, double> basis_means;  // basis index -> o_{l,j}
    int shots = 0;
};

struct EstimatorOutput {
    double value = 0;
    std::vector<ObservableEstimate> per_observable;
    /// Sum_l alpha_l^2 sum_j Var[o_lj] / s_l^2 (ignores within-basis covariance).
    double variance_estimate = 0;
    /// Same estimator with the covariance between observables sharing a basis.
    double variance_covariance = 0;
    nlohmann::json to_json() const;
};

/// Records are matched to plan bases by basis string. Bases with zero planned
/// shots are skipped and do not count toward s_l.
EstimatorOutput estimate(const MeasurementPlan &plan, const std::vector<ShotRecord> &records,
                         double identity_offset, const ShotValue &value = parity_value,
                         bool shot_weighted = false);

/// offset + sum_l coef_l (slope_l o_l + intercept_l) over the plan observables.
/// Observables with slope 0 contribute their intercept even when unsampled.
struct Combination {
    double offset = 0;
    std::vector<double> coef;
};

struct CombinationEstimate {
    double value = 0;
    double variance = 0;  // covariance-aware, as variance_covariance
};

/// Several combinations from one set of records (equal basis weights).
/// Empty slope/intercept mean 1 and 0.
std::vector<CombinationEstimate> estimate_combinations(const MeasurementPlan &plan,
                                                       const std::vector<ShotRecord> &records,
                                                       const std::vector<Combination> &targets,
                                                       const ShotValue &value = parity_value,
                                                       const std::vector<double> &slope = {},
                                                       const std::vector<double> &intercept = {});

/// Infinite-shot limit of estimate(): per-basis means taken over exact outcome
/// distributions (one per plan basis).
double estimate_distributions(const MeasurementPlan &plan, const std::vector<std::vector<double>> &dists,
                              double identity_offset, const ShotValue &value = parity_value);

/// Estimate with per-basis means replaced by exact expectations.
double estimate_exact(const MeasurementPlan &plan, const StateVector &s, double identity_offset);

/// Exact single-sample variance of the randomised estimator (basis drawn from K).
double plan_variance(const MeasurementPlan &plan, const std::function<double(const PauliString &)> &expect);

/// Draws every basis of the plan from the ensemble with its planned shot count.
std::vector<ShotRecord> measure_plan(const MeasurementPlan &plan, const Ensemble &ens, const NoiseModel &noise,
                                     uint64_t seed);

}  // namespace vqeforge
