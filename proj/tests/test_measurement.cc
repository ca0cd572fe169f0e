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

#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "test_util.h"
#include "vqeforge/measurement.h"

using namespace vqeforge;
using namespace vqeforge::testing;

namespace {

PauliSum sum_of(int n, std::initializer_list<std::pair<const char *, double>> terms, double offset = 0) {
    PauliSum h(n, offset);
    for (auto [s, c] : terms) h.add(PauliString::parse(s), c);
    return h;
}

StateVector random_state(int n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::VectorXcd v(size_t{1} << n);
    for (auto &a : v) a = cplx(g(rng), g(rng));
    return StateVector::from_amplitudes(v.normalized());
}

PauliSum random_sum(int n, int terms, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    PauliSum h(n, u(rng));
    for (int k = 0; k < terms; ++k) {
        std::string s;
        for (int q = 0; q < n; ++q) s += "IXYZ"[rng() % 4];
        auto p = PauliString::parse(s);
        if (!p.is_identity()) h.add(p, u(rng));
    }
    return h;
}

// Smallest number of full-support bases covering every term, by exhaustive search.
int min_cover(const PauliSum &h) {
    const int n = h.n_qubits();
    std::vector<PauliString> all;
    int total = 1;
    for (int q = 0; q < n; ++q) total *= 3;
    for (int code = 0; code < total; ++code) {
        PauliString b(n);
        for (int q = 0, c = code; q < n; ++q, c /= 3) b.set(q, "XYZ"[c % 3]);
        all.push_back(b);
    }
    auto terms = h.strings();
    std::vector<uint32_t> mask(all.size(), 0);
    for (size_t b = 0; b < all.size(); ++b)
        for (size_t t = 0; t < terms.size(); ++t)
            if (hits(terms[t], all[b])) mask[b] |= 1u << t;
    const uint32_t want = (terms.size() == 32 ? ~0u : (1u << terms.size()) - 1);
    for (int k = 1; k <= 8; ++k) {
        std::function<bool(size_t, int, uint32_t)> go = [&](size_t from, int left, uint32_t have) {
            if (have == want) return true;
            if (left == 0) return false;
            for (size_t b = from; b < all.size(); ++b)
                if ((mask[b] | have) != have && go(b + 1, left - 1, have | mask[b])) return true;
            return false;
        };
        if (go(0, k, 0)) return k;
    }
    return -1;
}

}  // namespace

TEST(Groups, HandExample) {
    auto p = build_groups(sum_of(2, {{"ZZ", 0.5}, {"XI", 0.3}, {"XX", 0.2}}));
    ASSERT_EQ(p.bases.size(), 2u);
    EXPECT_EQ(p.bases[0].str(), "ZZ");
    EXPECT_EQ(p.bases[1].str(), "XX");
    EXPECT_EQ(p.hit_map[1], std::vector<int>{1});
    EXPECT_EQ(p.hit_map[2], std::vector<int>{1});
    EXPECT_NEAR(p.probabilities[0], 0.5, 1e-15);
}

TEST(Groups, SingleTerm) {
    auto p = build_groups(sum_of(3, {{"XIZ", 2.0}}));
    ASSERT_EQ(p.bases.size(), 1u);
    EXPECT_EQ(p.probabilities[0], 1.0);
}

TEST(Groups, EmptyRejected) { EXPECT_THROW(build_groups(PauliSum(2, 1.0)), PlanningError); }

TEST(Groups, H2CoverIsSmall) {
    auto h = load_qubit("h2_0.74");
    ASSERT_EQ(h.h.size(), 14u);  // 15 with the identity
    auto p = build_groups(h.h);
    EXPECT_LE(p.bases.size(), 5u);
    EXPECT_GE(p.bases.size(), static_cast<size_t>(min_cover(h.h)));
    for (auto &hm : p.hit_map) EXPECT_FALSE(hm.empty());
}

TEST(Groups, OverlapAllowedAndComplete) {
    auto h = load_qubit("lih_1.50");
    auto p = build_groups(h.h);
    for (size_t l = 0; l < p.observables.size(); ++l)
        for (size_t j = 0; j < p.bases.size(); ++j) {
            bool listed = std::find(p.hit_map[l].begin(), p.hit_map[l].end(), int(j)) != p.hit_map[l].end();
            EXPECT_EQ(listed, hits(p.observables[l], p.bases[j]));
        }
    for (auto &b : p.bases) EXPECT_EQ(b.weight(), 6);
}

TEST(Optimize, SymmetricDisjoint) {
    auto p = optimize_distribution(build_groups(sum_of(2, {{"ZI", 0.5}, {"XI", -0.5}})), 1000);
    ASSERT_EQ(p.bases.size(), 2u);
    EXPECT_NEAR(p.probabilities[0], 0.5, 1e-6);
    EXPECT_NEAR(p.probabilities[1], 0.5, 1e-6);
}

TEST(Optimize, ProportionalToAlpha) {
    // start away from the optimum so the optimizer has to move
    auto p = build_groups(sum_of(1, {{"Z", 0.9}, {"X", 0.1}}));
    p.probabilities = {0.2, 0.8};
    OptimizeOptions o;
    o.restarts = 0;
    auto out = optimize_distribution(p, 1e4, o);
    EXPECT_NEAR(out.probabilities[0], 0.9, 1e-5);
    EXPECT_NEAR(out.probabilities[1], 0.1, 1e-5);
    EXPECT_NEAR(out.loss, 1.0, 1e-8);
}

TEST(Optimize, DroppingLowersLoss) {
    auto h = sum_of(2, {{"ZZ", 1.0}, {"XX", 1.0}, {"YY", 0.001}});
    auto g = build_groups(h);
    const double ns = 10;
    OptimizeOptions keep;
    keep.drop = false;
    auto kept = optimize_distribution(g, ns, keep);
    auto dropped = optimize_distribution(g, ns);
    EXPECT_EQ(dropped.dropped, std::vector<int>{2});
    EXPECT_NEAR(dropped.initial_error_bound, 0.001, 1e-15);
    EXPECT_LT(dropped.loss, kept.loss);
    EXPECT_NEAR(dropped.loss, 4.0 + 1e-6 * ns, 1e-6);
    // large budget makes the penalty dominate, nothing is dropped
    EXPECT_TRUE(optimize_distribution(g, 1e9).dropped.empty());
    // tolerance below the uncovered weight forbids the drop
    OptimizeOptions strict;
    strict.error_tolerance = 1e-4;
    EXPECT_TRUE(optimize_distribution(g, ns, strict).dropped.empty());
}

TEST(Optimize, LossIsMonotoneAndCoverageHolds) {
    for (auto stem : {"h2_0.74", "lih_1.50"}) {
        auto h = load_qubit(stem);
        std::vector<double> trace;
        auto p = optimize_distribution(build_groups(h.h), 1e5, {}, &trace);
        ASSERT_GE(trace.size(), 2u);
        // the trace of the kept run plus the drop phase never goes up
        for (size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] * (1 + 1e-12)) << stem << " " << i;
        for (size_t l = 0; l < p.observables.size(); ++l)
            if (std::find(p.dropped.begin(), p.dropped.end(), int(l)) == p.dropped.end()) EXPECT_GT(p.chi(l), 0);
        EXPECT_LE(p.initial_error_bound, OptimizeOptions{}.error_tolerance);
        double sum = 0;
        for (double k : p.probabilities) sum += k;
        EXPECT_NEAR(sum, 1, 1e-12);
        EXPECT_LE(p.loss, build_groups(h.h).loss + 1e-12);
    }
}

TEST(Derandomize, ExactFloors) {
    MeasurementPlan p;
    p.bases = {PauliString::parse("Z"), PauliString::parse("X")};
    p.probabilities = {0.7, 0.3};
    EXPECT_EQ(derandomize(p, 100, 1).shots, (std::vector<int>{70, 30}));
    p.probabilities = {0.55, 0.45};
    for (uint64_t seed = 0; seed < 20; ++seed) {
        auto s = derandomize(p, 10, seed).shots;
        EXPECT_TRUE(s[0] == 5 || s[0] == 6);
        EXPECT_TRUE(s[1] == 4 || s[1] == 5);
    }
}

TEST(Derandomize, UnbiasedOverSeeds) {
    MeasurementPlan p;
    p.bases = {PauliString::parse("Z"), PauliString::parse("X"), PauliString::parse("Y")};
    p.probabilities = {0.123, 0.456, 0.421};
    const int ns = 37, seeds = 10000;
    std::vector<double> mean(3, 0);
    for (int s = 0; s < seeds; ++s) {
        auto sh = derandomize(p, ns, s).shots;
        int total = 0;
        for (int j = 0; j < 3; ++j) {
            mean[j] += double(sh[j]) / seeds;
            total += sh[j];
        }
        EXPECT_LE(std::abs(total - ns), 3);
    }
    for (int j = 0; j < 3; ++j) {
        double want = ns * p.probabilities[j];
        double frac = want - std::floor(want);
        EXPECT_NEAR(mean[j], want, 3 * std::sqrt(frac * (1 - frac) / seeds));
    }
}

TEST(Estimate, DeterministicPlusOne) {
    auto h = sum_of(2, {{"ZZ", 0.5}, {"ZI", 0.25}, {"XX", -0.1}}, 1.0);
    auto p = derandomize(build_groups(h), 10, 0);
    std::vector<ShotRecord> recs;
    for (size_t j = 0; j < p.bases.size(); ++j)
        if (p.shots[j]) recs.push_back({p.bases[j], std::vector<uint64_t>(p.shots[j], 0), 0});
    auto out = estimate(p, recs, h.identity_offset);
    for (auto &o : out.per_observable) EXPECT_EQ(o.value, 1.0);
    EXPECT_NEAR(out.value, 1.0 + 0.5 + 0.25 - 0.1, 1e-15);
    EXPECT_EQ(out.variance_estimate, 0.0);
}

TEST(Estimate, MissingRecordThrows) {
    auto p = derandomize(build_groups(sum_of(2, {{"ZZ", 0.5}, {"XX", 0.2}})), 10, 0);
    std::vector<ShotRecord> recs{{p.bases[0], std::vector<uint64_t>(5, 0), 0}};
    EXPECT_THROW(estimate(p, recs, 0), EstimationError);
}

TEST(Estimate, UnbiasedInExactLimit) {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        int n = 2 + seed % 5;
        auto h = random_sum(n, 30, seed);
        auto s = random_state(n, seed + 50);
        for (bool opt : {false, true}) {
            auto p = build_groups(h);
            if (opt) p = optimize_distribution(p, 1e6);
            std::vector<std::vector<double>> dists;
            for (auto &b : p.bases) {
                auto r = s;
                r.rotate_to_basis(b);
                dists.push_back(r.probabilities());
            }
            double covered = h.identity_offset;
            for (size_t l = 0; l < p.observables.size(); ++l)
                if (!p.hit_map[l].empty()) covered += p.alpha[l] * s.expectation(p.observables[l]);
            EXPECT_NEAR(estimate_distributions(p, dists, h.identity_offset), covered, 1e-10);
            if (p.dropped.empty()) EXPECT_NEAR(covered, s.expectation(h), 1e-10);
        }
    }
}

TEST(Estimate, SampledRunsWithinThreeSigma) {
    auto h = load_qubit("h2_0.74");
    auto a = build_ansatz(h, {});
    auto c = compile(a, h, default_layout(h));
    auto ens = simulate(c, c.angles({0.3}), {}, {1, 1, 1});
    double exact = ens.expectation(h.h);
    auto plan = derandomize(optimize_distribution(build_groups(h.h), 2000), 2000, 3);
    ASSERT_TRUE(plan.dropped.empty());
    const int runs = 200;
    int inside = 0;
    double m = 0, m2 = 0, mean_var = 0;
    for (int r = 0; r < runs; ++r) {
        auto out = estimate(plan, measure_plan(plan, ens, {}, 1000 + r), h.h.identity_offset);
        inside += std::abs(out.value - exact) <= 3 * std::sqrt(out.variance_covariance);
        m += out.value / runs;
        m2 += out.value * out.value / runs;
        mean_var += out.variance_covariance / runs;
    }
    EXPECT_GE(inside, 190);
    double emp_var = m2 - m * m;
    EXPECT_NEAR(emp_var / mean_var, 1.0, 0.3);
    EXPECT_NEAR(m, exact, 4 * std::sqrt(mean_var / runs));
}

TEST(Estimate, ShotWeightedVariantAgreesInExpectation) {
    auto h = load_qubit("h2_0.74");
    auto s = prepare_initial({}, h);
    Ensemble ens{4, {s}, {1.0}, 1.0};
    auto plan = derandomize(build_groups(h.h), 50000, 1);
    auto recs = measure_plan(plan, ens, {}, 5);
    auto a = estimate(plan, recs, h.h.identity_offset);
    auto b = estimate(plan, recs, h.h.identity_offset, parity_value, true);
    double exact = s.expectation(h.h);
    EXPECT_NEAR(a.value, exact, 5 * std::sqrt(a.variance_covariance) + 1e-12);
    EXPECT_NEAR(b.value, exact, 5 * std::sqrt(b.variance_covariance) + 1e-12);
}

TEST(Estimate, CombinationsMatchSingleTargetEstimate) {
    auto h = load_qubit("h2_0.74");
    auto a = build_ansatz(h, {});
    auto c = compile(a, h, default_layout(h));
    auto ens = simulate(c, c.angles({0.3}), {}, {1, 1, 1});
    auto plan = derandomize(optimize_distribution(build_groups(h.h), 5000), 5000, 3);
    auto recs = measure_plan(plan, ens, {}, 9);
    auto ref = estimate(plan, recs, h.h.identity_offset);
    std::vector<double> coef(plan.observables.size());
    for (size_t l = 0; l < coef.size(); ++l) coef[l] = h.h.coeff(plan.observables[l]);
    Combination twice{2 * h.h.identity_offset, coef};
    for (auto &x : twice.coef) x *= 2;
    auto out = estimate_combinations(plan, recs, {{h.h.identity_offset, coef}, twice});
    EXPECT_NEAR(out[0].value, ref.value, 1e-12);
    EXPECT_NEAR(out[0].variance, ref.variance_covariance, 1e-12);
    EXPECT_NEAR(out[1].value, 2 * ref.value, 1e-12);
    EXPECT_NEAR(out[1].variance, 4 * ref.variance_covariance, 1e-12);
    // affine per-observable map; slope 0 means a known constant
    std::vector<double> slope(coef.size(), 2.0), icpt(coef.size(), 0.5);
    slope[0] = 0;
    auto mapped = estimate_combinations(plan, recs, {{h.h.identity_offset, coef}}, parity_value, slope, icpt);
    double want = h.h.identity_offset + coef[0] * 0.5;
    for (size_t l = 1; l < coef.size(); ++l) want += coef[l] * (2 * ref.per_observable[l].value + 0.5);
    EXPECT_NEAR(mapped[0].value, want, 1e-12);
    EXPECT_THROW(estimate_combinations(plan, recs, {{0.0, {1.0}}}), EstimationError);
}

TEST(PlanVariance, SingleObservable) {
    auto p = build_groups(sum_of(1, {{"X", 1.0}}));
    auto s = random_state(1, 4);
    double e = s.expectation(PauliString::parse("X"));
    EXPECT_NEAR(plan_variance(p, [&](const PauliString &q) { return s.expectation(q); }), 1 - e * e, 1e-12);
}

TEST(PlanVariance, EigenstateIsZero) {
    auto p = build_groups(sum_of(3, {{"ZII", 0.4}, {"IZZ", -0.3}, {"ZZZ", 0.2}}));
    StateVector s(3, 0b011);
    EXPECT_NEAR(plan_variance(p, [&](const PauliString &q) { return s.expectation(q); }), 0, 1e-12);
}

TEST(PlanVariance, MatchesSingleShotMonteCarlo) {
    auto h = sum_of(3, {{"XXI", 0.6}, {"XIZ", -0.4}, {"ZZI", 0.5}, {"IZY", 0.3}, {"YIY", 0.2}, {"IXI", -0.25}});
    auto p = build_groups(h);
    auto s = random_state(3, 77);
    double want = plan_variance(p, [&](const PauliString &q) { return s.expectation(q); });
    std::vector<std::vector<double>> dists;
    for (auto &b : p.bases) {
        auto r = s;
        r.rotate_to_basis(b);
        dists.push_back(r.probabilities());
    }
    std::mt19937_64 rng(9);
    std::discrete_distribution<int> pick(p.probabilities.begin(), p.probabilities.end());
    std::vector<std::discrete_distribution<int>> outcome;
    for (auto &d : dists) outcome.emplace_back(d.begin(), d.end());
    const int draws = 100000;
    double m = 0, m2 = 0;
    for (int t = 0; t < draws; ++t) {
        int j = pick(rng);
        uint64_t b = outcome[j](rng);
        double v = 0;
        for (size_t l = 0; l < p.observables.size(); ++l)
            if (hits(p.observables[l], p.bases[j])) v += p.alpha[l] * parity_value(p.observables[l], b) / p.chi(l);
        m += v / draws;
        m2 += v * v / draws;
    }
    EXPECT_NEAR(m, s.expectation(h), 0.02);
    EXPECT_NEAR((m2 - m * m) / want, 1.0, 0.05);
}

TEST(Plan, JsonRoundTrip) {
    auto h = load_qubit("h2_0.74");
    auto p = derandomize(optimize_distribution(build_groups(h.h), 1e4), 10000, 2);
    auto back = MeasurementPlan::from_json(p.to_json());
    EXPECT_EQ(back.to_json(), p.to_json());
    EXPECT_EQ(back.hit_map, p.hit_map);
}
