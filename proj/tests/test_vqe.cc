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

#include <cmath>
#include <numbers>
#include <random>

#include "test_util.h"
#include "vqeforge/vqe.h"

using namespace vqeforge;
using namespace vqeforge::testing;

namespace {

EnergyFn exact_fn(const CompiledCircuit &c, const PauliSum &h) {
    return [&c, &h](const std::vector<double> &angles, uint64_t) {
        EnergyEstimate e;
        e.value = run(c, angles).expectation(h);
        return e;
    };
}

std::vector<double> random_theta(int n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
    std::vector<double> t(n);
    for (auto &x : t) x = u(rng);
    return t;
}

PipelineConfig calibrated_config(int n_qubits) {
    PipelineConfig cfg;
    cfg.noise = NoiseModel::uniform(0.001, 0.008, 0.037, 0.037, n_qubits);
    cfg.sim.method = SimMethod::Auto;
    cfg.shots = 130000;
    return cfg;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : (v[v.size() / 2 - 1] + v[v.size() / 2]) / 2;
}

}  // namespace

TEST(Gradient, RxOnZeroIsMinusSin) {
    CompiledCircuit c;
    c.n_qubits = 1;
    c.n_params = 1;
    c.gates.push_back(Gate::rot(GateKind::RX, 0, 0.0, 0));
    PauliSum z(1);
    z.add(PauliString::parse("Z"), 1.0);
    auto fn = exact_fn(c, z);
    auto g = gradient(c, {0.3}, 0, fn, 1);
    EXPECT_NEAR(g.value, -std::sin(0.3), 1e-12);
    EXPECT_NEAR(g.value, finite_difference(c, {0.3}, 0, fn), 1e-6);
    EXPECT_EQ(g.variance, 0.0);
}

TEST(Gradient, ScaledOccurrenceUsesCoefficient) {
    CompiledCircuit c;
    c.n_qubits = 1;
    c.n_params = 1;
    c.gates.push_back(Gate::rot(GateKind::RY, 0, 0.2, 0, -2.0));
    PauliSum x(1);
    x.add(PauliString::parse("X"), 1.0);
    auto fn = exact_fn(c, x);
    EXPECT_NEAR(gradient(c, {0.7}, 0, fn, 1).value, finite_difference(c, {0.7}, 0, fn), 1e-7);
}

TEST(Gradient, H2SharedParameterSumsBothShifts) {
    auto p = load_problem("h2_0.74");
    ASSERT_EQ(p.circuit.n_params, 1);
    ASSERT_EQ(p.circuit.occurrences(0).size(), 2u);
    auto fn = exact_fn(p.circuit, p.h.h);
    for (double t : {-0.4, 0.1, 0.9}) {
        auto g = gradient(p.circuit, {t}, 0, fn, 3);
        EXPECT_NEAR(g.value, finite_difference(p.circuit, {t}, 0, fn), 1e-6);
    }
}

class ShiftVsFiniteDifference : public ::testing::TestWithParam<std::string> {};

TEST_P(ShiftVsFiniteDifference, AgreesAtRandomPoints) {
    auto p = load_problem(GetParam());
    auto fn = exact_fn(p.circuit, p.h.h);
    double worst = 0;
    for (uint64_t s = 0; s < 10; ++s) {
        auto theta = random_theta(p.circuit.n_params, 100 + s);
        for (int j = 0; j < p.circuit.n_params; ++j) {
            double g = gradient(p.circuit, theta, j, fn, s).value;
            worst = std::max(worst, std::abs(g - finite_difference(p.circuit, theta, j, fn)));
        }
    }
    EXPECT_LT(worst, 1e-5);
}

INSTANTIATE_TEST_SUITE_P(Molecules, ShiftVsFiniteDifference, ::testing::Values("h2_0.74", "lih_1.50", "f2_1.41"));

TEST(Gradient, VanishesAtStationaryPoint) {
    auto p = load_problem("h2_0.74");
    auto fn = exact_fn(p.circuit, p.h.h);
    // Newton on the analytic gradient
    double t = 0.1;
    for (int it = 0; it < 30; ++it) {
        double g = gradient(p.circuit, {t}, 0, fn, 0).value;
        double h = 1e-4;
        double gp = (gradient(p.circuit, {t + h}, 0, fn, 0).value - gradient(p.circuit, {t - h}, 0, fn, 0).value) / (2 * h);
        t -= g / gp;
    }
    EXPECT_LT(std::abs(gradient(p.circuit, {t}, 0, fn, 0).value), 1e-10);
}

TEST(Gradient, MissingOccurrenceIsBindingError) {
    CompiledCircuit c;
    c.n_qubits = 1;
    c.n_params = 2;
    c.gates.push_back(Gate::rot(GateKind::RX, 0, 0.0, 0));
    PauliSum z(1);
    z.add(PauliString::parse("Z"), 1.0);
    auto fn = exact_fn(c, z);
    EXPECT_THROW(gradient(c, {0.1, 0.2}, 1, fn, 0), BindingError);
    EXPECT_THROW(gradient(c, {0.1, 0.2}, 2, fn, 0), BindingError);
}

TEST(Gradient, ShiftBeatsFiniteDifferenceVariance) {
    auto p = load_problem("h2_0.74");
    PipelineConfig cfg;
    cfg.shots = 2000;
    cfg.stages = StageSet::parse("none");
    Pipeline pipe(p.h, p.ansatz, p.circuit, cfg);
    auto fn = pipe.energy_fn(LoopEstimator::Raw);
    const double delta = 0.1;
    std::vector<double> gs, fd;
    for (uint64_t s = 0; s < 60; ++s) {
        gs.push_back(gradient(p.circuit, {0.2}, 0, fn, s).value);
        // same budget: one evaluation per shifted point per occurrence
        double f = 0;
        auto occ = p.circuit.occurrences(0);
        auto base = p.circuit.angles({0.2});
        for (size_t o = 0; o < occ.size(); ++o) {
            auto a = base, b = base;
            a[occ[o]] += delta;
            b[occ[o]] -= delta;
            f += p.circuit.gates[occ[o]].coef * (fn(a, 1000 + 2 * s).value - fn(b, 1001 + 2 * s).value) / (2 * delta);
        }
        fd.push_back(f);
    }
    auto var = [](const std::vector<double> &v) {
        double m = 0, q = 0;
        for (double x : v) m += x;
        m /= v.size();
        for (double x : v) q += (x - m) * (x - m);
        return q / (v.size() - 1);
    };
    EXPECT_LT(var(gs), var(fd));
}

TEST(Gradient, VarianceEstimateTracksSpread) {
    auto p = load_problem("h2_0.74");
    PipelineConfig cfg;
    cfg.shots = 5000;
    cfg.stages = StageSet::parse("none");
    Pipeline pipe(p.h, p.ansatz, p.circuit, cfg);
    auto fn = pipe.energy_fn(LoopEstimator::Raw);
    std::vector<double> g;
    double reported = 0;
    for (uint64_t s = 0; s < 200; ++s) {
        auto r = gradient(p.circuit, {0.2}, 0, fn, s);
        g.push_back(r.value);
        reported += r.variance / 200;
    }
    double m = 0, q = 0;
    for (double x : g) m += x / g.size();
    for (double x : g) q += (x - m) * (x - m) / (g.size() - 1);
    EXPECT_NEAR(q / reported, 1.0, 0.35);
}

TEST(Mask, SizeIsHalfRoundedUp) {
    std::mt19937_64 rng(5);
    for (int n = 1; n <= 9; ++n)
        for (int rep = 0; rep < 20; ++rep) {
            auto m = draw_mask(n, rng);
            ASSERT_EQ(static_cast<int>(m.size()), (n + 1) / 2);
            for (size_t i = 1; i < m.size(); ++i) EXPECT_LT(m[i - 1], m[i]);
            for (int j : m) EXPECT_TRUE(j >= 0 && j < n);
        }
    auto one = draw_mask(1, rng);
    EXPECT_EQ(one, std::vector<int>{0});
}

TEST(Mask, CoversEveryCoordinate) {
    std::mt19937_64 rng(2);
    std::vector<int> hits(5, 0);
    for (int rep = 0; rep < 3000; ++rep)
        for (int j : draw_mask(5, rng)) ++hits[j];
    for (int h : hits) EXPECT_NEAR(h / 3000.0, 0.6, 0.05);
}

TEST(Sgd, StepTouchesMaskedEntriesOnly) {
    std::vector<double> theta{0.1, 0.2, 0.3, 0.4, 0.5};
    std::vector<double> g{1, 1, 1, 1, 1};
    EXPECT_EQ(sgd_step(theta, {0, 2, 4}, std::vector<double>(5, 0.0), 0.2), theta);
    auto next = sgd_step(theta, {0, 2, 4}, g, 0.2);
    int moved = 0;
    for (int j = 0; j < 5; ++j) moved += next[j] != theta[j];
    EXPECT_EQ(moved, 3);
    EXPECT_DOUBLE_EQ(next[0], 0.1 - 0.2);
    EXPECT_DOUBLE_EQ(next[1], 0.2);
}

TEST(RunVqe, NoiselessTraceIsNonIncreasing) {
    auto p = load_problem("lih_1.50");
    VqeOptions opt;
    opt.seed = 4;
    auto res = run_vqe(p.circuit, exact_fn(p.circuit, p.h.h), opt);
    ASSERT_GE(res.trace.size(), 2u);
    for (size_t k = 1; k < res.trace.size(); ++k) EXPECT_LE(res.trace[k].energy, res.trace[k - 1].energy + 1e-12);
    EXPECT_LT(res.energy, res.trace.front().energy);
    for (size_t k = 1; k < res.trace.size(); ++k) EXPECT_EQ(res.trace[k].mask.size(), 2u);  // ceil(3/2)
}

class H2Curve : public ::testing::TestWithParam<std::string> {};

TEST_P(H2Curve, NoiselessReachesChemicalAccuracy) {
    auto p = load_problem(GetParam());
    Pipeline pipe(p.h, p.ansatz, p.circuit, noiseless_config());
    auto res = pipe.optimize();
    EXPECT_LE(res.trace.size(), 16u);
    EXPECT_LT(std::abs(res.energy - p.e_fci), 1.6e-3) << GetParam();
    for (size_t k = 1; k < res.trace.size(); ++k) EXPECT_EQ(res.trace[k].mask, std::vector<int>{0});
}

INSTANTIATE_TEST_SUITE_P(Distances, H2Curve,
                         ::testing::Values("h2_0.50", "h2_0.74", "h2_1.00", "h2_1.25", "h2_1.50", "h2_2.00",
                                           "h2_2.60", "h2_3.00"));

TEST(RunVqe, MultireferenceHelpsLiHAtLargeDistance) {
    auto hf = load_problem("lih_3.00");
    const double beta = optimize_beta(hf.h);
    auto mr = load_problem("lih_3.00", {InitialState::Kind::MultiReference, beta});
    VqeOptions opt;
    opt.seed = 9;
    auto r_hf = run_vqe(hf.circuit, exact_fn(hf.circuit, hf.h.h), opt);
    auto r_mr = run_vqe(mr.circuit, exact_fn(mr.circuit, mr.h.h), opt);
    EXPECT_LE(r_mr.energy, r_hf.energy);
    double e_beta = prepare_initial({InitialState::Kind::MultiReference, beta}, hf.h).expectation(hf.h.h);
    EXPECT_LT(e_beta, prepare_initial({}, hf.h).expectation(hf.h.h));
}

TEST(RunVqe, ZeroParametersReturnsInitialEnergy) {
    CompiledCircuit c;
    c.n_qubits = 1;
    PauliSum z(1);
    z.add(PauliString::parse("Z"), 1.0);
    auto res = run_vqe(c, exact_fn(c, z), {});
    EXPECT_EQ(res.energy, 1.0);
    EXPECT_TRUE(res.converged);
}

TEST(RunVqe, RejectsBadStart) {
    auto p = load_problem("h2_0.74");
    VqeOptions opt;
    opt.theta0 = {0.1, 0.2};
    EXPECT_THROW(run_vqe(p.circuit, exact_fn(p.circuit, p.h.h), opt), ConfigError);
    opt.theta0 = {std::nan("")};
    EXPECT_THROW(run_vqe(p.circuit, exact_fn(p.circuit, p.h.h), opt), ConfigError);
}

TEST(RunVqe, EstimatorFailureCarriesIteration) {
    auto p = load_problem("h2_0.74");
    int calls = 0;
    EnergyFn bad = [&](const std::vector<double> &, uint64_t) -> EnergyEstimate {
        if (++calls > 1) throw EstimationError("boom");
        return {};
    };
    try {
        run_vqe(p.circuit, bad, {});
        FAIL();
    } catch (const std::runtime_error &e) {
        EXPECT_NE(std::string(e.what()).find("iteration 1"), std::string::npos);
    }
}

TEST(RunVqe, NoisyTraceIsReproducible) {
    auto p = load_problem("h2_0.74");
    auto cfg = calibrated_config(p.h.n_qubits());
    cfg.vqe.max_iterations = 4;
    cfg.cdr_shots = 5000;
    auto once = [&] {
        Pipeline pipe(p.h, p.ansatz, p.circuit, cfg);
        pipe.prepare(21);
        std::string out;
        pipe.optimize([&](const IterationRecord &r) { out += r.to_json().dump() + "\n"; });
        return out;
    };
    std::string a = once();
    EXPECT_EQ(a, once());
    EXPECT_NE(a.find("\"rem_cf\""), std::string::npos);
}

TEST(Stages, ParseAndEcho) {
    auto s = StageSet::parse("rem,cf");
    EXPECT_TRUE(s.rem && s.cf && !s.sv && !s.cmx);
    EXPECT_EQ(s.str(), "rem,cf");
    EXPECT_EQ(StageSet::parse("none").str(), "none");
    EXPECT_EQ(StageSet::parse("all").str(), "rem,cf,sv,cmx");
    EXPECT_THROW(StageSet::parse("rem,zne"), ConfigError);
    EXPECT_EQ(parse_loop_estimator("rem_cf"), LoopEstimator::RemCf);
    EXPECT_THROW(parse_loop_estimator("magic"), ConfigError);
}

TEST(EvaluateFinal, NoiselessStagesAgree) {
    auto p = load_problem("h2_0.74");
    PipelineConfig cfg;
    cfg.shots = 200000;
    Pipeline pipe(p.h, p.ansatz, p.circuit, cfg);
    pipe.prepare(3);
    auto rep = pipe.evaluate_final({0.11}, 8);
    for (const char *k : {"raw", "rem", "rem_cf", "rem_cf_sv", "cmx"}) {
        ASSERT_TRUE(rep.stages.count(k)) << k;
        const auto &v = rep.stages.at(k);
        if (std::string(k) == "cmx") continue;  // extrapolates below <H>
        EXPECT_NEAR(v.energy, rep.numerical, 4 * std::sqrt(v.variance) + 1e-9) << k;
    }
    EXPECT_EQ(rep.final_stage_name(), "cmx");
    EXPECT_NEAR(*rep.exact, p.e_fci, 1e-7);
}

TEST(EvaluateFinal, StageListIsHonoured) {
    auto p = load_problem("h2_0.74");
    auto cfg = calibrated_config(p.h.n_qubits());
    cfg.stages = StageSet::parse("rem,cf");
    Pipeline pipe(p.h, p.ansatz, p.circuit, cfg);
    pipe.prepare(3);
    auto rep = pipe.evaluate_final({0.11}, 8);
    EXPECT_EQ(rep.stages.size(), 3u);
    EXPECT_EQ(rep.final_stage_name(), "rem_cf");
    EXPECT_EQ(rep.to_json()["stages"].size(), 3u);
}

TEST(EvaluateFinal, NoisyH2StagesImproveInOrder) {
    auto p = load_problem("h2_0.74");
    // noiseless optimum of the single shared parameter
    Pipeline clean(p.h, p.ansatz, p.circuit, noiseless_config());
    auto theta = clean.optimize().theta;
    std::vector<double> raw, rem, cf, fin;
    for (uint64_t s = 0; s < 20; ++s) {
        Pipeline pipe(p.h, p.ansatz, p.circuit, calibrated_config(p.h.n_qubits()));
        pipe.prepare(100 + s);
        auto rep = pipe.evaluate_final(theta, 200 + s);
        raw.push_back(std::abs(rep.stages.at("raw").energy - p.e_fci));
        rem.push_back(std::abs(rep.stages.at("rem").energy - p.e_fci));
        cf.push_back(std::abs(rep.stages.at("rem_cf").energy - p.e_fci));
        fin.push_back(std::abs(rep.final_stage().energy - p.e_fci));
    }
    EXPECT_GE(median(raw), median(rem));
    EXPECT_GE(median(rem), median(cf));
    EXPECT_LE(median(fin), median(raw) / 10);
}
