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

#include <unsupported/Eigen/MatrixFunctions>

#include "test_util.h"
#include "vqeforge/mitigation.h"

using namespace vqeforge;
using namespace vqeforge::testing;

namespace {

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

std::vector<std::vector<double>> basis_distributions(const MeasurementPlan &p, const StateVector &s) {
    std::vector<std::vector<double>> d;
    for (auto &b : p.bases) {
        auto r = s;
        r.rotate_to_basis(b);
        d.push_back(r.probabilities());
    }
    return d;
}

struct H2Setup {
    QubitHamiltonian h = load_qubit("h2_0.74");
    Ansatz a = build_ansatz(h, {});
    CompiledCircuit c = compile(a, h, default_layout(h));
    StateVector init = StateVector(4, 0);  // prep gates live in the circuit
};

}  // namespace

// ---- readout ----

TEST(Calibration, PerfectDataIsIdentity) {
    auto d = calibration_experiment(3, {}, 1000, 1);
    auto c = learn_calibration(d);
    for (int q = 0; q < 3; ++q) {
        EXPECT_EQ(c.params[q].eps, 0);
        EXPECT_EQ(c.params[q].gamma, 0);
        auto l = c.lambda(q);
        EXPECT_EQ(l, (std::array<double, 4>{1, 0, 0, 1}));
    }
}

TEST(Calibration, SyntheticFlipsWithinBinomialInterval) {
    const int shots = 100000;
    auto noise = NoiseModel::uniform(0, 0, 0.07, 0.03, 2);
    auto c = learn_calibration(calibration_experiment(2, noise, shots, 5));
    for (int q = 0; q < 2; ++q) {
        EXPECT_NEAR(c.params[q].eps, 0.07, 3 * std::sqrt(0.07 * 0.93 / shots));
        EXPECT_NEAR(c.params[q].gamma, 0.03, 3 * std::sqrt(0.03 * 0.97 / shots));
    }
}

TEST(Calibration, ClosedLoopPerQubit) {
    NoiseModel noise;
    noise.readout = {{0.01, 0.05}, {0.08, 0.02}, {0.03, 0.03}, {0.0, 0.1}};
    const int shots = 50000;
    // a mixed prepared set also covers both values on every qubit
    auto c = learn_calibration(calibration_experiment(4, noise, shots, 9, {0b0101, 0b1010, 0b0011}));
    for (int q = 0; q < 4; ++q) {
        auto [n0, n1] = c.support[q];
        auto want = noise.readout[q];
        EXPECT_NEAR(c.params[q].eps, want.eps, 3 * std::sqrt(want.eps * (1 - want.eps) / n0) + 1e-12);
        EXPECT_NEAR(c.params[q].gamma, want.gamma, 3 * std::sqrt(want.gamma * (1 - want.gamma) / n1) + 1e-12);
    }
}

TEST(Calibration, Errors) {
    EXPECT_THROW(learn_calibration(calibration_experiment(2, {}, 10, 1, {0b00, 0b01})), CalibrationError);
    CalibrationData d{1, {0, 1}, {{{1, 6}, {0, 4}}, {{0, 6}, {1, 4}}}};
    EXPECT_THROW(learn_calibration(d), CalibrationError);
    CalibrationMatrix bad;
    bad.params = {{0.6, 0.5}};
    EXPECT_THROW(bad.inverse(0), CalibrationError);
}

TEST(Rem, IdentityCalibrationMatchesRawEstimator) {
    auto h = load_qubit("h2_0.74");
    auto plan = derandomize(build_groups(h.h), 3000, 1);
    Ensemble ens{4, {random_state(4, 2)}, {1.0}, 1.0};
    auto noise = NoiseModel::uniform(0, 0, 0.05, 0.02, 4);
    auto recs = measure_plan(plan, ens, noise, 3);
    auto raw = estimate(plan, recs, h.h.identity_offset);
    auto rem = rem_estimate(plan, recs, h.h.identity_offset, CalibrationMatrix::from_noise({}, 4));
    EXPECT_EQ(raw.value, rem.value);
}

TEST(Rem, SingleQubitFactors) {
    CalibrationMatrix c;
    c.params = {{0.1, 0.1}};
    EXPECT_NEAR(c.z_factor(0, 0), 1.25, 1e-15);
    EXPECT_NEAR(c.z_factor(0, 1), -1.25, 1e-15);
    MeasurementPlan p = build_groups([] {
        PauliSum s(1);
        s.add(PauliString::parse("Z"), 1.0);
        return s;
    }());
    auto noisy = apply_readout({1.0, 0.0}, NoiseModel::uniform(0, 0, 0.1, 0.1, 1));
    EXPECT_NEAR(noisy[0], 0.9, 1e-15);
    EXPECT_NEAR(estimate_distributions(p, {noisy}, 0, rem_value(c)), 1.0, 1e-15);
}

TEST(Rem, ExactInverseInInfiniteShotLimit) {
    for (uint64_t seed = 0; seed < 8; ++seed) {
        int n = 1 + seed % 4;
        auto h = random_sum(n, 20, seed);
        auto s = random_state(n, seed + 30);
        NoiseModel noise;
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0, 0.2);
        for (int q = 0; q < n; ++q) noise.readout.push_back({u(rng), u(rng)});
        auto plan = build_groups(h);
        auto dists = basis_distributions(plan, s);
        for (auto &d : dists) d = apply_readout(d, noise);
        double mitigated =
            estimate_distributions(plan, dists, h.identity_offset, rem_value(CalibrationMatrix::from_noise(noise, n)));
        EXPECT_NEAR(mitigated, s.expectation(h), 1e-10);
        EXPECT_GT(std::abs(estimate_distributions(plan, dists, h.identity_offset) - s.expectation(h)), 1e-6);
    }
}

TEST(Rem, RemovesReadoutBiasOnH2) {
    H2Setup st;
    auto ens = simulate(st.c, st.c.angles({0.2}), {}, {1, 1, 1});
    const double exact = ens.expectation(st.h.h.identity_offset == 0 ? st.h.h : st.h.h);
    auto noise = NoiseModel::uniform(0, 0, 0.05, 0.05, 4);
    auto cal = CalibrationMatrix::from_noise(noise, 4);
    auto plan = derandomize(optimize_distribution(build_groups(st.h.h), 1e4), 10000, 1);
    const int runs = 200;
    std::vector<double> raw, rem;
    for (int r = 0; r < runs; ++r) {
        auto recs = measure_plan(plan, ens, noise, 500 + r);
        raw.push_back(estimate(plan, recs, st.h.h.identity_offset).value);
        rem.push_back(rem_estimate(plan, recs, st.h.h.identity_offset, cal).value);
    }
    auto bias_in_se = [&](const std::vector<double> &v) {
        double m = 0, m2 = 0;
        for (double x : v) m += x / v.size();
        for (double x : v) m2 += (x - m) * (x - m) / (v.size() - 1);
        return std::abs(m - exact) / std::sqrt(m2 / v.size());
    };
    EXPECT_GT(bias_in_se(raw), 5);
    EXPECT_LT(bias_in_se(rem), 3);
}

// ---- CDR ----

TEST(Cdr, ScreenClassifiesH2Terms) {
    H2Setup st;
    auto zz = PauliString::parse("ZZII"), xxyy = PauliString::parse("XXYY");
    auto screen = cdr_screen(st.c, st.init, {zz, xxyy});
    ASSERT_EQ(screen.changed, std::vector<PauliString>{xxyy});
    ASSERT_TRUE(screen.unchanged.count(zz));
    EXPECT_NEAR(screen.unchanged.at(zz), prepare_initial({}, st.h).expectation(zz), 1e-12);
    CdrOptions zero;
    zero.sigma_T = zero.mu_T = 0;
    EXPECT_EQ(cdr_screen(st.c, st.init, {zz, xxyy}, zero).changed.size(), 2u);
}

TEST(Cdr, NoiselessBackendGivesIdentityFit) {
    H2Setup st;
    auto screen = cdr_screen(st.c, st.init, st.h.h.strings());
    auto ideal = [&](const std::vector<double> &a, const std::vector<PauliString> &obs) {
        auto s = run_from(st.c, a, st.init);
        std::vector<double> v;
        for (auto &p : obs) v.push_back(s.expectation(p));
        return v;
    };
    auto model = cdr_train(st.c, st.init, screen, ideal);
    for (auto &p : screen.changed) {
        auto &f = model.fits.at(p);
        EXPECT_NEAR(f.a, 1, 1e-6) << p.str();
        EXPECT_NEAR(f.b, 0, 1e-6);
        EXPECT_NEAR(f.r2, 1, 1e-6);
    }
}

TEST(Cdr, GlobalDepolarizingSlope) {
    H2Setup st;
    auto screen = cdr_screen(st.c, st.init, st.h.h.strings());
    auto scaled = [&](const std::vector<double> &a, const std::vector<PauliString> &obs) {
        auto s = run_from(st.c, a, st.init);
        std::vector<double> v;
        for (auto &p : obs) v.push_back(0.8 * s.expectation(p));
        return v;
    };
    auto model = cdr_train(st.c, st.init, screen, scaled);
    for (auto &p : screen.changed) {
        EXPECT_NEAR(model.fits.at(p).a, 1.25, 0.05 * 1.25) << p.str();
        EXPECT_LT(std::abs(model.fits.at(p).b), 0.02);
    }
}

TEST(Cdr, GateNoiseTrainingPairsAreCollinear) {
    H2Setup st;
    auto xxyy = PauliString::parse("XXYY");
    auto screen = cdr_screen(st.c, st.init, {xxyy});
    ASSERT_EQ(screen.changed.size(), 1u);
    NoiseModel noise = NoiseModel::uniform(0, 0.008, 0, 0, 4);
    int call = 0;
    auto noisy = [&](const std::vector<double> &a, const std::vector<PauliString> &obs) {
        auto ens = simulate(st.c, a, noise, {2000, derive_seed(4, call++), 1});
        std::vector<double> v;
        for (auto &p : obs) v.push_back(ens.expectation(p));
        return v;
    };
    auto model = cdr_train(st.c, st.init, screen, noisy);
    EXPECT_GT(model.fits.at(xxyy).r2, 0.98);
    EXPECT_GT(model.fits.at(xxyy).a, 1.0);
}

TEST(Cdr, DispersionRuleAndWarning) {
    H2Setup st;
    auto screen = cdr_screen(st.c, st.init, st.h.h.strings());
    auto ideal = [&](const std::vector<double> &a, const std::vector<PauliString> &obs) {
        auto s = run_from(st.c, a, st.init);
        std::vector<double> v;
        for (auto &p : obs) v.push_back(s.expectation(p));
        return v;
    };
    auto model = cdr_train(st.c, st.init, screen, ideal);
    EXPECT_GE(model.instances, 10);
    EXPECT_LE(model.instances, 200);
    for (auto &p : screen.changed) {
        if (model.fits.at(p).bins < 4)
            EXPECT_FALSE(model.warnings.empty());
        else
            EXPECT_GE(model.fits.at(p).points, 10);
    }
    CdrOptions small;
    small.R = 5;
    EXPECT_THROW(cdr_train(st.c, st.init, screen, ideal, small), ConfigError);
}

TEST(Cdr, UnchangedObservablesBypassRegression) {
    H2Setup st;
    auto base = st.h.h.strings();
    auto ideal = [&](const std::vector<double> &a, const std::vector<PauliString> &obs) {
        auto s = run_from(st.c, a, st.init);
        std::vector<double> v;
        for (auto &p : obs) v.push_back(0.9 * s.expectation(p) + 0.01);
        return v;
    };
    auto m1 = cdr_train(st.c, st.init, cdr_screen(st.c, st.init, base), ideal);
    auto extra = base;
    extra.push_back(PauliString::parse("ZZII"));
    extra.push_back(PauliString::parse("IIZZ"));
    auto m2 = cdr_train(st.c, st.init, cdr_screen(st.c, st.init, extra), ideal);
    for (auto &[p, f] : m1.fits) {
        if (!f.changed) continue;
        EXPECT_EQ(m2.fits.at(p).a, f.a);
        EXPECT_EQ(m2.fits.at(p).b, f.b);
    }
}

TEST(Cdr, ApplyArithmetic) {
    CdrModel m;
    CdrFit f;
    f.a = 1.25;
    f.b = 0;
    auto z = PauliString::parse("Z");
    m.fits[z] = f;
    EXPECT_NEAR(m.apply(z, -0.4), -0.5, 1e-15);
    EXPECT_EQ(cdr_identity({z}).apply(z, 0.3), 0.3);
    EXPECT_THROW(m.apply(PauliString::parse("X"), 0.1), MitigationError);
}

TEST(Cdr, ApplyRecombinesPlan) {
    PauliSum h(2, 0.5);
    h.add(PauliString::parse("ZZ"), 2.0);
    h.add(PauliString::parse("XI"), -1.0);
    auto plan = build_groups(h);
    EstimatorOutput rem;
    rem.per_observable.resize(2);
    rem.per_observable[0].value = 0.4;   // ZZ
    rem.per_observable[1].value = -0.2;  // XI
    auto id = cdr_identity(plan.observables);
    EXPECT_NEAR(cdr_apply(id, plan, rem, 0.5), 0.5 + 0.8 + 0.2, 1e-15);
    CdrModel m = id;
    m.fits[PauliString::parse("XI")].changed = false;
    m.fits[PauliString::parse("XI")].constant = 0.1;
    EXPECT_NEAR(cdr_apply(m, plan, rem, 0.5), 0.5 + 0.8 - 0.1, 1e-15);
}

// ---- symmetry verification ----

TEST(Sv, TrivialAndErrors) {
    EXPECT_EQ(symmetry_verify(-1.1, -1.1, 1.0), -1.1);
    EXPECT_THROW(symmetry_verify(-1.1, 0.3, -1.0), MitigationError);
}

TEST(Sv, MatchesDenseProjector) {
    for (uint64_t seed = 0; seed < 6; ++seed) {
        int n = 1 + seed;
        auto h = random_sum(n, 25, seed);
        // build H commuting with the parity: keep even-X-weight... strings with an even number of X/Y letters
        PauliSum hp(n, h.identity_offset);
        for (auto &[p, c] : h.terms())
            if (std::popcount(p.x) % 2 == 0) hp.add(p, c);
        // mixed state from a few random pure states
        Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(size_t{1} << n, size_t{1} << n);
        std::vector<StateVector> states;
        for (int k = 0; k < 3; ++k) {
            states.push_back(random_state(n, seed * 10 + k));
            Eigen::VectorXcd v = states.back().to_eigen();
            rho += v * v.adjoint() / 3.0;
        }
        Eigen::MatrixXcd hm = dense_matrix(hp), sm = dense_matrix(parity_string(n));
        Eigen::MatrixXcd pi = (Eigen::MatrixXcd::Identity(rho.rows(), rho.cols()) + sm) / 2.0;
        double want = (hm * pi * rho * pi).trace().real() / (pi * rho).trace().real();
        auto hs = times_parity(hp);
        double eh = (hm * rho).trace().real(), ehs = (dense_matrix(hs) * rho).trace().real(),
               es = (sm * rho).trace().real();
        EXPECT_NEAR(symmetry_verify(eh, ehs, es), want, 1e-10) << n;
    }
}

TEST(Sv, H2BitFlipMixture) {
    H2Setup st;
    auto s = run(st.c, st.c.angles({0.2}));
    Eigen::VectorXcd clean = s.to_eigen();
    auto flipped = s;
    flipped.apply_pauli(PauliString::parse("XIII"));
    Eigen::VectorXcd bad = flipped.to_eigen();
    Eigen::MatrixXcd rho = 0.9 * clean * clean.adjoint() + 0.1 * bad * bad.adjoint();
    auto &h = st.h.h;
    Eigen::MatrixXcd hm = dense_matrix(h), sm = dense_matrix(parity_string(4));
    double raw = (hm * rho).trace().real();
    double sv = symmetry_verify(raw, (dense_matrix(times_parity(h)) * rho).trace().real(), (sm * rho).trace().real());
    double e_clean = s.expectation(h);
    EXPECT_LT(std::abs(sv - e_clean), std::abs(raw - e_clean));
    EXPECT_NEAR(sv, e_clean, 1e-10);
}

// ---- CMX ----

TEST(Cmx, EigenstateMoments) {
    auto m = connected_moments(-1.5, 2.25, -3.375);
    EXPECT_NEAR(m.I2, 0, 1e-15);
    EXPECT_NEAR(m.I3, 0, 1e-15);
    auto r = cmx_energy(m);
    EXPECT_TRUE(r.degenerate);
    EXPECT_EQ(r.energy, -1.5);
}

TEST(Cmx, SingleQubitHandExample) {
    double c = std::cos(0.2);
    // <Z> = sin^2 - cos^2 = -cos(0.2); Z^2 = I; Z^3 = Z
    auto m = connected_moments(-c, 1.0, -c);
    EXPECT_NEAR(m.I1, -c, 1e-15);
    EXPECT_NEAR(m.I2, 1 - c * c, 1e-15);
    EXPECT_NEAR(m.I3, 2 * c * (1 - c * c), 1e-15);
    EXPECT_NEAR(m.I3, 0.07737, 1e-5);
    auto r = cmx_energy(m);
    EXPECT_NEAR(r.energy, -1.000203, 1e-6);
    EXPECT_LT(r.energy, -1.0);
    EXPECT_FALSE(r.warning);
}

TEST(Cmx, MomentsMatchEigendecomposition) {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        auto h = random_sum(4, 30, seed);
        auto s = random_state(4, seed + 7);
        Eigen::MatrixXcd hm = dense_matrix(h);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hm);
        Eigen::VectorXcd v = s.to_eigen();
        Eigen::VectorXd w = (es.eigenvectors().adjoint() * v).cwiseAbs2();
        double mu[4] = {0, 0, 0, 0};
        for (int k = 1; k <= 3; ++k)
            for (int i = 0; i < w.size(); ++i) mu[k] += w[i] * std::pow(es.eigenvalues()[i], k);
        double h1 = s.expectation(h), h2 = s.expectation(sum_power(h, 2)), h3 = s.expectation(sum_power(h, 3));
        EXPECT_NEAR(h1, mu[1], 1e-10);
        EXPECT_NEAR(h2, mu[2], 1e-10);
        EXPECT_NEAR(h3, mu[3], 1e-10);
        // cumulants from the spectral measure
        auto m = connected_moments(h1, h2, h3);
        double k2 = 0, k3 = 0;
        for (int i = 0; i < w.size(); ++i) {
            double d = es.eigenvalues()[i] - mu[1];
            k2 += w[i] * d * d;
            k3 += w[i] * d * d * d;
        }
        EXPECT_NEAR(m.I2, k2, 1e-10);
        EXPECT_NEAR(m.I3, k3, 1e-10);
    }
}

TEST(Cmx, TaylorConsistencyWithImaginaryTime) {
    auto h = random_sum(4, 20, 3);
    auto s = random_state(4, 8);
    Eigen::MatrixXcd hm = dense_matrix(h);
    Eigen::VectorXcd v = s.to_eigen();
    auto m = connected_moments(s.expectation(h), s.expectation(sum_power(h, 2)), s.expectation(sum_power(h, 3)));
    double prev = 0;
    for (double beta : {0.02, 0.01}) {
        Eigen::MatrixXcd e = (-beta * hm).exp();
        double rq = (v.dot(hm * e * v) / v.dot(e * v)).real();
        double series = m.I1 - beta * m.I2 + beta * beta / 2 * m.I3;
        double err = std::abs(rq - series);
        EXPECT_LT(err, 10 * std::pow(beta, 3) * h.one_norm() * h.one_norm() * h.one_norm() * h.one_norm());
        if (prev > 0) EXPECT_NEAR(prev / err, 8, 1.5);  // cubic convergence
        prev = err;
    }
}

TEST(Cmx, VariancePropagationMatchesFiniteDifference) {
    MomentSet m = connected_moments(-0.9, 0.95, -1.02);
    m.var1 = 1.0;
    auto e = [](double a, double b, double c) { return cmx_energy(connected_moments(a, b, c)).energy; };
    const double d = 1e-6;
    double da = (e(m.h1 + d, m.h2, m.h3) - e(m.h1 - d, m.h2, m.h3)) / (2 * d);
    double db = (e(m.h1, m.h2 + d, m.h3) - e(m.h1, m.h2 - d, m.h3)) / (2 * d);
    double dc = (e(m.h1, m.h2, m.h3 + d) - e(m.h1, m.h2, m.h3 - d)) / (2 * d);
    for (auto [v1, v2, v3, g] : {std::tuple{1.0, 0.0, 0.0, da}, {0.0, 1.0, 0.0, db}, {0.0, 0.0, 1.0, dc}}) {
        m.var1 = v1;
        m.var2 = v2;
        m.var3 = v3;
        EXPECT_NEAR(cmx_energy(m).variance, g * g, 1e-5 * std::max(1.0, g * g));
    }
}

TEST(Cmx, AscentWarning) {
    // <Z> = cos(0.2) state close to the excited level: I3 < 0
    double c = std::cos(0.2);
    auto r = cmx_energy(connected_moments(c, 1.0, c));
    ASSERT_TRUE(r.warning);
    EXPECT_GT(r.energy, c);
}

TEST(Cmx, ImprovesHighFidelityStates) {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    int better = 0, trials = 500;
    for (int t = 0; t < trials; ++t) {
        // gapped spectrum via a random unitary
        Eigen::MatrixXcd a(16, 16);
        for (int i = 0; i < 16; ++i)
            for (int j = 0; j < 16; ++j) a(i, j) = cplx(g(rng), g(rng));
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
        Eigen::MatrixXcd u = qr.householderQ();
        Eigen::VectorXd ev(16);
        ev[0] = -1;
        for (int i = 1; i < 16; ++i) ev[i] = 0.5 + std::abs(g(rng));
        Eigen::MatrixXcd hm = u * ev.asDiagonal() * u.adjoint();
        // fidelity >= 0.9 with the ground state
        Eigen::VectorXcd rest(16);
        for (auto &x : rest) x = cplx(g(rng), g(rng));
        rest -= u.col(0) * u.col(0).dot(rest);
        rest.normalize();
        double f = 0.9 + 0.1 * std::uniform_real_distribution<double>(0, 1)(rng);
        Eigen::VectorXcd v = std::sqrt(f) * u.col(0) + std::sqrt(1 - f) * rest;
        double h1 = v.dot(hm * v).real(), h2 = v.dot(hm * hm * v).real(), h3 = v.dot(hm * hm * hm * v).real();
        auto r = cmx_energy(connected_moments(h1, h2, h3));
        better += std::abs(r.energy + 1) < std::abs(h1 + 1);
    }
    EXPECT_GE(better, 0.95 * trials);
}
