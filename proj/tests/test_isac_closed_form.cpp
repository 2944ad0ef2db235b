// SPDX-License-Identifier: Apache-2.0
//
// risisac: RIS-aided sensing and ISAC beamforming toolkit
// Copyright (C) 2026 The risisac authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "risisac/isac_closed_form.hpp"

#include <gtest/gtest.h>

using namespace risisac;

namespace {

// Reference deployment: P_T = 1 W, -60 dBm noise, L_T = L_S = 15,
// BS [0,0], target [40,0].
Scene reference_scene() {
    Scene s;
    s.transmit_power = 1.0;
    s.noise_power_sensing = dbm_to_watts(-60.0);
    s.noise_power_comms = dbm_to_watts(-60.0);
    s.l_t = 15;
    s.l_s = 15;
    s.target_position = {40.0, 0.0};
    return s;
}

IsacScenario reference_isac(double rho, std::uint64_t seed = 1) {
    const Scene s = reference_scene();
    IsacScenario sc = isac_scenario_from_scene(s, CVec::Ones(15));
    sc.h_c = make_coupled_channel(sc.a_t, rho, seed, reference_channel_gain(s));
    return sc;
}

IsacScenario random_isac(Rng& rng, int lt) {
    IsacScenario sc;
    const double th = rng.uniform() * 2.0 - 1.0;
    sc.a_t = steering_vector(UlaGeometry(lt), th);
    sc.a_r = steering_vector(UlaGeometry(lt + 1), th);
    sc.a_r_dot = steering_derivative(UlaGeometry(lt + 1), th);
    sc.h_c = rng.complex_normal_vector(lt, 1.0);
    sc.sigma_c2 = 0.1 + rng.uniform();
    sc.sigma_s2 = 0.5;
    sc.sigma_eta2 = 1.0;
    sc.samples = 2;
    sc.budget = 0.5 + 2.0 * rng.uniform();
    return sc;
}

double strong_crb(const IsacScenario& sc) {
    return sc.sigma_s2 * sc.l_s() / (2.0 * sc.sigma_eta2 * sc.samples * sc.a_r_dot.squaredNorm() * sc.a_t.squaredNorm());
}

}  // namespace

TEST(AchievableRate, Examples) {
    const CVec h = Rng(3).complex_normal_vector(5, 1.0);
    CVec w = CVec::Zero(5);
    w[0] = h[1];
    w[1] = -h[0];
    EXPECT_NEAR(achievable_rate(h, w, 1.0), 0.0, 1e-15);
    const CVec matched = h.conjugate() / h.norm();
    EXPECT_NEAR(achievable_rate(h, matched, 0.3), std::log2(1.0 + h.squaredNorm() / 0.3), 1e-12);
    CVec one = CVec::Zero(5);
    one[2] = std::sqrt(0.3) / h[2];
    EXPECT_NEAR(achievable_rate(h, one, 0.3), 1.0, 1e-12);
}

TEST(IsacCrb, Examples) {
    const IsacScenario sc = reference_isac(0.5);
    const CVec w = sc.a_t.conjugate() / std::sqrt(15.0);
    EXPECT_NEAR(isac_crb(w, sc), strong_crb(sc), 1e-12 * strong_crb(sc));
    CVec perp = CVec::Zero(15);
    perp[0] = sc.a_t[1];
    perp[1] = -sc.a_t[0];
    EXPECT_EQ(isac_crb(perp, sc), kInf);
    EXPECT_NEAR(isac_crb(w / std::sqrt(2.0), sc), 2.0 * isac_crb(w, sc), 1e-12 * isac_crb(w, sc));
}

TEST(CouplingCoefficient, Examples) {
    const CVec a = steering_vector(UlaGeometry(8), 0.4);
    EXPECT_NEAR(coupling_coefficient(cplx(2.0, -1.0) * a, a), 1.0, 1e-14);
    Rng rng(12);
    CVec u = rng.complex_normal_vector(8, 1.0);
    u -= a * (a.dot(u) / a.squaredNorm());
    u.normalize();
    EXPECT_NEAR(coupling_coefficient(u, a), 0.0, 1e-14);
    for (double psi : {0.1, 0.7, 1.3}) {
        const CVec h = std::cos(psi) * a.normalized() + std::sin(psi) * u;
        EXPECT_NEAR(coupling_coefficient(h, a), std::cos(psi), 1e-13);
    }
    EXPECT_THROW(coupling_coefficient(CVec::Zero(8), a), DegenerateChannel);
}

TEST(MakeCoupledChannel, HitsTargetCoupling) {
    const CVec a = steering_vector(UlaGeometry(15), 0.2);
    const CVec h1 = make_coupled_channel(a, 1.0, 4, 2.0);
    EXPECT_LT((h1 - 2.0 * a.normalized()).norm(), 1e-14);
    EXPECT_NEAR(std::abs(make_coupled_channel(a, 0.0, 4).dot(a)), 0.0, 1e-13);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const CVec h = make_coupled_channel(a, 0.6, seed, 0.01);
        EXPECT_NEAR(coupling_coefficient(h, a), 0.6, 1e-10);
        EXPECT_NEAR(h.norm(), 0.01, 1e-15);
    }
    EXPECT_THROW(make_coupled_channel(a, 1.2, 1), InvalidInput);
}

TEST(CrbMinBeamformer, FullyAlignedReusesResources) {
    const IsacScenario sc = reference_isac(1.0);
    const double r_max = std::log2(1.0 + sc.h_c.squaredNorm() / sc.sigma_c2);
    for (double r0 : {0.0, 2.0, 10.0, r_max * (1.0 - 1e-12)}) {
        const IsacSolution s = crb_min_beamformer(sc, r0);
        EXPECT_EQ(s.branch, IsacBranch::unconstrained);
        EXPECT_LT((s.w.weights - sc.a_t.conjugate() / std::sqrt(15.0)).norm(), 1e-14);
        EXPECT_NEAR(s.crb, strong_crb(sc), 1e-12 * s.crb);
        EXPECT_NEAR(s.rate, r_max, 1e-9);
    }
}

TEST(CrbMinBeamformer, OrthogonalSubspaces) {
    const IsacScenario sc = reference_isac(0.0);
    const double r_max = max_achievable_rate(sc);
    for (double frac : {0.05, 0.3, 0.7, 0.95}) {
        const double r0 = frac * r_max;
        const IsacSolution s = crb_min_beamformer(sc, r0);
        const double x = (std::exp2(r0) - 1.0) * sc.sigma_c2 / sc.h_c.squaredNorm();
        const double expected = strong_crb(sc) / (1.0 - x);
        EXPECT_NEAR(s.crb, expected, 1e-9 * expected);
        EXPECT_NEAR(s.rate, r0, 1e-9);
    }
}

TEST(CrbMinBeamformer, ZeroRateIsMatchedFilter) {
    const IsacScenario sc = reference_isac(0.3);
    const IsacSolution s = crb_min_beamformer(sc, 0.0);
    EXPECT_EQ(s.branch, IsacBranch::unconstrained);
    EXPECT_NEAR(s.crb, strong_crb(sc), 1e-12 * s.crb);
}

TEST(CrbMinBeamformer, InfeasibleCarriesMaxRate) {
    const IsacScenario sc = reference_isac(0.3);
    const double r_max = max_achievable_rate(sc);
    try {
        crb_min_beamformer(sc, r_max + 0.1);
        FAIL() << "expected Infeasible";
    } catch (const Infeasible& e) {
        EXPECT_NEAR(e.max_achievable(), r_max, 1e-12);
    }
    EXPECT_THROW(crb_min_beamformer(sc, -1.0), InvalidInput);
}

TEST(CrbMinBeamformer, FeasibleOnRandomInstances) {
    Rng rng(2024);
    for (int i = 0; i < 1000; ++i) {
        const IsacScenario sc = random_isac(rng, 2 + static_cast<int>(rng.uniform() * 10));
        const double r0 = rng.uniform() * max_achievable_rate(sc);
        const IsacSolution s = crb_min_beamformer(sc, r0);
        EXPECT_LE(s.w.power(), sc.budget + 1e-12);
        EXPECT_GE(s.rate, r0 - 1e-9);
        if (s.branch == IsacBranch::boundary) EXPECT_NEAR(s.rate, r0, 1e-9);
    }
}

TEST(CrbMinBeamformer, DominatesRandomSpanSearch) {
    Rng rng(77);
    for (int inst = 0; inst < 100; ++inst) {
        const IsacScenario sc = random_isac(rng, 4);
        const double r0 = rng.uniform() * max_achievable_rate(sc);
        const IsacSolution s = crb_min_beamformer(sc, r0);
        const double q = sc.sigma_c2 * (std::exp2(r0) - 1.0);
        // Orthonormal basis of span{conj(h_c), conj(a_t)} built independently.
        const CVec e1 = sc.h_c.conjugate().normalized();
        CVec e2 = sc.a_t.conjugate() - e1 * e1.dot(sc.a_t.conjugate());
        e2.normalize();
        double best_gain = 0.0;
        for (int k = 0; k < 10000; ++k) {
            // Sample the sphere of radius sqrt(P_T) in the 4-real-dimensional span.
            cplx c1 = rng.complex_normal(1.0), c2 = rng.complex_normal(1.0);
            const double n = std::sqrt(std::norm(c1) + std::norm(c2));
            const double r = std::sqrt(sc.budget);
            const CVec w = (c1 / n * r) * e1 + (c2 / n * r) * e2;
            if (std::norm((sc.h_c.transpose() * w)(0)) < q) continue;
            best_gain = std::max(best_gain, std::norm((sc.a_t.transpose() * w)(0)));
        }
        const double cf_gain = std::norm((sc.a_t.transpose() * s.w.weights)(0));
        EXPECT_GE(cf_gain, best_gain * (1.0 - 1e-6));
    }
}

TEST(CrbMinBeamformer, BranchContinuity) {
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
        const IsacScenario sc = random_isac(rng, 6);
        const double q_star = sc.budget * std::norm(sc.h_c.dot(sc.a_t)) / sc.a_t.squaredNorm();
        const double r_star = std::log2(1.0 + q_star / sc.sigma_c2);
        const IsacSolution below = crb_min_beamformer(sc, r_star * (1.0 - 1e-12));
        const IsacSolution above = crb_min_beamformer(sc, std::min(r_star * (1.0 + 1e-12), max_achievable_rate(sc)));
        EXPECT_EQ(below.branch, IsacBranch::unconstrained);
        EXPECT_EQ(above.branch, IsacBranch::boundary);
        EXPECT_NEAR(below.crb, above.crb, 1e-8 * below.crb);
    }
}

TEST(TradeoffCurve, MonotoneInRateAndCoupling) {
    const Scene s = reference_scene();
    const IsacScenario tmpl = isac_scenario_from_scene(s, CVec::Ones(15));
    const std::vector<double> rhos = {0.0, 0.5, 1.0};
    std::vector<double> r0;
    for (int i = 0; i <= 24; ++i) r0.push_back(i);
    const auto rows = tradeoff_curve(tmpl, reference_channel_gain(s), rhos, r0, 9);
    ASSERT_EQ(rows.size(), rhos.size() * r0.size());
    for (std::size_t j = 0; j < r0.size(); ++j) {
        for (std::size_t i = 0; i < rhos.size(); ++i) {
            const auto& row = rows[i * r0.size() + j];
            if (!row.crb) continue;
            if (j > 0 && rows[i * r0.size() + j - 1].crb) EXPECT_GE(*row.crb, *rows[i * r0.size() + j - 1].crb * (1 - 1e-12));
            if (i > 0 && rows[(i - 1) * r0.size() + j].crb) EXPECT_LE(*row.crb, *rows[(i - 1) * r0.size() + j].crb * (1 + 1e-12));
        }
    }
    // rho = 1 column: flat over every feasible R0.
    const double first = *rows[2 * r0.size()].crb;
    int feasible = 0;
    for (std::size_t j = 0; j < r0.size(); ++j)
        if (rows[2 * r0.size() + j].crb) {
            EXPECT_NEAR(*rows[2 * r0.size() + j].crb, first, 1e-12 * first);
            ++feasible;
        }
    EXPECT_GT(feasible, 10);
    EXPECT_FALSE(rows.back().crb.has_value());
    EXPECT_THROW(tradeoff_curve(tmpl, 1.0, {}, r0, 1), InvalidInput);
}
