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

#pragma once

#include "risisac/channel_builder.hpp"
#include "risisac/parallel.hpp"
#include "risisac/sensing_engine.hpp"

#include <optional>
#include <vector>

namespace risisac {

// Single-user ISAC link without RIS. Rates and the sensing gain use the
// transpose form (h_c^T w, a_t^T w); the coupling coefficient uses h_c^H a_t.
struct IsacScenario {
    CVec a_t;        // L_T
    CVec a_r;        // L_S
    CVec a_r_dot;    // L_S
    CVec h_c;        // L_T
    double sigma_c2 = 1e-9;
    double sigma_s2 = 1e-9;
    double sigma_eta2 = 1.0;
    int samples = 1;
    double budget = 1.0;

    int l_s() const { return static_cast<int>(a_r.size()); }

    void validate() const {
        if (a_t.size() < 1 || a_r.size() < 1) throw InvalidInput("IsacScenario: empty steering vectors");
        detail::require_same_size(a_r.size(), a_r_dot.size(), "IsacScenario a_r_dot");
        detail::require_same_size(a_t.size(), h_c.size(), "IsacScenario h_c");
        detail::require_positive(sigma_c2, "sigma_c^2");
        detail::require_positive(sigma_s2, "sigma_s^2");
        detail::require_positive(sigma_eta2, "sigma_eta^2");
        detail::require_positive(budget, "P_T");
        if (samples < 1) throw InvalidInput("IsacScenario: samples must be >= 1");
    }
};

// Steering data from the scene geometry; h_c is supplied by the caller.
inline IsacScenario isac_scenario_from_scene(const Scene& s, const CVec& h_c) {
    const LinkSet L = build_links(s);
    IsacScenario sc;
    sc.a_t = L.a_t;
    sc.a_r = L.a_r;
    sc.a_r_dot = L.a_r_dot;
    sc.h_c = h_c;
    sc.sigma_c2 = s.noise_power_comms;
    sc.sigma_s2 = s.noise_power_sensing;
    sc.sigma_eta2 = s.target_gain_var;
    sc.samples = s.samples;
    sc.budget = s.transmit_power;
    sc.validate();
    return sc;
}

enum class IsacBranch { unconstrained, boundary };

struct IsacSolution {
    Beamformer w;
    cplx lambda1{0.0};
    cplx lambda2{0.0};
    IsacBranch branch = IsacBranch::unconstrained;
    double rate = 0.0;
    double crb = kInf;
};

// log2(1 + |h_c^T w|^2 / sigma_c^2)
inline double achievable_rate(const CVec& h_c, const CVec& w, double sigma_c2) {
    detail::require_same_size(h_c.size(), w.size(), "achievable_rate");
    detail::require_positive(sigma_c2, "sigma_c^2");
    const cplx g = (h_c.transpose() * w)(0);
    return std::log2(1.0 + std::norm(g) / sigma_c2);
}

// sigma_s^2 L_S / (2 T sigma_eta^2 ||adot_r||^2 |a_t^T w|^2)
inline double isac_crb(const CVec& w, const IsacScenario& sc) {
    detail::require_same_size(sc.a_t.size(), w.size(), "isac_crb");
    const double g = std::norm((sc.a_t.transpose() * w)(0));
    if (g == 0.0) return kInf;
    return sc.sigma_s2 * sc.l_s() / (2.0 * sc.samples * sc.sigma_eta2 * sc.a_r_dot.squaredNorm() * g);
}

// |h_c^H a_t| / (||h_c|| ||a_t||)
inline double coupling_coefficient(const CVec& h_c, const CVec& a_t) {
    detail::require_same_size(h_c.size(), a_t.size(), "coupling_coefficient");
    const double nh = h_c.norm();
    const double na = a_t.norm();
    if (!(nh > 0.0) || !(na > 0.0)) throw DegenerateChannel("coupling_coefficient: zero vector");
    return std::min(1.0, std::abs(h_c.dot(a_t)) / (nh * na));
}

// h_c = gain (rho a_t/||a_t|| + sqrt(1-rho^2) u), u a seeded unit vector
// orthogonal to a_t. ||h_c|| = gain.
inline CVec make_coupled_channel(const CVec& a_t, double rho, std::uint64_t seed, double gain = 1.0) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidInput("make_coupled_channel: rho must be in [0,1]");
    detail::require_positive(gain, "channel gain");
    const double na = a_t.norm();
    if (!(na > 0.0)) throw DegenerateChannel("make_coupled_channel: zero steering vector");
    const CVec a_hat = a_t / na;
    CVec u;
    if (a_t.size() == 1) {
        if (rho < 1.0) throw InvalidInput("make_coupled_channel: rho < 1 needs at least two antennas");
        u = CVec::Zero(1);
    } else {
        Rng rng(seed);
        do {
            u = rng.complex_normal_vector(a_t.size(), 1.0);
            u -= a_hat * a_hat.dot(u);
        } while (u.norm() < 1e-6);
        u.normalize();
        u -= a_hat * a_hat.dot(u);  // second pass for orthogonality to rounding level
        u.normalize();
    }
    return gain * (rho * a_hat + std::sqrt(std::max(0.0, 1.0 - rho * rho)) * u);
}

// Maximum rate over the budget ball: log2(1 + P_T ||h_c||^2 / sigma_c^2).
inline double max_achievable_rate(const IsacScenario& sc) {
    return std::log2(1.0 + sc.budget * sc.h_c.squaredNorm() / sc.sigma_c2);
}

// CRB-minimizing beamformer under |h_c^T w|^2 >= sigma_c^2 (2^R0 - 1) and
// ||w||^2 <= P_T. With g = conj(a_t) and c = conj(h_c)/||h_c|| both
// constraints and the objective are Hermitian forms in w:
//   unconstrained if P_T |h_c^H a_t|^2 >= L_T q:  w = sqrt(P_T) g / ||g||
//   otherwise:  w = lambda1 c + lambda2 a~,  a~ = unit(g - (c^H g) c),
//               lambda1 = sqrt(x) e^{j arg(c^H g)}, lambda2 = sqrt(P_T - x) e^{j arg(a~^H g)},
//               x = q / ||h_c||^2.
inline IsacSolution crb_min_beamformer(const IsacScenario& sc, double r0) {
    sc.validate();
    if (!(r0 >= 0.0) || !std::isfinite(r0)) throw InvalidInput("crb_min_beamformer: R0 must be finite and >= 0");
    const double r_max = max_achievable_rate(sc);
    const double hn2 = sc.h_c.squaredNorm();
    if (r0 > r_max || hn2 == 0.0) throw Infeasible("crb_min_beamformer: rate threshold above capacity", r_max);

    const double q = sc.sigma_c2 * std::expm1(r0 * std::log(2.0));
    const double lt = sc.a_t.squaredNorm();
    const CVec g = sc.a_t.conjugate();

    IsacSolution sol;
    sol.w.budget = sc.budget;
    const double coupling_gain = std::norm(sc.h_c.dot(sc.a_t));
    if (sc.budget * coupling_gain >= lt * q) {
        sol.branch = IsacBranch::unconstrained;
        sol.w.weights = g * std::sqrt(sc.budget / lt);
    } else {
        sol.branch = IsacBranch::boundary;
        const CVec c = sc.h_c.conjugate() / std::sqrt(hn2);
        const cplx cg = c.dot(g);
        const double x = std::min(q / hn2, sc.budget);
        auto phase = [](cplx z) { return std::abs(z) > 0.0 ? z / std::abs(z) : cplx(1.0); };
        sol.lambda1 = std::sqrt(x) * phase(cg);
        CVec resid = g - cg * c;
        const double rn = resid.norm();
        if (rn > 1e-14 * std::sqrt(lt)) {
            const CVec a_tilde = resid / rn;
            sol.lambda2 = std::sqrt(std::max(0.0, sc.budget - x)) * phase(a_tilde.dot(g));
            sol.w.weights = sol.lambda1 * c + sol.lambda2 * a_tilde;
        } else {
            sol.w.weights = std::sqrt(sc.budget) * phase(cg) * c;
            sol.lambda1 = std::sqrt(sc.budget) * phase(cg);
        }
    }
    sol.rate = achievable_rate(sc.h_c, sol.w.weights, sc.sigma_c2);
    sol.crb = isac_crb(sol.w.weights, sc);
    return sol;
}

struct TradeoffRow {
    double rho = 0.0;
    double r0 = 0.0;
    std::optional<double> rate;  // empty when R0 is infeasible
    std::optional<double> crb;
};

// Sweeps (rho, R0). h_c is re-synthesized per rho with a fixed residual
// direction (one seed for the whole sweep) and norm `channel_gain`.
inline std::vector<TradeoffRow> tradeoff_curve(const IsacScenario& tmpl, double channel_gain,
                                               const std::vector<double>& rhos, const std::vector<double>& r0_grid,
                                               std::uint64_t seed, int threads = 1) {
    if (rhos.empty() || r0_grid.empty()) throw InvalidInput("tradeoff_curve: grids must be non-empty");
    std::vector<TradeoffRow> rows(rhos.size() * r0_grid.size());
    parallel_for(rows.size(), threads, [&](std::size_t i) {
        IsacScenario sc = tmpl;
        const double rho = rhos[i / r0_grid.size()];
        const double r0 = r0_grid[i % r0_grid.size()];
        sc.h_c = make_coupled_channel(sc.a_t, rho, seed, channel_gain);
        TradeoffRow row;
        row.rho = rho;
        row.r0 = r0;
        try {
            const IsacSolution s = crb_min_beamformer(sc, r0);
            row.rate = s.rate;
            row.crb = s.crb;
        } catch (const Infeasible&) {
        }
        rows[i] = row;
    });
    return rows;
}

// Channel norm used for synthetic users: direct-path amplitude at the
// target range times sqrt(L_T), i.e. a user as strong as the target path.
inline double reference_channel_gain(const Scene& s) {
    const double d = (s.target_position - s.bs_position).norm();
    return pathloss_amplitude(d, s.pathloss_exp_direct) * std::sqrt(static_cast<double>(s.l_t));
}

}  // namespace risisac
