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
#include "risisac/isac_closed_form.hpp"
#include "risisac/optim_kernels.hpp"
#include "risisac/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <optional>
#include <string>
#include <vector>

namespace risisac {

// f(phi) = -||a_t + F_t phi||^2 |(a_r + F_r phi)^H (h_BU + F_c phi)|^2.
// F_t and F_r carry the RIS path relative to the direct path, so that
// a_t + F_t phi = h_t / alpha_t and -f = ||H^H h_c||^2 with H = h_r h_t^T / beta.
struct CouplingProblem {
    CVec a_t, a_r, h_bu;
    CMat F_t, F_r, F_c;

    int n() const { return static_cast<int>(F_t.cols()); }
};

inline CouplingProblem coupling_problem(const LinkSet& L) {
    if (!L.has_user) throw InvalidInput("coupling_problem: scene has no user");
    if (L.a_t.size() != L.a_r.size())
        throw DimensionMismatch("coupling_problem: H^H h_c needs L_S == L_T");
    if (L.alpha_t == cplx(0.0) || L.alpha_r == cplx(0.0))
        throw DegenerateChannel("coupling_problem: direct paths required (beta = alpha_r alpha_t != 0)");
    CouplingProblem p;
    p.a_t = L.a_t;
    p.a_r = L.a_r;
    p.h_bu = L.h_bu;
    const int n = L.n_ris();
    if (n == 0) {
        p.F_t = CMat::Zero(L.a_t.size(), 0);
        p.F_r = CMat::Zero(L.a_r.size(), 0);
        p.F_c = CMat::Zero(L.a_t.size(), 0);
        return p;
    }
    p.F_t = (L.G_t * L.b_target.asDiagonal()) / L.alpha_t;
    p.F_r = (L.G_r * L.b_target.asDiagonal()) / L.alpha_r;
    p.F_c = L.G_t * L.h_ru.asDiagonal();
    return p;
}

inline double coupling_objective(const CouplingProblem& p, const CVec& phi) {
    detail::require_same_size(phi.size(), p.n(), "coupling_objective");
    const CVec ut = p.a_t + p.F_t * phi;
    const CVec u = p.a_r + p.F_r * phi;
    const CVec v = p.h_bu + p.F_c * phi;
    return -ut.squaredNorm() * std::norm(u.dot(v));
}

// d f / d conj(phi). With A = ||u_t||^2, p = u^H v, B = |p|^2:
//   -(B F_t^H u_t + A (conj(p) F_r^H v + p F_c^H u)).
inline CVec coupling_gradient(const CouplingProblem& p, const CVec& phi) {
    detail::require_same_size(phi.size(), p.n(), "coupling_gradient");
    const CVec ut = p.a_t + p.F_t * phi;
    const CVec u = p.a_r + p.F_r * phi;
    const CVec v = p.h_bu + p.F_c * phi;
    const double A = ut.squaredNorm();
    const cplx pv = u.dot(v);
    const double B = std::norm(pv);
    return -(B * (p.F_t.adjoint() * ut) + A * (std::conj(pv) * (p.F_r.adjoint() * v) + pv * (p.F_c.adjoint() * u)));
}

struct RisOptimizationResult {
    RisProfile phi;
    double objective = 0.0;
    std::vector<double> trace;  // of the selected restart
    int iterations = 0;
    bool converged = false;
    int restart = 0;
};

// Projected gradient on the unit-modulus set, multi-start. Restart 0 uses
// `init` when given; other restarts draw profiles from derive_seed(seed, k).
inline RisOptimizationResult optimize_ris_profile(const CouplingProblem& p, const std::optional<CVec>& init,
                                                  const SolverConfig& cfg = {}) {
    cfg.validate();
    const int n = p.n();
    if (init) detail::require_same_size(init->size(), n, "initial RIS profile");
    auto f = [&](const CVec& x) { return coupling_objective(p, x); };
    auto g = [&](const CVec& x) { return coupling_gradient(p, x); };
    auto proj = [](const CVec& x) { return project_unit_modulus(x); };

    auto solve = [&](int k) {
        CVec x0;
        if (k == 0 && init) {
            x0 = *init;
        } else {
            Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(k)));
            x0 = rng.unit_modulus_vector(n);
        }
        RisOptimizationResult r;
        const auto pg = projected_gradient<cplx>(f, g, proj, x0, cfg);
        r.phi = RisProfile::from_phasors(pg.x);
        r.objective = pg.objective;
        r.trace = pg.trace;
        r.iterations = pg.iterations;
        r.converged = pg.converged;
        r.restart = k;
        return r;
    };
    return multi_start(cfg.restarts, solve, [](const RisOptimizationResult& r) { return r.objective; });
}

// ---------------------------------------------------------------------------
// Fisher information over (theta1, theta2, Re beta, Im beta)

struct FimResult {
    Eigen::Matrix4d fim = Eigen::Matrix4d::Zero();
    double crb_theta1 = kInf;
    double condition = kInf;  // of the column-equilibrated FIM
    bool singular = true;
};

namespace detail {

// Linear maps M_k with mean derivative d mu / d param_k = M_k w.
struct FimOperators {
    CMat M[4];
};

inline FimOperators fim_operators(const LinkSet& L, const CVec& phi) {
    const cplx beta = L.alpha_r * L.alpha_t;
    if (beta == cplx(0.0)) throw DegenerateChannel("fim_theta: beta = alpha_r alpha_t must be nonzero");
    const SensingChannels h = build_sensing_channels(L, phi);
    const CVec dht1 = L.alpha_t * L.a_t_dot;
    const CVec dhr1 = L.alpha_r * L.a_r_dot;
    FimOperators op;
    op.M[0] = dhr1 * h.h_t.transpose() + h.h_r * dht1.transpose();
    if (L.n_ris() > 0) {
        const CVec pb = phi.cwiseProduct(L.b_target_dot);
        const CVec dht2 = L.G_t * pb;
        const CVec dhr2 = L.G_r * pb;
        op.M[1] = dhr2 * h.h_t.transpose() + h.h_r * dht2.transpose();
    } else {
        op.M[1] = CMat::Zero(L.a_r.size(), L.a_t.size());
    }
    op.M[2] = (h.h_r * h.h_t.transpose()) / beta;
    op.M[3] = kJ * op.M[2];
    return op;
}

struct CrbEval {
    double crb = kInf;
    Eigen::Vector4d v = Eigen::Vector4d::Zero();  // FIM^+ e1 in original units
    Eigen::Matrix4d fim = Eigen::Matrix4d::Zero();
    double condition = kInf;
};

// [FIM^{-1}]_11 as the inverse Schur complement of theta1. Unidentifiable
// nuisance directions (zero columns, e.g. theta2 under a phase-aligned RIS)
// are removed with a pseudo-inverse of the nuisance block.
inline CrbEval crb_from_operators(const FimOperators& op, const CVec& w, double sigma_s2, int samples) {
    const double c = 2.0 * samples / sigma_s2;
    Eigen::Matrix<cplx, Eigen::Dynamic, 4> D(op.M[0].rows(), 4);
    for (int k = 0; k < 4; ++k) D.col(k) = op.M[k] * w;
    CrbEval e;
    e.fim = c * (D.adjoint() * D).real();

    // Columns at rounding level relative to ||M_k|| ||w|| carry no information.
    Eigen::Vector4d scale;
    const double wn = w.norm();
    for (int k = 0; k < 4; ++k) {
        const bool live = D.col(k).norm() > 1e-12 * op.M[k].norm() * wn;
        scale[k] = live && e.fim(k, k) > 0.0 ? 1.0 / std::sqrt(e.fim(k, k)) : 0.0;
    }
    if (scale[0] == 0.0) return e;
    const Eigen::Matrix4d Fs = scale.asDiagonal() * e.fim * scale.asDiagonal();

    const Eigen::Matrix3d Fnn = Fs.bottomRightCorner<3, 3>();
    const Eigen::Vector3d Fn1 = Fs.bottomLeftCorner<3, 1>();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(Fnn);
    const Eigen::Vector3d lam = es.eigenvalues();
    const double lam_max = std::max(lam.maxCoeff(), 1.0);
    Eigen::Vector3d inv = Eigen::Vector3d::Zero();
    double lam_min_kept = lam_max;
    for (int i = 0; i < 3; ++i)
        if (lam[i] > 1e-10 * lam_max) {
            inv[i] = 1.0 / lam[i];
            lam_min_kept = std::min(lam_min_kept, lam[i]);
        }
    const Eigen::Matrix3d Fnn_pinv = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
    const Eigen::Vector3d x = Fnn_pinv * Fn1;
    const double schur = Fs(0, 0) - Fn1.dot(x);
    if (!(schur > 1e-12 * Fs(0, 0))) return e;

    e.condition = lam_max / std::min(lam_min_kept, schur);
    e.crb = scale[0] * scale[0] / schur;
    Eigen::Vector4d vs;
    vs << 1.0, -x;
    vs /= schur;
    e.v = scale.asDiagonal() * vs;
    return e;
}

}  // namespace detail

// Deterministic-signal Gaussian FIM for y = beta H(theta) w s + z over T
// samples with |s| = 1: FIM = (2T / sigma_s^2) Re{D^H D}.
inline FimResult fim_theta(const LinkSet& L, const CVec& phi, const CVec& w, double sigma_s2, int samples) {
    detail::require_positive(sigma_s2, "sigma_s^2");
    if (samples < 1) throw InvalidInput("fim_theta: samples must be >= 1");
    detail::require_same_size(w.size(), L.a_t.size(), "fim_theta precoder");
    const detail::FimOperators op = detail::fim_operators(L, phi);
    const detail::CrbEval e = detail::crb_from_operators(op, w, sigma_s2, samples);
    FimResult r;
    r.fim = e.fim;
    r.crb_theta1 = e.crb;
    r.condition = e.condition;
    r.singular = !std::isfinite(e.crb);
    return r;
}

// ---------------------------------------------------------------------------
// Rate-constrained CRB minimization

struct RisIsacBeamformerResult {
    Beamformer w;
    double crb = kInf;
    double rate = 0.0;
    int start = 0;  // 0: matched filter, 1: closed form, >= 2: random
};

namespace detail {

inline double rate_of(const CVec& h_c, const CVec& w, double sigma_c2) {
    return std::log2(1.0 + std::norm((h_c.transpose() * w)(0)) / sigma_c2);
}

// Moves w toward the max-rate beamformer until the rate holds; both ends
// are scaled onto the budget sphere.
inline CVec restore_rate(const CVec& w, const CVec& w_comm, const CVec& h_c, double r0, double sigma_c2,
                         double budget) {
    auto on_sphere = [&](const CVec& x) { return CVec(x * (std::sqrt(budget) / x.norm())); };
    CVec base = w.norm() > 0.0 ? on_sphere(w) : w_comm;
    if (rate_of(h_c, base, sigma_c2) >= r0) return base;
    double lo = 0.0, hi = 1.0;
    CVec best = w_comm;
    for (int it = 0; it < 80; ++it) {
        const double t = 0.5 * (lo + hi);
        const CVec mix = (1.0 - t) * base + t * w_comm;
        if (mix.norm() == 0.0) {
            lo = t;
            continue;
        }
        const CVec cand = on_sphere(mix);
        if (rate_of(h_c, cand, sigma_c2) >= r0) {
            hi = t;
            best = cand;
        } else {
            lo = t;
        }
    }
    return best;
}

}  // namespace detail

// Minimizes CRB(theta1) from fim_theta over ||w||^2 <= P_T subject to
// log2(1 + |h_c^T w|^2 / sigma_c^2) >= R0. Each start runs projected
// gradient on log CRB + mu max(0, 1 - |h_c^T w|^2 / q), then is pulled onto
// the feasible set; the best feasible candidate wins. Starts: (0) matched
// filter conj(h_t), (1) the closed form on (h_t, h_c), (2..) seeded random.
inline RisIsacBeamformerResult rate_constrained_crb_beamformer(const Scene& scene, const LinkSet& L, const CVec& phi,
                                                               double r0, const SolverConfig& cfg = {}) {
    cfg.validate();
    if (!(r0 >= 0.0) || !std::isfinite(r0)) throw InvalidInput("rate_constrained_crb_beamformer: R0 must be >= 0");
    const double budget = scene.transmit_power;
    const double sc2 = scene.noise_power_comms;
    const CVec h_c = build_comms_channel(L, phi);
    const CVec h_t = build_sensing_channels(L, phi).h_t;
    const double r_max = std::log2(1.0 + budget * h_c.squaredNorm() / sc2);
    if (r0 > r_max) throw Infeasible("rate_constrained_crb_beamformer: rate threshold above capacity", r_max);
    if (h_t.norm() == 0.0) throw DegenerateChannel("rate_constrained_crb_beamformer: zero sensing channel");

    const detail::FimOperators op = detail::fim_operators(L, phi);
    const double q = sc2 * std::expm1(r0 * std::log(2.0));
    const CVec hc_conj = h_c.conjugate();
    const CVec w_comm = hc_conj * (std::sqrt(budget) / h_c.norm());
    const double c = 2.0 * scene.samples / scene.noise_power_sensing;

    auto crb = [&](const CVec& w) { return detail::crb_from_operators(op, w, scene.noise_power_sensing, scene.samples); };

    std::vector<CVec> starts;
    starts.push_back(h_t.conjugate() * (std::sqrt(budget) / h_t.norm()));
    {
        IsacScenario sc;
        sc.a_t = h_t;
        sc.a_r = L.a_r;
        sc.a_r_dot = L.a_r_dot;
        sc.h_c = h_c;
        sc.sigma_c2 = sc2;
        sc.sigma_s2 = scene.noise_power_sensing;
        sc.budget = budget;
        starts.push_back(crb_min_beamformer(sc, std::min(r0, r_max)).w.weights);
    }
    for (int k = 2; k < std::max(cfg.restarts, 2); ++k) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(k)));
        starts.push_back(rng.complex_normal_vector(h_t.size(), 1.0).normalized() * std::sqrt(budget));
    }

    RisIsacBeamformerResult best;
    bool have = false;
    for (std::size_t k = 0; k < starts.size(); ++k) {
        CVec w = starts[k];
        double mu = 1.0;
        for (int phase = 0; phase < 4; ++phase, mu *= 10.0) {
            auto f = [&](const CVec& x) {
                const double v = crb(x).crb;
                if (!std::isfinite(v)) return kInf;
                double pen = 0.0;
                if (q > 0.0) pen = mu * std::max(0.0, 1.0 - std::norm((h_c.transpose() * x)(0)) / q);
                return std::log(v) + pen;
            };
            auto g = [&](const CVec& x) {
                const detail::CrbEval e = crb(x);
                CVec grad = CVec::Zero(x.size());
                if (std::isfinite(e.crb)) {
                    CMat A = CMat::Zero(op.M[0].rows(), op.M[0].cols());
                    for (int i = 0; i < 4; ++i) A += e.v[i] * op.M[i];
                    grad = -(c / e.crb) * (A.adjoint() * (A * x));
                }
                if (q > 0.0) {
                    const cplx hw = (h_c.transpose() * x)(0);
                    if (std::norm(hw) < q) grad -= (mu / q) * hc_conj * hw;
                }
                return grad;
            };
            auto proj = [&](const CVec& x) { return project_ball(x, budget); };
            w = projected_gradient<cplx>(f, g, proj, w, cfg).x;
            if (q == 0.0 || std::norm((h_c.transpose() * w)(0)) >= q) break;
        }
        const CVec feas = detail::restore_rate(w, w_comm, h_c, r0, sc2, budget);
        // Keep the unmodified start too when it is already feasible.
        for (const CVec* cand : {&feas, static_cast<const CVec*>(&starts[k])}) {
            if (cand->squaredNorm() > budget * (1.0 + 1e-12)) continue;
            const double rate = detail::rate_of(h_c, *cand, sc2);
            if (rate < r0 - 1e-9) continue;
            const double v = crb(*cand).crb;
            if (!have || v < best.crb) {
                best.w = {*cand, budget};
                best.crb = v;
                best.rate = rate;
                best.start = static_cast<int>(k);
                have = true;
            }
        }
    }
    if (!have) throw SolverFailure("rate_constrained_crb_beamformer: no feasible start");
    return best;
}

// ---------------------------------------------------------------------------
// Trade-off study

enum class CouplingMode { strong, weak };
enum class RisMode { with_ris, without_ris, gain_matched };

inline const char* to_string(CouplingMode m) { return m == CouplingMode::strong ? "strong" : "weak"; }

inline const char* to_string(RisMode m) {
    switch (m) {
        case RisMode::with_ris: return "with_ris";
        case RisMode::without_ris: return "without_ris";
        case RisMode::gain_matched: return "gain_matched";
    }
    return "?";
}

struct RisTradeoffRow {
    RisMode mode = RisMode::with_ris;
    CouplingMode coupling = CouplingMode::strong;
    double r0 = 0.0;
    std::optional<double> rate;
    std::optional<double> crb;
};

struct RisTradeoffOptions {
    SolverConfig ris_solver;
    SolverConfig bf_solver;
    int threads = 1;
};

namespace detail {

// Strong coupling places the user on the target: h_BU = alpha_t a_t(theta1)
// and h_RU = b(theta2), so h_c(phi) = h_t(phi) for every profile. Weak
// coupling uses the scene's user position as is.
inline LinkSet tradeoff_links(const Scene& s, CouplingMode mode) {
    LinkSet L = build_links(s);
    if (mode == CouplingMode::strong) {
        L.has_user = true;
        L.h_bu = L.alpha_t * L.a_t;
        L.h_ru = L.b_target;
    } else if (!L.has_user) {
        throw InvalidInput("ris_isac_tradeoff: weak coupling needs a user position");
    }
    return L;
}

inline std::vector<RisTradeoffRow> tradeoff_rows(const Scene& s, const LinkSet& L, const CVec& phi, RisMode mode,
                                                 CouplingMode coupling, const std::vector<double>& r0_grid,
                                                 const RisTradeoffOptions& opt) {
    std::vector<RisTradeoffRow> rows(r0_grid.size());
    parallel_for(r0_grid.size(), opt.threads, [&](std::size_t i) {
        RisTradeoffRow row;
        row.mode = mode;
        row.coupling = coupling;
        row.r0 = r0_grid[i];
        try {
            const RisIsacBeamformerResult r = rate_constrained_crb_beamformer(s, L, phi, r0_grid[i], opt.bf_solver);
            row.rate = r.rate;
            row.crb = r.crb;
        } catch (const Infeasible&) {
        }
        rows[i] = row;
    });
    return rows;
}

}  // namespace detail

// Per coupling mode: (1) RIS profile from optimize_ris_profile, (2) rate-
// constrained beamformer, (3) (R0, rate, CRB). The gain-matched reference
// has zero coupling and the with-RIS maximum rate and minimum CRB:
//   CRB_ref(R0) = CRB_min / (1 - (2^R0 - 1) / (2^Rmax - 1)).
inline std::vector<RisTradeoffRow> ris_isac_tradeoff(const Scene& scene, CouplingMode coupling,
                                                     const std::vector<RisMode>& modes,
                                                     const std::vector<double>& r0_grid,
                                                     const RisTradeoffOptions& opt = {}) {
    if (r0_grid.empty() || modes.empty()) throw InvalidInput("ris_isac_tradeoff: grids must be non-empty");
    if (scene.n_ris < 1) throw InvalidInput("ris_isac_tradeoff: scene needs an RIS");

    const LinkSet L = detail::tradeoff_links(scene, coupling);
    const RisOptimizationResult ris = optimize_ris_profile(coupling_problem(L), std::nullopt, opt.ris_solver);
    const CVec phi = ris.phi.phasors();

    std::vector<RisTradeoffRow> out;
    for (RisMode m : modes) {
        if (m == RisMode::with_ris) {
            auto rows = detail::tradeoff_rows(scene, L, phi, m, coupling, r0_grid, opt);
            out.insert(out.end(), rows.begin(), rows.end());
        } else if (m == RisMode::without_ris) {
            Scene s0 = scene;
            s0.n_ris = 0;
            const LinkSet L0 = detail::tradeoff_links(s0, coupling);
            auto rows = detail::tradeoff_rows(s0, L0, CVec(0), m, coupling, r0_grid, opt);
            out.insert(out.end(), rows.begin(), rows.end());
        } else {
            const CVec h_c = build_comms_channel(L, phi);
            const double r_max = std::log2(1.0 + scene.transmit_power * h_c.squaredNorm() / scene.noise_power_comms);
            const double crb_min = rate_constrained_crb_beamformer(scene, L, phi, 0.0, opt.bf_solver).crb;
            for (double r0 : r0_grid) {
                RisTradeoffRow row;
                row.mode = m;
                row.coupling = coupling;
                row.r0 = r0;
                const double frac = std::expm1(r0 * std::log(2.0)) / std::expm1(r_max * std::log(2.0));
                if (r0 <= r_max && frac < 1.0) {
                    row.rate = r0;
                    row.crb = crb_min / (1.0 - frac);
                }
                out.push_back(row);
            }
        }
    }
    return out;
}

}  // namespace risisac
