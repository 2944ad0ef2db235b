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
#include "risisac/optim_kernels.hpp"
#include "risisac/rng.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace risisac {

struct RectBeam {
    double center = 0.0;  // radians
    double width = 0.0;   // radians, full width
    double level = 1.0;
};

struct BeampatternSpec {
    RVec grid;                          // D sorted angles [rad]
    RVec desired;                       // m on the grid
    std::vector<double> target_angles;  // cross-correlation directions [rad]
    double alpha1 = 1.0;
    double alpha2 = 1.0;

    int d() const { return static_cast<int>(grid.size()); }

    void validate() const {
        if (grid.size() < 1) throw InvalidInput("BeampatternSpec: empty grid");
        detail::require_same_size(grid.size(), desired.size(), "BeampatternSpec desired");
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            detail::require_finite(grid[i], "grid angle");
            if (i > 0 && !(grid[i] > grid[i - 1])) throw InvalidInput("BeampatternSpec: grid must be strictly increasing");
            if (!(desired[i] >= 0.0)) throw InvalidInput("BeampatternSpec: desired pattern must be >= 0");
        }
        detail::require_non_negative(alpha1, "alpha1");
        detail::require_non_negative(alpha2, "alpha2");
        for (double t : target_angles) detail::require_finite(t, "target angle");
    }
};

// D points evenly spaced over [lo, hi].
inline RVec uniform_grid(double lo, double hi, int d) {
    if (d < 1) throw InvalidInput("uniform_grid: D must be >= 1");
    if (d == 1) return RVec::Constant(1, lo);
    if (!(hi > lo)) throw InvalidInput("uniform_grid: hi must exceed lo");
    return RVec::LinSpaced(d, lo, hi);
}

// Superposition of rectangular beams; overlapping beams take the larger level.
inline RVec rectangular_pattern(const RVec& grid, const std::vector<RectBeam>& beams) {
    RVec m = RVec::Zero(grid.size());
    for (const RectBeam& b : beams) {
        detail::require_non_negative(b.width, "beam width");
        detail::require_non_negative(b.level, "beam level");
        for (Eigen::Index i = 0; i < grid.size(); ++i)
            if (std::abs(grid[i] - b.center) <= 0.5 * b.width + 1e-12) m[i] = std::max(m[i], b.level);
    }
    return m;
}

inline BeampatternSpec make_beampattern_spec(const RVec& grid, const std::vector<RectBeam>& beams,
                                             std::vector<double> target_angles, double alpha1, double alpha2) {
    BeampatternSpec s;
    s.grid = grid;
    s.desired = rectangular_pattern(grid, beams);
    s.target_angles = std::move(target_angles);
    s.alpha1 = alpha1;
    s.alpha2 = alpha2;
    s.validate();
    return s;
}

struct DualDesign {
    CVec c;   // L_T
    CMat W;   // L_T x T
    double tau = 0.0;
    RisProfile phi;
    CMat R;   // c c^H + W W^H
};

// J(theta) = a^H R a
inline double radiated_power(const CMat& R, const UlaGeometry& geom, double angle) {
    if (R.rows() != geom.num_elements || R.cols() != geom.num_elements)
        throw DimensionMismatch("radiated_power: R must be L_T x L_T");
    const CVec a = steering_vector(geom, angle);
    return std::max(0.0, (a.adjoint() * R * a)(0).real());
}

inline RVec beampattern(const CMat& R, const UlaGeometry& geom, const RVec& grid) {
    RVec j(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) j[i] = radiated_power(R, geom, grid[i]);
    return j;
}

namespace detail {

inline CMat steering_matrix(const UlaGeometry& geom, const RVec& angles) {
    CMat A(geom.num_elements, angles.size());
    for (Eigen::Index i = 0; i < angles.size(); ++i) A.col(i) = steering_vector(geom, angles[i]);
    return A;
}

inline CMat steering_matrix(const UlaGeometry& geom, const std::vector<double>& angles) {
    return steering_matrix(geom, RVec(Eigen::Map<const RVec>(angles.data(), static_cast<Eigen::Index>(angles.size()))));
}

inline double pair_weight(std::size_t t) {
    return t < 2 ? 0.0 : 2.0 / (static_cast<double>(t) * static_cast<double>(t) - static_cast<double>(t));
}

}  // namespace detail

// Least-squares autoscale, clamped at zero.
inline double autoscale_tau(const RVec& j, const RVec& m) {
    detail::require_same_size(j.size(), m.size(), "autoscale_tau");
    const double mm = m.squaredNorm();
    if (!(mm > 0.0)) throw InvalidInput("autoscale_tau: desired pattern is identically zero");
    return std::max(0.0, m.dot(j) / mm);
}

inline double autoscale_tau(const CMat& R, const UlaGeometry& geom, const BeampatternSpec& spec) {
    return autoscale_tau(beampattern(R, geom, spec.grid), spec.desired);
}

// alpha1 mean |J - tau m|^2 over the grid + alpha2 mean over target pairs of |a_i^H R a_j|^2.
inline double beampattern_loss(const CMat& R, double tau, const UlaGeometry& geom, const BeampatternSpec& spec) {
    spec.validate();
    double loss = 0.0;
    if (spec.alpha1 > 0.0) {
        const RVec e = beampattern(R, geom, spec.grid) - tau * spec.desired;
        loss += spec.alpha1 * e.squaredNorm() / spec.d();
    }
    const std::size_t t = spec.target_angles.size();
    if (spec.alpha2 > 0.0 && t >= 2) {
        const CMat A = detail::steering_matrix(geom, spec.target_angles);
        const CMat C = A.adjoint() * R * A;
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < t; ++i)
            for (std::size_t k = i + 1; k < t; ++k) s += std::norm(C(i, k));
        loss += spec.alpha2 * detail::pair_weight(t) * s;
    }
    return loss;
}

// |h^H c|^2 / (h^H (R - c c^H) h + sigma^2)
inline double user_sinr(const CVec& h_c, const CVec& c, const CMat& R, double sigma_c2) {
    detail::require_same_size(h_c.size(), c.size(), "user_sinr c");
    if (R.rows() != h_c.size() || R.cols() != h_c.size()) throw DimensionMismatch("user_sinr: R must be L_T x L_T");
    detail::require_positive(sigma_c2, "sigma_c^2");
    const double s = std::norm(h_c.dot(c));
    const double interf = std::max(0.0, (h_c.adjoint() * R * h_c)(0).real() - s);
    return s / (interf + sigma_c2);
}

inline double user_sinr(const RisProfile& phi, const CVec& c, const CMat& R, const LinkSet& L, double sigma_c2) {
    return user_sinr(build_comms_channel(L, phi.phasors()), c, R, sigma_c2);
}

inline double user_sinr(const RisProfile& phi, const CVec& c, const CMat& R, const Scene& s) {
    return user_sinr(phi, c, R, build_links(s), s.noise_power_comms);
}

struct DualSolverConfig {
    int max_outer = 100;
    double tol_rel = 1e-6;
    int inner_iter = 40;       // (c, W) gradient steps per outer iteration
    int phase_iter = 40;       // RIS ascent steps per outer iteration
    double mu_sinr = 10.0;
    double mu_diag = 10.0;
    double mu_growth = 5.0;
    int max_rejections = 8;    // consecutive rejected candidates before stopping

    void validate() const {
        if (max_outer < 1 || inner_iter < 1 || phase_iter < 0 || max_rejections < 1)
            throw InvalidInput("DualSolverConfig: iteration counts out of range");
        detail::require_positive(tol_rel, "tol_rel");
        detail::require_positive(mu_sinr, "mu_sinr");
        detail::require_positive(mu_diag, "mu_diag");
        if (!(mu_growth > 1.0)) throw InvalidInput("DualSolverConfig: mu_growth must be > 1");
    }
};

struct DualDesignResult {
    DualDesign design;
    std::vector<double> trace;  // penalized objective of accepted iterates
    double loss = kInf;
    double sinr = 0.0;
    double max_sinr = 0.0;
    double diag_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Largest SINR with unit diagonal: W = 0, c_i = e^{j arg h_i}, giving ||h_c||_1^2 / sigma^2.
inline double max_unit_diagonal_sinr(const CVec& h_c, double sigma_c2) {
    detail::require_positive(sigma_c2, "sigma_c^2");
    const double l1 = h_c.cwiseAbs().sum();
    return l1 * l1 / sigma_c2;
}

namespace detail {

// Per-target-stream data shared by the (c, W) block.
struct DualProblem {
    UlaGeometry tx;
    CMat A;       // L_T x D
    CMat At;      // L_T x T
    RVec m;
    double alpha1, alpha2, pair_w;
    double gamma, sigma2;
    int lt, cols;
};

inline CMat row_normalize(const CMat& X) {
    CMat Y = X;
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
        const double n = Y.row(i).norm();
        if (n > 0.0) {
            Y.row(i) /= n;
        } else {
            Y.row(i).setZero();
            Y(i, 0) = 1.0;
        }
    }
    return Y;
}

inline double diag_residual(const CMat& R) {
    return (R.diagonal().real().array() - 1.0).abs().maxCoeff();
}

inline double sinr_of(const CMat& X, const CVec& h, double sigma2) {
    const double s = std::norm(h.dot(X.col(0)));
    const double interf = X.cols() > 1 ? (X.rightCols(X.cols() - 1).adjoint() * h).squaredNorm() : 0.0;
    return s / (interf + sigma2);
}

inline double shortfall(double gamma, double target) { return std::max(0.0, 1.0 - gamma / target); }

inline double dual_loss(const DualProblem& p, const CMat& X, double tau) {
    const CMat Y = p.A.adjoint() * X;  // D x (1+T)
    double f = 0.0;
    if (p.alpha1 > 0.0) {
        const RVec j = Y.rowwise().squaredNorm();
        f += p.alpha1 * (j - tau * p.m).squaredNorm() / static_cast<double>(p.m.size());
    }
    if (p.pair_w > 0.0) {
        const CMat Z = p.At.adjoint() * X;
        const CMat C = Z * Z.adjoint();
        double s = 0.0;
        for (Eigen::Index i = 0; i + 1 < C.rows(); ++i)
            for (Eigen::Index k = i + 1; k < C.cols(); ++k) s += std::norm(C(i, k));
        f += p.alpha2 * p.pair_w * s;
    }
    return f;
}

// Loss plus SINR-shortfall and diagonal penalties for X = [c W].
inline double penalized(const DualProblem& p, const CMat& X, double tau, const CVec& h, double mu_s, double mu_d) {
    double f = dual_loss(p, X, tau);
    const double sf = shortfall(sinr_of(X, h, p.sigma2), p.gamma);
    f += mu_s * sf * sf;
    const RVec rn = X.rowwise().squaredNorm();
    f += mu_d * (rn.array() - 1.0).square().sum();
    return f;
}

// d/d conj(X) of penalized().
inline CMat penalized_gradient(const DualProblem& p, const CMat& X, double tau, const CVec& h, double mu_s,
                               double mu_d) {
    CMat G = CMat::Zero(X.rows(), X.cols());
    if (p.alpha1 > 0.0) {
        const CMat Y = p.A.adjoint() * X;
        const RVec e = Y.rowwise().squaredNorm() - tau * p.m;
        G += (2.0 * p.alpha1 / static_cast<double>(p.m.size())) * p.A * (e.asDiagonal() * Y);
    }
    if (p.pair_w > 0.0) {
        const CMat Z = p.At.adjoint() * X;
        const CMat C = Z * Z.adjoint();
        // sum_{i<k} |C_ik|^2 = (||C||_F^2 - sum_i C_ii^2) / 2, C Hermitian
        CMat Coff = C;
        Coff.diagonal().setZero();
        G += (p.alpha2 * p.pair_w) * p.At * (Coff * Z);
    }
    const double s = std::norm(h.dot(X.col(0)));
    const double interf = X.cols() > 1 ? (X.rightCols(X.cols() - 1).adjoint() * h).squaredNorm() : 0.0;
    const double den = interf + p.sigma2;
    const double gam = s / den;
    const double sf = shortfall(gam, p.gamma);
    if (sf > 0.0) {
        const double k = -2.0 * mu_s * sf / p.gamma;
        const CVec hh_c = h * h.dot(X.col(0));
        G.col(0) += (k / den) * hh_c;
        if (X.cols() > 1) G.rightCols(X.cols() - 1) -= (k * s / (den * den)) * (h * (h.adjoint() * X.rightCols(X.cols() - 1)));
    }
    const RVec rn = X.rowwise().squaredNorm();
    G += (2.0 * mu_d) * ((rn.array() - 1.0).matrix().asDiagonal() * X);
    return G;
}

inline CVec flatten(const CMat& X) { return Eigen::Map<const CVec>(X.data(), X.size()); }

inline CMat unflatten(const CVec& v, Eigen::Index rows, Eigen::Index cols) {
    return Eigen::Map<const CMat>(v.data(), rows, cols);
}

// Pulls X toward the max-SINR point X_comm until gamma >= target.
// Returns false if even X_comm falls short.
inline bool restore_sinr(CMat& X, const CVec& h, double sigma2, double target) {
    const double goal = target * (1.0 - 1e-7);
    if (sinr_of(X, h, sigma2) >= goal) return true;
    CMat Xc = CMat::Zero(X.rows(), X.cols());
    Xc.col(0) = project_unit_modulus(h);
    if (sinr_of(Xc, h, sigma2) < goal) return false;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double t = 0.5 * (lo + hi);
        if (sinr_of(row_normalize((1.0 - t) * X + t * Xc), h, sigma2) >= goal)
            hi = t;
        else
            lo = t;
    }
    X = row_normalize((1.0 - hi) * X + hi * Xc);
    return true;
}

}  // namespace detail

// Minimizes the beampattern loss over (c, W, tau, phi) subject to unit
// diagonal, gamma >= Gamma and unit-modulus phi. Rows of [c W] are kept on
// the unit sphere by projection, so the diagonal penalty stays at rounding
// level. Each outer pass runs tau, (c, W) and phi updates, then restores
// SINR feasibility; a candidate is accepted only if its loss does not
// exceed the incumbent's, otherwise the SINR weight grows and the search
// resumes from the incumbent.
inline DualDesignResult design_dual_waveform(const Scene& scene, const BeampatternSpec& spec, double gamma_target,
                                             const DualSolverConfig& cfg, std::uint64_t seed) {
    spec.validate();
    cfg.validate();
    if (!(gamma_target > 0.0) || !std::isfinite(gamma_target)) throw InvalidInput("design_dual_waveform: Gamma must be > 0");
    if (!(spec.desired.squaredNorm() > 0.0)) throw InvalidInput("design_dual_waveform: desired pattern is zero");
    const LinkSet L = build_links(scene);
    if (!L.has_user) throw InvalidInput("design_dual_waveform: scene has no user");
    const int lt = scene.l_t;
    const int n = L.n_ris();
    const int t = std::max<int>(1, static_cast<int>(spec.target_angles.size()));
    const double sigma2 = scene.noise_power_comms;

    // RIS start: co-phase the cascaded path through the strongest row of G_t.
    CVec phi = CVec::Ones(n);
    if (n > 0) {
        Eigen::Index r = 0;
        L.G_t.rowwise().squaredNorm().maxCoeff(&r);
        const CVec z = L.G_t.row(r).transpose().cwiseProduct(L.h_ru);
        phi = project_unit_modulus(z.conjugate());
    }

    auto sinr_phi = [&](const CVec& ph, const CMat& X) {
        return detail::sinr_of(X, build_comms_channel(L, ph), sigma2);
    };
    auto best_phi_sinr = [&](const CVec& ph) {
        return max_unit_diagonal_sinr(build_comms_channel(L, ph), sigma2);
    };
    const double max_sinr = best_phi_sinr(phi);
    if (!(max_sinr > gamma_target))
        throw Infeasible("design_dual_waveform: SINR target exceeds the unit-diagonal maximum " +
                             std::to_string(max_sinr),
                         max_sinr);

    detail::DualProblem p;
    p.tx = scene.tx_array();
    p.A = detail::steering_matrix(p.tx, spec.grid);
    p.At = detail::steering_matrix(p.tx, spec.target_angles);
    p.m = spec.desired;
    p.alpha1 = spec.alpha1;
    p.alpha2 = spec.alpha2;
    p.pair_w = spec.alpha2 > 0.0 ? detail::pair_weight(spec.target_angles.size()) : 0.0;
    p.gamma = gamma_target;
    p.sigma2 = sigma2;
    p.lt = lt;
    p.cols = 1 + t;

    auto tau_of = [&](const CMat& X) {
        const RVec j = (p.A.adjoint() * X).rowwise().squaredNorm();
        return autoscale_tau(j, p.m);
    };
    auto loss_of = [&](const CMat& X, double tau) { return detail::dual_loss(p, X, tau); };

    // Start: comm beam toward the user channel plus random sensing streams.
    Rng rng(seed);
    CMat X(lt, p.cols);
    {
        const CVec h0 = build_comms_channel(L, phi);
        X.col(0) = project_unit_modulus(h0) / std::sqrt(static_cast<double>(p.cols));
        for (int k = 1; k < p.cols; ++k) X.col(k) = rng.complex_normal_vector(lt, 1.0 / p.cols);
        X = detail::row_normalize(X);
        if (!detail::restore_sinr(X, h0, sigma2, gamma_target))
            throw SolverFailure("design_dual_waveform: could not reach the SINR target from the start point");
    }
    double tau = tau_of(X);
    double inc_loss = loss_of(X, tau);

    DualDesignResult res;
    res.max_sinr = max_sinr;
    res.trace.push_back(inc_loss);
    double mu_s = cfg.mu_sinr;
    const double mu_d = cfg.mu_diag;
    int rejections = 0;
    double last_shortfall = kInf;

    SolverConfig inner;
    inner.max_iter = cfg.inner_iter;
    inner.tol_rel = 1e-12;
    inner.initial_step = 1e-2;
    SolverConfig phase_cfg = inner;
    phase_cfg.max_iter = cfg.phase_iter;

    for (int it = 0; it < cfg.max_outer; ++it) {
        res.iterations = it + 1;
        CMat Xc = X;
        CVec phic = phi;

        // (1) tau
        double tc = tau_of(Xc);

        // (2) (c, W)
        {
            const CVec h = build_comms_channel(L, phic);
            auto f = [&](const CVec& v) { return detail::penalized(p, detail::unflatten(v, lt, p.cols), tc, h, mu_s, mu_d); };
            auto g = [&](const CVec& v) {
                return detail::flatten(detail::penalized_gradient(p, detail::unflatten(v, lt, p.cols), tc, h, mu_s, mu_d));
            };
            auto proj = [&](const CVec& v) { return detail::flatten(detail::row_normalize(detail::unflatten(v, lt, p.cols))); };
            const auto r = projected_gradient<cplx>(f, g, proj, detail::flatten(Xc), inner);
            Xc = detail::unflatten(r.x, lt, p.cols);
        }
        const double sf = detail::shortfall(detail::sinr_of(Xc, build_comms_channel(L, phic), sigma2), gamma_target);

        // (3) phi: ascent on gamma
        if (n > 0 && cfg.phase_iter > 0) {
            const CMat B = L.G_t * L.h_ru.asDiagonal();
            const CVec c = Xc.col(0);
            const CMat Wm = Xc.rightCols(p.cols - 1);
            auto f = [&](const CVec& ph) { return -sinr_phi(ph, Xc); };
            auto g = [&](const CVec& ph) {
                const CVec h = build_comms_channel(L, ph);
                const cplx u = c.dot(h);  // c^H h
                const double s = std::norm(u);
                const CVec wh = Wm.adjoint() * h;
                const double den = wh.squaredNorm() + sigma2;
                const CVec grad = (u / den) * (B.adjoint() * c) - (s / (den * den)) * (B.adjoint() * (Wm * wh));
                return CVec(-grad);
            };
            auto proj = [](const CVec& v) { return project_unit_modulus(v); };
            SolverConfig pc = phase_cfg;
            pc.initial_step = 1.0 / std::max(1.0, std::abs(f(phic)));
            const auto r = projected_gradient<cplx>(f, g, proj, phic, pc);
            phic = r.x;
        }

        // (4) restore feasibility and compare with the incumbent
        const CVec hc = build_comms_channel(L, phic);
        const bool feasible = detail::restore_sinr(Xc, hc, sigma2, gamma_target);
        tc = tau_of(Xc);
        const double cand = loss_of(Xc, tc);
        if (feasible && cand <= inc_loss) {
            const double prev = inc_loss;
            X = Xc;
            phi = phic;
            tau = tc;
            inc_loss = cand;
            res.trace.push_back(inc_loss);
            rejections = 0;
            if (sf > 0.5 * last_shortfall) mu_s *= cfg.mu_growth;
            last_shortfall = sf;
            if (detail::relative_change_below(prev, cand, cfg.tol_rel)) {
                res.converged = true;
                break;
            }
        } else {
            mu_s *= cfg.mu_growth;
            if (++rejections >= cfg.max_rejections) {
                res.converged = true;
                break;
            }
        }
    }

    DualDesign& d = res.design;
    d.c = X.col(0);
    d.W = X.rightCols(p.cols - 1);
    d.tau = tau;
    d.phi = RisProfile::from_phasors(phi);
    d.R = d.c * d.c.adjoint() + d.W * d.W.adjoint();
    res.loss = beampattern_loss(d.R, tau, p.tx, spec);
    res.sinr = user_sinr(build_comms_channel(L, phi), d.c, d.R, sigma2);
    res.diag_residual = detail::diag_residual(d.R);
    if (!(res.diag_residual < 1e-6) || !(res.sinr >= gamma_target * (1.0 - 1e-6)))
        throw SolverFailure("design_dual_waveform: no feasible iterate (diag residual " +
                            std::to_string(res.diag_residual) + ", SINR " + std::to_string(res.sinr) + ")");
    return res;
}

}  // namespace risisac
