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
#include "risisac/parallel.hpp"
#include "risisac/rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace risisac {

// Transmit precoder with its power budget, ||w||^2 <= budget.
struct Beamformer {
    CVec weights;
    double budget = 1.0;

    double power() const { return weights.squaredNorm(); }
    bool within_budget(double rel_tol = 1e-12) const { return power() <= budget * (1.0 + rel_tol); }
};

// Neyman-Pearson energy detector setting: P_f = exp(-threshold).
struct DetectionConfig {
    double false_alarm_rate = 0.01;
    double threshold = -std::log(0.01);

    static DetectionConfig from_false_alarm(double pf) {
        if (!(pf > 0.0 && pf < 1.0)) throw InvalidInput("false alarm rate must be in (0,1)");
        return {pf, -std::log(pf)};
    }
};

// |h_t^H w|^2
inline double illumination_power(const CVec& h_t, const CVec& w) {
    detail::require_same_size(h_t.size(), w.size(), "illumination_power");
    return std::norm(h_t.dot(w));
}

inline double illumination_power(const CVec& h_t, const Beamformer& w) { return illumination_power(h_t, w.weights); }

// w = sqrt(P_T) h / ||h||
inline Beamformer matched_filter_beamformer(const CVec& h, double budget) {
    detail::require_positive(budget, "beamformer budget");
    const double n = h.norm();
    if (!(n > 0.0)) throw DegenerateChannel("matched_filter_beamformer: zero channel");
    return {h * (std::sqrt(budget) / n), budget};
}

// phi_i = exp(-j angle(conj(b_target_i) b_incident_i)), which makes every
// term of b_target^H diag(phi) b_incident real and positive.
inline RisProfile align_ris_phases(const CVec& b_target, const CVec& b_incident) {
    detail::require_same_size(b_target.size(), b_incident.size(), "align_ris_phases");
    CVec phi(b_target.size());
    for (Eigen::Index i = 0; i < phi.size(); ++i) {
        const cplx t = std::conj(b_target[i]) * b_incident[i];
        phi[i] = std::polar(1.0, -std::arg(t));
    }
    return RisProfile::from_phasors(phi);
}

struct IlluminationStart {
    std::optional<CVec> phi;  // initial RIS profile (default all-ones)
    std::optional<CVec> w;    // initial precoder (default: matched to h_t(phi))
};

struct IlluminationResult {
    Beamformer w;
    RisProfile phi;
    double power = 0.0;
    std::vector<double> power_trace;
    int iterations = 0;
    bool converged = false;
};

inline SolverConfig illumination_solver_defaults() {
    SolverConfig cfg;
    cfg.tol_rel = 1e-8;
    cfg.max_iter = 200;
    return cfg;
}

// Alternating maximization of |h_t(phi)^H w|^2 over the budget ball and the
// unit-modulus set. Both block updates are exact maximizers:
//   w-block:   matched filter to the current h_t(phi);
//   phi-block: h_t^H w = c0 + sum_i conj(phi_i) v_i with
//              c0 = conj(alpha_t) a_t^H w, v_i = conj(b_i) [G_t^H w]_i,
//              maximized by phi_i = exp(j(arg v_i - arg c0)).
// Sweeps run phi-block then w-block, starting from the given precoder or
// from the matched filter to h_t(phi_0).
inline IlluminationResult maximize_illumination(const LinkSet& links, double budget, const IlluminationStart& start = {},
                                                const SolverConfig& cfg = illumination_solver_defaults()) {
    detail::require_positive(budget, "transmit budget");
    const int n = links.n_ris();
    CVec phi = start.phi.value_or(CVec::Ones(n));
    detail::require_same_size(phi.size(), n, "initial RIS profile");
    phi = project_unit_modulus(phi);

    auto current_ht = [&] { return build_sensing_channels(links, phi).h_t; };

    CVec w;
    if (start.w) {
        detail::require_same_size(start.w->size(), links.a_t.size(), "initial precoder");
        w = project_ball(*start.w, budget);
    } else {
        const CVec h = current_ht();
        w = h.norm() > 0.0 ? matched_filter_beamformer(h, budget).weights : CVec(CVec::Zero(h.size()));
        if (h.norm() == 0.0) w[0] = std::sqrt(budget);
    }

    const CVec Gb_conj = links.b_target.conjugate();
    const std::function<void()> phi_block = [&] {
        if (n == 0) return;
        const cplx c0 = std::conj(links.alpha_t) * links.a_t.dot(w);
        const CVec gw = links.G_t.adjoint() * w;
        const double ref = std::arg(c0);
        for (int i = 0; i < n; ++i) {
            const cplx v = Gb_conj[i] * gw[i];
            if (std::abs(v) > 0.0) phi[i] = std::polar(1.0, std::arg(v) - ref);
        }
    };
    const std::function<void()> w_block = [&] {
        const CVec h = current_ht();
        if (h.norm() > 0.0) w = matched_filter_beamformer(h, budget).weights;
    };
    const std::function<void()> blocks[] = {phi_block, w_block};
    const auto objective = [&] { return -illumination_power(current_ht(), w); };

    const AlternatingResult ar = alternating_minimize(blocks, objective, cfg);

    IlluminationResult r;
    r.w = {w, budget};
    r.phi = RisProfile::from_phasors(phi);
    r.power = illumination_power(current_ht(), w);
    r.power_trace.reserve(ar.trace.size());
    for (double f : ar.trace) r.power_trace.push_back(-f);
    r.iterations = ar.iterations;
    r.converged = ar.converged;
    return r;
}

inline IlluminationResult maximize_illumination(const Scene& scene, const IlluminationStart& start = {},
                                                const SolverConfig& cfg = illumination_solver_defaults()) {
    return maximize_illumination(build_links(scene), scene.transmit_power, start, cfg);
}

// E|h_t^H x|^2 under isotropic transmission (W W^H = I) with the RIS
// phase-aligned: sigma_alpha^2 L_T + sigma_beta^2 L_T N^2.
inline double isotropic_illumination(double sigma_alpha_sq, double sigma_beta_sq, int l_t, int n_ris) {
    detail::require_non_negative(sigma_alpha_sq, "sigma_alpha^2");
    detail::require_non_negative(sigma_beta_sq, "sigma_beta^2");
    const double lt = l_t;
    const double n = n_ris;
    return sigma_alpha_sq * lt + sigma_beta_sq * lt * n * n;
}

inline double isotropic_illumination(const Scene& scene) {
    const LinkSet L = build_links(scene);
    return isotropic_illumination(std::norm(L.alpha_t), std::norm(L.beta_t), scene.l_t, scene.n_ris);
}

// Matched-filter output SNR: L_S sigma_eta^2 power / sigma_s^2.
inline double matched_filter_snr(double power, const Scene& scene) {
    detail::require_non_negative(power, "illumination power");
    return scene.l_s * scene.target_gain_var * power / scene.noise_power_sensing;
}

namespace detail {

// exp(-x) I_k(x) for k = 0..kmax by Miller's backward recurrence,
// normalized with exp(-x) (I_0 + 2 sum_k I_k) = 1. kmax must be large
// enough for the normalization sum to converge (k >> sqrt(x)).
inline std::vector<double> scaled_bessel_i_sequence(double x, int kmax) {
    std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 0.0);
    if (x == 0.0) {
        out[0] = 1.0;
        return out;
    }
    const int start = kmax + 30 + static_cast<int>(std::sqrt(40.0 * kmax));
    double i_kp1 = 0.0;
    double i_k = 1e-30;
    double norm = 0.0;
    for (int k = start; k >= 1; --k) {
        const double i_km1 = i_kp1 + (2.0 * k / x) * i_k;
        norm += 2.0 * i_k;
        i_kp1 = i_k;
        i_k = i_km1;
        if (k - 1 <= kmax) out[static_cast<std::size_t>(k - 1)] = i_k;
        if (i_k > 1e250) {
            i_k *= 1e-250;
            i_kp1 *= 1e-250;
            norm *= 1e-250;
            for (auto& v : out) v *= 1e-250;
        }
    }
    norm += i_k;
    for (auto& v : out) v /= norm;
    return out;
}

}  // namespace detail

// Marcum Q-function of order one, Q1(a, b) = P(|X| > b), X ~ CN-type
// Rician with noncentrality a. Evaluated with the Bessel series
//   a < b : exp(-(a^2+b^2)/2) sum_{k>=0} (a/b)^k I_k(ab)
//   a >= b: 1 - exp(-(a^2+b^2)/2) sum_{k>=1} (b/a)^k I_k(ab)
// using exponentially scaled Bessel terms; absolute accuracy ~1e-12.
inline double marcum_q1(double a, double b) {
    detail::require_non_negative(a, "marcum_q1 a");
    detail::require_non_negative(b, "marcum_q1 b");
    if (b == 0.0) return 1.0;
    if (a == 0.0) return std::exp(-0.5 * b * b);
    const double d = a - b;
    // Rician tail is Gaussian-like in (a - b) once the distribution is
    // concentrated; beyond 40 standard deviations the answer is exact in
    // double precision.
    if (d > 40.0) return 1.0;
    if (d < -40.0) return 0.0;

    const double x = a * b;
    const double ratio = a < b ? a / b : b / a;
    const double pref = std::exp(-0.5 * d * d);
    // exp(-x) I_k(x) is negligible beyond k ~ x + 12 sqrt(x).
    const int kmax = static_cast<int>(std::min(x, 1e6) + 12.0 * std::sqrt(x) + 60.0);
    const std::vector<double> ik = detail::scaled_bessel_i_sequence(x, kmax);

    double sum = 0.0;
    double r = 1.0;
    if (a < b) {
        for (int k = 0; k <= kmax; ++k) {
            sum += r * ik[static_cast<std::size_t>(k)];
            r *= ratio;
        }
        return std::clamp(pref * sum, 0.0, 1.0);
    }
    r = ratio;
    for (int k = 1; k <= kmax; ++k) {
        sum += r * ik[static_cast<std::size_t>(k)];
        r *= ratio;
    }
    return std::clamp(1.0 - pref * sum, 0.0, 1.0);
}

// P_d = Q1(sqrt(2 SNR), sqrt(2 gamma)) for a non-fluctuating target.
inline double detection_probability(double snr, const DetectionConfig& cfg) {
    detail::require_non_negative(snr, "snr");
    return marcum_q1(std::sqrt(2.0 * snr), std::sqrt(2.0 * cfg.threshold));
}

enum class TargetModel { fixed_amplitude, complex_gaussian };

struct GlrtResult {
    double empirical_pf = 0.0;
    double empirical_pd = 0.0;
    long trials = 0;
    double snr = 0.0;  // matched-filter SNR implied by the inputs
};

// Simulates y = eta a_r(theta1) (h_t^H w) s + z with s = 1 under H1 and
// y = z under H0, and applies |y^H a_r|^2 / (||a_r||^2 sigma_s^2) > gamma.
// Trials are split in fixed blocks with per-block seeds, so the result is
// independent of `threads`.
inline GlrtResult glrt_monte_carlo(const Scene& scene, const LinkSet& links, const CVec& w, const CVec& phi, long trials,
                                   const DetectionConfig& cfg, std::uint64_t seed,
                                   TargetModel model = TargetModel::complex_gaussian, int threads = 1) {
    if (trials < 1) throw InvalidInput("glrt_monte_carlo: trials must be >= 1");
    const CVec h_t = build_sensing_channels(links, phi).h_t;
    detail::require_same_size(h_t.size(), w.size(), "glrt_monte_carlo precoder");
    const cplx g = h_t.dot(w);  // h_t^H w
    const CVec a_r = links.a_r;
    const CVec a_hat = a_r / a_r.norm();
    const double sigma2 = scene.noise_power_sensing;
    const double var_eta = scene.target_gain_var;
    const Eigen::Index ls = a_r.size();

    constexpr long kBlock = 4096;
    const long blocks = (trials + kBlock - 1) / kBlock;
    std::vector<long> fa(static_cast<std::size_t>(blocks), 0), det(static_cast<std::size_t>(blocks), 0);
    parallel_for(static_cast<std::size_t>(blocks), threads, [&](std::size_t bi) {
        Rng rng(derive_seed(seed, bi));
        const long begin = static_cast<long>(bi) * kBlock;
        const long end = std::min(trials, begin + kBlock);
        CVec y(ls);
        long n_fa = 0, n_det = 0;
        for (long t = begin; t < end; ++t) {
            for (Eigen::Index i = 0; i < ls; ++i) y[i] = rng.complex_normal(sigma2);
            if (std::norm(y.dot(a_hat)) / sigma2 > cfg.threshold) ++n_fa;

            const cplx eta = model == TargetModel::fixed_amplitude ? cplx(std::sqrt(var_eta), 0.0)
                                                                   : rng.complex_normal(var_eta);
            for (Eigen::Index i = 0; i < ls; ++i) y[i] = eta * a_r[i] * g + rng.complex_normal(sigma2);
            if (std::norm(y.dot(a_hat)) / sigma2 > cfg.threshold) ++n_det;
        }
        fa[bi] = n_fa;
        det[bi] = n_det;
    });
    long n_fa = 0, n_det = 0;
    for (long v : fa) n_fa += v;
    for (long v : det) n_det += v;
    GlrtResult r;
    r.trials = trials;
    r.empirical_pf = static_cast<double>(n_fa) / static_cast<double>(trials);
    r.empirical_pd = static_cast<double>(n_det) / static_cast<double>(trials);
    r.snr = matched_filter_snr(std::norm(g), scene);
    return r;
}

// Angle CRB conditioned on the echo: L_S / (2 T ||adot||^2) [1/SNR + 1/SNR^2].
// Returns +inf at SNR = 0.
inline double crb_angle(double snr, int samples, double adot_norm_sq, int l_s) {
    detail::require_non_negative(snr, "snr");
    if (samples < 1) throw InvalidInput("crb_angle: samples must be >= 1");
    detail::require_positive(adot_norm_sq, "||adot||^2");
    if (l_s < 1) throw InvalidInput("crb_angle: L_S must be >= 1");
    if (snr == 0.0) return kInf;
    return l_s / (2.0 * samples * adot_norm_sq) * (1.0 / snr + 1.0 / (snr * snr));
}

// ---------------------------------------------------------------------------
// Trajectory sweep

enum class SweepMode { ris_aided, ris_only, without_ris };

inline const char* to_string(SweepMode m) {
    switch (m) {
        case SweepMode::ris_aided: return "ris_aided";
        case SweepMode::ris_only: return "ris_only";
        case SweepMode::without_ris: return "without_ris";
    }
    return "?";
}

struct Waypoint {
    std::string label;
    Point2 position;
    bool blocked = false;  // direct BS-target path obstructed
};

struct SweepRow {
    std::string waypoint;
    SweepMode mode = SweepMode::ris_aided;
    double power = 0.0;
    double crb = kInf;
    bool converged = true;
};

namespace detail {

inline double sweep_crb(const Scene& s, const LinkSet& L, double power) {
    const double snr = matched_filter_snr(power, s);
    return crb_angle(snr, s.samples, L.a_r_dot.squaredNorm(), s.l_s);
}

inline SweepRow sweep_point(const Scene& tmpl, const Waypoint& wp, SweepMode mode, const SolverConfig& cfg) {
    Scene s = tmpl;
    s.target_position = wp.position;
    s.blocked_direct = wp.blocked;
    SweepRow row;
    row.waypoint = wp.label;
    row.mode = mode;

    switch (mode) {
        case SweepMode::without_ris: {
            s.n_ris = 0;
            const LinkSet L = build_links(s);
            const CVec h = L.alpha_t * L.a_t;
            row.power = h.norm() > 0.0 ? illumination_power(h, matched_filter_beamformer(h, s.transmit_power)) : 0.0;
            row.crb = sweep_crb(s, L, row.power);
            break;
        }
        case SweepMode::ris_only: {
            s.blocked_direct = true;
            const LinkSet L = build_links(s);
            if (s.n_ris == 0) {
                row.power = 0.0;
            } else {
                const double ris_side = s.geometric_ris_departure ? L.angles.ris_to_bs : L.angles.omega_t;
                const CVec b_inc = steering_vector(s.ris_array(), ris_side);
                const RisProfile phi = align_ris_phases(b_inc, L.b_target);
                const CVec h = build_sensing_channels(L, phi.phasors()).h_t;
                row.power = h.norm() > 0.0 ? illumination_power(h, matched_filter_beamformer(h, s.transmit_power)) : 0.0;
            }
            row.crb = sweep_crb(s, L, row.power);
            break;
        }
        case SweepMode::ris_aided: {
            const LinkSet L = build_links(s);
            double best = 0.0;
            bool conv = true;
            // Start (a): direct-only matched filter, so the result dominates
            // the no-RIS design.
            const CVec h_direct = L.alpha_t * L.a_t;
            if (h_direct.norm() > 0.0) {
                IlluminationStart st;
                st.w = matched_filter_beamformer(h_direct, s.transmit_power).weights;
                const IlluminationResult r = maximize_illumination(L, s.transmit_power, st, cfg);
                best = r.power;
                conv = r.converged;
            }
            // Start (b): RIS path phase-aligned.
            if (s.n_ris > 0) {
                const double ris_side = s.geometric_ris_departure ? L.angles.ris_to_bs : L.angles.omega_t;
                IlluminationStart st;
                st.phi = align_ris_phases(steering_vector(s.ris_array(), ris_side), L.b_target).phasors();
                const IlluminationResult r = maximize_illumination(L, s.transmit_power, st, cfg);
                if (r.power > best) {
                    best = r.power;
                    conv = r.converged;
                }
            }
            row.power = best;
            row.converged = conv;
            row.crb = sweep_crb(s, L, row.power);
            break;
        }
    }
    return row;
}

}  // namespace detail

// One row per (waypoint, mode), waypoint-major, in input order.
inline std::vector<SweepRow> trajectory_sweep(const Scene& scene_template, const std::vector<Waypoint>& waypoints,
                                              const std::vector<SweepMode>& modes,
                                              const SolverConfig& cfg = illumination_solver_defaults(), int threads = 1) {
    if (waypoints.empty()) throw InvalidInput("trajectory_sweep: at least one waypoint required");
    if (modes.empty()) throw InvalidInput("trajectory_sweep: at least one mode required");
    std::vector<SweepRow> rows(waypoints.size() * modes.size());
    parallel_for(rows.size(), threads, [&](std::size_t i) {
        rows[i] = detail::sweep_point(scene_template, waypoints[i / modes.size()], modes[i % modes.size()], cfg);
    });
    return rows;
}

}  // namespace risisac
