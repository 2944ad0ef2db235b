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

// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Usage: acceptance <path to risisac_cli> <configs dir>

#include "risisac/experiments.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <unistd.h>

using namespace risisac;
namespace fs = std::filesystem;

namespace {

fs::path g_cli;
fs::path g_configs;

struct Check {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& what) {
        if (!cond && ok) detail = what;
        ok = ok && cond;
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

RunConfig load(const std::string& name) { return parse_config(slurp(g_configs / name)); }

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double binomial_sigma(double p, long n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

// int_b^inf x exp(-(x^2 + a^2)/2) I0(a x) dx with the exponentially scaled I0.
double marcum_quadrature(double a, double b) {
    auto f = [a](double x) {
        const double i0s = boost::math::cyl_bessel_i(0, a * x) * std::exp(-a * x);
        return x * std::exp(-0.5 * (x - a) * (x - a)) * i0s;
    };
    double err = 0.0;
    const double upper = std::max(a, b) + 40.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, b, upper, 20, 1e-14, &err);
}

Check c1() {
    Check c;
    const auto t0 = Clock::now();
    for (auto [lt, n] : {std::pair{4, 8}, std::pair{15, 100}}) {
        Scene s;
        s.l_t = lt;
        s.l_s = lt;
        s.n_ris = n;
        s.ris_position = {60.0, 30.0};
        s.target_position = {45.0, 15.0};
        s.blocked_direct = true;
        s.overrides.beta_t = std::polar(1.0, 0.7);
        s.seed = 3;
        const double p = maximize_illumination(s).power;
        const double want = static_cast<double>(lt) * n * n;
        c.expect(rel_err(p, want) < 1e-6, "power " + num(p) + " vs " + num(want));
    }
    const double dt = seconds_since(t0);
    c.expect(dt < 1.0, "runtime " + num(dt) + " s");
    return c;
}

Check c2() {
    Check c;
    Rng rng(11);
    for (int k = 0; k < 100; ++k) {
        Scene s;
        s.l_t = 1 + static_cast<int>(rng.uniform() * 32);
        s.n_ris = 1 + static_cast<int>(rng.uniform() * 256);
        s.target_position = {10.0 + 80.0 * rng.uniform(), -40.0 + 80.0 * rng.uniform()};
        s.ris_position = {10.0 + 80.0 * rng.uniform(), 50.0 + 20.0 * rng.uniform()};
        s.pathloss_exp_direct = 2.0 + rng.uniform();
        s.pathloss_exp_ris = 2.0 + rng.uniform();
        s.seed = 1000 + k;
        const LinkSet L = build_links(s);
        // E||alpha a_t + G_t(phi . b)||^2 over independent zero-mean gains,
        // with phi cancelling the incident and departure phases element-wise.
        const CVec b_inc = steering_vector(s.ris_array(), L.angles.omega_t);
        cplx ris_sum = 0.0;
        for (int i = 0; i < s.n_ris; ++i) {
            const cplx phi = b_inc[i] * std::conj(L.b_target[i]);
            ris_sum += std::conj(b_inc[i]) * phi * L.b_target[i];
        }
        const CVec a_om = steering_vector(s.tx_array(), L.angles.omega_t);
        double direct = 0.0, ris = 0.0;
        for (int i = 0; i < s.l_t; ++i) {
            direct += std::norm(L.a_t[i]);
            ris += std::norm(a_om[i] * ris_sum);
        }
        const double want = std::norm(L.alpha_t) * direct + std::norm(L.beta_t) * ris;
        const double got = isotropic_illumination(s);
        c.expect(rel_err(got, want) < 1e-12, "draw " + std::to_string(k) + ": " + num(got) + " vs " + num(want));
    }
    return c;
}

Check c3() {
    Check c;
    const auto t0 = Clock::now();
    const RunConfig cfg = load("detect.cfg");
    const Scene s = cfg.scene();
    const LinkSet L = build_links(s);
    const CVec h = L.alpha_t * L.a_t;
    const long trials = 100000;
    std::uint64_t seed = 40;
    for (double pf : {0.1, 0.01}) {
        const DetectionConfig dc = DetectionConfig::from_false_alarm(pf);
        for (double snr_db : {0.0, 5.0, 10.0}) {
            const double snr = db_to_linear(snr_db);
            const double power = snr * s.noise_power_sensing / (s.l_s * s.target_gain_var);
            const CVec w = h / h.squaredNorm() * std::sqrt(power);
            const GlrtResult r =
                glrt_monte_carlo(s, L, w, CVec(0), trials, dc, seed++, TargetModel::fixed_amplitude);
            c.expect(std::abs(r.empirical_pf - pf) <= 3.0 * binomial_sigma(pf, trials),
                     "pf " + num(r.empirical_pf) + " vs " + num(pf));
            const double pd = marcum_quadrature(std::sqrt(2.0 * snr), std::sqrt(-2.0 * std::log(pf)));
            c.expect(std::abs(r.empirical_pd - pd) <= 3.0 * binomial_sigma(pd, trials),
                     "pd " + num(r.empirical_pd) + " vs " + num(pd) + " at " + num(snr_db) + " dB");
        }
    }
    const double dt = seconds_since(t0);
    c.expect(dt < 10.0, "runtime " + num(dt) + " s");
    return c;
}

Check c4() {
    Check c;
    int count = 0;
    for (double a : {0.0, 0.5, 1.25, 2.5, 5.0})
        for (double b : {0.25, 1.0, 3.0, 5.0}) {
            const double got = marcum_q1(a, b), want = marcum_quadrature(a, b);
            c.expect(std::abs(got - want) < 1e-8, "Q1(" + num(a) + "," + num(b) + ")");
            ++count;
        }
    c.expect(count == 20, "grid size");
    return c;
}

// sigma_s^2 L_S / (2 sigma_eta^2 T ||a_r_dot||^2 ||a_t||^2)
double strong_crb(const IsacScenario& sc) {
    return sc.sigma_s2 * sc.l_s() / (2.0 * sc.sigma_eta2 * sc.samples * sc.a_r_dot.squaredNorm() * sc.a_t.squaredNorm());
}

IsacScenario reference_isac(double rho) {
    const RunConfig cfg = load("isac_tradeoff.cfg");
    Scene s = cfg.scene();
    const LinkSet L = build_links(s);
    IsacScenario sc = isac_scenario_from_scene(s, L.a_t);
    sc.h_c = make_coupled_channel(sc.a_t, rho, cfg.seed, reference_channel_gain(s));
    return sc;
}

Check c5() {
    Check c;
    {
        const IsacScenario sc = reference_isac(1.0);
        const double rc = std::log2(1.0 + sc.h_c.squaredNorm() / sc.sigma_c2);
        for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0 - 1e-12}) {
            const IsacSolution s = crb_min_beamformer(sc, frac * rc);
            c.expect(rel_err(s.crb, strong_crb(sc)) < 1e-9, "rho=1 crb");
            c.expect(std::abs(s.rate - rc) < 1e-9, "rho=1 rate " + num(s.rate) + " vs " + num(rc));
        }
    }
    {
        const IsacScenario sc = reference_isac(0.0);
        const double rmax = std::log2(1.0 + sc.budget * sc.h_c.squaredNorm() / sc.sigma_c2);
        for (double frac : {0.05, 0.3, 0.7, 0.95}) {
            const double r0 = frac * rmax;
            const double x = (std::exp2(r0) - 1.0) * sc.sigma_c2 / sc.h_c.squaredNorm();
            const double want = strong_crb(sc) / (1.0 - x);
            const IsacSolution s = crb_min_beamformer(sc, r0);
            c.expect(rel_err(s.crb, want) < 1e-9, "rho=0 crb at R0=" + num(r0));
        }
    }
    return c;
}

Check c6() {
    Check c;
    const IsacScenario base = reference_isac(0.5);
    const double gain = base.h_c.norm();
    Rng rng(606);
    for (int inst = 0; inst < 100; ++inst) {
        IsacScenario sc = base;
        sc.h_c = make_coupled_channel(sc.a_t, rng.uniform(), 7000 + inst, gain);
        const double r0 = rng.uniform() * max_achievable_rate(sc);
        const IsacSolution s = crb_min_beamformer(sc, r0);
        const double q = sc.sigma_c2 * (std::exp2(r0) - 1.0);
        const CVec e1 = sc.h_c.conjugate().normalized();
        CVec e2 = sc.a_t.conjugate() - e1 * e1.dot(sc.a_t.conjugate());
        const bool rank2 = e2.norm() > 1e-9 * sc.a_t.norm();
        if (rank2) e2.normalize();
        const double radius = std::sqrt(sc.budget);
        double best = kInf;
        for (int k = 0; k < 10000; ++k) {
            const cplx z1 = rng.complex_normal(1.0);
            const cplx z2 = rank2 ? rng.complex_normal(1.0) : cplx(0.0);
            const double n = std::sqrt(std::norm(z1) + std::norm(z2));
            CVec w = (z1 / n * radius) * e1;
            if (rank2) w += (z2 / n * radius) * e2;
            if (std::norm((sc.h_c.transpose() * w)(0)) < q) continue;
            best = std::min(best, isac_crb(w, sc));
        }
        if (std::isfinite(best)) c.expect(best >= s.crb * (1.0 - 1e-6), "instance " + std::to_string(inst));
    }
    return c;
}

Check c7() {
    Check c;
    const auto t0 = Clock::now();
    const RunConfig cfg = load("isac_tradeoff.cfg");
    const Scene s = cfg.scene();
    const IsacScenario tmpl = isac_scenario_from_scene(s, build_links(s).a_t);
    const std::vector<double> rhos = {0.0, 0.3, 0.6, 0.9, 1.0};
    const auto& r0 = cfg.rate_threshold;
    const auto rows = tradeoff_curve(tmpl, reference_channel_gain(s), rhos, r0, cfg.seed);
    const std::size_t m = r0.size();
    auto at = [&](std::size_t i, std::size_t j) -> const TradeoffRow& { return rows[i * m + j]; };
    for (std::size_t i = 0; i < rhos.size(); ++i)
        for (std::size_t j = 0; j < m; ++j) {
            if (!at(i, j).crb) continue;
            if (j > 0 && at(i, j - 1).crb)
                c.expect(*at(i, j).crb >= *at(i, j - 1).crb * (1 - 1e-12), "rate monotonicity at rho=" + num(rhos[i]));
            if (i > 0 && at(i - 1, j).crb)
                c.expect(*at(i, j).crb <= *at(i - 1, j).crb * (1 + 1e-12), "rho monotonicity at R0=" + num(r0[j]));
        }
    int flat = 0;
    for (std::size_t j = 0; j < m; ++j)
        if (at(4, j).crb) {
            c.expect(rel_err(*at(4, j).crb, *at(4, 0).crb) < 1e-9, "rho=1 not flat");
            ++flat;
        }
    c.expect(flat >= 2, "rho=1 curve has too few feasible points");
    const double dt = seconds_since(t0);
    c.expect(dt < 5.0, "runtime " + num(dt) + " s");
    return c;
}

CMat random_matrix(Rng& rng, int r, int cols, double var) {
    CMat m(r, cols);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.complex_normal(var);
    return m;
}

Check c8() {
    Check c;
    double worst = 0.0;
    for (int n : {2, 8, 32})
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng(5000 + 97 * n + seed);
            CouplingProblem p;
            p.a_t = rng.complex_normal_vector(6, 1.0);
            p.a_r = rng.complex_normal_vector(6, 1.0);
            p.h_bu = rng.complex_normal_vector(6, 1.0);
            p.F_t = random_matrix(rng, 6, n, 1.0 / n);
            p.F_r = random_matrix(rng, 6, n, 1.0 / n);
            p.F_c = random_matrix(rng, 6, n, 1.0 / n);
            const CVec phi = rng.unit_modulus_vector(n);
            const CVec g = coupling_gradient(p, phi);
            // d f / d conj(phi) = (df/dRe + j df/dIm) / 2 by central differences.
            CVec fd(n);
            const double h = 1e-6;
            for (int k = 0; k < n; ++k) {
                CVec xp = phi, xm = phi;
                xp[k] += h;
                xm[k] -= h;
                const double dre = (coupling_objective(p, xp) - coupling_objective(p, xm)) / (2 * h);
                xp = phi;
                xm = phi;
                xp[k] += cplx(0.0, h);
                xm[k] -= cplx(0.0, h);
                const double dim = (coupling_objective(p, xp) - coupling_objective(p, xm)) / (2 * h);
                fd[k] = 0.5 * cplx(dre, dim);
            }
            worst = std::max(worst, (g - fd).norm() / g.norm());
        }
    c.expect(worst < 1e-5, "worst relative error " + num(worst));
    return c;
}

Scene coupled_scene(int n, std::uint64_t seed) {
    Scene s = load("ris_isac_tradeoff.cfg").scene();
    s.n_ris = n;
    s.seed = seed;
    return s;
}

Check c9() {
    Check c;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Scene s = coupled_scene(16, seed);
        const CouplingProblem p = coupling_problem(build_links(s));
        SolverConfig cfg;
        cfg.seed = seed;
        const RisOptimizationResult r = optimize_ris_profile(p, std::nullopt, cfg);
        Rng rng(derive_seed(4242, seed));
        for (int k = 0; k < 100; ++k) {
            const double f = coupling_objective(p, rng.unit_modulus_vector(s.n_ris));
            c.expect(r.objective <= f, "scene " + std::to_string(seed) + " beaten by a random profile");
        }
    }
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const CouplingProblem p = coupling_problem(build_links(coupled_scene(1, seed)));
        double grid = kInf;
        for (int k = 0; k < 4096; ++k)
            grid = std::min(grid, coupling_objective(p, CVec::Constant(1, std::polar(1.0, 2 * kPi * k / 4096))));
        const double obj = optimize_ris_profile(p, std::nullopt).objective;
        // A grid of step 2 pi / 4096 misses the optimum by O(step^2).
        c.expect(obj <= grid + 1e-6 * std::abs(grid) && obj >= grid - 1e-5 * std::abs(grid),
                 "N=1 " + num(obj) + " vs grid " + num(grid));
    }
    return c;
}

Check c10() {
    Check c;
    const auto t0 = Clock::now();
    const RunConfig cfg = load("ris_isac_tradeoff.cfg");
    const Scene s = cfg.scene();
    const auto& r0 = cfg.rate_threshold;
    const std::size_t m = r0.size();
    RisTradeoffOptions opt;
    opt.ris_solver = cfg.solver_config();
    opt.bf_solver = cfg.solver_config();

    const auto strong = ris_isac_tradeoff(s, CouplingMode::strong, {RisMode::with_ris, RisMode::without_ris}, r0, opt);
    for (std::size_t b = 0; b < 2; ++b) {
        std::optional<double> first;
        int feasible = 0;
        for (std::size_t j = 0; j < m; ++j) {
            const auto& row = strong[b * m + j];
            if (!row.crb) continue;
            if (!first) first = row.crb;
            c.expect(rel_err(*row.crb, *first) < 1e-6, std::string("strong ") + to_string(row.mode) + " not flat");
            ++feasible;
        }
        c.expect(feasible >= 2, "strong coupling: too few feasible points");
    }

    const auto weak = ris_isac_tradeoff(s, CouplingMode::weak,
                                        {RisMode::with_ris, RisMode::without_ris, RisMode::gain_matched}, r0, opt);
    int common = 0, interior = 0;
    for (std::size_t j = 0; j < m; ++j) {
        const auto& with = weak[j];
        const auto& without = weak[m + j];
        const auto& ref = weak[2 * m + j];
        if (with.crb && without.crb) {
            c.expect(*with.crb <= *without.crb, "weak: without-RIS beats with-RIS at R0=" + num(r0[j]));
            ++common;
        }
        if (j > 0 && j + 1 < m && with.crb && ref.crb && *with.crb < *ref.crb * (1 - 1e-6)) ++interior;
    }
    c.expect(common >= 1, "weak: no common feasible R0");
    c.expect(interior >= 1, "weak: no interior R0 where with-RIS beats the gain-matched reference");
    const double dt = seconds_since(t0);
    c.expect(dt < 120.0, "runtime " + num(dt) + " s");
    return c;
}

Check c11() {
    Check c;
    const auto t0 = Clock::now();
    std::vector<std::vector<SweepRow>> runs;
    for (const char* name : {"sense_sweep_n100.cfg", "sense_sweep_n400.cfg"}) {
        const RunConfig cfg = load(name);
        const std::vector<SweepMode> modes = {SweepMode::ris_aided, SweepMode::without_ris};
        const auto wps = config_waypoints(cfg);
        const auto rows = trajectory_sweep(cfg.scene(), wps, modes, cfg.solver_config());
        for (std::size_t i = 0; i < wps.size(); ++i) {
            const SweepRow& ris = rows[2 * i];
            const SweepRow& bare = rows[2 * i + 1];
            if (wps[i].blocked) {
                c.expect(std::isinf(bare.crb), wps[i].label + ": without-RIS CRB finite while blocked");
                c.expect(std::isfinite(ris.crb), wps[i].label + ": RIS-aided CRB not finite");
            }
            c.expect(ris.power >= bare.power, wps[i].label + ": RIS-aided power below without-RIS");
        }
        c.expect(std::any_of(wps.begin(), wps.end(), [](const Waypoint& w) { return w.blocked; }),
                 "no blocked waypoint in sweep");
        runs.push_back(rows);
    }
    for (std::size_t i = 0; i < runs[0].size(); i += 2)
        c.expect(runs[1][i].power >= runs[0][i].power * (1.0 - 1e-6), runs[0][i].waypoint + ": N=400 below N=100");
    const double dt = seconds_since(t0);
    c.expect(dt < 60.0, "runtime " + num(dt) + " s");
    return c;
}

Check c12() {
    Check c;
    const auto t0 = Clock::now();
    const RunConfig cfg = load("beampattern.cfg");
    const Scene s = cfg.scene();
    const BeampatternSpec spec = config_beampattern(cfg);
    c.expect(s.l_t == 10 && spec.grid.size() == 181, "scenario is not L_T=10, D=181");
    const double gamma = db_to_linear(cfg.sinr_threshold_db);
    const DualDesignResult r = design_dual_waveform(s, spec, gamma, DualSolverConfig{}, cfg.seed);
    const DualDesign& d = r.design;
    const double diag = (d.R.diagonal().real().array() - 1.0).abs().maxCoeff();
    c.expect(diag < 1e-6, "diag(R) residual " + num(diag));
    const double sinr = user_sinr(d.phi, d.c, d.R, s);
    c.expect(sinr >= gamma * (1.0 - 1e-6), "SINR " + num(sinr) + " below " + num(gamma));
    Eigen::SelfAdjointEigenSolver<CMat> eig(d.R);
    c.expect(eig.eigenvalues().minCoeff() >= -1e-9 * eig.eigenvalues().maxCoeff(), "R not PSD");
    const UlaGeometry g = s.tx_array();
    const CMat rs = d.W * d.W.adjoint();
    const double peak = beampattern(rs, g, spec.grid).maxCoeff();
    const double toward = radiated_power(rs, g, bearing(s.bs_position, s.ris_position));
    const double dip = linear_to_db(peak / toward);
    c.expect(dip >= 10.0, "sensing dip toward RIS " + num(dip) + " dB");
    for (std::size_t i = 1; i < r.trace.size(); ++i)
        c.expect(r.trace[i] <= r.trace[i - 1], "objective trace increased at " + std::to_string(i));
    const double dt = seconds_since(t0);
    c.expect(dt < 60.0, "runtime " + num(dt) + " s");
    return c;
}

Check c13() {
    Check c;
    const fs::path tmp = fs::temp_directory_path() / ("risisac_acceptance_" + std::to_string(::getpid()));
    for (const auto& entry : fs::directory_iterator(g_configs)) {
        if (entry.path().extension() != ".cfg") continue;
        const RunConfig cfg = parse_config(slurp(entry.path()));
        std::string first[2];
        for (int run = 0; run < 2; ++run) {
            const fs::path out = tmp / (entry.path().stem().string() + "_" + std::to_string(run));
            const std::string cmd = "\"" + g_cli.string() + "\" " + cfg.experiment + " --config \"" +
                                    entry.path().string() + "\" --out \"" + out.string() + "\" > /dev/null";
            if (std::system(cmd.c_str()) != 0) {
                c.expect(false, "CLI failed on " + entry.path().filename().string());
                continue;
            }
            std::string bytes = slurp(out / (cfg.experiment + ".csv"));
            if (fs::exists(out / (cfg.experiment + "_phases.csv"))) bytes += slurp(out / (cfg.experiment + "_phases.csv"));
            c.expect(!bytes.empty(), "empty CSV for " + entry.path().filename().string());
            if (run == 0)
                first[0] = bytes;
            else
                c.expect(bytes == first[0], "CSV differs between runs for " + entry.path().filename().string());
        }
    }
    fs::remove_all(tmp);
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: acceptance <risisac_cli> <configs dir>\n";
        return 2;
    }
    g_cli = argv[1];
    g_configs = argv[2];
    const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
        {"RIS array gain L_T N^2 without direct path", c1},
        {"isotropic illumination identity", c2},
        {"GLRT false alarm and detection calibration", c3},
        {"Marcum Q1 vs quadrature", c4},
        {"closed-form ISAC special cases", c5},
        {"closed form dominates span search", c6},
        {"ISAC trade-off monotone structure", c7},
        {"coupling gradient vs finite differences", c8},
        {"RIS profile optimization dominance", c9},
        {"RIS-ISAC trade-off structure", c10},
        {"sensing sweep structure", c11},
        {"dual waveform feasibility", c12},
        {"CLI determinism", c13},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check c;
        try {
            c = criteria[i].second();
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail = std::string("exception: ") + e.what();
        }
        failed += c.ok ? 0 : 1;
        std::printf("[%s] C%zu %s%s%s\n", c.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    c.ok ? "" : ": ", c.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
