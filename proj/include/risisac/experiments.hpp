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

#include "risisac/dual_waveform_designer.hpp"
#include "risisac/isac_closed_form.hpp"
#include "risisac/ris_isac_optimizer.hpp"
#include "risisac/scenario_config.hpp"
#include "risisac/sensing_engine.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace risisac {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // RFC 4180, CRLF-free (LF line ends).
    std::string to_csv() const {
        std::string out;
        auto emit = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i) out += ',';
                const std::string& f = r[i];
                if (f.find_first_of(",\"\n\r") == std::string::npos) {
                    out += f;
                } else {
                    out += '"';
                    for (char ch : f) {
                        if (ch == '"') out += '"';
                        out += ch;
                    }
                    out += '"';
                }
            }
            out += '\n';
        };
        emit(header);
        for (const auto& r : rows) emit(r);
        return out;
    }
};

struct ExperimentOutput {
    std::string experiment;
    CsvTable table;
    std::optional<CsvTable> phases;               // beampattern only
    std::map<std::string, double> diagnostics;  // solver summary for the JSON report
};

// Fixed-precision number text; "inf"/"-inf" for infinities, "" for missing.
inline std::string csv_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string csv_number(const std::optional<double>& v) { return v ? csv_number(*v) : std::string(); }

inline std::string waypoint_label(int i) {
    return i < 26 ? std::string(1, static_cast<char>('A' + i)) : "P" + std::to_string(i + 1);
}

inline std::vector<Waypoint> config_waypoints(const RunConfig& c) {
    std::vector<Waypoint> w;
    for (int i = 0; i < c.waypoint_count; ++i) {
        Waypoint p;
        p.label = waypoint_label(i);
        p.position = {c.waypoint_start[0] + i * c.waypoint_step[0], c.waypoint_start[1] + i * c.waypoint_step[1]};
        p.blocked = detail::cfg::contains(c.blocked_waypoints, p.label);
        w.push_back(p);
    }
    return w;
}

inline BeampatternSpec config_beampattern(const RunConfig& c) {
    std::vector<RectBeam> beams;
    for (std::size_t i = 0; i < c.beam_centers_deg.size(); ++i)
        beams.push_back({deg_to_rad(c.beam_centers_deg[i]), deg_to_rad(c.beam_widths_deg[i]), c.beam_levels[i]});
    std::vector<double> targets;
    for (double t : c.target_angles_deg) targets.push_back(deg_to_rad(t));
    return make_beampattern_spec(uniform_grid(deg_to_rad(c.grid_min_deg), deg_to_rad(c.grid_max_deg), c.grid_points),
                                 beams, targets, c.alpha1, c.alpha2);
}

namespace detail {

inline SweepMode parse_sweep_mode(const std::string& s) {
    if (s == "ris_aided") return SweepMode::ris_aided;
    if (s == "ris_only") return SweepMode::ris_only;
    return SweepMode::without_ris;
}

inline RisMode parse_ris_mode(const std::string& s) {
    if (s == "with_ris") return RisMode::with_ris;
    if (s == "without_ris") return RisMode::without_ris;
    return RisMode::gain_matched;
}

inline ExperimentOutput run_sense_sweep(const RunConfig& c, int threads) {
    ExperimentOutput out;
    out.table.header = {"waypoint", "mode", "power_db", "crb"};
    std::vector<SweepMode> modes;
    for (const auto& m : c.sweep_modes) modes.push_back(parse_sweep_mode(m));
    const auto rows = trajectory_sweep(c.scene(), config_waypoints(c), modes, c.solver_config(), threads);
    int unconverged = 0;
    for (const SweepRow& r : rows) {
        out.table.rows.push_back({r.waypoint, to_string(r.mode), csv_number(linear_to_db(r.power)), csv_number(r.crb)});
        unconverged += r.converged ? 0 : 1;
    }
    out.diagnostics["rows"] = static_cast<double>(rows.size());
    out.diagnostics["unconverged_rows"] = unconverged;
    return out;
}

inline ExperimentOutput run_detect(const RunConfig& c, int threads) {
    ExperimentOutput out;
    out.table.header = {"snr_db", "pf", "pd_formula", "pd_mc"};
    const Scene s = c.scene();
    const LinkSet L = build_links(s);
    CVec phi = CVec::Ones(s.n_ris);
    CVec w;
    if (s.n_ris > 0) {
        const IlluminationResult r = maximize_illumination(L, s.transmit_power, {}, c.solver_config());
        phi = r.phi.phasors();
        w = r.w.weights;
    } else {
        w = matched_filter_beamformer(L.alpha_t * L.a_t, s.transmit_power).weights;
    }
    const double p0 = illumination_power(build_sensing_channels(L, phi).h_t, w);
    if (!(p0 > 0.0)) throw DegenerateChannel("detect: target is not illuminated in this scene");
    const double snr0 = matched_filter_snr(p0, s);
    out.diagnostics["native_snr_db"] = linear_to_db(snr0);
    const TargetModel model =
        c.target_model == "fixed_amplitude" ? TargetModel::fixed_amplitude : TargetModel::complex_gaussian;
    std::uint64_t row = 0;
    for (double pf : c.false_alarm) {
        const DetectionConfig dc = DetectionConfig::from_false_alarm(pf);
        for (double snr_db : c.snr_db) {
            const double snr = db_to_linear(snr_db);
            const CVec ws = w * std::sqrt(snr / snr0);  // sets the matched-filter SNR
            const GlrtResult g =
                glrt_monte_carlo(s, L, ws, phi, c.trials, dc, derive_seed(c.seed, row++), model, threads);
            const double pd = model == TargetModel::fixed_amplitude ? detection_probability(snr, dc)
                                                                    : std::pow(pf, 1.0 / (1.0 + snr));
            out.table.rows.push_back({csv_number(snr_db), csv_number(pf), csv_number(pd), csv_number(g.empirical_pd)});
            out.diagnostics["max_abs_pd_gap"] =
                std::max(out.diagnostics["max_abs_pd_gap"], std::abs(pd - g.empirical_pd));
        }
    }
    return out;
}

inline ExperimentOutput run_isac_tradeoff(const RunConfig& c, int threads) {
    ExperimentOutput out;
    out.table.header = {"rho", "R0", "rate_bits", "crb"};
    Scene s = c.scene();
    s.n_ris = 0;
    const LinkSet L = build_links(s);
    const IsacScenario tmpl = isac_scenario_from_scene(s, L.a_t);
    const double gain = reference_channel_gain(s);
    const auto rows = tradeoff_curve(tmpl, gain, c.rho, c.rate_threshold, c.seed, threads);
    int infeasible = 0;
    for (const TradeoffRow& r : rows) {
        out.table.rows.push_back(
            {csv_number(r.rho), csv_number(r.r0), csv_number(r.rate), r.crb ? csv_number(*r.crb) : "inf"});
        infeasible += r.rate ? 0 : 1;
    }
    out.diagnostics["user_channel_norm"] = gain;
    out.diagnostics["infeasible_rows"] = infeasible;
    return out;
}

inline ExperimentOutput run_ris_isac_tradeoff(const RunConfig& c, int threads) {
    ExperimentOutput out;
    out.table.header = {"mode", "coupling", "R0", "rate_bits", "crb"};
    std::vector<RisMode> modes;
    for (const auto& m : c.ris_modes) modes.push_back(parse_ris_mode(m));
    RisTradeoffOptions opt;
    opt.ris_solver = c.solver_config();
    opt.bf_solver = c.solver_config();
    opt.threads = threads;
    int infeasible = 0;
    for (const auto& cm : c.coupling) {
        const CouplingMode coupling = cm == "strong" ? CouplingMode::strong : CouplingMode::weak;
        for (const RisTradeoffRow& r : ris_isac_tradeoff(c.scene(), coupling, modes, c.rate_threshold, opt)) {
            out.table.rows.push_back({to_string(r.mode), to_string(r.coupling), csv_number(r.r0), csv_number(r.rate),
                                      r.crb ? csv_number(*r.crb) : "inf"});
            infeasible += r.rate ? 0 : 1;
        }
    }
    out.diagnostics["infeasible_rows"] = infeasible;
    return out;
}

inline ExperimentOutput run_beampattern(const RunConfig& c) {
    ExperimentOutput out;
    out.table.header = {"angle_deg", "j_total", "j_comm", "j_sense"};
    const Scene s = c.scene();
    const BeampatternSpec spec = config_beampattern(c);
    const DualDesignResult r =
        design_dual_waveform(s, spec, db_to_linear(c.sinr_threshold_db), DualSolverConfig{}, c.seed);
    const DualDesign& d = r.design;
    const UlaGeometry g = s.tx_array();
    const CMat rc = d.c * d.c.adjoint();
    const CMat rs = d.W * d.W.adjoint();
    for (Eigen::Index i = 0; i < spec.grid.size(); ++i) {
        const double th = spec.grid[i];
        out.table.rows.push_back({csv_number(rad_to_deg(th)), csv_number(radiated_power(d.R, g, th)),
                                  csv_number(radiated_power(rc, g, th)), csv_number(radiated_power(rs, g, th))});
    }
    CsvTable ph;
    ph.header = {"element", "phase_rad"};
    const RVec ang = d.phi.angles();
    for (Eigen::Index i = 0; i < ang.size(); ++i) ph.rows.push_back({std::to_string(i), csv_number(ang[i])});
    out.phases = ph;

    const double ris_angle = bearing(s.bs_position, s.ris_position);
    const RVec js = beampattern(rs, g, spec.grid);
    out.diagnostics["loss"] = r.loss;
    out.diagnostics["tau"] = d.tau;
    out.diagnostics["sinr_db"] = linear_to_db(r.sinr);
    out.diagnostics["max_sinr_db"] = linear_to_db(r.max_sinr);
    out.diagnostics["diag_residual"] = r.diag_residual;
    out.diagnostics["iterations"] = r.iterations;
    out.diagnostics["converged"] = r.converged ? 1.0 : 0.0;
    out.diagnostics["sensing_dip_toward_ris_db"] = linear_to_db(js.maxCoeff() / radiated_power(rs, g, ris_angle));
    return out;
}

}  // namespace detail

// Runs the experiment named in c.experiment. Output rows follow input order
// regardless of `threads`.
inline ExperimentOutput run_experiment(const RunConfig& c, int threads = 1) {
    validate(c);
    if (threads < 1) throw InvalidInput("run_experiment: threads must be >= 1");
    ExperimentOutput out;
    if (c.experiment == "sense-sweep")
        out = detail::run_sense_sweep(c, threads);
    else if (c.experiment == "detect")
        out = detail::run_detect(c, threads);
    else if (c.experiment == "isac-tradeoff")
        out = detail::run_isac_tradeoff(c, threads);
    else if (c.experiment == "ris-isac-tradeoff")
        out = detail::run_ris_isac_tradeoff(c, threads);
    else if (c.experiment == "beampattern")
        out = detail::run_beampattern(c);
    else
        throw InvalidInput("run_experiment: no experiment selected");
    out.experiment = c.experiment;
    return out;
}

}  // namespace risisac
