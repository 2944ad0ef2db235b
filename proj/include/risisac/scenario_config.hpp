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

#include <array>
#include <charconv>
#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace risisac {

class ConfigError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {"sense-sweep", "detect", "isac-tradeoff", "ris-isac-tradeoff",
                                                   "beampattern"};
    return names;
}

// Run description in engineering units (W, dBm, GHz, m, degrees). Unit
// conversion happens in scene() and in the experiment runners, so
// parse(render(cfg)) reproduces cfg exactly.
struct RunConfig {
    using Pos = std::array<double, 2>;

    std::string experiment;  // empty: taken from the command line
    std::uint64_t seed = 1;
    std::string output_path = "out";

    // scenario
    double transmit_power = 1.0;  // W
    double noise_sensing_dbm = -60.0;
    double noise_comms_dbm = -60.0;
    double center_frequency_ghz = 3.0;
    int l_t = 15;
    int l_s = 15;
    int n_ris = 0;
    double spacing_wavelengths = 0.5;
    Pos bs_position{0.0, 0.0};
    Pos target_position{40.0, 0.0};
    Pos ris_position{30.0, 30.0};
    std::optional<Pos> user_position;
    double pathloss_exp_direct = 2.5;
    double pathloss_exp_ris = 2.2;
    double target_gain_var = 1.0;
    int samples_t = 1;
    bool blocked_direct = false;
    bool user_direct_blocked = false;
    bool geometric_ris_departure = false;
    std::vector<double> rate_threshold{0.0, 2.0, 4.0, 6.0, 8.0};  // R0 grid [bits/s/Hz]
    double sinr_threshold_db = 20.0;

    SolverConfig solver;

    // sense-sweep
    Pos waypoint_start{5.0, 15.0};
    Pos waypoint_step{10.0, 0.0};
    int waypoint_count = 10;
    std::vector<std::string> blocked_waypoints;
    std::vector<std::string> sweep_modes{"ris_aided", "ris_only", "without_ris"};

    // detect
    std::vector<double> snr_db{0.0, 5.0, 10.0};
    std::vector<double> false_alarm{0.1, 0.01};
    long trials = 100000;
    std::string target_model = "fixed_amplitude";

    // isac-tradeoff
    std::vector<double> rho{0.0, 0.3, 0.6, 0.9, 1.0};

    // ris-isac-tradeoff
    std::vector<std::string> coupling{"strong", "weak"};
    std::vector<std::string> ris_modes{"with_ris", "without_ris", "gain_matched"};

    // beampattern
    int grid_points = 181;
    double grid_min_deg = -90.0;
    double grid_max_deg = 90.0;
    std::vector<double> beam_centers_deg;
    std::vector<double> beam_widths_deg;
    std::vector<double> beam_levels;
    std::vector<double> target_angles_deg;
    double alpha1 = 1.0;
    double alpha2 = 1.0;

    bool operator==(const RunConfig&) const = default;

    Scene scene() const {
        Scene s;
        s.bs_position = {bs_position[0], bs_position[1]};
        s.ris_position = {ris_position[0], ris_position[1]};
        s.target_position = {target_position[0], target_position[1]};
        if (user_position) s.user_position = Point2{(*user_position)[0], (*user_position)[1]};
        s.l_t = l_t;
        s.l_s = l_s;
        s.n_ris = n_ris;
        s.spacing_wavelengths = spacing_wavelengths;
        s.pathloss_exp_direct = pathloss_exp_direct;
        s.pathloss_exp_ris = pathloss_exp_ris;
        s.carrier_frequency_hz = center_frequency_ghz * 1e9;
        s.noise_power_sensing = dbm_to_watts(noise_sensing_dbm);
        s.noise_power_comms = dbm_to_watts(noise_comms_dbm);
        s.target_gain_var = target_gain_var;
        s.samples = samples_t;
        s.transmit_power = transmit_power;
        s.blocked_direct = blocked_direct;
        s.geometric_ris_departure = geometric_ris_departure;
        if (user_direct_blocked) s.overrides.bu_gain = cplx(0.0);
        s.seed = seed;
        return s;
    }

    SolverConfig solver_config() const {
        SolverConfig c = solver;
        c.seed = seed;
        return c;
    }
};

namespace detail::cfg {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double to_double(const std::string& key, const std::string& s) {
    const std::string t = trim(s);
    if (t == "inf") return kInf;
    if (t == "-inf") return -kInf;
    double v = 0.0;
    const char* end = t.data() + t.size();
    auto [p, ec] = std::from_chars(t.data(), end, v);
    if (ec != std::errc() || p != end || t.empty()) throw ConfigError("malformed number for '" + key + "': '" + t + "'");
    return v;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& s) {
    const std::string t = trim(s);
    Int v = 0;
    const char* end = t.data() + t.size();
    auto [p, ec] = std::from_chars(t.data(), end, v);
    if (ec != std::errc() || p != end || t.empty()) throw ConfigError("malformed integer for '" + key + "': '" + t + "'");
    return v;
}

inline bool to_bool(const std::string& key, const std::string& s) {
    const std::string t = trim(s);
    if (t == "true") return true;
    if (t == "false") return false;
    throw ConfigError("expected true or false for '" + key + "': '" + t + "'");
}

inline std::vector<std::string> split_items(const std::string& key, const std::string& s) {
    const std::string t = trim(s);
    if (t.size() < 2 || t.front() != '[' || t.back() != ']') throw ConfigError("expected [a, b, ...] for '" + key + "'");
    std::vector<std::string> out;
    const std::string body = trim(std::string_view(t).substr(1, t.size() - 2));
    if (body.empty()) return out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("empty list element for '" + key + "'");
        out.push_back(item);
    }
    return out;
}

// [a, b, ...] or range(start, stop, count) with count evenly spaced points.
inline std::vector<double> to_doubles(const std::string& key, const std::string& s) {
    const std::string t = trim(s);
    if (t.rfind("range(", 0) == 0 && t.back() == ')') {
        const auto items = split_items(key, "[" + t.substr(6, t.size() - 7) + "]");
        if (items.size() != 3) throw ConfigError("range() for '" + key + "' takes start, stop, count");
        const double a = to_double(key, items[0]);
        const double b = to_double(key, items[1]);
        const int n = to_int<int>(key, items[2]);
        if (n < 1) throw ConfigError("range() count for '" + key + "' must be >= 1");
        std::vector<double> v(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
        return v;
    }
    std::vector<double> v;
    for (const auto& item : split_items(key, t)) v.push_back(to_double(key, item));
    return v;
}

inline RunConfig::Pos to_pos(const std::string& key, const std::string& s) {
    const auto v = to_doubles(key, s);
    if (v.size() != 2) throw ConfigError("expected [x, y] for '" + key + "'");
    return {v[0], v[1]};
}

inline std::string render_list(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
    return out + "]";
}

inline std::string render_list(const std::vector<std::string>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
    return out + "]";
}

inline std::string render_pos(const RunConfig::Pos& p) { return render_list(std::vector<double>{p[0], p[1]}); }

struct Field {
    const char* section;
    const char* key;
    bool required;
    std::function<void(RunConfig&, const std::string&)> parse;
    std::function<std::string(const RunConfig&)> render;
};

#define RISISAC_NUM(sec, name, req)                                                                         \
    Field{sec, #name, req, [](RunConfig& c, const std::string& v) { c.name = to_double(#name, v); },         \
          [](const RunConfig& c) { return fmt(c.name); }}
#define RISISAC_INT(sec, name, type, req)                                                                   \
    Field{sec, #name, req, [](RunConfig& c, const std::string& v) { c.name = to_int<type>(#name, v); },      \
          [](const RunConfig& c) { return std::to_string(c.name); }}
#define RISISAC_BOOL(sec, name)                                                                             \
    Field{sec, #name, false, [](RunConfig& c, const std::string& v) { c.name = to_bool(#name, v); },         \
          [](const RunConfig& c) { return std::string(c.name ? "true" : "false"); }}
#define RISISAC_POS(sec, name, req)                                                                         \
    Field{sec, #name, req, [](RunConfig& c, const std::string& v) { c.name = to_pos(#name, v); },            \
          [](const RunConfig& c) { return render_pos(c.name); }}
#define RISISAC_NUMS(sec, name)                                                                             \
    Field{sec, #name, false, [](RunConfig& c, const std::string& v) { c.name = to_doubles(#name, v); },      \
          [](const RunConfig& c) { return render_list(c.name); }}
#define RISISAC_STRS(sec, name)                                                                             \
    Field{sec, #name, false, [](RunConfig& c, const std::string& v) { c.name = split_items(#name, v); },     \
          [](const RunConfig& c) { return render_list(c.name); }}
#define RISISAC_SOLVER(name, kind)                                                                          \
    Field{"solver", #name, false, [](RunConfig& c, const std::string& v) { c.solver.name = kind(#name, v); }, \
          [](const RunConfig& c) { return fmt_any(c.solver.name); }}

inline std::string fmt_any(double v) { return fmt(v); }
inline std::string fmt_any(int v) { return std::to_string(v); }
inline double solver_num(const std::string& k, const std::string& v) { return to_double(k, v); }
inline int solver_int(const std::string& k, const std::string& v) { return to_int<int>(k, v); }

inline const std::vector<Field>& fields() {
    static const std::vector<Field> f = {
        Field{"run", "experiment", false,
              [](RunConfig& c, const std::string& v) { c.experiment = trim(v); },
              [](const RunConfig& c) { return c.experiment; }},
        Field{"run", "seed", false,
              [](RunConfig& c, const std::string& v) { c.seed = to_int<std::uint64_t>("seed", v); },
              [](const RunConfig& c) { return std::to_string(c.seed); }},
        Field{"run", "output_path", false,
              [](RunConfig& c, const std::string& v) { c.output_path = trim(v); },
              [](const RunConfig& c) { return c.output_path; }},

        RISISAC_NUM("scenario", transmit_power, false),
        RISISAC_NUM("scenario", noise_sensing_dbm, false),
        RISISAC_NUM("scenario", noise_comms_dbm, false),
        RISISAC_NUM("scenario", center_frequency_ghz, false),
        RISISAC_INT("scenario", l_t, int, true),
        RISISAC_INT("scenario", l_s, int, true),
        RISISAC_INT("scenario", n_ris, int, false),
        RISISAC_NUM("scenario", spacing_wavelengths, false),
        RISISAC_POS("scenario", bs_position, true),
        RISISAC_POS("scenario", target_position, true),
        RISISAC_POS("scenario", ris_position, false),
        Field{"scenario", "user_position", false,
              [](RunConfig& c, const std::string& v) {
                  if (trim(v) == "none")
                      c.user_position.reset();
                  else
                      c.user_position = to_pos("user_position", v);
              },
              [](const RunConfig& c) { return c.user_position ? render_pos(*c.user_position) : std::string("none"); }},
        RISISAC_NUM("scenario", pathloss_exp_direct, false),
        RISISAC_NUM("scenario", pathloss_exp_ris, false),
        RISISAC_NUM("scenario", target_gain_var, false),
        RISISAC_INT("scenario", samples_t, int, false),
        RISISAC_BOOL("scenario", blocked_direct),
        RISISAC_BOOL("scenario", user_direct_blocked),
        RISISAC_BOOL("scenario", geometric_ris_departure),
        RISISAC_NUMS("scenario", rate_threshold),
        RISISAC_NUM("scenario", sinr_threshold_db, false),

        RISISAC_SOLVER(tol_rel, solver_num),
        RISISAC_SOLVER(max_iter, solver_int),
        RISISAC_SOLVER(armijo_c, solver_num),
        RISISAC_SOLVER(backtrack, solver_num),
        RISISAC_SOLVER(initial_step, solver_num),
        RISISAC_SOLVER(restarts, solver_int),

        RISISAC_POS("sweep", waypoint_start, false),
        RISISAC_POS("sweep", waypoint_step, false),
        RISISAC_INT("sweep", waypoint_count, int, false),
        RISISAC_STRS("sweep", blocked_waypoints),
        RISISAC_STRS("sweep", sweep_modes),

        RISISAC_NUMS("detect", snr_db),
        RISISAC_NUMS("detect", false_alarm),
        RISISAC_INT("detect", trials, long, false),
        Field{"detect", "target_model", false,
              [](RunConfig& c, const std::string& v) { c.target_model = trim(v); },
              [](const RunConfig& c) { return c.target_model; }},

        RISISAC_NUMS("isac", rho),

        RISISAC_STRS("ris_isac", coupling),
        RISISAC_STRS("ris_isac", ris_modes),

        RISISAC_INT("beampattern", grid_points, int, false),
        RISISAC_NUM("beampattern", grid_min_deg, false),
        RISISAC_NUM("beampattern", grid_max_deg, false),
        RISISAC_NUMS("beampattern", beam_centers_deg),
        RISISAC_NUMS("beampattern", beam_widths_deg),
        RISISAC_NUMS("beampattern", beam_levels),
        RISISAC_NUMS("beampattern", target_angles_deg),
        RISISAC_NUM("beampattern", alpha1, false),
        RISISAC_NUM("beampattern", alpha2, false),
    };
    return f;
}

#undef RISISAC_NUM
#undef RISISAC_INT
#undef RISISAC_BOOL
#undef RISISAC_POS
#undef RISISAC_NUMS
#undef RISISAC_STRS
#undef RISISAC_SOLVER

inline bool known_section(const std::string& s) {
    for (const Field& f : fields())
        if (s == f.section) return true;
    return false;
}

template <typename T>
bool contains(const std::vector<T>& v, const T& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

inline void check(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

}  // namespace detail::cfg

// Range and consistency checks; throws ConfigError.
inline void validate(const RunConfig& c) {
    using detail::cfg::check;
    using detail::cfg::contains;
    check(c.experiment.empty() || contains(experiment_names(), c.experiment), "unknown experiment '" + c.experiment + "'");
    check(c.transmit_power > 0.0 && std::isfinite(c.transmit_power), "transmit_power must be > 0 W");
    check(c.noise_sensing_dbm > -300.0 && c.noise_sensing_dbm < 100.0, "noise_sensing_dbm out of range (-300, 100)");
    check(c.noise_comms_dbm > -300.0 && c.noise_comms_dbm < 100.0, "noise_comms_dbm out of range (-300, 100)");
    check(c.center_frequency_ghz > 0.0 && c.center_frequency_ghz < 1e4, "center_frequency_ghz out of range (0, 1e4)");
    check(c.l_t >= 1 && c.l_s >= 1, "l_t and l_s must be >= 1");
    check(c.n_ris >= 0, "n_ris must be >= 0");
    check(c.samples_t >= 1, "samples_t must be >= 1");
    check(c.target_gain_var > 0.0, "target_gain_var must be > 0");
    for (double r : c.rate_threshold) check(r >= 0.0 && std::isfinite(r), "rate_threshold entries must be >= 0");
    check(std::isfinite(c.sinr_threshold_db), "sinr_threshold_db must be finite");
    check(c.waypoint_count >= 1, "waypoint_count must be >= 1");
    check(c.waypoint_count <= 26 || c.blocked_waypoints.empty(), "blocked_waypoints needs waypoint_count <= 26");
    for (const auto& m : c.sweep_modes)
        check(contains<std::string>({"ris_aided", "ris_only", "without_ris"}, m), "unknown sweep mode '" + m + "'");
    for (double p : c.false_alarm) check(p > 0.0 && p < 1.0, "false_alarm entries must be in (0, 1)");
    for (double s : c.snr_db) check(std::isfinite(s), "snr_db entries must be finite");
    check(c.trials >= 1, "trials must be >= 1");
    check(c.target_model == "fixed_amplitude" || c.target_model == "complex_gaussian",
          "target_model must be fixed_amplitude or complex_gaussian");
    for (double r : c.rho) check(r >= 0.0 && r <= 1.0, "rho entries must be in [0, 1]");
    for (const auto& m : c.coupling) check(m == "strong" || m == "weak", "unknown coupling '" + m + "'");
    for (const auto& m : c.ris_modes)
        check(contains<std::string>({"with_ris", "without_ris", "gain_matched"}, m), "unknown RIS mode '" + m + "'");
    check(c.grid_points >= 1, "grid_points must be >= 1");
    check(c.grid_max_deg > c.grid_min_deg || c.grid_points == 1, "grid_max_deg must exceed grid_min_deg");
    check(c.beam_centers_deg.size() == c.beam_widths_deg.size() && c.beam_centers_deg.size() == c.beam_levels.size(),
          "beam_centers_deg, beam_widths_deg and beam_levels must have equal length");
    check(c.alpha1 >= 0.0 && c.alpha2 >= 0.0, "alpha1 and alpha2 must be >= 0");
    try {
        build_links(c.scene());  // also rejects coincident positions
        c.solver.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

// Flat "key = value" lines, '#' comments, optional [section] headers.
inline RunConfig parse_config(std::string_view text) {
    using namespace detail::cfg;
    RunConfig c;
    std::set<std::string> seen;
    std::vector<std::string> unknown;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[' && t.back() == ']' && t.find('=') == std::string::npos) {
            const std::string sec = trim(std::string_view(t).substr(1, t.size() - 2));
            if (!known_section(sec)) throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" + sec + "]");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string val = trim(std::string_view(t).substr(eq + 1));
        const Field* f = nullptr;
        for (const Field& cand : fields())
            if (key == cand.key) f = &cand;
        if (!f) {
            unknown.push_back(key);
            continue;
        }
        if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        try {
            f->parse(c, val);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!unknown.empty()) {
        std::string msg = "unknown keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw ConfigError(msg);
    }
    std::string missing;
    for (const Field& f : fields())
        if (f.required && !seen.count(f.key)) missing += std::string(" ") + f.key;
    if (!missing.empty()) throw ConfigError("missing required keys:" + missing);
    validate(c);
    return c;
}

inline std::string render_config(const RunConfig& c) {
    using namespace detail::cfg;
    std::string out;
    std::string section;
    for (const Field& f : fields()) {
        if (std::string_view(f.key) == "experiment" && c.experiment.empty()) continue;
        if (section != f.section) {
            section = f.section;
            out += (out.empty() ? "[" : "\n[") + section + "]\n";
        }
        out += std::string(f.key) + " = " + f.render(c) + "\n";
    }
    return out;
}

}  // namespace risisac
