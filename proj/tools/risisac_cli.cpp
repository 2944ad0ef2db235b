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
#include "risisac/experiments.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw risisac::ConfigError("cannot open config file '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    out << text;
}

json number_or_text(double v) {
    if (std::isfinite(v)) return v;
    return risisac::csv_number(v);
}

// Column pairs plotted by the generated script: x column, y columns, group-by column.
struct PlotSpec {
    std::string x;
    std::vector<std::string> y;
    std::string group;
    bool logy = false;
};

PlotSpec plot_spec(const std::string& experiment) {
    if (experiment == "sense-sweep") return {"waypoint", {"power_db", "crb"}, "mode", false};
    if (experiment == "detect") return {"snr_db", {"pd_formula", "pd_mc"}, "pf", false};
    if (experiment == "isac-tradeoff") return {"rate_bits", {"crb"}, "rho", true};
    if (experiment == "ris-isac-tradeoff") return {"rate_bits", {"crb"}, "mode", true};
    return {"angle_deg", {"j_total", "j_comm", "j_sense"}, "", false};
}

std::string plot_script(const std::string& experiment, const std::string& csv_name) {
    const PlotSpec p = plot_spec(experiment);
    std::ostringstream s;
    s << "# Generated by risisac_cli; needs pandas and matplotlib.\n"
      << "import pandas as pd\nimport matplotlib.pyplot as plt\n\n"
      << "df = pd.read_csv(\"" << csv_name << "\", keep_default_na=False, na_values=[\"\"])\n"
      << "for col in df.columns:\n"
      << "    if col not in (\"waypoint\", \"mode\", \"coupling\"):\n"
      << "        df[col] = pd.to_numeric(df[col].replace(\"inf\", float(\"inf\")), errors=\"coerce\")\n"
      << "ys = [";
    for (std::size_t i = 0; i < p.y.size(); ++i) s << (i ? ", " : "") << '"' << p.y[i] << '"';
    s << "]\nfig, axes = plt.subplots(1, len(ys), figsize=(5 * len(ys), 4), squeeze=False)\n"
      << "for ax, y in zip(axes[0], ys):\n";
    if (p.group.empty()) {
        s << "    ax.plot(df[\"" << p.x << "\"], df[y], label=y)\n";
    } else {
        s << "    for key, g in df.groupby(\"" << p.group << "\", sort=False):\n"
          << "        ax.plot(g[\"" << p.x << "\"], g[y], marker=\"o\", label=f\"" << p.group << "={key}\")\n";
    }
    s << "    ax.set_xlabel(\"" << p.x << "\")\n    ax.set_ylabel(y)\n";
    if (p.logy) s << "    ax.set_yscale(\"log\")\n";
    s << "    ax.legend()\nfig.tight_layout()\nfig.savefig(\"" << experiment << ".png\", dpi=150)\n";
    return s.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RIS-aided sensing and ISAC experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    bool emit_plot = false;

    for (const std::string& name : risisac::experiment_names()) {
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", config_path, "scenario config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (default: output_path from the config)");
        sub->add_option("--seed", seed, "master seed, overrides the config");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 1024));
        sub->add_flag("--emit-plot-script", emit_plot, "also write a matplotlib script next to the CSV");
    }
    CLI11_PARSE(app, argc, argv);
    const std::string experiment = app.get_subcommands().front()->get_name();

    try {
        risisac::RunConfig cfg = risisac::parse_config(read_file(config_path));
        if (!cfg.experiment.empty() && cfg.experiment != experiment)
            throw risisac::ConfigError("config is for '" + cfg.experiment + "', not '" + experiment + "'");
        cfg.experiment = experiment;
        if (seed) cfg.seed = *seed;
        const fs::path out = out_dir.empty() ? fs::path(cfg.output_path) : fs::path(out_dir);
        fs::create_directories(out);

        const auto t0 = std::chrono::steady_clock::now();
        const risisac::ExperimentOutput res = risisac::run_experiment(cfg, threads);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        const std::string csv_name = experiment + ".csv";
        write_file(out / csv_name, res.table.to_csv());
        json files = {csv_name};
        if (res.phases) {
            write_file(out / (experiment + "_phases.csv"), res.phases->to_csv());
            files.push_back(experiment + "_phases.csv");
        }
        if (emit_plot) {
            write_file(out / (experiment + "_plot.py"), plot_script(experiment, csv_name));
            files.push_back(experiment + "_plot.py");
        }

        json diag = json::object();
        for (const auto& [k, v] : res.diagnostics) diag[k] = number_or_text(v);
        const json summary = {
            {"status", "ok"},
            {"experiment", experiment},
            {"seed", cfg.seed},
            {"threads", threads},
            {"rows", res.table.rows.size()},
            {"files", files},
            {"diagnostics", diag},
            {"wall_clock_s", wall},
            {"config", risisac::render_config(cfg)},
        };
        write_file(out / (experiment + "_summary.json"), summary.dump(2) + "\n");
        std::cout << summary.dump() << "\n";
        return 0;
    } catch (const std::exception& e) {
        json err = {{"status", "error"}, {"experiment", experiment}, {"error", e.what()}};
        if (const auto* inf = dynamic_cast<const risisac::Infeasible*>(&e))
            err["max_achievable"] = number_or_text(inf->max_achievable());
        err["kind"] = dynamic_cast<const std::invalid_argument*>(&e) ? "invalid_input" : "runtime";
        std::cerr << err.dump() << "\n";
        return dynamic_cast<const std::invalid_argument*>(&e) ? 2 : 1;
    }
}
