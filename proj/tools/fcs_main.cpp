// Copyright 2026 The fcs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <iostream>
#include <numbers>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fcs_app.hpp"

int main(int argc, char **argv) {
    using namespace fcs;
    CLI::App cli{"Full counting statistics of magnetization transport in fSim chains"};
    cli.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> out;

    auto *run_cmd = cli.add_subcommand("run", "Simulate and write distributions, moments and reports");
    run_cmd->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", seed, "Override the configured seed");
    run_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
    run_cmd->add_option("--out", out, "Output directory");

    std::string input_dir;
    auto *analyze_cmd = cli.add_subcommand("analyze", "Recompute statistics from a run's CSV files");
    analyze_cmd->add_option("input", input_dir, "Directory with distribution/counts/moments CSVs")->required();
    analyze_cmd->add_option("--config", config_path, "JSON file whose \"analysis\" section is used");
    analyze_cmd->add_option("--out", out, "Output directory (default: <input>/analysis)");

    double theta_over_pi = 0.4, phi_over_pi = 0.8;
    std::string mu_text = "0";
    auto *oracle_cmd = cli.add_subcommand("oracle", "Print closed-form cycle-1 and cycle-2 values");
    oracle_cmd->add_option("--config", config_path, "Take theta, phi and the first mu from a run configuration");
    oracle_cmd->add_option("--theta-over-pi", theta_over_pi, "Swap angle in units of pi");
    oracle_cmd->add_option("--phi-over-pi", phi_over_pi, "Conditional phase in units of pi");
    oracle_cmd->add_option("--mu", mu_text, "Domain-wall imbalance (number or inf)");

    CLI11_PARSE(cli, argc, argv);

    try {
        if (run_cmd->parsed()) {
            auto cfg = app::parse_config(app::read_json_file(config_path));
            if (seed) {
                cfg.seed = *seed;
            }
            if (threads) {
                cfg.threads = *threads;
            }
            auto dir = app::run(cfg, app::resolve_out_dir(out, cfg.out, "fcs_out"));
            std::cout << dir.string() << "\n";
        } else if (analyze_cmd->parsed()) {
            app::AnalysisConfig a;
            if (!config_path.empty()) {
                auto j = app::read_json_file(config_path);
                if (j.contains("analysis")) {
                    a = app::parse_analysis(app::detail::Section(j.at("analysis"), "analysis"));
                }
            }
            std::filesystem::path in(input_dir);
            auto dir = app::analyze(in, a, app::resolve_out_dir(out, "", (in / "analysis").string()));
            std::cout << dir.string() << "\n";
        } else if (oracle_cmd->parsed()) {
            double theta = theta_over_pi * std::numbers::pi;
            double phi = phi_over_pi * std::numbers::pi;
            auto mu = io::try_parse_double(mu_text);
            if (!mu || std::isnan(*mu) || *mu < 0) {
                throw ConfigError("--mu must be a number in [0, inf]");
            }
            if (!config_path.empty()) {
                auto cfg = app::parse_config(app::read_json_file(config_path));
                theta = cfg.params.theta();
                phi = cfg.params.phi();
                mu = cfg.mus.front();
            }
            std::cout << app::oracle(theta, phi, *mu).dump(2) << "\n";
        }
    } catch (const fcs::Error &e) {
        std::cerr << "error (" << e.kind() << "): " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
