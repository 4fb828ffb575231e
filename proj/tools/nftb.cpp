// SPDX-License-Identifier: Apache-2.0
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


// Experiment driver: gen-dataset, train, benchmark, freq-sweep, solve-tb.
// Exit codes: 0 success, 2 config error, 3 data validation error, 4 numerical failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <nftb/beam_policy.hpp>
#include <nftb/config.hpp>
#include <nftb/harness.hpp>
#include <nftb/io.hpp>

namespace fs = std::filesystem;

namespace
{
    struct GlobalOptions
    {
        std::string config_path;
        std::optional<long> seed;
        double scale = 1.0;
        std::string out = "out";
    };

    nftb::ExperimentConfig resolve_config(const GlobalOptions &g)
    {
        nftb::FlatConfig flat = g.config_path.empty() ? nftb::FlatConfig{}
                                                      : nftb::FlatConfig::parse(nftb::read_file(g.config_path));
        if (g.seed)
            flat.set("seed", std::to_string(*g.seed));
        nftb::ExperimentConfig cfg = nftb::load_experiment_config(flat);
        cfg.apply_scale(g.scale);
        return cfg;
    }

    int run(int argc, char **argv)
    {
        CLI::App app{"Near-field THz beam coherence time simulator"};
        app.require_subcommand(1);
        app.fallthrough();

        GlobalOptions g;
        app.add_option("--config", g.config_path, "Flat key = value config file")->check(CLI::ExistingFile);
        app.add_option("--seed", g.seed, "Master seed (overrides the config)");
        app.add_option("--scale", g.scale, "Multiplier on dataset size and trajectory counts")->capture_default_str();
        app.add_option("--out", g.out, "Output directory")->capture_default_str();

        auto *gen = app.add_subcommand("gen-dataset", "Generate the labeled T_B dataset");
        bool export_trajectories = false;
        gen->add_flag("--export-trajectories", export_trajectories, "Also write every trajectory and scene");

        auto *train = app.add_subcommand("train", "Train the T_B predictor");
        std::string dataset_dir;
        std::optional<int> epochs, batch;
        train->add_option("--dataset", dataset_dir, "Dataset directory (manifest.json + records.csv)")->required();
        train->add_option("--epochs", epochs, "Training epochs (default 100)");
        train->add_option("--batch", batch, "Batch size (default 64)");

        auto *bench = app.add_subcommand("benchmark", "Compare beam-update policies by effective rate");
        std::string model_path;
        std::optional<double> carrier;
        std::vector<std::string> policies;
        bool traces = false;
        bench->add_option("--model", model_path, "Trained model (required for predicted_tb)");
        bench->add_option("--carrier", carrier, "Carrier frequency in Hz");
        bench->add_option("--policies", policies, "Subset of policies to run");
        bench->add_flag("--traces", traces, "Write one CSV per (category, policy, trajectory)");

        auto *sweep = app.add_subcommand("freq-sweep", "Mean effective rate per policy over carriers");
        sweep->add_option("--model", model_path, "Trained model (required for predicted_tb)");
        sweep->add_option("--policies", policies, "Subset of policies to run");

        auto *solve = app.add_subcommand("solve-tb", "Numerical T_B for one beam on one trajectory");
        std::string scene_path, traj_path;
        double t0 = 0.0;
        int fine = 0;
        bool print_trace = false;
        solve->add_option("--scene", scene_path, "Scene config file")->required()->check(CLI::ExistingFile);
        solve->add_option("--trajectory", traj_path, "Trajectory CSV (t,x,y,v,phi)")->required()->check(CLI::ExistingFile);
        solve->add_option("--t0", t0, "Beam creation time (a trajectory grid time)")->required();
        solve->add_option("--fine", fine, "Also scan at step / fine and report both");
        solve->add_flag("--trace", print_trace, "Print the gain-ratio trace");

        try
        {
            app.parse(argc, argv);
        }
        catch (const CLI::ParseError &e)
        {
            const int rc = app.exit(e);
            return rc == 0 ? 0 : 2;
        }

        const fs::path out(g.out);
        if (*gen)
        {
            const auto cfg = resolve_config(g);
            nftb::cmd_gen_dataset(cfg, out, export_trajectories, &std::cout);
        }
        else if (*train)
        {
            auto cfg = resolve_config(g);
            if (epochs)
                cfg.train.epochs = *epochs;
            if (batch)
                cfg.train.batch_size = *batch;
            nftb::cmd_train(cfg, dataset_dir, out, &std::cout);
        }
        else if (*bench || *sweep)
        {
            auto cfg = resolve_config(g);
            if (!policies.empty())
            {
                cfg.benchmark.policies.clear();
                for (const auto &p : policies)
                    cfg.benchmark.policies.push_back(nftb::parse_policy(p));
            }
            std::optional<nftb::FnnModel> model;
            if (!model_path.empty())
                model = nftb::load_model(model_path);
            if (*bench)
            {
                if (carrier)
                    cfg.scene.carrier_hz = *carrier;
                if (traces)
                    cfg.benchmark.write_traces = true;
                nftb::cmd_benchmark(cfg, model ? &*model : nullptr, out, &std::cout);
            }
            else
            {
                nftb::cmd_freq_sweep(cfg, model ? &*model : nullptr, out, &std::cout);
            }
        }
        else if (*solve)
        {
            const auto flat = nftb::FlatConfig::parse(nftb::read_file(scene_path));
            const auto cfg = nftb::load_experiment_config(flat);
            const nftb::Scene scene = cfg.scene.build();
            const nftb::Trajectory traj = nftb::trajectory_from_csv(nftb::read_file(traj_path));
            std::vector<std::pair<double, double>> trace;
            const auto res = nftb::solve_beam_coherence_time(scene, traj, t0, cfg.threshold, cfg.solver,
                                                             print_trace ? &trace : nullptr);
            std::cout << "T_B = " << nftb::fmt_double(res.beam_coherence_time) << " s"
                      << (res.censored ? (res.truncated ? " (censored: trajectory ended)" : " (censored at horizon)") : "")
                      << "\n";
            for (const auto &[tau, ratio] : trace)
                std::cout << nftb::fmt_double(tau) << "," << nftb::fmt_double(ratio) << "\n";
            if (fine > 1)
            {
                nftb::SolverSettings dense = cfg.solver;
                dense.step = cfg.solver.step / fine;
                const auto fine_res = nftb::solve_beam_coherence_time(scene, traj, t0, cfg.threshold, dense);
                std::cout << "T_B (step/" << fine << ") = " << nftb::fmt_double(fine_res.beam_coherence_time) << " s\n";
            }
        }
        return 0;
    }
}

int main(int argc, char **argv)
{
    try
    {
        return run(argc, argv);
    }
    catch (const nftb::config_error &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    catch (const nftb::data_error &e)
    {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    }
    catch (const nftb::numerical_error &e)
    {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    }
    catch (const std::domain_error &e)
    {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
