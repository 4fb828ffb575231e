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


#ifndef NFTB_HARNESS_HPP
#define NFTB_HARNESS_HPP

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "beam_policy.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "io.hpp"
#include "neural_predictor.hpp"
#include "stats.hpp"

#include <json.hpp>

namespace nftb
{
    inline constexpr const char *code_version = "nftb 1.0.0";

    namespace fs = std::filesystem;

    // Inventory of what a command wrote, with checksums. Wall-clock time is deliberately absent so
    // reruns with the same seed produce identical manifests.
    inline nlohmann::json write_run_manifest(const fs::path &out_dir, const std::string &command,
                                             const ExperimentConfig &cfg, const std::vector<fs::path> &files,
                                             nlohmann::json extra = nlohmann::json::object())
    {
        nlohmann::json inventory = nlohmann::json::array();
        for (const auto &f : files)
            inventory.push_back({{"path", fs::relative(f, out_dir).generic_string()}, {"sha256", sha256_hex(read_file(f))}});
        nlohmann::json j;
        j["command"] = command;
        j["code_version"] = code_version;
        j["config_hash"] = config_hash(cfg);
        j["seeds"] = {{"master", cfg.seed}, {"scene", cfg.scene.scatterer_seed}, {"train", cfg.train.seed}};
        j["files"] = std::move(inventory);
        j["extra"] = std::move(extra);
        write_file(out_dir / ("run_manifest_" + command + ".json"), j.dump(2) + "\n");
        return j;
    }

    // ---------------------------------------------------------------- gen-dataset

    inline Dataset cmd_gen_dataset(const ExperimentConfig &cfg, const fs::path &out_dir, bool export_trajectories = false,
                                   std::ostream *log = nullptr)
    {
        std::vector<fs::path> files;
        TrajectorySink sink;
        if (export_trajectories)
        {
            sink = [&](std::uint64_t id, const Scene &scene, const Trajectory &traj) {
                const fs::path tp = out_dir / "trajectories" / ("traj_" + std::to_string(id) + ".csv");
                const fs::path sp = out_dir / "scenes" / ("scene_" + std::to_string(id) + ".cfg");
                write_file(tp, trajectory_to_csv(traj));
                write_file(sp, scene_to_config(scene, cfg.scene.link) + "mobility.delta_s = " + fmt_double(traj.delta) +
                                   "\nsolver.step_s = " + fmt_double(cfg.solver.step) +
                                   "\nsolver.horizon_s = " + fmt_double(cfg.solver.horizon) +
                                   "\npolicy.threshold = " + fmt_double(cfg.threshold) + "\n");
                files.push_back(tp);
                files.push_back(sp);
            };
        }
        Dataset ds = build_dataset(cfg.dataset, sink);
        validate_dataset(ds);
        const nlohmann::json manifest = write_dataset(ds, out_dir);
        files.push_back(out_dir / "records.csv");
        files.push_back(out_dir / "manifest.json");
        write_run_manifest(out_dir, "gen-dataset", cfg, files,
                           {{"samples", ds.samples.size()}, {"censored_fraction", ds.censored_fraction()}});
        if (log)
            *log << "dataset: " << ds.samples.size() << " samples from " << ds.trajectory_count << " trajectories ("
                 << ds.split.train_size() << "/" << ds.split.val_size() << "/" << ds.split.test_size()
                 << "), censored fraction " << ds.censored_fraction() << "\n";
        return ds;
    }

    // ---------------------------------------------------------------- train

    struct TrainOutcome
    {
        FnnModel model;
        TrainResult result;
        double train_loss = 0.0; // eval mode, best model
        double val_loss = 0.0;
        double test_loss = 0.0;
    };

    inline TrainOutcome train_on_dataset(const ExperimentConfig &cfg, const Dataset &ds,
                                         const std::function<void(const EpochStats &)> &on_epoch = {})
    {
        Rng init = derive_rng(cfg.train.seed, Stream::init);
        FnnModel model = make_model(static_cast<int>(num_features), default_layer_widths, init);
        model.normalizer = ds.normalizer;
        model.min_prediction = ds.config.solver.step;
        model.train_config = cfg.train;

        const auto [xt, yt] = normalized_split(ds, 0, ds.split.train_end);
        const auto [xv, yv] = normalized_split(ds, ds.split.train_end, ds.split.val_end);
        const auto [xs, ys] = normalized_split(ds, ds.split.val_end, ds.split.size);

        prime_output_layer(model, yt);
        TrainOutcome out;
        out.result = train(std::move(model), xt, yt, xv, yv, cfg.train, on_epoch);
        out.model = out.result.best;
        const double beta = cfg.train.smooth_l1_beta;
        out.train_loss = evaluate_loss(out.model, xt, yt, beta);
        out.val_loss = evaluate_loss(out.model, xv, yv, beta);
        out.test_loss = evaluate_loss(out.model, xs, ys, beta);
        return out;
    }

    inline std::string history_to_csv(const std::vector<EpochStats> &history)
    {
        std::string out = "epoch,train_loss,val_loss,lr\n";
        for (const auto &h : history)
            out += std::to_string(h.epoch) + ',' + fmt_double(h.train_loss) + ',' + fmt_double(h.val_loss) + ',' +
                   fmt_double(h.learning_rate) + '\n';
        return out;
    }

    inline TrainOutcome cmd_train(const ExperimentConfig &cfg, const fs::path &dataset_dir, const fs::path &out_dir,
                                  std::ostream *log = nullptr)
    {
        const Dataset ds = read_dataset(dataset_dir);
        TrainOutcome out = train_on_dataset(cfg, ds, [log](const EpochStats &st) {
            if (log)
                *log << "epoch " << st.epoch << " train " << st.train_loss << " val " << st.val_loss << " lr "
                     << st.learning_rate << "\n";
        });
        const fs::path model_path = out_dir / "model.json";
        const fs::path history_path = out_dir / "history.csv";
        const fs::path summary_path = out_dir / "train_summary.json";
        save_model(out.model, model_path);
        write_file(history_path, history_to_csv(out.result.history));
        const nlohmann::json summary = {{"best_epoch", out.result.best_epoch},
                                        {"best_val_loss", out.result.best_val_loss},
                                        {"first_epoch_val_loss", out.result.history.front().val_loss},
                                        {"train_loss", out.train_loss},
                                        {"val_loss", out.val_loss},
                                        {"test_loss", out.test_loss}};
        write_file(summary_path, summary.dump(2) + "\n");
        write_run_manifest(out_dir, "train", cfg, {model_path, history_path, summary_path},
                           {{"dataset_manifest_sha256", sha256_hex(read_file(dataset_dir / "manifest.json"))}});
        if (log)
            *log << "best epoch " << out.result.best_epoch << ": train " << out.train_loss << " val " << out.val_loss
                 << " test " << out.test_loss << "\n";
        return out;
    }

    // ---------------------------------------------------------------- benchmark

    struct PolicyStats
    {
        std::vector<double> trajectory_rate;     // mean effective rate per trajectory
        std::vector<double> trajectory_duration; // mean scheduled beam lifetime per trajectory
        std::size_t updates = 0;
        std::vector<double> step_sum, step_sum_sq; // per-step accumulators over trajectories
    };

    struct BenchmarkResult
    {
        double carrier = 0.0;
        double delta = 0.0;
        std::size_t steps = 0;
        // [category][policy]
        std::map<Category, std::map<PolicyKind, PolicyStats>> stats;
    };

    inline Scene benchmark_scene(const ExperimentConfig &cfg, std::size_t index, double carrier)
    {
        Rng rng = derive_rng(cfg.seed, Stream::benchmark_scene, index);
        SceneConfig sc = cfg.scene;
        sc.carrier_hz = carrier;
        return Scene::random(sc.array(), sc.region, sc.num_scatterers, rng, sc.path_loss, sc.link);
    }

    // Trajectory index j starts from the same position and heading in every category.
    inline Trajectory benchmark_trajectory(const ExperimentConfig &cfg, Category c, std::size_t index)
    {
        Rng rng = derive_rng(cfg.seed, Stream::benchmark_trajectory, index);
        return generate_trajectory(c, cfg.benchmark.duration + cfg.solver.horizon, cfg.delta, cfg.scene.region, rng);
    }

    inline std::string trace_to_csv(const RateTrace &t)
    {
        std::string out = "t,rate,snr_db,beam_id\n";
        for (std::size_t k = 0; k < t.time.size(); ++k)
            out += fmt_double(t.time[k]) + ',' + fmt_double(t.rate[k]) + ',' + fmt_double(t.snr_db[k]) + ',' +
                   std::to_string(t.beam_id[k]) + '\n';
        return out;
    }

    inline BenchmarkResult run_benchmark(const ExperimentConfig &cfg, double carrier, const FnnModel *model,
                                         const std::function<void(Category, PolicyKind, std::size_t, const RateTrace &)>
                                             &on_trace = {})
    {
        for (auto p : cfg.benchmark.policies)
            if (p == PolicyKind::predicted_tb && model == nullptr)
                throw config_error("benchmark: predicted_tb requires --model");
        TbPredictor predictor;
        if (model)
            predictor = [model](const FeatureVector &fv) { return predict_tb(*model, fv); };

        BenchmarkResult res;
        res.carrier = carrier;
        res.delta = cfg.delta;
        res.steps = static_cast<std::size_t>(std::floor(cfg.benchmark.duration / cfg.delta + 1e-9)) + 1;
        for (Category c : cfg.benchmark.categories)
        {
            auto &per_policy = res.stats[c];
            for (auto p : cfg.benchmark.policies)
            {
                per_policy[p].step_sum.assign(res.steps, 0.0);
                per_policy[p].step_sum_sq.assign(res.steps, 0.0);
            }
            for (std::size_t j = 0; j < cfg.benchmark.trajectories; ++j)
            {
                const Scene scene = benchmark_scene(cfg, j, carrier);
                const Trajectory traj = benchmark_trajectory(cfg, c, j);
                for (auto p : cfg.benchmark.policies)
                {
                    const RateTrace trace = simulate_policy(scene, traj, cfg.policy(p), cfg.solver, predictor, res.steps);
                    auto &st = per_policy[p];
                    st.trajectory_rate.push_back(trace.mean_rate());
                    st.trajectory_duration.push_back(trace.mean_beam_duration());
                    st.updates += trace.update_times.size();
                    for (std::size_t k = 0; k < res.steps; ++k)
                    {
                        st.step_sum[k] += trace.rate[k];
                        st.step_sum_sq[k] += trace.rate[k] * trace.rate[k];
                    }
                    if (on_trace)
                        on_trace(c, p, j, trace);
                }
            }
        }
        return res;
    }

    inline nlohmann::json benchmark_summary(const BenchmarkResult &res, const ExperimentConfig &cfg)
    {
        nlohmann::json j;
        j["schema"] = "nftb-benchmark-summary/1";
        j["carrier_hz"] = res.carrier;
        j["trajectories"] = cfg.benchmark.trajectories;
        j["duration_s"] = cfg.benchmark.duration;
        j["bandwidth_hz"] = cfg.scene.link.bandwidth_hz;
        for (const auto &[c, per_policy] : res.stats)
        {
            for (const auto &[p, st] : per_policy)
            {
                const double mean_rate = stats::mean(st.trajectory_rate);
                j["categories"][std::string(to_string(c))][std::string(to_string(p))] = {
                    {"mean_rate", mean_rate},
                    {"mean_rate_ci95", stats::ci95(st.trajectory_rate)},
                    {"mean_throughput_bps", mean_rate * cfg.scene.link.bandwidth_hz},
                    {"mean_beam_duration_s", stats::mean(st.trajectory_duration)},
                    {"mean_beam_duration_ci95_s", stats::ci95(st.trajectory_duration)},
                    {"update_count", st.updates},
                    {"trajectory_mean_rate", st.trajectory_rate},
                    {"trajectory_mean_beam_duration_s", st.trajectory_duration}};
            }
        }
        return j;
    }

    inline std::vector<fs::path> write_benchmark_outputs(const BenchmarkResult &res, const ExperimentConfig &cfg,
                                                         const fs::path &out_dir)
    {
        std::string ts = "t,category,policy,mean_rate,ci95\n";
        std::string bd = "category,policy,mean_duration_s,ci95_s,updates\n";
        for (const auto &[c, per_policy] : res.stats)
        {
            for (const auto &[p, st] : per_policy)
            {
                const std::size_t n = st.trajectory_rate.size();
                for (std::size_t k = 0; k < res.steps; ++k)
                    ts += fmt_double(static_cast<double>(k) * res.delta) + ',' + std::string(to_string(c)) + ',' +
                          std::string(to_string(p)) + ',' + fmt_double(st.step_sum[k] / static_cast<double>(n)) + ',' +
                          fmt_double(stats::ci95_from_moments(st.step_sum[k], st.step_sum_sq[k], n)) + '\n';
                bd += std::string(to_string(c)) + ',' + std::string(to_string(p)) + ',' +
                      fmt_double(stats::mean(st.trajectory_duration)) + ',' +
                      fmt_double(stats::ci95(st.trajectory_duration)) + ',' + std::to_string(st.updates) + '\n';
            }
        }
        const fs::path ts_path = out_dir / "rate_timeseries.csv";
        const fs::path bd_path = out_dir / "beam_durations.csv";
        const fs::path sum_path = out_dir / "summary.json";
        write_file(ts_path, ts);
        write_file(bd_path, bd);
        write_file(sum_path, benchmark_summary(res, cfg).dump(2) + "\n");
        return {ts_path, bd_path, sum_path};
    }

    inline BenchmarkResult cmd_benchmark(const ExperimentConfig &cfg, const FnnModel *model, const fs::path &out_dir,
                                         std::ostream *log = nullptr)
    {
        std::vector<fs::path> trace_files;
        auto on_trace = [&](Category c, PolicyKind p, std::size_t j, const RateTrace &t) {
            if (!cfg.benchmark.write_traces)
                return;
            const fs::path path = out_dir / "traces" /
                                  (std::string(to_string(c)) + "_" + std::string(to_string(p)) + "_" + std::to_string(j) + ".csv");
            write_file(path, trace_to_csv(t));
            trace_files.push_back(path);
        };
        const BenchmarkResult res = run_benchmark(cfg, cfg.scene.carrier_hz, model, on_trace);
        auto files = write_benchmark_outputs(res, cfg, out_dir);
        files.insert(files.end(), trace_files.begin(), trace_files.end());
        write_run_manifest(out_dir, "benchmark", cfg, files);
        if (log)
        {
            for (const auto &[c, per_policy] : res.stats)
                for (const auto &[p, st] : per_policy)
                    *log << to_string(c) << " " << to_string(p) << ": mean rate " << stats::mean(st.trajectory_rate)
                         << " bit/s/Hz, mean beam duration " << stats::mean(st.trajectory_duration) * 1e3 << " ms\n";
        }
        return res;
    }

    // ---------------------------------------------------------------- freq-sweep

    struct SweepResult
    {
        // [policy][carrier] -> per (category, trajectory) mean rates, category-major
        std::map<PolicyKind, std::map<double, std::vector<double>>> units;
    };

    inline SweepResult cmd_freq_sweep(const ExperimentConfig &cfg, const FnnModel *model, const fs::path &out_dir,
                                      std::ostream *log = nullptr)
    {
        SweepResult sweep;
        nlohmann::json per_carrier = nlohmann::json::array();
        for (double fc : cfg.benchmark.sweep_carriers)
        {
            const BenchmarkResult res = run_benchmark(cfg, fc, model);
            for (const auto &[c, per_policy] : res.stats)
                for (const auto &[p, st] : per_policy)
                {
                    auto &u = sweep.units[p][fc];
                    u.insert(u.end(), st.trajectory_rate.begin(), st.trajectory_rate.end());
                }
            per_carrier.push_back(benchmark_summary(res, cfg));
        }
        std::string csv = "policy,f_c,mean_rate,ci95\n";
        for (const auto &[p, by_fc] : sweep.units)
            for (const auto &[fc, u] : by_fc)
            {
                csv += std::string(to_string(p)) + ',' + fmt_double(fc) + ',' + fmt_double(stats::mean(u)) + ',' +
                       fmt_double(stats::ci95(u)) + '\n';
                if (log)
                    *log << to_string(p) << " @ " << fc / 1e9 << " GHz: " << stats::mean(u) << " bit/s/Hz\n";
            }
        const fs::path csv_path = out_dir / "freq_sweep.csv";
        const fs::path json_path = out_dir / "freq_sweep_summary.json";
        write_file(csv_path, csv);
        write_file(json_path, nlohmann::json{{"schema", "nftb-freq-sweep/1"}, {"per_carrier", per_carrier}}.dump(2) + "\n");
        write_run_manifest(out_dir, "freq-sweep", cfg, {csv_path, json_path});
        return sweep;
    }
}

#endif
