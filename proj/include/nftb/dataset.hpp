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


#ifndef NFTB_DATASET_HPP
#define NFTB_DATASET_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "beam_policy.hpp"
#include "errors.hpp"
#include "features.hpp"
#include "geometry_channel.hpp"
#include "io.hpp"
#include "mobility.hpp"
#include "normalizer.hpp"

#include <json.hpp>

namespace nftb
{
    struct DatasetConfig
    {
        std::size_t total_samples = 250000;
        std::vector<Category> categories = {Category::pedestrian, Category::bicycle, Category::vehicle};
        std::vector<double> carriers = {142e9, 280e9};
        std::vector<int> num_elements = {512};
        double d_over_lambda = 0.5;
        double trajectory_duration = 10.0;
        double delta = 0.5e-3;
        SolverSettings solver;
        double threshold = 0.5;
        Region region;
        int num_scatterers = 2;
        PathLossParams path_loss;
        bool feature_noise = true;
        double train_fraction = 0.8;
        double val_fraction = 0.1;
        LabelScaling label_scaling = LabelScaling::log_range;
        double max_censored_fraction = 0.05;
        std::uint64_t seed = 1;

        void validate() const
        {
            if (total_samples < 3)
                throw config_error("dataset: need at least 3 samples");
            if (categories.empty() || carriers.empty() || num_elements.empty())
                throw config_error("dataset: categories, carriers and element counts must be non-empty");
            if (std::abs(solver.step - delta) > 1e-15)
                throw config_error("dataset: solver step must equal the trajectory step");
            if (!(train_fraction > 0.0 && val_fraction > 0.0 && train_fraction + val_fraction < 1.0))
                throw config_error("dataset: split fractions must be positive and leave room for a test split");
            if (!(threshold > 0.0 && threshold <= 1.0))
                throw config_error("dataset: threshold must be in (0, 1]");
        }
    };

    inline void to_json(nlohmann::json &j, const DatasetConfig &c)
    {
        std::vector<std::string> cats;
        for (auto cat : c.categories)
            cats.emplace_back(to_string(cat));
        j = nlohmann::json{{"total_samples", c.total_samples},
                           {"categories", cats},
                           {"carriers_hz", c.carriers},
                           {"num_elements", c.num_elements},
                           {"d_over_lambda", c.d_over_lambda},
                           {"trajectory_duration_s", c.trajectory_duration},
                           {"delta_s", c.delta},
                           {"solver_step_s", c.solver.step},
                           {"solver_horizon_s", c.solver.horizon},
                           {"threshold", c.threshold},
                           {"region", {c.region.x_min, c.region.x_max, c.region.y_min, c.region.y_max}},
                           {"num_scatterers", c.num_scatterers},
                           {"path_loss",
                            {c.path_loss.los_exponent, c.path_loss.nlos_exponent, c.path_loss.los_shadow_std_db,
                             c.path_loss.nlos_shadow_std_db}},
                           {"feature_noise", c.feature_noise},
                           {"train_fraction", c.train_fraction},
                           {"val_fraction", c.val_fraction},
                           {"label_scaling", std::string(to_string(c.label_scaling))},
                           {"max_censored_fraction", c.max_censored_fraction},
                           {"seed", c.seed}};
    }

    inline void from_json(const nlohmann::json &j, DatasetConfig &c)
    {
        c.total_samples = j.at("total_samples").get<std::size_t>();
        c.categories.clear();
        for (const auto &s : j.at("categories"))
            c.categories.push_back(parse_category(s.get<std::string>()));
        c.carriers = j.at("carriers_hz").get<std::vector<double>>();
        c.num_elements = j.at("num_elements").get<std::vector<int>>();
        c.d_over_lambda = j.at("d_over_lambda").get<double>();
        c.trajectory_duration = j.at("trajectory_duration_s").get<double>();
        c.delta = j.at("delta_s").get<double>();
        c.solver.step = j.at("solver_step_s").get<double>();
        c.solver.horizon = j.at("solver_horizon_s").get<double>();
        c.threshold = j.at("threshold").get<double>();
        const auto r = j.at("region").get<std::vector<double>>();
        c.region = {r.at(0), r.at(1), r.at(2), r.at(3)};
        c.num_scatterers = j.at("num_scatterers").get<int>();
        const auto pl = j.at("path_loss").get<std::vector<double>>();
        c.path_loss = {pl.at(0), pl.at(1), pl.at(2), pl.at(3)};
        c.feature_noise = j.at("feature_noise").get<bool>();
        c.train_fraction = j.at("train_fraction").get<double>();
        c.val_fraction = j.at("val_fraction").get<double>();
        c.label_scaling = parse_label_scaling(j.at("label_scaling").get<std::string>());
        c.max_censored_fraction = j.at("max_censored_fraction").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
    }

    struct Sample
    {
        FeatureVector features{}; // raw units, after noise injection
        double label = 0.0;       // T_B, s
        std::uint64_t trajectory_id = 0;
        bool censored = false;
        Category category = Category::pedestrian;
        double start_time = 0.0; // beam creation time on the trajectory, s
    };

    struct BeamPeriod
    {
        double start = 0.0;
        double duration = 0.0;
        bool censored = false;
    };

    // Consecutive beam lifetimes along a trajectory: each beam is aimed when the previous one
    // crosses the threshold. Stops at the first period the trajectory cannot complete.
    inline std::vector<BeamPeriod> label_beam_periods(const Scene &scene, const Trajectory &traj, double threshold,
                                                      const SolverSettings &solver)
    {
        std::vector<BeamPeriod> periods;
        ChannelSnapshot snap = synthesize_channel(scene, traj.states.front(), nullptr, traj.delta);
        while (true)
        {
            const std::size_t k = traj.nearest_index(snap.time);
            const Beam beam = aim_beam(scene.array(), traj.states[k]);
            SolveResult r = solve_beam_coherence_time(scene, traj, snap, beam, threshold, solver);
            if (r.truncated)
                break;
            periods.push_back({traj.states[k].time, r.beam_coherence_time, r.censored});
            snap = std::move(r.last);
            snap.time = traj.states[traj.nearest_index(snap.time)].time;
        }
        return periods;
    }

    struct SplitRanges
    {
        std::size_t train_end = 0;
        std::size_t val_end = 0;
        std::size_t size = 0;

        std::size_t train_size() const { return train_end; }
        std::size_t val_size() const { return val_end - train_end; }
        std::size_t test_size() const { return size - val_end; }
    };

    struct Dataset
    {
        DatasetConfig config;
        std::vector<Sample> samples; // ordered train | val | test
        SplitRanges split;
        Normalizer normalizer;
        std::size_t trajectory_count = 0;

        double censored_fraction() const
        {
            std::size_t c = 0;
            for (const auto &s : samples)
                c += s.censored ? 1 : 0;
            return samples.empty() ? 0.0 : static_cast<double>(c) / static_cast<double>(samples.size());
        }
    };

    inline SplitRanges split_sizes(std::size_t n, double train_fraction, double val_fraction)
    {
        SplitRanges s;
        s.size = n;
        s.train_end = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction + 1e-9));
        s.val_end = s.train_end + static_cast<std::size_t>(std::floor(static_cast<double>(n) * val_fraction + 1e-9));
        return s;
    }

    inline Normalizer fit_on_train(const std::vector<Sample> &samples, const SplitRanges &split, LabelScaling scaling,
                                   double label_floor)
    {
        std::vector<FeatureVector> x;
        std::vector<double> y;
        for (std::size_t i = 0; i < split.train_end; ++i)
        {
            x.push_back(samples[i].features);
            y.push_back(samples[i].label);
        }
        return fit_normalizer(x, y, scaling, label_floor);
    }

    // Called once per generated trajectory with its id, scene and trajectory.
    using TrajectorySink = std::function<void(std::uint64_t, const Scene &, const Trajectory &)>;

    struct TrajectoryGroup
    {
        Category category;
        double carrier;
        int num_elements;
    };

    inline std::vector<TrajectoryGroup> dataset_groups(const DatasetConfig &cfg)
    {
        std::vector<TrajectoryGroup> groups;
        for (auto c : cfg.categories)
            for (double fc : cfg.carriers)
                for (int n : cfg.num_elements)
                    groups.push_back({c, fc, n});
        return groups;
    }

    inline Scene dataset_scene(const DatasetConfig &cfg, const TrajectoryGroup &g, std::uint64_t id)
    {
        Rng rng = derive_rng(cfg.seed, Stream::scene, id);
        const ArrayGeometry array{g.num_elements, cfg.d_over_lambda * wavelength(g.carrier), g.carrier};
        return Scene::random(array, cfg.region, cfg.num_scatterers, rng, cfg.path_loss);
    }

    inline Trajectory dataset_trajectory(const DatasetConfig &cfg, const TrajectoryGroup &g, std::uint64_t id)
    {
        Rng rng = derive_rng(cfg.seed, Stream::trajectory, id);
        return generate_trajectory(g.category, cfg.trajectory_duration, cfg.delta, cfg.region, rng);
    }

    // Samples per (category, carrier, N) group, spread evenly; every sample's previous two
    // lifetimes are the solver outputs immediately before it on the same trajectory.
    inline Dataset build_dataset(const DatasetConfig &cfg, const TrajectorySink &sink = {})
    {
        cfg.validate();
        const auto groups = dataset_groups(cfg);
        const std::size_t base = cfg.total_samples / groups.size();
        const std::size_t extra = cfg.total_samples % groups.size();

        std::vector<std::vector<Sample>> per_trajectory;
        std::uint64_t next_id = 0;
        for (std::size_t gi = 0; gi < groups.size(); ++gi)
        {
            const auto &g = groups[gi];
            const std::size_t quota = base + (gi < extra ? 1 : 0);
            std::size_t have = 0;
            std::size_t barren = 0;
            while (have < quota)
            {
                const std::uint64_t id = next_id++;
                const Scene scene = dataset_scene(cfg, g, id);
                const Trajectory traj = dataset_trajectory(cfg, g, id);
                const auto periods = label_beam_periods(scene, traj, cfg.threshold, cfg.solver);
                Rng noise_rng = derive_rng(cfg.seed, Stream::feature_noise, id);
                std::vector<Sample> out;
                for (std::size_t k = 2; k < periods.size() && have < quota; ++k, ++have)
                {
                    Sample s;
                    s.features = extract_features(traj, periods[k].start, periods[k - 1].duration,
                                                  periods[k - 2].duration, g.carrier, g.num_elements);
                    if (cfg.feature_noise)
                        s.features = inject_noise(s.features, noise_rng);
                    s.label = periods[k].duration;
                    s.censored = periods[k].censored;
                    s.trajectory_id = id;
                    s.category = g.category;
                    s.start_time = periods[k].start;
                    out.push_back(s);
                }
                if (out.empty())
                {
                    if (++barren > 1000)
                        throw data_error("build_dataset: trajectories too short to yield three beam periods");
                    continue;
                }
                if (sink)
                    sink(id, scene, traj);
                per_trajectory.push_back(std::move(out));
            }
        }

        // Trajectory-grouped split: shuffle trajectories, concatenate, cut at exact counts.
        std::vector<std::size_t> order(per_trajectory.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng split_rng = derive_rng(cfg.seed, Stream::split);
        std::shuffle(order.begin(), order.end(), split_rng);

        Dataset ds;
        ds.config = cfg;
        ds.trajectory_count = per_trajectory.size();
        for (std::size_t i : order)
            for (auto &s : per_trajectory[i])
                ds.samples.push_back(std::move(s));
        ds.split = split_sizes(ds.samples.size(), cfg.train_fraction, cfg.val_fraction);
        ds.normalizer = fit_on_train(ds.samples, ds.split, cfg.label_scaling, cfg.solver.step);
        return ds;
    }

    inline std::string records_header()
    {
        std::string h;
        for (const char *name : feature::names)
            h += std::string(name) + ',';
        return h + "label,trajectory_id,censored,category,t0";
    }

    inline std::string records_to_csv(const std::vector<Sample> &samples)
    {
        std::string out = records_header() + "\n";
        for (const auto &s : samples)
        {
            for (double f : s.features)
                out += fmt_double(f) + ',';
            out += fmt_double(s.label) + ',' + std::to_string(s.trajectory_id) + ',' + (s.censored ? "1" : "0") + ',' +
                   std::string(to_string(s.category)) + ',' + fmt_double(s.start_time) + '\n';
        }
        return out;
    }

    inline std::vector<Sample> records_from_csv(const std::string &text)
    {
        std::istringstream in(text);
        std::string line;
        if (!std::getline(in, line) || line != records_header())
            throw data_error("records: unexpected header");
        std::vector<Sample> out;
        while (std::getline(in, line))
        {
            if (line.empty())
                continue;
            const auto f = split(line);
            if (f.size() != num_features + 5)
                throw data_error("records: wrong column count");
            Sample s;
            for (std::size_t i = 0; i < num_features; ++i)
                s.features[i] = parse_double(f[i], "records");
            s.label = parse_double(f[num_features], "records label");
            s.trajectory_id = std::stoull(f[num_features + 1]);
            s.censored = f[num_features + 2] == "1";
            s.category = parse_category(f[num_features + 3]);
            s.start_time = parse_double(f[num_features + 4], "records t0");
            out.push_back(s);
        }
        return out;
    }

    inline constexpr int dataset_format_version = 1;

    inline nlohmann::json dataset_manifest(const Dataset &ds, const std::string &records_sha)
    {
        nlohmann::json j;
        j["format"] = "nftb-dataset";
        j["version"] = dataset_format_version;
        j["seed"] = ds.config.seed;
        j["config"] = ds.config;
        j["normalizer"] = ds.normalizer;
        j["split"] = {{"rule", "trajectory-grouped shuffle, contiguous cut: train = floor(n * train_fraction), "
                               "val = floor(n * val_fraction), test = rest; at most two trajectories straddle a cut"},
                      {"train", {0, ds.split.train_end}},
                      {"val", {ds.split.train_end, ds.split.val_end}},
                      {"test", {ds.split.val_end, ds.split.size}}};
        j["records"] = {{"file", "records.csv"}, {"sha256", records_sha}, {"count", ds.samples.size()}};
        j["trajectory_count"] = ds.trajectory_count;
        j["censored_fraction"] = ds.censored_fraction();
        return j;
    }

    // Writes manifest.json and records.csv into `dir`; returns the manifest.
    inline nlohmann::json write_dataset(const Dataset &ds, const std::filesystem::path &dir)
    {
        const std::string records = records_to_csv(ds.samples);
        write_file(dir / "records.csv", records);
        const nlohmann::json manifest = dataset_manifest(ds, sha256_hex(records));
        write_file(dir / "manifest.json", manifest.dump(2) + "\n");
        return manifest;
    }

    // Checks split bookkeeping, leakage (normalizer refit on train only) and the censoring gate.
    inline void validate_dataset(const Dataset &ds)
    {
        const auto &sp = ds.split;
        if (sp.size != ds.samples.size() || sp.train_end > sp.val_end || sp.val_end > sp.size)
            throw data_error("dataset: split ranges do not cover the records");
        const SplitRanges expect = split_sizes(sp.size, ds.config.train_fraction, ds.config.val_fraction);
        if (expect.train_end != sp.train_end || expect.val_end != sp.val_end)
            throw data_error("dataset: split sizes do not follow the configured fractions");
        if (sp.train_size() == 0 || sp.val_size() == 0 || sp.test_size() == 0)
            throw data_error("dataset: empty split");
        const Normalizer refit = fit_on_train(ds.samples, sp, ds.config.label_scaling, ds.config.solver.step);
        for (std::size_t i = 0; i < num_features; ++i)
        {
            const double tol = 1e-9 * std::max(1.0, std::abs(refit.mean[i]));
            if (std::abs(refit.mean[i] - ds.normalizer.mean[i]) > tol ||
                std::abs(refit.std[i] - ds.normalizer.std[i]) > 1e-9 * std::max(1.0, refit.std[i]))
                throw data_error("dataset: normalizer does not match the training split");
        }
        if (refit.label_scale != ds.normalizer.label_scale)
            throw data_error("dataset: label scale does not match the training split");
        for (const auto &s : ds.samples)
            if (!(s.label > 0.0 && s.label <= ds.config.solver.horizon + 1e-12) ||
                (s.censored && std::abs(s.label - ds.config.solver.horizon) > 1e-9))
                throw data_error("dataset: label outside (0, H] or inconsistent censoring flag");
        if (ds.censored_fraction() > ds.config.max_censored_fraction)
            throw data_error("dataset: censored fraction " + std::to_string(ds.censored_fraction()) +
                             " exceeds the gate; regenerate with a larger solver horizon");
    }

    inline Dataset read_dataset(const std::filesystem::path &dir)
    {
        nlohmann::json manifest;
        try
        {
            manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
        }
        catch (const nlohmann::json::exception &e)
        {
            throw data_error(std::string("dataset manifest: ") + e.what());
        }
        try
        {
            if (manifest.at("format") != "nftb-dataset" || manifest.at("version").get<int>() != dataset_format_version)
                throw data_error("dataset manifest: unsupported format or version");
            const std::string records = read_file(dir / manifest.at("records").at("file").get<std::string>());
            if (sha256_hex(records) != manifest.at("records").at("sha256").get<std::string>())
                throw data_error("dataset: records checksum does not match the manifest");
            Dataset ds;
            ds.config = manifest.at("config").get<DatasetConfig>();
            ds.samples = records_from_csv(records);
            ds.normalizer = manifest.at("normalizer").get<Normalizer>();
            ds.trajectory_count = manifest.at("trajectory_count").get<std::size_t>();
            const auto &sp = manifest.at("split");
            ds.split.train_end = sp.at("train").at(1).get<std::size_t>();
            ds.split.val_end = sp.at("val").at(1).get<std::size_t>();
            ds.split.size = sp.at("test").at(1).get<std::size_t>();
            if (manifest.at("records").at("count").get<std::size_t>() != ds.samples.size())
                throw data_error("dataset: record count does not match the manifest");
            validate_dataset(ds);
            return ds;
        }
        catch (const nlohmann::json::exception &e)
        {
            throw data_error(std::string("dataset manifest: ") + e.what());
        }
    }

    // Normalized column-major matrices for one split range.
    inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> normalized_split(const Dataset &ds, std::size_t begin,
                                                                        std::size_t end)
    {
        Eigen::MatrixXd x(static_cast<Eigen::Index>(num_features), static_cast<Eigen::Index>(end - begin));
        Eigen::VectorXd y(static_cast<Eigen::Index>(end - begin));
        for (std::size_t i = begin; i < end; ++i)
        {
            const auto c = static_cast<Eigen::Index>(i - begin);
            x.col(c) = ds.normalizer.features(ds.samples[i].features);
            y[c] = ds.normalizer.label(ds.samples[i].label);
        }
        return {x, y};
    }
}

#endif
