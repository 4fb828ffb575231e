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


#ifndef NFTB_CONFIG_HPP
#define NFTB_CONFIG_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "beam_policy.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "geometry_channel.hpp"
#include "io.hpp"
#include "mobility.hpp"
#include "neural_predictor.hpp"

#include <json.hpp>

namespace nftb
{
    // `key = value` lines with dotted keys; '#' starts a comment. Lists are comma separated.
    class FlatConfig
    {
    public:
        static FlatConfig parse(const std::string &text)
        {
            FlatConfig c;
            std::istringstream in(text);
            std::string line;
            int lineno = 0;
            while (std::getline(in, line))
            {
                ++lineno;
                if (const auto hash = line.find('#'); hash != std::string::npos)
                    line.erase(hash);
                const std::string trimmed = trim(line);
                if (trimmed.empty())
                    continue;
                const auto eq = trimmed.find('=');
                if (eq == std::string::npos)
                    throw config_error("config line " + std::to_string(lineno) + ": expected 'key = value'");
                const std::string key = trim(trimmed.substr(0, eq));
                const std::string value = trim(trimmed.substr(eq + 1));
                if (key.empty())
                    throw config_error("config line " + std::to_string(lineno) + ": empty key");
                c.values_[key] = value;
            }
            return c;
        }

        void set(const std::string &key, const std::string &value) { values_[key] = value; }
        bool has(const std::string &key) const { return values_.count(key) != 0; }

        std::optional<std::string> raw(const std::string &key) const
        {
            used_.insert(key);
            const auto it = values_.find(key);
            if (it == values_.end())
                return std::nullopt;
            return it->second;
        }

        double get(const std::string &key, double fallback) const
        {
            const auto v = raw(key);
            return v ? to_double(key, *v) : fallback;
        }

        long get_int(const std::string &key, long fallback) const
        {
            const auto v = raw(key);
            if (!v)
                return fallback;
            const double d = to_double(key, *v);
            if (d != std::floor(d))
                throw config_error("config key '" + key + "': expected an integer");
            return static_cast<long>(d);
        }

        bool get_bool(const std::string &key, bool fallback) const
        {
            const auto v = raw(key);
            if (!v)
                return fallback;
            if (*v == "true" || *v == "1")
                return true;
            if (*v == "false" || *v == "0")
                return false;
            throw config_error("config key '" + key + "': expected true or false");
        }

        std::string get_string(const std::string &key, const std::string &fallback) const
        {
            const auto v = raw(key);
            return v ? *v : fallback;
        }

        std::vector<std::string> get_list(const std::string &key, const std::vector<std::string> &fallback) const
        {
            const auto v = raw(key);
            if (!v)
                return fallback;
            std::vector<std::string> out;
            for (const auto &item : split(*v))
                if (const auto t = trim(item); !t.empty())
                    out.push_back(t);
            return out;
        }

        std::vector<double> get_doubles(const std::string &key, const std::vector<double> &fallback) const
        {
            const auto v = raw(key);
            if (!v)
                return fallback;
            std::vector<double> out;
            for (const auto &item : split(*v))
                out.push_back(to_double(key, trim(item)));
            return out;
        }

        // Keys present in the file that no reader asked for.
        std::vector<std::string> unused_keys() const
        {
            std::vector<std::string> out;
            for (const auto &[k, v] : values_)
                if (!used_.count(k))
                    out.push_back(k);
            return out;
        }

    private:
        static std::string trim(const std::string &s)
        {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos)
                return "";
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        }

        static double to_double(const std::string &key, const std::string &v)
        {
            char *end = nullptr;
            const double d = std::strtod(v.c_str(), &end);
            if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d))
                throw config_error("config key '" + key + "': '" + v + "' is not a number");
            return d;
        }

        std::map<std::string, std::string> values_;
        mutable std::set<std::string> used_;
    };

    struct SceneConfig
    {
        int num_elements = 512;
        double d_over_lambda = 0.5;
        double carrier_hz = 142e9;
        Region region;
        int num_scatterers = 2;
        PathLossParams path_loss;
        LinkBudget link;
        std::vector<Point> scatterers;   // explicit placement; drawn from the seed when empty
        std::vector<double> shadow_db;   // explicit draws (L + 1); drawn when empty
        std::uint64_t scatterer_seed = 1;

        ArrayGeometry array() const
        {
            return {num_elements, d_over_lambda * wavelength(carrier_hz), carrier_hz};
        }

        Scene build() const
        {
            if (scatterers.empty() && shadow_db.empty())
            {
                Rng rng = derive_rng(scatterer_seed, Stream::scene);
                return Scene::random(array(), region, num_scatterers, rng, path_loss, link);
            }
            if (static_cast<int>(scatterers.size()) != num_scatterers || shadow_db.size() != scatterers.size() + 1)
                throw config_error("scene: explicit placement needs num_scatterers positions and L + 1 shadow values");
            return Scene(array(), region, scatterers, shadow_db, path_loss, link);
        }
    };

    struct BenchmarkConfig
    {
        std::size_t trajectories = 100;
        double duration = 10.0;
        std::vector<Category> categories = {Category::pedestrian, Category::bicycle, Category::vehicle};
        std::vector<PolicyKind> policies = {PolicyKind::upper_bound, PolicyKind::statistical_tc,
                                            PolicyKind::numerical_tb, PolicyKind::predicted_tb};
        std::vector<double> sweep_carriers = {142e9, 280e9};
        bool write_traces = false;
    };

    // Every knob of a run; an empty config file reproduces the reference system parameters.
    struct ExperimentConfig
    {
        std::uint64_t seed = 1;
        SceneConfig scene;
        double delta = 0.5e-3;
        double threshold = 0.5;
        double overhead = 40e-6;
        SolverSettings solver;
        DatasetConfig dataset;
        TrainConfig train;
        BenchmarkConfig benchmark;

        PolicyConfig policy(PolicyKind kind) const
        {
            PolicyConfig p;
            p.kind = kind;
            p.threshold = threshold;
            p.overhead = overhead;
            p.tx_power_w = scene.link.tx_power_w();
            p.noise_power_w = scene.link.noise_power_w();
            return p;
        }

        // Sample and trajectory counts scaled for desk runs.
        void apply_scale(double scale)
        {
            if (!(scale > 0.0))
                throw config_error("--scale must be > 0");
            dataset.total_samples = static_cast<std::size_t>(std::llround(static_cast<double>(dataset.total_samples) * scale));
            benchmark.trajectories = std::max<std::size_t>(
                2, static_cast<std::size_t>(std::llround(static_cast<double>(benchmark.trajectories) * scale)));
        }
    };

    inline std::vector<Category> parse_categories(const std::vector<std::string> &names)
    {
        std::vector<Category> out;
        for (const auto &n : names)
            out.push_back(parse_category(n));
        return out;
    }

    inline ExperimentConfig load_experiment_config(const FlatConfig &f)
    {
        ExperimentConfig c;
        c.seed = static_cast<std::uint64_t>(f.get_int("seed", 1));

        auto &s = c.scene;
        s.num_elements = static_cast<int>(f.get_int("scene.num_elements", s.num_elements));
        s.d_over_lambda = f.get("scene.d_over_lambda", s.d_over_lambda);
        s.carrier_hz = f.get("scene.carrier_hz", s.carrier_hz);
        s.region.x_min = f.get("scene.region.x_min", s.region.x_min);
        s.region.x_max = f.get("scene.region.x_max", s.region.x_max);
        s.region.y_min = f.get("scene.region.y_min", s.region.y_min);
        s.region.y_max = f.get("scene.region.y_max", s.region.y_max);
        s.num_scatterers = static_cast<int>(f.get_int("scene.num_scatterers", s.num_scatterers));
        s.scatterer_seed = static_cast<std::uint64_t>(f.get_int("scene.scatterer_seed", static_cast<long>(c.seed)));
        const auto sx = f.get_doubles("scene.scatterer_x", {});
        const auto sy = f.get_doubles("scene.scatterer_y", {});
        if (sx.size() != sy.size())
            throw config_error("scene.scatterer_x and scene.scatterer_y must have the same length");
        for (std::size_t i = 0; i < sx.size(); ++i)
            s.scatterers.push_back({sx[i], sy[i]});
        s.shadow_db = f.get_doubles("scene.shadow_db", {});
        s.path_loss.los_exponent = f.get("pathloss.los_exponent", s.path_loss.los_exponent);
        s.path_loss.nlos_exponent = f.get("pathloss.nlos_exponent", s.path_loss.nlos_exponent);
        s.path_loss.los_shadow_std_db = f.get("pathloss.los_shadow_std_db", s.path_loss.los_shadow_std_db);
        s.path_loss.nlos_shadow_std_db = f.get("pathloss.nlos_shadow_std_db", s.path_loss.nlos_shadow_std_db);
        s.link.tx_power_dbm = f.get("link.tx_power_dbm", s.link.tx_power_dbm);
        s.link.noise_power_dbm = f.get("link.noise_power_dbm", s.link.noise_power_dbm);
        s.link.bandwidth_hz = f.get("link.bandwidth_hz", s.link.bandwidth_hz);
        s.link.noise_figure_db = f.get("link.noise_figure_db", s.link.noise_figure_db);

        c.delta = f.get("mobility.delta_s", c.delta);
        c.threshold = f.get("policy.threshold", c.threshold);
        c.overhead = f.get("policy.overhead_s", c.overhead);
        c.solver.step = f.get("solver.step_s", c.delta);
        c.solver.horizon = f.get("solver.horizon_s", c.solver.horizon);

        auto &d = c.dataset;
        d.total_samples = static_cast<std::size_t>(f.get_int("dataset.samples", static_cast<long>(d.total_samples)));
        d.categories = parse_categories(f.get_list("dataset.categories", {"pedestrian", "bicycle", "vehicle"}));
        d.carriers = f.get_doubles("dataset.carriers_hz", d.carriers);
        {
            std::vector<int> ns;
            for (double n : f.get_doubles("dataset.num_elements", {static_cast<double>(s.num_elements)}))
                ns.push_back(static_cast<int>(n));
            d.num_elements = ns;
        }
        d.d_over_lambda = s.d_over_lambda;
        d.trajectory_duration = f.get("dataset.trajectory_duration_s", d.trajectory_duration);
        d.delta = c.delta;
        d.solver = c.solver;
        d.threshold = c.threshold;
        d.region = s.region;
        d.num_scatterers = s.num_scatterers;
        d.path_loss = s.path_loss;
        d.feature_noise = f.get_bool("dataset.feature_noise", d.feature_noise);
        d.train_fraction = f.get("dataset.train_fraction", d.train_fraction);
        d.val_fraction = f.get("dataset.val_fraction", d.val_fraction);
        d.label_scaling = parse_label_scaling(f.get_string("dataset.label_scaling", std::string(to_string(d.label_scaling))));
        d.max_censored_fraction = f.get("dataset.max_censored_fraction", d.max_censored_fraction);
        d.seed = c.seed;

        auto &t = c.train;
        t.epochs = static_cast<int>(f.get_int("train.epochs", t.epochs));
        t.batch_size = static_cast<int>(f.get_int("train.batch_size", t.batch_size));
        t.smooth_l1_beta = f.get("train.smooth_l1_beta", t.smooth_l1_beta);
        t.optimizer.learning_rate = f.get("train.learning_rate", t.optimizer.learning_rate);
        t.optimizer.weight_decay = f.get("train.weight_decay", t.optimizer.weight_decay);
        t.scheduler_factor = f.get("train.scheduler_factor", t.scheduler_factor);
        t.scheduler_patience = static_cast<int>(f.get_int("train.scheduler_patience", t.scheduler_patience));
        t.scheduler_min_lr = f.get("train.scheduler_min_lr", t.scheduler_min_lr);
        t.seed = c.seed;

        auto &b = c.benchmark;
        b.trajectories = static_cast<std::size_t>(f.get_int("benchmark.trajectories", static_cast<long>(b.trajectories)));
        b.duration = f.get("benchmark.duration_s", b.duration);
        b.categories = parse_categories(f.get_list("benchmark.categories", {"pedestrian", "bicycle", "vehicle"}));
        {
            std::vector<PolicyKind> ps;
            for (const auto &p : f.get_list("benchmark.policies",
                                            {"upper_bound", "statistical_tc", "numerical_tb", "predicted_tb"}))
                ps.push_back(parse_policy(p));
            b.policies = ps;
        }
        b.sweep_carriers = f.get_doubles("benchmark.sweep_carriers_hz", b.sweep_carriers);
        b.write_traces = f.get_bool("benchmark.write_traces", b.write_traces);

        if (const auto unused = f.unused_keys(); !unused.empty())
            throw config_error("unknown config key '" + unused.front() + "'");
        if (!(c.delta > 0.0) || !(c.overhead >= 0.0) || !(c.threshold > 0.0 && c.threshold <= 1.0))
            throw config_error("config: need delta > 0, overhead >= 0, threshold in (0, 1]");
        if (!(s.carrier_hz > 0.0) || s.num_elements < 1 || !(s.d_over_lambda > 0.0))
            throw config_error("config: scene values must be positive");
        if (!(b.duration >= c.delta) || b.trajectories < 1)
            throw config_error("config: benchmark needs duration >= delta and at least one trajectory");
        return c;
    }

    // Canonical JSON image of the resolved configuration, used for hashing.
    inline nlohmann::json to_json(const ExperimentConfig &c)
    {
        nlohmann::json j;
        j["seed"] = c.seed;
        const auto &s = c.scene;
        std::vector<double> sx, sy;
        for (const auto &p : s.scatterers)
        {
            sx.push_back(p.x);
            sy.push_back(p.y);
        }
        j["scene"] = {{"num_elements", s.num_elements},
                      {"d_over_lambda", s.d_over_lambda},
                      {"carrier_hz", s.carrier_hz},
                      {"region", {s.region.x_min, s.region.x_max, s.region.y_min, s.region.y_max}},
                      {"num_scatterers", s.num_scatterers},
                      {"scatterer_seed", s.scatterer_seed},
                      {"scatterer_x", sx},
                      {"scatterer_y", sy},
                      {"shadow_db", s.shadow_db},
                      {"path_loss",
                       {s.path_loss.los_exponent, s.path_loss.nlos_exponent, s.path_loss.los_shadow_std_db,
                        s.path_loss.nlos_shadow_std_db}},
                      {"link",
                       {s.link.tx_power_dbm, s.link.noise_power_dbm, s.link.bandwidth_hz, s.link.noise_figure_db}}};
        j["delta_s"] = c.delta;
        j["threshold"] = c.threshold;
        j["overhead_s"] = c.overhead;
        j["solver"] = {c.solver.step, c.solver.horizon};
        j["dataset"] = c.dataset;
        j["train"] = c.train;
        std::vector<std::string> cats, pols;
        for (auto k : c.benchmark.categories)
            cats.emplace_back(to_string(k));
        for (auto k : c.benchmark.policies)
            pols.emplace_back(to_string(k));
        j["benchmark"] = {{"trajectories", c.benchmark.trajectories},
                          {"duration_s", c.benchmark.duration},
                          {"categories", cats},
                          {"policies", pols},
                          {"sweep_carriers_hz", c.benchmark.sweep_carriers},
                          {"write_traces", c.benchmark.write_traces}};
        return j;
    }

    inline std::string config_hash(const ExperimentConfig &c) { return sha256_hex(to_json(c).dump()); }

    // Flat config text describing one concrete scene (explicit scatterers and shadow draws).
    inline std::string scene_to_config(const Scene &scene, const LinkBudget &link)
    {
        const auto &a = scene.array();
        const auto &r = scene.region();
        const auto &pl = scene.path_loss();
        std::string out;
        auto kv = [&out](const std::string &k, const std::string &v) { out += k + " = " + v + "\n"; };
        kv("scene.num_elements", std::to_string(a.num_elements));
        kv("scene.d_over_lambda", fmt_double(a.element_spacing / a.wavelength()));
        kv("scene.carrier_hz", fmt_double(a.carrier_frequency));
        kv("scene.region.x_min", fmt_double(r.x_min));
        kv("scene.region.x_max", fmt_double(r.x_max));
        kv("scene.region.y_min", fmt_double(r.y_min));
        kv("scene.region.y_max", fmt_double(r.y_max));
        kv("scene.num_scatterers", std::to_string(scene.scatterers().size()));
        std::string xs, ys, sh;
        for (const auto &p : scene.scatterers())
        {
            xs += (xs.empty() ? "" : ", ") + fmt_double(p.x);
            ys += (ys.empty() ? "" : ", ") + fmt_double(p.y);
        }
        for (double s : scene.shadow_db())
            sh += (sh.empty() ? "" : ", ") + fmt_double(s);
        if (!scene.scatterers().empty())
        {
            kv("scene.scatterer_x", xs);
            kv("scene.scatterer_y", ys);
        }
        kv("scene.shadow_db", sh);
        kv("pathloss.los_exponent", fmt_double(pl.los_exponent));
        kv("pathloss.nlos_exponent", fmt_double(pl.nlos_exponent));
        kv("pathloss.los_shadow_std_db", fmt_double(pl.los_shadow_std_db));
        kv("pathloss.nlos_shadow_std_db", fmt_double(pl.nlos_shadow_std_db));
        kv("link.tx_power_dbm", fmt_double(link.tx_power_dbm));
        kv("link.noise_power_dbm", fmt_double(link.noise_power_dbm));
        kv("link.bandwidth_hz", fmt_double(link.bandwidth_hz));
        kv("link.noise_figure_db", fmt_double(link.noise_figure_db));
        return out;
    }
}

#endif
