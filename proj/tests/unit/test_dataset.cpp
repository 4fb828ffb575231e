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


#include <catch2/catch_amalgamated.hpp>

#include <nftb/dataset.hpp>

#include <cmath>
#include <filesystem>
#include <set>

using namespace nftb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{
    DatasetConfig small_config(std::size_t samples = 1000)
    {
        DatasetConfig c;
        c.total_samples = samples;
        c.carriers = {142e9};
        c.num_elements = {64};
        c.trajectory_duration = 4.0;
        c.seed = 17;
        return c;
    }

    const Dataset &shared_dataset()
    {
        static const Dataset ds = build_dataset(small_config());
        return ds;
    }

    std::filesystem::path scratch(const std::string &name)
    {
        auto p = std::filesystem::temp_directory_path() / ("nftb_test_" + name);
        std::filesystem::remove_all(p);
        return p;
    }
}

TEST_CASE("feature layout", "[dataset]")
{
    Trajectory t;
    t.delta = 0.5e-3;
    for (int k = 0; k < 100; ++k)
        t.states.push_back({{10.0, 0.0}, 0.0, 0.0, k * 0.5e-3});
    t.states.back().speed = 1.25;
    const FeatureVector fv = extract_features(t, t.end_time(), 0.01, 0.02, 142e9, 512);
    CHECK(fv[feature::speed] == 1.25);
    for (std::size_t base : feature::snapshot_base)
    {
        CHECK(fv[base] == 10.0);
        CHECK(fv[base + 1] == 0.0);
        CHECK(fv[base + 2] == 1.0);
    }
    CHECK(fv[feature::carrier] == 142e9);
    CHECK(fv[feature::elements] == 512.0);
    CHECK_THROWS_AS(extract_features(t, 0.02, 0.01, 0.02, 142e9, 512), std::out_of_range);
}

TEST_CASE("snapshots come from earlier grid points", "[dataset]")
{
    Rng rng = derive_rng(4, Stream::trajectory);
    const Trajectory t = generate_trajectory(Category::bicycle, 1.0, 0.5e-3, Region{}, rng);
    const FeatureVector fv = extract_features(t, 0.5, 0.1, 0.05, 280e9, 64);
    const Point p1 = t.states[800].position;
    const Point p2 = t.states[700].position;
    CHECK_THAT(fv[4], WithinRel(std::hypot(p1.x, p1.y), 1e-14));
    CHECK_THAT(fv[8], WithinRel(std::sin(std::atan2(p2.y, p2.x)), 1e-14));
    CHECK(fv[feature::speed] == t.states[1000].speed);
}

TEST_CASE("noise injection", "[dataset]")
{
    FeatureVector clean{1.0, 10.0, 0.6, 0.8, 11.0, 0.0, 1.0, 12.0, -0.6, 0.8, 142e9, 512};
    Rng rng = derive_rng(1, Stream::feature_noise);
    CHECK(inject_noise(clean, FeatureNoise{}, rng) == clean);

    double sum_sq = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
    {
        const FeatureVector noisy = inject_noise(clean, rng);
        for (std::size_t base : feature::snapshot_base)
            REQUIRE(std::abs(noisy[base + 1] * noisy[base + 1] + noisy[base + 2] * noisy[base + 2] - 1.0) < 1e-12);
        REQUIRE(noisy[feature::carrier] == clean[feature::carrier]);
        REQUIRE(noisy[feature::elements] == clean[feature::elements]);
        const double e = noisy[1] - clean[1];
        sum_sq += e * e;
    }
    // sigma ~ U[0, 1] per sample: E[e^2] = E[sigma^2] = 1/3.
    const double var = sum_sq / n;
    const double se = std::sqrt((3.0 / 5.0 - 1.0 / 9.0) / n); // Var(e^2) = E[e^4] - E[e^2]^2, E[e^4] = 3 E[sigma^4]
    CHECK(std::abs(var - 1.0 / 3.0) < 3.0 * se);
}

TEST_CASE("split sizes", "[dataset]")
{
    const SplitRanges s = split_sizes(1000, 0.8, 0.1);
    CHECK(s.train_size() == 800);
    CHECK(s.val_size() == 100);
    CHECK(s.test_size() == 100);
    const SplitRanges odd = split_sizes(1003, 0.8, 0.1);
    CHECK(odd.train_size() == 802);
    CHECK(odd.val_size() == 100);
    CHECK(odd.test_size() == 101);
}

TEST_CASE("dataset build", "[dataset]")
{
    const Dataset &ds = shared_dataset();
    REQUIRE(ds.samples.size() == 1000);
    CHECK(ds.split.train_size() == 800);
    CHECK(ds.split.val_size() == 100);
    CHECK(ds.split.test_size() == 100);
    CHECK_NOTHROW(validate_dataset(ds));

    // Trajectories are contiguous, so at most the two cut points can share a trajectory.
    std::set<std::uint64_t> train, val, test;
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
    {
        auto &bucket = i < ds.split.train_end ? train : i < ds.split.val_end ? val : test;
        bucket.insert(ds.samples[i].trajectory_id);
    }
    std::size_t shared = 0;
    for (auto id : val)
        shared += train.count(id) + test.count(id);
    for (auto id : test)
        shared += train.count(id);
    CHECK(shared <= 2);

    for (const auto &s : ds.samples)
    {
        REQUIRE(s.label > 0.0);
        REQUIRE(s.label <= ds.config.solver.horizon);
        REQUIRE((!s.censored || s.label == ds.config.solver.horizon));
    }
}

TEST_CASE("samples carry the two preceding solver lifetimes", "[dataset]")
{
    DatasetConfig cfg = small_config(60);
    cfg.categories = {Category::bicycle};
    cfg.feature_noise = false;
    std::map<std::uint64_t, std::pair<Scene, Trajectory>> kept;
    const Dataset ds = build_dataset(cfg, [&](std::uint64_t id, const Scene &s, const Trajectory &t) {
        kept.emplace(id, std::make_pair(s, t));
    });
    for (const auto &smp : ds.samples)
    {
        const auto &[scene, traj] = kept.at(smp.trajectory_id);
        const auto periods = label_beam_periods(scene, traj, cfg.threshold, cfg.solver);
        std::size_t k = 0;
        while (k < periods.size() && periods[k].start != smp.start_time)
            ++k;
        REQUIRE(k >= 2);
        REQUIRE(k < periods.size());
        CHECK(smp.label == periods[k].duration);
        const FeatureVector expect = extract_features(traj, smp.start_time, periods[k - 1].duration,
                                                      periods[k - 2].duration, 142e9, 64);
        CHECK(smp.features == expect);
        const SolveResult direct = solve_beam_coherence_time(scene, traj, smp.start_time, cfg.threshold, cfg.solver);
        CHECK(direct.beam_coherence_time == smp.label);
    }
}

TEST_CASE("vehicle labels are shorter than pedestrian labels", "[dataset]")
{
    const Dataset &ds = shared_dataset();
    double sum[3] = {}, count[3] = {};
    for (const auto &s : ds.samples)
    {
        sum[static_cast<int>(s.category)] += s.label;
        count[static_cast<int>(s.category)] += 1.0;
    }
    REQUIRE(count[0] > 0);
    REQUIRE(count[2] > 0);
    CHECK(sum[2] / count[2] < sum[0] / count[0]);
}

TEST_CASE("normalizer on the training split", "[dataset]")
{
    const Dataset &ds = shared_dataset();
    const Normalizer &n = ds.normalizer;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(num_features), sq = Eigen::VectorXd::Zero(num_features);
    double max_label = 0.0;
    for (std::size_t i = 0; i < ds.split.train_end; ++i)
    {
        const Eigen::VectorXd z = n.features(ds.samples[i].features);
        mean += z;
        sq += z.cwiseProduct(z);
        max_label = std::max(max_label, n.label(ds.samples[i].label));
    }
    const double cnt = static_cast<double>(ds.split.train_end);
    mean /= cnt;
    for (std::size_t i = 0; i < num_features; ++i)
    {
        CHECK(std::abs(mean[i]) < 1e-10);
        if (i != feature::carrier && i != feature::elements)
            CHECK_THAT(sq[i] / cnt, WithinAbs(1.0, 1e-9));
    }
    CHECK(max_label == 1.0);
    for (double y : {0.5e-3, 0.01, 0.3, 1.9})
        CHECK_THAT(n.denormalize_label(n.label(y)), WithinRel(y, 1e-12));

    Normalizer unfitted;
    CHECK_THROWS_AS(unfitted.label(1.0), std::logic_error);
}

TEST_CASE("log-range label scaling inverts exactly", "[dataset]")
{
    std::vector<FeatureVector> x(3, FeatureVector{});
    x[1][0] = 1.0;
    const std::vector<double> y = {0.001, 0.2, 1.5};
    const Normalizer n = fit_normalizer(x, y, LabelScaling::log_range, 0.5e-3);
    CHECK_THAT(n.label(1.5), WithinAbs(1.0, 1e-15));
    CHECK_THAT(n.label(0.5e-3), WithinAbs(0.0, 1e-15));
    for (double v : y)
        CHECK_THAT(n.denormalize_label(n.label(v)), WithinRel(v, 1e-12));
}

TEST_CASE("leaked normalizer is rejected", "[dataset]")
{
    Dataset ds = shared_dataset();
    std::vector<FeatureVector> all;
    std::vector<double> labels;
    for (const auto &s : ds.samples)
    {
        all.push_back(s.features);
        labels.push_back(s.label);
    }
    ds.normalizer = fit_normalizer(all, labels, LabelScaling::max, ds.config.solver.step);
    CHECK_THROWS_AS(validate_dataset(ds), data_error);
}

TEST_CASE("censoring gate", "[dataset]")
{
    Dataset ds = shared_dataset();
    for (std::size_t i = 0; i < 100; ++i)
    {
        ds.samples[i].censored = true;
        ds.samples[i].label = ds.config.solver.horizon;
    }
    ds.normalizer = fit_on_train(ds.samples, ds.split, ds.config.label_scaling, ds.config.solver.step);
    CHECK_THROWS_AS(validate_dataset(ds), data_error);
}

TEST_CASE("dataset files are deterministic and round trip", "[dataset]")
{
    const auto a = scratch("ds_a");
    const auto b = scratch("ds_b");
    write_dataset(shared_dataset(), a);
    write_dataset(build_dataset(small_config()), b);
    CHECK(read_file(a / "records.csv") == read_file(b / "records.csv"));
    CHECK(read_file(a / "manifest.json") == read_file(b / "manifest.json"));

    const Dataset back = read_dataset(a);
    REQUIRE(back.samples.size() == shared_dataset().samples.size());
    for (std::size_t i = 0; i < back.samples.size(); ++i)
    {
        REQUIRE(back.samples[i].features == shared_dataset().samples[i].features);
        REQUIRE(back.samples[i].label == shared_dataset().samples[i].label);
    }

    std::string records = read_file(a / "records.csv");
    records[records.size() / 2] = records[records.size() / 2] == '1' ? '2' : '1';
    write_file(a / "records.csv", records);
    CHECK_THROWS_AS(read_dataset(a), data_error);
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
}
