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

#include <nftb/beam_policy.hpp>

#include "../common/oracles.hpp"

#include <cmath>

using namespace nftb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{
    Trajectory straight_line(Point start, double speed, double heading, double duration, double delta,
                             std::optional<Category> category = std::nullopt)
    {
        Trajectory t;
        t.category = category;
        t.delta = delta;
        const auto n = static_cast<std::size_t>(std::floor(duration / delta + 1e-9));
        for (std::size_t k = 0; k <= n; ++k)
        {
            const double time = k * delta;
            t.states.push_back({{start.x + speed * time * std::cos(heading), start.y + speed * time * std::sin(heading)},
                                speed, heading, time});
        }
        return t;
    }

    Scene los_only(int n_el, double fc = 142e9)
    {
        return Scene(ArrayGeometry::half_wavelength(n_el, fc), Region{}, {}, {0.0});
    }
}

TEST_CASE("beam gain", "[beam]")
{
    CVector h(2), f(2);
    h << cd(1, 1), cd(2, 0);
    f << cd(1 / std::sqrt(2.0), 0), cd(0, 1 / std::sqrt(2.0));
    CHECK_THAT(beam_gain(h, f), WithinAbs(1.0, 1e-15));

    const auto array = ArrayGeometry::half_wavelength(16, 142e9);
    const CVector a = steering_vector(0.3, 7.0, array);
    const cd g0 = std::polar(2.5e-5, 0.7);
    CHECK_THAT(beam_gain(g0 * a, a), WithinRel(std::norm(g0), 1e-12));

    CVector e1 = CVector::Zero(2), e2 = CVector::Zero(2);
    e1[0] = 1.0;
    e2[1] = 1.0;
    CHECK(beam_gain(e1, e2) == 0.0);
    CHECK_THROWS_AS(beam_gain(a, e1), std::invalid_argument);
}

TEST_CASE("SNR and coherence time", "[beam]")
{
    CHECK(snr(0.0, 1.0, 1e-12) == 0.0);
    CHECK_THAT(snr(1e-10, dbm_to_watt(30.0), dbm_to_watt(-94.0)), WithinRel(251.1886431509582, 1e-12));
    CHECK_THAT(snr(1e-10, 2.0, 1e-12), WithinRel(2.0 * snr(1e-10, 1.0, 1e-12), 1e-15));
    CHECK_THROWS_AS(snr(1.0, 1.0, 0.0), std::invalid_argument);

    CHECK_THAT(channel_coherence_time(wavelength(142e9), 1.0), WithinRel(0.0005278036232394366, 1e-12));
    CHECK_THAT(channel_coherence_time(wavelength(142e9), 17.5), WithinRel(3.016020704225352e-05, 1e-12));
    CHECK_THAT(channel_coherence_time(wavelength(284e9), 1.0),
               WithinRel(0.5 * channel_coherence_time(wavelength(142e9), 1.0), 1e-14));
    CHECK_THROWS_AS(channel_coherence_time(1e-3, 0.0), std::invalid_argument);
}

TEST_CASE("effective rate", "[beam]")
{
    CHECK(effective_rate(0.0, 1e-3, 40e-6) == 0.0);
    CHECK(effective_rate(1.0, 1e-3, 0.0) == 1.0);
    CHECK(effective_rate(1e6, 3.016020704225352e-05, 40e-6) == 0.0);
    CHECK(effective_rate(10.0, 40e-6, 40e-6) == 0.0);
    double last = 0.0;
    for (double T = 10e-6; T < 1e-2; T *= 1.3)
    {
        const double r = effective_rate(100.0, T, 40e-6);
        CHECK(r >= last);
        last = r;
    }
    CHECK_THROWS_AS(effective_rate(1.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("static UE never crosses the threshold", "[solver]")
{
    const Scene scene = los_only(64);
    const Trajectory traj = straight_line({10.0, 2.0}, 0.0, 0.0, 2.5, 0.5e-3);
    const SolveResult r = solve_beam_coherence_time(scene, traj, 0.0, 0.5, SolverSettings{});
    CHECK(r.censored);
    CHECK_FALSE(r.truncated);
    CHECK(r.beam_coherence_time == 2.0);
}

TEST_CASE("threshold of one crosses at the first grid point", "[solver]")
{
    const Scene scene = los_only(64);
    const Trajectory traj = straight_line({10.0, 2.0}, 5.0, 1.0, 1.0, 0.5e-3);
    std::vector<std::pair<double, double>> trace;
    const SolveResult r = solve_beam_coherence_time(scene, traj, 0.0, 1.0, SolverSettings{}, &trace);
    REQUIRE(trace.size() == 1);
    CHECK(trace[0].second <= 1.0);
    CHECK(r.beam_coherence_time == 0.5e-3);
    CHECK_FALSE(r.censored);
}

TEST_CASE("solver returns the first crossing", "[solver]")
{
    const auto c = nftb::testing::small_case(21, 1, 64, 3.0);
    std::vector<std::pair<double, double>> trace;
    const SolveResult r = solve_beam_coherence_time(c.scene, c.traj, 0.0, 0.5, SolverSettings{}, &trace);
    REQUIRE_FALSE(trace.empty());
    for (std::size_t i = 0; i + 1 < trace.size(); ++i)
        CHECK(trace[i].second > 0.5);
    if (!r.censored)
    {
        CHECK(trace.back().second <= 0.5);
        CHECK_THAT(trace.back().first, WithinAbs(r.beam_coherence_time, 1e-15));
    }
}

TEST_CASE("solver stops when the trajectory ends", "[solver]")
{
    const Scene scene = los_only(8);
    const Trajectory traj = straight_line({10.0, 0.0}, 0.0, 0.0, 0.1, 0.5e-3);
    const SolveResult r = solve_beam_coherence_time(scene, traj, 0.0, 0.5, SolverSettings{});
    CHECK(r.truncated);
    CHECK(r.censored);
    CHECK_THAT(r.beam_coherence_time, WithinAbs(0.1, 1e-12));
}

TEST_CASE("solver agrees with a dense scan on LoS-only scenes", "[solver]")
{
    const SolverSettings settings;
    for (std::uint64_t i = 0; i < 12; ++i)
    {
        const auto c = nftb::testing::small_case(77, i, 8, 2.5, 0);
        const double coarse = solve_beam_coherence_time(c.scene, c.traj, 0.0, 0.5, settings).beam_coherence_time;
        const double dense = nftb::testing::dense_crossing(c.scene, c.traj, 0.0, 0.5, settings, 10);
        CHECK(std::abs(coarse - dense) <= settings.step + 1e-12);
    }
}

TEST_CASE("zero gain at beam creation is an error", "[solver]")
{
    const Scene scene = los_only(4);
    const Trajectory traj = straight_line({10.0, 0.0}, 1.0, 0.0, 0.1, 0.5e-3);
    ChannelSnapshot start = channel_at_index(scene, traj, 0);
    Beam beam = aim_beam(scene.array(), traj.states[0]);
    beam.f.setZero();
    CHECK_THROWS_AS(solve_beam_coherence_time(scene, traj, start, beam, 0.5, SolverSettings{}), numerical_error);
}

TEST_CASE("upper bound on a static LoS UE is constant", "[policy]")
{
    const Scene scene = los_only(32);
    const Trajectory traj = straight_line({12.0, -3.0}, 0.0, 0.0, 0.05, 0.5e-3, Category::pedestrian);
    PolicyConfig p;
    p.kind = PolicyKind::upper_bound;
    const RateTrace t = simulate_policy(scene, traj, p, SolverSettings{});
    const double g0 = std::pow(10.0, -ci_path_loss_db(std::hypot(12.0, 3.0), 142e9, 2.1, 0.0) / 10.0);
    const double expect = std::log2(1.0 + p.tx_power_w / p.noise_power_w * g0);
    for (double r : t.rate)
        CHECK_THAT(r, WithinRel(expect, 1e-9));
}

TEST_CASE("vehicles get no data with T_C updates", "[policy]")
{
    const auto c = nftb::testing::small_case(5, 2, 64, 0.5);
    PolicyConfig p;
    p.kind = PolicyKind::statistical_tc;
    const RateTrace t = simulate_policy(c.scene, c.traj, p, SolverSettings{});
    REQUIRE(c.traj.category == Category::vehicle);
    for (double r : t.rate)
        REQUIRE(r == 0.0);
    CHECK_THAT(t.beam_durations.front(), WithinRel(3.016020704225352e-05, 1e-12));
}

TEST_CASE("policies share beams where their lifetimes agree", "[policy]")
{
    const auto c = nftb::testing::small_case(8, 0, 64, 0.5);
    PolicyConfig ub, tc;
    ub.kind = PolicyKind::upper_bound;
    tc.kind = PolicyKind::statistical_tc;
    const RateTrace a = simulate_policy(c.scene, c.traj, ub, SolverSettings{});
    const RateTrace b = simulate_policy(c.scene, c.traj, tc, SolverSettings{});
    REQUIRE(a.rate.size() == c.traj.size());
    for (std::size_t k = 0; k < a.rate.size(); ++k)
    {
        REQUIRE(a.rate[k] >= b.rate[k]);
        REQUIRE(a.beam_id[k] == b.beam_id[k]);
    }
}

TEST_CASE("numerical policy uses solver lifetimes", "[policy]")
{
    const auto c = nftb::testing::small_case(9, 1, 64, 3.0);
    PolicyConfig p;
    p.kind = PolicyKind::numerical_tb;
    const RateTrace t = simulate_policy(c.scene, c.traj, p, SolverSettings{}, {}, 2001);
    REQUIRE(t.time.size() == 2001);
    const double first = solve_beam_coherence_time(c.scene, c.traj, 0.0, 0.5, SolverSettings{}).beam_coherence_time;
    CHECK(t.beam_durations.front() == std::max(first, 0.5e-3));
    for (std::size_t i = 1; i < t.update_times.size(); ++i)
        CHECK_THAT(t.update_times[i] - t.update_times[i - 1], WithinAbs(t.beam_durations[i - 1], 1e-9));
    for (double r : t.rate)
        CHECK(r >= 0.0);
}

TEST_CASE("predicted policy seeds with two solver lifetimes", "[policy]")
{
    const auto c = nftb::testing::small_case(10, 2, 64, 3.0);
    PolicyConfig p;
    p.kind = PolicyKind::predicted_tb;
    CHECK_THROWS_AS(simulate_policy(c.scene, c.traj, p, SolverSettings{}), config_error);
    int calls = 0;
    const TbPredictor constant = [&calls](const FeatureVector &fv) {
        ++calls;
        CHECK(fv[feature::elements] == 64.0);
        return 0.01;
    };
    const RateTrace t = simulate_policy(c.scene, c.traj, p, SolverSettings{}, constant, 2001);
    p.kind = PolicyKind::numerical_tb;
    const RateTrace n = simulate_policy(c.scene, c.traj, p, SolverSettings{}, {}, 2001);
    REQUIRE(t.beam_durations.size() > 3);
    CHECK(t.beam_durations[0] == n.beam_durations[0]);
    CHECK(t.beam_durations[1] == n.beam_durations[1]);
    for (std::size_t i = 2; i < t.beam_durations.size(); ++i)
        CHECK(t.beam_durations[i] == 0.01);
    CHECK(calls == static_cast<int>(t.beam_durations.size()) - 2);

    p.kind = PolicyKind::predicted_tb;
    const TbPredictor tiny = [](const FeatureVector &) { return 1e-9; };
    const RateTrace floored = simulate_policy(c.scene, c.traj, p, SolverSettings{}, tiny, 200);
    for (double d : floored.beam_durations)
        CHECK(d >= 0.5e-3);
}
