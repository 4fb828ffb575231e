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

#include <nftb/io.hpp>
#include <nftb/mobility.hpp>

#include <cmath>

using namespace nftb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("category table", "[mobility]")
{
    const auto ped = category_params(Category::pedestrian);
    CHECK(ped.alpha == 0.3);
    CHECK(ped.speed_min == 0.5);
    CHECK(ped.speed_max == 1.5);
    CHECK(ped.mean_speed == 1.0);
    const auto bic = category_params(Category::bicycle);
    CHECK(bic.alpha == 0.5);
    CHECK(bic.mean_speed == 4.0);
    CHECK(bic.speed_noise_std == 1.0);
    const auto veh = category_params(Category::vehicle);
    CHECK(veh.alpha == 0.7);
    CHECK(veh.speed_min == 10.0);
    CHECK(veh.speed_max == 25.0);
    CHECK(veh.mean_speed == 17.5);
    CHECK_THAT(veh.direction_change_max, WithinRel(M_PI / 8, 1e-15));
    CHECK(parse_category("bicycle") == Category::bicycle);
    CHECK_THROWS_AS(parse_category("tram"), config_error);
}

TEST_CASE("Gauss-Markov update", "[mobility]")
{
    MobilityParams p = category_params(Category::bicycle);
    p.mean_direction = 0.0;
    UEState s{{10.0, 0.0}, 2.0, 0.0, 0.0};
    const auto [v, phi] = step_gauss_markov(s, p, 0.8, 0.0);
    CHECK_THAT(v, WithinRel(3.6928203230275507, 1e-14));
    CHECK(phi == 0.0);

    p.alpha = 1.0;
    s.direction = 0.3;
    const auto [v1, phi1] = step_gauss_markov(s, p, 2.5, -1.7);
    CHECK(v1 == 2.0);
    CHECK(phi1 == 0.3);

    p.alpha = 0.0;
    p.speed_noise_std = 0.0;
    const auto [v0, phi0] = step_gauss_markov(s, p, 1.0, 0.0);
    CHECK(v0 == 4.0);
    (void)phi0;
}

TEST_CASE("clamping bounds speed and heading change", "[mobility]")
{
    const MobilityParams p = category_params(Category::vehicle);
    UEState s{{10.0, 0.0}, 24.0, 1.0, 0.0};
    const auto [v_hi, phi_hi] = step_gauss_markov(s, p, 50.0, 50.0);
    CHECK(v_hi == 25.0);
    CHECK_THAT(phi_hi - 1.0, WithinAbs(M_PI / 8, 1e-12));
    const auto [v_lo, phi_lo] = step_gauss_markov(s, p, -50.0, -50.0);
    CHECK(v_lo == 10.0);
    CHECK_THAT(phi_lo - 1.0, WithinAbs(-M_PI / 8, 1e-12));
}

TEST_CASE("straight-line motion", "[mobility]")
{
    const Region region;
    UEState s{{10.0, 0.0}, 0.0, 0.7, 0.0};
    CHECK(update_position(s, 0.5, region).position.x == 10.0);
    s.speed = 2.0;
    s.direction = 0.0;
    auto m = update_position(s, 0.5, region);
    CHECK(m.position.x == 11.0);
    CHECK(m.position.y == 0.0);
    s.direction = M_PI / 2;
    m = update_position(s, 0.25, region);
    CHECK_THAT(m.position.x, WithinAbs(10.0, 1e-12));
    CHECK_THAT(m.position.y, WithinAbs(0.5, 1e-12));
}

TEST_CASE("walls reflect position and heading", "[mobility]")
{
    const Region region;
    UEState s{{49.5, 24.0}, 2.0, M_PI / 4, 0.0};
    const Move m = update_position(s, 1.0, region);
    const double step = 2.0 / std::sqrt(2.0);
    CHECK_THAT(m.position.x, WithinAbs(50.0 - (49.5 + step - 50.0), 1e-12));
    CHECK_THAT(m.position.y, WithinAbs(25.0 - (24.0 + step - 25.0), 1e-12));
    CHECK(m.reflected_x);
    CHECK(m.reflected_y);
    CHECK_THAT(m.direction, WithinAbs(-(M_PI - M_PI / 4), 1e-12));
}

TEST_CASE("trajectory length, spacing and region", "[mobility]")
{
    const Region region;
    Rng rng = derive_rng(5, Stream::trajectory);
    const Trajectory t = generate_trajectory(Category::vehicle, 10.0, 0.5e-3, region, rng);
    REQUIRE(t.size() == 20001);
    const auto p = category_params(Category::vehicle);
    for (std::size_t k = 0; k < t.size(); ++k)
    {
        const auto &s = t.states[k];
        REQUIRE(s.time == k * 0.5e-3);
        REQUIRE(region.contains(s.position));
        REQUIRE(s.speed >= p.speed_min);
        REQUIRE(s.speed <= p.speed_max);
    }
    CHECK(t.category == Category::vehicle);
}

TEST_CASE("consecutive positions follow the stored speed and heading", "[mobility]")
{
    const Region region;
    Rng rng = derive_rng(6, Stream::trajectory);
    const Trajectory t = generate_trajectory(Category::bicycle, 2.0, 0.5e-3, region, rng);
    for (std::size_t k = 1; k < t.size(); ++k)
    {
        const Move m = update_position(t.states[k - 1], t.delta, region);
        REQUIRE(std::abs(m.position.x - t.states[k].position.x) < 1e-12);
        REQUIRE(std::abs(m.position.y - t.states[k].position.y) < 1e-12);
    }
}

TEST_CASE("same seed gives an identical trajectory", "[mobility]")
{
    const Region region;
    Rng a = derive_rng(9, Stream::trajectory, 4);
    Rng b = derive_rng(9, Stream::trajectory, 4);
    Rng c = derive_rng(9, Stream::trajectory, 5);
    const Trajectory ta = generate_trajectory(Category::pedestrian, 1.0, 0.5e-3, region, a);
    const Trajectory tb = generate_trajectory(Category::pedestrian, 1.0, 0.5e-3, region, b);
    const Trajectory tc = generate_trajectory(Category::pedestrian, 1.0, 0.5e-3, region, c);
    CHECK(trajectory_to_csv(ta) == trajectory_to_csv(tb));
    CHECK(trajectory_to_csv(ta) != trajectory_to_csv(tc));
}

TEST_CASE("pedestrian speed stays near the category mean", "[mobility]")
{
    Rng rng = derive_rng(12, Stream::trajectory);
    const Trajectory t = generate_trajectory(Category::pedestrian, 5.0, 0.5e-3, Region{}, rng);
    double sum = 0.0;
    for (const auto &s : t.states)
        sum += s.speed;
    const double mean = sum / t.size();
    CHECK(mean >= 0.9);
    CHECK(mean <= 1.1);
}

TEST_CASE("unclamped speed is stationary around the mean", "[mobility]")
{
    MobilityParams p = category_params(Category::bicycle);
    p.clamp = false;
    Rng rng = derive_rng(13, Stream::trajectory);
    UEState s{{10.0, 0.0}, p.speed_max, 0.0, 0.0};
    const int n = 200000;
    double sum = 0.0;
    for (int k = 0; k < n; ++k)
    {
        const auto [v, phi] = step_gauss_markov(s, p, rng);
        s.speed = v;
        s.direction = phi;
        sum += v;
    }
    // AR(1) with coefficient alpha: stationary std sigma_v, effective sample size n (1 - a) / (1 + a).
    const double se = p.speed_noise_std / std::sqrt(n * (1.0 - p.alpha) / (1.0 + p.alpha));
    CHECK(std::abs(sum / n - p.mean_speed) < 3.0 * se);
}

TEST_CASE("continuous-time states between grid points", "[mobility]")
{
    Rng rng = derive_rng(14, Stream::trajectory);
    const Region region;
    const Trajectory t = generate_trajectory(Category::bicycle, 0.1, 0.5e-3, region, rng);
    const UEState mid = t.state_at(t.states[3].time + 0.25e-3, region);
    const Move m = update_position(t.states[3], 0.25e-3, region);
    CHECK(mid.position.x == m.position.x);
    CHECK(mid.position.y == m.position.y);
    CHECK(t.state_at(t.states[7].time, region).position.x == t.states[7].position.x);
    CHECK_THROWS_AS(t.state_at(t.end_time() + 1.0, region), std::out_of_range);
    CHECK(t.nearest_index(-1.0) == 0);
    CHECK(t.nearest_index(99.0) == t.size() - 1);
}

TEST_CASE("trajectory CSV round trip", "[mobility]")
{
    Rng rng = derive_rng(15, Stream::trajectory);
    const Trajectory t = generate_trajectory(Category::vehicle, 0.05, 0.5e-3, Region{}, rng);
    const Trajectory back = trajectory_from_csv(trajectory_to_csv(t), Category::vehicle);
    REQUIRE(back.size() == t.size());
    for (std::size_t k = 0; k < t.size(); ++k)
    {
        CHECK(back.states[k].position.x == t.states[k].position.x);
        CHECK(back.states[k].direction == t.states[k].direction);
    }
}
