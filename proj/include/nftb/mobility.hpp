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


#ifndef NFTB_MOBILITY_HPP
#define NFTB_MOBILITY_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "kinematics.hpp"
#include "random.hpp"
#include "units.hpp"

namespace nftb
{
    enum class Category
    {
        pedestrian,
        bicycle,
        vehicle
    };

    inline constexpr Category all_categories[] = {Category::pedestrian, Category::bicycle, Category::vehicle};

    inline std::string_view to_string(Category c)
    {
        switch (c)
        {
        case Category::pedestrian:
            return "pedestrian";
        case Category::bicycle:
            return "bicycle";
        case Category::vehicle:
            return "vehicle";
        }
        return "unknown";
    }

    inline Category parse_category(std::string_view s)
    {
        for (auto c : all_categories)
            if (to_string(c) == s)
                return c;
        throw config_error("unknown mobility category '" + std::string(s) + "'");
    }

    struct MobilityParams
    {
        double alpha = 0.5;            // memory factor
        double mean_speed = 1.0;       // m/s
        double mean_direction = 0.0;   // rad; set per trajectory
        double speed_min = 0.0;
        double speed_max = 0.0;
        double direction_change_min = 0.0; // rad
        double direction_change_max = 0.0; // rad, bound on |per-step heading change|
        double speed_noise_std = 0.0;
        double direction_noise_std = 0.0;
        bool clamp = true;

        void validate() const
        {
            if (!(alpha >= 0.0 && alpha <= 1.0))
                throw config_error("MobilityParams: alpha must be in [0, 1]");
            if (!(speed_min >= 0.0 && speed_min <= speed_max))
                throw config_error("MobilityParams: need 0 <= speed_min <= speed_max");
            if (!(direction_change_min <= direction_change_max))
                throw config_error("MobilityParams: need direction_change_min <= direction_change_max");
        }
    };

    inline MobilityParams category_params(Category c)
    {
        MobilityParams p;
        switch (c)
        {
        case Category::pedestrian:
            p.alpha = 0.3;
            p.speed_min = 0.5;
            p.speed_max = 1.5;
            p.direction_change_min = pi / 2.0;
            p.direction_change_max = 3.0 * pi / 4.0;
            break;
        case Category::bicycle:
            p.alpha = 0.5;
            p.speed_min = 2.0;
            p.speed_max = 6.0;
            p.direction_change_min = pi / 4.0;
            p.direction_change_max = pi / 2.0;
            break;
        case Category::vehicle:
            p.alpha = 0.7;
            p.speed_min = 10.0;
            p.speed_max = 25.0;
            p.direction_change_min = 0.0;
            p.direction_change_max = pi / 8.0;
            break;
        }
        p.mean_speed = 0.5 * (p.speed_min + p.speed_max);
        p.speed_noise_std = (p.speed_max - p.speed_min) / 4.0;
        p.direction_noise_std = (p.direction_change_max - p.direction_change_min) / 2.0;
        return p;
    }

    // One Gauss-Markov update with explicit standard-normal draws.
    inline std::pair<double, double> step_gauss_markov(const UEState &state, const MobilityParams &p, double speed_draw,
                                                       double direction_draw)
    {
        const double innovation = std::sqrt(std::max(0.0, 1.0 - p.alpha * p.alpha));
        double v = p.alpha * state.speed + (1.0 - p.alpha) * p.mean_speed + innovation * p.speed_noise_std * speed_draw;
        double phi = p.alpha * state.direction + (1.0 - p.alpha) * p.mean_direction +
                     innovation * p.direction_noise_std * direction_draw;
        if (p.clamp)
        {
            v = std::clamp(v, p.speed_min, p.speed_max);
            phi = state.direction + std::clamp(phi - state.direction, -p.direction_change_max, p.direction_change_max);
        }
        return {v, phi};
    }

    inline std::pair<double, double> step_gauss_markov(const UEState &state, const MobilityParams &p, Rng &rng)
    {
        const double speed_draw = standard_normal(rng);
        const double direction_draw = standard_normal(rng);
        return step_gauss_markov(state, p, speed_draw, direction_draw);
    }

    struct Move
    {
        Point position;
        double direction = 0.0; // heading after any boundary reflection
        bool reflected_x = false;
        bool reflected_y = false;
    };

    // Straight-line motion over dt with specular reflection at the region walls.
    inline Move update_position(const UEState &state, double dt, const Region &region)
    {
        if (!(dt >= 0.0))
            throw std::invalid_argument("update_position: dt must be >= 0");
        Move m;
        m.position = {state.position.x + state.speed * dt * std::cos(state.direction),
                      state.position.y + state.speed * dt * std::sin(state.direction)};
        m.direction = state.direction;
        auto fold = [](double v, double lo, double hi, bool &flipped) {
            const double width = hi - lo;
            if (width <= 0.0)
                return lo;
            // Mirror into [lo, hi]; an odd number of bounces flips the velocity component.
            double u = std::fmod(v - lo, 2.0 * width);
            if (u < 0.0)
                u += 2.0 * width;
            const long bounces = static_cast<long>(std::floor((v - lo) / width));
            flipped = (bounces % 2) != 0;
            return u <= width ? lo + u : lo + 2.0 * width - u;
        };
        bool fx = false, fy = false;
        if (!(m.position.x >= region.x_min && m.position.x <= region.x_max))
            m.position.x = fold(m.position.x, region.x_min, region.x_max, fx);
        if (!(m.position.y >= region.y_min && m.position.y <= region.y_max))
            m.position.y = fold(m.position.y, region.y_min, region.y_max, fy);
        if (fx)
            m.direction = pi - m.direction;
        if (fy)
            m.direction = -m.direction;
        m.reflected_x = fx;
        m.reflected_y = fy;
        return m;
    }

    struct Trajectory
    {
        std::optional<Category> category;
        double delta = 0.5e-3;
        std::vector<UEState> states;

        double start_time() const { return states.front().time; }
        double end_time() const { return states.back().time; }
        std::size_t size() const { return states.size(); }

        // Index of the grid point closest to t (clamped to the trajectory span).
        std::size_t nearest_index(double t) const
        {
            const double k = std::round((t - start_time()) / delta);
            if (k <= 0.0)
                return 0;
            return std::min(static_cast<std::size_t>(k), states.size() - 1);
        }

        // Continuous-time state: grid state k carried forward by the straight-line motion over
        // [t_k, t). Speed and heading are piecewise constant between grid points.
        UEState state_at(double t, const Region &region) const
        {
            if (t < start_time() - 1e-12 || t > end_time() + 1e-12)
                throw std::out_of_range("Trajectory::state_at: time outside trajectory span");
            const double rel = (t - start_time()) / delta;
            const double k_near = std::round(rel);
            if (std::abs(rel - k_near) < 1e-9)
                return states[static_cast<std::size_t>(k_near)];
            const auto k = static_cast<std::size_t>(std::floor(rel));
            UEState s = states[k];
            const Move m = update_position(s, t - s.time, region);
            s.position = m.position;
            s.direction = m.direction;
            s.time = t;
            return s;
        }
    };

    inline Trajectory generate_trajectory(Category category, double duration, double delta, const Region &region,
                                          Rng &rng)
    {
        if (!(delta > 0.0) || !(duration >= delta))
            throw config_error("generate_trajectory: need duration >= delta > 0");
        MobilityParams p = category_params(category);
        const auto steps = static_cast<std::size_t>(std::floor(duration / delta + 1e-9));

        Trajectory traj;
        traj.category = category;
        traj.delta = delta;
        traj.states.reserve(steps + 1);

        UEState s;
        s.position = {uniform(rng, region.x_min, region.x_max), uniform(rng, region.y_min, region.y_max)};
        s.speed = uniform(rng, p.speed_min, p.speed_max);
        s.direction = uniform(rng, 0.0, two_pi);
        s.time = 0.0;
        p.mean_direction = s.direction;
        traj.states.push_back(s);

        for (std::size_t k = 1; k <= steps; ++k)
        {
            const auto [v_next, phi_next] = step_gauss_markov(s, p, rng);
            const Move m = update_position(s, delta, region);
            UEState next;
            next.position = m.position;
            next.speed = v_next;
            next.direction = phi_next;
            next.time = static_cast<double>(k) * delta;
            if (m.reflected_x)
            {
                next.direction = pi - next.direction;
                p.mean_direction = pi - p.mean_direction;
            }
            if (m.reflected_y)
            {
                next.direction = -next.direction;
                p.mean_direction = -p.mean_direction;
            }
            traj.states.push_back(next);
            s = next;
        }
        return traj;
    }
}

#endif
