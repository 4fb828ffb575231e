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


#ifndef NFTB_FEATURES_HPP
#define NFTB_FEATURES_HPP

#include <array>
#include <cmath>
#include <stdexcept>

#include "geometry_channel.hpp"
#include "mobility.hpp"
#include "random.hpp"
#include "units.hpp"

namespace nftb
{
    inline constexpr std::size_t num_features = 12;

    // Layout: speed at t, then (r0, sin theta0, cos theta0) at t, t - T', t - T' - T'', then f_c and N.
    using FeatureVector = std::array<double, num_features>;

    namespace feature
    {
        inline constexpr std::size_t speed = 0;
        inline constexpr std::size_t snapshot_base[3] = {1, 4, 7};
        inline constexpr std::size_t carrier = 10;
        inline constexpr std::size_t elements = 11;

        inline constexpr const char *names[num_features] = {
            "v", "r0_t", "sin0_t", "cos0_t", "r0_t1", "sin0_t1", "cos0_t1", "r0_t2", "sin0_t2", "cos0_t2", "fc", "N"};
    }

    inline FeatureVector extract_features(const Trajectory &traj, double t, double tb_prev, double tb_prev2,
                                          double carrier_hz, int num_elements)
    {
        const double times[3] = {t, t - tb_prev, t - tb_prev - tb_prev2};
        if (times[2] < traj.start_time() - 1e-9)
            throw std::out_of_range("extract_features: snapshot time precedes trajectory start");
        FeatureVector fv{};
        fv[feature::speed] = traj.states[traj.nearest_index(t)].speed;
        for (int s = 0; s < 3; ++s)
        {
            const PathGeometry g = los_geometry(traj.states[traj.nearest_index(times[s])].position);
            fv[feature::snapshot_base[s]] = g.distance;
            fv[feature::snapshot_base[s] + 1] = std::sin(g.angle);
            fv[feature::snapshot_base[s] + 2] = std::cos(g.angle);
        }
        fv[feature::carrier] = carrier_hz;
        fv[feature::elements] = static_cast<double>(num_elements);
        return fv;
    }

    struct FeatureNoise
    {
        double distance_std = 0.0; // m
        double angle_std = 0.0;    // rad
        double speed_std = 0.0;    // m/s
    };

    // Per-sample noise levels: U[0, 1] m, U[0, 5] deg, U[0, 1] m/s.
    inline FeatureNoise draw_feature_noise(Rng &rng)
    {
        FeatureNoise n;
        n.distance_std = uniform(rng, 0.0, 1.0);
        n.angle_std = deg_to_rad(uniform(rng, 0.0, 5.0));
        n.speed_std = uniform(rng, 0.0, 1.0);
        return n;
    }

    // Angle noise goes on theta, which is then re-expanded to (sin, cos).
    inline FeatureVector inject_noise(const FeatureVector &fv, const FeatureNoise &sigma, Rng &rng)
    {
        FeatureVector out = fv;
        out[feature::speed] += sigma.speed_std * standard_normal(rng);
        for (std::size_t base : feature::snapshot_base)
        {
            out[base] += sigma.distance_std * standard_normal(rng);
            const double dtheta = sigma.angle_std * standard_normal(rng);
            if (dtheta == 0.0)
                continue;
            const double theta = std::atan2(fv[base + 1], fv[base + 2]) + dtheta;
            out[base + 1] = std::sin(theta);
            out[base + 2] = std::cos(theta);
        }
        return out;
    }

    inline FeatureVector inject_noise(const FeatureVector &fv, Rng &rng)
    {
        const FeatureNoise sigma = draw_feature_noise(rng);
        return inject_noise(fv, sigma, rng);
    }
}

#endif
