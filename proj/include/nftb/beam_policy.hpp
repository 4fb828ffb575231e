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


#ifndef NFTB_BEAM_POLICY_HPP
#define NFTB_BEAM_POLICY_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "features.hpp"
#include "geometry_channel.hpp"
#include "mobility.hpp"
#include "units.hpp"

namespace nftb
{
    // Beamfocusing vector aimed at the LoS position of the UE when it was created.
    struct Beam
    {
        CVector f;
        double angle = 0.0;
        double distance = 0.0;
        double created_at = 0.0;
    };

    inline Beam aim_beam(const ArrayGeometry &array, const UEState &ue)
    {
        const PathGeometry g = los_geometry(ue.position);
        return {steering_vector(g.angle, g.distance, array), g.angle, g.distance, ue.time};
    }

    // |h^H f|^2
    inline double beam_gain(const CVector &h, const CVector &f)
    {
        if (h.size() != f.size())
            throw std::invalid_argument("beam_gain: channel and beam lengths differ");
        return std::norm(h.dot(f));
    }

    inline double snr(double gain, double tx_power_w, double noise_power_w)
    {
        if (!(noise_power_w > 0.0))
            throw std::invalid_argument("snr: noise power must be > 0");
        return tx_power_w / noise_power_w * gain;
    }

    inline double channel_coherence_time(double wavelength, double mean_speed)
    {
        if (!(mean_speed > 0.0))
            throw std::invalid_argument("channel_coherence_time: mean speed must be > 0");
        return wavelength / (4.0 * mean_speed);
    }

    // [(1 - T_ovh / T) log2(1 + snr)]^+
    inline double effective_rate(double snr_linear, double lifetime, double overhead)
    {
        if (!(lifetime > 0.0))
            throw std::invalid_argument("effective_rate: beam lifetime must be > 0");
        return std::max(0.0, (1.0 - overhead / lifetime) * std::log2(1.0 + snr_linear));
    }

    enum class PolicyKind
    {
        upper_bound,
        statistical_tc,
        numerical_tb,
        predicted_tb
    };

    inline constexpr PolicyKind all_policies[] = {PolicyKind::upper_bound, PolicyKind::statistical_tc,
                                                  PolicyKind::numerical_tb, PolicyKind::predicted_tb};

    inline std::string_view to_string(PolicyKind k)
    {
        switch (k)
        {
        case PolicyKind::upper_bound:
            return "upper_bound";
        case PolicyKind::statistical_tc:
            return "statistical_tc";
        case PolicyKind::numerical_tb:
            return "numerical_tb";
        case PolicyKind::predicted_tb:
            return "predicted_tb";
        }
        return "unknown";
    }

    inline PolicyKind parse_policy(std::string_view s)
    {
        for (auto k : all_policies)
            if (to_string(k) == s)
                return k;
        throw config_error("unknown policy '" + std::string(s) + "'");
    }

    struct PolicyConfig
    {
        PolicyKind kind = PolicyKind::numerical_tb;
        double threshold = 0.5;   // xi, gain ratio
        double overhead = 40e-6;  // s
        double tx_power_w = dbm_to_watt(30.0);
        double noise_power_w = dbm_to_watt(-94.0);
        std::optional<double> mean_speed; // overrides the category mean for T_C

        void validate() const
        {
            if (!(threshold > 0.0 && threshold <= 1.0))
                throw config_error("PolicyConfig: threshold must be in (0, 1]");
            if (!(overhead >= 0.0))
                throw config_error("PolicyConfig: overhead must be >= 0");
            if (!(tx_power_w > 0.0 && noise_power_w > 0.0))
                throw config_error("PolicyConfig: powers must be > 0");
        }
    };

    struct SolverSettings
    {
        double step = 0.5e-3;  // s
        double horizon = 2.0;  // s
    };

    struct SolveResult
    {
        double beam_coherence_time = 0.0;
        bool censored = false;  // no crossing up to the returned time
        bool truncated = false; // trajectory ended before the horizon
        ChannelSnapshot last;   // channel at t0 + beam_coherence_time
    };

    // First grid time tau in {step, 2 step, ..., horizon} with G(t0 + tau) / G(t0) <= threshold,
    // holding the beam fixed and evolving the channel snapshot chain from `start`.
    // Returns the horizon (censored) when no crossing occurs; stops early, censored and truncated,
    // if the trajectory ends first. `ratio_trace` receives (tau, ratio) pairs when given.
    inline SolveResult solve_beam_coherence_time(const Scene &scene, const Trajectory &traj, const ChannelSnapshot &start,
                                                 const Beam &beam, double threshold, const SolverSettings &settings,
                                                 std::vector<std::pair<double, double>> *ratio_trace = nullptr)
    {
        if (!(settings.step > 0.0) || !(settings.horizon >= settings.step))
            throw config_error("solve_beam_coherence_time: need horizon >= step > 0");
        const double g0 = beam_gain(start.h, beam.f);
        if (!(g0 > 0.0))
            throw numerical_error("solve_beam_coherence_time: zero beam gain at creation");

        const double t0 = start.time;
        const auto grid = static_cast<long>(std::llround(settings.horizon / settings.step));
        SolveResult res;
        ChannelSnapshot prev = start;
        for (long m = 1; m <= grid; ++m)
        {
            const double t = t0 + static_cast<double>(m) * settings.step;
            if (t > traj.end_time() + 1e-9)
            {
                res.beam_coherence_time = static_cast<double>(m - 1) * settings.step;
                res.censored = true;
                res.truncated = true;
                res.last = std::move(prev);
                return res;
            }
            ChannelSnapshot snap = synthesize_channel(scene, traj.state_at(std::min(t, traj.end_time()), scene.region()),
                                                      &prev, settings.step);
            snap.time = t;
            const double ratio = beam_gain(snap.h, beam.f) / g0;
            if (ratio_trace)
                ratio_trace->emplace_back(static_cast<double>(m) * settings.step, ratio);
            prev = std::move(snap);
            if (ratio <= threshold)
            {
                res.beam_coherence_time = static_cast<double>(m) * settings.step;
                res.last = std::move(prev);
                return res;
            }
        }
        res.beam_coherence_time = static_cast<double>(grid) * settings.step;
        res.censored = true;
        res.last = std::move(prev);
        return res;
    }

    // Channel snapshot chain from the trajectory start up to grid index k (Doppler phases start at
    // zero at the first state).
    inline ChannelSnapshot channel_at_index(const Scene &scene, const Trajectory &traj, std::size_t k)
    {
        ChannelSnapshot snap = synthesize_channel(scene, traj.states.at(0), nullptr, traj.delta);
        for (std::size_t i = 1; i <= k; ++i)
            snap = synthesize_channel(scene, traj.states.at(i), &snap, traj.delta);
        return snap;
    }

    // Beam aimed at the UE at grid time t0, channel chain carried from the trajectory start.
    inline SolveResult solve_beam_coherence_time(const Scene &scene, const Trajectory &traj, double t0,
                                                 double threshold, const SolverSettings &settings,
                                                 std::vector<std::pair<double, double>> *ratio_trace = nullptr)
    {
        const std::size_t k = traj.nearest_index(t0);
        if (std::abs(traj.states[k].time - t0) > 1e-9)
            throw std::invalid_argument("solve_beam_coherence_time: t0 must be a trajectory grid time");
        const ChannelSnapshot start = channel_at_index(scene, traj, k);
        const Beam beam = aim_beam(scene.array(), traj.states[k]);
        return solve_beam_coherence_time(scene, traj, start, beam, threshold, settings, ratio_trace);
    }

    struct RateTrace
    {
        PolicyKind kind = PolicyKind::numerical_tb;
        std::vector<double> time;
        std::vector<double> rate;   // bit/s/Hz
        std::vector<double> snr_db;
        std::vector<int> beam_id;
        std::vector<double> update_times;
        std::vector<double> beam_durations; // scheduled lifetime of every beam, s

        double mean_rate() const
        {
            double s = 0.0;
            for (double r : rate)
                s += r;
            return rate.empty() ? 0.0 : s / static_cast<double>(rate.size());
        }

        double mean_beam_duration() const
        {
            double s = 0.0;
            for (double d : beam_durations)
                s += d;
            return beam_durations.empty() ? 0.0 : s / static_cast<double>(beam_durations.size());
        }
    };

    using TbPredictor = std::function<double(const FeatureVector &)>;

    // Walks `steps` grid points of the trajectory (all of them when 0). Beams are re-aimed at the
    // LoS position when their scheduled lifetime expires; the rate at every step uses the true
    // channel and the lifetime of the beam currently in use. The trajectory may extend past the
    // recorded window so the solver can look ahead.
    inline RateTrace simulate_policy(const Scene &scene, const Trajectory &traj, const PolicyConfig &policy,
                                     const SolverSettings &solver, const TbPredictor &predictor = {},
                                     std::size_t steps = 0)
    {
        policy.validate();
        if (policy.kind == PolicyKind::predicted_tb && !predictor)
            throw config_error("simulate_policy: predicted_tb needs a trained predictor");
        if (steps == 0 || steps > traj.size())
            steps = traj.size();

        const ArrayGeometry &array = scene.array();
        double coherence = 0.0;
        if (policy.kind == PolicyKind::upper_bound || policy.kind == PolicyKind::statistical_tc)
        {
            double mean_speed = 0.0;
            if (policy.mean_speed)
                mean_speed = *policy.mean_speed;
            else if (traj.category)
                mean_speed = category_params(*traj.category).mean_speed;
            else
                throw config_error("simulate_policy: T_C needs a mobility category or an explicit mean speed");
            coherence = channel_coherence_time(array.wavelength(), mean_speed);
        }
        const double overhead = policy.kind == PolicyKind::upper_bound ? 0.0 : policy.overhead;

        RateTrace trace;
        trace.kind = policy.kind;
        trace.time.reserve(steps);
        trace.rate.reserve(steps);
        trace.snr_db.reserve(steps);
        trace.beam_id.reserve(steps);

        auto next_lifetime = [&](const ChannelSnapshot &snap, const Beam &beam, const UEState &ue) {
            switch (policy.kind)
            {
            case PolicyKind::upper_bound:
            case PolicyKind::statistical_tc:
                return coherence;
            case PolicyKind::numerical_tb:
                break;
            case PolicyKind::predicted_tb:
                if (trace.beam_durations.size() >= 2)
                {
                    const auto n = trace.beam_durations.size();
                    const FeatureVector fv = extract_features(traj, ue.time, trace.beam_durations[n - 1],
                                                              trace.beam_durations[n - 2], array.carrier_frequency,
                                                              array.num_elements);
                    return std::max(predictor(fv), solver.step);
                }
                break;
            }
            const SolveResult r = solve_beam_coherence_time(scene, traj, snap, beam, policy.threshold, solver);
            return std::max(r.beam_coherence_time, solver.step);
        };

        ChannelSnapshot snap;
        Beam beam;
        double lifetime = 0.0;
        int beam_index = -1;
        for (std::size_t k = 0; k < steps; ++k)
        {
            const UEState &ue = traj.states[k];
            snap = k == 0 ? synthesize_channel(scene, ue, nullptr, traj.delta)
                          : synthesize_channel(scene, ue, &snap, traj.delta);
            if (k == 0 || ue.time - beam.created_at >= lifetime - 1e-9)
            {
                beam = aim_beam(array, ue);
                lifetime = next_lifetime(snap, beam, ue);
                ++beam_index;
                trace.update_times.push_back(ue.time);
                trace.beam_durations.push_back(lifetime);
            }
            const double gamma = snr(beam_gain(snap.h, beam.f), policy.tx_power_w, policy.noise_power_w);
            trace.time.push_back(ue.time);
            trace.rate.push_back(effective_rate(gamma, lifetime, overhead));
            trace.snr_db.push_back(linear_to_db(gamma));
            trace.beam_id.push_back(beam_index);
        }
        return trace;
    }
}

#endif
