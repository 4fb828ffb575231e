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


#ifndef NFTB_GEOMETRY_CHANNEL_HPP
#define NFTB_GEOMETRY_CHANNEL_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "kinematics.hpp"
#include "random.hpp"
#include "units.hpp"

namespace nftb
{
    using cd = std::complex<double>;
    using CVector = Eigen::VectorXcd;

    // Uniform linear array at the AP. Element n (1-based) sits at (0, (n-1) d).
    struct ArrayGeometry
    {
        int num_elements = 512;
        double element_spacing = 0.0; // m
        double carrier_frequency = 142e9;

        double wavelength() const { return nftb::wavelength(carrier_frequency); }
        double aperture() const { return (num_elements - 1) * element_spacing; }

        static ArrayGeometry half_wavelength(int num_elements, double carrier_hz)
        {
            return {num_elements, 0.5 * nftb::wavelength(carrier_hz), carrier_hz};
        }

        void validate() const
        {
            if (num_elements < 1)
                throw config_error("ArrayGeometry: num_elements must be >= 1");
            if (!(element_spacing > 0.0))
                throw config_error("ArrayGeometry: element_spacing must be > 0");
            if (!(carrier_frequency > 0.0))
                throw config_error("ArrayGeometry: carrier_frequency must be > 0");
        }
    };

    struct PathGeometry
    {
        int index = 0;                        // 0 = LoS
        double distance = 0.0;                // reference element to UE (LoS) or scatterer (NLoS), m
        double angle = 0.0;                   // AoD from broadside, rad
        double total_propagation_length = 0.0; // m
    };

    struct PathState
    {
        PathGeometry geometry;
        double gain = 0.0;          // linear amplitude
        double shadow_db = 0.0;     // frozen large-scale draw
        double doppler_phase = 0.0; // accumulated, unwrapped

        double doppler_phase_wrapped() const
        {
            double w = std::fmod(doppler_phase, two_pi);
            return w < 0.0 ? w + two_pi : w;
        }
    };

    struct ChannelSnapshot
    {
        CVector h;
        std::vector<PathState> paths;
        double time = 0.0;
    };

    struct PathLossParams
    {
        double los_exponent = 2.1;
        double nlos_exponent = 3.1;
        double los_shadow_std_db = 2.8;
        double nlos_shadow_std_db = 8.3;
    };

    struct LinkBudget
    {
        double tx_power_dbm = 30.0;
        double noise_power_dbm = -94.0;
        double bandwidth_hz = 20e6;
        double noise_figure_db = 7.0;

        double tx_power_w() const { return dbm_to_watt(tx_power_dbm); }
        double noise_power_w() const { return dbm_to_watt(noise_power_dbm); }
    };

    // r^(n) = sqrt(r^2 + (n-1)^2 d^2 - 2 r (n-1) d sin(theta)), law of cosines.
    inline double element_distance(double r, double theta, int n, double d)
    {
        if (!(r > 0.0))
            throw std::domain_error("element_distance: r must be > 0");
        if (n < 1)
            throw std::domain_error("element_distance: element index is 1-based");
        if (n == 1)
            return r;
        const double offset = (n - 1) * d;
        const double radicand = r * r + offset * offset - 2.0 * r * offset * std::sin(theta);
        if (radicand < 0.0 || !std::isfinite(radicand))
            throw std::domain_error("element_distance: negative radicand (r=" + std::to_string(r) +
                                    ", n=" + std::to_string(n) + ")");
        return std::sqrt(radicand);
    }

    // Near-field steering vector a[theta, r], unit norm, element 1 real and equal to 1/sqrt(N).
    inline CVector steering_vector(double theta, double r, const ArrayGeometry &array)
    {
        const int n_el = array.num_elements;
        const double k = two_pi / array.wavelength();
        const double scale = 1.0 / std::sqrt(static_cast<double>(n_el));
        CVector a(n_el);
        a[0] = cd(scale, 0.0);
        for (int n = 2; n <= n_el; ++n)
        {
            const double dr = element_distance(r, theta, n, array.element_spacing) - r;
            a[n - 1] = std::polar(scale, -k * dr);
        }
        return a;
    }

    // Close-in free-space reference path loss (1 m reference) with additive shadowing, in dB.
    inline double ci_path_loss_db(double total_length, double carrier_hz, double exponent, double shadow_db)
    {
        if (!(total_length >= 1.0))
            throw std::domain_error("ci_path_loss_db: length below the 1 m reference distance");
        const double fspl_1m = 20.0 * std::log10(4.0 * pi * carrier_hz / speed_of_light);
        return fspl_1m + 10.0 * exponent * std::log10(total_length) + shadow_db;
    }

    inline double rayleigh_distance(const ArrayGeometry &array)
    {
        if (array.num_elements < 2)
            throw std::domain_error("rayleigh_distance: needs at least two elements");
        const double aperture = array.aperture();
        return 2.0 * aperture * aperture / array.wavelength();
    }

    // Static world: AP array, static scatterers and the per-path shadowing draws. Path 0 is the
    // LoS path, path l > 0 bounces off scatterers[l - 1].
    class Scene
    {
    public:
        Scene() = default;

        Scene(ArrayGeometry array, Region region, std::vector<Point> scatterers, std::vector<double> shadow_db,
              PathLossParams path_loss = {}, LinkBudget link = {})
            : array_(array), region_(region), scatterers_(std::move(scatterers)), shadow_db_(std::move(shadow_db)),
              path_loss_(path_loss), link_(link)
        {
            array_.validate();
            if (shadow_db_.size() != scatterers_.size() + 1)
                throw config_error("Scene: need one shadowing value per path (L + 1)");
            for (const auto &s : scatterers_)
                if (!(s.x > 0.0) || std::hypot(s.x, s.y) < 1.0)
                    throw config_error("Scene: scatterers must lie in front of the array, >= 1 m away");
            nlos_steering_.reserve(scatterers_.size());
            for (const auto &s : scatterers_)
                nlos_steering_.push_back(steering_vector(std::atan2(s.y, s.x), std::hypot(s.x, s.y), array_));
        }

        // Scatterers uniform in the region, shadowing N(0, std^2) per path.
        static Scene random(const ArrayGeometry &array, const Region &region, int num_scatterers, Rng &rng,
                            PathLossParams path_loss = {}, LinkBudget link = {})
        {
            std::vector<Point> scatterers;
            for (int l = 0; l < num_scatterers; ++l)
            {
                const double x = uniform(rng, region.x_min, region.x_max);
                const double y = uniform(rng, region.y_min, region.y_max);
                scatterers.push_back({x, y});
            }
            std::vector<double> shadow;
            shadow.push_back(path_loss.los_shadow_std_db * standard_normal(rng));
            for (int l = 0; l < num_scatterers; ++l)
                shadow.push_back(path_loss.nlos_shadow_std_db * standard_normal(rng));
            return Scene(array, region, std::move(scatterers), std::move(shadow), path_loss, link);
        }

        // Same geometry and draws at a different carrier (d re-derived as lambda/2 times the ratio
        // d/lambda of the current array).
        Scene with_carrier(double carrier_hz) const
        {
            const double d_over_lambda = array_.element_spacing / array_.wavelength();
            ArrayGeometry a{array_.num_elements, d_over_lambda * nftb::wavelength(carrier_hz), carrier_hz};
            return Scene(a, region_, scatterers_, shadow_db_, path_loss_, link_);
        }

        const ArrayGeometry &array() const { return array_; }
        const Region &region() const { return region_; }
        const std::vector<Point> &scatterers() const { return scatterers_; }
        const std::vector<double> &shadow_db() const { return shadow_db_; }
        const PathLossParams &path_loss() const { return path_loss_; }
        const LinkBudget &link() const { return link_; }
        int num_paths() const { return static_cast<int>(scatterers_.size()) + 1; }
        const CVector &nlos_steering(int path) const { return nlos_steering_.at(path - 1); }

    private:
        ArrayGeometry array_ = ArrayGeometry::half_wavelength(512, 142e9);
        Region region_;
        std::vector<Point> scatterers_;
        std::vector<double> shadow_db_ = {0.0};
        PathLossParams path_loss_;
        LinkBudget link_;
        std::vector<CVector> nlos_steering_;
    };

    inline PathGeometry los_geometry(Point ue)
    {
        const double r = std::hypot(ue.x, ue.y);
        return {0, r, std::atan2(ue.y, ue.x), r};
    }

    inline PathGeometry path_geometry(const Scene &scene, int path, Point ue)
    {
        if (path == 0)
            return los_geometry(ue);
        const Point s = scene.scatterers().at(path - 1);
        const double r = std::hypot(s.x, s.y);
        return {path, r, std::atan2(s.y, s.x), r + distance(s, ue)};
    }

    // Coefficient multiplying the steering vector of one path in the channel sum.
    inline cd path_coefficient(const PathState &p, double wavelength)
    {
        return p.gain * std::polar(1.0, -two_pi * p.geometry.distance / wavelength + p.doppler_phase);
    }

    // h(t) = sum_l g_l exp(-j 2 pi r_l / lambda) exp(j phi_l) a[theta_l, r_l].
    // phi_l accumulates 2 pi (v / lambda) cos(theta_l) delta per step and starts at 0 without prev.
    inline ChannelSnapshot synthesize_channel(const Scene &scene, const UEState &ue, const ChannelSnapshot *prev,
                                              double delta)
    {
        const int n_paths = scene.num_paths();
        const double lambda = scene.array().wavelength();
        if (prev != nullptr)
        {
            if (static_cast<int>(prev->paths.size()) != n_paths)
                throw std::logic_error("synthesize_channel: previous snapshot has a different path count");
            const double dt = ue.time - prev->time;
            if (std::abs(dt - delta) > 1e-9 * std::max(1.0, std::abs(ue.time)))
                throw std::logic_error("synthesize_channel: snapshot spacing differs from delta");
        }

        ChannelSnapshot snap;
        snap.time = ue.time;
        snap.paths.resize(n_paths);
        snap.h = CVector::Zero(scene.array().num_elements);
        for (int l = 0; l < n_paths; ++l)
        {
            PathState &p = snap.paths[l];
            p.geometry = path_geometry(scene, l, ue.position);
            p.shadow_db = scene.shadow_db()[l];
            const double exponent = l == 0 ? scene.path_loss().los_exponent : scene.path_loss().nlos_exponent;
            const double pl = ci_path_loss_db(p.geometry.total_propagation_length, scene.array().carrier_frequency,
                                              exponent, p.shadow_db);
            p.gain = std::pow(10.0, -pl / 20.0);
            p.doppler_phase = prev ? prev->paths[l].doppler_phase +
                                         two_pi * (ue.speed / lambda) * std::cos(p.geometry.angle) * delta
                                   : 0.0;
            const cd c = path_coefficient(p, lambda);
            if (l == 0)
                snap.h += c * steering_vector(p.geometry.angle, p.geometry.distance, scene.array());
            else
                snap.h += c * scene.nlos_steering(l);
        }
        return snap;
    }

    // Rebuild h from the per-path bookkeeping of a snapshot.
    inline CVector reconstruct_channel(const ChannelSnapshot &snap, const ArrayGeometry &array)
    {
        CVector h = CVector::Zero(array.num_elements);
        for (const auto &p : snap.paths)
            h += path_coefficient(p, array.wavelength()) * steering_vector(p.geometry.angle, p.geometry.distance, array);
        return h;
    }
}

#endif
