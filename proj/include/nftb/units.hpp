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

#ifndef NFTB_UNITS_HPP
#define NFTB_UNITS_HPP

#include <cmath>
#include <numbers>

namespace nftb
{
    inline constexpr double speed_of_light = 299792458.0; // m/s, exact
    inline constexpr double pi = std::numbers::pi;
    inline constexpr double two_pi = 2.0 * std::numbers::pi;

    inline double wavelength(double carrier_hz) { return speed_of_light / carrier_hz; }

    inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
    inline double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }
    inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
    inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

    inline double deg_to_rad(double deg) { return deg * pi / 180.0; }
    inline double rad_to_deg(double rad) { return rad * 180.0 / pi; }

    // Thermal noise floor kTB at 290 K plus receiver noise figure.
    inline double thermal_noise_dbm(double bandwidth_hz, double noise_figure_db)
    {
        return -174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
    }
}

#endif
