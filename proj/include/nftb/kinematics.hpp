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


#ifndef NFTB_KINEMATICS_HPP
#define NFTB_KINEMATICS_HPP

#include <cmath>

namespace nftb
{
    struct Point
    {
        double x = 0.0;
        double y = 0.0;
    };

    inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

    // Served area in front of the array. The AP reference element sits at the origin with the
    // array along +y and broadside along +x. x_min keeps every point at least 1 m from the
    // reference element, the close-in path-loss reference distance.
    struct Region
    {
        double x_min = 1.0;
        double x_max = 50.0;
        double y_min = -25.0;
        double y_max = 25.0;

        bool contains(Point p) const
        {
            return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
        }
    };

    struct UEState
    {
        Point position;
        double speed = 0.0;     // m/s
        double direction = 0.0; // heading, radians
        double time = 0.0;      // s
    };
}

#endif
