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

#ifndef NFTB_RANDOM_HPP
#define NFTB_RANDOM_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace nftb
{
    using Rng = std::mt19937_64;

    // Stream tags keep independent uses of the master seed apart.
    enum class Stream : std::uint32_t
    {
        trajectory = 1,
        scene = 2,
        feature_noise = 3,
        training = 4,
        split = 5,
        init = 6,
        benchmark_trajectory = 7,
        benchmark_scene = 8,
    };

    // Independent generator for (master seed, stream, index). Stable across runs.
    inline Rng derive_rng(std::uint64_t master_seed, Stream stream, std::uint64_t index = 0)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(master_seed & 0xffffffffu),
                          static_cast<std::uint32_t>(master_seed >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(index & 0xffffffffu),
                          static_cast<std::uint32_t>(index >> 32)};
        return Rng(seq);
    }

    inline double uniform(Rng &rng, double lo, double hi)
    {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    }

    inline double standard_normal(Rng &rng)
    {
        return std::normal_distribution<double>(0.0, 1.0)(rng);
    }
}

#endif
