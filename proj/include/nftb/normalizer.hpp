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


#ifndef NFTB_NORMALIZER_HPP
#define NFTB_NORMALIZER_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>

#include "errors.hpp"
#include "features.hpp"

#include <json.hpp>

namespace nftb
{
    enum class LabelScaling
    {
        max,        // y / max(train labels)
        log_range,  // log(y / floor) / log(max / floor)
    };

    inline std::string_view to_string(LabelScaling s) { return s == LabelScaling::max ? "max" : "log_range"; }

    inline LabelScaling parse_label_scaling(std::string_view s)
    {
        if (s == "max")
            return LabelScaling::max;
        if (s == "log_range")
            return LabelScaling::log_range;
        throw config_error("unknown label scaling '" + std::string(s) + "'");
    }

    // Per-feature z-score plus a label map into [0, 1], fitted on the training split only.
    struct Normalizer
    {
        FeatureVector mean{};
        FeatureVector std{};
        LabelScaling label_scaling = LabelScaling::max;
        double label_scale = 1.0; // max training label, s
        double label_floor = 0.0; // smallest admissible label (solver step), s; used by log_range
        bool fitted = false;

        void require_fitted() const
        {
            if (!fitted)
                throw std::logic_error("Normalizer: not fitted");
        }

        Eigen::VectorXd features(const FeatureVector &fv) const
        {
            require_fitted();
            Eigen::VectorXd z(num_features);
            for (std::size_t i = 0; i < num_features; ++i)
                z[static_cast<Eigen::Index>(i)] = (fv[i] - mean[i]) / std[i];
            return z;
        }

        double label(double seconds) const
        {
            require_fitted();
            if (label_scaling == LabelScaling::max)
                return seconds / label_scale;
            return std::log(std::max(seconds, label_floor) / label_floor) / std::log(label_scale / label_floor);
        }

        double denormalize_label(double y) const
        {
            require_fitted();
            if (label_scaling == LabelScaling::max)
                return y * label_scale;
            return label_floor * std::exp(y * std::log(label_scale / label_floor));
        }
    };

    // Constant features get std = 1 so they map to 0 instead of dividing by zero.
    inline Normalizer fit_normalizer(std::span<const FeatureVector> features, std::span<const double> labels,
                                     LabelScaling scaling, double label_floor)
    {
        if (features.empty() || features.size() != labels.size())
            throw data_error("fit_normalizer: need a non-empty training split");
        Normalizer n;
        n.label_scaling = scaling;
        n.label_floor = label_floor;
        const double count = static_cast<double>(features.size());
        for (std::size_t i = 0; i < num_features; ++i)
        {
            double s = 0.0;
            for (const auto &fv : features)
                s += fv[i];
            const double mu = s / count;
            double ss = 0.0;
            for (const auto &fv : features)
                ss += (fv[i] - mu) * (fv[i] - mu);
            const double sd = std::sqrt(ss / count);
            n.mean[i] = mu;
            n.std[i] = sd > 1e-12 * std::max(1.0, std::abs(mu)) ? sd : 1.0;
        }
        n.label_scale = *std::max_element(labels.begin(), labels.end());
        if (!(n.label_scale > 0.0))
            throw data_error("fit_normalizer: labels must be positive");
        if (scaling == LabelScaling::log_range && !(label_floor > 0.0 && n.label_scale > label_floor))
            throw data_error("fit_normalizer: log_range needs 0 < floor < max label");
        n.fitted = true;
        return n;
    }

    inline void to_json(nlohmann::json &j, const Normalizer &n)
    {
        j = nlohmann::json{{"mean", n.mean},
                           {"std", n.std},
                           {"label_scaling", std::string(to_string(n.label_scaling))},
                           {"label_scale", n.label_scale},
                           {"label_floor", n.label_floor}};
    }

    inline void from_json(const nlohmann::json &j, Normalizer &n)
    {
        n.mean = j.at("mean").get<FeatureVector>();
        n.std = j.at("std").get<FeatureVector>();
        n.label_scaling = parse_label_scaling(j.at("label_scaling").get<std::string>());
        n.label_scale = j.at("label_scale").get<double>();
        n.label_floor = j.at("label_floor").get<double>();
        for (double s : n.std)
            if (!(s > 0.0))
                throw data_error("normalizer: std entries must be > 0");
        n.fitted = true;
    }
}

#endif
