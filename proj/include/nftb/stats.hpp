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


#ifndef NFTB_STATS_HPP
#define NFTB_STATS_HPP

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <span>
#include <stdexcept>

namespace nftb::stats
{
    inline double mean(std::span<const double> v)
    {
        if (v.empty())
            return 0.0;
        double s = 0.0;
        for (double x : v)
            s += x;
        return s / static_cast<double>(v.size());
    }

    // Unbiased sample standard deviation.
    inline double stddev(std::span<const double> v)
    {
        if (v.size() < 2)
            return 0.0;
        const double m = mean(v);
        double ss = 0.0;
        for (double x : v)
            ss += (x - m) * (x - m);
        return std::sqrt(ss / static_cast<double>(v.size() - 1));
    }

    inline double t_quantile(double p, double dof)
    {
        return boost::math::quantile(boost::math::students_t(dof), p);
    }

    // Half-width of the two-sided 95% confidence interval of the mean.
    inline double ci95(std::span<const double> v)
    {
        if (v.size() < 2)
            return 0.0;
        return t_quantile(0.975, static_cast<double>(v.size() - 1)) * stddev(v) / std::sqrt(static_cast<double>(v.size()));
    }

    inline double ci95_from_moments(double sum, double sum_sq, std::size_t n)
    {
        if (n < 2)
            return 0.0;
        const double dn = static_cast<double>(n);
        const double m = sum / dn;
        const double var = std::max(0.0, (sum_sq - dn * m * m) / (dn - 1.0));
        return t_quantile(0.975, dn - 1.0) * std::sqrt(var / dn);
    }

    struct OneSidedTest
    {
        double mean_difference = 0.0;
        double t_statistic = 0.0;
        double critical = 0.0;
        bool significant = false;
    };

    // Paired one-sided t-test of mean(a - b) > 0 at level alpha. All-equal differences count as
    // significant only when strictly positive.
    inline OneSidedTest paired_greater(std::span<const double> a, std::span<const double> b, double alpha = 0.05)
    {
        if (a.size() != b.size() || a.size() < 2)
            throw std::invalid_argument("paired_greater: need two equal-length samples of size >= 2");
        std::vector<double> d(a.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            d[i] = a[i] - b[i];
        OneSidedTest r;
        r.mean_difference = mean(d);
        const double sd = stddev(d);
        r.critical = t_quantile(1.0 - alpha, static_cast<double>(d.size() - 1));
        if (sd == 0.0)
        {
            r.t_statistic = r.mean_difference > 0.0 ? INFINITY : 0.0;
            r.significant = r.mean_difference > 0.0;
            return r;
        }
        r.t_statistic = r.mean_difference / (sd / std::sqrt(static_cast<double>(d.size())));
        r.significant = r.t_statistic > r.critical;
        return r;
    }

    // Welch one-sided test of mean(a) > mean(b).
    inline OneSidedTest welch_greater(std::span<const double> a, std::span<const double> b, double alpha = 0.05)
    {
        if (a.size() < 2 || b.size() < 2)
            throw std::invalid_argument("welch_greater: need samples of size >= 2");
        const double va = stddev(a) * stddev(a) / static_cast<double>(a.size());
        const double vb = stddev(b) * stddev(b) / static_cast<double>(b.size());
        OneSidedTest r;
        r.mean_difference = mean(a) - mean(b);
        const double se = std::sqrt(va + vb);
        const double dof = (va + vb) * (va + vb) /
                           (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
        r.critical = t_quantile(1.0 - alpha, std::isfinite(dof) ? dof : 1.0);
        r.t_statistic = se > 0.0 ? r.mean_difference / se : (r.mean_difference > 0.0 ? INFINITY : 0.0);
        r.significant = r.t_statistic > r.critical;
        return r;
    }
}

#endif
