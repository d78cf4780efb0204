#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace branchlab::test
{
// One-sample Kolmogorov-Smirnov distance against a continuous CDF.
inline double ks_one_sample(std::vector<double> x, std::function<double(double)> const& cdf)
{
    std::sort(x.begin(), x.end());
    double const n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        double const f = cdf(x[i]);
        d = std::max({d, f - i / n, (i + 1) / n - f});
    }
    return d;
}

// Asymptotic one-sample critical value at level 0.01.
inline double ks_one_sample_threshold(std::size_t n)
{
    return 1.6276 / std::sqrt(static_cast<double>(n));
}

inline double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}
}  // namespace branchlab::test
