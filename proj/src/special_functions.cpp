#include "branchlab/special_functions.hpp"

#include <cmath>
#include <stdexcept>

namespace branchlab
{

double digamma(double x)
{
    if (!(x > 0.0))
    {
        throw std::domain_error("digamma: argument must be positive");
    }
    double shift = 0.0;
    while (x < 10.0)
    {
        shift -= 1.0 / x;
        x += 1.0;
    }
    // B_{2k} / (2k) for k = 1..7
    static constexpr double coeff[] = {1.0 / 12.0,
                                       -1.0 / 120.0,
                                       1.0 / 252.0,
                                       -1.0 / 240.0,
                                       1.0 / 132.0,
                                       -691.0 / 32760.0,
                                       1.0 / 12.0};
    double const inv2 = 1.0 / (x * x);
    double series = 0.0;
    double power = inv2;
    for (double c : coeff)
    {
        series += c * power;
        power *= inv2;
    }
    return shift + std::log(x) - 0.5 / x - series;
}

}  // namespace branchlab
