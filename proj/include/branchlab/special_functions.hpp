#pragma once

namespace branchlab
{

// Euler-Mascheroni constant.
inline constexpr double euler_gamma = 0.57721566490153286060651209008240243;

/*!
 * Digamma function psi(x) = Gamma'(x) / Gamma(x) for x > 0.
 *
 * Shifts the argument above 10 with psi(x) = psi(x + 1) - 1/x and then sums
 * the Bernoulli asymptotic series. Accurate to about 1e-14 relative.
 * Throws std::domain_error for x <= 0 or NaN.
 */
double digamma(double x);

}  // namespace branchlab
