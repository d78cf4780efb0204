#pragma once

#include <optional>

#include "branchlab/ode.hpp"
#include "branchlab/offspring.hpp"

namespace branchlab
{

/*!
 * F(s, t) = E s^{Z_t} for Z_0 = 1.
 *
 * Closed forms are used for the Neveu, generalized Neveu, stable critical,
 * log-supercritical and Sibuya laws; everything else integrates the backward
 * equation dF/dt = u(F), F(s, 0) = s. The integration runs in the variable
 * z = log(1 - F), where the equation reads dz/dt = a (L(e^{-z}) - 1) and
 * stays well conditioned as F approaches 1. For explosive laws F(1, t) is
 * P(Z_t < inf).
 */
double evaluate_F(ProcessParams const& params,
                  double s,
                  double t,
                  SolverConfig const& cfg = {});

// Backward-equation solution, bypassing any closed form.
double evaluate_F_ode(ProcessParams const& params,
                      double s,
                      double t,
                      SolverConfig const& cfg = {});

// Closed form when the law has one.
std::optional<double> evaluate_F_closed(ProcessParams const& params,
                                        double s,
                                        double t);

// 1 - F(s, t) computed without cancellation near s = 1.
double one_minus_F(ProcessParams const& params,
                   double s,
                   double t,
                   SolverConfig const& cfg = {});

// F(s, t) / F(1, t): the pgf of Z_t conditioned on Z_t < inf.
double conditional_pgf_G(ProcessParams const& params,
                         double s,
                         double t,
                         SolverConfig const& cfg = {});

// Lower real branch W_{-1}(h) for h in [-1/e, 0).
double lambert_w_lower(double h);

/*!
 * alpha(s, t) = (1 - s) F_s(s, t) / (1 - F(s, t)), the local index of
 * 1 - F in 1 - s. Evaluated as a central difference of log(1 - F) against
 * log(1 - s) with step min(1e-6, (1 - s)/10) in s. Throws
 * std::domain_error for s > 1 - 1e-9.
 */
double local_alpha(ProcessParams const& params,
                   double t,
                   double s,
                   SolverConfig const& cfg = {});

struct Residual
{
    double value;
    bool cancellation_warning;
};

/*!
 * (m(t)(1-s) - (1-F)) / ((1-s)^alpha Lambda(1/(1-s))) - c(t) for a
 * finite-mean law with regular_variation_L as Lambda.
 */
Residual transfer_residual(ProcessParams const& params,
                           double alpha,
                           double s,
                           double t,
                           SolverConfig const& cfg = {});

// (1 - F(s, t)) / (1 - s)^alpha(t) - beta(t) for an infinite-mean law.
Residual csbp_residual(ProcessParams const& params,
                       double s,
                       double t,
                       SolverConfig const& cfg = {});

}  // namespace branchlab
