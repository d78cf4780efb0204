#include "branchlab/ode.hpp"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>

namespace branchlab
{
namespace
{
namespace odeint = boost::numeric::odeint;

using Stepper = odeint::runge_kutta_dopri5<double,
                                           double,
                                           double,
                                           double,
                                           odeint::vector_space_algebra>;

constexpr std::size_t kMaxSteps = 1'000'000;

template<class Controlled>
double drive(Controlled stepper,
             std::function<double(double)> const& rhs,
             double y,
             double t_end,
             double dt)
{
    auto system = [&rhs](double const& state, double& dydt, double) {
        dydt = rhs(state);
    };
    double time = 0.0;
    std::size_t steps = 0;
    while (time < t_end)
    {
        double const remaining = t_end - time;
        if (remaining <= 4.0 * std::numeric_limits<double>::epsilon() * t_end)
        {
            // rounding leftover of the accumulated time
            break;
        }
        if (dt <= 1e-15 * std::max(1.0, time))
        {
            throw SolverError("step size underflow", time);
        }
        bool const last = dt >= remaining;
        if (last)
        {
            dt = remaining;
        }
        double const before = y;
        if (stepper.try_step(system, y, time, dt) == odeint::success)
        {
            if (last)
            {
                time = t_end;
            }
            if (!std::isfinite(y))
            {
                throw SolverError("non-finite state", time);
            }
            if (++steps > kMaxSteps)
            {
                throw SolverError("step budget exhausted", time);
            }
        }
        else
        {
            y = before;
        }
    }
    return y;
}
}  // namespace

double integrate_autonomous(std::function<double(double)> const& rhs,
                            double y0,
                            double t,
                            SolverConfig const& cfg)
{
    if (!(cfg.rel_tol > 0.0 && cfg.abs_tol > 0.0 && cfg.max_step > 0.0))
    {
        throw std::invalid_argument("solver tolerances must be positive");
    }
    if (t < 0.0)
    {
        throw std::domain_error("integration time must be nonnegative");
    }
    if (t == 0.0)
    {
        return y0;
    }
    double const dt0 = std::min(1e-4 * t, cfg.max_step);
    if (std::isfinite(cfg.max_step))
    {
        return drive(odeint::make_controlled(
                         cfg.abs_tol, cfg.rel_tol, cfg.max_step, Stepper()),
                     rhs,
                     y0,
                     t,
                     dt0);
    }
    return drive(odeint::make_controlled(cfg.abs_tol, cfg.rel_tol, Stepper()),
                 rhs,
                 y0,
                 t,
                 dt0);
}

}  // namespace branchlab
