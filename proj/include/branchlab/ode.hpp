#pragma once

#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace branchlab
{

struct SolverConfig
{
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
};

//! Integration failure; `reached_time` is the last accepted time.
class SolverError : public std::runtime_error
{
  public:
    SolverError(std::string const& what, double reached)
        : std::runtime_error(what + " (reached t=" + std::to_string(reached)
                             + ")")
        , reached_time(reached)
    {
    }

    double reached_time;
};

/*!
 * Integrate the scalar autonomous equation dy/dt = rhs(y) from y(0) = y0 to
 * time t with an embedded Dormand-Prince 5(4) pair.
 */
double integrate_autonomous(std::function<double(double)> const& rhs,
                            double y0,
                            double t,
                            SolverConfig const& cfg);

}  // namespace branchlab
