#include "glmep/projection.hpp"

#include <cmath>
#include <string>

#include "glmep/errors.hpp"

namespace glmep {

ProjectionOutput constrained_project(const ProjectionInput& in) {
    if (!(in.tau_hat > 0.0) || !std::isfinite(in.tau_hat))
        throw Error(ErrorCode::InvalidArgument, "tau_hat must be positive and finite");
    if (!std::isfinite(in.m_hat) || !std::isfinite(in.nu_r) || !std::isfinite(in.xi_r))
        throw Error(ErrorCode::InvalidArgument, "non-finite projection input");
    if (std::isnan(in.gamma) || in.gamma == std::numeric_limits<double>::infinity())
        throw Error(ErrorCode::InfeasibleThreshold, "threshold is not a finite lower bound");

    // When gamma <= -xi_r the bound can never bind: the unconstrained optimum
    // 1/tau_hat - xi_r is strictly above -xi_r.
    const double unconstrained = 1.0 / in.tau_hat - in.xi_r;
    ProjectionOutput out;
    if (unconstrained < in.gamma) {
        out.xi_p = in.gamma;
        out.threshold_active = true;
    } else {
        out.xi_p = unconstrained;
    }
    out.nu_p = (out.xi_p + in.xi_r) * in.m_hat - in.nu_r;
    return out;
}

double kld_objective(double xi_p, double tau_hat, double xi_r) {
    constexpr double kLog2Pi = 1.8378770664093454835606594728112;
    const double total = xi_p + xi_r;
    if (!(total > 0.0))
        throw Error(ErrorCode::NonIntegrable, "xi_p + xi_r = " + std::to_string(total) + " <= 0");
    return -std::log(total) + kLog2Pi + total * tau_hat;
}

}  // namespace glmep
