#pragma once

#include <limits>

namespace glmep {

inline constexpr double kNoThreshold = -std::numeric_limits<double>::infinity();

/// Moments of the target belief plus the message that stays fixed (the
/// remainder) during the projection.
struct ProjectionInput {
    double m_hat = 0.0;   ///< belief mean
    double tau_hat = 1.0; ///< belief variance, > 0
    double nu_r = 0.0;
    double xi_r = 0.0;
    double gamma = kNoThreshold;  ///< lower bound on the projected precision
};

struct ProjectionOutput {
    double nu_p = 0.0;
    double xi_p = 0.0;
    bool threshold_active = false;
};

/// Scalar Gaussian KL projection with a lower-bounded precision.
///
/// xi_p = max{1/tau_hat - xi_r, gamma} and nu_p = (xi_p + xi_r) m_hat - nu_r, so
/// the implied belief (nu_p + nu_r, xi_p + xi_r) always has mean m_hat. A tie
/// between the unconstrained optimum and gamma is reported as inactive.
///
/// Throws InvalidArgument for tau_hat <= 0 or non-finite moments and
/// InfeasibleThreshold when gamma is NaN or +inf.
ProjectionOutput constrained_project(const ProjectionInput& input);

/// Twice the KL objective after optimizing nu_p out:
///   -log(xi_p + xi_r) + log(2 pi) + (xi_p + xi_r) tau_hat.
/// Throws NonIntegrable if xi_p + xi_r <= 0.
double kld_objective(double xi_p, double tau_hat, double xi_r);

}  // namespace glmep
