#pragma once

#include "glmep/glm_ep.hpp"

namespace glmep {

/// Per-coordinate mean and variance of each prior mixture.
struct PriorGaussianization {
    Vector mean;
    Vector var;
};

PriorGaussianization gaussianize_priors(const GlmModel& model);

/// x = m + C A^T (A C A^T + noise_var I)^{-1} (y - A m) with (m, C = diag) taken
/// from gaussianize_priors. Assumes AWGN likelihoods around model.y.
/// Throws SingularMatrix if the innovation covariance cannot be factored.
Vector lmmse_estimate(const GlmModel& model, double noise_var);

/// EP with every projected precision floored at +epsilon.
Posterior ep_clip_estimate(const GlmModel& model, EpConfig config);

}  // namespace glmep
