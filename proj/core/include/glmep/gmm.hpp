#pragma once

#include <span>
#include <vector>

#include "glmep/gaussian.hpp"

namespace glmep {

struct GmmComponent {
    double weight;
    double mean;
    double var;
};

/// Finite Gaussian mixture f(t) = sum_s w_s Nbar(t | m_s, tau_s). Weights need
/// not sum to one. Used both for priors p(x_k) and likelihoods p(y_n | z_n).
class GmmFactor {
public:
    /// Throws InvalidArgument if empty or any weight/variance is not positive.
    explicit GmmFactor(std::vector<GmmComponent> components);

    /// Single Gaussian component with unit weight.
    static GmmFactor gaussian(double mean, double var);

    std::span<const GmmComponent> components() const noexcept { return components_; }
    std::size_t size() const noexcept { return components_.size(); }

    /// Smallest component precision min_s 1/tau_s.
    double min_precision() const noexcept { return min_precision_; }

    /// Mean and variance of f normalized to a density.
    GaussMoment1 moments() const;

private:
    std::vector<GmmComponent> components_;
    double min_precision_;
};

struct GmmBelief {
    double m_hat;
    double tau_hat;
    /// log of the integral of f(t) exp(nu t - xi t^2 / 2) dt.
    double log_evidence;
    std::vector<double> responsibilities;
};

/// Mean and variance of b(t) proportional to f(t) mu(t) for a Gaussian message
/// mu in natural form. The message may be non-integrable; the belief must not be.
/// Throws NonIntegrableBelief if xi_s + mu.xi <= 0 for some component.
GmmBelief gmm_belief_moments(const GmmFactor& f, GaussNat1 mu);

/// Free-function spelling of GmmFactor::min_precision.
double gmm_min_precision(const GmmFactor& f);

}  // namespace glmep
