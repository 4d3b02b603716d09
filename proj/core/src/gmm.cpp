#include "glmep/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "glmep/errors.hpp"

namespace glmep {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

GmmFactor::GmmFactor(std::vector<GmmComponent> components)
    : components_(std::move(components)), min_precision_(std::numeric_limits<double>::infinity()) {
    if (components_.empty()) throw Error(ErrorCode::InvalidArgument, "GMM needs at least one component");
    for (const auto& c : components_) {
        if (!(c.weight > 0.0) || !std::isfinite(c.weight))
            throw Error(ErrorCode::InvalidArgument, "GMM weight must be positive");
        if (!(c.var > 0.0) || !std::isfinite(c.var))
            throw Error(ErrorCode::InvalidArgument, "GMM variance must be positive");
        if (!std::isfinite(c.mean)) throw Error(ErrorCode::InvalidArgument, "GMM mean must be finite");
        min_precision_ = std::min(min_precision_, 1.0 / c.var);
    }
}

GmmFactor GmmFactor::gaussian(double mean, double var) { return GmmFactor({{1.0, mean, var}}); }

GaussMoment1 GmmFactor::moments() const {
    // Component s integrates to w_s sqrt(2 pi tau_s).
    double wsum = 0.0, mean = 0.0;
    for (const auto& c : components_) {
        const double mass = c.weight * std::sqrt(c.var);
        wsum += mass;
        mean += mass * c.mean;
    }
    mean /= wsum;
    double var = 0.0;
    for (const auto& c : components_) {
        const double d = c.mean - mean;
        var += c.weight * std::sqrt(c.var) * (c.var + d * d);
    }
    return {mean, var / wsum};
}

double gmm_min_precision(const GmmFactor& f) { return f.min_precision(); }

GmmBelief gmm_belief_moments(const GmmFactor& f, GaussNat1 mu) {
    const auto comps = f.components();
    const std::size_t S = comps.size();
    std::vector<double> log_eta(S), post_mean(S), post_var(S);

    for (std::size_t s = 0; s < S; ++s) {
        const auto& c = comps[s];
        const double xi_s = 1.0 / c.var;
        const double Xi = xi_s + mu.xi;
        if (!(Xi > 0.0))
            throw Error(ErrorCode::NonIntegrableBelief,
                        "component precision + message precision = " + std::to_string(Xi));
        post_var[s] = 1.0 / Xi;
        post_mean[s] = (xi_s * c.mean + mu.nu) / Xi;
        // log of w_s * integral of Nbar(t | m_s, tau_s) exp(nu t - xi t^2 / 2) dt,
        // with the quadratic terms in xi_s m_s cancelled analytically.
        const double quad =
            (mu.nu * mu.nu + 2.0 * xi_s * c.mean * mu.nu - mu.xi * xi_s * c.mean * c.mean) / (2.0 * Xi);
        log_eta[s] = std::log(c.weight) + 0.5 * (kLog2Pi - std::log(Xi)) + quad;
    }

    const double peak = *std::max_element(log_eta.begin(), log_eta.end());
    double total = 0.0;
    std::vector<double> rho(S);
    for (std::size_t s = 0; s < S; ++s) {
        rho[s] = std::exp(log_eta[s] - peak);
        total += rho[s];
    }
    double m_hat = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        rho[s] /= total;
        m_hat += rho[s] * post_mean[s];
    }
    double tau_hat = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        const double d = post_mean[s] - m_hat;
        tau_hat += rho[s] * (post_var[s] + d * d);
    }
    if (!(tau_hat > 0.0) || !std::isfinite(m_hat))
        throw Error(ErrorCode::NonIntegrableBelief, "degenerate belief moments");

    return {m_hat, tau_hat, peak + std::log(total), std::move(rho)};
}

}  // namespace glmep
