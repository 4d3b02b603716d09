#include "glmep/baselines.hpp"

#include "glmep/errors.hpp"

namespace glmep {

PriorGaussianization gaussianize_priors(const GlmModel& model) {
    const auto K = static_cast<Eigen::Index>(model.num_vars());
    PriorGaussianization g{Vector(K), Vector(K)};
    for (Eigen::Index k = 0; k < K; ++k) {
        const GaussMoment1 mom = model.priors[static_cast<std::size_t>(k)].moments();
        g.mean(k) = mom.m;
        g.var(k) = mom.tau;
    }
    return g;
}

Vector lmmse_estimate(const GlmModel& model, double noise_var) {
    model.check();
    if (!(noise_var >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise variance must be >= 0");
    if (static_cast<std::size_t>(model.y.size()) != model.num_obs())
        throw Error(ErrorCode::InvalidArgument, "model has no observations");

    const PriorGaussianization prior = gaussianize_priors(model);
    const Matrix& A = model.A;
    const Matrix CAt = prior.var.asDiagonal() * A.transpose();
    Matrix innovation = A * CAt;
    innovation.diagonal().array() += noise_var;

    Eigen::LDLT<Matrix> ldlt(symmetrize(innovation));
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all())
        throw Error(ErrorCode::SingularMatrix, "A C A^T + noise_var I is not invertible");
    const Vector residual = model.y - A * prior.mean;
    return prior.mean + CAt * ldlt.solve(residual);
}

Posterior ep_clip_estimate(const GlmModel& model, EpConfig config) {
    config.mode = Mode::CLIP;
    return run(model, config);
}

}  // namespace glmep
