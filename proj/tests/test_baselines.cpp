#include "doctest.h"
#include "glmep/baselines.hpp"
#include "glmep/errors.hpp"
#include "glmep/harness.hpp"
#include "support/models.hpp"

using namespace glmep;

TEST_CASE("gaussianize_priors uses the mixture moments") {
    GlmModel m;
    m.A = Matrix::Ones(1, 2);
    m.priors = {exponential_decay_prior(1), GmmFactor({{0.25, 1.0, 0.5}, {0.75, -1.0, 0.5}})};
    m.likelihoods = {GmmFactor::gaussian(0.0, 1.0)};
    const auto g = gaussianize_priors(m);
    CHECK(g.mean(0) == doctest::Approx(0.0));
    CHECK(g.var(0) == doctest::Approx(1.1));
    CHECK(g.mean(1) == doctest::Approx(-0.5));
    CHECK(g.var(1) == doctest::Approx(0.5 + 0.25 * 2.25 + 0.75 * 0.25));
}

TEST_CASE("LMMSE equals the Gaussian posterior mean for Gaussian priors") {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = oracle::gaussian_glm(rng, 4, 6, oracle::uniform(rng, 0.01, 1.0));
        const auto [mean, cov] = oracle::gaussian_posterior(g);
        const Vector x = lmmse_estimate(g.model, g.noise_var);
        CHECK((x - mean).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("LMMSE in the noiseless limit fits the observations exactly") {
    std::mt19937_64 rng(62);
    const auto g = oracle::gaussian_glm(rng, 3, 5);
    const Vector x = lmmse_estimate(g.model, 0.0);
    CHECK((g.model.A * x - g.model.y).norm() < 1e-10);
}

TEST_CASE("LMMSE rejects a singular innovation covariance") {
    GlmModel m;
    m.A = Matrix::Ones(2, 1);  // rank one, two observations
    m.priors = {GmmFactor::gaussian(0.0, 1.0)};
    m.likelihoods = {GmmFactor::gaussian(0.0, 1.0), GmmFactor::gaussian(0.0, 1.0)};
    m.y = Vector::Zero(2);
    CHECK_THROWS_AS(lmmse_estimate(m, 0.0), Error);
    CHECK_NOTHROW(lmmse_estimate(m, 0.1));
    CHECK_THROWS_AS(lmmse_estimate(m, -1.0), Error);
}

TEST_CASE("EP and LMMSE share the fixed point on Gaussian models") {
    std::mt19937_64 rng(63);
    for (int trial = 0; trial < 5; ++trial) {
        const auto g = oracle::gaussian_glm(rng, 4, 6);
        EpConfig c;
        c.tol = 1e-12;
        const Vector x = lmmse_estimate(g.model, g.noise_var);
        const Posterior clip = ep_clip_estimate(g.model, c);
        CHECK(clip.counters.total_threshold_hits() == 0);
        CHECK((clip.x_mean - x).cwiseAbs().maxCoeff() < 1e-8);
        c.mode = Mode::ACEP;
        const Posterior acep = run(g.model, c);
        CHECK((acep.x_mean - clip.x_mean).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("ep_clip_estimate forces CLIP mode") {
    const SimConfig sim;
    auto rng = trial_rng(sim.seed, 0);
    const Instance inst = gen_instance(sim, rng);
    EpConfig c;
    c.mode = Mode::EPC;
    const Posterior a = ep_clip_estimate(inst.model, c);
    c.mode = Mode::CLIP;
    const Posterior b = run(inst.model, c);
    CHECK(a.x_mean == b.x_mean);
    CHECK(a.counters.threshold_hits == b.counters.threshold_hits);
}
