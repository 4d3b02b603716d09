#include "glmep/glm_ep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "glmep/errors.hpp"
#include "glmep/projection.hpp"

namespace glmep {

std::string_view to_string(Mode mode) noexcept {
    switch (mode) {
        case Mode::ACEP: return "acep";
        case Mode::EPC: return "epc";
        case Mode::CLIP: return "clip";
    }
    return "unknown";
}

std::string_view to_string(Msg msg) noexcept {
    switch (msg) {
        case Msg::FyToZ: return "fy_to_z";
        case Msg::ZToFy: return "z_to_fy";
        case Msg::FzToZ: return "fz_to_z";
        case Msg::ZToFz: return "z_to_fz";
        case Msg::FxToX: return "fx_to_x";
        case Msg::XToFx: return "x_to_fx";
        case Msg::FzToX: return "fz_to_x";
        case Msg::XToFz: return "x_to_fz";
    }
    return "unknown";
}

std::size_t Counters::total_threshold_hits() const noexcept {
    return std::accumulate(threshold_hits.begin(), threshold_hits.end(), std::size_t{0});
}

std::size_t Counters::total_skipped() const noexcept {
    return std::accumulate(skipped.begin(), skipped.end(), std::size_t{0});
}

std::size_t Counters::fz_adjacent_threshold_hits() const noexcept {
    return hits(Msg::FzToZ) + hits(Msg::ZToFz) + hits(Msg::FzToX) + hits(Msg::XToFz);
}

Counters& Counters::operator+=(const Counters& other) noexcept {
    for (std::size_t i = 0; i < kNumMsg; ++i) {
        threshold_hits[i] += other.threshold_hits[i];
        skipped[i] += other.skipped[i];
    }
    invariant_checks += other.invariant_checks;
    invariant_violations += other.invariant_violations;
    return *this;
}

void validate_config(const EpConfig& c) {
    if (!(c.epsilon > 0.0) || !std::isfinite(c.epsilon))
        throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
    if (!(c.init_xi > 0.0) || !std::isfinite(c.init_xi))
        throw Error(ErrorCode::InvalidArgument, "init_xi must be positive");
    if (c.max_sweeps < 1) throw Error(ErrorCode::InvalidArgument, "max_sweeps must be >= 1");
    if (!(c.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
    if (!(c.damping > 0.0 && c.damping <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "damping must lie in (0, 1]");
}

void GlmModel::check() const {
    if (A.rows() < 1 || A.cols() < 1) throw Error(ErrorCode::InvalidArgument, "A must be non-empty");
    if (priors.size() != num_vars())
        throw Error(ErrorCode::InvalidArgument, "need one prior per column of A");
    if (likelihoods.size() != num_obs())
        throw Error(ErrorCode::InvalidArgument, "need one likelihood per row of A");
    if (y.size() != 0 && static_cast<std::size_t>(y.size()) != num_obs())
        throw Error(ErrorCode::InvalidArgument, "y length must equal rows of A");
    if (!A.allFinite()) throw Error(ErrorCode::InvalidArgument, "A has non-finite entries");
}

namespace {

constexpr std::size_t idx(Msg m) { return static_cast<std::size_t>(m); }

double lower_bound(Mode mode, double acep_gamma, double epsilon) {
    switch (mode) {
        case Mode::ACEP: return acep_gamma;
        case Mode::EPC: return kNoThreshold;
        case Mode::CLIP: return epsilon;
    }
    return kNoThreshold;
}

// Projects the belief (m_hat, tau_hat) against `remainder` and writes the
// result into `target`, honoring damping.
void project_into(GaussNat1& target, GaussMoment1 belief, GaussNat1 remainder, double gamma,
                  Msg msg, GlmState& state, const EpConfig& config) {
    const ProjectionOutput p =
        constrained_project({belief.m, belief.tau, remainder.nu, remainder.xi, gamma});
    if (p.threshold_active) ++state.counters.threshold_hits[idx(msg)];

    GaussNat1 next{p.nu_p, p.xi_p};
    if (config.damping < 1.0) {
        const double d = config.damping;
        const GaussNat1 damped{d * next.nu + (1.0 - d) * target.nu, d * next.xi + (1.0 - d) * target.xi};
        // A damped step that falls below the bound is discarded in favour of
        // the undamped projection.
        if (damped.xi >= gamma && damped.xi + remainder.xi > 0.0) next = damped;
    }
    target = next;
}

bool integrable(double xi) { return xi > 0.0; }

void validate_after(GlmState& state, const GlmModel& model, const EpConfig& config,
                    const GaussNat1* destination_belief) {
    if (!config.validate) return;
    ++state.counters.invariant_checks;
    std::size_t bad = count_invariant_violations(state, model, config.mode);
    // EPC: after a factor-side update the destination variable belief is proper.
    if (config.mode == Mode::EPC && destination_belief && !integrable(destination_belief->xi)) ++bad;
    state.counters.invariant_violations += bad;
}

// Rank-one refresh of the cached f_z belief when one incoming message moves
// along direction `a`.
void refresh_fz_belief(GlmState& state, const Vector& a, GaussNat1 before, GaussNat1 after) {
    const double dxi = after.xi - before.xi;
    const double dnu = after.nu - before.nu;
    if (dxi != 0.0) state.C = rank_one_precision_update(state.C, a, dxi);
    if (dnu != 0.0) state.h += dnu * a;
    if (dxi != 0.0 || dnu != 0.0) state.m = state.C * state.h;
}

Vector unit(std::size_t K, std::size_t k) {
    Vector e = Vector::Zero(static_cast<Eigen::Index>(K));
    e(static_cast<Eigen::Index>(k)) = 1.0;
    return e;
}

}  // namespace

GlmState init_state(const GlmModel& model, double init_xi) {
    model.check();
    if (!(init_xi > 0.0) || !std::isfinite(init_xi))
        throw Error(ErrorCode::InvalidArgument, "init_xi must be positive");
    const std::size_t N = model.num_obs();
    const std::size_t K = model.num_vars();
    const GaussNat1 flat{0.0, init_xi};

    GlmState s;
    s.fy_to_z.assign(N, flat);
    s.z_to_fy.assign(N, flat);
    s.fz_to_z.assign(N, flat);
    s.z_to_fz.assign(N, flat);
    s.fx_to_x.assign(K, flat);
    s.x_to_fx.assign(K, flat);
    s.fz_to_x.assign(K, flat);
    s.x_to_fz.assign(K, flat);
    try {
        resolve_fz_belief(s, model);
    } catch (const Error& e) {
        throw Error(ErrorCode::SingularMatrix, std::string("initial f_z belief: ") + e.what());
    }
    return s;
}

void resolve_fz_belief(GlmState& state, const GlmModel& model) {
    const auto N = static_cast<Eigen::Index>(model.num_obs());
    const auto K = static_cast<Eigen::Index>(model.num_vars());
    Vector xi_z(N), nu_z(N), xi_x(K), nu_x(K);
    for (Eigen::Index n = 0; n < N; ++n) {
        xi_z(n) = state.z_to_fz[static_cast<std::size_t>(n)].xi;
        nu_z(n) = state.z_to_fz[static_cast<std::size_t>(n)].nu;
    }
    for (Eigen::Index k = 0; k < K; ++k) {
        xi_x(k) = state.x_to_fz[static_cast<std::size_t>(k)].xi;
        nu_x(k) = state.x_to_fz[static_cast<std::size_t>(k)].nu;
    }
    Matrix precision = model.A.transpose() * xi_z.asDiagonal() * model.A;
    precision.diagonal() += xi_x;
    precision = symmetrize(precision);

    Eigen::LLT<Matrix> llt(precision);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPD, "f_z belief precision is not PD");
    state.h = model.A.transpose() * nu_z + nu_x;
    state.C = symmetrize(llt.solve(Matrix::Identity(K, K)));
    state.m = state.C * state.h;
}

GaussMoment1 belief_fz_x_marginal(const GlmState& state, std::size_t k) {
    const auto i = static_cast<Eigen::Index>(k);
    return {state.m(i), state.C(i, i)};
}

GaussMoment1 belief_fz_z_marginal(const GlmState& state, const GlmModel& model, std::size_t n) {
    const Vector a = model.A.row(static_cast<Eigen::Index>(n)).transpose();
    return {a.dot(state.m), a.dot(state.C * a)};
}

GaussNat1 belief_z(const GlmState& s, std::size_t n) {
    return {s.fz_to_z[n].nu + s.fy_to_z[n].nu, s.fz_to_z[n].xi + s.fy_to_z[n].xi};
}

GaussNat1 belief_x(const GlmState& s, std::size_t k) {
    return {s.fz_to_x[k].nu + s.fx_to_x[k].nu, s.fz_to_x[k].xi + s.fx_to_x[k].xi};
}

// ---- factor f_y_n -> z_n ----------------------------------------------------

void update_fy_to_z(GlmState& state, const GlmModel& model, std::size_t n, const EpConfig& config) {
    GmmBelief b;
    try {
        b = gmm_belief_moments(model.likelihoods[n], state.z_to_fy[n]);
    } catch (const Error& e) {
        if (config.mode == Mode::EPC && e.code() == ErrorCode::NonIntegrableBelief) {
            ++state.counters.skipped[idx(Msg::FyToZ)];
            validate_after(state, model, config, nullptr);
            return;
        }
        throw;
    }
    const double gamma = lower_bound(config.mode, -state.fz_to_z[n].xi + config.epsilon, config.epsilon);
    project_into(state.fy_to_z[n], {b.m_hat, b.tau_hat}, state.z_to_fy[n], gamma, Msg::FyToZ, state, config);
    const GaussNat1 dest = belief_z(state, n);
    validate_after(state, model, config, &dest);
}

// ---- variable z_n -> factor f_y_n -------------------------------------------

void update_z_to_fy(GlmState& state, const GlmModel& model, std::size_t n, const EpConfig& config) {
    const GaussNat1 bz = belief_z(state, n);
    if (!integrable(bz.xi)) {
        if (config.mode == Mode::EPC) {
            ++state.counters.skipped[idx(Msg::ZToFy)];
            validate_after(state, model, config, nullptr);
            return;
        }
        throw Error(ErrorCode::NonIntegrable, "belief at z_" + std::to_string(n) + " is not integrable");
    }
    const double gamma = lower_bound(
        config.mode, -gmm_min_precision(model.likelihoods[n]) + config.epsilon, config.epsilon);
    project_into(state.z_to_fy[n], nat_to_moment(bz), state.fy_to_z[n], gamma, Msg::ZToFy, state, config);
    validate_after(state, model, config, nullptr);
}

// ---- factor f_z -> z_n ------------------------------------------------------

void update_fz_to_z(GlmState& state, const GlmModel& model, std::size_t n, const EpConfig& config) {
    const GaussMoment1 marginal = belief_fz_z_marginal(state, model, n);
    const double gamma = lower_bound(config.mode, -state.fy_to_z[n].xi + config.epsilon, config.epsilon);
    project_into(state.fz_to_z[n], marginal, state.z_to_fz[n], gamma, Msg::FzToZ, state, config);
    const GaussNat1 dest = belief_z(state, n);
    validate_after(state, model, config, &dest);
}

// ---- variable z_n -> factor f_z ---------------------------------------------

void update_z_to_fz(GlmState& state, const GlmModel& model, std::size_t n, const EpConfig& config) {
    const GaussNat1 bz = belief_z(state, n);
    if (!integrable(bz.xi)) {
        if (config.mode == Mode::EPC) {
            ++state.counters.skipped[idx(Msg::ZToFz)];
            validate_after(state, model, config, nullptr);
            return;
        }
        throw Error(ErrorCode::NonIntegrable, "belief at z_" + std::to_string(n) + " is not integrable");
    }
    const Vector a = model.A.row(static_cast<Eigen::Index>(n)).transpose();
    const GaussNat1 before = state.z_to_fz[n];
    if (config.ordered_copies) {
        state.z_to_fz[n] = state.fy_to_z[n];
    } else {
        // The f_z covariance stays PD iff xi_new > xi_old - 1/(a^T C a).
        const double bound = before.xi - 1.0 / a.dot(state.C * a) + config.epsilon;
        const double gamma = lower_bound(config.mode, bound, config.epsilon);
        project_into(state.z_to_fz[n], nat_to_moment(bz), state.fz_to_z[n], gamma, Msg::ZToFz, state, config);
    }
    refresh_fz_belief(state, a, before, state.z_to_fz[n]);
    validate_after(state, model, config, nullptr);
}

// ---- factor f_x_k -> x_k ----------------------------------------------------

void update_fx_to_x(GlmState& state, const GlmModel& model, std::size_t k, const EpConfig& config) {
    GmmBelief b;
    try {
        b = gmm_belief_moments(model.priors[k], state.x_to_fx[k]);
    } catch (const Error& e) {
        if (config.mode == Mode::EPC && e.code() == ErrorCode::NonIntegrableBelief) {
            ++state.counters.skipped[idx(Msg::FxToX)];
            validate_after(state, model, config, nullptr);
            return;
        }
        throw;
    }
    const double gamma = lower_bound(config.mode, -state.fz_to_x[k].xi + config.epsilon, config.epsilon);
    project_into(state.fx_to_x[k], {b.m_hat, b.tau_hat}, state.x_to_fx[k], gamma, Msg::FxToX, state, config);
    const GaussNat1 dest = belief_x(state, k);
    validate_after(state, model, config, &dest);
}

// ---- variable x_k -> factor f_x_k -------------------------------------------

void update_x_to_fx(GlmState& state, const GlmModel& model, std::size_t k, const EpConfig& config) {
    const GaussNat1 bx = belief_x(state, k);
    if (!integrable(bx.xi)) {
        if (config.mode == Mode::EPC) {
            ++state.counters.skipped[idx(Msg::XToFx)];
            validate_after(state, model, config, nullptr);
            return;
        }
        throw Error(ErrorCode::NonIntegrable, "belief at x_" + std::to_string(k) + " is not integrable");
    }
    const double gamma =
        lower_bound(config.mode, -gmm_min_precision(model.priors[k]) + config.epsilon, config.epsilon);
    project_into(state.x_to_fx[k], nat_to_moment(bx), state.fx_to_x[k], gamma, Msg::XToFx, state, config);
    validate_after(state, model, config, nullptr);
}

// ---- factor f_z -> x_k ------------------------------------------------------

void update_fz_to_x(GlmState& state, const GlmModel& model, std::size_t k, const EpConfig& config) {
    const GaussMoment1 marginal = belief_fz_x_marginal(state, k);
    const double gamma = lower_bound(config.mode, -state.fx_to_x[k].xi + config.epsilon, config.epsilon);
    project_into(state.fz_to_x[k], marginal, state.x_to_fz[k], gamma, Msg::FzToX, state, config);
    const GaussNat1 dest = belief_x(state, k);
    validate_after(state, model, config, &dest);
}

// ---- variable x_k -> factor f_z ---------------------------------------------

void update_x_to_fz(GlmState& state, const GlmModel& model, std::size_t k, const EpConfig& config) {
    const GaussNat1 bx = belief_x(state, k);
    if (!integrable(bx.xi)) {
        if (config.mode == Mode::EPC) {
            ++state.counters.skipped[idx(Msg::XToFz)];
            validate_after(state, model, config, nullptr);
            return;
        }
        throw Error(ErrorCode::NonIntegrable, "belief at x_" + std::to_string(k) + " is not integrable");
    }
    const Vector e = unit(model.num_vars(), k);
    const GaussNat1 before = state.x_to_fz[k];
    if (config.ordered_copies) {
        state.x_to_fz[k] = state.fx_to_x[k];
    } else {
        const auto i = static_cast<Eigen::Index>(k);
        const double bound = before.xi - 1.0 / state.C(i, i) + config.epsilon;
        const double gamma = lower_bound(config.mode, bound, config.epsilon);
        project_into(state.x_to_fz[k], nat_to_moment(bx), state.fz_to_x[k], gamma, Msg::XToFz, state, config);
    }
    refresh_fz_belief(state, e, before, state.x_to_fz[k]);
    validate_after(state, model, config, nullptr);
}

// ---- schedule ---------------------------------------------------------------

std::size_t count_invariant_violations(const GlmState& s, const GlmModel& model, Mode mode) {
    std::size_t bad = is_positive_definite(s.C) ? 0 : 1;
    if (mode == Mode::EPC) return bad;
    for (std::size_t n = 0; n < model.num_obs(); ++n) {
        if (!integrable(belief_z(s, n).xi)) ++bad;
        if (!integrable(s.z_to_fy[n].xi + gmm_min_precision(model.likelihoods[n]))) ++bad;
    }
    for (std::size_t k = 0; k < model.num_vars(); ++k) {
        if (!integrable(belief_x(s, k).xi)) ++bad;
        if (!integrable(s.x_to_fx[k].xi + gmm_min_precision(model.priors[k]))) ++bad;
    }
    return bad;
}

Posterior posterior(const GlmState& state, const GlmModel& model) {
    const auto N = static_cast<Eigen::Index>(model.num_obs());
    const auto K = static_cast<Eigen::Index>(model.num_vars());
    Posterior p;
    p.x_mean.resize(K);
    p.x_var.resize(K);
    p.z_mean.resize(N);
    p.z_var.resize(N);
    for (Eigen::Index k = 0; k < K; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        const GaussNat1 b = belief_x(state, uk);
        const GaussMoment1 g = integrable(b.xi) ? nat_to_moment(b) : belief_fz_x_marginal(state, uk);
        p.x_mean(k) = g.m;
        p.x_var(k) = g.tau;
    }
    for (Eigen::Index n = 0; n < N; ++n) {
        const auto un = static_cast<std::size_t>(n);
        const GaussNat1 b = belief_z(state, un);
        const GaussMoment1 g = integrable(b.xi) ? nat_to_moment(b) : belief_fz_z_marginal(state, model, un);
        p.z_mean(n) = g.m;
        p.z_var(n) = g.tau;
    }
    p.counters = state.counters;
    return p;
}

SweepReport sweep(GlmState& state, const GlmModel& model, const EpConfig& config) {
    const Posterior before = posterior(state, model);
    const std::size_t hits0 = state.counters.total_threshold_hits();
    const std::size_t skips0 = state.counters.total_skipped();

    for (std::size_t n = 0; n < model.num_obs(); ++n) {
        update_fz_to_z(state, model, n, config);
        update_z_to_fy(state, model, n, config);
        update_fy_to_z(state, model, n, config);
        update_z_to_fz(state, model, n, config);
    }
    for (std::size_t k = 0; k < model.num_vars(); ++k) {
        update_fz_to_x(state, model, k, config);
        update_x_to_fx(state, model, k, config);
        update_fx_to_x(state, model, k, config);
        update_x_to_fz(state, model, k, config);
    }
    // Restore exactness of the cache after the rank-one updates.
    resolve_fz_belief(state, model);

    const Posterior after = posterior(state, model);
    SweepReport report;
    report.max_mean_change = std::max((after.x_mean - before.x_mean).cwiseAbs().maxCoeff(),
                                      (after.z_mean - before.z_mean).cwiseAbs().maxCoeff());
    report.threshold_hits = state.counters.total_threshold_hits() - hits0;
    report.skipped_updates = state.counters.total_skipped() - skips0;
    return report;
}

Posterior run(const GlmModel& model, const EpConfig& config) {
    validate_config(config);
    GlmState state = init_state(model, config.init_xi);
    int sweeps = 0;
    double change = 0.0;
    bool converged = false;
    while (sweeps < config.max_sweeps) {
        const SweepReport r = sweep(state, model, config);
        ++sweeps;
        change = r.max_mean_change;
        if (!std::isfinite(change))
            throw Error(ErrorCode::NonIntegrable, "posterior mean became non-finite");
        if (change < config.tol) {
            converged = true;
            break;
        }
    }
    Posterior p = posterior(state, model);
    p.converged = converged;
    p.sweeps = sweeps;
    p.last_change = change;
    return p;
}

}  // namespace glmep
