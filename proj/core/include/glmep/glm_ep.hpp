#pragma once

// Expectation propagation on the GLM factor graph
//
//   p(y, z, x) = prod_n f_y_n(z_n) * delta(z - A x) * prod_k f_x_k(x_k)
//
// with scalar Gaussian messages in natural form. Three schemes share one
// schedule and differ only in how a projected precision is bounded:
//
//   ACEP  projected precisions are clipped from below by a threshold that
//         keeps the destination belief integrable;
//   EPC   projections are unconstrained; any update whose source belief is
//         not integrable is skipped;
//   CLIP  every projected precision is floored at +epsilon (baseline).

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "glmep/gaussian.hpp"
#include "glmep/gmm.hpp"

namespace glmep {

enum class Mode { ACEP, EPC, CLIP };

std::string_view to_string(Mode mode) noexcept;

struct EpConfig {
    Mode mode = Mode::ACEP;
    double epsilon = 1e-8;
    double init_xi = 1.0;
    int max_sweeps = 50;
    double tol = 1e-8;
    /// 1.0 disables damping. Applied to projected (non-copy) messages only.
    double damping = 1.0;
    /// true: z->f_z and x->f_z are copies of f_y->z and f_x->x (update chains
    /// f_z->z, z->f_y, f_y->z, z->f_z and f_z->x, x->f_x, f_x->x, x->f_z).
    /// false: they are projected with the rank-one PD threshold instead.
    bool ordered_copies = true;
    /// Check the integrability invariants after every single update.
    bool validate = false;
};

/// Throws InvalidArgument on a malformed config.
void validate_config(const EpConfig& config);

struct GlmModel {
    Matrix A;                          ///< N x K
    std::vector<GmmFactor> priors;     ///< p(x_k), K entries
    std::vector<GmmFactor> likelihoods;///< p(y_n | z_n) as a factor in z_n, N entries
    Vector y;                          ///< observations (already folded into likelihoods)

    std::size_t num_obs() const noexcept { return static_cast<std::size_t>(A.rows()); }
    std::size_t num_vars() const noexcept { return static_cast<std::size_t>(A.cols()); }

    /// Throws InvalidArgument on inconsistent dimensions.
    void check() const;
};

/// Message families of the GLM graph, used to index the diagnostic counters.
enum class Msg : std::size_t { FyToZ, ZToFy, FzToZ, ZToFz, FxToX, XToFx, FzToX, XToFz };
inline constexpr std::size_t kNumMsg = 8;

std::string_view to_string(Msg msg) noexcept;

struct Counters {
    std::array<std::size_t, kNumMsg> threshold_hits{};
    std::array<std::size_t, kNumMsg> skipped{};
    std::size_t invariant_checks = 0;
    std::size_t invariant_violations = 0;

    std::size_t hits(Msg m) const noexcept { return threshold_hits[static_cast<std::size_t>(m)]; }
    std::size_t skips(Msg m) const noexcept { return skipped[static_cast<std::size_t>(m)]; }
    std::size_t total_threshold_hits() const noexcept;
    std::size_t total_skipped() const noexcept;
    /// Hits on the four messages incident to the delta factor f_z.
    std::size_t fz_adjacent_threshold_hits() const noexcept;

    Counters& operator+=(const Counters& other) noexcept;
};

struct GlmState {
    // per observation n
    std::vector<GaussNat1> fy_to_z, z_to_fy, fz_to_z, z_to_fz;
    // per unknown k
    std::vector<GaussNat1> fx_to_x, x_to_fx, fz_to_x, x_to_fz;

    // Belief at f_z marginalized over z: Nbar(x | m, C) with
    // C^{-1} = A^T diag(xi_{z->f_z}) A + diag(xi_{x->f_z}) and C^{-1} m = h.
    Matrix C;
    Vector h;
    Vector m;

    Counters counters;
};

/// All messages (0, init_xi); cached f_z belief from a full solve.
/// Throws InvalidArgument for init_xi <= 0 and SingularMatrix if the solve fails.
GlmState init_state(const GlmModel& model, double init_xi);

/// Rebuilds C, h, m from the current z->f_z and x->f_z messages.
/// Throws NotPD if the f_z belief is not integrable.
void resolve_fz_belief(GlmState& state, const GlmModel& model);

/// Marginal of the f_z belief on x_k: (m_k, C_kk).
GaussMoment1 belief_fz_x_marginal(const GlmState& state, std::size_t k);

/// Marginal of the f_z belief on z_n: (a_n^T m, a_n^T C a_n).
GaussMoment1 belief_fz_z_marginal(const GlmState& state, const GlmModel& model, std::size_t n);

/// Variable beliefs as products of the two incident messages.
GaussNat1 belief_z(const GlmState& state, std::size_t n);
GaussNat1 belief_x(const GlmState& state, std::size_t k);

void update_fy_to_z(GlmState& state, const GlmModel& model, std::size_t n, const EpConfig& config);
void update_z_to_fy(GlmState& state, const GlmModel& model, std::size_t n, const EpConfig& config);
void update_fz_to_z(GlmState& state, const GlmModel& model, std::size_t n, const EpConfig& config);
void update_z_to_fz(GlmState& state, const GlmModel& model, std::size_t n, const EpConfig& config);
void update_fx_to_x(GlmState& state, const GlmModel& model, std::size_t k, const EpConfig& config);
void update_x_to_fx(GlmState& state, const GlmModel& model, std::size_t k, const EpConfig& config);
void update_fz_to_x(GlmState& state, const GlmModel& model, std::size_t k, const EpConfig& config);
void update_x_to_fz(GlmState& state, const GlmModel& model, std::size_t k, const EpConfig& config);

/// Posterior summaries taken from the variable beliefs. A belief that is not
/// integrable (possible transiently under EPC) is replaced by the f_z marginal.
struct Posterior {
    Vector x_mean, x_var;
    Vector z_mean, z_var;
    bool converged = false;
    int sweeps = 0;
    double last_change = 0.0;
    Counters counters;
};

Posterior posterior(const GlmState& state, const GlmModel& model);

struct SweepReport {
    double max_mean_change = 0.0;
    std::size_t threshold_hits = 0;
    std::size_t skipped_updates = 0;
};

/// One pass of the z-chains for every n followed by the x-chains for every k,
/// then a full re-solve of the cached f_z belief.
SweepReport sweep(GlmState& state, const GlmModel& model, const EpConfig& config);

/// Sweeps until the largest posterior-mean change drops below config.tol or
/// config.max_sweeps is reached. Non-convergence is reported, not thrown.
Posterior run(const GlmModel& model, const EpConfig& config);

/// Integrability checks used by the validation mode; returns the number of
/// violated conditions in the current state.
std::size_t count_invariant_violations(const GlmState& state, const GlmModel& model, Mode mode);

}  // namespace glmep
