#pragma once

// Exact algebra on (possibly unnormalized) Gaussians.
//
// Convention: an unnormalized Gaussian carries the usual one-half factor,
//   Nbar(x | m, C) = exp(-1/2 (x - m)^T C^{-1} (x - m)),
// so that precision is exactly the inverse variance. Natural parameters are
// (nu, Xi) = (C^{-1} m, C^{-1}); a message in natural form may have Xi <= 0.

#include <Eigen/Dense>

namespace glmep {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Scalar Gaussian in natural parameters. xi may be zero or negative.
struct GaussNat1 {
    double nu = 0.0;
    double xi = 0.0;

    bool integrable() const noexcept { return xi > 0.0; }
};

/// Scalar Gaussian in moment parameters.
struct GaussMoment1 {
    double m = 0.0;
    double tau = 1.0;
};

struct GaussNatVec {
    Vector nu;
    Matrix Xi;
};

struct GaussMomentVec {
    Vector m;
    Matrix C;
};

GaussMoment1 nat_to_moment(GaussNat1 g);
GaussNat1 moment_to_nat(GaussMoment1 g);

/// Result of Nbar(Hx | a, A) * Nbar(x | b, B) = Nbar(x | c, C) * Nbar(a | Hb, HBH^T + A).
struct Reproduction {
    GaussMomentVec product;   ///< (c, C) over x
    GaussMomentVec evidence;  ///< (Hb, HBH^T + A), evaluated at a
};

/// Gaussian reproduction for a linear map H (rows = dim of the first factor).
/// Throws SingularMatrix when A, B or the combined precision cannot be inverted.
Reproduction gaussian_reproduction(const Matrix& H, const GaussMomentVec& a_gauss,
                                   const GaussMomentVec& b_gauss);

/// Output of integrating x out of Nbar(x|m_x,C_x) Nbar(z|m_z,tau_z) delta(z - a^T x).
struct DeltaMarginal {
    GaussMoment1 z;    ///< the z-dependent factor Nbar(z | m, tau)
    double log_scale;  ///< log of the z-independent prefactor
};

/// Integrates out x under a linear delta constraint z = a^T x.
///
/// The result is Nbar(z | m_hat, tau_hat) * scale with
///   tau_hat = [(a^T C_x a)^{-1} + tau_z^{-1}]^{-1},
///   m_hat   = tau_hat [(a^T C_x a)^{-1} a^T m_x + tau_z^{-1} m_z],
///   scale   = sqrt((2 pi)^{K-1} det(C_x) / (a^T C_x a)) Nbar(0 | m_z - a^T m_x, a^T C_x a + tau_z).
///
/// C_x need not be positive definite, but its restriction to the orthogonal
/// complement of a (in precision form) must be, and tau_hat must be positive.
/// Throws NonIntegrable otherwise.
DeltaMarginal marginalize_linear_delta(const Vector& a, const GaussMomentVec& x_gauss,
                                       GaussMoment1 z_gauss);

/// Returns -1/(a^T C a). (C^{-1} + a t a^T)^{-1} is PD iff t strictly exceeds it.
/// Throws NotPD if C is not positive definite within pd_tolerance(C).
double rank_one_pd_threshold(const Matrix& C, const Vector& a);

/// (C^{-1} + a delta_xi a^T)^{-1} by Sherman-Morrison. C is assumed SPD.
/// Throws ThresholdViolation unless delta_xi > -1/(a^T C a).
Matrix rank_one_precision_update(const Matrix& C, const Vector& a, double delta_xi);

/// Smallest-eigenvalue tolerance for PD checks: 1e-10 * trace(C) / K.
double pd_tolerance(const Matrix& C);

/// True iff the smallest eigenvalue of C exceeds pd_tolerance(C).
bool is_positive_definite(const Matrix& C);

/// (M + M^T) / 2.
Matrix symmetrize(const Matrix& M);

/// log of the normalized scalar density N(x | m, tau); tau > 0.
double log_normal_pdf(double x, double m, double tau);

}  // namespace glmep
