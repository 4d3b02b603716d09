#include "glmep/gaussian.hpp"

#include <cmath>
#include <string>

#include "glmep/errors.hpp"

namespace glmep {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Matrix checked_inverse(const Matrix& M, const char* what) {
    if (M.rows() != M.cols()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is not square");
    Eigen::FullPivLU<Matrix> lu(M);
    if (!lu.isInvertible()) throw Error(ErrorCode::SingularMatrix, std::string(what) + " is singular");
    return lu.inverse();
}

}  // namespace

Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

double log_normal_pdf(double x, double m, double tau) {
    const double d = x - m;
    return -0.5 * (kLog2Pi + std::log(tau) + d * d / tau);
}

GaussMoment1 nat_to_moment(GaussNat1 g) {
    if (!(g.xi > 0.0)) throw Error(ErrorCode::NonIntegrable, "precision " + std::to_string(g.xi) + " <= 0");
    return {g.nu / g.xi, 1.0 / g.xi};
}

GaussNat1 moment_to_nat(GaussMoment1 g) {
    if (g.tau == 0.0) throw Error(ErrorCode::DegenerateVariance, "variance is zero");
    return {g.m / g.tau, 1.0 / g.tau};
}

Reproduction gaussian_reproduction(const Matrix& H, const GaussMomentVec& a_gauss,
                                   const GaussMomentVec& b_gauss) {
    const auto rows = H.rows();
    const auto cols = H.cols();
    if (a_gauss.m.size() != rows || a_gauss.C.rows() != rows || b_gauss.m.size() != cols ||
        b_gauss.C.rows() != cols)
        throw Error(ErrorCode::InvalidArgument, "gaussian_reproduction: dimension mismatch");

    const Matrix A_inv = checked_inverse(a_gauss.C, "A");
    const Matrix B_inv = checked_inverse(b_gauss.C, "B");
    const Matrix precision = symmetrize(H.transpose() * A_inv * H + B_inv);
    Matrix C = symmetrize(checked_inverse(precision, "H^T A^-1 H + B^-1"));
    Vector c = C * (H.transpose() * (A_inv * a_gauss.m) + B_inv * b_gauss.m);

    Reproduction out;
    out.product = {std::move(c), std::move(C)};
    out.evidence = {H * b_gauss.m, symmetrize(H * b_gauss.C * H.transpose() + a_gauss.C)};
    return out;
}

DeltaMarginal marginalize_linear_delta(const Vector& a, const GaussMomentVec& x_gauss,
                                       GaussMoment1 z_gauss) {
    const auto K = a.size();
    if (K == 0 || x_gauss.m.size() != K || x_gauss.C.rows() != K || x_gauss.C.cols() != K)
        throw Error(ErrorCode::InvalidArgument, "marginalize_linear_delta: dimension mismatch");
    if (z_gauss.tau == 0.0) throw Error(ErrorCode::DegenerateVariance, "tau_z is zero");

    const Matrix& C = x_gauss.C;
    const double s = a.dot(C * a);
    if (s == 0.0) throw Error(ErrorCode::NonIntegrable, "a^T C_x a is zero");

    // The x-integral along the directions orthogonal to a is Gaussian with
    // precision U^T C^{-1} U; it must be PD for the integral to exist.
    Eigen::FullPivLU<Matrix> lu(C);
    if (!lu.isInvertible()) throw Error(ErrorCode::SingularMatrix, "C_x is singular");
    if (K > 1) {
        Eigen::HouseholderQR<Matrix> qr(a);
        const Matrix Q = qr.householderQ();
        const Matrix U = Q.rightCols(K - 1);
        const Matrix reduced = symmetrize(U.transpose() * lu.inverse() * U);
        Eigen::LLT<Matrix> llt(reduced);
        if (llt.info() != Eigen::Success)
            throw Error(ErrorCode::NonIntegrable, "C_x restricted to the complement of a is not PD");
    }

    const double prec = 1.0 / s + 1.0 / z_gauss.tau;
    if (!(prec > 0.0)) throw Error(ErrorCode::NonIntegrable, "combined z precision <= 0");

    const double tau_hat = 1.0 / prec;
    const double am = a.dot(x_gauss.m);
    const double m_hat = tau_hat * (am / s + z_gauss.m / z_gauss.tau);

    // det(C_x)/s > 0 follows from the reduced-form check above.
    const double log_abs_det = lu.matrixLU().diagonal().cwiseAbs().array().log().sum();
    const double evid_var = s + z_gauss.tau;
    const double d = z_gauss.m - am;
    const double log_scale =
        0.5 * (static_cast<double>(K - 1) * kLog2Pi + log_abs_det - std::log(std::abs(s))) -
        0.5 * d * d / evid_var;

    return {{m_hat, tau_hat}, log_scale};
}

double pd_tolerance(const Matrix& C) {
    return 1e-10 * std::abs(C.trace()) / static_cast<double>(C.rows());
}

bool is_positive_definite(const Matrix& C) {
    if (C.rows() == 0 || C.rows() != C.cols()) return false;
    // lambda_min(C) > tol  <=>  C - tol I admits a Cholesky factor.
    const double tol = pd_tolerance(C);
    if (!(tol > 0.0)) return false;
    Matrix shifted = symmetrize(C);
    shifted.diagonal().array() -= tol;
    Eigen::LLT<Matrix> llt(shifted);
    return llt.info() == Eigen::Success;
}

double rank_one_pd_threshold(const Matrix& C, const Vector& a) {
    if (C.rows() != a.size() || C.cols() != a.size())
        throw Error(ErrorCode::InvalidArgument, "rank_one_pd_threshold: dimension mismatch");
    if (!is_positive_definite(C)) throw Error(ErrorCode::NotPD, "C is not positive definite");
    return -1.0 / a.dot(C * a);
}

Matrix rank_one_precision_update(const Matrix& C, const Vector& a, double delta_xi) {
    if (C.rows() != a.size() || C.cols() != a.size())
        throw Error(ErrorCode::InvalidArgument, "rank_one_precision_update: dimension mismatch");
    if (delta_xi == 0.0) return C;
    const Vector Ca = C * a;
    const double s = a.dot(Ca);
    if (!(delta_xi > -1.0 / s))
        throw Error(ErrorCode::ThresholdViolation,
                    "delta_xi " + std::to_string(delta_xi) + " <= " + std::to_string(-1.0 / s));
    Matrix out = C - (delta_xi / (1.0 + delta_xi * s)) * (Ca * Ca.transpose());
    return symmetrize(out);
}

}  // namespace glmep
