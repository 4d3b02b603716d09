#include "doctest.h"
#include "glmep/errors.hpp"
#include "glmep/gaussian.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <numbers>

using namespace glmep;

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected glmep::Error");
    return ErrorCode::Io;
}

Matrix diag(std::initializer_list<double> d) {
    Vector v(static_cast<Eigen::Index>(d.size()));
    Eigen::Index i = 0;
    for (double x : d) v(i++) = x;
    return v.asDiagonal();
}

Vector vec(std::initializer_list<double> d) {
    Vector v(static_cast<Eigen::Index>(d.size()));
    Eigen::Index i = 0;
    for (double x : d) v(i++) = x;
    return v;
}

}  // namespace

TEST_CASE("nat_to_moment") {
    auto g = nat_to_moment({0.0, 1.0});
    CHECK(g.m == 0.0);
    CHECK(g.tau == 1.0);

    g = nat_to_moment({2.0, 4.0});
    CHECK(g.m == doctest::Approx(0.5));
    CHECK(g.tau == doctest::Approx(0.25));

    CHECK(code_of([] { nat_to_moment({1.0, -1.0}); }) == ErrorCode::NonIntegrable);
    CHECK(code_of([] { nat_to_moment({1.0, 0.0}); }) == ErrorCode::NonIntegrable);
}

TEST_CASE("moment_to_nat") {
    auto g = moment_to_nat({0.0, 1.0});
    CHECK(g.nu == 0.0);
    CHECK(g.xi == 1.0);

    g = moment_to_nat({0.5, 0.25});
    CHECK(g.nu == doctest::Approx(2.0));
    CHECK(g.xi == doctest::Approx(4.0));

    CHECK(code_of([] { moment_to_nat({1.0, 0.0}); }) == ErrorCode::DegenerateVariance);
}

TEST_CASE("moment/natural round trip") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        const GaussMoment1 g{oracle::uniform(rng, -50, 50), std::exp(oracle::uniform(rng, -8, 8))};
        const GaussMoment1 back = nat_to_moment(moment_to_nat(g));
        CHECK(oracle::rel_err(back.m, g.m) < 1e-12);
        CHECK(oracle::rel_err(back.tau, g.tau) < 1e-12);

        const GaussNat1 n{oracle::uniform(rng, -50, 50), std::exp(oracle::uniform(rng, -8, 8))};
        const GaussNat1 nback = moment_to_nat(nat_to_moment(n));
        CHECK(oracle::rel_err(nback.nu, n.nu) < 1e-12);
        CHECK(oracle::rel_err(nback.xi, n.xi) < 1e-12);
    }
}

TEST_CASE("gaussian_reproduction: scalar cases") {
    const Matrix H = Matrix::Identity(1, 1);
    auto r = gaussian_reproduction(H, {vec({0}), diag({1})}, {vec({0}), diag({1})});
    CHECK(r.product.C(0, 0) == doctest::Approx(0.5));
    CHECK(r.product.m(0) == doctest::Approx(0.0));
    CHECK(r.evidence.C(0, 0) == doctest::Approx(2.0));

    r = gaussian_reproduction(H, {vec({1}), diag({1})}, {vec({0}), diag({1})});
    CHECK(r.product.m(0) == doctest::Approx(0.5));
    CHECK(r.product.C(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("gaussian_reproduction matches the expanded quadratic forms") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index K = 2;
        const Eigen::Index M = trial % 2 == 0 ? 2 : 3;
        const Matrix H = Matrix::NullaryExpr(M, K, [&] { return oracle::uniform(rng, -2, 2); });
        const GaussMomentVec a{oracle::random_vector(rng, M), oracle::random_spd(rng, M)};
        const GaussMomentVec b{oracle::random_vector(rng, K), oracle::random_spd(rng, K)};
        const auto r = gaussian_reproduction(H, a, b);

        const Matrix Ai = a.C.inverse(), Bi = b.C.inverse(), Ci = r.product.C.inverse();
        const Matrix Ei = (H * b.C * H.transpose() + a.C).inverse();
        for (int p = 0; p < 10; ++p) {
            const Vector x = oracle::random_vector(rng, K, 2.0);
            const Vector rx = H * x - a.m, bx = x - b.m, cx = x - r.product.m, ev = a.m - H * b.m;
            const double lhs = -0.5 * rx.dot(Ai * rx) - 0.5 * bx.dot(Bi * bx);
            const double rhs = -0.5 * cx.dot(Ci * cx) - 0.5 * ev.dot(Ei * ev);
            CHECK(std::abs(lhs - rhs) < 1e-10 * (1.0 + std::abs(lhs)));
        }
        CHECK((r.evidence.C - (H * b.C * H.transpose() + a.C)).norm() < 1e-12);
        CHECK((r.product.C - r.product.C.transpose()).cwiseAbs().maxCoeff() <=
              1e-12 * r.product.C.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("gaussian_reproduction rejects singular inputs") {
    const Matrix H = Matrix::Identity(2, 2);
    const GaussMomentVec singular{Vector::Zero(2), Matrix::Zero(2, 2)};
    const GaussMomentVec ok{Vector::Zero(2), Matrix::Identity(2, 2)};
    CHECK(code_of([&] { gaussian_reproduction(H, singular, ok); }) == ErrorCode::SingularMatrix);
    CHECK(code_of([&] { gaussian_reproduction(H, ok, singular); }) == ErrorCode::SingularMatrix);
}

TEST_CASE("marginalize_linear_delta: worked examples") {
    auto r = marginalize_linear_delta(vec({1}), {vec({0}), diag({1})}, {0.0, 1.0});
    CHECK(r.z.m == doctest::Approx(0.0));
    CHECK(r.z.tau == doctest::Approx(0.5));

    r = marginalize_linear_delta(vec({1, 0}), {vec({3, 7}), diag({2, 5})}, {1.0, 1.0});
    CHECK(r.z.tau == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(r.z.m == doctest::Approx(5.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("marginalize_linear_delta matches 1-D quadrature pointwise in z (K = 2)") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix C = oracle::random_spd(rng, 2);
        const Vector m = oracle::random_vector(rng, 2);
        Vector a = oracle::random_vector(rng, 2);
        if (std::abs(a(1)) < 0.3) a(1) = 0.3;
        const GaussMoment1 zg{oracle::uniform(rng, -1, 1), oracle::uniform(rng, 0.3, 3)};
        const auto r = marginalize_linear_delta(a, {m, C}, zg);

        const Matrix Ci = C.inverse();
        for (double z : {-2.0, -0.5, 0.0, 0.7, 1.9}) {
            // Eliminate x_2 = (z - a_1 x_1) / a_2; the delta contributes 1/|a_2|.
            auto integrand = [&](double x1) {
                Vector x(2);
                x << x1, (z - a(0) * x1) / a(1);
                const Vector d = x - m;
                return std::exp(-0.5 * d.dot(Ci * d)) / std::abs(a(1));
            };
            const double sd = std::sqrt(C(0, 0));
            const double x_part = oracle::integrate(integrand, m(0) - 40 * sd - 40, m(0) + 40 * sd + 40);
            const double dz = z - zg.m;
            const double want = x_part * std::exp(-0.5 * dz * dz / zg.tau);
            const double dh = z - r.z.m;
            const double got = std::exp(r.log_scale - 0.5 * dh * dh / r.z.tau);
            CHECK(oracle::rel_err(got, want) < 1e-6);
        }
    }
}

TEST_CASE("marginalize_linear_delta agrees with the Gaussian-reproduction route") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index K = 2 + trial % 4;
        const Matrix C = oracle::random_spd(rng, K);
        const Vector m = oracle::random_vector(rng, K);
        const Vector a = oracle::random_vector(rng, K);
        const GaussMoment1 zg{oracle::uniform(rng, -2, 2), oracle::uniform(rng, 0.1, 4)};
        const auto r = marginalize_linear_delta(a, {m, C}, zg);

        // Push x through a (1-D Gaussian (a^T m, a^T C a)) and reproduce with z.
        const double s = a.dot(C * a);
        const auto rep = gaussian_reproduction(Matrix::Identity(1, 1), {vec({zg.m}), diag({zg.tau})},
                                               {vec({a.dot(m)}), diag({s})});
        CHECK(std::abs(r.z.tau - rep.product.C(0, 0)) < 1e-10 * rep.product.C(0, 0));
        CHECK(std::abs(r.z.m - rep.product.m(0)) < 1e-10 * (1.0 + std::abs(rep.product.m(0))));

        const double d = zg.m - rep.evidence.m(0);
        const double log_scale = 0.5 * ((K - 1) * kLog2Pi + std::log(C.determinant()) - std::log(s)) -
                                 0.5 * d * d / rep.evidence.C(0, 0);
        CHECK(std::abs(r.log_scale - log_scale) < 1e-10 * (1.0 + std::abs(log_scale)));
    }
}

TEST_CASE("marginalize_linear_delta: negative z precision within the integrable range") {
    // tau_z < 0 is allowed as long as 1/(a^T C a) + 1/tau_z > 0.
    const Vector a = vec({1.0, 1.0});
    const GaussMomentVec x{vec({0.0, 0.0}), diag({1.0, 1.0})};  // a^T C a = 2
    const auto r = marginalize_linear_delta(a, x, {0.0, -4.0});  // 1/2 - 1/4 > 0
    CHECK(r.z.tau == doctest::Approx(4.0));
    CHECK(code_of([&] { marginalize_linear_delta(a, x, {0.0, -1.0}); }) == ErrorCode::NonIntegrable);
}

TEST_CASE("marginalize_linear_delta rejects a non-integrable complement") {
    // C^{-1} = diag(1, -1): the direction orthogonal to a = e_1 has negative precision.
    const GaussMomentVec x{vec({0.0, 0.0}), diag({1.0, -1.0})};
    CHECK(code_of([&] { marginalize_linear_delta(vec({1.0, 0.0}), x, {0.0, 1.0}); }) ==
          ErrorCode::NonIntegrable);
    // Indefinite C_x with a PD complement is fine.
    const auto r = marginalize_linear_delta(vec({0.0, 1.0}), {vec({0.0, 0.0}), diag({1.0, -4.0})}, {0.0, 1.0});
    CHECK(r.z.tau == doctest::Approx(1.0 / (-0.25 + 1.0)));
}

TEST_CASE("leave-one-out relation between the f_z belief and its cavity") {
    // a_n^T Cbreve_n nu = tau_n (tau_n - a_n^T Chat a_n)^{-1} a_n^T Chat nu.
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index N = 4, K = 6;
        const Matrix A = Matrix::NullaryExpr(N, K, [&] { return oracle::uniform(rng, -1, 1); });
        Vector tau(N);
        for (Eigen::Index i = 0; i < N; ++i) tau(i) = oracle::uniform(rng, 0.3, 3);
        const Matrix Cx = oracle::random_spd(rng, K);
        const Matrix Chat = (A.transpose() * tau.cwiseInverse().asDiagonal() * A + Cx.inverse()).inverse();
        const Eigen::Index n = trial % N;
        Matrix prec_loo = Cx.inverse();
        for (Eigen::Index i = 0; i < N; ++i)
            if (i != n) prec_loo += A.row(i).transpose() * A.row(i) / tau(i);
        const Matrix Cbreve = prec_loo.inverse();
        const Vector a = A.row(n).transpose();
        const Vector nu = oracle::random_vector(rng, K);
        const double s = a.dot(Chat * a);
        const double lhs = a.dot(Cbreve * nu);
        const double rhs = tau(n) / (tau(n) - s) * a.dot(Chat * nu);
        CHECK(std::abs(lhs - rhs) < 1e-8 * (1.0 + std::abs(lhs)));
    }
}

TEST_CASE("rank_one_pd_threshold") {
    CHECK(rank_one_pd_threshold(Matrix::Identity(3, 3), vec({1, 0, 0})) == doctest::Approx(-1.0));
    CHECK(rank_one_pd_threshold(diag({4}), vec({1})) == doctest::Approx(-0.25));
    CHECK(code_of([] { rank_one_pd_threshold(diag({1, -1}), vec({1, 0})); }) == ErrorCode::NotPD);
}

TEST_CASE("rank-one PD boundary flips exactly at the threshold (eigen oracle)") {
    using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index K = 2 + trial % 5;
        const Matrix C = oracle::random_spd(rng, K);
        const Vector a = oracle::random_vector(rng, K);
        const double thr = rank_one_pd_threshold(C, a);
        const MatL Ci = C.cast<long double>().inverse();
        const auto al = a.cast<long double>();
        auto min_eig = [&](long double t) {
            const MatL M = Ci + t * al * al.transpose();
            Eigen::SelfAdjointEigenSolver<MatL> es(M, Eigen::EigenvaluesOnly);
            return es.eigenvalues().minCoeff();
        };
        const long double rel = 1e-6L * (1.0L + std::abs(static_cast<long double>(thr)));
        CHECK(min_eig(thr + rel) > 0.0L);
        CHECK(min_eig(thr - rel) < 0.0L);
    }
}

TEST_CASE("rank_one_precision_update") {
    std::mt19937_64 rng(1);
    const Matrix C = oracle::random_spd(rng, 4);
    CHECK(rank_one_precision_update(C, Vector::Ones(4), 0.0) == C);

    const Matrix I = Matrix::Identity(4, 4);
    const Matrix U = rank_one_precision_update(I, vec({1, 0, 0, 0}), 1.0);
    CHECK(U(0, 0) == doctest::Approx(0.5));
    CHECK((U.bottomRightCorner(3, 3) - Matrix::Identity(3, 3)).norm() < 1e-15);
    CHECK(U.row(0).tail(3).norm() < 1e-15);
}

TEST_CASE("rank_one_precision_update matches explicit inverse-add-invert") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index K = 2 + trial % 7;
        const Matrix C = oracle::random_spd(rng, K);
        const Vector a = oracle::random_vector(rng, K);
        const double thr = -1.0 / a.dot(C * a);
        const double delta = thr + std::exp(oracle::uniform(rng, -2, 2));
        const Matrix got = rank_one_precision_update(C, a, delta);
        const Matrix want = (C.inverse() + delta * a * a.transpose()).inverse();
        CHECK((got - want).norm() / want.norm() < 1e-10);
        CHECK((got - got.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * got.cwiseAbs().maxCoeff());
        CHECK(is_positive_definite(got));
    }
}

TEST_CASE("rank_one_precision_update is sharp at the threshold") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index K = 2 + trial % 5;
        const Matrix C = oracle::random_spd(rng, K);
        const Vector a = oracle::random_vector(rng, K);
        const double thr = rank_one_pd_threshold(C, a);
        const double eps = 1e-9 * (1.0 + std::abs(thr));
        CHECK_NOTHROW(rank_one_precision_update(C, a, thr + eps));
        CHECK(code_of([&] { rank_one_precision_update(C, a, thr - eps); }) == ErrorCode::ThresholdViolation);
    }
}

TEST_CASE("pd tolerance is scale relative") {
    CHECK(is_positive_definite(1e-6 * Matrix::Identity(3, 3)));
    CHECK(is_positive_definite(1e6 * Matrix::Identity(3, 3)));
    CHECK_FALSE(is_positive_definite(diag({1.0, 1.0, 1e-12})));
    CHECK_FALSE(is_positive_definite(diag({1.0, -1.0})));
}
