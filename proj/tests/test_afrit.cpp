#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "afmpc/afrit.hpp"
#include "afmpc/timeseries.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace afmpc;

namespace {

Vec3 random_phi(std::mt19937_64& rng, Scalar scale = 1.0) {
  std::normal_distribution<Scalar> dist(0.0, scale);
  return Vec3(dist(rng), dist(rng), dist(rng));
}

Scalar max_abs_diff(const Mat3& a, const Mat3& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("regressor filter matches the whole-signal composition") {
  const Scalar tc = 0.04, ts = 0.01;
  const size_t n = 300;
  std::mt19937_64 rng(9);
  std::normal_distribution<Scalar> dist(0.0, 1.0);
  std::vector<Scalar> y(n), u(n);
  for (size_t k = 0; k < n; ++k) {
    y[k] = 3.0 + dist(rng);
    u[k] = 1.0 + 0.5 * dist(rng);
  }

  // batch reference: e = (1 - G_m) y, phi from the textbook accumulator,
  // d = G_m u with u(k) applied over interval k
  const std::vector<Scalar> gm_y = oracle::pl_convolution(tc, ts, y);
  const std::vector<Scalar> d_want = oracle::pl_convolution(tc, ts, u);
  std::vector<Scalar> e(n);
  for (size_t k = 0; k < n; ++k) e[k] = y[k] - gm_y[k];

  RegressorFilter filt(tc, ts);
  CHECK(filt.ts() == ts);
  Scalar cum = 0.0, e_prev = 0.0;
  for (size_t k = 0; k < n; ++k) {
    const RegressorSample s = filt.step(y[k], k == 0 ? 0.0 : u[k - 1]);
    cum += ts * e[k];
    CHECK(s.phi[0] == doctest::Approx(e[k]).epsilon(1e-10));
    CHECK(s.phi[1] == doctest::Approx(cum).epsilon(1e-10));
    CHECK(s.phi[2] == doctest::Approx((e[k] - e_prev) / ts).epsilon(1e-10));
    CHECK(s.d == doctest::Approx(d_want[k]).epsilon(1e-10));
    e_prev = e[k];
  }
}

TEST_CASE("regressor d channel is strictly causal") {
  const Scalar tc = 0.02, ts = 0.01;
  RegressorFilter filt(tc, ts);
  const Scalar b_p = 1.0 - std::exp(-ts / tc);
  RegressorSample s = filt.step(0.0, 0.0);
  CHECK(s.d == 0.0);  // no input happened yet
  s = filt.step(0.0, 4.0);
  CHECK(s.d == doctest::Approx(b_p * 4.0).epsilon(1e-14));
}

TEST_CASE("one directional-forgetting update, frozen values") {
  DfRlsState s = make_df_rls(Vec3::Zero(), 1.0, 1.0, 0.5, 0.0);
  df_rls_update(s, RegressorSample{Vec3(1.0, 0.0, 0.0), 1.0});
  // by hand: Pbar = diag(2,1,1), M = 0.5*e00, R+ = diag(1.5,1,1),
  // P+ = diag(2/3,1,1), theta+ = [2/3,0,0]
  CHECK(s.r_mat(0, 0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(s.r_mat(1, 1) == 1.0);
  CHECK(s.r_mat(0, 1) == 0.0);
  CHECK(s.p_mat(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(s.p_mat(1, 1) == 1.0);
  CHECK(s.theta_hat[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(s.theta_hat[1] == 0.0);
  CHECK(s.theta_hat[2] == 0.0);
}

TEST_CASE("update equals the scalar-loop oracle on a random stream") {
  const Vec3 theta0(0.5, 1.0, 0.01);
  DfRlsState s = make_df_rls(theta0, 1e3, 1e-3, 0.95, 1e-3);
  oracle::RlsArrays a;
  for (int i = 0; i < 3; ++i) {
    a.theta[i] = theta0[i];
    for (int j = 0; j < 3; ++j) {
      a.p[i][j] = s.p_mat(i, j);
      a.r[i][j] = s.r_mat(i, j);
    }
  }

  std::mt19937_64 rng(17);
  std::normal_distribution<Scalar> dist(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Vec3 phi = random_phi(rng);
    const Scalar d = dist(rng);
    df_rls_update(s, RegressorSample{phi, d});
    const Scalar phi_arr[3] = {phi[0], phi[1], phi[2]};
    oracle::rls_update(a, phi_arr, d, 0.95, 1e-3);

    Scalar scale = 1.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        scale = std::max({scale, std::abs(a.p[i][j]), std::abs(a.r[i][j])});
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(s.theta_hat[i] - a.theta[i]) < 1e-9 * scale);
      for (int j = 0; j < 3; ++j) {
        CHECK(std::abs(s.p_mat(i, j) - a.p[i][j]) < 1e-9 * scale);
        CHECK(std::abs(s.r_mat(i, j) - a.r[i][j]) < 1e-9 * scale);
      }
    }
  }
}

TEST_CASE("P and R stay mutually inverse and R stays positive definite") {
  DfRlsState s = make_df_rls(Vec3(1.0, 1.0, 0.1), 1e3, 1e-3, 0.99, 0.0);
  std::mt19937_64 rng(23);
  for (int k = 0; k < 2000; ++k) {
    const Mat3 r_before = s.r_mat;
    const Vec3 phi = random_phi(rng);
    df_rls_update(s, RegressorSample{phi, 0.3});

    const Scalar scale = std::max<Scalar>(1.0, s.r_mat.cwiseAbs().maxCoeff() *
                                                   s.p_mat.cwiseAbs().maxCoeff());
    CHECK(max_abs_diff(s.p_mat * s.r_mat, Mat3::Identity()) < 1e-6 * scale);

    Eigen::SelfAdjointEigenSolver<Mat3> eig;
    eig.computeDirect(s.r_mat);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);

    // directional forgetting never discards more than a (1-mu) share:
    // v' R+ v >= mu v' R v for every direction v
    for (int t = 0; t < 3; ++t) {
      const Vec3 v = random_phi(rng).normalized();
      CHECK(v.dot(s.r_mat * v) >= 0.99 * v.dot(r_before * v) - 1e-12);
    }
  }
}

TEST_CASE("deadzone skips the whole update at or below eps") {
  DfRlsState s = make_df_rls(Vec3(1.0, 2.0, 3.0), 10.0, 0.1, 0.9, 0.5);
  const DfRlsState before = s;
  df_rls_update(s, RegressorSample{Vec3(0.5, 0.0, 0.0), 5.0});  // ||phi|| = 0.5 exactly
  CHECK(s.theta_hat == before.theta_hat);
  CHECK(s.p_mat == before.p_mat);
  CHECK(s.r_mat == before.r_mat);
  df_rls_update(s, RegressorSample{Vec3(0.500001, 0.0, 0.0), 5.0});  // just outside
  CHECK(s.theta_hat != before.theta_hat);
}

TEST_CASE("mu = 1 reduces to information accumulation") {
  DfRlsState s = make_df_rls(Vec3(0.2, 0.1, 0.0), 100.0, 0.01, 1.0, 0.0);
  std::mt19937_64 rng(29);
  for (int k = 0; k < 20; ++k) {
    const Vec3 phi = random_phi(rng);
    const Mat3 r_want = s.r_mat + phi * phi.transpose();
    const Mat3 p = s.p_mat;
    const Mat3 p_want =
        p - (p * phi) * (phi.transpose() * p) / (1.0 + phi.dot(p * phi));
    df_rls_update(s, RegressorSample{phi, 1.0});
    CHECK(max_abs_diff(s.r_mat, r_want) < 1e-12 * r_want.cwiseAbs().maxCoeff());
    CHECK(max_abs_diff(s.p_mat, p_want) < 1e-10 * std::max<Scalar>(1.0, p_want.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("mu = 1 noiseless stream satisfies the information-form invariant") {
  const Vec3 theta_star(1.5, 2.0, 0.05);
  const Vec3 theta0(0.3, 0.4, 0.0);
  DfRlsState s = make_df_rls(theta0, 1e3, 1e-3, 1.0, 0.0);
  const Vec3 invariant0 = s.r_mat * (s.theta_hat - theta_star);
  std::mt19937_64 rng(31);
  for (int k = 0; k < 100; ++k) {
    const Vec3 phi = random_phi(rng);
    df_rls_update(s, RegressorSample{phi, phi.dot(theta_star)});
    const Vec3 inv = s.r_mat * (s.theta_hat - theta_star);
    CHECK((inv - invariant0).cwiseAbs().maxCoeff() < 1e-8);
  }
  // with growing information the parameter error collapses
  CHECK((s.theta_hat - theta_star).norm() < 1e-4);
}

TEST_CASE("mu = 1 estimate agrees with regularized batch least squares") {
  const Vec3 theta0(0.1, 0.2, 0.3);
  const Scalar r0 = 1e-3;
  DfRlsState s = make_df_rls(theta0, 1e3, r0, 1.0, 0.0);
  std::mt19937_64 rng(37);
  std::normal_distribution<Scalar> dn(0.0, 0.2);

  Mat3 gram = r0 * Mat3::Identity();
  Vec3 rhs = r0 * theta0;
  for (int k = 0; k < 500; ++k) {
    const Vec3 phi = random_phi(rng);
    const Scalar d = phi.dot(Vec3(1.2, 0.7, -0.3)) + dn(rng);
    df_rls_update(s, RegressorSample{phi, d});
    gram += phi * phi.transpose();
    rhs += phi * d;
  }
  const Vec3 batch = gram.ldlt().solve(rhs);
  CHECK((s.theta_hat - batch).norm() / batch.norm() < 1e-6);
}

TEST_CASE("make_df_rls validates its arguments") {
  const Vec3 t0 = Vec3::Zero();
  CHECK_NOTHROW(make_df_rls(t0, 1e3, 1e-3, 0.99, 0.0));  // eps = 0 is legal
  CHECK_THROWS_AS(make_df_rls(t0, 1e3, 1e-2, 0.99, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(make_df_rls(t0, -1.0, -1.0, 0.99, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(make_df_rls(t0, 1e3, 1e-3, 0.0, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(make_df_rls(t0, 1e3, 1e-3, 1.1, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(make_df_rls(t0, 1e3, 1e-3, 0.99, -1e-6), std::invalid_argument);
}

TEST_CASE("a sign-flipped information matrix raises the degeneracy error") {
  DfRlsState s = make_df_rls(Vec3::Zero(), 1.0, 1.0, 0.9, 0.0);
  s.r_mat = -Mat3::Identity();
  CHECK_THROWS_WITH_AS(df_rls_update(s, RegressorSample{Vec3(1, 0, 0), 1.0}),
                       "information matrix lost definiteness", std::runtime_error);
}

TEST_CASE("pe_check recognizes excitation windows") {
  std::vector<Vec3> cyc;
  for (int k = 0; k < 12; ++k) cyc.push_back(Vec3::Unit(k % 3));
  CHECK(pe_check(cyc, 3, 1.0));
  CHECK_FALSE(pe_check(cyc, 3, 1.0 + 1e-9));
  CHECK_FALSE(pe_check(cyc, 2, 0.5));  // two basis vectors never span R^3

  std::vector<Vec3> flat(10, Vec3::Unit(1));
  CHECK_FALSE(pe_check(flat, 3, 1e-9));

  CHECK_THROWS_AS(pe_check(cyc, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(pe_check(std::vector<Vec3>(3, Vec3::Unit(0)), 3, 1.0),
                  std::invalid_argument);
}

TEST_CASE("pe_check agrees with an independent eigensolver scan") {
  std::mt19937_64 rng(41);
  std::vector<Vec3> phis;
  for (int k = 0; k < 40; ++k) phis.push_back(random_phi(rng));
  for (const Scalar alpha0 : {1e-3, 1e-1, 1.0, 10.0}) {
    for (const int delta : {3, 5, 9}) {
      bool want = true;
      for (size_t start = 0; start + delta <= phis.size(); ++start) {
        Mat3 gram = Mat3::Zero();
        for (int k = 0; k < delta; ++k)
          gram += phis[start + k] * phis[start + k].transpose();
        Eigen::SelfAdjointEigenSolver<Mat3> eig(gram);  // iterative variant
        if (eig.eigenvalues().minCoeff() < alpha0) want = false;
      }
      CHECK(pe_check(phis, delta, alpha0) == want);
    }
  }
}
