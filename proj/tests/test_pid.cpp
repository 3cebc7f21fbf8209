#include <cmath>
#include <random>
#include <vector>

#include "afmpc/pid.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace afmpc;

TEST_CASE("pid_step hand values") {
  const PidGains g{2.0, 0.5, 0.1};
  PidState s;
  const Scalar ts = 0.1;
  // e = 1: u = 2*1 + 0.5*0.1*1 + 0.1*(1-0)/0.1 = 2 + 0.05 + 1 = 3.05
  CHECK(pid_step(g, s, 1.0, ts) == doctest::Approx(3.05).epsilon(1e-15));
  // e = 1 again: integ = 0.1, derivative 0 -> u = 2 + 0.1 + 0 = 2.1
  CHECK(pid_step(g, s, 1.0, ts) == doctest::Approx(2.1).epsilon(1e-15));
  // e = -1: integ = 0.05, deriv = -2/0.1 = -20*0.1 = -2 -> u = -2 + 0.05 - 2
  CHECK(pid_step(g, s, -1.0, ts) == doctest::Approx(-3.95).epsilon(1e-15));
}

TEST_CASE("pid_step equals textbook sum oracle on random errors") {
  std::mt19937_64 rng(21);
  std::normal_distribution<Scalar> dist(0.0, 2.0);
  std::vector<Scalar> e(300);
  for (auto& v : e) v = dist(rng);
  const PidGains g{1.3, 0.7, 0.02};
  const Scalar ts = 0.01;
  const std::vector<Scalar> want = oracle::pid_sequence(g.kp, g.ki, g.kd, e, ts);
  PidState s;
  for (size_t k = 0; k < e.size(); ++k) {
    const Scalar u = pid_step(g, s, e[k], ts);
    CHECK(u == doctest::Approx(want[k]).epsilon(1e-10));
  }
}

TEST_CASE("controller difference equation: Ts(1-z^-1)u = (n0 + n1 z^-1 + n2 z^-2)e") {
  std::mt19937_64 rng(22);
  std::normal_distribution<Scalar> dist(0.0, 1.0);
  const PidGains g{0.8, 2.0, 0.015};
  const Scalar ts = 0.002;
  const Scalar n0 = g.kp * ts + g.ki * ts * ts + g.kd;
  const Scalar n1 = -(g.kp * ts + 2.0 * g.kd);
  const Scalar n2 = g.kd;

  std::vector<Scalar> e(200), u(200);
  for (auto& v : e) v = dist(rng);
  PidState s;
  for (size_t k = 0; k < e.size(); ++k) u[k] = pid_step(g, s, e[k], ts);
  for (size_t k = 2; k < e.size(); ++k) {
    const Scalar lhs = ts * (u[k] - u[k - 1]);
    const Scalar rhs = n0 * e[k] + n1 * e[k - 1] + n2 * e[k - 2];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("pid_regressor reproduces the controller output as theta^T phi") {
  std::mt19937_64 rng(23);
  std::normal_distribution<Scalar> dist(0.0, 1.5);
  const PidGains g{0.4, 1.1, 0.008};
  const Vec3 theta = g.vec();
  const Scalar ts = 0.005;
  PidState s;
  Scalar integ_of_e = 0.0, e_prev = 0.0;
  for (int k = 0; k < 250; ++k) {
    const Scalar e = dist(rng);
    const Scalar u = pid_step(g, s, e, ts);
    // phi uses the integral of e up to (but excluding) this sample
    const Vec3 phi = pid_regressor(e, e_prev, integ_of_e, ts);
    CHECK(u == doctest::Approx(theta.dot(phi)).epsilon(1e-10));
    integ_of_e += ts * e;
    e_prev = e;
  }
}

TEST_CASE("pid gains vector round trip") {
  const PidGains g{0.25, -1.5, 3e-3};
  const PidGains back = PidGains::from_vec(g.vec());
  CHECK(back.kp == g.kp);
  CHECK(back.ki == g.ki);
  CHECK(back.kd == g.kd);
}
