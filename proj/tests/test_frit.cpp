#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "afmpc/frit.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace afmpc;

namespace {

TimeSeries to_series(const std::vector<Scalar>& v, Scalar ts) {
  VecX x(static_cast<Eigen::Index>(v.size()));
  for (size_t k = 0; k < v.size(); ++k) x[static_cast<Eigen::Index>(k)] = v[k];
  return make_series(std::move(x), ts);
}

std::vector<Scalar> random_walk(size_t n, unsigned seed, Scalar scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<Scalar> dist(0.0, scale);
  std::vector<Scalar> v(n);
  Scalar acc = 0.0;
  for (auto& x : v) {
    acc += dist(rng);
    x = acc;
  }
  return v;
}

// Discrete plant whose closed loop under C(gains) is exactly the
// first-order model with time constant tc:
//   y(k) = (b_p*Ts*u(k-1) - n1*y(k-1) - n2*y(k-2)) / n0.
std::vector<Scalar> matched_plant_response(const PidGains& g, Scalar tc, Scalar ts,
                                           const std::vector<Scalar>& u) {
  Scalar n0, n1, n2;
  controller_coeffs(g, ts, n0, n1, n2);
  REQUIRE(oracle::quad_stable(n1 / n0, n2 / n0));
  const Scalar b_p = 1.0 - std::exp(-ts / tc);
  std::vector<Scalar> y(u.size(), 0.0);
  for (size_t k = 1; k < u.size(); ++k) {
    const Scalar y1 = y[k - 1];
    const Scalar y2 = k >= 2 ? y[k - 2] : 0.0;
    y[k] = (b_p * ts * u[k - 1] - n1 * y1 - n2 * y2) / n0;
  }
  return y;
}

}  // namespace

TEST_CASE("controller_coeffs hand values and slope identity") {
  const PidGains g{2.0, 0.5, 0.1};
  Scalar n0, n1, n2;
  controller_coeffs(g, 0.1, n0, n1, n2);
  CHECK(n0 == doctest::Approx(0.305).epsilon(1e-15));
  CHECK(n1 == doctest::Approx(-0.4).epsilon(1e-15));
  CHECK(n2 == doctest::Approx(0.1).epsilon(1e-15));
  // n0/Ts is the instantaneous error-to-input slope of the positional PID
  CHECK(n0 / 0.1 == doctest::Approx(2.0 + 0.5 * 0.1 + 0.1 / 0.1).epsilon(1e-14));
}

TEST_CASE("degenerate_controller flags a vanishing leading coefficient") {
  CHECK_FALSE(degenerate_controller(PidGains{2.0, 0.5, 0.1}, 0.1));
  // kd = -(kp*Ts + ki*Ts^2) zeroes n0
  CHECK(degenerate_controller(PidGains{1.0, 0.0, -0.1}, 0.1));
  CHECK(degenerate_controller(PidGains{0.0, 0.0, 0.0}, 0.1));
}

TEST_CASE("fictitious_reference matches the sample-wise inversion oracle") {
  const Scalar ts = 0.01;
  const std::vector<Scalar> u0 = random_walk(300, 11, 0.3);
  const std::vector<Scalar> y0 = random_walk(300, 12, 0.2);
  const PriorData prior = make_prior(to_series(u0, ts), to_series(y0, ts));

  const PidGains g{1.4, 3.0, 0.02};
  const TimeSeries rt = fictitious_reference(g, prior);
  const std::vector<Scalar> want =
      oracle::fictitious_reference(g.kp, g.ki, g.kd, u0, y0, ts);
  REQUIRE(rt.size() == static_cast<Eigen::Index>(want.size()));
  for (size_t k = 0; k < want.size(); ++k)
    CHECK(rt.values[static_cast<Eigen::Index>(k)] ==
          doctest::Approx(want[k]).epsilon(1e-10));
}

TEST_CASE("fictitious reference of genuine closed-loop data returns r") {
  const Scalar ts = 0.01;
  const PidGains g{0.9, 4.0, 0.015};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<Scalar> lvl(5.0, 30.0);

  const size_t n = 400;
  std::vector<Scalar> r(n), y0 = random_walk(n, 21, 0.15);
  for (size_t k = 0; k < n; ++k) r[k] = (k / 80 % 2) ? lvl(rng) : 20.0;

  // u0 really produced by C(g) acting on e = r - y0
  std::vector<Scalar> e(n);
  for (size_t k = 0; k < n; ++k) e[k] = r[k] - y0[k];
  const std::vector<Scalar> u0 = oracle::pid_sequence(g.kp, g.ki, g.kd, e, ts);

  const PriorData prior = make_prior(to_series(u0, ts), to_series(y0, ts));
  const TimeSeries rt = fictitious_reference(g, prior);
  for (size_t k = 0; k < n; ++k)
    CHECK(std::abs(rt.values[static_cast<Eigen::Index>(k)] - r[k]) < 1e-9);
}

TEST_CASE("fictitious_reference rejects a degenerate controller") {
  const Scalar ts = 0.1;
  const PriorData prior =
      make_prior(to_series(random_walk(50, 3, 0.1), ts), to_series(random_walk(50, 4, 0.1), ts));
  CHECK_THROWS_AS(fictitious_reference(PidGains{1.0, 0.0, -0.1}, prior), std::domain_error);
}

TEST_CASE("controller_filter equals the textbook PID sum") {
  const Scalar ts = 0.02;
  const std::vector<Scalar> e = random_walk(200, 31, 0.4);
  const PidGains g{1.1, 2.5, 0.03};
  const TimeSeries u = controller_filter(g, to_series(e, ts));
  const std::vector<Scalar> want = oracle::pid_sequence(g.kp, g.ki, g.kd, e, ts);
  for (size_t k = 0; k < e.size(); ++k)
    CHECK(u.values[static_cast<Eigen::Index>(k)] ==
          doctest::Approx(want[k]).epsilon(1e-10));
}

TEST_CASE("make_prior validates its inputs") {
  const Scalar ts = 0.01;
  CHECK_THROWS_AS(make_prior(to_series(std::vector<Scalar>(5, 1.0), ts),
                             to_series(std::vector<Scalar>(5, 1.0), ts)),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_prior(to_series(std::vector<Scalar>(20, 1.0), ts),
                             to_series(std::vector<Scalar>(21, 1.0), ts)),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_prior(to_series(std::vector<Scalar>(20, 1.0), ts),
                             to_series(std::vector<Scalar>(20, 1.0), 0.02)),
                  std::invalid_argument);
  std::vector<Scalar> bad(20, 1.0);
  bad[7] = std::nan("");
  CHECK_THROWS_AS(make_prior(to_series(bad, ts), to_series(std::vector<Scalar>(20, 1.0), ts)),
                  std::invalid_argument);
}

TEST_CASE("efrit_objective at lambda = 0 equals the plain FRIT oracle") {
  const Scalar ts = 0.01;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<Scalar> ukp(0.2, 3.0), uki(0.1, 8.0), ukd(0.0, 0.05),
      utc(0.005, 0.2);
  for (int trial = 0; trial < 8; ++trial) {
    const std::vector<Scalar> u0 = random_walk(250, 100 + trial, 0.3);
    const std::vector<Scalar> y0 = random_walk(250, 200 + trial, 0.25);
    const PriorData prior = make_prior(to_series(u0, ts), to_series(y0, ts));
    const ExtendedGains th{PidGains{ukp(rng), uki(rng), ukd(rng)}, utc(rng)};
    const EfritValue v = efrit_objective(th, prior, 0.0);
    const Scalar want =
        oracle::j_frit(th.gains.kp, th.gains.ki, th.gains.kd, th.tc, u0, y0, ts);
    CHECK(v.j == doctest::Approx(want).epsilon(1e-12));
    CHECK(v.j == v.j_tracking);
    CHECK(v.j_input >= 0.0);
  }
}

TEST_CASE("cost decomposes as tracking + lambda * input") {
  const Scalar ts = 0.01;
  const PriorData prior = make_prior(to_series(random_walk(200, 41, 0.3), ts),
                                     to_series(random_walk(200, 42, 0.25), ts));
  const ExtendedGains th{PidGains{1.0, 2.0, 0.01}, 0.05};
  const EfritValue a = efrit_objective(th, prior, 0.0);
  const EfritValue b = efrit_objective(th, prior, 2.5);
  CHECK(b.j_tracking == a.j_tracking);  // lambda touches only the weighting
  CHECK(b.j_input == a.j_input);
  CHECK(b.j == doctest::Approx(b.j_tracking + 2.5 * b.j_input).epsilon(1e-14));
  CHECK_THROWS_AS(efrit_objective(th, prior, -1.0), std::invalid_argument);
}

TEST_CASE("objective is zero on data from the matched synthetic plant") {
  const Scalar ts = 0.01, tc = 0.05;
  const PidGains star{1.2, 0.9, 0.02};
  std::vector<Scalar> u0 = random_walk(600, 55, 0.2);
  for (auto& v : u0) v += 2.0;  // keep the record away from zero
  const std::vector<Scalar> y0 = matched_plant_response(star, tc, ts, u0);
  const PriorData prior = make_prior(to_series(u0, ts), to_series(y0, ts));
  const EfritValue v = efrit_objective({star, tc}, prior, 0.0);
  CHECK(v.j < 1e-20);
}

TEST_CASE("tune from a matching start stays at the optimum") {
  const Scalar ts = 0.01, tc = 0.05;
  const PidGains star{1.2, 0.9, 0.02};
  const std::vector<Scalar> u0 = random_walk(600, 56, 0.2);
  const std::vector<Scalar> y0 = matched_plant_response(star, tc, ts, u0);
  const PriorData prior = make_prior(to_series(u0, ts), to_series(y0, ts));
  const TuneReport rep = tune({star, tc}, prior, 0.0);
  CHECK(rep.j_value < 1e-10);
  CHECK(rep.converged);
}

TEST_CASE("tune recovers a perfect match from a detuned start") {
  const Scalar ts = 0.01, tc = 0.05;
  const PidGains star{1.2, 0.9, 0.02};
  const std::vector<Scalar> u0 = random_walk(600, 57, 0.2);
  const std::vector<Scalar> y0 = matched_plant_response(star, tc, ts, u0);
  const PriorData prior = make_prior(to_series(u0, ts), to_series(y0, ts));

  TuneOptions opts;
  opts.max_iters = 20000;
  opts.tol = 1e-12;
  opts.restarts = 2;

  SUBCASE("joint search over gains and tc") {
    const ExtendedGains th0{PidGains{0.7 * star.kp, 0.7 * star.ki, 0.7 * star.kd}, 0.8 * tc};
    const Scalar j0 = efrit_objective(th0, prior, 0.0).j;
    const TuneReport rep = tune(th0, prior, 0.0, opts);
    CHECK(rep.j_value < 1e-8 * std::max<Scalar>(1.0, j0));
    CHECK(rep.iterations > 0);
  }
  SUBCASE("gains-only search with tc frozen at the truth") {
    TuneOptions fixed = opts;
    fixed.optimize_tc = false;
    const ExtendedGains th0{PidGains{0.7 * star.kp, 0.7 * star.ki, 0.7 * star.kd}, tc};
    const TuneReport rep = tune(th0, prior, 0.0, fixed);
    CHECK(rep.j_value < 1e-8);
    CHECK(rep.theta_star.tc == tc);
    CHECK(rep.theta_star.gains.kp == doctest::Approx(star.kp).epsilon(0.05));
    CHECK(rep.theta_star.gains.ki == doctest::Approx(star.ki).epsilon(0.05));
  }
}

TEST_CASE("tune rejects a start with a non-finite objective") {
  const Scalar ts = 0.01;
  const PriorData prior = make_prior(to_series(random_walk(50, 61, 0.1), ts),
                                     to_series(random_walk(50, 62, 0.1), ts));
  // degenerate controller at theta0 -> objective infinite at the start
  CHECK_THROWS_AS(tune({PidGains{1.0, 0.0, -0.01}, 0.05}, prior, 0.0), std::domain_error);
}
