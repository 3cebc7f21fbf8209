#include "afmpc/frit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace afmpc {

PriorData make_prior(TimeSeries u0, TimeSeries y0) {
  if (u0.size() != y0.size()) throw std::invalid_argument("prior data length mismatch");
  if (u0.size() < 10) throw std::invalid_argument("prior data needs >= 10 samples");
  if (std::abs(u0.ts - y0.ts) > 1e-12 * std::max<Scalar>(1.0, u0.ts))
    throw std::invalid_argument("prior data sampling mismatch");
  if (!u0.values.allFinite() || !y0.values.allFinite())
    throw std::invalid_argument("prior data contains non-finite values");
  return PriorData{std::move(u0), std::move(y0)};
}

void controller_coeffs(const PidGains& g, Scalar ts, Scalar& n0, Scalar& n1, Scalar& n2) {
  n0 = g.kp * ts + g.ki * ts * ts + g.kd;
  n1 = -(g.kp * ts + 2.0 * g.kd);
  n2 = g.kd;
}

bool degenerate_controller(const PidGains& g, Scalar ts) {
  const Scalar scale =
      std::abs(g.kp) * ts + std::abs(g.ki) * ts * ts + std::abs(g.kd);
  if (scale == 0.0) return true;
  Scalar n0, n1, n2;
  controller_coeffs(g, ts, n0, n1, n2);
  return std::abs(n0) < 1e-10 * scale;
}

TimeSeries fictitious_reference(const PidGains& g, const PriorData& data) {
  const Scalar ts = data.u0.ts;
  if (degenerate_controller(g, ts))
    throw std::domain_error("degenerate controller: inverse is ill posed");
  Scalar n0, n1, n2;
  controller_coeffs(g, ts, n0, n1, n2);

  // v = C^-1 u0:  n0 v(k) + n1 v(k-1) + n2 v(k-2) = Ts (u0(k) - u0(k-1))
  const Eigen::Index n = data.u0.size();
  VecX r(n);
  Scalar v1 = 0.0, v2 = 0.0, u_prev = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Scalar u = data.u0.values[k];
    const Scalar v = (ts * (u - u_prev) - n1 * v1 - n2 * v2) / n0;
    r[k] = v + data.y0.values[k];
    v2 = v1;
    v1 = v;
    u_prev = u;
  }
  return make_series(std::move(r), ts, data.u0.t0);
}

TimeSeries controller_filter(const PidGains& g, const TimeSeries& e) {
  PidState st;
  VecX u(e.size());
  for (Eigen::Index k = 0; k < e.size(); ++k) u[k] = pid_step(g, st, e.values[k], e.ts);
  return make_series(std::move(u), e.ts, e.t0);
}

EfritValue efrit_objective(const ExtendedGains& theta, const PriorData& data, Scalar lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("lambda must be >= 0");
  if (!(theta.tc > 0.0)) throw std::invalid_argument("tc must be > 0");

  const TimeSeries r_tilde = fictitious_reference(theta.gains, data);
  const TimeSeries y_tilde = pl_filter(theta.tc, data.u0.ts, r_tilde);

  EfritValue val;
  val.j_tracking = (data.y0.values - y_tilde.values).squaredNorm();

  TimeSeries e = r_tilde;
  e.values -= y_tilde.values;
  const TimeSeries u_tilde = controller_filter(theta.gains, e);
  const Eigen::Index n = u_tilde.size();
  if (n > 1) {
    val.j_input =
        (u_tilde.values.tail(n - 1) - u_tilde.values.head(n - 1)).squaredNorm();
  }
  val.j = val.j_tracking + lambda * val.j_input;
  return val;
}

namespace {

// Nelder-Mead with the standard reflection/expansion/contraction/shrink
// coefficients (1, 2, 0.5, 0.5). Ties never displace the incumbent: ordering
// is stable, and equal-valued candidates are rejected in favor of shrinking,
// so a vertex that already attains the minimum is returned unchanged.
struct SimplexResult {
  VecX x;
  Scalar f = std::numeric_limits<Scalar>::infinity();
  int iterations = 0;
  bool converged = false;
};

Scalar simplex_diameter(const std::vector<std::pair<VecX, Scalar>>& s) {
  Scalar d = 0.0;
  for (size_t i = 1; i < s.size(); ++i)
    d = std::max(d, (s[i].first - s[0].first).cwiseAbs().maxCoeff());
  return d;
}

SimplexResult nelder_mead(const std::function<Scalar(const VecX&)>& f, const VecX& x0,
                          Scalar tol, int max_iters) {
  const Eigen::Index dim = x0.size();
  std::vector<std::pair<VecX, Scalar>> s;
  s.reserve(dim + 1);
  s.emplace_back(x0, f(x0));
  for (Eigen::Index i = 0; i < dim; ++i) {
    VecX x = x0;
    x[i] += x[i] != 0.0 ? 0.05 * std::abs(x[i]) : 0.00025;
    s.emplace_back(x, f(x));
  }
  auto order = [&s]() {
    std::stable_sort(s.begin(), s.end(),
                     [](const auto& a, const auto& b) { return a.second < b.second; });
  };
  order();

  SimplexResult res;
  int it = 0;
  for (; it < max_iters; ++it) {
    if (simplex_diameter(s) < tol) {
      res.converged = true;
      break;
    }
    VecX xbar = VecX::Zero(dim);
    for (Eigen::Index i = 0; i < dim; ++i) xbar += s[i].first;
    xbar /= static_cast<Scalar>(dim);
    const VecX& xw = s[dim].first;
    const Scalar fw = s[dim].second;
    const Scalar fb = s[0].second;
    const Scalar fsw = s[dim - 1].second;

    const VecX xr = xbar + (xbar - xw);
    const Scalar fr = f(xr);
    bool shrink = false;
    if (fr < fb) {
      const VecX xe = xbar + 2.0 * (xbar - xw);
      const Scalar fe = f(xe);
      s[dim] = fe < fr ? std::make_pair(xe, fe) : std::make_pair(xr, fr);
    } else if (fr < fsw) {
      s[dim] = {xr, fr};
    } else if (fr < fw) {
      const VecX xc = xbar + 0.5 * (xbar - xw);
      const Scalar fc = f(xc);
      if (fc <= fr)
        s[dim] = {xc, fc};
      else
        shrink = true;
    } else {
      const VecX xcc = xbar - 0.5 * (xbar - xw);
      const Scalar fcc = f(xcc);
      if (fcc < fw)
        s[dim] = {xcc, fcc};
      else
        shrink = true;
    }
    if (shrink) {
      for (Eigen::Index i = 1; i <= dim; ++i) {
        s[i].first = s[0].first + 0.5 * (s[i].first - s[0].first);
        s[i].second = f(s[i].first);
      }
    }
    order();
  }
  res.x = s[0].first;
  res.f = s[0].second;
  res.iterations = it;
  return res;
}

}  // namespace

TuneReport tune(const ExtendedGains& theta0, const PriorData& data, Scalar lambda,
                const TuneOptions& opts) {
  if (!(theta0.tc > 0.0)) throw std::invalid_argument("theta0.tc must be > 0");
  if (opts.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");

  const bool with_tc = opts.optimize_tc;
  const Eigen::Index dim = with_tc ? 4 : 3;
  auto unpack = [&](const VecX& x) {
    ExtendedGains th;
    th.gains = PidGains{x[0], x[1], x[2]};
    th.tc = with_tc ? std::exp(x[3]) : theta0.tc;
    return th;
  };
  auto objective = [&](const VecX& x) -> Scalar {
    const ExtendedGains th = unpack(x);
    if (!(th.tc > 0.0) || !std::isfinite(th.tc))
      return std::numeric_limits<Scalar>::infinity();
    try {
      const Scalar j = efrit_objective(th, data, lambda).j;
      return std::isfinite(j) ? j : std::numeric_limits<Scalar>::infinity();
    } catch (const std::domain_error&) {
      return std::numeric_limits<Scalar>::infinity();
    }
  };

  VecX x0(dim);
  x0[0] = theta0.gains.kp;
  x0[1] = theta0.gains.ki;
  x0[2] = theta0.gains.kd;
  if (with_tc) x0[3] = std::log(theta0.tc);
  if (!std::isfinite(objective(x0)))
    throw std::domain_error("objective not finite at theta0");

  SimplexResult best = nelder_mead(objective, x0, opts.tol, opts.max_iters);
  int total_iters = best.iterations;
  for (int r = 0; r < opts.restarts && total_iters < opts.max_iters; ++r) {
    SimplexResult again =
        nelder_mead(objective, best.x, opts.tol, opts.max_iters - total_iters);
    total_iters += again.iterations;
    const bool improving = again.f < best.f;
    if (improving || (again.f == best.f && again.converged)) {
      again.iterations = 0;  // already counted
      best.x = again.x;
      best.f = again.f;
      best.converged = again.converged;
    } else {
      best.converged = best.converged || again.converged;
    }
  }
  if (!std::isfinite(best.f)) throw std::runtime_error("all simplex evaluations failed");

  TuneReport report;
  report.theta_star = unpack(best.x);
  const EfritValue v = efrit_objective(report.theta_star, data, lambda);
  report.j_value = v.j;
  report.j_tracking = v.j_tracking;
  report.j_input = v.j_input;
  report.iterations = total_iters;
  report.converged = best.converged;
  return report;
}

}  // namespace afmpc
