#include "afmpc/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace afmpc {

void validate(const MpcConfig& cfg) {
  if (cfg.hp < 1) throw std::invalid_argument("hp must be >= 1");
  if (cfg.hu < 1 || cfg.hu > cfg.hp) throw std::invalid_argument("need 1 <= hu <= hp");
  if (cfg.q < 0.0) throw std::invalid_argument("q must be >= 0");
  if (!(cfg.r_w > 0.0)) throw std::invalid_argument("r_w must be > 0");
  if (cfg.ru_w < 0.0) throw std::invalid_argument("ru_w must be >= 0");
  if (!(cfg.u_min < cfg.u_max)) throw std::invalid_argument("u_min must be < u_max");
}

VecX predict_outputs(const PlModel& model, Scalar x0, const VecX& u_c_plan, int hp) {
  if (u_c_plan.size() < 1) throw std::invalid_argument("empty command plan");
  if (hp < 1) throw std::invalid_argument("hp must be >= 1");
  const Eigen::Index hu = u_c_plan.size();
  VecX y(hp);
  Scalar x = x0;
  for (int i = 0; i < hp; ++i) {
    const Scalar u_c = u_c_plan[std::min<Eigen::Index>(i, hu - 1)];
    x = model.a_p * x + model.b_p * u_c;
    y[i] = model.c_p * x;
  }
  return y;
}

VecX predict_inputs(const PidGains& gains, const PidState& pid_state, const VecX& u_c_plan,
                    const VecX& y_hat_at_plan, Scalar ts) {
  if (u_c_plan.size() != y_hat_at_plan.size())
    throw std::invalid_argument("plan/prediction length mismatch");
  if (!(ts > 0.0)) throw std::invalid_argument("ts must be > 0");
  const Eigen::Index hu = u_c_plan.size();
  VecX u(hu);
  Scalar integ = pid_state.integ;
  Scalar e_prev = pid_state.e_prev;
  for (Eigen::Index i = 0; i < hu; ++i) {
    const Scalar e = u_c_plan[i] - y_hat_at_plan[i];
    integ += gains.ki * ts * e;
    u[i] = gains.kp * e + integ + gains.kd * (e - e_prev) / ts;
    e_prev = e;
  }
  return u;
}

Scalar mpc_objective(const MpcConfig& cfg, const VecX& u_c_plan, Scalar u_c_prev,
                     const VecX& u_hat_plan, Scalar u_prev, const VecX& y_hat,
                     const VecX& r_preview) {
  validate(cfg);
  if (u_c_plan.size() != cfg.hu || u_hat_plan.size() != cfg.hu)
    throw std::invalid_argument("plan length must equal hu");
  if (y_hat.size() != cfg.hp || r_preview.size() != cfg.hp)
    throw std::invalid_argument("prediction/preview length must equal hp");
  Scalar j = cfg.q * (y_hat - r_preview).squaredNorm();
  Scalar uc_last = u_c_prev, u_last = u_prev;
  for (Eigen::Index i = 0; i < cfg.hu; ++i) {
    const Scalar d_uc = u_c_plan[i] - uc_last;
    const Scalar d_u = u_hat_plan[i] - u_last;
    j += cfg.r_w * d_uc * d_uc + cfg.ru_w * d_u * d_u;
    uc_last = u_c_plan[i];
    u_last = u_hat_plan[i];
  }
  return j;
}

namespace {

// Affine maps of the horizon quantities in the plan v (length m = hu):
//   y^(k+i)   = By.row(i-1) v + fy(i-1)          i = 1..hp
//   e^(k+i)   = E.row(i) v + fe(i)               i = 0..m-1
//   u^(k+i)   = U.row(i) v + cu(i)               i = 0..m-1
// from which the objective is a strictly convex quadratic
//   J(v) = 1/2 v' Q v + c' v + const,  Q = 2 sum_t w_t Mt' Mt.
struct QpData {
  MatX by;  VecX fy;
  MatX u;   VecX cu;
  MatX q;   VecX c;
  MatX a;   VecX b;  // constraints a v <= b (2m rows: upper then lower)
};

QpData build_qp(const MpcConfig& cfg, const PlModel& model, Scalar x0, const VecX& r_preview,
                const PidGains& gains, const PidState& pid_state, Scalar u_c_prev,
                Scalar u_prev) {
  const int p = cfg.hp, m = cfg.hu;
  const Scalar a_p = model.a_p, b_p = model.b_p, c_p = model.c_p, ts = model.ts;

  QpData qp;
  qp.by = MatX::Zero(p, m);
  qp.fy = VecX::Zero(p);
  Scalar apow = 1.0;
  for (int i = 1; i <= p; ++i) {
    // y^(k+i) = c_p (a^i x0 + b sum_{l<i} a^{i-1-l} u_c(k+l))
    if (i == 1) {
      qp.by(0, 0) = c_p * b_p;
    } else {
      qp.by.row(i - 1) = a_p * qp.by.row(i - 2);
      qp.by(i - 1, std::min(i - 1, m - 1)) += c_p * b_p;
    }
    apow *= a_p;
    qp.fy[i - 1] = c_p * apow * x0;
  }

  // e^(k+i) = u_c(k+i) - y^(k+i); row 0 pairs with the current output c_p x0.
  MatX e_mat = MatX::Zero(m, m);
  VecX e_off = VecX::Zero(m);
  for (int i = 0; i < m; ++i) {
    e_mat(i, i) = 1.0;
    if (i == 0) {
      e_off[0] = -c_p * x0;
    } else {
      e_mat.row(i) -= qp.by.row(i - 1);
      e_off[i] = -qp.fy[i - 1];
    }
  }

  // u^ = G e^ + g0: proportional + integrator recursion + difference term.
  MatX g_mat = MatX::Zero(m, m);
  VecX g_off = VecX::Constant(m, pid_state.integ);
  for (int i = 0; i < m; ++i) {
    for (int l = 0; l <= i; ++l) g_mat(i, l) += gains.ki * ts;
    g_mat(i, i) += gains.kp + gains.kd / ts;
    if (i > 0) g_mat(i, i - 1) -= gains.kd / ts;
  }
  g_off[0] -= gains.kd / ts * pid_state.e_prev;

  qp.u = g_mat * e_mat;
  qp.cu = g_mat * e_off + g_off;

  // Move operators (first row differences against the previous actuals).
  MatX d = MatX::Identity(m, m);
  for (int i = 1; i < m; ++i) d(i, i - 1) = -1.0;

  qp.q = MatX::Zero(m, m);
  qp.c = VecX::Zero(m);
  auto add_term = [&qp](Scalar w, const MatX& mt, const VecX& target) {
    if (w == 0.0) return;
    qp.q += 2.0 * w * mt.transpose() * mt;
    qp.c -= 2.0 * w * mt.transpose() * target;
  };
  add_term(cfg.q, qp.by, r_preview - qp.fy);
  add_term(cfg.r_w, d, u_c_prev * VecX::Unit(m, 0));
  add_term(cfg.ru_w, d * qp.u, u_prev * VecX::Unit(m, 0) - d * qp.cu);

  qp.a = MatX::Zero(2 * m, m);
  qp.b = VecX::Zero(2 * m);
  qp.a.topRows(m) = qp.u;
  qp.b.head(m) = VecX::Constant(m, cfg.u_max) - qp.cu;
  qp.a.bottomRows(m) = -qp.u;
  qp.b.tail(m) = qp.cu - VecX::Constant(m, cfg.u_min);
  return qp;
}

constexpr Scalar kFeasTol = 1e-9;

bool is_feasible(const QpData& qp, const VecX& v, Scalar tol = kFeasTol) {
  return ((qp.a * v - qp.b).array() <= tol).all();
}

// Equality-constrained KKT step at v for working set rows `w`:
// minimize 1/2 (v+p)' Q (v+p) + c'(v+p)  s.t.  A_w p = 0.
// Returns p and the multipliers for the rows in w.
void kkt_step(const QpData& qp, const VecX& v, const std::vector<int>& w, VecX& p, VecX& lam) {
  const Eigen::Index m = v.size();
  const VecX grad = qp.q * v + qp.c;
  Eigen::LDLT<MatX> q_fact(qp.q);
  if (w.empty()) {
    p = -q_fact.solve(grad);
    lam.resize(0);
    return;
  }
  MatX aw(w.size(), m);
  for (size_t i = 0; i < w.size(); ++i) aw.row(static_cast<Eigen::Index>(i)) = qp.a.row(w[i]);
  const MatX qi_awt = q_fact.solve(aw.transpose());
  const MatX schur = aw * qi_awt;
  lam = -Eigen::LDLT<MatX>(schur).solve(aw * q_fact.solve(grad));
  p = -q_fact.solve(grad + aw.transpose() * lam);
}

// Least-violation fallback for the (rare) plans where no v keeps u^ inside
// the box: alternate between projecting u^ onto the box and least-squares
// matching that target.
VecX least_violation_plan(const QpData& qp, const MpcConfig& cfg, VecX v) {
  Eigen::CompleteOrthogonalDecomposition<MatX> u_dec(qp.u);
  for (int it = 0; it < 50; ++it) {
    const VecX u_hat = qp.u * v + qp.cu;
    const VecX target = u_hat.cwiseMax(cfg.u_min).cwiseMin(cfg.u_max);
    const VecX next = u_dec.solve(target - qp.cu);
    if ((next - v).cwiseAbs().maxCoeff() < 1e-12) return next;
    v = next;
  }
  return v;
}

}  // namespace

MpcSolution solve_mpc(const MpcConfig& cfg, const PlModel& model, Scalar x0,
                      const VecX& r_preview, const PidGains& gains, const PidState& pid_state,
                      Scalar u_c_prev, Scalar u_prev) {
  validate(cfg);
  if (r_preview.size() != cfg.hp)
    throw std::invalid_argument("r_preview length must equal hp");
  if (!std::isfinite(x0)) throw std::invalid_argument("x0 must be finite");
  const int m = cfg.hu;

  const QpData qp =
      build_qp(cfg, model, x0, r_preview, gains, pid_state, u_c_prev, u_prev);

  MpcSolution sol;
  sol.iterations = 1;
  bool qp_failed = false;

  // Unconstrained minimizer; accepted outright when it satisfies the box.
  VecX v = -Eigen::LDLT<MatX>(qp.q).solve(qp.c);
  if (!is_feasible(qp, v)) {
    // Feasible start: land u^ on its box projection (exact when the frozen
    // gains make the plan-to-input map invertible).
    Eigen::CompleteOrthogonalDecomposition<MatX> u_dec(qp.u);
    const VecX u_unc = qp.u * v + qp.cu;
    const VecX target = u_unc.cwiseMax(cfg.u_min).cwiseMin(cfg.u_max);
    VecX v_f = u_dec.solve(target - qp.cu);
    if (!is_feasible(qp, v_f, 1e-7)) {
      v_f = least_violation_plan(qp, cfg, v_f);
      if (!is_feasible(qp, v_f, 1e-7)) qp_failed = true;
    }
    v = v_f;

    if (qp_failed) {
      sol.active_constraints =
          static_cast<int>(((qp.a * v - qp.b).array().abs() <= 1e-7).count());
    } else {
      // Primal active set (Nocedal-Wright 16.3): equality step on the working
      // set, ratio test on blocking rows, multiplier test at stationarity.
      std::vector<int> work;
      const int max_iters = 50 + 10 * m;
      VecX p, lam;
      int it = 0;
      for (; it < max_iters; ++it) {
        kkt_step(qp, v, work, p, lam);
        if (!p.allFinite() || !lam.allFinite()) break;  // degenerate working set
        if (p.cwiseAbs().maxCoeff() <= 1e-11 * std::max<Scalar>(1.0, v.cwiseAbs().maxCoeff())) {
          if (work.empty()) break;
          Eigen::Index drop;
          if (lam.minCoeff(&drop) >= -1e-9) break;
          work.erase(work.begin() + static_cast<long>(drop));
          continue;
        }
        Scalar alpha = 1.0;
        int blocker = -1;
        for (int i = 0; i < 2 * m; ++i) {
          if (std::find(work.begin(), work.end(), i) != work.end()) continue;
          const Scalar s = qp.a.row(i).dot(p);
          if (s > 1e-12) {
            const Scalar ai = (qp.b[i] - qp.a.row(i).dot(v)) / s;
            if (ai < alpha) {
              alpha = std::max<Scalar>(ai, 0.0);
              blocker = i;
            }
          }
        }
        v += alpha * p;
        if (blocker >= 0)
          work.push_back(blocker);
        else if (alpha == 1.0 && work.empty())
          break;
      }
      sol.iterations += it + 1;
      sol.active_constraints = static_cast<int>(work.size());
    }
  }
  sol.feasible = !qp_failed && is_feasible(qp, v, 1e-7);

  // First-move polish. The caller realizes u(k) by running the same PID
  // recursion on u_c_plan[0], so Newton-correct that one command until the
  // realized input sits strictly inside the box: active-set solutions land
  // O(1e-12) on either side of a bound, and a failed QP can leave a larger
  // residual. The realized input is affine in the command with slope
  // kp + ki*ts + kd/ts; skip when the inner loop has no authority.
  {
    const Scalar ts = model.ts;
    const Scalar slope = gains.kp + gains.ki * ts + gains.kd / ts;
    const Scalar scale = std::max({Scalar(1), std::abs(cfg.u_min), std::abs(cfg.u_max)});
    const Scalar margin = std::min(1e-9 * scale, 0.25 * (cfg.u_max - cfg.u_min));
    if (std::abs(slope) > 1e-12 * scale) {
      const Scalar lo = cfg.u_min + margin;
      const Scalar hi = cfg.u_max - margin;
      for (int attempt = 0; attempt < 4; ++attempt) {
        PidState st = pid_state;
        const Scalar u0 = pid_step(gains, st, v[0] - model.c_p * x0, ts);
        if (u0 >= lo && u0 <= hi) break;
        const Scalar widen = static_cast<Scalar>(attempt) * margin;
        v[0] += (std::clamp(u0, lo + widen, hi - widen) - u0) / slope;
      }
    }
  }

  sol.u_c_plan = v;
  sol.u_hat_plan = qp.u * v + qp.cu;
  const VecX y_hat = predict_outputs(model, x0, v, cfg.hp);
  sol.j = mpc_objective(cfg, v, u_c_prev, sol.u_hat_plan, u_prev, y_hat, r_preview);
  return sol;
}

}  // namespace afmpc
