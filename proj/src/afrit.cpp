#include "afmpc/afrit.hpp"

#include <cmath>
#include <stdexcept>

namespace afmpc {

RegressorFilter::RegressorFilter(Scalar tc, Scalar ts)
    : gm_y_(make_pl(tc, ts)), gm_u_(make_pl(tc, ts)), ts_(ts) {}

RegressorSample RegressorFilter::step(Scalar y_k, Scalar u_prev) {
  RegressorSample out;
  // phi channel: e = (1 - G_m) y, read before push (strictly proper G_m).
  const Scalar y_f = pl_step(gm_y_, y_k);
  const Scalar e = y_k - y_f;
  out.phi = pid_regressor(e, e_prev_, cum_, ts_);
  cum_ = out.phi[1];
  e_prev_ = e;
  // d channel: push the previous input first so d(k) covers u(0..k-1).
  pl_step(gm_u_, u_prev);
  out.d = gm_u_.c_p * gm_u_.x;
  return out;
}

DfRlsState make_df_rls(const Vec3& theta0, Scalar p0, Scalar r0, Scalar mu, Scalar eps) {
  if (!(p0 > 0.0) || !(r0 > 0.0)) throw std::invalid_argument("p0 and r0 must be > 0");
  if (std::abs(p0 * r0 - 1.0) > 1e-6)
    throw std::invalid_argument("p0 * r0 must equal 1 (P R = I duality)");
  if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("mu must be in (0, 1]");
  if (eps < 0.0) throw std::invalid_argument("eps must be >= 0");
  DfRlsState s;
  s.theta_hat = theta0;
  s.p_mat = p0 * Mat3::Identity();
  s.r_mat = r0 * Mat3::Identity();
  s.mu = mu;
  s.eps = eps;
  return s;
}

void df_rls_update(DfRlsState& s, const RegressorSample& sample) {
  const Vec3& phi = sample.phi;
  if (phi.norm() <= s.eps) return;  // deadzone: no excitation, no update

  const Scalar phi_r_phi = phi.dot(s.r_mat * phi);
  if (!(phi_r_phi > 0.0)) throw std::runtime_error("information matrix lost definiteness");

  const Mat3 phi_outer = phi * phi.transpose();
  const Mat3 p_bar = s.p_mat + ((1.0 - s.mu) / s.mu) * phi_outer / phi_r_phi;
  const Mat3 m = (1.0 - s.mu) * (s.r_mat * phi_outer) / phi_r_phi;
  s.r_mat = (Mat3::Identity() - m) * s.r_mat + phi_outer;

  const Vec3 p_bar_phi = p_bar * phi;
  s.p_mat = p_bar - (p_bar_phi * p_bar_phi.transpose()) / (1.0 + phi.dot(p_bar_phi));

  s.p_mat = ((s.p_mat + s.p_mat.transpose()) * 0.5).eval();
  s.r_mat = ((s.r_mat + s.r_mat.transpose()) * 0.5).eval();

  s.theta_hat += s.p_mat * phi * (sample.d - phi.dot(s.theta_hat));
}

bool pe_check(const std::vector<Vec3>& phis, int delta, Scalar alpha0) {
  if (delta < 1) throw std::invalid_argument("delta must be >= 1");
  if (phis.size() <= static_cast<size_t>(delta))
    throw std::invalid_argument("need more samples than the window length");
  const size_t n = phis.size();
  for (size_t start = 0; start + delta <= n; ++start) {
    Mat3 gram = Mat3::Zero();
    for (size_t k = start; k < start + static_cast<size_t>(delta); ++k)
      gram += phis[k] * phis[k].transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> eig;
    eig.computeDirect(gram);
    if (eig.eigenvalues().minCoeff() < alpha0) return false;
  }
  return true;
}

}  // namespace afmpc
