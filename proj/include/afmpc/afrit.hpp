#pragma once

#include <vector>

#include "afmpc/pid.hpp"
#include "afmpc/plmodel.hpp"
#include "afmpc/types.hpp"

namespace afmpc {

/// One regression sample of the model-matching identity phi' theta = d,
/// phi(k) = beta(z) (1 - G_m(z)) y(k), d(k) = G_m(z) u(k).
struct RegressorSample {
  Vec3 phi = Vec3::Zero();
  Scalar d = 0.0;
};

/// Streaming builder of (phi, d) from measured output/input pairs. Because
/// G_m is strictly proper, d(k) depends on inputs up to k-1 only; step()
/// therefore takes the input applied at the PREVIOUS interval, which keeps
/// the construction causal inside a running control loop while matching the
/// whole-signal composition pl_filter + pid_regressor exactly.
class RegressorFilter {
 public:
  RegressorFilter(Scalar tc, Scalar ts);

  /// y_k: output measured at step k [mm]; u_prev: input applied at step k-1
  /// [V] (pass 0 at k = 0).
  RegressorSample step(Scalar y_k, Scalar u_prev);

  Scalar ts() const { return ts_; }

 private:
  PlModel gm_y_;
  PlModel gm_u_;
  Scalar cum_ = 0.0;     // ts-weighted running sum of the filtered error
  Scalar e_prev_ = 0.0;  // previous filtered error
  Scalar ts_;
};

/// Directional-forgetting RLS state. p_mat and r_mat are kept symmetric and
/// mutually inverse (P R = I) by the update; theta_hat holds [kp, ki, kd].
struct DfRlsState {
  Vec3 theta_hat = Vec3::Zero();
  Mat3 p_mat = Mat3::Identity();
  Mat3 r_mat = Mat3::Identity();
  Scalar mu = 0.99;   ///< forgetting factor, in (0, 1]
  Scalar eps = 1e-3;  ///< excitation deadzone on ||phi||
};

/// p0 and r0 scale the initial P = p0 I and R = r0 I; they must satisfy
/// p0 * r0 = 1 (duality) within 1e-6. mu in (0, 1], eps >= 0.
DfRlsState make_df_rls(const Vec3& theta0, Scalar p0, Scalar r0, Scalar mu, Scalar eps);

/// One directional-forgetting update. When ||phi|| <= eps the entire update
/// is skipped (deadzone); otherwise the information matrix forgets only in
/// the excited direction:
///   Pbar = P + ((1-mu)/mu) phi phi' / (phi' R phi)
///   M    = (1-mu) (R phi phi') / (phi' R phi)
///   R+   = (I - M) R + phi phi'
///   P+   = Pbar - (Pbar phi phi' Pbar) / (1 + phi' Pbar phi)
///   th+  = th + P+ phi (d - phi' th)
/// Both matrices are re-symmetrized after the update.
void df_rls_update(DfRlsState& s, const RegressorSample& sample);

/// Persistent excitation over the sample set: true iff every window of
/// `delta` consecutive regressors has Gram-matrix minimum eigenvalue
/// >= alpha0. Requires delta >= 1 and more than delta samples.
bool pe_check(const std::vector<Vec3>& phis, int delta, Scalar alpha0);

}  // namespace afmpc
