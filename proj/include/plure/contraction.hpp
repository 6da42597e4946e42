#pragma once

#include "plure/algorithms.hpp"
#include "plure/certify.hpp"

#include <cmath>
#include <limits>

namespace plure {

template <typename Scalar>
struct ContractionOptions {
  long steps = 2000;
  // Ratios are taken only while |T (x_k - x_eq)| exceeds this floor.
  Scalar floor = Scalar(1e-10);
  // Fixed-point residual requested from the reference solver; defaults to a few hundred ulps.
  Scalar reference_tol = Scalar(1e3) * std::numeric_limits<Scalar>::epsilon();
  // Overrides the reference solve when set.
  std::optional<Vector<Scalar>> y_eq;
};

struct ContractionReport {
  // max_k |x~_{k+1}| / |x~_k|, the per-step contraction of the transformed state.
  double max_ratio = 0.0;
  // max_k |x~_k| / (rho^k |x~_0|), the geometric envelope relative to the certified rate.
  double envelope = 0.0;
  long steps_checked = 0;
  long worst_step = -1;
};

// Simulates the projected algorithm with the certificate's filter co-simulated and measures
// the transformed state x~ = (T (x) I_d)(x - x_eq) with T'T = P.
template <typename Scalar>
ContractionReport transformed_contraction_check(const OutputForm<double>& form, const ConvexSet<Scalar>& set,
                                                const GradientOracle<Scalar>& grad, Scalar L,
                                                const Certificate& cert, const FilterRealization& filt,
                                                const AlgorithmState<Scalar>& x0,
                                                const ContractionOptions<Scalar>& opts = {}) {
  const AugmentedSystem aug = build_augmented(form, filt);
  const VerificationReport ver = verify_certificate(aug, cert);
  if (!ver.passed) throw Error(ErrorCode::UnverifiedCertificate, ver.summary());

  const Matrix<Scalar> T = lyapunov_factor(cert.P).template cast<Scalar>();
  const OutputForm<Scalar> f = form.template cast<Scalar>();
  SimulationOptions<Scalar> so;
  so.max_iters = opts.steps;
  so.y_ref = opts.y_eq ? *opts.y_eq : solve_reference<Scalar>(grad, L, set, opts.reference_tol);
  so.filter = filt;
  so.stop_tol = Scalar(0);
  const Trajectory<Scalar> traj = simulate(f, grad, set, x0, so);

  const Eigen::Index n = f.n();
  const Eigen::Index p = filt.p();
  const BlockMatrix<Scalar> X_eq = augmented_equilibrium(f, &filt, so.y_ref, Vector<Scalar>(grad(so.y_ref)));
  std::vector<Scalar> norms(traj.states.size());
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const Vector<Scalar> zeta = p > 0 ? traj.filter_states[k] : Vector<Scalar>(0);
    norms[k] = (T * (stack_augmented(traj.states[k], zeta, n, p) - X_eq)).norm();
  }

  ContractionReport rep;
  using std::pow;
  const Scalar base = norms.empty() ? Scalar(0) : norms[0];
  for (std::size_t k = 0; k < norms.size(); ++k) {
    if (!(norms[k] > opts.floor)) continue;
    if (base > 0) {
      const Scalar env = norms[k] / (pow(Scalar(cert.rho), Scalar(k)) * base);
      rep.envelope = std::max(rep.envelope, static_cast<double>(env));
    }
    if (k + 1 < norms.size()) {
      const double r = static_cast<double>(norms[k + 1] / norms[k]);
      ++rep.steps_checked;
      if (r > rep.max_ratio) {
        rep.max_ratio = r;
        rep.worst_step = static_cast<long>(k);
      }
    }
  }
  return rep;
}

}  // namespace plure
