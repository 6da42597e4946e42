#pragma once

#include "plure/certify.hpp"
#include "plure/lure.hpp"
#include "plure/problems.hpp"
#include "plure/sets.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace plure {

OutputForm<double> gradient_descent(double m, double L);
OutputForm<double> gradient_descent_step(double eta);

struct MomentumParams {
  double rho = 0;  // design rate (triple momentum only)
  double alpha = 0;
  double beta = 0;
  double gamma = 0;
};

MomentumParams triple_momentum_params(double m, double L);
MomentumParams nesterov_params(double m, double L);
MomentumParams heavy_ball_params(double m, double L);

// xi+ = (1+beta) xi - beta xi_prev - alpha u, y = (1+gamma) xi - gamma xi_prev
ReducedSystem<double> momentum_system(const MomentumParams& p);

OutputForm<double> triple_momentum(double m, double L);
OutputForm<double> nesterov(double m, double L);
OutputForm<double> heavy_ball(double m, double L);

// Looks up a factory by name: gradient_descent, triple_momentum, nesterov, heavy_ball.
OutputForm<double> make_algorithm(const std::string& name, double m, double L);

struct TrajectoryMeta {
  std::string algorithm;
  std::string problem;
  std::string set;
  std::uint64_t seed = 0;
  long iterations = 0;
};

template <typename Scalar>
struct Trajectory {
  std::vector<AlgorithmState<Scalar>> states;
  // Flattened p x d filter states when a multiplier filter is co-simulated.
  std::vector<Vector<Scalar>> filter_states;
  std::vector<Scalar> y_errors;
  std::vector<Scalar> lyap_values;
  TrajectoryMeta meta;
};

template <typename Scalar>
struct SimulationOptions {
  long max_iters = 200000;
  Vector<Scalar> y_ref;
  std::optional<Certificate> certificate;
  std::optional<FilterRealization> filter;
  bool record_states = true;
  Scalar stop_tol = Scalar(1e-13);
  TrajectoryMeta meta;
};

struct RateEstimate {
  double rho_hat = 1.0;
  long start = 0;
  long end = 0;
  double r_squared = 1.0;
};

// Equilibrium of the augmented state (y, xi2, zeta) stacked as an (n + p) x d block matrix.
template <typename Scalar>
BlockMatrix<Scalar> augmented_equilibrium(const OutputForm<Scalar>& form, const FilterRealization* filt,
                                          const Vector<Scalar>& y_eq, const Vector<Scalar>& u_eq) {
  const Eigen::Index d = y_eq.size();
  const Eigen::Index n = form.n();
  const Eigen::Index p = filt ? filt->p() : 0;
  BlockMatrix<Scalar> X(n + p, d);
  X.row(0) = y_eq.transpose();
  if (n > 1) X.middleRows(1, n - 1) = blocks(equilibrium_xi2(form, y_eq), n - 1, d);
  if (p > 0) {
    const Matrix<Scalar> IA = Matrix<Scalar>::Identity(p, p) - filt->A_psi.template cast<Scalar>();
    const Matrix<Scalar> rhs = filt->B_psi_y.template cast<Scalar>() * y_eq.transpose() +
                               filt->B_psi_u.template cast<Scalar>() * u_eq.transpose();
    X.bottomRows(p) = IA.fullPivLu().solve(rhs);
  }
  return X;
}

template <typename Scalar>
BlockMatrix<Scalar> stack_augmented(const AlgorithmState<Scalar>& s, const Vector<Scalar>& zeta, Eigen::Index n,
                                    Eigen::Index p) {
  const Eigen::Index d = s.y.size();
  BlockMatrix<Scalar> X(n + p, d);
  X.row(0) = s.y.transpose();
  if (n > 1) X.middleRows(1, n - 1) = blocks(s.xi2, n - 1, d);
  if (p > 0) X.bottomRows(p) = blocks(zeta, p, d);
  return X;
}

// Runs the projected iteration (plain iteration when the set is the whole space), logging
// distances to y_ref and, with a certificate, the Lyapunov values of the augmented state.
template <typename Scalar>
Trajectory<Scalar> simulate(const OutputForm<Scalar>& form, const GradientOracle<Scalar>& grad,
                            const ConvexSet<Scalar>& set, const AlgorithmState<Scalar>& x0,
                            const SimulationOptions<Scalar>& opts) {
  const Eigen::Index d = set.dim();
  const Eigen::Index n = form.n();
  check_state(form, x0, d);
  require_dim(opts.y_ref.size(), d, "reference point");
  const FilterRealization* filt = opts.filter ? &*opts.filter : nullptr;
  const Eigen::Index p = filt ? filt->p() : 0;
  if (opts.certificate) {
    require_dim(opts.certificate->P.rows(), n + p, "certificate size vs augmented state");
    require_dim(opts.certificate->P.cols(), n + p, "certificate size vs augmented state");
  }

  Matrix<Scalar> A_psi, B_y, B_u, P;
  BlockMatrix<Scalar> X_eq;
  if (filt) {
    A_psi = filt->A_psi.template cast<Scalar>();
    B_y = filt->B_psi_y.template cast<Scalar>();
    B_u = filt->B_psi_u.template cast<Scalar>();
  }
  const bool logging = opts.certificate.has_value() || filt;
  if (logging) X_eq = augmented_equilibrium(form, filt, opts.y_ref, grad(opts.y_ref));
  if (opts.certificate) P = opts.certificate->P.template cast<Scalar>();

  Trajectory<Scalar> traj;
  traj.meta = opts.meta;
  AlgorithmState<Scalar> s = x0;
  // The filter starts at its equilibrium, so the lagged increment before k = 0 is zero.
  Vector<Scalar> zeta(p * d);
  if (p > 0) Eigen::Map<BlockMatrix<Scalar>>(zeta.data(), p, d) = X_eq.bottomRows(p);

  const auto record = [&]() {
    traj.y_errors.push_back((s.y - opts.y_ref).norm());
    if (opts.record_states) {
      traj.states.push_back(s);
      if (p > 0) traj.filter_states.push_back(zeta);
    }
    if (opts.certificate) {
      const BlockMatrix<Scalar> E = stack_augmented(s, zeta, n, p) - X_eq;
      traj.lyap_values.push_back((E.cwiseProduct(P * E)).sum());
    }
  };

  record();
  long k = 0;
  for (; k < opts.max_iters; ++k) {
    if (traj.y_errors.back() <= opts.stop_tol) break;
    const Vector<Scalar> u = grad(s.y);
    if (p > 0) {
      const auto Z = blocks(zeta, p, d);
      BlockMatrix<Scalar> next = A_psi * Z + B_y * s.y.transpose() + B_u * u.transpose();
      zeta = Eigen::Map<const Vector<Scalar>>(next.data(), p * d);
    }
    AlgorithmState<Scalar> next = half_step(form, s, u);
    if (!set.is_whole_space()) next.y = project(set, next.y);
    if (!next.y.allFinite() || !next.xi2.allFinite() || !zeta.allFinite())
      throw Error(ErrorCode::NonFiniteIterate, "iterate became non-finite at step " + std::to_string(k + 1));
    s = std::move(next);
    record();
  }
  traj.meta.iterations = k;
  return traj;
}

// Least-squares fit of log(err_k) against k on the window [0.2 K, K], K the last index
// with err_k above 1e-12.
template <typename Scalar>
RateEstimate estimate_rate(const std::vector<Scalar>& errors) {
  constexpr double floor = 1e-12;
  long valid = 0;
  long last = -1;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (static_cast<double>(errors[i]) > floor) {
      ++valid;
      last = static_cast<long>(i);
    }
  }
  if (valid < 50) throw Error(ErrorCode::InsufficientData, "need at least 50 errors above 1e-12");
  RateEstimate est;
  est.start = static_cast<long>(std::floor(0.2 * static_cast<double>(last)));
  est.end = last;
  long double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
  for (long k = est.start; k <= est.end; ++k) {
    const long double e = static_cast<long double>(errors[static_cast<std::size_t>(k)]);
    if (!(e > 0)) continue;
    const long double x = k, y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    cnt += 1;
  }
  const long double mx = sx / cnt, my = sy / cnt;
  const long double vxx = sxx / cnt - mx * mx;
  const long double cxy = sxy / cnt - mx * my;
  const long double slope = vxx > 0 ? cxy / vxx : 0;
  long double ss_res = 0, ss_tot = 0;
  for (long k = est.start; k <= est.end; ++k) {
    const long double e = static_cast<long double>(errors[static_cast<std::size_t>(k)]);
    if (!(e > 0)) continue;
    const long double y = std::log(e);
    const long double fit = my + slope * (static_cast<long double>(k) - mx);
    ss_res += (y - fit) * (y - fit);
    ss_tot += (y - my) * (y - my);
  }
  est.rho_hat = static_cast<double>(std::exp(slope));
  est.r_squared = ss_tot > 0 ? static_cast<double>(1 - ss_res / ss_tot) : 1.0;
  return est;
}

template <typename Scalar>
RateEstimate estimate_rate(const Trajectory<Scalar>& traj) {
  return estimate_rate(traj.y_errors);
}

// Runs the projected output-form iteration with beta = gamma next to the same method
// written in the original coordinates,
//   xi_{k+1} = P_{(Omega + beta xi_k)/(1 + beta)}(y_k - alpha grad f(y_k)),
//   y_k = (1 + beta) xi_k - beta xi_{k-1},
// and returns the largest per-step difference of the states.
double nesterov_equivalence_check(double m, double L, const ConvexSet<double>& set,
                                  const GradientOracle<double>& grad, const AlgorithmState<double>& x0, long K);

}  // namespace plure
