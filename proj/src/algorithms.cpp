#include "plure/algorithms.hpp"

#include <algorithm>
#include <cmath>

namespace plure {

namespace {

void check_sector(double m, double L, bool strict) {
  if (!(m > 0) || !(L >= m) || !std::isfinite(L) || (strict && !(L > m)))
    throw Error(ErrorCode::InvalidSector, strict ? "need 0 < m < L" : "need 0 < m <= L");
}

OutputForm<double> checked(OutputForm<double> f, const char* name) {
  if (!has_unit_eigenvalue(f))
    throw Error(ErrorCode::InvalidOutputForm, std::string(name) + " lost its eigenvalue at one");
  return f;
}

}  // namespace

OutputForm<double> gradient_descent_step(double eta) {
  if (!(eta > 0)) throw Error(ErrorCode::InvalidArgument, "stepsize must be positive");
  return make_output_form<double>(1.0, RowVector<double>(0), Vector<double>(0), Matrix<double>(0, 0), -eta);
}

OutputForm<double> gradient_descent(double m, double L) {
  check_sector(m, L, false);
  return gradient_descent_step(2.0 / (L + m));
}

MomentumParams triple_momentum_params(double m, double L) {
  check_sector(m, L, false);
  MomentumParams p;
  p.rho = 1.0 - std::sqrt(m / L);
  p.alpha = (1.0 + p.rho) / L;
  p.beta = p.rho * p.rho / (2.0 - p.rho);
  p.gamma = p.rho * p.rho / ((1.0 + p.rho) * (2.0 - p.rho));
  return p;
}

MomentumParams nesterov_params(double m, double L) {
  check_sector(m, L, true);
  MomentumParams p;
  p.alpha = 1.0 / L;
  p.beta = p.gamma = (std::sqrt(L) - std::sqrt(m)) / (std::sqrt(L) + std::sqrt(m));
  return p;
}

MomentumParams heavy_ball_params(double m, double L) {
  check_sector(m, L, false);
  MomentumParams p;
  const double s = std::sqrt(L) + std::sqrt(m);
  p.alpha = 4.0 / (s * s);
  const double r = (std::sqrt(L) - std::sqrt(m)) / s;
  p.beta = r * r;
  p.gamma = 0.0;
  return p;
}

ReducedSystem<double> momentum_system(const MomentumParams& p) {
  ReducedSystem<double> sys;
  sys.A.resize(2, 2);
  sys.A << 1.0 + p.beta, -p.beta, 1.0, 0.0;
  sys.B.resize(2);
  sys.B << -p.alpha, 0.0;
  sys.C.resize(2);
  sys.C << 1.0 + p.gamma, -p.gamma;
  sys.D = 0.0;
  return sys;
}

OutputForm<double> triple_momentum(double m, double L) {
  return checked(to_output_form(momentum_system(triple_momentum_params(m, L))), "triple momentum");
}

OutputForm<double> nesterov(double m, double L) {
  return checked(to_output_form(momentum_system(nesterov_params(m, L))), "nesterov");
}

OutputForm<double> heavy_ball(double m, double L) {
  return checked(to_output_form(momentum_system(heavy_ball_params(m, L))), "heavy ball");
}

OutputForm<double> make_algorithm(const std::string& name, double m, double L) {
  if (name == "gradient_descent") return gradient_descent(m, L);
  if (name == "triple_momentum") return triple_momentum(m, L);
  if (name == "nesterov") return nesterov(m, L);
  if (name == "heavy_ball") return heavy_ball(m, L);
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm '" + name + "'");
}

double nesterov_equivalence_check(double m, double L, const ConvexSet<double>& set,
                                  const GradientOracle<double>& grad, const AlgorithmState<double>& x0, long K) {
  const MomentumParams par = nesterov_params(m, L);
  const OutputForm<double> form = nesterov(m, L);
  const Eigen::Index d = set.dim();
  check_state(form, x0, d);
  const double beta = par.beta;
  const double tau = 1.0 / (1.0 + beta);

  AlgorithmState<double> s = x0;
  Vector<double> xi_prev = x0.xi2;
  Vector<double> xi = tau * (x0.y + beta * x0.xi2);
  double worst = 0.0;
  for (long k = 0; k < K; ++k) {
    s = step_projected(form, set, grad, s);

    const Vector<double> y = (1.0 + beta) * xi - beta * xi_prev;
    const Vector<double> inner = y - par.alpha * grad(y);
    Vector<double> next;
    if (set.is_whole_space()) {
      next = inner;
    } else {
      const TransformedSet<double> shifted{set, tau * Matrix<double>::Identity(d, d), tau * beta * xi};
      next = project(shifted, inner);
    }
    xi_prev = xi;
    xi = next;
    if (!xi.allFinite() || !s.y.allFinite())
      throw Error(ErrorCode::NonFiniteIterate, "iterate became non-finite at step " + std::to_string(k + 1));

    const Vector<double> y_orig = (1.0 + beta) * xi - beta * xi_prev;
    worst = std::max({worst, (s.y - y_orig).norm(), (s.xi2 - xi_prev).norm()});
  }
  return worst;
}

}  // namespace plure
