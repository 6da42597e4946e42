#pragma once

#include "plure/sets.hpp"
#include "plure/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>

namespace plure {

// f(y) = 0.5 y'Fy + b'y
template <typename Scalar>
class QuadraticObjective {
 public:
  QuadraticObjective(Matrix<Scalar> F, Vector<Scalar> b) : F_(std::move(F)), b_(std::move(b)) {
    if (F_.rows() != F_.cols()) throw Error(ErrorCode::DimensionMismatch, "F must be square");
    require_dim(b_.size(), F_.rows(), "b");
    if (!F_.allFinite() || !b_.allFinite()) throw Error(ErrorCode::NotPositiveDefinite, "F or b not finite");
    using std::abs;
    const Scalar scale = std::max<Scalar>(Scalar(1), F_.cwiseAbs().maxCoeff());
    if ((F_ - F_.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale)
      throw Error(ErrorCode::NotPositiveDefinite, "F is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(F_, Eigen::EigenvaluesOnly);
    m_ = es.eigenvalues()(0);
    L_ = es.eigenvalues()(es.eigenvalues().size() - 1);
    if (!(m_ > 0)) throw Error(ErrorCode::NotPositiveDefinite, "F has a nonpositive eigenvalue");
  }

  const Matrix<Scalar>& F() const { return F_; }
  const Vector<Scalar>& b() const { return b_; }
  Eigen::Index dim() const { return b_.size(); }
  Scalar strong_convexity() const { return m_; }
  Scalar smoothness() const { return L_; }

  Scalar value(const Vector<Scalar>& y) const {
    require_dim(y.size(), dim(), "objective argument");
    return Scalar(0.5) * y.dot(F_ * y) + b_.dot(y);
  }

  Vector<Scalar> gradient(const Vector<Scalar>& y) const {
    require_dim(y.size(), dim(), "gradient argument");
    return F_ * y + b_;
  }

  Vector<Scalar> minimizer() const { return -F_.llt().solve(b_); }

  GradientOracle<Scalar> oracle() const {
    return [F = F_, b = b_](const Vector<Scalar>& y) -> Vector<Scalar> {
      require_dim(y.size(), b.size(), "gradient argument");
      return F * y + b;
    };
  }

  template <typename To>
  QuadraticObjective<To> cast() const {
    return QuadraticObjective<To>(F_.template cast<To>(), b_.template cast<To>());
  }

 private:
  Matrix<Scalar> F_;
  Vector<Scalar> b_;
  Scalar m_{};
  Scalar L_{};
};

// Gradient oracle with claimed slope bounds; the oracle must be a pure function.
template <typename Scalar>
struct SmoothObjective {
  GradientOracle<Scalar> grad;
  Scalar m{};
  Scalar L{};
  Eigen::Index d = 0;

  SmoothObjective(GradientOracle<Scalar> g, Scalar m_, Scalar L_, Eigen::Index d_)
      : grad(std::move(g)), m(m_), L(L_), d(d_) {
    if (!(m > 0) || !(L >= m)) throw Error(ErrorCode::InvalidSector, "need 0 < m <= L");
    if (d < 1) throw Error(ErrorCode::DimensionMismatch, "dimension must be positive");
  }

  Scalar strong_convexity() const { return m; }
  Scalar smoothness() const { return L; }
  Eigen::Index dim() const { return d; }

  Vector<Scalar> gradient(const Vector<Scalar>& y) const {
    require_dim(y.size(), d, "gradient argument");
    Vector<Scalar> g = grad(y);
    require_dim(g.size(), d, "gradient value");
    return g;
  }

  GradientOracle<Scalar> oracle() const { return grad; }
};

template <typename Scalar>
SmoothObjective<Scalar> as_smooth(const QuadraticObjective<Scalar>& q) {
  return {q.oracle(), q.strong_convexity(), q.smoothness(), q.dim()};
}

template <typename Scalar>
Vector<Scalar> gradient(const QuadraticObjective<Scalar>& obj, const Vector<Scalar>& y) {
  return obj.gradient(y);
}

template <typename Scalar>
Vector<Scalar> gradient(const SmoothObjective<Scalar>& obj, const Vector<Scalar>& y) {
  return obj.gradient(y);
}

template <typename Scalar>
std::pair<Scalar, Scalar> sector_constants(const QuadraticObjective<Scalar>& obj) {
  return {obj.strong_convexity(), obj.smoothness()};
}

template <typename Scalar>
struct SlopeReport {
  bool passed = true;
  int samples = 0;
  // Largest value of (g - m dx)'(g - L dx) / |dx|^2 seen; must stay <= 1e-9.
  Scalar worst{};
  std::optional<std::pair<Vector<Scalar>, Vector<Scalar>>> witness;
};

template <typename Scalar>
SlopeReport<Scalar> slope_restriction_check(const SmoothObjective<Scalar>& obj, int num_samples,
                                            std::uint64_t seed) {
  if (num_samples < 1) throw Error(ErrorCode::InvalidArgument, "num_samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-10.0, 10.0);
  SlopeReport<Scalar> rep;
  rep.worst = -std::numeric_limits<Scalar>::infinity();
  for (int s = 0; s < num_samples; ++s) {
    Vector<Scalar> x(obj.d), y(obj.d);
    for (Eigen::Index i = 0; i < obj.d; ++i) x(i) = Scalar(unif(rng));
    for (Eigen::Index i = 0; i < obj.d; ++i) y(i) = Scalar(unif(rng));
    const Vector<Scalar> dx = x - y;
    const Scalar n2 = dx.squaredNorm();
    if (n2 == 0) continue;
    const Vector<Scalar> dg = obj.gradient(x) - obj.gradient(y);
    const Scalar val = (dg - obj.m * dx).dot(dg - obj.L * dx) / n2;
    ++rep.samples;
    if (val > rep.worst) rep.worst = val;
    if (val > Scalar(1e-9) && rep.passed) {
      rep.passed = false;
      rep.witness = std::make_pair(x, y);
    }
  }
  return rep;
}

// Projected gradient descent with stepsize 1/L from the projection of the origin.
template <typename Scalar>
Vector<Scalar> solve_reference(const GradientOracle<Scalar>& grad, Scalar L, const ConvexSet<Scalar>& set,
                               Scalar tol, long max_iters = 20'000'000) {
  Vector<Scalar> y = project(set, Vector<Scalar>(Vector<Scalar>::Zero(set.dim())));
  const Scalar step = Scalar(1) / L;
  for (long k = 0; k < max_iters; ++k) {
    Vector<Scalar> next = project(set, Vector<Scalar>(y - step * grad(y)));
    const Scalar r = (next - y).norm();
    if (!next.allFinite()) throw Error(ErrorCode::NonFiniteIterate, "reference solver diverged");
    if (r <= tol) return y;
    y = std::move(next);
  }
  throw Error(ErrorCode::MaxIterationsExceeded, "reference solver hit its iteration cap");
}

template <typename Objective, typename Scalar>
Vector<Scalar> solve_reference(const Objective& obj, const ConvexSet<Scalar>& set, Scalar tol) {
  require_dim(set.dim(), obj.dim(), "reference set");
  return solve_reference<Scalar>(obj.oracle(), obj.smoothness(), set, tol);
}

template <typename Scalar>
Scalar optimal_value(const QuadraticObjective<Scalar>& obj) {
  return Scalar(-0.5) * obj.b().dot(obj.F().llt().solve(obj.b()));
}

// F = Q diag(lambda) Q' with lambda_min = m, lambda_max = L exactly and the interior
// spectrum log-uniform; b places the unconstrained minimiser at a random point of the
// sphere of the given radius.
inline QuadraticObjective<double> random_quadratic(Eigen::Index d, double m, double L, std::uint64_t seed,
                                                   double radius = 3.0) {
  if (!(m > 0) || !(L >= m)) throw Error(ErrorCode::InvalidSector, "need 0 < m <= L");
  if (d < 1 || (d == 1 && m != L))
    throw Error(ErrorCode::InvalidArgument, "a 1-d quadratic cannot have distinct m and L");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix<double> G(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) G(i, j) = gauss(rng);
  Eigen::HouseholderQR<Matrix<double>> qr(G);
  Matrix<double> Q = qr.householderQ();
  Vector<double> lam(d);
  lam(0) = m;
  lam(d - 1) = L;
  for (Eigen::Index i = 1; i + 1 < d; ++i) lam(i) = std::exp(std::log(m) + unif(rng) * (std::log(L) - std::log(m)));
  Matrix<double> F = Q * lam.asDiagonal() * Q.transpose();
  F = (F + F.transpose()) / 2.0;
  Vector<double> dir(d);
  for (Eigen::Index i = 0; i < d; ++i) dir(i) = gauss(rng);
  const Vector<double> y_unc = radius * dir.normalized();
  return QuadraticObjective<double>(F, -F * y_unc);
}

}  // namespace plure
