#pragma once

#include "plure/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace plure {

template <typename Scalar>
struct WholeSpace {
  Eigen::Index d = 0;
};

// Missing bounds are std::nullopt rather than a large float.
template <typename Scalar>
struct Box {
  std::vector<std::optional<Scalar>> lo;
  std::vector<std::optional<Scalar>> hi;
};

template <typename Scalar>
struct Ball {
  Vector<Scalar> center;
  Scalar radius{};
};

// {y : a'y <= b}
template <typename Scalar>
struct Halfspace {
  Vector<Scalar> a;
  Scalar b{};
};

// {y : a'y = b}
template <typename Scalar>
struct Hyperplane {
  Vector<Scalar> a;
  Scalar b{};
};

template <typename Scalar>
class ConvexSet {
 public:
  using Shape = std::variant<WholeSpace<Scalar>, Box<Scalar>, Ball<Scalar>, Halfspace<Scalar>,
                             Hyperplane<Scalar>>;

  static ConvexSet whole_space(Eigen::Index d) {
    if (d < 1) throw Error(ErrorCode::InvalidSet, "whole space needs d >= 1");
    return ConvexSet(WholeSpace<Scalar>{d});
  }

  static ConvexSet box(std::vector<std::optional<Scalar>> lo, std::vector<std::optional<Scalar>> hi) {
    if (lo.empty() || lo.size() != hi.size())
      throw Error(ErrorCode::InvalidSet, "box bounds must be nonempty and of equal length");
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (lo[i] && !std::isfinite(static_cast<double>(*lo[i])))
        throw Error(ErrorCode::InvalidSet, "box bound must be finite or unbounded");
      if (hi[i] && !std::isfinite(static_cast<double>(*hi[i])))
        throw Error(ErrorCode::InvalidSet, "box bound must be finite or unbounded");
      if (lo[i] && hi[i] && *lo[i] > *hi[i])
        throw Error(ErrorCode::InvalidSet, "box requires lo <= hi in coordinate " + std::to_string(i));
    }
    return ConvexSet(Box<Scalar>{std::move(lo), std::move(hi)});
  }

  // Infinite entries become unbounded coordinates.
  static ConvexSet box(const Vector<Scalar>& lo, const Vector<Scalar>& hi) {
    require_dim(hi.size(), lo.size(), "box upper bound");
    std::vector<std::optional<Scalar>> l(lo.size()), h(hi.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      if (std::isfinite(static_cast<double>(lo(i)))) l[i] = lo(i);
      else if (lo(i) > 0) throw Error(ErrorCode::InvalidSet, "lower bound +inf");
      if (std::isfinite(static_cast<double>(hi(i)))) h[i] = hi(i);
      else if (hi(i) < 0) throw Error(ErrorCode::InvalidSet, "upper bound -inf");
    }
    return box(std::move(l), std::move(h));
  }

  static ConvexSet ball(Vector<Scalar> center, Scalar radius) {
    if (center.size() < 1) throw Error(ErrorCode::InvalidSet, "ball center is empty");
    if (!(radius > 0)) throw Error(ErrorCode::InvalidSet, "ball radius must be positive");
    return ConvexSet(Ball<Scalar>{std::move(center), radius});
  }

  static ConvexSet halfspace(Vector<Scalar> a, Scalar b) {
    if (a.size() < 1 || !(a.norm() > 0)) throw Error(ErrorCode::InvalidSet, "halfspace normal must be nonzero");
    return ConvexSet(Halfspace<Scalar>{std::move(a), b});
  }

  static ConvexSet hyperplane(Vector<Scalar> a, Scalar b) {
    if (a.size() < 1 || !(a.norm() > 0)) throw Error(ErrorCode::InvalidSet, "hyperplane normal must be nonzero");
    return ConvexSet(Hyperplane<Scalar>{std::move(a), b});
  }

  const Shape& shape() const { return shape_; }

  Eigen::Index dim() const {
    return std::visit(
        [](const auto& s) -> Eigen::Index {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, WholeSpace<Scalar>>) return s.d;
          else if constexpr (std::is_same_v<S, Box<Scalar>>) return static_cast<Eigen::Index>(s.lo.size());
          else if constexpr (std::is_same_v<S, Ball<Scalar>>) return s.center.size();
          else return s.a.size();
        },
        shape_);
  }

  bool is_whole_space() const { return std::holds_alternative<WholeSpace<Scalar>>(shape_); }

  std::string kind() const {
    static const char* names[] = {"whole", "box", "ball", "halfspace", "hyperplane"};
    return names[shape_.index()];
  }

  template <typename To>
  ConvexSet<To> cast() const {
    return std::visit(
        [](const auto& s) -> ConvexSet<To> {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, WholeSpace<Scalar>>) {
            return ConvexSet<To>::whole_space(s.d);
          } else if constexpr (std::is_same_v<S, Box<Scalar>>) {
            std::vector<std::optional<To>> lo(s.lo.size()), hi(s.hi.size());
            for (std::size_t i = 0; i < lo.size(); ++i) {
              if (s.lo[i]) lo[i] = static_cast<To>(*s.lo[i]);
              if (s.hi[i]) hi[i] = static_cast<To>(*s.hi[i]);
            }
            return ConvexSet<To>::box(std::move(lo), std::move(hi));
          } else if constexpr (std::is_same_v<S, Ball<Scalar>>) {
            return ConvexSet<To>::ball(s.center.template cast<To>(), static_cast<To>(s.radius));
          } else if constexpr (std::is_same_v<S, Halfspace<Scalar>>) {
            return ConvexSet<To>::halfspace(s.a.template cast<To>(), static_cast<To>(s.b));
          } else {
            return ConvexSet<To>::hyperplane(s.a.template cast<To>(), static_cast<To>(s.b));
          }
        },
        shape_);
  }

 private:
  template <typename S>
  explicit ConvexSet(S s) : shape_(std::move(s)) {}

  Shape shape_;
};

// T*Omega + v
template <typename Scalar>
struct TransformedSet {
  ConvexSet<Scalar> base;
  Matrix<Scalar> T;
  Vector<Scalar> v;
};

struct InnerSolverOptions {
  int max_iters = 100000;
  double tol = 1e-9;
};

namespace detail {

template <typename Scalar>
Vector<Scalar> project_shape(const WholeSpace<Scalar>&, const Vector<Scalar>& x) {
  return x;
}

template <typename Scalar>
Vector<Scalar> project_shape(const Box<Scalar>& s, const Vector<Scalar>& x) {
  Vector<Scalar> y = x;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const auto& lo = s.lo[static_cast<std::size_t>(i)];
    const auto& hi = s.hi[static_cast<std::size_t>(i)];
    if (lo && y(i) < *lo) y(i) = *lo;
    if (hi && y(i) > *hi) y(i) = *hi;
  }
  return y;
}

template <typename Scalar>
Vector<Scalar> project_shape(const Ball<Scalar>& s, const Vector<Scalar>& x) {
  Vector<Scalar> r = x - s.center;
  const Scalar n = r.norm();
  if (n <= s.radius) return x;
  return s.center + (s.radius / n) * r;
}

template <typename Scalar>
Vector<Scalar> project_shape(const Halfspace<Scalar>& s, const Vector<Scalar>& x) {
  const Scalar slack = s.a.dot(x) - s.b;
  if (slack <= 0) return x;
  return x - (slack / s.a.squaredNorm()) * s.a;
}

template <typename Scalar>
Vector<Scalar> project_shape(const Hyperplane<Scalar>& s, const Vector<Scalar>& x) {
  return x - ((s.a.dot(x) - s.b) / s.a.squaredNorm()) * s.a;
}

template <typename Scalar>
void require_spd(const Matrix<Scalar>& V, const char* what) {
  using std::abs;
  if (V.rows() != V.cols()) throw Error(ErrorCode::DimensionMismatch, std::string(what) + " must be square");
  const Scalar scale = std::max<Scalar>(Scalar(1), V.cwiseAbs().maxCoeff());
  if ((V - V.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale)
    throw Error(ErrorCode::NotPositiveDefinite, std::string(what) + " is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(V, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues()(0) > 0))
    throw Error(ErrorCode::NotPositiveDefinite, std::string(what) + " has a nonpositive eigenvalue");
}

template <typename Scalar>
Vector<Scalar> weighted_affine(const Vector<Scalar>& a, Scalar b, bool half, const Matrix<Scalar>& V,
                               const Vector<Scalar>& x) {
  const Scalar slack = a.dot(x) - b;
  if (half && slack <= 0) return x;
  const Vector<Scalar> w = V.llt().solve(a);
  return x - (slack / a.dot(w)) * w;
}

template <typename Scalar>
void require_invertible(const Matrix<Scalar>& T) {
  if (T.rows() != T.cols() || T.rows() == 0)
    throw Error(ErrorCode::SingularTransform, "transform must be square and nonempty");
  Eigen::JacobiSVD<Matrix<Scalar>> svd(T);
  const auto& s = svd.singularValues();
  const Scalar smin = s(s.size() - 1);
  if (!(smin > s(0) * Scalar(T.rows()) * std::numeric_limits<Scalar>::epsilon()))
    throw Error(ErrorCode::SingularTransform, "transform is numerically singular");
}

// Minimises (T y + v - x)' V (T y + v - x) over y in base by accelerated projected
// gradient in the coordinates of base, where the Euclidean projection is exact.
template <typename Scalar>
Vector<Scalar> weighted_inner_solve(const ConvexSet<Scalar>& base, const Matrix<Scalar>& T,
                                    const Vector<Scalar>& v, const Matrix<Scalar>& V,
                                    const Vector<Scalar>& x, const InnerSolverOptions& opts);

}  // namespace detail

template <typename Scalar>
Vector<Scalar> project(const ConvexSet<Scalar>& set, const Vector<Scalar>& x) {
  require_dim(x.size(), set.dim(), "project");
  return std::visit([&](const auto& s) { return detail::project_shape(s, x); }, set.shape());
}

template <typename Scalar>
Scalar distance(const ConvexSet<Scalar>& set, const Vector<Scalar>& x) {
  return (project(set, x) - x).norm();
}

template <typename Scalar>
bool contains(const ConvexSet<Scalar>& set, const Vector<Scalar>& x, Scalar tol = Scalar(1e-12)) {
  return distance(set, x) <= tol;
}

template <typename Scalar>
Vector<Scalar> project_weighted(const ConvexSet<Scalar>& set, const Matrix<Scalar>& V,
                                const Vector<Scalar>& x, const InnerSolverOptions& opts = {}) {
  require_dim(x.size(), set.dim(), "project_weighted");
  require_dim(V.rows(), set.dim(), "weight matrix");
  detail::require_spd(V, "weight matrix");
  // Affine sets and the whole space have closed forms under any metric.
  if (set.is_whole_space()) return x;
  if (const auto* h = std::get_if<Halfspace<Scalar>>(&set.shape()))
    return detail::weighted_affine<Scalar>(h->a, h->b, true, V, x);
  if (const auto* h = std::get_if<Hyperplane<Scalar>>(&set.shape()))
    return detail::weighted_affine<Scalar>(h->a, h->b, false, V, x);
  const Eigen::Index d = set.dim();
  return detail::weighted_inner_solve<Scalar>(set, Matrix<Scalar>::Identity(d, d),
                                              Vector<Scalar>::Zero(d), V, x, opts);
}

template <typename Scalar>
Vector<Scalar> project_weighted(const TransformedSet<Scalar>& set, const Matrix<Scalar>& V,
                                const Vector<Scalar>& x, const InnerSolverOptions& opts = {}) {
  const Eigen::Index d = set.base.dim();
  require_dim(set.T.rows(), d, "transform");
  require_dim(set.v.size(), d, "translation");
  require_dim(x.size(), d, "project_weighted");
  require_dim(V.rows(), d, "weight matrix");
  detail::require_invertible(set.T);
  detail::require_spd(V, "weight matrix");
  // {T y + v : a'y <= b} = {z : (T^-T a)'z <= b + (T^-T a)'v}
  const auto image = [&](const Vector<Scalar>& a, Scalar b, bool half) {
    const Vector<Scalar> at = set.T.transpose().fullPivLu().solve(a);
    return detail::weighted_affine<Scalar>(at, b + at.dot(set.v), half, V, x);
  };
  if (set.base.is_whole_space()) return x;
  if (const auto* h = std::get_if<Halfspace<Scalar>>(&set.base.shape())) return image(h->a, h->b, true);
  if (const auto* h = std::get_if<Hyperplane<Scalar>>(&set.base.shape())) return image(h->a, h->b, false);
  return detail::weighted_inner_solve(set.base, set.T, set.v, V, x, opts);
}

// Euclidean projection onto T*Omega + v.
template <typename Scalar>
Vector<Scalar> project(const TransformedSet<Scalar>& set, const Vector<Scalar>& x,
                       const InnerSolverOptions& opts = {}) {
  const Eigen::Index d = set.base.dim();
  return project_weighted(set, Matrix<Scalar>(Matrix<Scalar>::Identity(d, d)), x, opts);
}

// T P(T^-1 x). This is the projection onto T*Omega in the metric (T T')^-1; for
// non-normal T that metric differs from (T'T)^-1.
template <typename Scalar>
Vector<Scalar> transformed_project(const Matrix<Scalar>& T, const ConvexSet<Scalar>& set,
                                   const Vector<Scalar>& x) {
  require_dim(T.rows(), set.dim(), "transform");
  require_dim(x.size(), set.dim(), "transformed_project");
  detail::require_invertible(T);
  return T * project(set, Vector<Scalar>(T.fullPivLu().solve(x)));
}

template <typename Scalar>
Vector<Scalar> project_block(const ConvexSet<Scalar>& set, const Vector<Scalar>& x, Eigen::Index n,
                             Eigen::Index d) {
  if (n < 1) throw Error(ErrorCode::DimensionMismatch, "project_block needs n >= 1");
  require_dim(set.dim(), d, "project_block set");
  require_dim(x.size(), n * d, "project_block");
  Vector<Scalar> out = x;
  out.head(d) = project(set, Vector<Scalar>(x.head(d)));
  return out;
}

template <typename Scalar>
Scalar normal_cone_residual(const ConvexSet<Scalar>& set, const Vector<Scalar>& y, const Vector<Scalar>& v) {
  require_dim(v.size(), y.size(), "normal_cone_residual");
  if (distance(set, y) > Scalar(1e-9))
    throw Error(ErrorCode::PointOutsideSet, "normal cone evaluated away from the set");
  return (project(set, Vector<Scalar>(y + v)) - y).norm();
}

namespace detail {

template <typename Scalar>
Vector<Scalar> weighted_inner_solve(const ConvexSet<Scalar>& base, const Matrix<Scalar>& T,
                                    const Vector<Scalar>& v, const Matrix<Scalar>& V,
                                    const Vector<Scalar>& x, const InnerSolverOptions& opts) {
  using std::sqrt;
  Matrix<Scalar> H = T.transpose() * V * T;
  H = (H + H.transpose()) / Scalar(2);
  const Vector<Scalar> rhs = T.transpose() * (V * (x - v));
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(H, Eigen::EigenvaluesOnly);
  const Scalar lmin = es.eigenvalues()(0);
  const Scalar lmax = es.eigenvalues()(es.eigenvalues().size() - 1);
  if (!(lmin > 0)) throw Error(ErrorCode::NotPositiveDefinite, "weighted projection Hessian is singular");

  const Scalar step = Scalar(1) / lmax;
  const Scalar sq = sqrt(lmin / lmax);
  const Scalar momentum = (Scalar(1) - sq) / (Scalar(1) + sq);
  // Distance-to-optimum bound in the V-norm, from the gradient-mapping residual.
  const Scalar bound = (lmax - lmin) / sqrt(lmin);
  const Scalar tol(opts.tol);

  Vector<Scalar> y = project(base, Vector<Scalar>(Vector<Scalar>::Zero(base.dim())));
  Vector<Scalar> w = y;
  for (int k = 0; k < opts.max_iters; ++k) {
    Vector<Scalar> next = project(base, Vector<Scalar>(w - step * (H * w - rhs)));
    const Scalar moved = (w - next).norm();
    if (!next.allFinite()) break;
    if (bound * moved <= tol) return T * next + v;
    w = next + momentum * (next - y);
    y = std::move(next);
  }
  throw Error(ErrorCode::InnerSolverDiverged, "weighted projection did not reach tolerance");
}

}  // namespace detail

}  // namespace plure
