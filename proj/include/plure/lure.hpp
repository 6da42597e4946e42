#pragma once

#include "plure/sets.hpp"
#include "plure/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <cmath>
#include <complex>

namespace plure {

// xi+ = A xi + B u, y = C xi + D u, all blocks d-dimensional (full matrices are K (x) I_d).
template <typename Scalar>
struct ReducedSystem {
  Matrix<Scalar> A;
  Vector<Scalar> B;
  RowVector<Scalar> C;
  Scalar D{};

  Eigen::Index n() const { return A.rows(); }
};

// Realisation whose first state block is the output y; the input enters only that block.
template <typename Scalar>
struct OutputForm {
  Scalar a1{};
  RowVector<Scalar> A2;
  Vector<Scalar> A3;
  Matrix<Scalar> A4;
  Scalar c1{};

  Eigen::Index n() const { return A4.rows() + 1; }

  Matrix<Scalar> A_tilde() const {
    const Eigen::Index n = this->n();
    Matrix<Scalar> A(n, n);
    A(0, 0) = a1;
    A.block(0, 1, 1, n - 1) = A2;
    A.block(1, 0, n - 1, 1) = A3;
    A.bottomRightCorner(n - 1, n - 1) = A4;
    return A;
  }

  Vector<Scalar> B_tilde() const {
    Vector<Scalar> B = Vector<Scalar>::Zero(n());
    B(0) = c1;
    return B;
  }

  RowVector<Scalar> C_tilde() const {
    RowVector<Scalar> C = RowVector<Scalar>::Zero(n());
    C(0) = Scalar(1);
    return C;
  }

  template <typename To>
  OutputForm<To> cast() const {
    return {static_cast<To>(a1), A2.template cast<To>(), A3.template cast<To>(), A4.template cast<To>(),
            static_cast<To>(c1)};
  }
};

template <typename Scalar>
struct AlgorithmState {
  Vector<Scalar> y;
  Vector<Scalar> xi2;

  template <typename To>
  AlgorithmState<To> cast() const {
    return {y.template cast<To>(), xi2.template cast<To>()};
  }
};

template <typename Scalar>
OutputForm<Scalar> make_output_form(Scalar a1, RowVector<Scalar> A2, Vector<Scalar> A3, Matrix<Scalar> A4,
                                    Scalar c1) {
  const Eigen::Index m = A4.rows();
  if (A4.cols() != m || A2.size() != m || A3.size() != m)
    throw Error(ErrorCode::DimensionMismatch, "output form blocks are inconsistent");
  if (!(c1 < 0)) throw Error(ErrorCode::InvalidOutputForm, "input gain c1 must be negative");
  OutputForm<Scalar> f{a1, std::move(A2), std::move(A3), std::move(A4), c1};
  if (!f.A_tilde().allFinite()) throw Error(ErrorCode::InvalidOutputForm, "non-finite entries");
  return f;
}

template <typename Scalar>
bool has_unit_eigenvalue(const OutputForm<Scalar>& f, double tol = 1e-9) {
  Eigen::EigenSolver<Matrix<double>> es(f.A_tilde().template cast<double>(), false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()(i) - std::complex<double>(1.0, 0.0)) <= tol) return true;
  return false;
}

// Changes coordinates so that the output is the first state block. With B = [b1; 0] the
// transform is [[C1, C2], [0, I]]; otherwise the trailing rows span the orthogonal
// complement of B, which keeps the input out of the trailing blocks.
template <typename Scalar>
OutputForm<Scalar> to_output_form(const ReducedSystem<Scalar>& sys) {
  const Eigen::Index n = sys.n();
  if (n < 1 || sys.A.cols() != n) throw Error(ErrorCode::DimensionMismatch, "A must be square");
  require_dim(sys.B.size(), n, "B");
  require_dim(sys.C.size(), n, "C");
  if (sys.D != Scalar(0)) throw Error(ErrorCode::FeedthroughPresent, "D must be zero");
  if (!sys.A.allFinite() || !sys.B.allFinite() || !sys.C.allFinite())
    throw Error(ErrorCode::InvalidOutputForm, "non-finite system matrices");

  Matrix<Scalar> T = Matrix<Scalar>::Zero(n, n);
  T.row(0) = sys.C;
  if (n > 1) {
    if (sys.B.tail(n - 1).isZero(0)) {
      T.bottomRightCorner(n - 1, n - 1).setIdentity();
    } else {
      Eigen::HouseholderQR<Matrix<Scalar>> qr(Matrix<Scalar>(sys.B));
      Matrix<Scalar> Q = qr.householderQ();
      T.bottomRows(n - 1) = Q.rightCols(n - 1).transpose();
    }
  }
  detail::require_invertible(T);
  Eigen::FullPivLU<Matrix<Scalar>> lu(T);
  const Matrix<Scalar> At = T * sys.A * lu.inverse();
  const Vector<Scalar> Bt = T * sys.B;
  const Scalar scale = std::max<Scalar>(Scalar(1), Bt.cwiseAbs().maxCoeff());
  if (n > 1 && Bt.tail(n - 1).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale)
    throw Error(ErrorCode::SingularTransform, "input leaks into trailing blocks");
  return make_output_form<Scalar>(At(0, 0), At.block(0, 1, 1, n - 1), At.block(1, 0, n - 1, 1),
                                  At.bottomRightCorner(n - 1, n - 1), Bt(0));
}

template <typename Scalar>
void check_state(const OutputForm<Scalar>& f, const AlgorithmState<Scalar>& s, Eigen::Index d) {
  require_dim(s.y.size(), d, "state y");
  require_dim(s.xi2.size(), (f.n() - 1) * d, "state xi2");
}

template <typename Scalar>
Eigen::Map<const BlockMatrix<Scalar>> blocks(const Vector<Scalar>& v, Eigen::Index rows, Eigen::Index d) {
  return {v.data(), rows, d};
}

// Linear part of one iteration given the gradient u at y; y is not projected.
template <typename Scalar>
AlgorithmState<Scalar> half_step(const OutputForm<Scalar>& f, const AlgorithmState<Scalar>& s,
                                 const Vector<Scalar>& u) {
  const Eigen::Index d = s.y.size();
  const Eigen::Index m = f.n() - 1;
  check_state(f, s, d);
  require_dim(u.size(), d, "gradient");
  AlgorithmState<Scalar> out;
  out.y = f.a1 * s.y + f.c1 * u;
  out.xi2.resize(m * d);
  if (m > 0) {
    const auto X2 = blocks(s.xi2, m, d);
    out.y.noalias() += (f.A2 * X2).transpose();
    Eigen::Map<BlockMatrix<Scalar>> next(out.xi2.data(), m, d);
    next.noalias() = f.A3 * s.y.transpose();
    next.noalias() += f.A4 * X2;
  }
  return out;
}

template <typename Scalar>
AlgorithmState<Scalar> step_unconstrained(const OutputForm<Scalar>& f, const GradientOracle<Scalar>& grad,
                                          const AlgorithmState<Scalar>& s) {
  return half_step(f, s, grad(s.y));
}

template <typename Scalar>
AlgorithmState<Scalar> step_projected(const OutputForm<Scalar>& f, const ConvexSet<Scalar>& set,
                                      const GradientOracle<Scalar>& grad, const AlgorithmState<Scalar>& s) {
  require_dim(s.y.size(), set.dim(), "state vs set");
  AlgorithmState<Scalar> out = half_step(f, s, grad(s.y));
  out.y = project(set, out.y);
  return out;
}

template <typename Scalar>
Scalar fixed_point_residual(const OutputForm<Scalar>& f, const ConvexSet<Scalar>& set,
                            const GradientOracle<Scalar>& grad, const Vector<Scalar>& y) {
  require_dim(y.size(), set.dim(), "fixed_point_residual");
  if (distance(set, y) > Scalar(1e-9)) throw Error(ErrorCode::PointOutsideSet, "residual needs a feasible y");
  return (project(set, Vector<Scalar>(y + f.c1 * grad(y))) - y).norm();
}

// Non-output blocks of the equilibrium: (I - A4) xi2 = A3 y.
template <typename Scalar>
Vector<Scalar> equilibrium_xi2(const OutputForm<Scalar>& f, const Vector<Scalar>& y_eq) {
  const Eigen::Index m = f.n() - 1;
  const Eigen::Index d = y_eq.size();
  Vector<Scalar> out(m * d);
  if (m == 0) return out;
  const Matrix<Scalar> IA4 = Matrix<Scalar>::Identity(m, m) - f.A4;
  Eigen::Map<BlockMatrix<Scalar>> X(out.data(), m, d);
  X = IA4.fullPivLu().solve(Matrix<Scalar>(f.A3 * y_eq.transpose()));
  return out;
}

// xi_0 = 0 mapped to output coordinates, with y moved onto the set.
template <typename Scalar>
AlgorithmState<Scalar> default_initial_state(const OutputForm<Scalar>& f, const ConvexSet<Scalar>& set) {
  const Eigen::Index d = set.dim();
  return {project(set, Vector<Scalar>(Vector<Scalar>::Zero(d))), Vector<Scalar>::Zero((f.n() - 1) * d)};
}

template <typename Scalar>
struct FixedPointRun {
  AlgorithmState<Scalar> state;
  long iterations = 0;
  bool converged = false;
};

// Iterates until successive states differ by at most tol.
template <typename Scalar>
FixedPointRun<Scalar> run_to_fixed_point(const OutputForm<Scalar>& f, const ConvexSet<Scalar>& set,
                                         const GradientOracle<Scalar>& grad, AlgorithmState<Scalar> x0,
                                         long max_iters = 200000, Scalar tol = Scalar(1e-12)) {
  FixedPointRun<Scalar> run{std::move(x0), 0, false};
  for (long k = 0; k < max_iters; ++k) {
    AlgorithmState<Scalar> next = step_projected(f, set, grad, run.state);
    if (!next.y.allFinite() || !next.xi2.allFinite())
      throw Error(ErrorCode::NonFiniteIterate, "iterate became non-finite at step " + std::to_string(k + 1));
    using std::sqrt;
    const Scalar delta = sqrt((next.y - run.state.y).squaredNorm() + (next.xi2 - run.state.xi2).squaredNorm());
    run.state = std::move(next);
    run.iterations = k + 1;
    if (delta <= tol) {
      run.converged = true;
      break;
    }
  }
  return run;
}

}  // namespace plure
