#include "plure/sets.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace plure;
using V = Vector<double>;
using M = Matrix<double>;

namespace {

V vec(std::initializer_list<double> v) {
  V out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

M random_matrix(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  M A(d, d);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
  return A;
}

V random_vector(Eigen::Index d, std::mt19937_64& rng, double scale = 3.0) {
  std::normal_distribution<double> g;
  V v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = scale * g(rng);
  return v;
}

}  // namespace

TEST(Project, Ball) {
  const auto B = ConvexSet<double>::ball(V::Zero(2), 1.0);
  EXPECT_TRUE(project(B, vec({2, 0})).isApprox(vec({1, 0})));
  EXPECT_TRUE(project(B, vec({0.3, -0.4})).isApprox(vec({0.3, -0.4})));
}

TEST(Project, Box) {
  const auto B = ConvexSet<double>::box(vec({-1, -1}), vec({1, 1}));
  EXPECT_TRUE(project(B, vec({0.5, 3})).isApprox(vec({0.5, 1})));
}

TEST(Project, BoxWithUnboundedSide) {
  const double inf = std::numeric_limits<double>::infinity();
  const auto B = ConvexSet<double>::box(vec({-1, -inf}), vec({inf, 2}));
  EXPECT_TRUE(project(B, vec({-5, -100})).isApprox(vec({-1, -100})));
  EXPECT_TRUE(project(B, vec({50, 7})).isApprox(vec({50, 2})));
}

TEST(Project, Halfspace) {
  const auto H = ConvexSet<double>::halfspace(vec({1, 0}), 0.0);
  EXPECT_TRUE(project(H, vec({2, 5})).isApprox(vec({0, 5})));
  EXPECT_TRUE(project(H, vec({-2, 5})).isApprox(vec({-2, 5})));
}

TEST(Project, Hyperplane) {
  const auto H = ConvexSet<double>::hyperplane(vec({1, 1}), 1.0);
  EXPECT_TRUE(project(H, vec({0, 0})).isApprox(vec({0.5, 0.5})));
}

TEST(Project, DimensionMismatch) {
  const auto B = ConvexSet<double>::ball(V::Zero(2), 1.0);
  try {
    project(B, V(V::Zero(3)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(Project, InvalidSets) {
  EXPECT_THROW(ConvexSet<double>::ball(V::Zero(2), 0.0), Error);
  EXPECT_THROW(ConvexSet<double>::box(vec({1}), vec({0})), Error);
  EXPECT_THROW(ConvexSet<double>::halfspace(V::Zero(2), 1.0), Error);
}

TEST(Project, IdempotentAndNonexpansive) {
  std::mt19937_64 rng(3);
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<ConvexSet<double>> sets = {
      ConvexSet<double>::ball(vec({0.5, -1, 2}), 1.5), ConvexSet<double>::box(vec({-1, -inf, 0}), vec({1, 1, inf})),
      ConvexSet<double>::halfspace(vec({1, 2, -1}), 0.5), ConvexSet<double>::hyperplane(vec({0, 1, 1}), -2)};
  for (const auto& S : sets)
    for (int t = 0; t < 200; ++t) {
      const V x = random_vector(3, rng), y = random_vector(3, rng);
      const V px = project(S, x), py = project(S, y);
      EXPECT_LE((project(S, px) - px).norm(), 1e-12);
      EXPECT_LE((px - py).norm(), (x - y).norm() + 1e-12);
      // Variational inequality at the projection.
      const V z = project(S, random_vector(3, rng));
      EXPECT_LE((x - px).dot(z - px), 1e-9);
    }
}

TEST(ProjectWeighted, IdentityAndScaledIdentity) {
  std::mt19937_64 rng(11);
  const auto B = ConvexSet<double>::ball(V::Zero(3), 1.0);
  const auto X = ConvexSet<double>::box(vec({-1, -1, -1}), vec({1, 0.5, 2}));
  for (const auto& S : {B, X})
    for (double tau : {1.0, 0.3, 7.0})
      for (int t = 0; t < 20; ++t) {
        const V x = random_vector(3, rng);
        const M W = tau * tau * M::Identity(3, 3);
        EXPECT_LE((project_weighted(S, W, x) - project(S, x)).norm(), 1e-9);
      }
}

// min (y - x)' V (y - x) over the unit ball, V = diag(4, 1), x = (2, 2).
TEST(ProjectWeighted, BallAgainstBruteForceAndKkt) {
  const V x = vec({2, 2});
  const M W = vec({4, 1}).asDiagonal();
  const auto cost = [&](double th) {
    const V y = vec({std::cos(th), std::sin(th)});
    return (y - x).dot(W * (y - x));
  };
  // Dense grid over the boundary, then golden-section refinement around the best cell.
  const int N = 200000;
  double best = 0, best_c = cost(0);
  for (int i = 1; i < N; ++i) {
    const double th = 2 * M_PI * i / N;
    const double c = cost(th);
    if (c < best_c) best_c = c, best = th;
  }
  double lo = best - 2 * M_PI / N, hi = best + 2 * M_PI / N;
  const double g = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 200; ++it) {
    const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
    (cost(a) < cost(b) ? hi : lo) = (cost(a) < cost(b) ? b : a);
  }
  const V brute = vec({std::cos((lo + hi) / 2), std::sin((lo + hi) / 2)});

  // KKT: y = (V + mu I)^-1 V x with |y| = 1.
  double mlo = 0, mhi = 100;
  for (int it = 0; it < 200; ++it) {
    const double mu = (mlo + mhi) / 2;
    const V y = vec({8 / (4 + mu), 2 / (1 + mu)});
    (y.norm() > 1 ? mlo : mhi) = mu;
  }
  const double mu = (mlo + mhi) / 2;
  const V kkt = vec({8 / (4 + mu), 2 / (1 + mu)});
  EXPECT_LE((brute - kkt).norm(), 1e-7);

  const V got = project_weighted(ConvexSet<double>::ball(V::Zero(2), 1.0), W, x);
  EXPECT_LE((got - kkt).norm(), 1e-7);
  EXPECT_LE((got - brute).norm(), 1e-7);
}

TEST(ProjectWeighted, HalfspaceClosedFormMatchesOptimality) {
  std::mt19937_64 rng(5);
  const auto H = ConvexSet<double>::halfspace(vec({1, -2, 0.5}), 0.3);
  for (int t = 0; t < 50; ++t) {
    const M A = random_matrix(3, rng);
    const M W = A * A.transpose() + 0.1 * M::Identity(3, 3);
    const V x = random_vector(3, rng);
    const V y = project_weighted(H, W, x);
    EXPECT_TRUE(contains(H, y, 1e-9));
    // Optimality: W(x - y) is a nonnegative multiple of a when the constraint is active.
    const V g = W * (x - y);
    if (g.norm() > 1e-9) {
      EXPECT_NEAR(std::abs(g.normalized().dot(vec({1, -2, 0.5}).normalized())), 1.0, 1e-9);
      EXPECT_GE(g.dot(vec({1, -2, 0.5})), 0);
    }
  }
}

TEST(ProjectWeighted, RejectsIndefiniteWeight) {
  const auto B = ConvexSet<double>::ball(V::Zero(2), 1.0);
  const M W = vec({1, -1}).asDiagonal();
  try {
    project_weighted(B, W, vec({3, 3}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
  }
}

TEST(TransformedProject, IdentityTransform) {
  const auto B = ConvexSet<double>::ball(V::Zero(2), 1.0);
  const V x = vec({3, -4});
  EXPECT_TRUE(transformed_project(M(M::Identity(2, 2)), B, x).isApprox(project(B, x)));
}

TEST(TransformedProject, OrthogonalIsNonexpansive) {
  std::mt19937_64 rng(21);
  const auto B = ConvexSet<double>::ball(V::Zero(3), 1.0);
  for (int t = 0; t < 200; ++t) {
    Eigen::HouseholderQR<M> qr(random_matrix(3, rng));
    const M T = qr.householderQ();
    const V x = random_vector(3, rng), y = random_vector(3, rng);
    EXPECT_LE((transformed_project(T, B, x) - transformed_project(T, B, y)).norm(), (x - y).norm() + 1e-12);
  }
}

TEST(TransformedProject, IllConditionedBoundedByConditionNumber) {
  const M T = vec({3, 0.1}).asDiagonal();
  const auto B = ConvexSet<double>::ball(V::Zero(2), 1.0);
  std::mt19937_64 rng(8);
  double worst = 0;
  for (int t = 0; t < 20000; ++t) {
    const V x = random_vector(2, rng, 2.0), y = random_vector(2, rng, 2.0);
    const double r = (transformed_project(T, B, x) - transformed_project(T, B, y)).norm() / (x - y).norm();
    worst = std::max(worst, r);
    EXPECT_LE(r, 30.0 + 1e-9);
  }
  EXPECT_GT(worst, 1.0);
}

TEST(TransformedProject, IsProjectionInMetricOfTTranspose) {
  std::mt19937_64 rng(13);
  const auto B = ConvexSet<double>::ball(vec({0.2, 0.1}), 1.0);
  for (int t = 0; t < 20; ++t) {
    M T = random_matrix(2, rng) + 2 * M::Identity(2, 2);
    const V x = random_vector(2, rng);
    const M W = (T * T.transpose()).inverse();
    const TransformedSet<double> TS{B, T, V::Zero(2)};
    EXPECT_LE((transformed_project(T, B, x) - project_weighted(TS, W, x)).norm(), 1e-6);
  }
}

TEST(TransformedProject, SingularTransform) {
  const auto B = ConvexSet<double>::ball(V::Zero(2), 1.0);
  M T(2, 2);
  T << 1, 2, 2, 4;
  try {
    transformed_project(T, B, vec({1, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularTransform);
  }
}

TEST(ProjectBlock, Examples) {
  const auto B = ConvexSet<double>::ball(V::Zero(2), 1.0);
  EXPECT_TRUE(project_block(B, vec({2, 0, 5, 7}), 2, 2).isApprox(vec({1, 0, 5, 7})));
  EXPECT_TRUE(project_block(B, vec({0, 3}), 1, 2).isApprox(project(B, vec({0, 3}))));
  const auto R = ConvexSet<double>::whole_space(2);
  const V x = vec({4, -3, 1, 9, 2, 2});
  EXPECT_EQ(project_block(R, x, 3, 2), x);
}

TEST(NormalCone, Examples) {
  const auto B = ConvexSet<double>::ball(V::Zero(2), 1.0);
  EXPECT_EQ(normal_cone_residual(B, vec({0.2, 0.1}), V(V::Zero(2))), 0.0);
  EXPECT_NEAR(normal_cone_residual(B, vec({1, 0}), vec({3, 0})), 0.0, 1e-15);
  const double want = (vec({1, 1}) / std::sqrt(2.0) - vec({1, 0})).norm();
  EXPECT_NEAR(normal_cone_residual(B, vec({1, 0}), vec({0, 1})), want, 1e-12);
  EXPECT_NEAR(want, 0.7654, 1e-4);
  EXPECT_THROW(normal_cone_residual(B, vec({2, 0}), vec({1, 0})), Error);
}

TEST(Cast, LongDoubleRoundTrip) {
  const auto B = ConvexSet<double>::box(vec({-1, 0}), vec({1, 2}));
  const auto L = B.cast<long double>();
  EXPECT_EQ(L.kind(), "box");
  const Vector<long double> p = project(L, Vector<long double>(vec({5, -5}).cast<long double>()));
  EXPECT_EQ(static_cast<double>(p(0)), 1.0);
  EXPECT_EQ(static_cast<double>(p(1)), 0.0);
}
