#include "plure/properties.hpp"

#include "plure/certify.hpp"
#include "plure/problems.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <sstream>

namespace plure {

namespace {

using Mat = Matrix<double>;
using Vec = Vector<double>;

Vec gaussian(Eigen::Index d, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, scale);
  Vec v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = g(rng);
  return v;
}

Mat gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat M(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) M(i, j) = g(rng);
  return M;
}

Eigen::Index random_dim(std::mt19937_64& rng) { return std::uniform_int_distribution<Eigen::Index>(1, 5)(rng); }

std::string fmt(const Vec& v) {
  std::ostringstream os;
  os.precision(17);
  os << "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << v(i);
  os << "]";
  return os.str();
}

std::string fmt(const Mat& M) {
  std::ostringstream os;
  os.precision(17);
  os << "[";
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    os << (i ? "; " : "");
    for (Eigen::Index j = 0; j < M.cols(); ++j) os << (j ? " " : "") << M(i, j);
  }
  os << "]";
  return os.str();
}

class Tally {
 public:
  Tally(std::string property, std::string kind) {
    r_.property = std::move(property);
    r_.set_kind = std::move(kind);
    r_.worst_slack = -std::numeric_limits<double>::infinity();
  }

  template <typename WitnessFn>
  void add(double slack, WitnessFn&& witness) {
    ++r_.trials;
    r_.worst_slack = std::max(r_.worst_slack, slack);
    if (slack > 0) {
      if (r_.violations == 0) r_.witness = witness();
      ++r_.violations;
    }
  }

  PropertyResult result() const { return r_; }

 private:
  PropertyResult r_;
};

Mat random_invertible(Eigen::Index d, std::mt19937_64& rng, double max_cond) {
  for (;;) {
    Mat T = gaussian(d, d, rng);
    Eigen::JacobiSVD<Mat> svd(T);
    const auto& s = svd.singularValues();
    if (s(d - 1) > 0 && s(0) / s(d - 1) <= max_cond) return T;
  }
}

Mat random_orthogonal(Eigen::Index d, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Mat> qr(gaussian(d, d, rng));
  return qr.householderQ();
}

std::string set_label(const ConvexSet<double>& s) {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](const auto& sh) {
        using S = std::decay_t<decltype(sh)>;
        if constexpr (std::is_same_v<S, WholeSpace<double>>) {
          os << "whole(d=" << sh.d << ")";
        } else if constexpr (std::is_same_v<S, Box<double>>) {
          os << "box(lo=[";
          for (std::size_t i = 0; i < sh.lo.size(); ++i) {
            os << (i ? " " : "");
            if (sh.lo[i]) os << *sh.lo[i];
            else os << "-inf";
          }
          os << "], hi=[";
          for (std::size_t i = 0; i < sh.hi.size(); ++i) {
            os << (i ? " " : "");
            if (sh.hi[i]) os << *sh.hi[i];
            else os << "inf";
          }
          os << "])";
        } else if constexpr (std::is_same_v<S, Ball<double>>) {
          os << "ball(center=" << fmt(sh.center) << ", radius=" << sh.radius << ")";
        } else if constexpr (std::is_same_v<S, Halfspace<double>>) {
          os << "halfspace(a=" << fmt(sh.a) << ", b=" << sh.b << ")";
        } else {
          os << "hyperplane(a=" << fmt(sh.a) << ", b=" << sh.b << ")";
        }
      },
      s.shape());
  return os.str();
}

}  // namespace

const std::vector<std::string>& set_kinds() {
  static const std::vector<std::string> kinds = {"whole", "box", "ball", "halfspace", "hyperplane"};
  return kinds;
}

ConvexSet<double> random_set(const std::string& kind, Eigen::Index d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (kind == "whole") return ConvexSet<double>::whole_space(d);
  if (kind == "box") {
    std::vector<std::optional<double>> lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (unif(rng) > 0.2) lo[i] = -0.2 - 1.8 * unif(rng);
      if (unif(rng) > 0.2) hi[i] = 0.2 + 1.8 * unif(rng);
    }
    return ConvexSet<double>::box(std::move(lo), std::move(hi));
  }
  if (kind == "ball") return ConvexSet<double>::ball(gaussian(d, 0.5, rng), 0.5 + 1.5 * unif(rng));
  Vec a = gaussian(d, 1.0, rng);
  if (a.norm() < 1e-3) a(0) += 1.0;
  const double b = std::normal_distribution<double>()(rng);
  if (kind == "halfspace") return ConvexSet<double>::halfspace(a, b);
  if (kind == "hyperplane") return ConvexSet<double>::hyperplane(a, b);
  throw Error(ErrorCode::InvalidSet, "unknown set kind '" + kind + "'");
}

std::vector<PropertyResult> projection_properties(const PropertyOptions& opts) {
  std::vector<PropertyResult> out;
  std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  for (const auto& kind : set_kinds()) {
    Tally nonexp("projection-nonexpansive", kind), idem("projection-idempotent", kind);
    for (long t = 0; t < opts.trials; ++t) {
      const Eigen::Index d = random_dim(rng);
      const auto s = random_set(kind, d, rng);
      const Vec x = gaussian(d, 3.0, rng), y = gaussian(d, 3.0, rng);
      const Vec px = project(s, x), py = project(s, y);
      const double gap = (px - py).norm() - (x - y).norm() * (1.0 + 1e-12);
      nonexp.add(gap, [&] { return set_label(s) + " x=" + fmt(x) + " y=" + fmt(y); });
      const double drift = (project(s, px) - px).norm() - 1e-12;
      idem.add(drift, [&] { return set_label(s) + " x=" + fmt(x); });
    }
    out.push_back(nonexp.result());
    out.push_back(idem.result());
  }
  return out;
}

std::vector<PropertyResult> weighted_transform_properties(const PropertyOptions& opts) {
  std::vector<PropertyResult> out;
  std::mt19937_64 rng(opts.seed ^ 0x2545f4914f6cdd1dULL);
  for (const auto& kind : set_kinds()) {
    Tally agree("weighted-transform-equivalence", kind);
    for (long t = 0; t < opts.trials; ++t) {
      const Eigen::Index d = random_dim(rng);
      const auto s = random_set(kind, d, rng);
      const Mat T = random_invertible(d, rng, 1e3);
      const Vec x = gaussian(d, 3.0, rng);
      const Mat Tinv = T.inverse();
      const Mat W = Tinv.transpose() * Tinv;
      const Vec lhs = transformed_project(T, s, x);
      const Vec rhs = project_weighted(TransformedSet<double>{s, T, Vec::Zero(d)}, Mat((W + W.transpose()) / 2.0), x);
      agree.add((lhs - rhs).norm() - 1e-6, [&] { return set_label(s) + " T=" + fmt(T) + " x=" + fmt(x); });
    }
    out.push_back(agree.result());
  }
  // Same comparison in the metric (T'T)^-1. It agrees for normal T only, so general T is
  // expected to produce witnesses; conditioning is capped so the inner solver converges.
  std::mt19937_64 rng2(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  for (const auto& kind : set_kinds()) {
    Tally agree("weighted-transform-gram-metric", kind);
    for (long t = 0; t < opts.trials; ++t) {
      const Eigen::Index d = random_dim(rng2);
      const auto s = random_set(kind, d, rng2);
      const Mat T = random_invertible(d, rng2, 10.0);
      const Vec x = gaussian(d, 3.0, rng2);
      const Mat W = (T.transpose() * T).inverse();
      const Vec lhs = transformed_project(T, s, x);
      const Vec rhs = project_weighted(TransformedSet<double>{s, T, Vec::Zero(d)}, Mat((W + W.transpose()) / 2.0), x);
      agree.add((lhs - rhs).norm() - 1e-6, [&] { return set_label(s) + " T=" + fmt(T) + " x=" + fmt(x); });
    }
    out.push_back(agree.result());
  }
  return out;
}

std::vector<PropertyResult> orthogonal_transform_properties(const PropertyOptions& opts) {
  std::vector<PropertyResult> out;
  std::mt19937_64 rng(opts.seed ^ 0x94d049bb133111ebULL);
  for (const auto& kind : set_kinds()) {
    Tally nonexp("orthogonal-transform-nonexpansive", kind);
    for (long t = 0; t < opts.trials; ++t) {
      const Eigen::Index d = random_dim(rng);
      const auto s = random_set(kind, d, rng);
      const Mat T = random_orthogonal(d, rng);
      const Vec x = gaussian(d, 3.0, rng), y = gaussian(d, 3.0, rng);
      const double gap = (transformed_project(T, s, x) - transformed_project(T, s, y)).norm() -
                         (x - y).norm() * (1.0 + 1e-12) - 1e-12;
      nonexp.add(gap, [&] { return set_label(s) + " T=" + fmt(T) + " x=" + fmt(x) + " y=" + fmt(y); });
    }
    out.push_back(nonexp.result());
  }
  return out;
}

std::vector<PropertyResult> scaling_properties(const PropertyOptions& opts) {
  std::vector<PropertyResult> out;
  std::mt19937_64 rng(opts.seed ^ 0xbf58476d1ce4e5b9ULL);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const auto& kind : set_kinds()) {
    Tally agree("scaled-transform-equivalence", kind), commute("scaled-transform-commutes", kind);
    for (long t = 0; t < opts.trials; ++t) {
      const Eigen::Index d = random_dim(rng);
      const auto s = random_set(kind, d, rng);
      double tau = std::exp(std::log(0.1) + unif(rng) * std::log(100.0));
      if (unif(rng) < 0.5) tau = -tau;
      const Mat T = tau * Mat::Identity(d, d);
      const TransformedSet<double> scaled{s, T, Vec::Zero(d)};
      const Vec x = gaussian(d, 3.0, rng);
      const Vec a = transformed_project(T, s, x);
      const Vec b = project(scaled, x);
      agree.add((a - b).norm() - 1e-9, [&] { return set_label(s) + " tau=" + std::to_string(tau) + " x=" + fmt(x); });
      const Vec c = T * project(s, x);
      const Vec e = project(scaled, Vec(T * x));
      commute.add((c - e).norm() - 1e-9, [&] { return set_label(s) + " tau=" + std::to_string(tau) + " x=" + fmt(x); });
    }
    out.push_back(agree.result());
    out.push_back(commute.result());
  }
  return out;
}

std::vector<PropertyResult> translation_properties(const PropertyOptions& opts) {
  std::vector<PropertyResult> out;
  std::mt19937_64 rng(opts.seed ^ 0xd6e8feb86659fd93ULL);
  for (const auto& kind : set_kinds()) {
    Tally agree("translation-equivalence", kind);
    for (long t = 0; t < opts.trials; ++t) {
      const Eigen::Index d = random_dim(rng);
      const auto s = random_set(kind, d, rng);
      const Vec x = gaussian(d, 3.0, rng), v = gaussian(d, 2.0, rng);
      const Vec a = project(s, x) + v;
      const Vec b = project(TransformedSet<double>{s, Mat::Identity(d, d), v}, Vec(x + v));
      agree.add((a - b).norm() - 1e-12, [&] { return set_label(s) + " x=" + fmt(x) + " v=" + fmt(v); });
    }
    out.push_back(agree.result());
  }
  return out;
}

std::vector<PropertyResult> block_transform_properties(const PropertyOptions& opts) {
  std::vector<PropertyResult> out;
  std::mt19937_64 rng(opts.seed ^ 0x8cb92ba72f3d8dd7ULL);
  const long per_transform = std::max<long>(1, (opts.trials + opts.transforms - 1) / opts.transforms);
  for (const auto& kind : set_kinds()) {
    Tally nonexp("block-transform-nonexpansive", kind), idem("block-transform-idempotent", kind);
    for (int tr = 0; tr < opts.transforms; ++tr) {
      const Eigen::Index blocks = std::uniform_int_distribution<Eigen::Index>(1, 3)(rng);
      const Eigen::Index d = random_dim(rng);
      const Mat G = gaussian(blocks, blocks, rng);
      const Mat P = G * G.transpose() + 0.1 * Mat::Identity(blocks, blocks);
      const Mat Tfull = kron_identity(lyapunov_factor(P), d);
      const Eigen::FullPivLU<Mat> lu(Tfull);
      const auto s = random_set(kind, d, rng);
      const auto map = [&](const Vec& x) -> Vec {
        return Tfull * project_block(s, Vec(lu.solve(x)), blocks, d);
      };
      for (long t = 0; t < per_transform; ++t) {
        const Vec x = gaussian(blocks * d, 3.0, rng), y = gaussian(blocks * d, 3.0, rng);
        const Vec fx = map(x), fy = map(y);
        const double gap = (fx - fy).norm() - (x - y).norm() * (1.0 + 1e-12) - 1e-12;
        nonexp.add(gap, [&] {
          return set_label(s) + " P=" + fmt(P) + " x=" + fmt(x) + " y=" + fmt(y) +
                 " ratio=" + std::to_string((fx - fy).norm() / (x - y).norm());
        });
        const double drift = (map(fx) - fx).norm() - 1e-9 * (1.0 + fx.norm());
        idem.add(drift, [&] { return set_label(s) + " P=" + fmt(P) + " x=" + fmt(x); });
      }
    }
    out.push_back(nonexp.result());
    out.push_back(idem.result());
  }
  return out;
}

std::vector<PropertyResult> objective_properties(const PropertyOptions& opts) {
  std::vector<PropertyResult> out;
  std::mt19937_64 rng(opts.seed ^ 0x632be59bd9b4e019ULL);
  Tally slope("slope-restriction", "quadratic"), sector("sector-inequalities", "quadratic");
  const int problems = 20;
  const long per = std::max<long>(1, opts.trials / problems);
  for (int i = 0; i < problems; ++i) {
    const Eigen::Index d = std::uniform_int_distribution<Eigen::Index>(2, 10)(rng);
    // L stays <= 1e3: the absolute 1e-9 |dx|^2 slack sits below double rounding of
    // (g - m dx)'(g - L dx) once L grows past a few thousand.
    const double m = std::exp(std::uniform_real_distribution<double>(std::log(0.1), 0.0)(rng));
    const double kappa = std::exp(std::uniform_real_distribution<double>(0.0, std::log(1e3))(rng));
    const auto q = random_quadratic(d, m, m * kappa, rng());
    const auto rep = slope_restriction_check(as_smooth(q), static_cast<int>(per), rng());
    for (int k = 0; k < rep.samples; ++k) slope.add(-1.0, [] { return std::string(); });
    if (!rep.passed) slope.add(1.0, [&] { return "F=" + fmt(q.F()) + " x=" + fmt(rep.witness->first); });
    const auto [mm, LL] = sector_constants(q);
    for (long k = 0; k < per; ++k) {
      const Vec x = gaussian(d, 10.0, rng), y = gaussian(d, 10.0, rng);
      const Vec dx = x - y, dg = q.gradient(x) - q.gradient(y);
      const double inner = dg.dot(dx), n2 = dx.squaredNorm();
      const double slack = std::max(mm * n2 - inner, inner - LL * n2) - 1e-9 * n2;
      sector.add(slack, [&] { return "F=" + fmt(q.F()) + " x=" + fmt(x) + " y=" + fmt(y); });
    }
  }
  out.push_back(slope.result());
  out.push_back(sector.result());
  return out;
}

std::vector<PropertyResult> run_property_suite(const PropertyOptions& opts) {
  if (opts.trials < 1 || opts.transforms < 1)
    throw Error(ErrorCode::ConfigError, "property counts must be >= 1");
  std::vector<PropertyResult> all;
  for (auto* suite : {projection_properties, weighted_transform_properties, orthogonal_transform_properties,
                      scaling_properties, translation_properties, block_transform_properties,
                      objective_properties}) {
    auto part = suite(opts);
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

}  // namespace plure
