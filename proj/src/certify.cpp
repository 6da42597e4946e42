#include "plure/certify.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <limits>
#include <sstream>

namespace plure {

namespace {

using Mat = Matrix<double>;
using Vec = Vector<double>;

double max_eig(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

double min_eig(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

void check_sector(double m, double L) {
  if (!(m > 0) || !(L >= m) || !std::isfinite(L)) throw Error(ErrorCode::InvalidSector, "need 0 < m <= L");
}

Mat sector_form(double m, double L) {
  Mat M(2, 2);
  M << -2 * m * L, m + L, m + L, -2;
  return M;
}

}  // namespace

std::string multiplier_name(const MultiplierSpec& spec) {
  return std::holds_alternative<StaticSector>(spec) ? "static_sector" : "weighted_off_by_one";
}

std::string VerificationReport::summary() const {
  std::ostringstream os;
  os.precision(6);
  os << (passed ? "pass" : "fail") << " (P min eig " << p_min_eig << " vs " << p_threshold << "; LMI max eig "
     << lmi_max_eig << " vs " << lmi_threshold << "; min lambda " << lambda_min << ")";
  return os.str();
}

FilterRealization build_filter(const MultiplierSpec& spec, double m, double L) {
  check_sector(m, L);
  FilterRealization f;
  if (std::holds_alternative<StaticSector>(spec)) {
    f.A_psi = Mat::Zero(0, 0);
    f.B_psi_y = Vec::Zero(0);
    f.B_psi_u = Vec::Zero(0);
    f.C_psi = Mat::Zero(2, 0);
    f.D_psi_y = Vec::Unit(2, 0);
    f.D_psi_u = Vec::Unit(2, 1);
    f.M_basis = {sector_form(m, L)};
    return f;
  }
  const double w = std::get<WeightedOffByOne>(spec).rho_weight;
  if (!(w > 0 && w <= 1)) throw Error(ErrorCode::InvalidArgument, "rho_weight must lie in (0, 1]");
  f.A_psi = Mat::Zero(1, 1);
  f.B_psi_y = Vec::Constant(1, 1.0);
  f.B_psi_u = Vec::Constant(1, -1.0 / L);
  f.C_psi = Mat::Zero(3, 1);
  f.C_psi(2, 0) = 1.0;
  f.D_psi_y = Vec::Unit(3, 0);
  f.D_psi_u = Vec::Unit(3, 1);
  Mat M1 = Mat::Zero(3, 3);
  M1.topLeftCorner(2, 2) = sector_form(m, L);
  Mat M2 = M1;
  M2(0, 2) = M2(2, 0) = w * m * L;
  M2(1, 2) = M2(2, 1) = -w * L;
  f.M_basis = {M1, M2};
  return f;
}

AugmentedSystem build_augmented(const OutputForm<double>& form, const FilterRealization& filt) {
  const Eigen::Index n = form.n();
  const Eigen::Index p = filt.p();
  const Eigen::Index q = filt.q();
  if (filt.A_psi.cols() != p || filt.B_psi_y.size() != p || filt.B_psi_u.size() != p || filt.C_psi.cols() != p ||
      filt.D_psi_y.size() != q || filt.D_psi_u.size() != q)
    throw Error(ErrorCode::DimensionMismatch, "filter realisation blocks are inconsistent");
  for (const auto& M : filt.M_basis)
    if (M.rows() != q || M.cols() != q) throw Error(ErrorCode::DimensionMismatch, "multiplier basis size");

  const RowVector<double> C = form.C_tilde();
  AugmentedSystem aug;
  aug.n = n;
  aug.p = p;
  aug.A_hat = Mat::Zero(n + p, n + p);
  aug.A_hat.topLeftCorner(n, n) = form.A_tilde();
  aug.A_hat.bottomLeftCorner(p, n) = filt.B_psi_y * C;
  aug.A_hat.bottomRightCorner(p, p) = filt.A_psi;
  // D tilde is structurally zero, so the feedthrough corrections vanish.
  aug.B_hat.resize(n + p);
  aug.B_hat << form.B_tilde(), filt.B_psi_u;
  aug.C_hat.resize(q, n + p);
  aug.C_hat << filt.D_psi_y * C, filt.C_psi;
  aug.D_hat = filt.D_psi_u;
  aug.M_basis = filt.M_basis;
  return aug;
}

Matrix<double> lmi_matrix(const AugmentedSystem& aug, const Matrix<double>& P, const Vector<double>& lambdas,
                          double rho) {
  const Eigen::Index N = aug.size();
  require_dim(P.rows(), N, "P rows");
  require_dim(P.cols(), N, "P cols");
  require_dim(lambdas.size(), static_cast<Eigen::Index>(aug.M_basis.size()), "lambdas");
  if ((lambdas.array() < 0).any()) throw Error(ErrorCode::NegativeLambda, "multiplier weights must be >= 0");

  Mat AB(N, N + 1);
  AB << aug.A_hat, aug.B_hat;
  Mat CD(aug.C_hat.rows(), N + 1);
  CD << aug.C_hat, aug.D_hat;
  Mat out = AB.transpose() * P * AB;
  out.topLeftCorner(N, N) -= rho * rho * P;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) out += lambdas(i) * (CD.transpose() * aug.M_basis[i] * CD);
  return (out + out.transpose()) / 2.0;
}

VerificationReport verify_certificate(const AugmentedSystem& aug, const Certificate& cert) {
  VerificationReport r;
  const Eigen::Index N = aug.size();
  if (cert.P.rows() != N || cert.P.cols() != N ||
      cert.lambdas.size() != static_cast<Eigen::Index>(aug.M_basis.size()) || !cert.P.allFinite() ||
      !cert.lambdas.allFinite() || !std::isfinite(cert.rho))
    return r;
  const Mat P = (cert.P + cert.P.transpose()) / 2.0;
  r.p_min_eig = min_eig(P);
  r.p_threshold = 1e-9 * P.trace() / static_cast<double>(N);
  r.p_ok = r.p_min_eig >= r.p_threshold && r.p_min_eig > 0;
  r.lambda_min = cert.lambdas.size() ? cert.lambdas.minCoeff() : 0.0;
  r.lambda_ok = r.lambda_min >= 0;
  if (r.lambda_ok) {
    r.lmi_max_eig = max_eig(lmi_matrix(aug, P, cert.lambdas, cert.rho));
    Eigen::SelfAdjointEigenSolver<Mat> es(P, Eigen::EigenvaluesOnly);
    r.lmi_threshold = 1e-9 * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff());
    r.lmi_ok = r.lmi_max_eig <= r.lmi_threshold;
  }
  r.passed = r.p_ok && r.lmi_ok && r.lambda_ok;
  return r;
}

namespace {

// Affine matrix family C(z) = C0 + sum_j z_j C_j, used as a barrier term -log det C(z).
struct AffineBlock {
  Mat C0;
  std::vector<Mat> Cj;

  Mat eval(const Vec& z) const {
    Mat out = C0;
    for (std::size_t j = 0; j < Cj.size(); ++j)
      if (z(static_cast<Eigen::Index>(j)) != 0.0) out += z(static_cast<Eigen::Index>(j)) * Cj[j];
    return out;
  }
};

struct BarrierProblem {
  std::vector<AffineBlock> blocks;
  std::vector<Eigen::Index> positive;  // coordinates constrained to be > 0
  Vec cost;                           // coefficient of the objective (t)
  Vec eq;                             // equality row eq'z = 1
  double barrier_size = 0;            // total barrier parameter

  // Returns +inf outside the domain.
  double value(const Vec& z, double s) const {
    double v = s * cost.dot(z);
    for (const auto& b : blocks) {
      Eigen::LLT<Mat> llt(b.eval(z));
      if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
      const Mat& Lc = llt.matrixL();
      for (Eigen::Index i = 0; i < Lc.rows(); ++i) {
        if (!(Lc(i, i) > 0)) return std::numeric_limits<double>::infinity();
        v -= 2.0 * std::log(Lc(i, i));
      }
    }
    for (auto i : positive) {
      if (!(z(i) > 0)) return std::numeric_limits<double>::infinity();
      v -= std::log(z(i));
    }
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  }

  void derivatives(const Vec& z, double s, Vec& g, Mat& H) const {
    const Eigen::Index nz = z.size();
    g = s * cost;
    H = Mat::Zero(nz, nz);
    for (const auto& b : blocks) {
      Eigen::LLT<Mat> llt(b.eval(z));
      std::vector<Mat> scaled(b.Cj.size());
      for (std::size_t j = 0; j < b.Cj.size(); ++j) {
        Mat t = llt.matrixL().solve(b.Cj[j]);
        scaled[j] = llt.matrixL().solve(Mat(t.transpose()));
      }
      for (std::size_t j = 0; j < b.Cj.size(); ++j) {
        if (b.Cj[j].isZero(0)) continue;
        const auto jj = static_cast<Eigen::Index>(j);
        g(jj) -= scaled[j].trace();
        for (std::size_t k = j; k < b.Cj.size(); ++k) {
          const double h = scaled[j].cwiseProduct(scaled[k]).sum();
          H(jj, static_cast<Eigen::Index>(k)) += h;
          if (k != j) H(static_cast<Eigen::Index>(k), jj) += h;
        }
      }
    }
    for (auto i : positive) {
      g(i) -= 1.0 / z(i);
      H(i, i) += 1.0 / (z(i) * z(i));
    }
  }
};

}  // namespace

SearchResult find_certificate(const AugmentedSystem& aug, double rho, const SearchOptions& opts) {
  if (!(rho > 0 && rho < 1)) throw Error(ErrorCode::InvalidArgument, "rho must lie in (0, 1)");
  const Eigen::Index N = aug.size();
  const Eigen::Index r = static_cast<Eigen::Index>(aug.M_basis.size());
  const Eigen::Index nP = N * (N + 1) / 2;
  const Eigen::Index nz = nP + r + 1;
  const Eigen::Index it = nz - 1;

  Mat AB(N, N + 1);
  AB << aug.A_hat, aug.B_hat;
  Mat CD(aug.C_hat.rows(), N + 1);
  CD << aug.C_hat, aug.D_hat;

  // Congruence on the input coordinate so that it has the scale of the state.
  const double bnorm = aug.B_hat.norm();
  const double sigma = bnorm > 0 ? bnorm : 1.0;
  Vec kdiag = Vec::Ones(N + 1);
  kdiag(N) = 1.0 / sigma;
  const auto K = kdiag.asDiagonal();

  BarrierProblem prob;
  AffineBlock lmi, pos;
  lmi.C0 = Mat::Zero(N + 1, N + 1);
  pos.C0 = Mat::Zero(N, N);
  lmi.Cj.assign(static_cast<std::size_t>(nz), Mat::Zero(N + 1, N + 1));
  pos.Cj.assign(static_cast<std::size_t>(nz), Mat::Zero(N, N));
  prob.eq = Vec::Zero(nz);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = i; j < N; ++j, ++idx) {
      Mat E = Mat::Zero(N, N);
      E(i, j) = E(j, i) = 1.0;
      Mat G = AB.transpose() * E * AB;
      G.topLeftCorner(N, N) -= rho * rho * E;
      lmi.Cj[static_cast<std::size_t>(idx)] = -(K * G * K);
      pos.Cj[static_cast<std::size_t>(idx)] = E;
      if (i == j) prob.eq(idx) = 1.0;
    }
  }
  Vec lam_scale(r);
  for (Eigen::Index l = 0; l < r; ++l, ++idx) {
    Mat H = K * (CD.transpose() * aug.M_basis[static_cast<std::size_t>(l)] * CD) * K;
    lam_scale(l) = H.norm() > 0 ? 1.0 / H.norm() : 1.0;
    lmi.Cj[static_cast<std::size_t>(idx)] = -lam_scale(l) * H;
    prob.eq(idx) = 1.0;
    prob.positive.push_back(idx);
  }
  lmi.Cj[static_cast<std::size_t>(it)] = Mat::Identity(N + 1, N + 1);
  pos.Cj[static_cast<std::size_t>(it)] = Mat::Identity(N, N);
  prob.blocks = {lmi, pos};
  prob.cost = Vec::Unit(nz, it);
  prob.barrier_size = static_cast<double>(2 * N + 1 + r);

  const auto unpack = [&](const Vec& z, Mat& P, Vec& lambdas) {
    P.resize(N, N);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < N; ++i)
      for (Eigen::Index j = i; j < N; ++j, ++k) P(i, j) = P(j, i) = z(k);
    lambdas = z.segment(nP, r).cwiseProduct(lam_scale);
  };

  // Strictly feasible start: P = I/(N + r), lambda' = 1/(N + r), t above both spectra.
  Vec z = Vec::Zero(nz);
  const double share = 1.0 / static_cast<double>(N + r);
  {
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < N; ++i)
      for (Eigen::Index j = i; j < N; ++j, ++k)
        if (i == j) z(k) = share;
    z.segment(nP, r).setConstant(share);
    z(it) = 0.0;
    const double top = max_eig(-lmi.eval(z));
    z(it) = std::max(top, -share) + 1.0;
  }

  SearchResult res;
  double s = 1.0 / std::max(1.0, std::abs(z(it)));
  Mat P;
  Vec lambdas;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    // Centering by equality-constrained Newton steps.
    for (int k = 0; k < opts.max_newton; ++k) {
      Vec g;
      Mat H;
      prob.derivatives(z, s, g, H);
      Mat KKT = Mat::Zero(nz + 1, nz + 1);
      KKT.topLeftCorner(nz, nz) = H;
      KKT.block(0, nz, nz, 1) = prob.eq;
      KKT.block(nz, 0, 1, nz) = prob.eq.transpose();
      Vec rhs = Vec::Zero(nz + 1);
      rhs.head(nz) = -g;
      const Vec sol = KKT.fullPivLu().solve(rhs);
      const Vec dz = sol.head(nz);
      const double dec2 = dz.dot(H * dz);
      ++res.newton_steps;
      if (!std::isfinite(dec2) || dec2 / 2.0 <= 1e-10) break;
      const double f0 = prob.value(z, s);
      const double slope = g.dot(dz);
      double a = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 80; ++ls, a *= 0.5) {
        const Vec trial = z + a * dz;
        const double f1 = prob.value(trial, s);
        if (f1 <= f0 + 0.25 * a * slope) {
          z = trial;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    const double t = z(it);
    res.best_t = t;
    res.lower_bound = t - prob.barrier_size / s;
    if (t < 0) {
      unpack(z, P, lambdas);
      Certificate c{rho, P, lambdas, 0.0, 0.0};
      const VerificationReport rep = verify_certificate(aug, c);
      if (rep.passed) {
        c.margin = rep.lmi_max_eig;
        c.p_min_eig = rep.p_min_eig;
        res.certificate = c;
        res.reason = "feasible";
        return res;
      }
    }
    if (res.lower_bound > 0) {
      res.reason = "infeasible: optimum bounded away from zero";
      return res;
    }
    if (prob.barrier_size / s < opts.gap_tol) {
      res.reason = "infeasible: no point passes the strict verifier";
      return res;
    }
    s *= opts.barrier_growth;
  }
  res.reason = "infeasible: barrier iterations exhausted";
  return res;
}

RateCertificate certify_rate(const OutputForm<double>& form, double m, double L, const MultiplierSpec& spec,
                             double tol, const SearchOptions& opts) {
  if (!(tol >= 1e-6)) throw Error(ErrorCode::InvalidArgument, "bisection tolerance must be >= 1e-6");
  check_sector(m, L);
  const auto attempt = [&](double rho, RateCertificate& out) {
    MultiplierSpec local = spec;
    if (auto* w = std::get_if<WeightedOffByOne>(&local)) w->rho_weight = rho * rho;
    FilterRealization filt = build_filter(local, m, L);
    AugmentedSystem aug = build_augmented(form, filt);
    SearchResult r = find_certificate(aug, rho, opts);
    if (!r.feasible()) return false;
    out.certificate = *r.certificate;
    out.filter = std::move(filt);
    out.augmented = std::move(aug);
    out.rho_star = rho;
    return true;
  };

  RateCertificate best;
  double hi = 1.0 - 1e-9;
  if (!attempt(hi, best))
    throw Error(ErrorCode::NoCertificate, "no certificate at rho = 1 - 1e-9 with " + multiplier_name(spec));
  double lo = 0.0;
  int steps = 0;
  while (hi - lo > tol && steps < 60) {
    const double mid = 0.5 * (lo + hi);
    if (attempt(mid, best)) hi = mid;
    else lo = mid;
    ++steps;
  }
  best.bisection_steps = steps;
  return best;
}

Matrix<double> lyapunov_factor(const Matrix<double>& P) {
  if (P.rows() != P.cols() || P.rows() == 0) throw Error(ErrorCode::DimensionMismatch, "P must be square");
  const Mat S = (P + P.transpose()) / 2.0;
  Eigen::LLT<Mat> llt(S);
  if (llt.info() != Eigen::Success || !(min_eig(S) > 0))
    throw Error(ErrorCode::NotPositiveDefinite, "Lyapunov matrix is not positive definite");
  return llt.matrixU();
}

Matrix<double> kron_identity(const Matrix<double>& K, Eigen::Index d) {
  return Eigen::kroneckerProduct(K, Mat::Identity(d, d)).eval();
}

}  // namespace plure
