#pragma once

#include "plure/lure.hpp"
#include "plure/types.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace plure {

// Pointwise sector constraint on (y, u); no filter state.
struct StaticSector {};

// One-step off-by-one multiplier. The filter stores the lagged incremental output
// zeta_{k+1} = y_k - u_k / L, h = (y, u, zeta), and the second basis element is
// 2 (u - m y)(L y - u - w L zeta). Its weighted partial sums sum_k w^{-k} h_k' M2 h_k are
// nonnegative, so the constraint certifies rates rho with rho^2 = rho_weight.
struct WeightedOffByOne {
  double rho_weight = 1.0;
};

using MultiplierSpec = std::variant<StaticSector, WeightedOffByOne>;

std::string multiplier_name(const MultiplierSpec& spec);

struct FilterRealization {
  Matrix<double> A_psi;
  Vector<double> B_psi_y;
  Vector<double> B_psi_u;
  Matrix<double> C_psi;
  Vector<double> D_psi_y;
  Vector<double> D_psi_u;
  std::vector<Matrix<double>> M_basis;

  Eigen::Index p() const { return A_psi.rows(); }
  Eigen::Index q() const { return C_psi.rows(); }
};

struct AugmentedSystem {
  Matrix<double> A_hat;
  Vector<double> B_hat;
  Matrix<double> C_hat;
  Vector<double> D_hat;
  std::vector<Matrix<double>> M_basis;
  Eigen::Index n = 0;
  Eigen::Index p = 0;

  Eigen::Index size() const { return n + p; }
};

struct Certificate {
  double rho = 1.0;
  Matrix<double> P;
  Vector<double> lambdas;
  // Largest eigenvalue of the LMI matrix (negative for strictly feasible points).
  double margin = 0.0;
  double p_min_eig = 0.0;
};

struct VerificationReport {
  bool passed = false;
  bool p_ok = false;
  bool lmi_ok = false;
  bool lambda_ok = false;
  double p_min_eig = 0.0;
  double p_threshold = 0.0;
  double lmi_max_eig = 0.0;
  double lmi_threshold = 0.0;
  double lambda_min = 0.0;

  std::string summary() const;
};

struct SearchOptions {
  int max_outer = 60;
  int max_newton = 200;
  double barrier_growth = 10.0;
  // Stop when the duality-gap bound on the epigraph variable drops below this.
  double gap_tol = 1e-14;
};

struct SearchResult {
  std::optional<Certificate> certificate;
  // Best value of t found for max(lambda_max(LMI), -lambda_min(P)) under the trace normalisation.
  double best_t = 0.0;
  // Certified lower bound on that optimum (positive means infeasible).
  double lower_bound = 0.0;
  int newton_steps = 0;
  std::string reason;

  bool feasible() const { return certificate.has_value(); }
};

struct RateCertificate {
  double rho_star = 1.0;
  Certificate certificate;
  FilterRealization filter;
  AugmentedSystem augmented;
  int bisection_steps = 0;
};

FilterRealization build_filter(const MultiplierSpec& spec, double m, double L);

AugmentedSystem build_augmented(const OutputForm<double>& form, const FilterRealization& filt);

Matrix<double> lmi_matrix(const AugmentedSystem& aug, const Matrix<double>& P, const Vector<double>& lambdas,
                          double rho);

VerificationReport verify_certificate(const AugmentedSystem& aug, const Certificate& cert);

// Primal log-barrier method on min t s.t. LMI(P, lambda) <= tI, -P <= tI, lambda >= 0,
// trace(P) + sum(lambda) = 1. Deterministic; any returned certificate has passed
// verify_certificate.
SearchResult find_certificate(const AugmentedSystem& aug, double rho, const SearchOptions& opts = {});

// Bisection on rho. For WeightedOffByOne the filter weight is rebuilt as rho^2 at every
// candidate rate.
RateCertificate certify_rate(const OutputForm<double>& form, double m, double L, const MultiplierSpec& spec,
                             double tol, const SearchOptions& opts = {});

// Upper-triangular T with T'T = P.
Matrix<double> lyapunov_factor(const Matrix<double>& P);

// K (x) I_d
Matrix<double> kron_identity(const Matrix<double>& K, Eigen::Index d);

}  // namespace plure
