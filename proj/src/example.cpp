#include "plure/example.hpp"

#include "plure/algorithms.hpp"
#include "plure/contraction.hpp"
#include "plure/io.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace plure {

Matrix<double> example_F() { return (Matrix<double>(2, 2) << 100, -1, -1, 1).finished(); }
Vector<double> example_b() { return Vector<double>{{1.0, 10.0}}; }

double ExampleRow::deviation() const {
  if (value.size() != expected.size() || value.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  return bound ? (value - expected).maxCoeff() : (value - expected).cwiseAbs().maxCoeff();
}

bool ExampleReport::passed() const {
  for (const auto& r : rows)
    if (r.status == RowStatus::Fail) return false;
  return true;
}

std::string ExampleReport::table() const {
  std::ostringstream os;
  os << std::left << std::setw(30) << "row" << std::setw(34) << "value" << std::setw(28) << "expected"
     << std::setw(12) << "tol" << "status\n";
  for (const auto& r : rows) {
    const char* st = r.status == RowStatus::Pass ? "PASS" : r.status == RowStatus::Fail ? "FAIL" : "SKIP";
    std::ostringstream v, e;
    v << std::setprecision(8);
    e << std::setprecision(8);
    for (Eigen::Index i = 0; i < r.value.size(); ++i) v << (i ? " " : "") << r.value(i);
    for (Eigen::Index i = 0; i < r.expected.size(); ++i) e << (i ? " " : "") << r.expected(i);
    std::string exp = (r.bound ? "<= " : "") + e.str();
    os << std::setw(30) << r.name << std::setw(34) << v.str() << std::setw(28) << exp << std::setw(12)
       << format_double(r.tol) << st;
    if (!r.detail.empty()) os << "  (" << r.detail << ")";
    os << "\n";
  }
  return os.str();
}

namespace {

Vector<double> vec(std::initializer_list<double> v) {
  Vector<double> out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

ExampleRow make_row(std::string name, Vector<double> value, Vector<double> expected, double tol,
                    bool bound = false) {
  ExampleRow r;
  r.name = std::move(name);
  r.value = std::move(value);
  r.expected = std::move(expected);
  r.tol = tol;
  r.bound = bound;
  return r;
}

void judge(ExampleRow& r) { r.status = r.deviation() <= r.tol ? RowStatus::Pass : RowStatus::Fail; }

}  // namespace

ExampleReport run_worked_example(const ExampleOptions& opts) {
  ExampleReport rep;
  const auto tol = [&](double t) { return opts.tol.value_or(t); };

  Matrix<double> F = example_F();
  if (opts.corrupt_F) F(0, 0) *= 2.0;
  const QuadraticObjective<double> obj(F, example_b());
  const auto [m, L] = sector_constants(obj);
  const double rho = 1.0 - std::sqrt(m / L);

  std::vector<ExampleRow> rows;
  rows.push_back(make_row("sector_constants (m, L)", vec({m, L}), vec({0.9899, 100.0101}), tol(1e-4)));
  judge(rows.back());
  const bool gate = rows.back().status == RowStatus::Pass;

  const auto add = [&](ExampleRow r) { rows.push_back(std::move(r)); };
  const std::vector<std::string> names = {"design_rate 1-sqrt(m/L)",
                                          "unconstrained_optimum",
                                          "optimal_value",
                                          "constrained_optimum",
                                          "fitted_rate unconstrained",
                                          "fitted_rate projected",
                                          "certified_rate",
                                          "contraction unconstrained",
                                          "contraction projected"};
  if (!gate) {
    for (const auto& n : names) add(make_row(n, Vector<double>(0), Vector<double>(0), 0.0));
    rep.rows = std::move(rows);
    return rep;
  }

  add(make_row(names[0], vec({rho}), vec({0.9005}), tol(1e-4)));
  judge(rows.back());

  const ConvexSet<double> R2 = ConvexSet<double>::whole_space(2);
  const ConvexSet<double> ball = ConvexSet<double>::ball(Vector<double>::Zero(2), 1.0);
  const Vector<double> y_unc = obj.minimizer();
  add(make_row(names[1], y_unc, vec({-0.1111, -10.1111}), tol(1e-4)));
  judge(rows.back());
  add(make_row(names[2], vec({optimal_value(obj)}), vec({-50.6111}), tol(1e-4)));
  judge(rows.back());
  const Vector<double> y_con = solve_reference(obj, ball, 1e-14);
  add(make_row(names[3], y_con, vec({-0.0170, -0.9997}), tol(1e-3)));
  judge(rows.back());

  const OutputForm<double> tm = triple_momentum(m, L);
  const auto fit_row = [&](const std::string& name, const ConvexSet<double>& set, const Vector<double>& y_ref) {
    SimulationOptions<double> so;
    so.max_iters = opts.steps;
    so.y_ref = y_ref;
    const auto traj = simulate(tm, obj.oracle(), set, default_initial_state(tm, set), so);
    ExampleRow r = make_row(name, Vector<double>(0), vec({rho}), 0.02, true);
    try {
      const RateEstimate est = estimate_rate(traj);
      r.value = vec({est.rho_hat});
      r.detail = "R^2 = " + format_double(est.r_squared);
      judge(r);
      if (est.r_squared < 0.99) r.status = RowStatus::Fail;
    } catch (const Error& e) {
      r.status = RowStatus::Fail;
      r.detail = e.what();
    }
    add(std::move(r));
  };
  fit_row(names[4], R2, y_unc);
  fit_row(names[5], ball, y_con);

  ExampleRow cert_row = make_row(names[6], Vector<double>(0), vec({1.0}), 0.0, true);
  std::optional<RateCertificate> rc;
  try {
    rc = certify_rate(tm, m, L, WeightedOffByOne{}, opts.certify_tol);
    const VerificationReport ver = verify_certificate(rc->augmented, rc->certificate);
    cert_row.value = vec({rc->rho_star});
    cert_row.detail = ver.passed ? "verified" : "verification failed: " + ver.summary();
    cert_row.status = ver.passed && rc->rho_star > 0 && rc->rho_star < 1 ? RowStatus::Pass : RowStatus::Fail;
  } catch (const Error& e) {
    cert_row.status = RowStatus::Fail;
    cert_row.detail = e.what();
  }
  add(cert_row);

  const auto contraction_row = [&](const std::string& name, const ConvexSet<double>& set) {
    ExampleRow r = make_row(name, Vector<double>(0), Vector<double>(0), 1e-6, true);
    if (!rc) {
      r.status = RowStatus::Skip;
      r.detail = "no certificate";
      add(std::move(r));
      return;
    }
    using LD = long double;
    const QuadraticObjective<LD> q = obj.cast<LD>();
    const ConvexSet<LD> s = set.cast<LD>();
    ContractionOptions<LD> co;
    co.steps = opts.steps;
    const AlgorithmState<LD> x0 = default_initial_state(tm.cast<LD>(), s);
    const ContractionReport cr =
        transformed_contraction_check<LD>(tm, s, q.oracle(), q.smoothness(), rc->certificate, rc->filter, x0, co);
    // Relative check: max ratio / rho* - 1 against 1e-6.
    r.value = vec({cr.max_ratio / rc->rho_star - 1.0});
    r.expected = vec({0.0});
    r.detail = "max step ratio " + format_double(cr.max_ratio) + " at k=" + std::to_string(cr.worst_step) +
               ", envelope " + format_double(cr.envelope);
    judge(r);
    add(std::move(r));
  };
  contraction_row(names[7], R2);
  contraction_row(names[8], ball);

  rep.rows = std::move(rows);
  return rep;
}

}  // namespace plure
