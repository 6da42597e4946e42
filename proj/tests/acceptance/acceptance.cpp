// Acceptance runner. Usage: acceptance <1..9|all>. Prints detail lines prefixed with "  #"
// and exactly one "CRITERION <n> PASS|FAIL" line per criterion; exits nonzero on any FAIL.

#include "plure/algorithms.hpp"
#include "plure/certify.hpp"
#include "plure/contraction.hpp"
#include "plure/example.hpp"
#include "plure/properties.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

using namespace plure;
using LD = long double;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void fail(const std::string& why) {
    pass = false;
    notes.push_back("FAIL " + why);
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string num(double x, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << x;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------------------
// Shared problem grid: 20 seeded quadratics with d in {2, 5, 10}, L/m in {10, 100, 1000}.

struct GridProblem {
  int index = 0;
  QuadraticObjective<double> obj;
  Vector<double> y_unc;
};

std::vector<GridProblem> grid_problems() {
  std::vector<GridProblem> out;
  const Eigen::Index dims[] = {2, 5, 10};
  const double kappas[] = {10.0, 100.0, 1000.0};
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> logm(std::log(0.1), std::log(10.0));
  for (int i = 0; i < 20; ++i) {
    const double m = std::exp(logm(rng));
    const auto q = random_quadratic(dims[i % 3], m, kappas[(i / 3) % 3] * m, 1000 + i, 3.0);
    out.push_back({i, q, q.minimizer()});
  }
  return out;
}

const std::vector<std::string> kGridSets = {"ball", "box", "halfspace"};
const std::vector<std::string> kGridAlgorithms = {"gradient_descent", "nesterov", "triple_momentum"};

ConvexSet<double> grid_set(const std::string& kind, const GridProblem& p) {
  const Eigen::Index d = p.obj.dim();
  if (kind == "ball") return ConvexSet<double>::ball(Vector<double>::Zero(d), 1.0);
  if (kind == "box") {
    // Half the coordinates bounded so the optimum sits on a face rather than a vertex.
    const Eigen::Index k = (d + 1) / 2;
    Vector<double> lo = Vector<double>::Constant(d, -std::numeric_limits<double>::infinity());
    Vector<double> hi = Vector<double>::Constant(d, std::numeric_limits<double>::infinity());
    lo.head(k).setConstant(-1.0);
    hi.head(k).setConstant(1.0);
    return ConvexSet<double>::box(lo, hi);
  }
  std::mt19937_64 rng(5000 + p.index);
  std::normal_distribution<double> g;
  Vector<double> a(d);
  for (Eigen::Index i = 0; i < d; ++i) a(i) = g(rng);
  a.normalize();
  return ConvexSet<double>::halfspace(a, a.dot(p.y_unc) - 1.0);
}

MultiplierSpec grid_multiplier(const std::string& alg) {
  if (alg == "gradient_descent") return StaticSector{};
  return WeightedOffByOne{};
}

struct CertifiedAlgorithm {
  std::string name;
  double m = 0, L = 0;
  OutputForm<double> form;
  RateCertificate rc;
};

CertifiedAlgorithm certify_named(const std::string& alg, double m, double L) {
  CertifiedAlgorithm c{alg, m, L, make_algorithm(alg, m, L), {}};
  c.rc = certify_rate(c.form, m, L, grid_multiplier(alg), 1e-4);
  return c;
}

// Certificates for every (algorithm, problem) pair of the grid, keyed by "alg/index".
std::map<std::string, CertifiedAlgorithm> grid_certificates(const std::vector<GridProblem>& problems) {
  std::map<std::string, CertifiedAlgorithm> out;
  for (const auto& alg : kGridAlgorithms)
    for (const auto& p : problems) {
      const auto [m, L] = sector_constants(p.obj);
      out.emplace(alg + "/" + std::to_string(p.index), certify_named(alg, m, L));
    }
  return out;
}

long steps_for(double rho, double start, double target) {
  const double k = std::log(target / std::max(start, 1e-300)) / std::log(rho);
  return std::min<long>(300000, static_cast<long>(1.5 * std::max(k, 0.0)) + 200);
}

struct GridRun {
  std::string label;
  double rho_star = 1;
  double rho_hat = 1;
  double r_squared = 0;
  std::string fit_error;
  ContractionReport contraction;
};

GridRun run_grid_case(const CertifiedAlgorithm& ca, const GridProblem& p, const std::string& set_kind, bool fit,
                      bool contraction) {
  GridRun run;
  run.label = ca.name + "/" + set_kind + "/q" + std::to_string(p.index) + " d=" + std::to_string(p.obj.dim()) +
              " L/m=" + num(ca.L / ca.m, 4);
  run.rho_star = ca.rc.rho_star;
  const ConvexSet<double> set = grid_set(set_kind, p);
  const QuadraticObjective<LD> q = p.obj.cast<LD>();
  const ConvexSet<LD> s = set.cast<LD>();
  const GradientOracle<LD> grad = q.oracle();
  const Vector<LD> y_ref = solve_reference<LD>(grad, q.smoothness(), s, LD(1e-17));
  const OutputForm<LD> f = ca.form.cast<LD>();
  const AlgorithmState<LD> x0 = default_initial_state(f, s);
  const double start = static_cast<double>((x0.y - y_ref).norm()) + 1.0;

  if (fit) {
    SimulationOptions<LD> so;
    so.max_iters = steps_for(ca.rc.rho_star, start, 1e-14);
    so.y_ref = y_ref;
    so.stop_tol = LD(1e-14);
    so.record_states = false;
    const Trajectory<LD> traj = simulate(f, grad, s, x0, so);
    try {
      const RateEstimate est = estimate_rate(traj);
      run.rho_hat = est.rho_hat;
      run.r_squared = est.r_squared;
    } catch (const Error& e) {
      run.fit_error = e.what();
    }
  }
  if (contraction) {
    ContractionOptions<LD> co;
    co.steps = steps_for(ca.rc.rho_star, start * 10.0, 1e-11);
    co.y_eq = y_ref;
    run.contraction = transformed_contraction_check<LD>(ca.form, s, grad, q.smoothness(), ca.rc.certificate,
                                                        ca.rc.filter, x0, co);
  }
  return run;
}

// ---------------------------------------------------------------------------------------

Verdict criterion1() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const QuadraticObjective<double> obj(example_F(), example_b());
  const auto [m, L] = sector_constants(obj);
  const auto check = [&](const std::string& what, double got, double want, double tol) {
    const bool ok = std::abs(got - want) <= tol;
    v.note(what + " = " + num(got, 10) + " (expected " + num(want, 10) + " +- " + num(tol) + ")" +
           (ok ? "" : "  <-- off by " + num(std::abs(got - want))));
    if (!ok) v.fail(what);
  };
  check("m", m, 0.9899, 1e-4);
  check("L", L, 100.0101, 1e-4);
  check("rho = 1 - sqrt(m/L)", 1.0 - std::sqrt(m / L), 0.9005, 1e-4);
  const Vector<double> y = obj.minimizer();
  check("y_opt[0]", y(0), -0.1111, 1e-4);
  check("y_opt[1]", y(1), -10.1111, 1e-4);
  check("f_opt", optimal_value(obj), -50.6111, 1e-4);
  const Vector<double> yc =
      solve_reference(obj, ConvexSet<double>::ball(Vector<double>::Zero(2), 1.0), 1e-10);
  check("y_opt_ball[0]", yc(0), -0.0170, 1e-3);
  check("y_opt_ball[1]", yc(1), -0.9997, 1e-3);
  const double t = seconds_since(t0);
  v.note("runtime " + num(t) + " s (budget 1 s)");
  if (t >= 1.0) v.fail("runtime");
  return v;
}

std::vector<std::pair<double, double>> gd_pairs() {
  std::vector<std::pair<double, double>> pairs = {{1, 10}, {1, 100}, {0.9899, 100.0101}};
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> logm(std::log(0.1), std::log(10.0)), logk(std::log(2.0), std::log(1000.0));
  for (int i = 0; i < 10; ++i) {
    const double m = std::exp(logm(rng));
    pairs.emplace_back(m, m * std::exp(logk(rng)));
  }
  return pairs;
}

Verdict criterion2(std::vector<CertifiedAlgorithm>* certs = nullptr) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& [m, L] : gd_pairs()) {
    const double tight = (L - m) / (L + m);
    const CertifiedAlgorithm ca = certify_named("gradient_descent", m, L);
    const double err = std::abs(ca.rc.rho_star - tight);
    const SearchResult below = find_certificate(ca.rc.augmented, tight - 1e-2);
    v.note("(m, L) = (" + num(m) + ", " + num(L) + "): rho* = " + num(ca.rc.rho_star, 8) + ", tight " +
           num(tight, 8) + ", |diff| " + num(err) + "; at tight-0.01: " + (below.feasible() ? "FEASIBLE" : "infeasible"));
    if (err > 2e-3) v.fail("rho* off for (" + num(m) + ", " + num(L) + ")");
    if (below.feasible()) v.fail("certificate found below the tight rate for (" + num(m) + ", " + num(L) + ")");
    if (certs) certs->push_back(ca);
  }
  const double t = seconds_since(t0);
  v.note("runtime " + num(t) + " s (budget 30 s)");
  if (t >= 30.0) v.fail("runtime");
  return v;
}

Verdict criterion3_or_4(bool fit, bool contraction) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto problems = grid_problems();
  const auto certs = grid_certificates(problems);
  long runs = 0, fit_fail = 0, con_fail = 0;
  double worst_gap = -1, worst_r2 = 1, worst_ratio = 0, worst_env = 0;
  std::map<std::string, long> fail_by_alg;
  for (const auto& alg : kGridAlgorithms)
    for (const auto& kind : kGridSets)
      for (const auto& p : problems) {
        const auto& ca = certs.at(alg + "/" + std::to_string(p.index));
        const GridRun r = run_grid_case(ca, p, kind, fit, contraction);
        ++runs;
        if (fit) {
          const bool ok = r.fit_error.empty() && r.rho_hat <= r.rho_star + 0.02 && r.r_squared >= 0.99;
          if (r.fit_error.empty()) {
            worst_gap = std::max(worst_gap, r.rho_hat - r.rho_star);
            worst_r2 = std::min(worst_r2, r.r_squared);
          }
          if (!ok) {
            ++fit_fail;
            v.note("fit " + r.label + ": rho_hat " + num(r.rho_hat, 8) + " vs rho* " + num(r.rho_star, 8) + ", R^2 " +
                   num(r.r_squared, 8) + (r.fit_error.empty() ? "" : " [" + r.fit_error + "]"));
          }
        }
        if (contraction) {
          const double limit = r.rho_star * (1.0 + 1e-6);
          worst_ratio = std::max(worst_ratio, r.contraction.max_ratio / r.rho_star);
          worst_env = std::max(worst_env, r.contraction.envelope);
          if (!(r.contraction.max_ratio <= limit)) {
            ++con_fail;
            ++fail_by_alg[alg + "/" + kind];
            if (con_fail <= 12)
              v.note("contraction " + r.label + ": max ratio " + num(r.contraction.max_ratio, 10) + " at k=" +
                     std::to_string(r.contraction.worst_step) + " > rho* " + num(r.rho_star, 10) + " (envelope " +
                     num(r.contraction.envelope, 6) + ")");
          }
        }
      }
  if (fit) {
    v.note(std::to_string(runs) + " runs; worst rho_hat - rho* = " + num(worst_gap) + ", worst R^2 = " + num(worst_r2, 8));
    if (fit_fail) v.fail(std::to_string(fit_fail) + " runs miss the rate or R^2 bound");
  }
  if (contraction) {
    for (const auto& [k, n] : fail_by_alg) v.note("contraction failures " + k + ": " + std::to_string(n) + "/20");
    v.note(std::to_string(runs) + " runs; worst max_ratio/rho* = " + num(worst_ratio, 10) +
           "; worst envelope |x~_k|/(rho*^k |x~_0|) = " + num(worst_env, 6));
    if (con_fail) v.fail(std::to_string(con_fail) + " runs exceed rho*(1 + 1e-6) on some step");
  }
  const double t = seconds_since(t0);
  v.note("runtime " + num(t) + " s (budget 300 s)");
  if (t >= 300.0) v.fail("runtime");
  return v;
}

Verdict criterion5() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  PropertyOptions opts;
  opts.trials = 1000;
  const auto results = run_property_suite(opts);
  for (const auto& r : results) {
    v.note(std::string(r.passed() ? "ok    " : "miss  ") + r.property + " [" + r.set_kind + "] " +
           std::to_string(r.trials - r.violations) + "/" + std::to_string(r.trials) + " worst slack " +
           num(r.worst_slack));
    if (r.trials < 1000) v.fail(r.property + " [" + r.set_kind + "] ran fewer than 1000 trials");
    if (!r.passed()) {
      v.fail(r.property + " [" + r.set_kind + "]");
      v.note("  witness: " + r.witness.substr(0, 300));
    }
  }
  const double t = seconds_since(t0);
  v.note("runtime " + num(t) + " s (budget 60 s)");
  if (t >= 60.0) v.fail("runtime");
  return v;
}

Verdict criterion6() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto problems = grid_problems();
  long configs = 0, bad = 0;
  double worst_spread = 0, worst_res = 0, worst_nc = 0, worst_ref = 0;
  for (const auto& alg : kGridAlgorithms)
    for (const auto& kind : kGridSets)
      for (const auto& p : problems) {
        ++configs;
        const auto [m, L] = sector_constants(p.obj);
        const OutputForm<double> form = make_algorithm(alg, m, L);
        const ConvexSet<double> set = grid_set(kind, p);
        const auto grad = p.obj.oracle();
        const Vector<double> y_ref = solve_reference(p.obj, set, 1e-10);
        const Eigen::Index d = p.obj.dim();
        std::mt19937_64 rng(9000 + 97 * configs);
        std::normal_distribution<double> g(0.0, 3.0);
        std::vector<Vector<double>> ends;
        std::string why;
        for (int s = 0; s < 10; ++s) {
          AlgorithmState<double> x0;
          x0.y = Vector<double>(d);
          x0.xi2 = Vector<double>((form.n() - 1) * d);
          for (Eigen::Index i = 0; i < d; ++i) x0.y(i) = g(rng);
          for (Eigen::Index i = 0; i < x0.xi2.size(); ++i) x0.xi2(i) = g(rng);
          x0.y = project(set, x0.y);
          const auto run = run_to_fixed_point(form, set, grad, x0, 400000, 1e-12);
          const Vector<double>& y = run.state.y;
          const double res = fixed_point_residual(form, set, grad, y);
          const double nc = normal_cone_residual(set, y, Vector<double>(-grad(y)));
          const double ref = (y - y_ref).norm();
          worst_res = std::max(worst_res, res);
          worst_nc = std::max(worst_nc, nc);
          worst_ref = std::max(worst_ref, ref);
          if (!run.converged) why += " start " + std::to_string(s) + " did not converge;";
          if (res > 1e-6) why += " residual " + num(res) + ";";
          if (nc > 1e-6) why += " normal-cone residual " + num(nc) + ";";
          if (ref > 1e-5) why += " distance to reference " + num(ref) + ";";
          ends.push_back(y);
        }
        for (std::size_t i = 0; i < ends.size(); ++i)
          for (std::size_t j = i + 1; j < ends.size(); ++j) {
            const double gap = (ends[i] - ends[j]).norm();
            worst_spread = std::max(worst_spread, gap);
            if (gap > 1e-6 && why.find("spread") == std::string::npos) why += " spread " + num(gap) + ";";
          }
        if (!why.empty()) {
          ++bad;
          v.note(alg + "/" + kind + "/q" + std::to_string(p.index) + ":" + why);
        }
      }
  v.note(std::to_string(configs) + " configurations x 10 starts; worst pairwise spread " + num(worst_spread) +
         ", residual " + num(worst_res) + ", normal-cone residual " + num(worst_nc) + ", distance to reference " +
         num(worst_ref));
  if (bad) v.fail(std::to_string(bad) + " configurations");
  const double t = seconds_since(t0);
  v.note("runtime " + num(t) + " s (budget 180 s)");
  if (t >= 180.0) v.fail("runtime");
  return v;
}

Verdict criterion7() {
  Verdict v;
  struct Case {
    std::string label;
    QuadraticObjective<double> obj;
    ConvexSet<double> set;
  };
  std::vector<Case> cases;
  cases.push_back({"worked example, unit ball", QuadraticObjective<double>(example_F(), example_b()),
                   ConvexSet<double>::ball(Vector<double>::Zero(2), 1.0)});
  const auto problems = grid_problems();
  for (int i = 0; i < 5; ++i) {
    const auto& p = problems[static_cast<std::size_t>(3 * i + 1)];
    const std::string kind = kGridSets[static_cast<std::size_t>(i % 3)];
    cases.push_back({"q" + std::to_string(p.index) + " " + kind, p.obj, grid_set(kind, p)});
  }
  double worst = 0;
  for (const auto& c : cases) {
    const auto [m, L] = sector_constants(c.obj);
    const OutputForm<double> form = nesterov(m, L);
    const double dev = nesterov_equivalence_check(m, L, c.set, c.obj.oracle(), default_initial_state(form, c.set), 200);
    worst = std::max(worst, dev);
    v.note(c.label + ": max deviation " + num(dev));
    if (!(dev <= 1e-10)) v.fail(c.label);
  }
  v.note("worst deviation " + num(worst) + " (limit 1e-10)");
  return v;
}

struct NamedCertificate {
  std::string label;
  CertifiedAlgorithm ca;
};

void negative_controls(const NamedCertificate& nc, Verdict& v, long& checked) {
  const auto& ca = nc.ca;
  const Certificate& cert = ca.rc.certificate;
  const VerificationReport base = verify_certificate(ca.rc.augmented, cert);
  if (!base.passed) {
    v.fail(nc.label + ": unperturbed certificate does not verify");
    return;
  }
  Certificate shifted = cert;
  shifted.P -= 2.0 * cert.p_min_eig * Matrix<double>::Identity(cert.P.rows(), cert.P.cols());
  const bool p_flip = !verify_certificate(ca.rc.augmented, shifted).passed;

  Certificate slower = cert;
  slower.rho = cert.rho - 1e-2;
  MultiplierSpec spec = grid_multiplier(ca.name);
  if (std::holds_alternative<WeightedOffByOne>(spec)) spec = WeightedOffByOne{slower.rho * slower.rho};
  const AugmentedSystem aug = build_augmented(ca.form, build_filter(spec, ca.m, ca.L));
  const bool rho_flip = !verify_certificate(aug, slower).passed;
  ++checked;
  if (!p_flip) v.fail(nc.label + ": P - 2 margin I still verifies");
  if (!rho_flip) v.fail(nc.label + ": rho - 1e-2 still verifies");
}

CertifiedAlgorithm example_tm_certificate() {
  const QuadraticObjective<double> obj(example_F(), example_b());
  const auto [m, L] = sector_constants(obj);
  return certify_named("triple_momentum", m, L);
}

Verdict criterion8() {
  Verdict v;
  std::vector<NamedCertificate> all;
  std::vector<CertifiedAlgorithm> gd;
  criterion2(&gd);
  for (const auto& c : gd) all.push_back({"GD (" + num(c.m) + ", " + num(c.L) + ")", c});
  const auto problems = grid_problems();
  for (auto& [key, c] : grid_certificates(problems)) all.push_back({key, c});
  all.push_back({"TM worked example", example_tm_certificate()});
  long checked = 0;
  for (const auto& nc : all) negative_controls(nc, v, checked);
  v.note(std::to_string(checked) + " certificates perturbed in P and in rho");
  return v;
}

Verdict criterion9() {
  Verdict v;
  const CertifiedAlgorithm ca = example_tm_certificate();
  const VerificationReport ver = verify_certificate(ca.rc.augmented, ca.rc.certificate);
  v.note("rho* = " + num(ca.rc.rho_star, 10) + " (design rate " + num(1.0 - std::sqrt(ca.m / ca.L), 10) + "); " +
         ver.summary());
  if (!(ca.rc.rho_star > 0 && ca.rc.rho_star < 1)) v.fail("rho* outside (0, 1)");
  if (!ver.passed) v.fail("certificate does not verify");

  const QuadraticObjective<LD> q = QuadraticObjective<double>(example_F(), example_b()).cast<LD>();
  const std::vector<std::pair<std::string, ConvexSet<double>>> sets = {
      {"unconstrained", ConvexSet<double>::whole_space(2)},
      {"unit ball", ConvexSet<double>::ball(Vector<double>::Zero(2), 1.0)}};
  std::mt19937_64 rng(4242);
  std::normal_distribution<double> g(0.0, 3.0);
  for (const auto& [label, set] : sets) {
    const ConvexSet<LD> s = set.cast<LD>();
    const OutputForm<LD> f = ca.form.cast<LD>();
    for (int start = 0; start < 5; ++start) {
      AlgorithmState<LD> x0 = default_initial_state(f, s);
      if (start > 0) {
        for (Eigen::Index i = 0; i < 2; ++i) x0.y(i) = g(rng);
        for (Eigen::Index i = 0; i < x0.xi2.size(); ++i) x0.xi2(i) = g(rng);
        x0.y = project(s, x0.y);
      }
      ContractionOptions<LD> co;
      co.steps = 1500;
      const ContractionReport cr = transformed_contraction_check<LD>(ca.form, s, q.oracle(), q.smoothness(),
                                                                     ca.rc.certificate, ca.rc.filter, x0, co);
      const bool ok = cr.max_ratio <= ca.rc.rho_star * (1.0 + 1e-6);
      v.note(label + " start " + std::to_string(start) + ": max ratio " + num(cr.max_ratio, 10) + " at k=" +
             std::to_string(cr.worst_step) + ", envelope " + num(cr.envelope, 6) + (ok ? "" : "  <-- exceeds rho*"));
      if (!ok) v.fail(label + " start " + std::to_string(start));
    }
  }
  return v;
}

Verdict run_criterion(int c) {
  try {
    switch (c) {
      case 1: return criterion1();
      case 2: return criterion2();
      case 3: return criterion3_or_4(true, false);
      case 4: return criterion3_or_4(false, true);
      case 5: return criterion5();
      case 6: return criterion6();
      case 7: return criterion7();
      case 8: return criterion8();
      case 9: return criterion9();
      default: break;
    }
  } catch (const std::exception& e) {
    Verdict v;
    v.fail(std::string("exception: ") + e.what());
    return v;
  }
  Verdict v;
  v.fail("unknown criterion");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string which = argc > 1 ? argv[1] : "all";
  std::vector<int> list;
  if (which == "all") {
    for (int c = 1; c <= 9; ++c) list.push_back(c);
  } else {
    list.push_back(std::atoi(which.c_str()));
  }
  bool all_pass = true;
  for (int c : list) {
    const Verdict v = run_criterion(c);
    for (const auto& n : v.notes) std::cout << "  # " << n << "\n";
    std::cout << "CRITERION " << c << " " << (v.pass ? "PASS" : "FAIL") << std::endl;
    all_pass = all_pass && v.pass;
  }
  return all_pass ? 0 : 1;
}
