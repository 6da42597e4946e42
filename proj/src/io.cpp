#include "plure/io.hpp"

#include "plure/algorithms.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace plure {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

std::string where(const std::string& section, const std::string& key, const IniValue& v) {
  return "line " + std::to_string(v.line) + ", [" + section + "] " + key;
}

// Reads typed values out of one section and rejects keys nobody asked for.
class SectionReader {
 public:
  SectionReader(const IniDocument& doc, std::string name) : name_(std::move(name)) {
    if (doc.has_section(name_)) entries_ = &doc.section(name_);
  }

  bool present() const { return entries_ != nullptr; }

  const IniValue* find(const std::string& key) {
    known_.insert(key);
    if (!entries_) return nullptr;
    const auto it = entries_->find(key);
    return it == entries_->end() ? nullptr : &it->second;
  }

  std::optional<std::string> text(const std::string& key) {
    const IniValue* v = find(key);
    if (!v) return std::nullopt;
    return v->text;
  }

  std::optional<double> number(const std::string& key) {
    const IniValue* v = find(key);
    if (!v) return std::nullopt;
    return parse_double(v->text, where(name_, key, *v));
  }

  std::optional<long> integer(const std::string& key) {
    const IniValue* v = find(key);
    if (!v) return std::nullopt;
    long out = 0;
    const auto* end = v->text.data() + v->text.size();
    const auto res = std::from_chars(v->text.data(), end, out);
    if (res.ec != std::errc() || res.ptr != end) config_error(where(name_, key, *v) + ": expected an integer");
    return out;
  }

  std::optional<Vector<double>> vector(const std::string& key) {
    const IniValue* v = find(key);
    if (!v) return std::nullopt;
    return parse_vector(v->text, where(name_, key, *v));
  }

  std::optional<Matrix<double>> matrix(const std::string& key) {
    const IniValue* v = find(key);
    if (!v) return std::nullopt;
    return parse_matrix(v->text, where(name_, key, *v));
  }

  template <typename T>
  T required(std::optional<T> v, const std::string& key) {
    if (!v) config_error("[" + name_ + "] missing required key '" + key + "'");
    return *v;
  }

  void finish() const {
    if (!entries_) return;
    for (const auto& [key, v] : *entries_)
      if (!known_.count(key)) config_error(where(name_, key, v) + ": unknown key");
  }

 private:
  std::string name_;
  const std::map<std::string, IniValue>* entries_ = nullptr;
  std::set<std::string> known_;
};

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& context) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  double out = 0;
  const char* begin = t.data();
  if (!t.empty() && t[0] == '+') ++begin;
  const auto res = std::from_chars(begin, t.data() + t.size(), out);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    config_error(context + ": expected a number, got '" + t + "'");
  return out;
}

std::string format_vector(const Vector<double>& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? " " : "") + format_double(v(i));
  return out;
}

std::string format_matrix(const Matrix<double>& M) {
  std::string out;
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    if (i) out += "; ";
    for (Eigen::Index j = 0; j < M.cols(); ++j) out += (j ? " " : "") + format_double(M(i, j));
  }
  return out;
}

Vector<double> parse_vector(std::string_view text, const std::string& context) {
  std::istringstream is{std::string(text)};
  std::vector<double> vals;
  std::string tok;
  while (is >> tok) vals.push_back(parse_double(tok, context));
  return Eigen::Map<Vector<double>>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

Matrix<double> parse_matrix(std::string_view text, const std::string& context) {
  const auto rows = split(text, ';');
  std::vector<Vector<double>> parsed;
  for (const auto& r : rows) {
    if (r.empty() && rows.size() == 1) break;
    parsed.push_back(parse_vector(r, context));
  }
  if (parsed.empty()) return Matrix<double>(0, 0);
  Matrix<double> M(static_cast<Eigen::Index>(parsed.size()), parsed[0].size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    if (parsed[i].size() != M.cols()) config_error(context + ": ragged matrix rows");
    M.row(static_cast<Eigen::Index>(i)) = parsed[i].transpose();
  }
  return M;
}

IniDocument IniDocument::parse(const std::string& text) {
  IniDocument doc;
  std::istringstream is(text);
  std::string raw;
  std::string current;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(std::string_view(raw).substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) config_error("line " + std::to_string(line) + ": malformed section header");
      current = trim(std::string_view(s).substr(1, s.size() - 2));
      if (doc.sections_.count(current)) config_error("line " + std::to_string(line) + ": duplicate section [" + current + "]");
      doc.sections_[current];
      doc.section_lines_[current] = line;
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) config_error("line " + std::to_string(line) + ": expected 'key = value'");
    if (current.empty()) config_error("line " + std::to_string(line) + ": key outside of any section");
    const std::string key = trim(std::string_view(s).substr(0, eq));
    if (key.empty()) config_error("line " + std::to_string(line) + ": empty key");
    auto& sec = doc.sections_[current];
    if (sec.count(key)) config_error("line " + std::to_string(line) + ": duplicate key '" + key + "'");
    sec[key] = IniValue{trim(std::string_view(s).substr(eq + 1)), line};
  }
  return doc;
}

const std::map<std::string, IniValue>& IniDocument::section(const std::string& name) const {
  const auto it = sections_.find(name);
  if (it == sections_.end()) config_error("missing section [" + name + "]");
  return it->second;
}

std::vector<std::string> IniDocument::section_names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : sections_) out.push_back(k);
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  const IniDocument doc = IniDocument::parse(text);
  static const std::set<std::string> allowed = {"algorithm", "objective", "set", "multiplier", "run"};
  for (const auto& name : doc.section_names())
    if (!allowed.count(name)) config_error("unknown section [" + name + "]");

  ExperimentConfig cfg;
  cfg.source = text;

  SectionReader alg(doc, "algorithm");
  if (!alg.present()) config_error("missing section [algorithm]");
  cfg.algorithm.name = alg.required(alg.text("name"), "name");
  cfg.algorithm.m = alg.number("m");
  cfg.algorithm.L = alg.number("L");
  auto A = alg.matrix("A");
  auto B = alg.vector("B");
  auto C = alg.vector("C");
  if (cfg.algorithm.name == "custom") {
    ReducedSystem<double> sys;
    sys.A = alg.required(A, "A");
    sys.B = alg.required(B, "B");
    sys.C = alg.required(C, "C").transpose();
    sys.D = 0.0;
    if (sys.A.rows() != sys.A.cols() || sys.B.size() != sys.A.rows() || sys.C.size() != sys.A.rows())
      config_error("[algorithm] custom matrices have inconsistent sizes");
    cfg.algorithm.custom = sys;
  } else {
    static const std::set<std::string> names = {"gradient_descent", "triple_momentum", "nesterov", "heavy_ball"};
    if (!names.count(cfg.algorithm.name))
      config_error("line " + std::to_string(alg.find("name")->line) + ", [algorithm] name: unknown algorithm '" +
                   cfg.algorithm.name + "'");
    if (A || B || C) config_error("[algorithm] A, B, C are only valid with name = custom");
  }
  alg.finish();

  SectionReader obj(doc, "objective");
  cfg.objective.type = obj.present() ? obj.text("type").value_or("quadratic") : "none";
  if (cfg.objective.type == "none" && !obj.present()) {
  } else if (cfg.objective.type == "quadratic") {
    cfg.objective.F = obj.required(obj.matrix("F"), "F");
    cfg.objective.b = obj.required(obj.vector("b"), "b");
    if (cfg.objective.F.rows() != cfg.objective.F.cols() || cfg.objective.b.size() != cfg.objective.F.rows())
      config_error("[objective] F must be square and match b");
    cfg.objective.d = cfg.objective.b.size();
  } else if (cfg.objective.type == "random") {
    cfg.objective.d = obj.required(obj.integer("d"), "d");
    cfg.objective.m = obj.required(obj.number("m"), "m");
    cfg.objective.L = obj.required(obj.number("L"), "L");
    cfg.objective.radius = obj.number("radius").value_or(3.0);
    cfg.objective.seed = static_cast<std::uint64_t>(obj.integer("seed").value_or(0));
    if (cfg.objective.d < 1) config_error("[objective] d must be positive");
  } else {
    config_error("[objective] type must be quadratic or random");
  }
  obj.finish();

  SectionReader set(doc, "set");
  cfg.set.type = set.present() ? set.required(set.text("type"), "type") : "whole";
  const Eigen::Index d = cfg.objective.d;
  const auto sized = [&](const Vector<double>& v, const char* key) {
    if (v.size() != d) config_error(std::string("[set] ") + key + " must have " + std::to_string(d) + " entries");
    return v;
  };
  if (cfg.set.type == "whole") {
  } else if (cfg.set.type == "ball") {
    cfg.set.center = sized(set.vector("center").value_or(Vector<double>::Zero(d)), "center");
    cfg.set.radius = set.required(set.number("radius"), "radius");
  } else if (cfg.set.type == "box") {
    cfg.set.lo = sized(set.required(set.vector("lo"), "lo"), "lo");
    cfg.set.hi = sized(set.required(set.vector("hi"), "hi"), "hi");
  } else if (cfg.set.type == "halfspace" || cfg.set.type == "hyperplane") {
    cfg.set.a = sized(set.required(set.vector("a"), "a"), "a");
    cfg.set.b = set.required(set.number("b"), "b");
  } else {
    config_error("[set] type must be one of whole, ball, box, halfspace, hyperplane");
  }
  set.finish();

  SectionReader mult(doc, "multiplier");
  if (mult.present()) {
    cfg.multiplier = mult.required(mult.text("type"), "type");
    if (*cfg.multiplier != "static_sector" && *cfg.multiplier != "weighted_off_by_one" && *cfg.multiplier != "none")
      config_error("[multiplier] type must be static_sector, weighted_off_by_one or none");
    mult.finish();
  }

  SectionReader run(doc, "run");
  cfg.run.max_iters = run.integer("max_iters").value_or(cfg.run.max_iters);
  cfg.run.tol = run.number("tol").value_or(cfg.run.tol);
  cfg.run.reference_tol = run.number("reference_tol").value_or(cfg.run.reference_tol);
  cfg.run.seed = static_cast<std::uint64_t>(run.integer("seed").value_or(0));
  cfg.run.out = run.text("out").value_or(cfg.run.out);
  if (cfg.run.max_iters < 0) config_error("[run] max_iters must be >= 0");
  if (!(cfg.run.tol > 0) || !(cfg.run.reference_tol > 0)) config_error("[run] tolerances must be positive");
  run.finish();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

QuadraticObjective<double> build_objective(const ObjectiveSpec& spec) {
  if (spec.type == "none") config_error("this command needs an [objective] section");
  if (spec.type == "random") return random_quadratic(spec.d, spec.m, spec.L, spec.seed, spec.radius);
  return QuadraticObjective<double>(spec.F, spec.b);
}

ConvexSet<double> build_set(const SetSpec& spec, Eigen::Index d) {
  if (spec.type == "whole") return ConvexSet<double>::whole_space(d);
  if (spec.type == "ball") return ConvexSet<double>::ball(spec.center, spec.radius);
  if (spec.type == "box") return ConvexSet<double>::box(spec.lo, spec.hi);
  if (spec.type == "halfspace") return ConvexSet<double>::halfspace(spec.a, spec.b);
  if (spec.type == "hyperplane") return ConvexSet<double>::hyperplane(spec.a, spec.b);
  config_error("unknown set type '" + spec.type + "'");
}

OutputForm<double> build_algorithm(const AlgorithmSpec& spec, double m, double L) {
  if (spec.custom) return to_output_form(*spec.custom);
  return make_algorithm(spec.name, m, L);
}

std::optional<MultiplierSpec> resolve_multiplier(const ExperimentConfig& cfg) {
  const std::string name =
      cfg.multiplier.value_or(cfg.algorithm.name == "gradient_descent" ? "static_sector" : "weighted_off_by_one");
  if (name == "none") return std::nullopt;
  if (name == "static_sector") return MultiplierSpec{StaticSector{}};
  return MultiplierSpec{WeightedOffByOne{}};
}

std::string serialize_certificate(const CertificateRecord& rec) {
  std::ostringstream os;
  os << "# rate certificate: (P (x) I_d) Lyapunov matrix for the augmented state (y, xi2, zeta)\n";
  os << "[certificate]\n";
  os << "algorithm = " << rec.algorithm << "\n";
  os << "m = " << format_double(rec.m) << "\n";
  os << "L = " << format_double(rec.L) << "\n";
  os << "multiplier = " << multiplier_name(rec.multiplier) << "\n";
  if (const auto* w = std::get_if<WeightedOffByOne>(&rec.multiplier))
    os << "rho_weight = " << format_double(w->rho_weight) << "\n";
  os << "rho = " << format_double(rec.certificate.rho) << "\n";
  os << "P = " << format_matrix(rec.certificate.P) << "\n";
  os << "lambdas = " << format_vector(rec.certificate.lambdas) << "\n";
  os << "margin = " << format_double(rec.certificate.margin) << "\n";
  os << "p_min_eig = " << format_double(rec.certificate.p_min_eig) << "\n";
  os << "[form]\n";
  os << "a1 = " << format_double(rec.form.a1) << "\n";
  os << "A2 = " << format_vector(rec.form.A2.transpose()) << "\n";
  os << "A3 = " << format_vector(rec.form.A3) << "\n";
  os << "A4 = " << format_matrix(rec.form.A4) << "\n";
  os << "c1 = " << format_double(rec.form.c1) << "\n";
  return os.str();
}

CertificateRecord parse_certificate(const std::string& text) {
  const IniDocument doc = IniDocument::parse(text);
  CertificateRecord rec;
  SectionReader c(doc, "certificate");
  if (!c.present()) config_error("missing section [certificate]");
  rec.algorithm = c.required(c.text("algorithm"), "algorithm");
  rec.m = c.required(c.number("m"), "m");
  rec.L = c.required(c.number("L"), "L");
  const std::string mult = c.required(c.text("multiplier"), "multiplier");
  const auto w = c.number("rho_weight");
  if (mult == "static_sector") rec.multiplier = StaticSector{};
  else if (mult == "weighted_off_by_one") rec.multiplier = WeightedOffByOne{c.required(w, "rho_weight")};
  else config_error("[certificate] unknown multiplier '" + mult + "'");
  rec.certificate.rho = c.required(c.number("rho"), "rho");
  rec.certificate.P = c.required(c.matrix("P"), "P");
  rec.certificate.lambdas = c.required(c.vector("lambdas"), "lambdas");
  rec.certificate.margin = c.number("margin").value_or(0.0);
  rec.certificate.p_min_eig = c.number("p_min_eig").value_or(0.0);
  c.finish();

  SectionReader f(doc, "form");
  if (!f.present()) config_error("missing section [form]");
  const double a1 = f.required(f.number("a1"), "a1");
  const Vector<double> A2 = f.vector("A2").value_or(Vector<double>(0));
  const Vector<double> A3 = f.vector("A3").value_or(Vector<double>(0));
  Matrix<double> A4 = f.matrix("A4").value_or(Matrix<double>(0, 0));
  const double c1 = f.required(f.number("c1"), "c1");
  f.finish();
  if (A4.size() == 0) A4.resize(A2.size(), A2.size());
  rec.form = make_output_form<double>(a1, A2.transpose(), A3, A4, c1);
  return rec;
}

std::string format_trajectory_csv(const std::vector<CsvRow>& rows) {
  std::string out = "k,err_y,lyap,ratio\n";
  for (const auto& r : rows) {
    out += std::to_string(r.k) + "," + format_double(r.err_y) + ",";
    if (r.lyap) out += format_double(*r.lyap);
    out += ",";
    if (r.ratio) out += format_double(*r.ratio);
    out += "\n";
  }
  return out;
}

std::vector<CsvRow> parse_trajectory_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || trim(line) != "k,err_y,lyap,ratio")
    throw Error(ErrorCode::ConfigError, "trajectory CSV must start with the header k,err_y,lyap,ratio");
  std::vector<CsvRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    const std::string ctx = "CSV line " + std::to_string(lineno);
    if (f.size() != 4) throw Error(ErrorCode::ConfigError, ctx + ": expected 4 fields");
    CsvRow r;
    r.k = static_cast<long>(parse_double(f[0], ctx));
    r.err_y = parse_double(f[1], ctx);
    if (!f[2].empty()) r.lyap = parse_double(f[2], ctx);
    if (!f[3].empty()) r.ratio = parse_double(f[3], ctx);
    rows.push_back(r);
  }
  return rows;
}

RateEstimate fit_csv_rate(const std::vector<CsvRow>& rows) {
  std::vector<double> err;
  err.reserve(rows.size());
  for (const auto& r : rows) err.push_back(r.err_y);
  return estimate_rate(err);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::ConfigError, "failed writing '" + path + "'");
}

}  // namespace plure
