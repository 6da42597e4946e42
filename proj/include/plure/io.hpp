#pragma once

#include "plure/algorithms.hpp"
#include "plure/certify.hpp"
#include "plure/lure.hpp"
#include "plure/problems.hpp"
#include "plure/sets.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace plure {

// Shortest decimal string that parses back to the same double.
std::string format_double(double x);
double parse_double(std::string_view text, const std::string& context);
std::string format_vector(const Vector<double>& v);
// Rows separated by ';', entries by whitespace.
std::string format_matrix(const Matrix<double>& M);
Vector<double> parse_vector(std::string_view text, const std::string& context);
Matrix<double> parse_matrix(std::string_view text, const std::string& context);

struct IniValue {
  std::string text;
  int line = 0;
};

// [section] headers followed by key = value lines; '#' starts a comment.
class IniDocument {
 public:
  static IniDocument parse(const std::string& text);

  bool has_section(const std::string& section) const { return sections_.count(section) > 0; }
  const std::map<std::string, IniValue>& section(const std::string& name) const;
  std::vector<std::string> section_names() const;

 private:
  std::map<std::string, std::map<std::string, IniValue>> sections_;
  std::map<std::string, int> section_lines_;
};

struct AlgorithmSpec {
  std::string name = "triple_momentum";
  std::optional<double> m;
  std::optional<double> L;
  std::optional<ReducedSystem<double>> custom;
};

struct ObjectiveSpec {
  // quadratic, random, or none when the section is absent
  std::string type = "quadratic";
  Matrix<double> F;
  Vector<double> b;
  Eigen::Index d = 2;
  double m = 1.0;
  double L = 10.0;
  double radius = 3.0;
  std::uint64_t seed = 0;
};

struct SetSpec {
  std::string type = "whole";
  Vector<double> center;
  double radius = 1.0;
  Vector<double> lo;
  Vector<double> hi;
  Vector<double> a;
  double b = 0.0;
};

struct RunSpec {
  long max_iters = 200000;
  double tol = 1e-4;
  double reference_tol = 1e-13;
  std::uint64_t seed = 0;
  std::string out = "out";
};

struct ExperimentConfig {
  AlgorithmSpec algorithm;
  ObjectiveSpec objective;
  SetSpec set;
  // Unset means "pick the default for the algorithm"; "none" disables certification.
  std::optional<std::string> multiplier;
  RunSpec run;
  std::string source;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

QuadraticObjective<double> build_objective(const ObjectiveSpec& spec);
ConvexSet<double> build_set(const SetSpec& spec, Eigen::Index d);
OutputForm<double> build_algorithm(const AlgorithmSpec& spec, double m, double L);
std::optional<MultiplierSpec> resolve_multiplier(const ExperimentConfig& cfg);

struct CertificateRecord {
  std::string algorithm;
  double m = 0;
  double L = 0;
  MultiplierSpec multiplier;
  OutputForm<double> form;
  Certificate certificate;
};

std::string serialize_certificate(const CertificateRecord& rec);
CertificateRecord parse_certificate(const std::string& text);

// Trajectory CSV with header k,err_y,lyap,ratio; empty fields for absent columns.
struct CsvRow {
  long k = 0;
  double err_y = 0;
  std::optional<double> lyap;
  std::optional<double> ratio;
};

std::string format_trajectory_csv(const std::vector<CsvRow>& rows);
std::vector<CsvRow> parse_trajectory_csv(const std::string& text);
// Rate fit over the err_y column exactly as written.
RateEstimate fit_csv_rate(const std::vector<CsvRow>& rows);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace plure
