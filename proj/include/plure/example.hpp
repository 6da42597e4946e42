#pragma once

#include "plure/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace plure {

// The two-dimensional quadratic used as the worked example:
// f(y) = 0.5 y'Fy + b'y, F = [100 -1; -1 1], b = (1, 10), constrained to the unit ball.
Matrix<double> example_F();
Vector<double> example_b();

enum class RowStatus { Pass, Fail, Skip };

struct ExampleRow {
  std::string name;
  Vector<double> value;
  Vector<double> expected;
  double tol = 0.0;
  // Bound rows compare value <= expected + tol entrywise instead of |value - expected| <= tol.
  bool bound = false;
  RowStatus status = RowStatus::Skip;
  std::string detail;

  double deviation() const;
};

struct ExampleOptions {
  // Replaces the tolerance of every tabulated-value row.
  std::optional<double> tol;
  // Negative control: perturbs F before anything is computed.
  bool corrupt_F = false;
  double certify_tol = 1e-4;
  long steps = 2000;
};

struct ExampleReport {
  std::vector<ExampleRow> rows;
  bool passed() const;
  std::string table() const;
};

// Sector constants gate every other row: when they miss, the rest are reported as skipped.
ExampleReport run_worked_example(const ExampleOptions& opts = {});

}  // namespace plure
