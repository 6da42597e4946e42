#pragma once

#include "plure/sets.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace plure {

// Outcome of one randomized property over one set family. slack is the largest observed
// value of (measured - allowed); it is <= 0 exactly when no trial violated the property.
struct PropertyResult {
  std::string property;
  std::string set_kind;
  long trials = 0;
  long violations = 0;
  double worst_slack = -1.0;
  std::string witness;

  bool passed() const { return violations == 0; }
};

struct PropertyOptions {
  std::uint64_t seed = 0;
  long trials = 1000;
  // Number of random Lyapunov factors for the block-transform property.
  int transforms = 20;
};

const std::vector<std::string>& set_kinds();

ConvexSet<double> random_set(const std::string& kind, Eigen::Index d, std::mt19937_64& rng);

std::vector<PropertyResult> projection_properties(const PropertyOptions& opts);
std::vector<PropertyResult> weighted_transform_properties(const PropertyOptions& opts);
std::vector<PropertyResult> orthogonal_transform_properties(const PropertyOptions& opts);
std::vector<PropertyResult> scaling_properties(const PropertyOptions& opts);
std::vector<PropertyResult> translation_properties(const PropertyOptions& opts);
std::vector<PropertyResult> block_transform_properties(const PropertyOptions& opts);
std::vector<PropertyResult> objective_properties(const PropertyOptions& opts);

std::vector<PropertyResult> run_property_suite(const PropertyOptions& opts);

}  // namespace plure
