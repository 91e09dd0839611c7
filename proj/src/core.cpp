#include "cardest/core.hpp"

namespace cardest {

void Dataset::append(std::span<const float> v) {
  if (dim == 0) {
    dim = v.size();
  }
  if (v.size() != dim) {
    throw std::invalid_argument("Dataset::append: vector dimension " + std::to_string(v.size()) +
                                " does not match dataset dimension " + std::to_string(dim));
  }
  for (float x : v) {
    if (!std::isfinite(x)) {
      throw DataError("Dataset::append: non-finite value in vector");
    }
  }
  values.insert(values.end(), v.begin(), v.end());
}

void Dataset::append_all(const Dataset& other) {
  if (other.empty()) {
    return;
  }
  if (dim != 0 && other.dim != dim) {
    throw std::invalid_argument("Dataset::append_all: dimension mismatch");
  }
  if (dim == 0) {
    dim = other.dim;
  }
  values.insert(values.end(), other.values.begin(), other.values.end());
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::BudgetExhausted:
      return "budget_exhausted";
    case Termination::GlobalFlag:
      return "global_flag";
    case Termination::AllNeighborsProbed:
      return "all_neighbors_probed";
  }
  return "unknown";
}

const char* to_string(DistanceMode m) {
  return m == DistanceMode::SquaredL2 ? "squared_l2" : "l2";
}

DistanceMode distance_mode_from_string(const std::string& name) {
  if (name == "squared_l2") {
    return DistanceMode::SquaredL2;
  }
  if (name == "l2") {
    return DistanceMode::L2;
  }
  throw std::invalid_argument("unknown distance mode: " + name);
}

void ProberConfig::validate() const {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("ProberConfig: epsilon must be > 0");
  }
  if (!(confidence_a > 0.0)) {
    throw std::invalid_argument("ProberConfig: confidence_a must be > 0");
  }
  if (!(s_init > 0.0 && s_init <= s_max && s_max <= 1.0)) {
    throw std::invalid_argument("ProberConfig: require 0 < s_init <= s_max <= 1");
  }
  if (!(max_visit_fraction > 0.0 && max_visit_fraction <= 1.0)) {
    throw std::invalid_argument("ProberConfig: require 0 < max_visit_fraction <= 1");
  }
}

double squared_l2_distance(std::span<const float> x, std::span<const float> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("squared_l2_distance: dimension mismatch (" +
                                std::to_string(x.size()) + " vs " + std::to_string(y.size()) +
                                ")");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = static_cast<double>(x[i]) - static_cast<double>(y[i]);
    sum += diff * diff;
  }
  return sum;
}

std::size_t hamming_distance(std::span<const std::int32_t> x, std::span<const std::int32_t> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("hamming_distance: code length mismatch");
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    count += x[i] != y[i] ? 1 : 0;
  }
  return count;
}

double threshold_squared(double tau, DistanceMode mode) {
  if (tau < 0.0) {
    throw std::invalid_argument("threshold_squared: tau must be non-negative");
  }
  return mode == DistanceMode::L2 ? tau * tau : tau;
}

}  // namespace cardest
