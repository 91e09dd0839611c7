#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cardest {

using PointId = std::uint32_t;
using Vector = std::vector<float>;

/// Malformed or inconsistent input data; the CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A broken internal invariant; the CLI maps this to exit code 3.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Row-major collection of d-dimensional float vectors with dense ids 0..N-1.
struct Dataset {
  std::size_t dim = 0;
  std::vector<float> values;

  Dataset() = default;
  explicit Dataset(std::size_t dimension) : dim(dimension) {}

  std::size_t size() const { return dim == 0 ? 0 : values.size() / dim; }
  bool empty() const { return values.empty(); }

  std::span<const float> vec(PointId id) const {
    return {values.data() + static_cast<std::size_t>(id) * dim, dim};
  }

  /// Appends one vector; rejects dimension mismatch and non-finite entries.
  void append(std::span<const float> v);
  void append_all(const Dataset& other);
};

enum class DistanceMode { SquaredL2, L2 };

enum class Termination { BudgetExhausted, GlobalFlag, AllNeighborsProbed };

const char* to_string(Termination t);
const char* to_string(DistanceMode m);
DistanceMode distance_mode_from_string(const std::string& name);

struct RangeQuery {
  Vector point;
  double tau = 0.0;
};

/// Result of one cardinality estimation together with probe diagnostics.
struct Estimate {
  double cardinality = 0.0;
  std::size_t points_visited = 0;
  int max_neighbor_step = 0;
  Termination termination = Termination::AllNeighborsProbed;
  std::size_t distances_computed = 0;
};

inline const double kDefaultConfidenceA = std::log(1000.0);

struct ProberConfig {
  double epsilon = 1e-4;
  double confidence_a = kDefaultConfidenceA;  // ln(1 / Pr[fail])
  double s_init = 1.0 / 64.0;
  double s_max = 0.5;
  double max_visit_fraction = 0.01;
  DistanceMode distance_mode = DistanceMode::SquaredL2;

  /// Throws std::invalid_argument when a parameter is outside its legal range.
  void validate() const;
};

/// Sum of squared per-component differences. Accumulates in double.
double squared_l2_distance(std::span<const float> x, std::span<const float> y);

/// Number of positions where two token sequences differ.
std::size_t hamming_distance(std::span<const std::int32_t> x, std::span<const std::int32_t> y);

/// All comparisons run in squared units; L2 mode squares tau on entry.
double threshold_squared(double tau, DistanceMode mode);

}  // namespace cardest
