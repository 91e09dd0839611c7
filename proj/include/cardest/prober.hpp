#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "cardest/core.hpp"
#include "cardest/lsh.hpp"
#include "cardest/neighbors.hpp"
#include "cardest/pq.hpp"

namespace cardest {

/// Chernoff-style confidence interval around an observed selectivity p_hat
/// drawn from w samples, with a = ln(1 / Pr[fail]).
struct BoundPair {
  double mu_upper = 0.0;
  double mu_lower = 0.0;
  double p_hat = 0.0;
  std::uint64_t w = 0;
  double a = 0.0;
};

/// mu_upper = (sqrt(p_hat + a/2w) + sqrt(a/2w))^2
/// mu_lower = max(0, (sqrt(p_hat + 2a/9w) - sqrt(a/2w))^2 - a/18w)
BoundPair bounds(double p_hat, std::uint64_t w, double a);

/// Outcome of probing the buckets at one Hamming step.
struct NeighborEstimate {
  double estimated_count = 0.0;
  std::uint64_t sampled_total = 0;      // sample sizes accumulated over rounds
  std::uint64_t sampled_qualified = 0;  // qualifying samples accumulated over rounds
  bool global_stop = false;             // mu_upper fell below epsilon
  int rounds = 0;
  std::size_t population = 0;           // points in the probed buckets
};

/// Distance oracle bound to one query: exact squared L2 against dataset rows,
/// ADC lookups against a PQ index, or an arbitrary callback (used by tests).
class DistanceEvaluator {
 public:
  static DistanceEvaluator exact(const Dataset& dataset, std::span<const float> query);
  static DistanceEvaluator adc(const PqIndex& pq, std::span<const float> query);
  static DistanceEvaluator custom(std::function<double(PointId)> fn);

  double operator()(PointId id) const {
    switch (kind_) {
      case Kind::Exact:
        return squared_l2_distance(query_, dataset_->vec(id));
      case Kind::Adc:
        return adc_distance(*pq_, table_, id);
      case Kind::Custom:
        return fn_(id);
    }
    throw InternalError("DistanceEvaluator: invalid kind");
  }

 private:
  enum class Kind { Exact, Adc, Custom };

  DistanceEvaluator() = default;

  Kind kind_ = Kind::Exact;
  const Dataset* dataset_ = nullptr;
  std::span<const float> query_;
  const PqIndex* pq_ = nullptr;
  AdcTable table_;
  std::function<double(PointId)> fn_;
};

/// Buckets of one query grouped by Hamming step from its hash code. Uses the
/// precomputed neighbor table when the code exists in the index; otherwise the
/// groups are derived by a one-off scan over all codes.
class NeighborhoodView {
 public:
  NeighborhoodView(const LshIndex& lsh, const NeighborTable& table, const HashCode& query_code);

  std::optional<std::uint32_t> central_code_id() const { return central_; }
  int d_max() const { return d_max_; }

  std::span<const std::uint32_t> codes_at(int k) const;
  std::size_t population(int k) const;
  std::vector<PointId> gather_points(int k) const;

 private:
  const LshIndex* lsh_;
  const NeighborTable* table_;
  std::optional<std::uint32_t> central_;
  bool use_table_ = false;
  int d_max_ = 0;
  std::vector<std::vector<std::uint32_t>> scanned_groups_;  // when the code is unseen
};

/// Exact count of qualifying points in the query's own bucket (0 when the
/// query hashes to a code with no bucket).
std::int64_t estimate_central(const RangeQuery& query, const LshIndex& lsh,
                              const DistanceEvaluator& dist,
                              DistanceMode mode = DistanceMode::SquaredL2);

/// The progressive-sampling loop over an explicit population of point ids:
/// the sampling rate doubles each round until the confidence interval is
/// epsilon-tight (stop sampling) or mu_upper < epsilon (raise the global stop).
/// Each round draws a fresh uniform sample without replacement; population is
/// reshuffled in place. When the first round already covers the whole
/// population, the exact count is returned after a single scan.
NeighborEstimate probe_population(std::vector<PointId>& population, double tau_sq,
                                  const ProberConfig& cfg, const DistanceEvaluator& dist,
                                  std::mt19937_64& rng);

/// Probes the buckets at Hamming step k of the query's code.
NeighborEstimate estimate_neighbor(int k, const RangeQuery& query, const LshIndex& lsh,
                                   const NeighborTable& table, const ProberConfig& cfg,
                                   const DistanceEvaluator& dist, std::mt19937_64& rng);

/// Full adaptive probe: exact central count plus neighbor estimates for
/// k = 1, 2, ... until the visit budget, the global stop flag, or d_max.
Estimate estimate(const RangeQuery& query, const LshIndex& lsh, const NeighborTable& table,
                  const ProberConfig& cfg, const DistanceEvaluator& dist, std::mt19937_64& rng);

/// Uniform-sampling baseline: scans ceil(fraction * N) points, scales by 1/fraction.
Estimate sampling_baseline(const RangeQuery& query, const Dataset& dataset, double fraction,
                           std::mt19937_64& rng, DistanceMode mode = DistanceMode::SquaredL2);

/// Deterministic per-query RNG stream.
std::mt19937_64 query_rng(std::uint64_t seed, std::int64_t query_id);

}  // namespace cardest
