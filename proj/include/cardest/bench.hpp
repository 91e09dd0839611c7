#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cardest/core.hpp"
#include "cardest/ingest.hpp"

namespace cardest {

/// Exact linear-scan count; the ground truth every workload is labeled with.
std::int64_t brute_force_cardinality(const RangeQuery& query, const Dataset& dataset,
                                     DistanceMode mode = DistanceMode::SquaredL2);

/// max(est, truth) / min(est, truth), with estimates below 1 clamped to 1.
/// Requires truth >= 1.
double q_error(double estimate, double truth);

/// Inclusive geometric grid of n_cards integer targets in [1, c_max],
/// de-duplicated after rounding.
std::vector<std::int64_t> geometric_targets(std::int64_t c_max, int n_cards);

/// Samples query vectors from the dataset (n_queries = 0 picks
/// min(0.1% of N, 1000)), builds a geometric target-cardinality grid in
/// [1, min(20000, 1% of N)] per query, and labels each target with the minimum
/// tau reaching it plus the exact cardinality at that tau.
std::vector<QueryRecord> generate_workload(const Dataset& dataset, std::uint64_t seed,
                                           std::size_t n_queries = 0, int n_cards = 40,
                                           DistanceMode mode = DistanceMode::SquaredL2);

struct EvalRow {
  std::int64_t query_id = 0;
  double truth = 0.0;
  double estimate = 0.0;
  double q_err = 0.0;
  double latency_us = 0.0;
};

struct QErrorReport {
  double mean = 0.0;
  double p90 = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  double max = 0.0;
  double mean_latency_us = 0.0;
  std::vector<EvalRow> per_query;
};

/// Aggregates per-query errors into the mean and nearest-rank percentiles.
/// Fills q_err on every row; rows arrive with truth, estimate and latency set.
QErrorReport evaluate(std::span<const EvalRow> rows);

}  // namespace cardest
