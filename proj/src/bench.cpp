#include "cardest/bench.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cardest {

std::int64_t brute_force_cardinality(const RangeQuery& query, const Dataset& dataset,
                                     DistanceMode mode) {
  const double tau_sq = threshold_squared(query.tau, mode);
  std::int64_t count = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (squared_l2_distance(query.point, dataset.vec(static_cast<PointId>(i))) <= tau_sq) {
      ++count;
    }
  }
  return count;
}

double q_error(double estimate, double truth) {
  if (truth < 1.0) {
    throw std::invalid_argument("q_error: truth must be >= 1");
  }
  const double est = std::max(estimate, 1.0);
  return std::max(est, truth) / std::min(est, truth);
}

std::vector<std::int64_t> geometric_targets(std::int64_t c_max, int n_cards) {
  if (c_max < 1 || n_cards < 1) {
    throw std::invalid_argument("geometric_targets: c_max and n_cards must be >= 1");
  }
  std::vector<std::int64_t> targets;
  if (n_cards == 1) {
    targets.push_back(1);
    return targets;
  }
  const double log_max = std::log(static_cast<double>(c_max));
  for (int i = 0; i < n_cards; ++i) {
    const double value = std::exp(log_max * static_cast<double>(i) /
                                  static_cast<double>(n_cards - 1));
    auto target = static_cast<std::int64_t>(std::llround(value));
    target = std::clamp<std::int64_t>(target, 1, c_max);
    if (targets.empty() || target != targets.back()) {
      targets.push_back(target);
    }
  }
  return targets;
}

std::vector<QueryRecord> generate_workload(const Dataset& dataset, std::uint64_t seed,
                                           std::size_t n_queries, int n_cards,
                                           DistanceMode mode) {
  const std::size_t n = dataset.size();
  if (n < 100) {
    throw std::invalid_argument("generate_workload: dataset must hold at least 100 points");
  }
  if (n_queries == 0) {
    n_queries = std::max<std::size_t>(1, std::min<std::size_t>(n / 1000, 1000));
  }
  n_queries = std::min(n_queries, n);

  const std::int64_t c_max =
      std::max<std::int64_t>(1, std::min<std::int64_t>(20000, static_cast<std::int64_t>(n / 100)));
  const auto targets = geometric_targets(c_max, n_cards);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> candidates(n);
  for (std::size_t i = 0; i < n; ++i) {
    candidates[i] = i;
  }
  for (std::size_t i = 0; i < n_queries; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(candidates[i], candidates[pick(rng)]);
  }

  std::vector<QueryRecord> records;
  records.reserve(n_queries * targets.size());
  std::vector<double> distances(n);
  std::int64_t next_id = 0;
  for (std::size_t qi = 0; qi < n_queries; ++qi) {
    const auto qvec = dataset.vec(static_cast<PointId>(candidates[qi]));
    for (std::size_t p = 0; p < n; ++p) {
      distances[p] = squared_l2_distance(qvec, dataset.vec(static_cast<PointId>(p)));
    }
    std::sort(distances.begin(), distances.end());

    for (std::int64_t c : targets) {
      const double tau_sq = distances[static_cast<std::size_t>(c - 1)];
      QueryRecord rec;
      rec.query_id = next_id++;
      rec.vector.assign(qvec.begin(), qvec.end());
      rec.tau = mode == DistanceMode::L2 ? std::sqrt(tau_sq) : tau_sq;

      // Label with the count at the stored tau so the record stays consistent
      // with brute force even after the L2 round trip through sqrt.
      const double effective = threshold_squared(rec.tau, mode);
      const auto past = std::upper_bound(distances.begin(), distances.end(), effective);
      rec.true_cardinality = static_cast<std::int64_t>(past - distances.begin());
      records.push_back(std::move(rec));
    }
  }
  return records;
}

namespace {

double nearest_rank(std::span<const double> sorted, double percentile) {
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

}  // namespace

QErrorReport evaluate(std::span<const EvalRow> rows) {
  if (rows.empty()) {
    throw std::invalid_argument("evaluate: no rows");
  }
  QErrorReport report;
  report.per_query.assign(rows.begin(), rows.end());

  std::vector<double> errors;
  errors.reserve(rows.size());
  double sum = 0.0;
  double latency_sum = 0.0;
  for (auto& row : report.per_query) {
    row.q_err = q_error(row.estimate, row.truth);
    errors.push_back(row.q_err);
    sum += row.q_err;
    latency_sum += row.latency_us;
  }
  std::sort(errors.begin(), errors.end());

  report.mean = sum / static_cast<double>(errors.size());
  report.p90 = nearest_rank(errors, 90.0);
  report.p95 = nearest_rank(errors, 95.0);
  report.p99 = nearest_rank(errors, 99.0);
  report.max = errors.back();
  report.mean_latency_us = latency_sum / static_cast<double>(errors.size());
  return report;
}

}  // namespace cardest
