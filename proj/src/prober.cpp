#include "cardest/prober.hpp"

#include <algorithm>
#include <cmath>

namespace cardest {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform sample without replacement: partial Fisher-Yates over the scratch
// vector; the first want entries form the sample. Any starting permutation
// yields a uniform subset, so scratch is reused across rounds.
std::span<const PointId> draw_sample(std::vector<PointId>& scratch, std::size_t want,
                                     std::mt19937_64& rng) {
  const std::size_t n = scratch.size();
  for (std::size_t i = 0; i < want; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(scratch[i], scratch[pick(rng)]);
  }
  return {scratch.data(), want};
}

std::uint64_t count_qualified(std::span<const PointId> sample, const DistanceEvaluator& dist,
                              double tau_sq) {
  std::uint64_t qualified = 0;
  for (PointId id : sample) {
    if (dist(id) <= tau_sq) {
      ++qualified;
    }
  }
  return qualified;
}

}  // namespace

NeighborEstimate probe_population(std::vector<PointId>& population, double tau_sq,
                                  const ProberConfig& cfg, const DistanceEvaluator& dist,
                                  std::mt19937_64& rng) {
  NeighborEstimate result;
  result.population = population.size();
  if (population.empty()) {
    return result;
  }

  const std::size_t n = population.size();
  const std::size_t first_want =
      static_cast<std::size_t>(std::ceil(cfg.s_init * static_cast<double>(n)));
  if (first_want >= n) {
    // The first round already covers the whole group: count it once, exactly.
    const std::uint64_t qualified = count_qualified(population, dist, tau_sq);
    result.sampled_total = n;
    result.sampled_qualified = qualified;
    result.rounds = 1;
    result.estimated_count = static_cast<double>(qualified);
    const BoundPair b = bounds(static_cast<double>(qualified) / static_cast<double>(n), n, cfg.confidence_a);
    result.global_stop = b.mu_upper < cfg.epsilon;
    return result;
  }

  double rate = cfg.s_init;
  while (rate <= cfg.s_max) {
    const std::size_t want = std::min(
        n, static_cast<std::size_t>(std::ceil(rate * static_cast<double>(n))));
    const auto sample = draw_sample(population, want, rng);
    const std::uint64_t qualified = count_qualified(sample, dist, tau_sq);

    const double p_hat = static_cast<double>(qualified) / static_cast<double>(want);
    const BoundPair b = bounds(p_hat, want, cfg.confidence_a);
    result.sampled_total += want;
    result.sampled_qualified += qualified;
    ++result.rounds;

    if (b.mu_upper < cfg.epsilon) {
      result.global_stop = true;
      break;
    }
    if (b.mu_upper - p_hat <= cfg.epsilon && p_hat - b.mu_lower <= cfg.epsilon) {
      break;
    }
    rate *= 2.0;
  }

  result.estimated_count = static_cast<double>(n) *
                           (static_cast<double>(result.sampled_qualified) /
                            static_cast<double>(result.sampled_total));
  return result;
}

BoundPair bounds(double p_hat, std::uint64_t w, double a) {
  if (w == 0) {
    throw std::invalid_argument("bounds: sample size w must be >= 1");
  }
  if (!(p_hat >= 0.0 && p_hat <= 1.0)) {
    throw std::invalid_argument("bounds: p_hat must be in [0, 1]");
  }
  if (!(a > 0.0)) {
    throw std::invalid_argument("bounds: a must be > 0");
  }
  const double wd = static_cast<double>(w);
  const double half = a / (2.0 * wd);
  const double upper_root = std::sqrt(p_hat + half) + std::sqrt(half);
  const double lower_root = std::sqrt(p_hat + 2.0 * a / (9.0 * wd)) - std::sqrt(half);
  const double lower = lower_root * lower_root - a / (18.0 * wd);

  BoundPair result;
  result.mu_upper = upper_root * upper_root;
  result.mu_lower = std::max(0.0, lower);
  result.p_hat = p_hat;
  result.w = w;
  result.a = a;
  return result;
}

DistanceEvaluator DistanceEvaluator::exact(const Dataset& dataset, std::span<const float> query) {
  if (query.size() != dataset.dim) {
    throw std::invalid_argument("DistanceEvaluator::exact: query dimension mismatch");
  }
  DistanceEvaluator e;
  e.kind_ = Kind::Exact;
  e.dataset_ = &dataset;
  e.query_ = query;
  return e;
}

DistanceEvaluator DistanceEvaluator::adc(const PqIndex& pq, std::span<const float> query) {
  DistanceEvaluator e;
  e.kind_ = Kind::Adc;
  e.pq_ = &pq;
  e.table_ = build_adc_table(pq, query);
  return e;
}

DistanceEvaluator DistanceEvaluator::custom(std::function<double(PointId)> fn) {
  DistanceEvaluator e;
  e.kind_ = Kind::Custom;
  e.fn_ = std::move(fn);
  return e;
}

NeighborhoodView::NeighborhoodView(const LshIndex& lsh, const NeighborTable& table,
                                   const HashCode& query_code)
    : lsh_(&lsh), table_(&table), d_max_(table.d_max) {
  if (table.code_count() != lsh.codes.size()) {
    throw InternalError("NeighborhoodView: neighbor table does not match the LSH index");
  }
  central_ = lsh.find_code(query_code);
  if (central_.has_value()) {
    use_table_ = true;
    return;
  }
  // Unseen code: group all stored codes by Hamming distance in one scan.
  scanned_groups_.assign(static_cast<std::size_t>(d_max_), {});
  for (std::size_t j = 0; j < lsh.codes.size(); ++j) {
    const std::size_t d = hamming_distance(query_code, lsh.codes[j]);
    if (d >= 1 && d <= static_cast<std::size_t>(d_max_)) {
      scanned_groups_[d - 1].push_back(static_cast<std::uint32_t>(j));
    }
  }
}

std::span<const std::uint32_t> NeighborhoodView::codes_at(int k) const {
  if (k < 1 || k > d_max_) {
    throw std::invalid_argument("NeighborhoodView::codes_at: k must be in [1, d_max]");
  }
  if (use_table_) {
    return table_->lookup(*central_, k);
  }
  return scanned_groups_[static_cast<std::size_t>(k - 1)];
}

std::size_t NeighborhoodView::population(int k) const {
  std::size_t total = 0;
  for (std::uint32_t code_id : codes_at(k)) {
    total += lsh_->buckets[code_id].size();
  }
  return total;
}

std::vector<PointId> NeighborhoodView::gather_points(int k) const {
  std::vector<PointId> points;
  points.reserve(population(k));
  for (std::uint32_t code_id : codes_at(k)) {
    const auto& bucket = lsh_->buckets[code_id];
    points.insert(points.end(), bucket.begin(), bucket.end());
  }
  return points;
}

std::int64_t estimate_central(const RangeQuery& query, const LshIndex& lsh,
                              const DistanceEvaluator& dist, DistanceMode mode) {
  const double tau_sq = threshold_squared(query.tau, mode);
  const HashCode code = lsh.compute_hash_code(query.point);
  const auto code_id = lsh.find_code(code);
  if (!code_id.has_value()) {
    return 0;
  }
  std::int64_t count = 0;
  for (PointId id : lsh.buckets[*code_id]) {
    if (dist(id) <= tau_sq) {
      ++count;
    }
  }
  return count;
}

NeighborEstimate estimate_neighbor(int k, const RangeQuery& query, const LshIndex& lsh,
                                   const NeighborTable& table, const ProberConfig& cfg,
                                   const DistanceEvaluator& dist, std::mt19937_64& rng) {
  cfg.validate();
  if (k < 1 || k > table.d_max) {
    throw std::invalid_argument("estimate_neighbor: k must be in [1, d_max]");
  }
  const NeighborhoodView view(lsh, table, lsh.compute_hash_code(query.point));
  auto population = view.gather_points(k);
  return probe_population(population, threshold_squared(query.tau, cfg.distance_mode), cfg,
                          dist, rng);
}

Estimate estimate(const RangeQuery& query, const LshIndex& lsh, const NeighborTable& table,
                  const ProberConfig& cfg, const DistanceEvaluator& dist, std::mt19937_64& rng) {
  cfg.validate();
  const double tau_sq = threshold_squared(query.tau, cfg.distance_mode);
  const HashCode code = lsh.compute_hash_code(query.point);
  const NeighborhoodView view(lsh, table, code);

  Estimate result;
  if (view.central_code_id().has_value()) {
    const auto& bucket = lsh.buckets[*view.central_code_id()];
    std::int64_t count = 0;
    for (PointId id : bucket) {
      if (dist(id) <= tau_sq) {
        ++count;
      }
    }
    result.cardinality += static_cast<double>(count);
    result.distances_computed += bucket.size();
  }

  const std::size_t max_visit = static_cast<std::size_t>(
      std::ceil(cfg.max_visit_fraction * static_cast<double>(lsh.point_count())));
  std::size_t visited = 0;
  result.termination = Termination::AllNeighborsProbed;

  for (int k = 1; k <= table.d_max; ++k) {
    if (visited >= max_visit) {
      result.termination = Termination::BudgetExhausted;
      break;
    }
    auto population = view.gather_points(k);
    const NeighborEstimate ne = probe_population(population, tau_sq, cfg, dist, rng);
    result.cardinality += ne.estimated_count;
    result.distances_computed += ne.sampled_total;
    result.max_neighbor_step = k;
    if (ne.global_stop) {
      result.termination = Termination::GlobalFlag;
      break;
    }
    visited += ne.population;
  }

  result.points_visited = visited;
  return result;
}

Estimate sampling_baseline(const RangeQuery& query, const Dataset& dataset, double fraction,
                           std::mt19937_64& rng, DistanceMode mode) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("sampling_baseline: fraction must be in (0, 1]");
  }
  const double tau_sq = threshold_squared(query.tau, mode);
  const std::size_t n = dataset.size();
  const std::size_t want = std::min(
      n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));

  std::vector<PointId> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    ids[i] = static_cast<PointId>(i);
  }
  const auto sample = draw_sample(ids, want, rng);

  std::int64_t count = 0;
  for (PointId id : sample) {
    if (squared_l2_distance(query.point, dataset.vec(id)) <= tau_sq) {
      ++count;
    }
  }

  Estimate result;
  result.cardinality = static_cast<double>(count) / fraction;
  result.points_visited = want;
  result.distances_computed = want;
  result.termination = Termination::AllNeighborsProbed;
  return result;
}

std::mt19937_64 query_rng(std::uint64_t seed, std::int64_t query_id) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(query_id))));
}

}  // namespace cardest
