#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cardest/core.hpp"

namespace cardest {

/// Per-iteration mean squared quantization error, per subspace.
struct PqTrainStats {
  std::vector<std::vector<double>> inertia;
};

/// Product-quantization index: M per-subspace codebooks of k_clusters centroids
/// plus one M-entry code per point. Cluster sizes are kept so centroids can be
/// maintained as running means when points are added.
struct PqIndex {
  std::size_t dim = 0;
  int m = 0;
  int k_clusters = 0;
  std::vector<float> codebooks;             // m * k_clusters * dsub()
  std::vector<std::uint16_t> codes;         // point_count() * m
  std::vector<std::uint32_t> cluster_sizes; // m * k_clusters

  std::size_t dsub() const { return dim / static_cast<std::size_t>(m); }
  std::size_t point_count() const {
    return m == 0 ? 0 : codes.size() / static_cast<std::size_t>(m);
  }
  std::span<const float> centroid(int sp, int c) const {
    const std::size_t d = dsub();
    return {codebooks.data() + (static_cast<std::size_t>(sp) * k_clusters + c) * d, d};
  }
  std::span<const std::uint16_t> code_of(PointId id) const {
    return {codes.data() + static_cast<std::size_t>(id) * m, static_cast<std::size_t>(m)};
  }
};

/// Per-subspace k-means with seeded k-means++ initialization, a fixed iteration
/// budget, and empty-cluster repair. Deterministic for a fixed seed.
PqIndex train_pq(const Dataset& dataset, int m, int k_clusters, std::uint64_t seed,
                 int kmeans_iters = 25, PqTrainStats* stats = nullptr);

/// Query-specific table of squared distances between each query subvector and
/// every centroid of the matching subspace.
struct AdcTable {
  int m = 0;
  int k_clusters = 0;
  std::vector<double> entries;  // m * k_clusters

  double at(int sp, int c) const {
    return entries[static_cast<std::size_t>(sp) * k_clusters + c];
  }
};

AdcTable build_adc_table(const PqIndex& pq, std::span<const float> query);

/// Squared asymmetric distance: sum over subspaces of the table entry selected
/// by the point's code.
double adc_distance(const PqIndex& pq, const AdcTable& table, PointId point_id);

/// Assigns new points to their nearest existing centroids and moves each
/// affected centroid to the running mean of its members. Codebook size and old
/// codes are unchanged.
PqIndex update_pq(const PqIndex& pq, const Dataset& new_points);

/// 8 when the dimension is divisible by 8, otherwise the largest divisor <= 8.
int default_pq_m(std::size_t dim);

}  // namespace cardest
