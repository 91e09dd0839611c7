#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cardest/core.hpp"
#include "cardest/lsh.hpp"
#include "cardest/neighbors.hpp"
#include "cardest/pq.hpp"

namespace cardest {

struct BundleParams {
  int k_funcs = 12;
  int target_values = 4;
  int d_max = 0;  // 0 -> min(k_funcs, 6)
  bool with_pq = false;
  int pq_m = 0;  // 0 -> default_pq_m(dim)
  int pq_k = 256;
  int kmeans_iters = 25;
  std::uint64_t seed = 1;

  int resolved_d_max() const { return d_max > 0 ? d_max : std::min(k_funcs, 6); }
};

/// Everything needed to answer estimates over one dataset snapshot.
struct IndexBundle {
  Dataset dataset;
  LshIndex lsh;
  NeighborTable neighbors;
  std::optional<PqIndex> pq;
  BundleParams params;
  std::vector<std::string> lineage;
};

IndexBundle build_bundle(Dataset dataset, BundleParams params);

/// Applies a batch of new points: hashes them with the original functions and
/// re-normalizes the width. The neighbor table is patched incrementally when
/// the width (and therefore the old code enumeration) is unchanged, otherwise
/// rebuilt. The PQ index is retrained once new/old exceeds
/// pq_rebuild_threshold, otherwise maintained by running means.
void update_bundle(IndexBundle& bundle, const Dataset& new_points,
                   double pq_rebuild_threshold = 0.5);

/// Writes manifest.json, data.fvecs, lsh.bin, neighbors.bin and optionally
/// pq.bin into dir. Component files carry their own checksums.
void save_index(const IndexBundle& bundle, const std::filesystem::path& dir);
IndexBundle load_index(const std::filesystem::path& dir);

}  // namespace cardest
