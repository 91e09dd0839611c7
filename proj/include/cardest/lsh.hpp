#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "cardest/core.hpp"

namespace cardest {

using HashCode = std::vector<std::int32_t>;

struct HashCodeHash {
  std::size_t operator()(const HashCode& code) const {
    std::size_t seed = code.size();
    for (std::int32_t token : code) {
      seed ^= static_cast<std::size_t>(token) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
    }
    return seed;
  }
};

/// One p-stable hash function h(x) = floor(a.x / W + offset_frac).
///
/// The uniform offset is stored as a fraction of the bucket width
/// (b = offset_frac * W), so b stays uniform over [0, W) no matter how W is
/// re-normalized later, and the partition produced by build-then-update equals
/// the partition of a single full build under the same seed.
struct LshFunction {
  std::vector<double> a;      // projection direction, one entry per dimension
  double offset_frac = 0.0;   // b / W, in [0, 1)
};

struct LshIndex {
  std::size_t dim = 0;
  int k_funcs = 0;
  int target_values = 0;
  double width = 0.0;
  std::vector<LshFunction> functions;
  std::vector<double> raw;                       // N x K projections a.x, row-major per point
  std::vector<HashCode> codes;                   // distinct codes in first-occurrence order
  std::vector<std::vector<PointId>> buckets;     // code-id -> member point ids
  std::vector<std::uint32_t> code_of_point;      // point id -> code-id
  std::unordered_map<HashCode, std::uint32_t, HashCodeHash> code_index;

  std::size_t point_count() const { return code_of_point.size(); }
  std::span<const double> raw_of(PointId id) const {
    return {raw.data() + static_cast<std::size_t>(id) * k_funcs,
            static_cast<std::size_t>(k_funcs)};
  }

  HashCode compute_hash_code(std::span<const float> x) const;
  std::optional<std::uint32_t> find_code(const HashCode& code) const;
};

/// Builds the partition: K seeded Gaussian projections, width normalized so each
/// function emits roughly target_values_per_func distinct tokens, one bucket per
/// distinct code. Deterministic for a fixed seed.
LshIndex build_lsh(const Dataset& dataset, int k_funcs, std::uint64_t seed,
                   int target_values_per_func);

/// W = (max raw - min raw) / target_values_per_func over all stored projections.
double normalize_w(std::span<const double> raw_projections, int target_values_per_func);

/// Adds points with the original hash functions, re-normalizes W over old+new
/// projections, and re-derives every code. New point ids continue after the old ones.
LshIndex update_lsh(const LshIndex& index, const Dataset& new_points);

/// Re-derives codes, buckets and the code index from the stored projections
/// and current width (used when reloading a persisted index).
void rebuild_lsh_table(LshIndex& index);

}  // namespace cardest
