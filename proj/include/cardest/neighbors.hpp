#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cardest/core.hpp"
#include "cardest/lsh.hpp"

namespace cardest {

/// Precomputed map from every hash code to the code-ids at each Hamming
/// distance k in [1, d_max]. Lists are sorted by code-id and symmetric:
/// j appears under i at distance k iff i appears under j.
struct NeighborTable {
  int d_max = 0;
  std::vector<std::vector<std::vector<std::uint32_t>>> lists;  // [code][k-1]

  std::size_t code_count() const { return lists.size(); }

  std::span<const std::uint32_t> lookup(std::uint32_t code_id, int k) const;

  bool operator==(const NeighborTable&) const = default;
};

/// Exhaustive pairwise construction over distinct codes, keeping distances in
/// (0, d_max]. The pairwise scan runs on multiple threads; the result does not
/// depend on the thread count.
NeighborTable build_neighbor_table(std::span<const HashCode> codes, int d_max);

/// Extends a table with new codes using only old-x-new and new-x-new distance
/// computations. Equals build_neighbor_table(old + new, d_max).
NeighborTable update_neighbor_table(const NeighborTable& table,
                                    std::span<const HashCode> old_codes,
                                    std::span<const HashCode> new_codes, int d_max);

}  // namespace cardest
