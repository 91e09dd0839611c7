#include "cardest/neighbors.hpp"

#include <algorithm>
#include <string>
#include <thread>
#include <unordered_set>

namespace cardest {

namespace {

// Hamming distance with early exit once the count exceeds cap.
int hamming_capped(const HashCode& x, const HashCode& y, int cap) {
  int count = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != y[i]) {
      if (++count > cap) {
        return cap + 1;
      }
    }
  }
  return count;
}

void check_distinct(std::span<const HashCode> codes, const char* who) {
  std::unordered_set<HashCode, HashCodeHash> seen;
  seen.reserve(codes.size());
  for (const auto& code : codes) {
    if (!seen.insert(code).second) {
      throw std::invalid_argument(std::string(who) + ": duplicate hash codes");
    }
  }
}

void validate_d_max(int d_max, std::size_t code_len) {
  if (d_max < 1 || static_cast<std::size_t>(d_max) > code_len) {
    throw std::invalid_argument("neighbor table: d_max must be in [1, code length]");
  }
}

}  // namespace

std::span<const std::uint32_t> NeighborTable::lookup(std::uint32_t code_id, int k) const {
  if (code_id >= lists.size()) {
    throw std::invalid_argument("NeighborTable::lookup: code_id out of range");
  }
  if (k < 1 || k > d_max) {
    throw std::invalid_argument("NeighborTable::lookup: k must be in [1, d_max]");
  }
  return lists[code_id][static_cast<std::size_t>(k - 1)];
}

NeighborTable build_neighbor_table(std::span<const HashCode> codes, int d_max) {
  if (!codes.empty()) {
    validate_d_max(d_max, codes.front().size());
  }
  check_distinct(codes, "build_neighbor_table");

  NeighborTable table;
  table.d_max = d_max;
  const std::size_t n = codes.size();
  table.lists.assign(n, std::vector<std::vector<std::uint32_t>>(static_cast<std::size_t>(d_max)));

  auto fill_rows = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto& row = table.lists[i];
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) {
          continue;
        }
        const int d = hamming_capped(codes[i], codes[j], d_max);
        if (d <= d_max) {
          row[static_cast<std::size_t>(d - 1)].push_back(static_cast<std::uint32_t>(j));
        }
      }
    }
  };

  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t n_threads = std::min<std::size_t>(hw, std::max<std::size_t>(1, n / 512));
  if (n_threads <= 1) {
    fill_rows(0, n);
  } else {
    std::vector<std::thread> workers;
    const std::size_t chunk = (n + n_threads - 1) / n_threads;
    for (std::size_t t = 0; t < n_threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin < end) {
        workers.emplace_back(fill_rows, begin, end);
      }
    }
    for (auto& w : workers) {
      w.join();
    }
  }
  return table;
}

NeighborTable update_neighbor_table(const NeighborTable& table,
                                    std::span<const HashCode> old_codes,
                                    std::span<const HashCode> new_codes, int d_max) {
  if (d_max != table.d_max) {
    throw std::invalid_argument("update_neighbor_table: d_max differs from the table's");
  }
  if (old_codes.size() != table.code_count()) {
    throw std::invalid_argument("update_neighbor_table: old_codes do not match the table");
  }
  if (!new_codes.empty()) {
    validate_d_max(d_max, new_codes.front().size());
  }
  check_distinct(new_codes, "update_neighbor_table");
  {
    std::unordered_set<HashCode, HashCodeHash> old_set(old_codes.begin(), old_codes.end());
    for (const auto& code : new_codes) {
      if (old_set.count(code) != 0) {
        throw std::invalid_argument("update_neighbor_table: new code already present");
      }
    }
  }

  NeighborTable updated = table;
  const std::size_t n_old = old_codes.size();
  const std::size_t n_new = new_codes.size();
  updated.lists.resize(n_old + n_new,
                       std::vector<std::vector<std::uint32_t>>(static_cast<std::size_t>(d_max)));

  // Old x new: appended ids exceed every old id, so old rows stay sorted.
  for (std::size_t i = 0; i < n_old; ++i) {
    for (std::size_t j = 0; j < n_new; ++j) {
      const int d = hamming_capped(old_codes[i], new_codes[j], d_max);
      if (d <= d_max) {
        updated.lists[i][d - 1].push_back(static_cast<std::uint32_t>(n_old + j));
        updated.lists[n_old + j][d - 1].push_back(static_cast<std::uint32_t>(i));
      }
    }
  }

  // New x new, both directions of each unordered pair.
  for (std::size_t i = 0; i < n_new; ++i) {
    for (std::size_t j = i + 1; j < n_new; ++j) {
      const int d = hamming_capped(new_codes[i], new_codes[j], d_max);
      if (d <= d_max) {
        updated.lists[n_old + i][d - 1].push_back(static_cast<std::uint32_t>(n_old + j));
        updated.lists[n_old + j][d - 1].push_back(static_cast<std::uint32_t>(n_old + i));
      }
    }
  }
  return updated;
}

}  // namespace cardest
