#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "cardest/neighbors.hpp"

using namespace cardest;

namespace {

std::vector<HashCode> random_codes(std::size_t n, std::size_t len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int32_t> token(0, 4);
  std::set<HashCode> unique;
  while (unique.size() < n) {
    HashCode code(len);
    for (auto& t : code) {
      t = token(rng);
    }
    unique.insert(std::move(code));
  }
  return {unique.begin(), unique.end()};
}

// O(n^2) reference construction, written independently of the library path.
std::map<std::pair<std::size_t, int>, std::vector<std::uint32_t>> oracle_table(
    std::span<const HashCode> codes, int d_max) {
  std::map<std::pair<std::size_t, int>, std::vector<std::uint32_t>> table;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    for (std::size_t j = 0; j < codes.size(); ++j) {
      if (i == j) {
        continue;
      }
      int d = 0;
      for (std::size_t t = 0; t < codes[i].size(); ++t) {
        d += codes[i][t] != codes[j][t] ? 1 : 0;
      }
      if (d >= 1 && d <= d_max) {
        table[{i, d}].push_back(static_cast<std::uint32_t>(j));
      }
    }
  }
  return table;
}

}  // namespace

TEST_CASE("neighbor lists around a known code") {
  // Central code plus its neighborhood at Hamming distances 1..4.
  const std::vector<HashCode> codes{
      {0, 2, 1, 3},                               // 0: central
      {1, 2, 1, 3}, {0, 2, 1, 4},                 // 1,2: distance 1
      {2, 3, 1, 3}, {0, 1, 2, 3}, {1, 2, 1, 4},   // 3,4,5: distance 2
      {0, 3, 2, 4}, {1, 2, 2, 2}, {1, 1, 0, 3},   // 6,7,8: distance 3
      {1, 1, 2, 2},                               // 9: distance 4
  };
  const auto table = build_neighbor_table(codes, 4);

  const auto k1 = table.lookup(0, 1);
  CHECK(std::vector<std::uint32_t>(k1.begin(), k1.end()) == std::vector<std::uint32_t>{1, 2});
  const auto k2 = table.lookup(0, 2);
  CHECK(std::vector<std::uint32_t>(k2.begin(), k2.end()) == std::vector<std::uint32_t>{3, 4, 5});
  const auto k3 = table.lookup(0, 3);
  CHECK(k3.size() == 3);
  const auto k4 = table.lookup(0, 4);
  CHECK(std::vector<std::uint32_t>(k4.begin(), k4.end()) == std::vector<std::uint32_t>{9});
}

TEST_CASE("single code gives empty lists") {
  const std::vector<HashCode> codes{{0, 0, 0}};
  const auto table = build_neighbor_table(codes, 3);
  for (int k = 1; k <= 3; ++k) {
    CHECK(table.lookup(0, k).empty());
  }
}

TEST_CASE("duplicate codes are rejected") {
  const std::vector<HashCode> codes{{1, 2}, {1, 2}};
  CHECK_THROWS_AS(build_neighbor_table(codes, 2), std::invalid_argument);
}

TEST_CASE("lookup validates its arguments") {
  const std::vector<HashCode> codes{{0, 1}, {1, 1}};
  const auto table = build_neighbor_table(codes, 2);
  CHECK_THROWS_AS(table.lookup(0, 0), std::invalid_argument);
  CHECK_THROWS_AS(table.lookup(0, 3), std::invalid_argument);
  CHECK_THROWS_AS(table.lookup(5, 1), std::invalid_argument);
  CHECK(table.lookup(1, 2).empty());  // no code at distance 2: empty, not an error
}

TEST_CASE("construction agrees with the quadratic oracle on random codes") {
  const auto codes = random_codes(200, 12, 404);
  const int d_max = 4;
  const auto table = build_neighbor_table(codes, d_max);
  const auto oracle = oracle_table(codes, d_max);

  std::size_t total_entries = 0;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    for (int k = 1; k <= d_max; ++k) {
      const auto got = table.lookup(static_cast<std::uint32_t>(i), k);
      const auto it = oracle.find({i, k});
      const std::vector<std::uint32_t> want =
          it == oracle.end() ? std::vector<std::uint32_t>{} : it->second;
      CHECK(std::vector<std::uint32_t>(got.begin(), got.end()) == want);
      total_entries += got.size();
    }
  }
  // Every unordered pair within d_max appears exactly twice.
  CHECK(total_entries % 2 == 0);

  // Lists really hold codes at exactly the keyed distance.
  for (std::size_t i = 0; i < codes.size(); ++i) {
    for (int k = 1; k <= d_max; ++k) {
      for (auto j : table.lookup(static_cast<std::uint32_t>(i), k)) {
        CHECK(hamming_distance(codes[i], codes[j]) == static_cast<std::size_t>(k));
      }
    }
  }
}

TEST_CASE("symmetry: i in lookup(j, k) iff j in lookup(i, k)") {
  const auto codes = random_codes(120, 10, 777);
  const auto table = build_neighbor_table(codes, 3);
  for (std::uint32_t i = 0; i < codes.size(); ++i) {
    for (int k = 1; k <= 3; ++k) {
      for (auto j : table.lookup(i, k)) {
        const auto back = table.lookup(j, k);
        CHECK(std::binary_search(back.begin(), back.end(), i));
      }
    }
  }
}

TEST_CASE("update with no new codes changes nothing") {
  const auto codes = random_codes(50, 8, 11);
  const auto table = build_neighbor_table(codes, 3);
  const auto updated = update_neighbor_table(table, codes, {}, 3);
  CHECK(updated == table);
}

TEST_CASE("one new code at distance 1 updates both sides") {
  const std::vector<HashCode> old_codes{{0, 0, 0, 0}, {5, 5, 5, 5}};
  const std::vector<HashCode> new_codes{{0, 0, 0, 1}};
  const auto table = build_neighbor_table(old_codes, 2);
  const auto updated = update_neighbor_table(table, old_codes, new_codes, 2);

  const auto from_old = updated.lookup(0, 1);
  CHECK(std::vector<std::uint32_t>(from_old.begin(), from_old.end()) ==
        std::vector<std::uint32_t>{2});
  const auto from_new = updated.lookup(2, 1);
  CHECK(std::vector<std::uint32_t>(from_new.begin(), from_new.end()) ==
        std::vector<std::uint32_t>{0});
}

TEST_CASE("incremental update equals batch build on a random split") {
  const auto codes = random_codes(200, 12, 31337);
  const int d_max = 4;
  const std::size_t split = 120;  // 60 / 40
  const std::span<const HashCode> old_codes{codes.data(), split};
  const std::span<const HashCode> new_codes{codes.data() + split, codes.size() - split};

  const auto incremental =
      update_neighbor_table(build_neighbor_table(old_codes, d_max), old_codes, new_codes, d_max);
  const auto batch = build_neighbor_table(codes, d_max);
  CHECK(incremental == batch);
}

TEST_CASE("overlapping new codes are rejected") {
  const auto codes = random_codes(20, 6, 1);
  const auto table = build_neighbor_table(codes, 2);
  const std::vector<HashCode> overlap{codes[3]};
  CHECK_THROWS_AS(update_neighbor_table(table, codes, overlap, 2), std::invalid_argument);
}
