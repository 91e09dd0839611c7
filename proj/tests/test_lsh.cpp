#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <span>

#include "cardest/lsh.hpp"
#include "support/synthetic.hpp"

using namespace cardest;
using testsupport::make_gaussian_mixture;
using testsupport::split_dataset;

namespace {

// Canonical form of a bucket partition, independent of code enumeration order.
std::set<std::vector<PointId>> partition_of(const LshIndex& index) {
  std::set<std::vector<PointId>> partition;
  for (const auto& bucket : index.buckets) {
    auto sorted = bucket;
    std::sort(sorted.begin(), sorted.end());
    partition.insert(std::move(sorted));
  }
  return partition;
}

}  // namespace

TEST_CASE("build_lsh on a single point yields a single bucket") {
  Dataset dataset(3);
  dataset.append(Vector{1.0f, -2.0f, 0.5f});
  const auto index = build_lsh(dataset, 4, 42, 4);
  REQUIRE(index.buckets.size() == 1);
  CHECK(index.buckets[0] == std::vector<PointId>{0});
  CHECK(index.codes.size() == 1);
}

TEST_CASE("build_lsh rejects bad arguments") {
  Dataset dataset(2);
  dataset.append(Vector{0.0f, 1.0f});
  CHECK_THROWS_AS(build_lsh(dataset, 0, 1, 4), std::invalid_argument);
  Dataset empty;
  CHECK_THROWS_AS(build_lsh(empty, 4, 1, 4), std::invalid_argument);
}

TEST_CASE("duplicate points share a code and a bucket") {
  Dataset dataset(4);
  const Vector p{0.25f, -1.0f, 3.5f, 2.0f};
  dataset.append(p);
  dataset.append(Vector{5.0f, 1.0f, -2.0f, 0.0f});
  dataset.append(p);
  const auto index = build_lsh(dataset, 6, 9, 4);
  CHECK(index.code_of_point[0] == index.code_of_point[2]);
  const auto& bucket = index.buckets[index.code_of_point[0]];
  CHECK(std::count(bucket.begin(), bucket.end(), PointId{0}) == 1);
  CHECK(std::count(bucket.begin(), bucket.end(), PointId{2}) == 1);
}

TEST_CASE("10 functions with ~4 values bound the number of distinct buckets") {
  const auto dataset = make_gaussian_mixture(2000, 8, 5, 77);
  const auto index = build_lsh(dataset, 10, 3, 4);
  CHECK(index.codes.size() <= 1048576);  // 4^10
  // Each function should emit a handful of distinct tokens, near the target.
  for (int j = 0; j < index.k_funcs; ++j) {
    std::set<std::int32_t> tokens;
    for (const auto& code : index.codes) {
      tokens.insert(code[j]);
    }
    CHECK(tokens.size() >= 2);
    CHECK(tokens.size() <= 8);
  }
}

TEST_CASE("compute_hash_code matches the stored bucket code for every point") {
  const auto dataset = make_gaussian_mixture(500, 6, 4, 123);
  const auto index = build_lsh(dataset, 8, 5, 4);
  for (std::size_t p = 0; p < dataset.size(); ++p) {
    const auto code = index.compute_hash_code(dataset.vec(static_cast<PointId>(p)));
    CHECK(code == index.codes[index.code_of_point[p]]);
  }
  CHECK_THROWS_AS(index.compute_hash_code(Vector{1.0f}), std::invalid_argument);
}

TEST_CASE("zero vector hashes to the all-zero code") {
  Dataset dataset(5);
  dataset.append(Vector{1.0f, 2.0f, 3.0f, 4.0f, 5.0f});
  dataset.append(Vector{-1.0f, 2.0f, -3.0f, 4.0f, -5.0f});
  const auto index = build_lsh(dataset, 7, 21, 4);
  // Raw projections of the zero vector are all zero, so floor(0/W + frac) = 0.
  const auto code = index.compute_hash_code(Vector(5, 0.0f));
  for (auto token : code) {
    CHECK(token == 0);
  }
}

TEST_CASE("perturbations below the boundary gap leave the code unchanged") {
  const auto dataset = make_gaussian_mixture(200, 6, 3, 31);
  const auto index = build_lsh(dataset, 8, 15, 4);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int trial = 0; trial < 20; ++trial) {
    const PointId p = static_cast<PointId>(trial * 7 % dataset.size());
    const auto x = dataset.vec(p);

    Vector direction(index.dim);
    for (auto& v : direction) {
      v = static_cast<float>(gauss(rng));
    }

    // Largest step that keeps every projection strictly inside its cell.
    double step = std::numeric_limits<double>::max();
    for (int j = 0; j < index.k_funcs; ++j) {
      double proj_dir = 0.0;
      for (std::size_t i = 0; i < direction.size(); ++i) {
        proj_dir += index.functions[j].a[i] * static_cast<double>(direction[i]);
      }
      if (proj_dir == 0.0) {
        continue;
      }
      const double cell_pos = index.raw_of(p)[j] / index.width + index.functions[j].offset_frac;
      const double frac = cell_pos - std::floor(cell_pos);
      const double room = (proj_dir > 0.0 ? 1.0 - frac : frac) * index.width;
      step = std::min(step, room / std::abs(proj_dir));
    }
    REQUIRE(step < std::numeric_limits<double>::max());

    Vector perturbed(x.begin(), x.end());
    for (std::size_t i = 0; i < perturbed.size(); ++i) {
      perturbed[i] += static_cast<float>(0.25 * step * direction[i]);
    }
    CHECK(index.compute_hash_code(perturbed) == index.codes[index.code_of_point[p]]);
  }
}

TEST_CASE("normalize_w arithmetic") {
  {
    std::vector<double> raw{0.0, 12.0, 40.0, 7.0};
    CHECK(normalize_w(raw, 4) == 10.0);
  }
  {
    std::vector<double> raw{-5.0, 5.0, 0.0};
    CHECK(normalize_w(raw, 4) == 2.5);
  }
  {
    std::vector<double> same{3.0, 3.0, 3.0};
    CHECK_THROWS_AS(normalize_w(same, 4), DataError);
  }
  {
    std::vector<double> raw{0.0, 1.0};
    CHECK_THROWS_AS(normalize_w(raw, 1), std::invalid_argument);
    CHECK_THROWS_AS(normalize_w(std::span<const double>{}, 4), std::invalid_argument);
  }
}

TEST_CASE("update doubling the projection range doubles W and recomputes codes") {
  // Points on a line so the raw projection range is easy to steer.
  Dataset initial(2);
  for (int i = 0; i <= 10; ++i) {
    initial.append(Vector{static_cast<float>(i), static_cast<float>(2 * i)});
  }
  const auto index = build_lsh(initial, 3, 7, 4);

  Dataset wider(2);
  wider.append(Vector{20.0f, 40.0f});
  const auto updated = update_lsh(index, wider);
  CHECK(updated.width > index.width);

  // Oracle: recompute every token by floor division from stored projections.
  for (std::size_t p = 0; p < updated.point_count(); ++p) {
    const auto raw = updated.raw_of(static_cast<PointId>(p));
    const auto& code = updated.codes[updated.code_of_point[p]];
    for (int j = 0; j < updated.k_funcs; ++j) {
      const auto expect = static_cast<std::int32_t>(
          std::floor(raw[j] / updated.width + updated.functions[j].offset_frac));
      CHECK(code[j] == expect);
    }
  }
}

TEST_CASE("update with no points changes nothing") {
  const auto dataset = make_gaussian_mixture(300, 5, 3, 17);
  const auto index = build_lsh(dataset, 6, 3, 4);
  const auto updated = update_lsh(index, Dataset(5));
  CHECK(updated.width == index.width);
  CHECK(updated.codes == index.codes);
  CHECK(updated.buckets == index.buckets);
}

TEST_CASE("update with a duplicate point grows its bucket and keeps W") {
  const auto dataset = make_gaussian_mixture(300, 5, 3, 18);
  const auto index = build_lsh(dataset, 6, 4, 4);

  Dataset dup(5);
  dup.append(dataset.vec(42));
  const auto updated = update_lsh(index, dup);
  CHECK(updated.width == index.width);  // raw range unchanged
  const auto code_id = updated.code_of_point[42];
  CHECK(updated.code_of_point[dataset.size()] == code_id);
  CHECK(updated.buckets[code_id].size() == index.buckets[index.code_of_point[42]].size() + 1);
}

TEST_CASE("build(10%) + update(90%) equals build(100%)") {
  const auto dataset = make_gaussian_mixture(1000, 8, 6, 55);
  auto [head, tail] = split_dataset(dataset, 100);

  const auto incremental = update_lsh(build_lsh(head, 10, 33, 4), tail);
  const auto batch = build_lsh(dataset, 10, 33, 4);

  CHECK(incremental.width == batch.width);
  CHECK(partition_of(incremental) == partition_of(batch));
  CHECK(incremental.codes == batch.codes);
}

TEST_CASE("buckets partition the point-id set") {
  const auto dataset = make_gaussian_mixture(700, 6, 4, 91);
  const auto index = build_lsh(dataset, 8, 13, 4);
  std::vector<bool> seen(dataset.size(), false);
  for (const auto& bucket : index.buckets) {
    for (PointId id : bucket) {
      REQUIRE(id < seen.size());
      CHECK(!seen[id]);
      seen[id] = true;
    }
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
}

TEST_CASE("single-function collision rate is higher for close pairs than far pairs") {
  // Tight clusters with well-separated centers; within-cluster pairs are
  // "close" and cross-cluster pairs are "far" by construction.
  const std::size_t dim = 8;
  const auto dataset = make_gaussian_mixture(2000, dim, 10, 2024, 12.0, 0.5);
  const auto index = build_lsh(dataset, 8, 101, 4);

  const double r2 = 4.0 * 2.0 * static_cast<double>(dim) * 0.5 * 0.5;  // (2 sigma_pair)^2

  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  std::size_t close_hits = 0, close_total = 0, far_hits = 0, far_total = 0;
  while (close_total < 1000 || far_total < 1000) {
    const auto i = pick(rng);
    const auto j = pick(rng);
    if (i == j) {
      continue;
    }
    const double d2 = squared_l2_distance(dataset.vec(static_cast<PointId>(i)),
                                          dataset.vec(static_cast<PointId>(j)));
    const auto& ci = index.codes[index.code_of_point[i]];
    const auto& cj = index.codes[index.code_of_point[j]];
    if (d2 <= r2 && close_total < 1000) {
      ++close_total;
      close_hits += ci[0] == cj[0] ? 1 : 0;
    } else if (d2 > 4.0 * r2 && far_total < 1000) {
      ++far_total;
      far_hits += ci[0] == cj[0] ? 1 : 0;
    }
  }
  const double close_rate = static_cast<double>(close_hits) / static_cast<double>(close_total);
  const double far_rate = static_cast<double>(far_hits) / static_cast<double>(far_total);
  CHECK(close_rate > far_rate);
}
