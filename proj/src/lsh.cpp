#include "cardest/lsh.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cardest {

namespace {

std::int32_t token_for(double raw, double offset_frac, double width) {
  return static_cast<std::int32_t>(std::floor(raw / width + offset_frac));
}

double project(const LshFunction& fn, std::span<const float> x) {
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += fn.a[i] * static_cast<double>(x[i]);
  }
  return dot;
}

// Derives codes, buckets and the code index from raw projections and the
// current width. Codes are enumerated in first-occurrence order of point ids,
// so the enumeration is stable whenever the width and the old points are.
void rebuild_table(LshIndex& index, std::size_t n_points) {
  index.codes.clear();
  index.buckets.clear();
  index.code_index.clear();
  index.code_of_point.assign(n_points, 0);

  HashCode code(static_cast<std::size_t>(index.k_funcs));
  for (std::size_t p = 0; p < n_points; ++p) {
    const double* raw_row = index.raw.data() + p * index.k_funcs;
    for (int j = 0; j < index.k_funcs; ++j) {
      code[j] = token_for(raw_row[j], index.functions[j].offset_frac, index.width);
    }
    auto [it, inserted] =
        index.code_index.try_emplace(code, static_cast<std::uint32_t>(index.codes.size()));
    if (inserted) {
      index.codes.push_back(code);
      index.buckets.emplace_back();
    }
    index.buckets[it->second].push_back(static_cast<PointId>(p));
    index.code_of_point[p] = it->second;
  }
}

}  // namespace

HashCode LshIndex::compute_hash_code(std::span<const float> x) const {
  if (x.size() != dim) {
    throw std::invalid_argument("compute_hash_code: vector dimension " +
                                std::to_string(x.size()) + " does not match index dimension " +
                                std::to_string(dim));
  }
  HashCode code(static_cast<std::size_t>(k_funcs));
  for (int j = 0; j < k_funcs; ++j) {
    code[j] = token_for(project(functions[j], x), functions[j].offset_frac, width);
  }
  return code;
}

std::optional<std::uint32_t> LshIndex::find_code(const HashCode& code) const {
  auto it = code_index.find(code);
  if (it == code_index.end()) {
    return std::nullopt;
  }
  return it->second;
}

double normalize_w(std::span<const double> raw_projections, int target_values_per_func) {
  if (raw_projections.empty()) {
    throw std::invalid_argument("normalize_w: no projections");
  }
  if (target_values_per_func < 2) {
    throw std::invalid_argument("normalize_w: target_values_per_func must be >= 2");
  }
  auto [min_it, max_it] = std::minmax_element(raw_projections.begin(), raw_projections.end());
  if (!(*max_it > *min_it)) {
    throw DataError("normalize_w: all projections identical, dataset is degenerate");
  }
  return (*max_it - *min_it) / static_cast<double>(target_values_per_func);
}

LshIndex build_lsh(const Dataset& dataset, int k_funcs, std::uint64_t seed,
                   int target_values_per_func) {
  if (k_funcs < 1) {
    throw std::invalid_argument("build_lsh: k_funcs must be >= 1");
  }
  if (dataset.empty()) {
    throw std::invalid_argument("build_lsh: dataset is empty");
  }

  LshIndex index;
  index.dim = dataset.dim;
  index.k_funcs = k_funcs;
  index.target_values = target_values_per_func;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  index.functions.resize(static_cast<std::size_t>(k_funcs));
  for (auto& fn : index.functions) {
    fn.a.resize(dataset.dim);
    for (auto& coeff : fn.a) {
      coeff = gauss(rng);
    }
    fn.offset_frac = unit(rng);
  }

  const std::size_t n = dataset.size();
  index.raw.resize(n * static_cast<std::size_t>(k_funcs));
  for (std::size_t p = 0; p < n; ++p) {
    const auto x = dataset.vec(static_cast<PointId>(p));
    for (int j = 0; j < k_funcs; ++j) {
      index.raw[p * k_funcs + j] = project(index.functions[j], x);
    }
  }

  index.width = normalize_w(index.raw, target_values_per_func);
  rebuild_table(index, n);
  return index;
}

LshIndex update_lsh(const LshIndex& index, const Dataset& new_points) {
  if (!new_points.empty() && new_points.dim != index.dim) {
    throw std::invalid_argument("update_lsh: dimension mismatch");
  }

  LshIndex updated = index;
  const std::size_t n_old = index.point_count();
  const std::size_t n_new = new_points.size();
  updated.raw.resize((n_old + n_new) * static_cast<std::size_t>(index.k_funcs));
  for (std::size_t p = 0; p < n_new; ++p) {
    const auto x = new_points.vec(static_cast<PointId>(p));
    for (int j = 0; j < index.k_funcs; ++j) {
      updated.raw[(n_old + p) * index.k_funcs + j] = project(index.functions[j], x);
    }
  }

  updated.width = normalize_w(updated.raw, index.target_values);
  rebuild_table(updated, n_old + n_new);
  return updated;
}

void rebuild_lsh_table(LshIndex& index) {
  if (index.k_funcs < 1 || index.width <= 0.0) {
    throw InternalError("rebuild_lsh_table: index has no functions or width");
  }
  rebuild_table(index, index.raw.size() / static_cast<std::size_t>(index.k_funcs));
}

}  // namespace cardest
