#pragma once

// Deterministic synthetic datasets shared by the test suites.

#include <random>
#include <vector>

#include "cardest/core.hpp"

namespace cardest::testsupport {

/// Gaussian mixture: n points over n_clusters isotropic clusters whose centers
/// are themselves Gaussian with the given scale.
inline Dataset make_gaussian_mixture(std::size_t n, std::size_t dim, std::size_t n_clusters,
                                     std::uint64_t seed, double center_scale = 8.0,
                                     double point_scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<std::vector<float>> centers(n_clusters, std::vector<float>(dim));
  for (auto& center : centers) {
    for (auto& x : center) {
      x = static_cast<float>(center_scale * gauss(rng));
    }
  }

  Dataset dataset(dim);
  std::vector<float> point(dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& center = centers[i % n_clusters];
    for (std::size_t d = 0; d < dim; ++d) {
      point[d] = center[d] + static_cast<float>(point_scale * gauss(rng));
    }
    dataset.append(point);
  }
  return dataset;
}

inline Dataset make_uniform_dataset(std::size_t n, std::size_t dim, std::uint64_t seed,
                                    double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(lo, hi);
  Dataset dataset(dim);
  std::vector<float> point(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& x : point) {
      x = static_cast<float>(uniform(rng));
    }
    dataset.append(point);
  }
  return dataset;
}

inline Vector random_vector(std::size_t dim, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  Vector v(dim);
  for (auto& x : v) {
    x = static_cast<float>(gauss(rng));
  }
  return v;
}

/// First n points as one dataset, the rest as another.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, std::size_t n_first) {
  Dataset first(dataset.dim);
  Dataset second(dataset.dim);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (i < n_first ? first : second).append(dataset.vec(static_cast<PointId>(i)));
  }
  return {std::move(first), std::move(second)};
}

}  // namespace cardest::testsupport
