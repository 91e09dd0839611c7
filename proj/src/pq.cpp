#include "cardest/pq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace cardest {

namespace {

constexpr int kMaxClusters = 65535;  // codes are stored as uint16

double subvector_dist2(std::span<const float> x, std::span<const float> y) {
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = static_cast<double>(x[i]) - static_cast<double>(y[i]);
    sum += diff * diff;
  }
  return sum;
}

// Subvector sp of point p in a row-major dataset.
std::span<const float> subvec(const Dataset& data, std::size_t p, int sp, std::size_t dsub) {
  return {data.values.data() + p * data.dim + static_cast<std::size_t>(sp) * dsub, dsub};
}

std::span<float> mutable_centroid(PqIndex& pq, int sp, int c) {
  const std::size_t d = pq.dsub();
  return {pq.codebooks.data() + (static_cast<std::size_t>(sp) * pq.k_clusters + c) * d, d};
}

// Nearest centroid in subspace sp; ties resolve to the lowest centroid id.
int nearest_centroid(const PqIndex& pq, int sp, std::span<const float> v, double* out_d2) {
  int best = 0;
  double best_d2 = std::numeric_limits<double>::max();
  for (int c = 0; c < pq.k_clusters; ++c) {
    const double d2 = subvector_dist2(v, pq.centroid(sp, c));
    if (d2 < best_d2) {
      best_d2 = d2;
      best = c;
    }
  }
  if (out_d2 != nullptr) {
    *out_d2 = best_d2;
  }
  return best;
}

void kmeans_pp_init(PqIndex& pq, const Dataset& data, int sp, std::mt19937_64& rng) {
  const std::size_t n = data.size();
  const std::size_t dsub = pq.dsub();

  std::uniform_int_distribution<std::size_t> uniform(0, n - 1);
  std::size_t first = uniform(rng);
  auto c0 = mutable_centroid(pq, sp, 0);
  auto v0 = subvec(data, first, sp, dsub);
  std::copy(v0.begin(), v0.end(), c0.begin());

  std::vector<double> min_d2(n);
  for (std::size_t p = 0; p < n; ++p) {
    min_d2[p] = subvector_dist2(subvec(data, p, sp, dsub), pq.centroid(sp, 0));
  }

  for (int c = 1; c < pq.k_clusters; ++c) {
    double total = 0.0;
    for (double w : min_d2) {
      total += w;
    }
    std::size_t pick;
    if (total > 0.0) {
      std::discrete_distribution<std::size_t> weighted(min_d2.begin(), min_d2.end());
      pick = weighted(rng);
    } else {
      // All remaining distances are zero (duplicated points); walk deterministically.
      pick = static_cast<std::size_t>(c) % n;
    }
    auto cnew = mutable_centroid(pq, sp, c);
    auto v = subvec(data, pick, sp, dsub);
    std::copy(v.begin(), v.end(), cnew.begin());
    for (std::size_t p = 0; p < n; ++p) {
      min_d2[p] = std::min(min_d2[p], subvector_dist2(subvec(data, p, sp, dsub), cnew));
    }
  }
}

}  // namespace

int default_pq_m(std::size_t dim) {
  for (int m = 8; m >= 1; --m) {
    if (dim % static_cast<std::size_t>(m) == 0) {
      return m;
    }
  }
  return 1;
}

PqIndex train_pq(const Dataset& dataset, int m, int k_clusters, std::uint64_t seed,
                 int kmeans_iters, PqTrainStats* stats) {
  if (m < 1 || dataset.dim == 0 || dataset.dim % static_cast<std::size_t>(m) != 0) {
    throw std::invalid_argument("train_pq: m must divide the dataset dimension");
  }
  if (k_clusters < 1 || static_cast<std::size_t>(k_clusters) > dataset.size()) {
    throw std::invalid_argument("train_pq: k_clusters must be in [1, N]");
  }
  if (k_clusters > kMaxClusters) {
    throw std::invalid_argument("train_pq: k_clusters exceeds " + std::to_string(kMaxClusters));
  }
  if (kmeans_iters < 1) {
    throw std::invalid_argument("train_pq: kmeans_iters must be >= 1");
  }

  PqIndex pq;
  pq.dim = dataset.dim;
  pq.m = m;
  pq.k_clusters = k_clusters;
  const std::size_t n = dataset.size();
  const std::size_t dsub = pq.dsub();
  pq.codebooks.assign(static_cast<std::size_t>(m) * k_clusters * dsub, 0.0f);
  pq.codes.assign(n * static_cast<std::size_t>(m), 0);
  pq.cluster_sizes.assign(static_cast<std::size_t>(m) * k_clusters, 0);
  if (stats != nullptr) {
    stats->inertia.assign(static_cast<std::size_t>(m), {});
  }

  std::mt19937_64 rng(seed);
  std::vector<std::uint16_t> assign(n);
  std::vector<double> dist2(n);
  std::vector<std::size_t> counts(static_cast<std::size_t>(k_clusters));
  std::vector<double> sums(static_cast<std::size_t>(k_clusters) * dsub);

  for (int sp = 0; sp < m; ++sp) {
    kmeans_pp_init(pq, dataset, sp, rng);

    auto assign_all = [&]() {
      bool changed = false;
      double inertia = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        double d2 = 0.0;
        const int c = nearest_centroid(pq, sp, subvec(dataset, p, sp, dsub), &d2);
        if (assign[p] != static_cast<std::uint16_t>(c)) {
          assign[p] = static_cast<std::uint16_t>(c);
          changed = true;
        }
        dist2[p] = d2;
        inertia += d2;
      }
      if (stats != nullptr) {
        stats->inertia[sp].push_back(inertia / static_cast<double>(n));
      }
      return changed;
    };

    std::fill(assign.begin(), assign.end(), std::uint16_t{0});
    assign_all();

    for (int iter = 0; iter < kmeans_iters; ++iter) {
      // Means of the current assignment.
      std::fill(counts.begin(), counts.end(), std::size_t{0});
      std::fill(sums.begin(), sums.end(), 0.0);
      for (std::size_t p = 0; p < n; ++p) {
        const auto v = subvec(dataset, p, sp, dsub);
        double* dst = sums.data() + static_cast<std::size_t>(assign[p]) * dsub;
        for (std::size_t i = 0; i < dsub; ++i) {
          dst[i] += static_cast<double>(v[i]);
        }
        ++counts[assign[p]];
      }
      for (int c = 0; c < k_clusters; ++c) {
        if (counts[c] == 0) {
          continue;
        }
        auto dst = mutable_centroid(pq, sp, c);
        const double* src = sums.data() + static_cast<std::size_t>(c) * dsub;
        for (std::size_t i = 0; i < dsub; ++i) {
          dst[i] = static_cast<float>(src[i] / static_cast<double>(counts[c]));
        }
      }
      // Empty clusters steal the point farthest from its centroid.
      for (int c = 0; c < k_clusters; ++c) {
        if (counts[c] != 0) {
          continue;
        }
        std::size_t far = 0;
        double far_d2 = -1.0;
        for (std::size_t p = 0; p < n; ++p) {
          if (counts[assign[p]] > 1 && dist2[p] > far_d2) {
            far_d2 = dist2[p];
            far = p;
          }
        }
        if (far_d2 < 0.0) {
          continue;  // every cluster is a singleton; nothing to steal
        }
        auto dst = mutable_centroid(pq, sp, c);
        const auto v = subvec(dataset, far, sp, dsub);
        std::copy(v.begin(), v.end(), dst.begin());
        --counts[assign[far]];
        assign[far] = static_cast<std::uint16_t>(c);
        counts[c] = 1;
        dist2[far] = 0.0;
      }

      if (!assign_all()) {
        break;  // assignments converged
      }
    }

    for (std::size_t p = 0; p < n; ++p) {
      pq.codes[p * static_cast<std::size_t>(m) + sp] = assign[p];
      ++pq.cluster_sizes[static_cast<std::size_t>(sp) * k_clusters + assign[p]];
    }
  }
  return pq;
}

AdcTable build_adc_table(const PqIndex& pq, std::span<const float> query) {
  if (query.size() != pq.dim) {
    throw std::invalid_argument("build_adc_table: query dimension mismatch");
  }
  AdcTable table;
  table.m = pq.m;
  table.k_clusters = pq.k_clusters;
  table.entries.resize(static_cast<std::size_t>(pq.m) * pq.k_clusters);
  const std::size_t dsub = pq.dsub();
  for (int sp = 0; sp < pq.m; ++sp) {
    const std::span<const float> qsub{query.data() + static_cast<std::size_t>(sp) * dsub, dsub};
    for (int c = 0; c < pq.k_clusters; ++c) {
      table.entries[static_cast<std::size_t>(sp) * pq.k_clusters + c] =
          subvector_dist2(qsub, pq.centroid(sp, c));
    }
  }
  return table;
}

double adc_distance(const PqIndex& pq, const AdcTable& table, PointId point_id) {
  if (point_id >= pq.point_count()) {
    throw std::invalid_argument("adc_distance: point_id out of range");
  }
  if (table.m != pq.m || table.k_clusters != pq.k_clusters) {
    throw std::invalid_argument("adc_distance: table shape does not match the index");
  }
  const std::uint16_t* code = pq.codes.data() + static_cast<std::size_t>(point_id) * pq.m;
  double sum = 0.0;
  for (int sp = 0; sp < pq.m; ++sp) {
    sum += table.entries[static_cast<std::size_t>(sp) * pq.k_clusters + code[sp]];
  }
  return sum;
}

PqIndex update_pq(const PqIndex& pq, const Dataset& new_points) {
  if (!new_points.empty() && new_points.dim != pq.dim) {
    throw std::invalid_argument("update_pq: dimension mismatch");
  }

  PqIndex updated = pq;
  const std::size_t n_new = new_points.size();
  const std::size_t dsub = pq.dsub();
  updated.codes.reserve(updated.codes.size() + n_new * static_cast<std::size_t>(pq.m));

  for (std::size_t p = 0; p < n_new; ++p) {
    for (int sp = 0; sp < pq.m; ++sp) {
      const auto v = subvec(new_points, p, sp, dsub);
      const int c = nearest_centroid(updated, sp, v, nullptr);
      updated.codes.push_back(static_cast<std::uint16_t>(c));

      auto& size = updated.cluster_sizes[static_cast<std::size_t>(sp) * pq.k_clusters + c];
      auto centroid = mutable_centroid(updated, sp, c);
      const double denom = static_cast<double>(size) + 1.0;
      for (std::size_t i = 0; i < dsub; ++i) {
        centroid[i] +=
            static_cast<float>((static_cast<double>(v[i]) - static_cast<double>(centroid[i])) /
                               denom);
      }
      ++size;
    }
  }
  return updated;
}

}  // namespace cardest
