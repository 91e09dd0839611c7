#include "cardest/bundle.hpp"

#include <chrono>
#include <fstream>

#include <json.hpp>

#include "cardest/ingest.hpp"

namespace cardest {

namespace {

using nlohmann::json;

constexpr std::uint32_t kBundleVersion = 1;
constexpr std::string_view kLshMagic = "CELSH";
constexpr std::string_view kNbrMagic = "CENBR";
constexpr std::string_view kPqMagic = "CEPQ";

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void save_lsh(const LshIndex& lsh, const std::filesystem::path& path) {
  BlobWriter blob;
  blob.put<std::uint64_t>(lsh.dim);
  blob.put<std::int32_t>(lsh.k_funcs);
  blob.put<std::int32_t>(lsh.target_values);
  blob.put<double>(lsh.width);
  for (const auto& fn : lsh.functions) {
    blob.put_array<double>(fn.a);
    blob.put<double>(fn.offset_frac);
  }
  blob.put<std::uint64_t>(lsh.point_count());
  blob.put_array<double>(lsh.raw);
  blob.write(path, kLshMagic, kBundleVersion);
}

// Codes, buckets and the code index are re-derived from the stored projections
// and width; the derivation is deterministic, so reload reproduces them bit
// for bit.
LshIndex load_lsh(const std::filesystem::path& path) {
  BlobReader blob(path, kLshMagic, kBundleVersion);
  LshIndex skeleton;
  skeleton.dim = blob.get<std::uint64_t>();
  skeleton.k_funcs = blob.get<std::int32_t>();
  skeleton.target_values = blob.get<std::int32_t>();
  skeleton.width = blob.get<double>();
  skeleton.functions.resize(static_cast<std::size_t>(skeleton.k_funcs));
  for (auto& fn : skeleton.functions) {
    fn.a = blob.get_array<double>();
    fn.offset_frac = blob.get<double>();
  }
  const auto n_points = blob.get<std::uint64_t>();
  skeleton.raw = blob.get_array<double>();
  if (skeleton.raw.size() != n_points * static_cast<std::uint64_t>(skeleton.k_funcs)) {
    throw DataError(path.string() + ": projection array size mismatch");
  }
  rebuild_lsh_table(skeleton);
  return skeleton;
}

void save_neighbors(const NeighborTable& table, const std::filesystem::path& path) {
  BlobWriter blob;
  blob.put<std::int32_t>(table.d_max);
  blob.put<std::uint64_t>(table.code_count());
  for (const auto& row : table.lists) {
    for (const auto& list : row) {
      blob.put_array<std::uint32_t>(list);
    }
  }
  blob.write(path, kNbrMagic, kBundleVersion);
}

NeighborTable load_neighbors(const std::filesystem::path& path) {
  BlobReader blob(path, kNbrMagic, kBundleVersion);
  NeighborTable table;
  table.d_max = blob.get<std::int32_t>();
  const auto n = blob.get<std::uint64_t>();
  table.lists.assign(n, std::vector<std::vector<std::uint32_t>>(
                            static_cast<std::size_t>(table.d_max)));
  for (auto& row : table.lists) {
    for (auto& list : row) {
      list = blob.get_array<std::uint32_t>();
    }
  }
  return table;
}

void save_pq(const PqIndex& pq, const std::filesystem::path& path) {
  BlobWriter blob;
  blob.put<std::uint64_t>(pq.dim);
  blob.put<std::int32_t>(pq.m);
  blob.put<std::int32_t>(pq.k_clusters);
  blob.put_array<float>(pq.codebooks);
  blob.put_array<std::uint16_t>(pq.codes);
  blob.put_array<std::uint32_t>(pq.cluster_sizes);
  blob.write(path, kPqMagic, kBundleVersion);
}

PqIndex load_pq(const std::filesystem::path& path) {
  BlobReader blob(path, kPqMagic, kBundleVersion);
  PqIndex pq;
  pq.dim = blob.get<std::uint64_t>();
  pq.m = blob.get<std::int32_t>();
  pq.k_clusters = blob.get<std::int32_t>();
  pq.codebooks = blob.get_array<float>();
  pq.codes = blob.get_array<std::uint16_t>();
  pq.cluster_sizes = blob.get_array<std::uint32_t>();
  return pq;
}

json params_to_json(const BundleParams& params) {
  return json{{"k_funcs", params.k_funcs},
              {"target_values", params.target_values},
              {"d_max", params.resolved_d_max()},
              {"with_pq", params.with_pq},
              {"pq_m", params.pq_m},
              {"pq_k", params.pq_k},
              {"kmeans_iters", params.kmeans_iters},
              {"seed", params.seed}};
}

BundleParams params_from_json(const json& obj) {
  BundleParams params;
  params.k_funcs = obj.at("k_funcs").get<int>();
  params.target_values = obj.at("target_values").get<int>();
  params.d_max = obj.at("d_max").get<int>();
  params.with_pq = obj.at("with_pq").get<bool>();
  params.pq_m = obj.at("pq_m").get<int>();
  params.pq_k = obj.at("pq_k").get<int>();
  params.kmeans_iters = obj.at("kmeans_iters").get<int>();
  params.seed = obj.at("seed").get<std::uint64_t>();
  return params;
}

}  // namespace

IndexBundle build_bundle(Dataset dataset, BundleParams params) {
  if (dataset.empty()) {
    throw std::invalid_argument("build_bundle: dataset is empty");
  }
  if (params.with_pq && params.pq_m == 0) {
    params.pq_m = default_pq_m(dataset.dim);
  }

  IndexBundle bundle;
  bundle.params = params;
  bundle.lsh = build_lsh(dataset, params.k_funcs, params.seed, params.target_values);
  bundle.neighbors = build_neighbor_table(bundle.lsh.codes, params.resolved_d_max());
  if (params.with_pq) {
    bundle.pq = train_pq(dataset, params.pq_m, params.pq_k, params.seed, params.kmeans_iters);
  }
  bundle.dataset = std::move(dataset);
  bundle.lineage.push_back("build n=" + std::to_string(bundle.dataset.size()));
  return bundle;
}

void update_bundle(IndexBundle& bundle, const Dataset& new_points,
                   double pq_rebuild_threshold) {
  if (new_points.empty()) {
    bundle.lineage.push_back("update n=0");
    return;
  }
  if (new_points.dim != bundle.dataset.dim) {
    throw std::invalid_argument("update_bundle: dimension mismatch");
  }

  const std::size_t n_old = bundle.dataset.size();
  LshIndex updated = update_lsh(bundle.lsh, new_points);

  const std::size_t n_old_codes = bundle.lsh.codes.size();
  if (updated.width == bundle.lsh.width) {
    // Unchanged width keeps the old code enumeration as a prefix; patch the
    // table with the appended codes only.
    for (std::size_t i = 0; i < n_old_codes; ++i) {
      if (updated.codes[i] != bundle.lsh.codes[i]) {
        throw InternalError("update_bundle: code enumeration shifted despite unchanged width");
      }
    }
    const std::span<const HashCode> appended{updated.codes.data() + n_old_codes,
                                             updated.codes.size() - n_old_codes};
    bundle.neighbors = update_neighbor_table(bundle.neighbors, bundle.lsh.codes, appended,
                                             bundle.neighbors.d_max);
  } else {
    bundle.neighbors = build_neighbor_table(updated.codes, bundle.neighbors.d_max);
  }
  bundle.lsh = std::move(updated);

  if (bundle.pq.has_value()) {
    const double ratio = static_cast<double>(new_points.size()) / static_cast<double>(n_old);
    if (ratio > pq_rebuild_threshold) {
      Dataset combined = bundle.dataset;
      combined.append_all(new_points);
      bundle.pq = train_pq(combined, bundle.pq->m, bundle.pq->k_clusters, bundle.params.seed,
                           bundle.params.kmeans_iters);
      bundle.lineage.push_back("pq retrain n=" + std::to_string(combined.size()));
    } else {
      bundle.pq = update_pq(*bundle.pq, new_points);
    }
  }

  bundle.dataset.append_all(new_points);
  bundle.lineage.push_back("update n=" + std::to_string(new_points.size()));
}

void save_index(const IndexBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_fvecs(bundle.dataset, dir / "data.fvecs");
  save_lsh(bundle.lsh, dir / "lsh.bin");
  save_neighbors(bundle.neighbors, dir / "neighbors.bin");
  if (bundle.pq.has_value()) {
    save_pq(*bundle.pq, dir / "pq.bin");
  }

  json components;
  for (const char* name : {"data.fvecs", "lsh.bin", "neighbors.bin", "pq.bin"}) {
    const auto path = dir / name;
    if (std::filesystem::exists(path)) {
      components[name] = checksum_file(path);
    }
  }

  json manifest{{"format_version", kBundleVersion},
                {"saved_at", timestamp_utc()},
                {"dataset", json{{"n", bundle.dataset.size()},
                                 {"dim", bundle.dataset.dim},
                                 {"checksum", checksum_file(dir / "data.fvecs")}}},
                {"params", params_to_json(bundle.params)},
                {"lineage", bundle.lineage},
                {"components", components}};

  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) {
    throw DataError((dir / "manifest.json").string() + ": cannot open for writing");
  }
  out << manifest.dump(2) << "\n";
  if (!out) {
    throw DataError((dir / "manifest.json").string() + ": write failed");
  }
}

IndexBundle load_index(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw DataError(manifest_path.string() + ": not found (not an index bundle?)");
  }
  json manifest;
  {
    std::ifstream in(manifest_path);
    try {
      in >> manifest;
    } catch (const json::exception& e) {
      throw DataError(manifest_path.string() + ": " + e.what());
    }
  }
  if (manifest.at("format_version").get<std::uint32_t>() != kBundleVersion) {
    throw DataError(manifest_path.string() + ": unsupported bundle format version");
  }

  IndexBundle bundle;
  bundle.params = params_from_json(manifest.at("params"));
  bundle.lineage = manifest.at("lineage").get<std::vector<std::string>>();
  bundle.dataset = read_fvecs(dir / "data.fvecs");
  const auto expect_checksum = manifest.at("dataset").at("checksum").get<std::uint64_t>();
  if (checksum_file(dir / "data.fvecs") != expect_checksum) {
    throw DataError((dir / "data.fvecs").string() + ": checksum mismatch");
  }

  bundle.lsh = load_lsh(dir / "lsh.bin");
  bundle.neighbors = load_neighbors(dir / "neighbors.bin");
  if (bundle.params.with_pq) {
    bundle.pq = load_pq(dir / "pq.bin");
  }

  if (bundle.lsh.point_count() != bundle.dataset.size() ||
      bundle.lsh.dim != bundle.dataset.dim) {
    throw DataError(dir.string() + ": LSH index does not match the stored dataset");
  }
  if (bundle.neighbors.code_count() != bundle.lsh.codes.size()) {
    throw DataError(dir.string() + ": neighbor table does not match the LSH index");
  }
  if (bundle.pq.has_value() && bundle.pq->point_count() != bundle.dataset.size()) {
    throw DataError(dir.string() + ": PQ index does not match the stored dataset");
  }
  return bundle;
}

}  // namespace cardest
