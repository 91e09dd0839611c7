#include "cardest/ingest.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace cardest {

namespace {

using nlohmann::json;

std::vector<std::byte> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError(path.string() + ": cannot open for reading");
  }
  in.seekg(0, std::ios::end);
  const std::streamoff size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(static_cast<std::size_t>(size));
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), size)) {
    throw DataError(path.string() + ": read failed");
  }
  return bytes;
}

void spew(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError(path.string() + ": cannot open for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw DataError(path.string() + ": write failed");
  }
}

// Generic reader over the *vecs record layout.
template <typename T>
std::vector<std::vector<T>> read_vecs(const std::filesystem::path& path, const char* what) {
  const auto bytes = slurp(path);
  std::vector<std::vector<T>> rows;
  std::size_t pos = 0;
  std::int32_t dim = -1;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < sizeof(std::int32_t)) {
      throw DataError(path.string() + ": truncated " + what + " header at record " +
                      std::to_string(rows.size()));
    }
    std::int32_t d = 0;
    std::memcpy(&d, bytes.data() + pos, sizeof(d));
    pos += sizeof(d);
    if (d < 1) {
      throw DataError(path.string() + ": invalid dimension " + std::to_string(d) +
                      " at record " + std::to_string(rows.size()));
    }
    if (dim < 0) {
      dim = d;
    } else if (d != dim) {
      throw DataError(path.string() + ": inconsistent dimension at record " +
                      std::to_string(rows.size()) + " (" + std::to_string(d) + " vs " +
                      std::to_string(dim) + ")");
    }
    const std::size_t payload = static_cast<std::size_t>(d) * sizeof(T);
    if (bytes.size() - pos < payload) {
      throw DataError(path.string() + ": truncated " + what + " payload at record " +
                      std::to_string(rows.size()));
    }
    std::vector<T> row(static_cast<std::size_t>(d));
    std::memcpy(row.data(), bytes.data() + pos, payload);
    pos += payload;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Dataset read_fvecs(const std::filesystem::path& path) {
  const auto rows = read_vecs<float>(path, "fvecs");
  Dataset dataset;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (float x : rows[i]) {
      if (!std::isfinite(x)) {
        throw DataError(path.string() + ": non-finite value at record " + std::to_string(i));
      }
    }
    dataset.append(rows[i]);
  }
  return dataset;
}

void write_fvecs(const Dataset& dataset, const std::filesystem::path& path) {
  if (dataset.empty()) {
    throw std::invalid_argument("write_fvecs: dataset is empty");
  }
  std::vector<std::byte> bytes;
  const std::int32_t d = static_cast<std::int32_t>(dataset.dim);
  bytes.reserve(dataset.size() * (sizeof(d) + dataset.dim * sizeof(float)));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto* hdr = reinterpret_cast<const std::byte*>(&d);
    bytes.insert(bytes.end(), hdr, hdr + sizeof(d));
    const auto row = dataset.vec(static_cast<PointId>(i));
    const auto* p = reinterpret_cast<const std::byte*>(row.data());
    bytes.insert(bytes.end(), p, p + row.size_bytes());
  }
  spew(path, bytes);
}

std::vector<std::vector<std::int32_t>> read_ivecs(const std::filesystem::path& path) {
  return read_vecs<std::int32_t>(path, "ivecs");
}

void write_ivecs(std::span<const std::vector<std::int32_t>> rows,
                 const std::filesystem::path& path) {
  std::vector<std::byte> bytes;
  for (const auto& row : rows) {
    if (row.empty()) {
      throw std::invalid_argument("write_ivecs: empty row");
    }
    const std::int32_t d = static_cast<std::int32_t>(row.size());
    const auto* hdr = reinterpret_cast<const std::byte*>(&d);
    bytes.insert(bytes.end(), hdr, hdr + sizeof(d));
    const auto* p = reinterpret_cast<const std::byte*>(row.data());
    bytes.insert(bytes.end(), p, p + row.size() * sizeof(std::int32_t));
  }
  spew(path, bytes);
}

std::vector<QueryRecord> read_queries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError(path.string() + ": cannot open for reading");
  }
  std::vector<QueryRecord> records;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
    if (obj.contains("manifest")) {
      continue;
    }
    try {
      QueryRecord rec;
      rec.query_id = obj.at("query_id").get<std::int64_t>();
      rec.vector = obj.at("vector").get<Vector>();
      rec.tau = obj.at("tau").get<double>();
      if (obj.contains("true_cardinality") && !obj["true_cardinality"].is_null()) {
        rec.true_cardinality = obj["true_cardinality"].get<std::int64_t>();
      }
      if (rec.tau < 0.0) {
        throw DataError(path.string() + ": line " + std::to_string(line_no) +
                        ": tau must be non-negative");
      }
      if (rec.true_cardinality.has_value() && *rec.true_cardinality < 0) {
        throw DataError(path.string() + ": line " + std::to_string(line_no) +
                        ": true_cardinality must be non-negative");
      }
      if (rec.vector.empty()) {
        throw DataError(path.string() + ": line " + std::to_string(line_no) + ": empty vector");
      }
      if (dim == 0) {
        dim = rec.vector.size();
      } else if (rec.vector.size() != dim) {
        throw DataError(path.string() + ": line " + std::to_string(line_no) +
                        ": vector dimension " + std::to_string(rec.vector.size()) +
                        " differs from earlier records (" + std::to_string(dim) + ")");
      }
      records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

void write_queries(std::span<const QueryRecord> records, const std::filesystem::path& path,
                   const std::string& manifest_json) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw DataError(path.string() + ": cannot open for writing");
  }
  if (!manifest_json.empty()) {
    out << "{\"manifest\":" << manifest_json << "}\n";
  }
  for (const auto& rec : records) {
    json obj;
    obj["query_id"] = rec.query_id;
    obj["vector"] = rec.vector;
    obj["tau"] = rec.tau;
    if (rec.true_cardinality.has_value()) {
      obj["true_cardinality"] = *rec.true_cardinality;
    }
    out << obj.dump() << "\n";
  }
  if (!out) {
    throw DataError(path.string() + ": write failed");
  }
}

std::uint64_t fnv1a64(std::span<const std::byte> bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (std::byte b : bytes) {
    hash ^= static_cast<std::uint64_t>(b);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t checksum_file(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  return fnv1a64(bytes);
}

namespace {

struct BlobHeader {
  char magic[8];
  std::uint32_t version;
  std::uint32_t reserved;
  std::uint64_t payload_size;
  std::uint64_t checksum;
};
static_assert(sizeof(BlobHeader) == 32);

}  // namespace

void BlobWriter::write(const std::filesystem::path& path, std::string_view magic,
                       std::uint32_t version) const {
  BlobHeader header{};
  if (magic.size() > sizeof(header.magic)) {
    throw std::invalid_argument("BlobWriter: magic too long");
  }
  std::memcpy(header.magic, magic.data(), magic.size());
  header.version = version;
  header.payload_size = payload_.size();
  header.checksum = fnv1a64(payload_);

  std::vector<std::byte> bytes(sizeof(header) + payload_.size());
  std::memcpy(bytes.data(), &header, sizeof(header));
  std::memcpy(bytes.data() + sizeof(header), payload_.data(), payload_.size());
  spew(path, bytes);
}

BlobReader::BlobReader(const std::filesystem::path& path, std::string_view magic,
                       std::uint32_t version)
    : path_(path.string()) {
  auto bytes = slurp(path);
  if (bytes.size() < sizeof(BlobHeader)) {
    throw DataError(path_ + ": too short to hold a blob header");
  }
  BlobHeader header{};
  std::memcpy(&header, bytes.data(), sizeof(header));

  char expected[8] = {};
  std::memcpy(expected, magic.data(), std::min(magic.size(), sizeof(expected)));
  if (std::memcmp(header.magic, expected, sizeof(expected)) != 0) {
    throw DataError(path_ + ": unexpected file type");
  }
  if (header.version != version) {
    throw DataError(path_ + ": format version " + std::to_string(header.version) +
                    " does not match expected " + std::to_string(version));
  }
  if (header.payload_size != bytes.size() - sizeof(header)) {
    throw DataError(path_ + ": payload size mismatch");
  }
  payload_.assign(bytes.begin() + sizeof(header), bytes.end());
  if (fnv1a64(payload_) != header.checksum) {
    throw DataError(path_ + ": checksum mismatch, file is corrupted");
  }
}

void BlobReader::require(std::size_t bytes) const {
  if (payload_.size() - pos_ < bytes) {
    throw DataError(path_ + ": blob payload ended unexpectedly");
  }
}

}  // namespace cardest
