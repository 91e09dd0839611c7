#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "cardest/core.hpp"

namespace cardest {

/// One similarity range query; true_cardinality is present in labeled workloads.
struct QueryRecord {
  std::int64_t query_id = 0;
  Vector vector;
  double tau = 0.0;
  std::optional<std::int64_t> true_cardinality;

  bool operator==(const QueryRecord&) const = default;
};

// fvecs / ivecs: repeated records of [int32 little-endian d][d x payload],
// float32 payloads for fvecs and int32 payloads for ivecs.
Dataset read_fvecs(const std::filesystem::path& path);
void write_fvecs(const Dataset& dataset, const std::filesystem::path& path);
std::vector<std::vector<std::int32_t>> read_ivecs(const std::filesystem::path& path);
void write_ivecs(std::span<const std::vector<std::int32_t>> rows,
                 const std::filesystem::path& path);

// Query workloads: one JSON object per line with keys query_id, vector, tau and
// optionally true_cardinality. A leading line holding a "manifest" key records
// how the file was produced and is skipped on read.
std::vector<QueryRecord> read_queries(const std::filesystem::path& path);
void write_queries(std::span<const QueryRecord> records, const std::filesystem::path& path,
                   const std::string& manifest_json = {});

std::uint64_t fnv1a64(std::span<const std::byte> bytes);
std::uint64_t checksum_file(const std::filesystem::path& path);

/// Builds a length-prefixed binary payload and writes it with a magic tag,
/// format version and checksum header.
class BlobWriter {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const std::byte*>(&value);
    payload_.insert(payload_.end(), p, p + sizeof(T));
  }

  template <typename T>
  void put_array(std::span<const T> values) {
    static_assert(std::is_trivially_copyable_v<T>);
    put<std::uint64_t>(values.size());
    const auto* p = reinterpret_cast<const std::byte*>(values.data());
    payload_.insert(payload_.end(), p, p + values.size_bytes());
  }

  void write(const std::filesystem::path& path, std::string_view magic,
             std::uint32_t version) const;

 private:
  std::vector<std::byte> payload_;
};

/// Re-reads a blob written by BlobWriter, verifying magic, version and checksum.
class BlobReader {
 public:
  BlobReader(const std::filesystem::path& path, std::string_view magic, std::uint32_t version);

  template <typename T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    require(sizeof(T));
    T value;
    std::memcpy(&value, payload_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  template <typename T>
  std::vector<T> get_array() {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto count = get<std::uint64_t>();
    require(count * sizeof(T));
    std::vector<T> values(count);
    std::memcpy(values.data(), payload_.data() + pos_, count * sizeof(T));
    pos_ += count * sizeof(T);
    return values;
  }

  bool exhausted() const { return pos_ == payload_.size(); }

 private:
  void require(std::size_t bytes) const;

  std::string path_;
  std::vector<std::byte> payload_;
  std::size_t pos_ = 0;
};

}  // namespace cardest
