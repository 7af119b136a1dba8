// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace shed {

/// Magic bytes opening every embedding file.
inline constexpr std::string_view kEmbeddingMagic = "SHEDEMB1";
/// Magic (8 bytes) + u32 count + u32 dim.
inline constexpr std::size_t kEmbeddingHeaderSize = 16;

struct InstanceRecord {
  std::string id;
  std::string payload_ref;
  std::optional<std::string> group_label;
  std::optional<std::string> label;

  friend bool operator==(const InstanceRecord&, const InstanceRecord&) = default;
};

struct LoadOptions {
  /// Scale every embedding row to unit L2 norm after validation, so that
  /// squared Euclidean k-means ranks neighbours like cosine similarity.
  bool l2_normalize = false;
};

/// The corpus: records paired row-for-row with a dense float32 matrix.
/// Immutable once built; construction validates every invariant.
class EmbeddedDataset {
 public:
  EmbeddedDataset() = default;

  /// Throws RecordCountMismatch, DimensionMismatch, NonFiniteEmbedding,
  /// DuplicateId or MalformedRecord (empty id).
  EmbeddedDataset(std::vector<InstanceRecord> records, std::vector<float> embeddings,
                  std::size_t dim);

  std::size_t count() const noexcept { return records_.size(); }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const InstanceRecord> records() const noexcept { return records_; }
  const InstanceRecord& record(std::size_t row) const { return records_.at(row); }
  std::span<const float> embeddings() const noexcept { return embeddings_; }
  std::span<const float> row(std::size_t index) const noexcept {
    return std::span<const float>(embeddings_).subspan(index * dim_, dim_);
  }

  std::optional<std::size_t> find(std::string_view id) const;
  /// Throws UnknownId.
  std::size_t index_of(std::string_view id) const;

  /// FNV-1a over the little-endian float32 body, as stored on disk.
  std::uint64_t digest() const noexcept { return digest_; }

  EmbeddedDataset l2_normalized() const;

 private:
  std::vector<InstanceRecord> records_;
  std::vector<float> embeddings_;
  std::size_t dim_ = 0;
  std::uint64_t digest_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class SamplingMethod { QOCS, QWCS, RANDOM };

std::string_view to_string(SamplingMethod method) noexcept;
/// Case-insensitive; throws InvalidConfig.
SamplingMethod parse_sampling_method(std::string_view text);

struct SelectionResult {
  std::vector<std::string> selected_ids;
  SamplingMethod method = SamplingMethod::QOCS;
  std::size_t target_size = 0;
  double scaling_factor = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t source_digest = 0;

  friend bool operator==(const SelectionResult&, const SelectionResult&) = default;
};

// Embedding file: "SHEDEMB1", u32 N, u32 d (little-endian), N*d float32 LE
// row-major. Records file: one JSON object per line with "id",
// "payload_ref" and optional "group_label" / "label".

EmbeddedDataset load_embeddings(const std::filesystem::path& embedding_path,
                                const std::filesystem::path& records_path,
                                const LoadOptions& options = {});

/// Parses an in-memory embedding file. Returns (count, dim, floats, digest).
struct EmbeddingMatrix {
  std::uint32_t count = 0;
  std::uint32_t dim = 0;
  std::vector<float> values;
  std::uint64_t digest = 0;
};
EmbeddingMatrix parse_embedding_bytes(std::span<const unsigned char> bytes);
std::vector<unsigned char> encode_embedding_bytes(std::span<const float> values,
                                                  std::uint32_t count, std::uint32_t dim);

std::vector<InstanceRecord> parse_records(std::string_view text);
std::string format_record(const InstanceRecord& record);

void write_embeddings(const std::filesystem::path& path, std::span<const float> values,
                      std::uint32_t count, std::uint32_t dim);
void write_records(const std::filesystem::path& path, std::span<const InstanceRecord> records);
void write_dataset(const EmbeddedDataset& dataset, const std::filesystem::path& embedding_path,
                   const std::filesystem::path& records_path);

/// Header lines start with '#'; one record line per selected id follows, in
/// selection order. Throws UnknownId or IoFailure.
std::string format_selection(const EmbeddedDataset& dataset, const SelectionResult& result);
void export_selection(const EmbeddedDataset& dataset, const SelectionResult& result,
                      const std::filesystem::path& out_path);

struct LoadedSelection {
  SelectionResult result;
  std::vector<InstanceRecord> records;
};
LoadedSelection load_selection(const std::filesystem::path& path);
LoadedSelection parse_selection(std::string_view text);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace shed
