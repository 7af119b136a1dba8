// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#include "shed/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "shed/error.hpp"
#include "shed/text.hpp"

namespace shed {

namespace {

std::uint32_t load_u32_le(const unsigned char* p) noexcept {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32_le(std::uint32_t v, std::vector<unsigned char>& out) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<unsigned char>(v >> shift));
}

std::uint64_t body_digest(std::span<const float> values) {
  std::uint64_t state = kFnvOffset;
  for (float f : values) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    const unsigned char le[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                                 static_cast<unsigned char>(bits >> 16),
                                 static_cast<unsigned char>(bits >> 24)};
    state = fnv1a(le, state);
  }
  return state;
}

std::optional<std::string> optional_string(const nlohmann::json& obj, const char* key,
                                           std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(ErrorCode::MalformedRecord,
                "line " + std::to_string(line) + ": field '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

}  // namespace

// ---------------------------------------------------------------------------
// EmbeddedDataset

EmbeddedDataset::EmbeddedDataset(std::vector<InstanceRecord> records, std::vector<float> embeddings,
                                 std::size_t dim)
    : records_(std::move(records)), embeddings_(std::move(embeddings)), dim_(dim) {
  if (dim_ == 0) throw Error(ErrorCode::DimensionMismatch, "embedding dimension must be positive");
  if (records_.empty()) throw Error(ErrorCode::RecordCountMismatch, "dataset has no records");
  if (embeddings_.size() != records_.size() * dim_) {
    throw Error(ErrorCode::RecordCountMismatch,
                std::to_string(records_.size()) + " records but " +
                    std::to_string(embeddings_.size() / dim_) + " embedding rows");
  }
  for (std::size_t i = 0; i < embeddings_.size(); ++i) {
    if (!std::isfinite(embeddings_[i])) {
      throw Error(ErrorCode::NonFiniteEmbedding, "row " + std::to_string(i / dim_) + ", column " +
                                                     std::to_string(i % dim_));
    }
  }
  index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].id.empty()) {
      throw Error(ErrorCode::MalformedRecord, "record " + std::to_string(i) + " has an empty id");
    }
    if (!index_.emplace(records_[i].id, i).second) {
      throw Error(ErrorCode::DuplicateId, "id '" + records_[i].id + "' appears more than once");
    }
  }
  digest_ = body_digest(embeddings_);
}

std::optional<std::size_t> EmbeddedDataset::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t EmbeddedDataset::index_of(std::string_view id) const {
  if (auto row = find(id)) return *row;
  throw Error(ErrorCode::UnknownId, "id '" + std::string(id) + "' is not in the dataset");
}

EmbeddedDataset EmbeddedDataset::l2_normalized() const {
  std::vector<float> values = embeddings_;
  for (std::size_t r = 0; r < count(); ++r) {
    double norm = 0.0;
    for (std::size_t c = 0; c < dim_; ++c) norm += double(values[r * dim_ + c]) * values[r * dim_ + c];
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;  // zero rows stay zero
    for (std::size_t c = 0; c < dim_; ++c) {
      values[r * dim_ + c] = static_cast<float>(values[r * dim_ + c] / norm);
    }
  }
  EmbeddedDataset normalized(records_, std::move(values), dim_);
  normalized.digest_ = digest_;  // provenance stays bound to the file bytes
  return normalized;
}

std::string_view to_string(SamplingMethod method) noexcept {
  switch (method) {
    case SamplingMethod::QOCS: return "QOCS";
    case SamplingMethod::QWCS: return "QWCS";
    case SamplingMethod::RANDOM: return "RANDOM";
  }
  return "QOCS";
}

SamplingMethod parse_sampling_method(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "QOCS") return SamplingMethod::QOCS;
  if (upper == "QWCS") return SamplingMethod::QWCS;
  if (upper == "RANDOM") return SamplingMethod::RANDOM;
  throw Error(ErrorCode::InvalidConfig, "unknown sampling method '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Embedding binary format

EmbeddingMatrix parse_embedding_bytes(std::span<const unsigned char> bytes) {
  if (bytes.size() < kEmbeddingMagic.size() ||
      !std::equal(kEmbeddingMagic.begin(), kEmbeddingMagic.end(), bytes.begin())) {
    throw Error(ErrorCode::MagicMismatch, "embedding file does not start with SHEDEMB1");
  }
  if (bytes.size() < kEmbeddingHeaderSize) {
    throw Error(ErrorCode::DimensionMismatch, "embedding header is truncated");
  }
  EmbeddingMatrix m;
  m.count = load_u32_le(bytes.data() + 8);
  m.dim = load_u32_le(bytes.data() + 12);
  if (m.count == 0 || m.dim == 0) {
    throw Error(ErrorCode::DimensionMismatch, "header declares N=" + std::to_string(m.count) +
                                                  ", d=" + std::to_string(m.dim));
  }
  const std::uint64_t expected = std::uint64_t{m.count} * m.dim * 4;
  const std::uint64_t actual = bytes.size() - kEmbeddingHeaderSize;
  if (expected != actual) {
    throw Error(ErrorCode::DimensionMismatch,
                "header declares N=" + std::to_string(m.count) + ", d=" + std::to_string(m.dim) +
                    " (" + std::to_string(expected) + " bytes) but body holds " +
                    std::to_string(actual) + " bytes");
  }
  m.values.resize(std::size_t{m.count} * m.dim);
  const unsigned char* body = bytes.data() + kEmbeddingHeaderSize;
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    m.values[i] = std::bit_cast<float>(load_u32_le(body + 4 * i));
  }
  m.digest = fnv1a(bytes.subspan(kEmbeddingHeaderSize));
  return m;
}

std::vector<unsigned char> encode_embedding_bytes(std::span<const float> values,
                                                  std::uint32_t count, std::uint32_t dim) {
  if (values.size() != std::size_t{count} * dim) {
    throw Error(ErrorCode::DimensionMismatch, "matrix size does not equal N*d");
  }
  std::vector<unsigned char> out(kEmbeddingMagic.begin(), kEmbeddingMagic.end());
  out.reserve(kEmbeddingHeaderSize + values.size() * 4);
  store_u32_le(count, out);
  store_u32_le(dim, out);
  for (float f : values) store_u32_le(std::bit_cast<std::uint32_t>(f), out);
  return out;
}

// ---------------------------------------------------------------------------
// Records

std::vector<InstanceRecord> parse_records(std::string_view text) {
  std::vector<InstanceRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object()) {
      throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": not an object");
    }
    InstanceRecord rec;
    auto id = optional_string(obj, "id", line_no);
    if (!id || id->empty()) {
      throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": missing id");
    }
    rec.id = std::move(*id);
    rec.payload_ref = optional_string(obj, "payload_ref", line_no).value_or("");
    rec.group_label = optional_string(obj, "group_label", line_no);
    rec.label = optional_string(obj, "label", line_no);
    records.push_back(std::move(rec));
  }
  return records;
}

std::string format_record(const InstanceRecord& record) {
  nlohmann::json obj = nlohmann::json::object();
  obj["id"] = record.id;
  obj["payload_ref"] = record.payload_ref;
  if (record.group_label) obj["group_label"] = *record.group_label;
  if (record.label) obj["label"] = *record.label;
  return obj.dump();
}

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for reading");
  std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read error on '" + path.string() + "'");
  return contents;
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error(ErrorCode::IoFailure, "write error on '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoFailure, "cannot move output into '" + path.string() + "'");
  }
}

EmbeddedDataset load_embeddings(const std::filesystem::path& embedding_path,
                                const std::filesystem::path& records_path,
                                const LoadOptions& options) {
  const std::string raw = read_file(embedding_path);
  auto matrix = parse_embedding_bytes(
      std::span(reinterpret_cast<const unsigned char*>(raw.data()), raw.size()));
  auto records = parse_records(read_file(records_path));
  if (records.size() != matrix.count) {
    throw Error(ErrorCode::RecordCountMismatch,
                "embedding header declares N=" + std::to_string(matrix.count) + " but '" +
                    records_path.string() + "' holds " + std::to_string(records.size()) +
                    " records");
  }
  EmbeddedDataset dataset(std::move(records), std::move(matrix.values), matrix.dim);
  return options.l2_normalize ? dataset.l2_normalized() : dataset;
}

void write_embeddings(const std::filesystem::path& path, std::span<const float> values,
                      std::uint32_t count, std::uint32_t dim) {
  const auto bytes = encode_embedding_bytes(values, count, dim);
  write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void write_records(const std::filesystem::path& path, std::span<const InstanceRecord> records) {
  std::string text;
  for (const auto& r : records) {
    text += format_record(r);
    text += '\n';
  }
  write_file(path, text);
}

void write_dataset(const EmbeddedDataset& dataset, const std::filesystem::path& embedding_path,
                   const std::filesystem::path& records_path) {
  write_embeddings(embedding_path, dataset.embeddings(), static_cast<std::uint32_t>(dataset.count()),
                   static_cast<std::uint32_t>(dataset.dim()));
  write_records(records_path, dataset.records());
}

// ---------------------------------------------------------------------------
// Selection export

std::string format_selection(const EmbeddedDataset& dataset, const SelectionResult& result) {
  std::vector<std::size_t> rows;
  rows.reserve(result.selected_ids.size());
  for (const auto& id : result.selected_ids) rows.push_back(dataset.index_of(id));

  std::ostringstream out;
  out << "# shed-selection v1\n"
      << "# method: " << to_string(result.method) << '\n'
      << "# target_size: " << result.target_size << '\n'
      << "# scaling_factor: " << format_real(result.scaling_factor) << '\n'
      << "# seed: " << result.seed << '\n'
      << "# source_digest: " << hex_digest(result.source_digest) << '\n'
      << "# count: " << rows.size() << '\n';
  for (auto row : rows) out << format_record(dataset.record(row)) << '\n';
  return out.str();
}

void export_selection(const EmbeddedDataset& dataset, const SelectionResult& result,
                      const std::filesystem::path& out_path) {
  write_file(out_path, format_selection(dataset, result));
}

LoadedSelection parse_selection(std::string_view text) {
  LoadedSelection loaded;
  std::string body;
  std::size_t pos = 0;
  std::optional<std::size_t> declared_count;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty() || line.front() != '#') {
      body.append(line);
      body += '\n';
      continue;
    }
    line.remove_prefix(1);
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const auto key = trim(line.substr(0, colon));
    const auto value = trim(line.substr(colon + 1));
    auto bad = [&] {
      return Error(ErrorCode::MalformedRecord, "selection header '" + std::string(key) + "'");
    };
    auto& r = loaded.result;
    if (key == "method") {
      r.method = parse_sampling_method(value);
    } else if (key == "target_size" || key == "seed" || key == "count") {
      std::uint64_t v = 0;
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || p != value.data() + value.size()) throw bad();
      if (key == "target_size") r.target_size = v;
      else if (key == "seed") r.seed = v;
      else declared_count = v;
    } else if (key == "scaling_factor") {
      auto v = parse_real(value);
      if (!v) throw bad();
      r.scaling_factor = *v;
    } else if (key == "source_digest") {
      auto v = parse_hex_digest(value);
      if (!v) throw bad();
      r.source_digest = *v;
    }
  }
  loaded.records = parse_records(body);
  for (const auto& rec : loaded.records) loaded.result.selected_ids.push_back(rec.id);
  if (declared_count && *declared_count != loaded.records.size()) {
    throw Error(ErrorCode::RecordCountMismatch, "selection header count disagrees with body");
  }
  return loaded;
}

LoadedSelection load_selection(const std::filesystem::path& path) {
  return parse_selection(read_file(path));
}

}  // namespace shed
