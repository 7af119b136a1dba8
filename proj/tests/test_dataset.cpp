// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "shed/dataset.hpp"
#include "shed/error.hpp"
#include "shed/text.hpp"
#include "support.hpp"

using namespace shed;
using shed::testing::TempDir;
using shed::testing::write_text;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected shed::Error");
  return ErrorCode::IoFailure;
}

std::string header(std::uint32_t n, std::uint32_t d) {
  std::string h = "SHEDEMB1";
  for (auto v : {n, d})
    for (int s = 0; s < 32; s += 8) h.push_back(static_cast<char>((v >> s) & 0xff));
  return h;
}

const std::string kTwoRecords = R"({"id":"a","payload_ref":"p0"})"
                                "\n"
                                R"({"id":"b","payload_ref":"p1","label":"1","group_label":"g"})"
                                "\n";

}  // namespace

TEST_CASE("load_embeddings: N=2, d=3 with 24 body bytes") {
  TempDir dir;
  const std::vector<float> values{1, 2, 3, 4, 5, 6};
  write_embeddings(dir / "e.bin", values, 2, 3);
  write_text(dir / "r.jsonl", kTwoRecords);

  const auto raw = read_file(dir / "e.bin");
  CHECK(raw.size() == 16 + 24);
  CHECK(raw.substr(0, 8) == "SHEDEMB1");
  CHECK(raw.substr(0, 16) == header(2, 3));

  const auto ds = load_embeddings(dir / "e.bin", dir / "r.jsonl");
  CHECK(ds.count() == 2);
  CHECK(ds.dim() == 3);
  CHECK(ds.row(1)[2] == 6.0f);
  CHECK(ds.record(0).id == "a");
  CHECK(ds.record(1).label == std::optional<std::string>("1"));
  CHECK(ds.record(1).group_label == std::optional<std::string>("g"));
  CHECK(ds.index_of("b") == 1);
  // Digest binds to the float32 body bytes as stored.
  CHECK(ds.digest() == fnv1a(std::string_view(raw).substr(16)));
}

TEST_CASE("load_embeddings: validation errors") {
  TempDir dir;
  write_text(dir / "r.jsonl", kTwoRecords);

  SUBCASE("body of 20 bytes for N=2, d=3") {
    write_text(dir / "e.bin", header(2, 3) + std::string(20, '\0'));
    CHECK(code_of([&] { load_embeddings(dir / "e.bin", dir / "r.jsonl"); }) == ErrorCode::DimensionMismatch);
  }
  SUBCASE("bad magic") {
    write_text(dir / "e.bin", "SHEDEMB2" + header(2, 3).substr(8) + std::string(24, '\0'));
    CHECK(code_of([&] { load_embeddings(dir / "e.bin", dir / "r.jsonl"); }) == ErrorCode::MagicMismatch);
  }
  SUBCASE("record count differs from N") {
    write_embeddings(dir / "e.bin", std::vector<float>(9, 0.f), 3, 3);
    CHECK(code_of([&] { load_embeddings(dir / "e.bin", dir / "r.jsonl"); }) == ErrorCode::RecordCountMismatch);
  }
  SUBCASE("duplicate id") {
    write_embeddings(dir / "e.bin", std::vector<float>(6, 0.f), 2, 3);
    write_text(dir / "r.jsonl", "{\"id\":\"a\"}\n{\"id\":\"a\"}\n");
    CHECK(code_of([&] { load_embeddings(dir / "e.bin", dir / "r.jsonl"); }) == ErrorCode::DuplicateId);
  }
  SUBCASE("non-finite entry") {
    std::vector<float> v(6, 0.f);
    v[4] = std::numeric_limits<float>::quiet_NaN();
    write_embeddings(dir / "e.bin", v, 2, 3);
    CHECK(code_of([&] { load_embeddings(dir / "e.bin", dir / "r.jsonl"); }) == ErrorCode::NonFiniteEmbedding);
  }
  SUBCASE("missing file") {
    CHECK(code_of([&] { load_embeddings(dir / "nope.bin", dir / "r.jsonl"); }) == ErrorCode::IoFailure);
  }
  SUBCASE("record without id") {
    write_embeddings(dir / "e.bin", std::vector<float>(6, 0.f), 2, 3);
    write_text(dir / "r.jsonl", "{\"id\":\"a\"}\n{\"payload_ref\":\"x\"}\n");
    CHECK(code_of([&] { load_embeddings(dir / "e.bin", dir / "r.jsonl"); }) == ErrorCode::MalformedRecord);
  }
}

TEST_CASE("fuzzed headers never yield an invalid dataset") {
  // Random mutations of a valid file: anything accepted must satisfy the invariants.
  TempDir dir;
  std::mt19937_64 gen(7);
  const auto valid = encode_embedding_bytes(std::vector<float>{1, 2, 3, 4, 5, 6}, 2, 3);
  std::size_t accepted = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    auto bytes = valid;
    const int edits = 1 + static_cast<int>(gen() % 3);
    for (int e = 0; e < edits; ++e) {
      switch (gen() % 3) {
        case 0:
          if (bytes.size() >= 16) bytes[gen() % 16] = static_cast<unsigned char>(gen());
          break;
        case 1: bytes.resize(gen() % (bytes.size() + 8), 0); break;
        default:
          if (bytes.size() > 16) bytes[16 + gen() % (bytes.size() - 16)] ^= 0xff;
          break;
      }
    }
    try {
      auto m = parse_embedding_bytes(bytes);
      EmbeddedDataset ds(testing::make_records(m.count), m.values, m.dim);
      ++accepted;
      CHECK(ds.embeddings().size() == ds.count() * ds.dim());
      for (float v : ds.embeddings()) CHECK(std::isfinite(v));
    } catch (const Error&) {
    }
  }
  CHECK(accepted > 0);
}

TEST_CASE("l2 normalisation is opt-in and keeps the file digest") {
  TempDir dir;
  write_embeddings(dir / "e.bin", std::vector<float>{3, 4, 0, 0, 0, 2}, 2, 3);
  write_text(dir / "r.jsonl", kTwoRecords);
  const auto raw = load_embeddings(dir / "e.bin", dir / "r.jsonl");
  const auto unit = load_embeddings(dir / "e.bin", dir / "r.jsonl", {.l2_normalize = true});
  CHECK(raw.row(0)[0] == 3.0f);
  CHECK(unit.row(0)[0] == doctest::Approx(0.6));
  CHECK(unit.row(0)[1] == doctest::Approx(0.8));
  CHECK(unit.row(1)[2] == doctest::Approx(1.0));
  CHECK(unit.digest() == raw.digest());
}

TEST_CASE("export_selection") {
  TempDir dir;
  auto ds = testing::blob_dataset(1, 5, 2, 1);
  SelectionResult r;
  r.selected_ids = {"r3", "r0", "r4"};
  r.method = SamplingMethod::QWCS;
  r.target_size = 3;
  r.scaling_factor = 1.5;
  r.seed = 99;
  r.source_digest = ds.digest();

  SUBCASE("three ids, in selection order, with metadata header") {
    export_selection(ds, r, dir / "sel.jsonl");
    const auto text = read_file(dir / "sel.jsonl");
    CHECK(text.find("# method: QWCS\n") != std::string::npos);
    CHECK(text.find("# seed: 99\n") != std::string::npos);
    CHECK(text.find("# scaling_factor: 1.5\n") != std::string::npos);
    CHECK(text.find("# source_digest: " + hex_digest(ds.digest()) + "\n") != std::string::npos);
    const auto loaded = load_selection(dir / "sel.jsonl");
    CHECK(loaded.result == r);
    CHECK(loaded.records.size() == 3);
    CHECK(loaded.records[1] == ds.record(0));
  }
  SUBCASE("byte-identical on re-export") {
    export_selection(ds, r, dir / "a.jsonl");
    export_selection(ds, r, dir / "b.jsonl");
    CHECK(read_file(dir / "a.jsonl") == read_file(dir / "b.jsonl"));
  }
  SUBCASE("unknown id") {
    r.selected_ids.push_back("zz");
    CHECK(code_of([&] { export_selection(ds, r, dir / "c.jsonl"); }) == ErrorCode::UnknownId);
    CHECK_FALSE(std::filesystem::exists(dir / "c.jsonl"));
  }
}

TEST_CASE("round trip: full id list survives export and reload") {
  TempDir dir;
  std::vector<InstanceRecord> recs;
  for (int i = 0; i < 40; ++i) {
    InstanceRecord rec{"id-" + std::to_string((i * 17) % 40) + "\"q\\u", "text \n with newline", {}, {}};
    if (i % 3 == 0) rec.group_label = "g" + std::to_string(i % 2);
    if (i % 4 == 0) rec.label = "\xc3\xa9t\xc3\xa9";
    recs.push_back(rec);
  }
  EmbeddedDataset ds(recs, std::vector<float>(40 * 2, 0.5f), 2);
  write_dataset(ds, dir / "e.bin", dir / "r.jsonl");
  const auto back = load_embeddings(dir / "e.bin", dir / "r.jsonl");

  SelectionResult r;
  for (const auto& rec : back.records()) r.selected_ids.push_back(rec.id);
  r.target_size = r.selected_ids.size();
  r.source_digest = back.digest();
  export_selection(back, r, dir / "sel.jsonl");
  const auto loaded = load_selection(dir / "sel.jsonl");
  CHECK(loaded.result.selected_ids == r.selected_ids);
  CHECK(std::equal(loaded.records.begin(), loaded.records.end(), ds.records().begin()));
}
