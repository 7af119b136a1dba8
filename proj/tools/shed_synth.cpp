// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

// Writes a synthetic Gaussian-blob dataset (embeddings + records) for demos
// and smoke tests. Each record's label is a per-instance weight in [0, 1)
// drawn around its blob's mean, so the ADDITIVE builtin has something to rank.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <random>

#include "shed/dataset.hpp"
#include "shed/error.hpp"
#include "shed/text.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic blob dataset"};
  std::size_t count = 200;
  std::size_t dim = 4;
  std::size_t blobs = 5;
  std::uint64_t seed = 0;
  std::filesystem::path out = ".";
  app.add_option("--count", count, "Instances")->check(CLI::PositiveNumber);
  app.add_option("--dim", dim, "Embedding dimension")->check(CLI::PositiveNumber);
  app.add_option("--blobs", blobs, "Gaussian blobs")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Generator seed");
  app.add_option("--out", out, "Output directory (embeddings.bin, records.jsonl)");
  CLI11_PARSE(app, argc, argv);

  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> centre(-10.0, 10.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.5);

  std::vector<std::vector<double>> centres(blobs, std::vector<double>(dim));
  std::vector<double> blob_weight(blobs);
  for (std::size_t b = 0; b < blobs; ++b) {
    for (auto& c : centres[b]) c = centre(gen);
    blob_weight[b] = unit(gen);
  }

  std::vector<float> values;
  std::vector<shed::InstanceRecord> records;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t b = i % blobs;
    for (std::size_t j = 0; j < dim; ++j) values.push_back(static_cast<float>(centres[b][j] + noise(gen)));
    const double w = std::clamp(blob_weight[b] + 0.05 * noise(gen), 0.0, 1.0);
    records.push_back({"x" + std::to_string(i), "blob-" + std::to_string(b),
                       "g" + std::to_string(b % 2), shed::format_real(w)});
  }
  try {
    std::filesystem::create_directories(out);
    const shed::EmbeddedDataset ds(std::move(records), std::move(values), dim);
    shed::write_dataset(ds, out / "embeddings.bin", out / "records.jsonl");
    std::cout << "wrote " << ds.count() << " x " << ds.dim() << " (" << shed::hex_digest(ds.digest()) << ")\n";
  } catch (const shed::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
