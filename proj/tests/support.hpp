// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <sys/stat.h>
#include <unistd.h>

#include "shed/dataset.hpp"

namespace shed::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "shed-test-XXXXXX").string();
    path_ = ::mkdtemp(pattern.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

inline std::filesystem::path write_script(const std::filesystem::path& p, const std::string& body) {
  write_text(p, "#!/bin/sh\n" + body + "\n");
  ::chmod(p.c_str(), 0755);
  return p;
}

inline std::vector<InstanceRecord> make_records(std::size_t n, const std::string& prefix = "r") {
  std::vector<InstanceRecord> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({prefix + std::to_string(i), "payload-" + std::to_string(i), {}, {}});
  return out;
}

/// 1-D dataset from the given coordinates.
inline EmbeddedDataset line_dataset(const std::vector<float>& xs) {
  return EmbeddedDataset(make_records(xs.size()), xs, 1);
}

/// Gaussian blobs: `per_blob` points around each of `blobs` random centres.
inline EmbeddedDataset blob_dataset(std::size_t blobs, std::size_t per_blob, std::size_t dim,
                                    std::uint64_t seed, double spread = 0.3) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uni(-10.0, 10.0);
  std::vector<float> values;
  for (std::size_t b = 0; b < blobs; ++b) {
    std::vector<double> centre(dim);
    for (auto& c : centre) c = uni(gen);
    for (std::size_t i = 0; i < per_blob; ++i)
      for (std::size_t j = 0; j < dim; ++j) values.push_back(static_cast<float>(centre[j] + spread * normal(gen)));
  }
  return EmbeddedDataset(make_records(blobs * per_blob), std::move(values), dim);
}

}  // namespace shed::testing
