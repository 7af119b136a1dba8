// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace shed {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// 64-bit FNV-1a, resumable through `state`.
constexpr std::uint64_t fnv1a(std::span<const unsigned char> bytes,
                              std::uint64_t state = kFnvOffset) noexcept {
  for (unsigned char b : bytes) {
    state ^= b;
    state *= kFnvPrime;
  }
  return state;
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t state = kFnvOffset) noexcept;

/// "0x" followed by 16 lowercase hex digits.
std::string hex_digest(std::uint64_t digest);
std::optional<std::uint64_t> parse_hex_digest(std::string_view text);

/// Shortest text that parses back to exactly `value`.
std::string format_real(double value);

/// Parses a whole token (surrounding ASCII whitespace allowed) as a double.
std::optional<double> parse_real(std::string_view text);

std::string_view trim(std::string_view text) noexcept;

}  // namespace shed
