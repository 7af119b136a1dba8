// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace shed {

// Built-in games. All of them are keyed by instance id.

/// v(P) = sum of member weights.
struct AdditiveGame {
  std::unordered_map<std::string, double> weights;
};

/// v(P) = |P|^exponent.
struct CardinalityGame {
  double exponent = 1.0;
};

/// v(P) = 1 iff P holds the left glove and at least one right glove.
struct GloveGame {
  std::string left;
  std::vector<std::string> rights;
};

/// Additive weights plus a bonus for every designated pair fully present.
struct PairSynergyGame {
  struct Pair {
    std::string first;
    std::string second;
    double bonus = 0.0;
  };
  std::unordered_map<std::string, double> weights;
  std::vector<Pair> pairs;
};

/// v(P) = -|rate_A - rate_B|, rate_G being the fraction of positive members
/// among those of P in group G (0 when P has none).
struct DemographicParityGame {
  struct Member {
    std::optional<std::string> group;
    bool positive = false;
  };
  std::unordered_map<std::string, Member> members;
  std::string group_a;
  std::string group_b;
};

/// Dev-set accuracy (times `scale`) of a nearest-class-mean classifier fit on
/// the coalition's embeddings and labels. Classes absent from P are never
/// predicted; an empty coalition predicts nothing and scores 0.
struct NearestCentroidGame {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::size_t> rows;  // id -> training row
  std::vector<float> train;                            // rows x dim
  std::vector<std::uint32_t> train_labels;             // class index per row
  std::vector<float> dev;                              // dev rows x dim
  std::vector<std::uint32_t> dev_labels;
  std::size_t num_classes = 0;
  double scale = 1.0;
};

using BuiltinGame = std::variant<AdditiveGame, CardinalityGame, GloveGame, PairSynergyGame,
                                 DemographicParityGame, NearestCentroidGame>;

enum class BuiltinKind { Additive, Cardinality, Glove, PairSynergy, DemographicParity, NearestCentroid };

BuiltinKind builtin_kind(const BuiltinGame& game) noexcept;
std::string_view to_string(BuiltinKind kind) noexcept;
/// Accepts e.g. "additive", "PAIR_SYNERGY", "pair-synergy". Throws InvalidConfig.
BuiltinKind parse_builtin_kind(std::string_view name);

/// Evaluates a built-in game directly. Throws MissingParameter for ids the
/// game does not know, MissingGroupLabel for unlabeled DEMOGRAPHIC_PARITY members.
double builtin_value(const BuiltinGame& game, std::span<const std::string> subset);

enum class ValueKind { ExternalCommand, Builtin, Callback };

using ValueCallback = std::function<double(std::span<const std::string>)>;

/// How v(P) is computed. The empty coalition never reaches the backend:
/// v(empty) is the declared `empty_subset_value`.
struct ValueFunctionSpec {
  ValueKind kind = ValueKind::Builtin;
  std::vector<std::string> command;
  std::shared_ptr<const BuiltinGame> builtin;
  ValueCallback callback;
  double empty_subset_value = 0.0;
  std::chrono::milliseconds timeout{std::chrono::minutes(10)};
  std::size_t max_parallel_invocations = 1;

  /// empty_subset_value defaults to the game's own value on the empty set.
  static ValueFunctionSpec from_builtin(BuiltinGame game);
  static ValueFunctionSpec from_command(std::vector<std::string> argv, double empty_value);
  static ValueFunctionSpec from_callback(ValueCallback fn, double empty_value);
};

/// Throws InvalidConfig when the spec is unusable (no command, zero timeout...).
void validate(const ValueFunctionSpec& spec);

/// v(subset). Non-finite results abort with NonFiniteValue (built-ins,
/// callbacks) or MalformedScore (external commands).
double evaluate_value(const ValueFunctionSpec& spec, std::span<const std::string> subset);

}  // namespace shed
