// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#include "shed/value_function.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "shed/command.hpp"
#include "shed/error.hpp"

namespace shed {

namespace {

template <typename Map>
const auto& lookup(const Map& map, const std::string& id, std::string_view game) {
  auto it = map.find(id);
  if (it == map.end()) {
    throw Error(ErrorCode::MissingParameter,
                std::string(game) + " game has no parameters for id '" + id + "'");
  }
  return it->second;
}

double additive(const AdditiveGame& g, std::span<const std::string> subset) {
  double total = 0.0;
  for (const auto& id : subset) total += lookup(g.weights, id, "ADDITIVE");
  return total;
}

double cardinality(const CardinalityGame& g, std::span<const std::string> subset) {
  return std::pow(static_cast<double>(subset.size()), g.exponent);
}

double glove(const GloveGame& g, std::span<const std::string> subset) {
  bool left = false;
  bool right = false;
  for (const auto& id : subset) {
    if (id == g.left) left = true;
    else if (std::find(g.rights.begin(), g.rights.end(), id) != g.rights.end()) right = true;
  }
  return left && right ? 1.0 : 0.0;
}

double pair_synergy(const PairSynergyGame& g, std::span<const std::string> subset) {
  double total = 0.0;
  std::unordered_set<std::string_view> present;
  for (const auto& id : subset) {
    total += lookup(g.weights, id, "PAIR_SYNERGY");
    present.insert(id);
  }
  for (const auto& p : g.pairs) {
    if (present.contains(p.first) && present.contains(p.second)) total += p.bonus;
  }
  return total;
}

double demographic_parity(const DemographicParityGame& g, std::span<const std::string> subset) {
  std::size_t in_a = 0, pos_a = 0, in_b = 0, pos_b = 0;
  for (const auto& id : subset) {
    const auto& m = lookup(g.members, id, "DEMOGRAPHIC_PARITY");
    if (!m.group) throw Error(ErrorCode::MissingGroupLabel, "id '" + id + "' has no group label");
    if (*m.group == g.group_a) {
      ++in_a;
      pos_a += m.positive;
    } else if (*m.group == g.group_b) {
      ++in_b;
      pos_b += m.positive;
    }
  }
  const double rate_a = in_a ? double(pos_a) / double(in_a) : 0.0;
  const double rate_b = in_b ? double(pos_b) / double(in_b) : 0.0;
  return -std::abs(rate_a - rate_b);
}

double nearest_centroid(const NearestCentroidGame& g, std::span<const std::string> subset) {
  const std::size_t d = g.dim;
  std::vector<double> sums(g.num_classes * d, 0.0);
  std::vector<std::size_t> counts(g.num_classes, 0);
  for (const auto& id : subset) {
    const std::size_t row = lookup(g.rows, id, "NEAREST_CENTROID");
    const auto label = g.train_labels[row];
    ++counts[label];
    for (std::size_t j = 0; j < d; ++j) sums[label * d + j] += g.train[row * d + j];
  }
  for (std::size_t c = 0; c < g.num_classes; ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t j = 0; j < d; ++j) sums[c * d + j] /= double(counts[c]);
  }
  const std::size_t dev_count = g.dev_labels.size();
  if (dev_count == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < dev_count; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_c = g.num_classes;
    for (std::size_t c = 0; c < g.num_classes; ++c) {
      if (counts[c] == 0) continue;
      double dist = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = double(g.dev[i * d + j]) - sums[c * d + j];
        dist += diff * diff;
      }
      if (dist < best) {
        best = dist;
        best_c = c;
      }
    }
    if (best_c == g.dev_labels[i]) ++correct;
  }
  return g.scale * double(correct) / double(dev_count);
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

BuiltinKind builtin_kind(const BuiltinGame& game) noexcept {
  return static_cast<BuiltinKind>(game.index());
}

std::string_view to_string(BuiltinKind kind) noexcept {
  switch (kind) {
    case BuiltinKind::Additive: return "ADDITIVE";
    case BuiltinKind::Cardinality: return "CARDINALITY";
    case BuiltinKind::Glove: return "GLOVE";
    case BuiltinKind::PairSynergy: return "PAIR_SYNERGY";
    case BuiltinKind::DemographicParity: return "DEMOGRAPHIC_PARITY";
    case BuiltinKind::NearestCentroid: return "NEAREST_CENTROID";
  }
  return "ADDITIVE";
}

BuiltinKind parse_builtin_kind(std::string_view name) {
  std::string norm(name);
  for (auto& ch : norm) ch = ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  for (auto kind : {BuiltinKind::Additive, BuiltinKind::Cardinality, BuiltinKind::Glove,
                    BuiltinKind::PairSynergy, BuiltinKind::DemographicParity,
                    BuiltinKind::NearestCentroid}) {
    if (to_string(kind) == norm) return kind;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown built-in value function '" + std::string(name) + "'");
}

double builtin_value(const BuiltinGame& game, std::span<const std::string> subset) {
  return std::visit(
      overloaded{
          [&](const AdditiveGame& g) { return additive(g, subset); },
          [&](const CardinalityGame& g) { return cardinality(g, subset); },
          [&](const GloveGame& g) { return glove(g, subset); },
          [&](const PairSynergyGame& g) { return pair_synergy(g, subset); },
          [&](const DemographicParityGame& g) { return demographic_parity(g, subset); },
          [&](const NearestCentroidGame& g) { return nearest_centroid(g, subset); },
      },
      game);
}

ValueFunctionSpec ValueFunctionSpec::from_builtin(BuiltinGame game) {
  ValueFunctionSpec spec;
  spec.kind = ValueKind::Builtin;
  spec.empty_subset_value = builtin_value(game, {});
  spec.builtin = std::make_shared<const BuiltinGame>(std::move(game));
  return spec;
}

ValueFunctionSpec ValueFunctionSpec::from_command(std::vector<std::string> argv, double empty_value) {
  ValueFunctionSpec spec;
  spec.kind = ValueKind::ExternalCommand;
  spec.command = std::move(argv);
  spec.empty_subset_value = empty_value;
  return spec;
}

ValueFunctionSpec ValueFunctionSpec::from_callback(ValueCallback fn, double empty_value) {
  ValueFunctionSpec spec;
  spec.kind = ValueKind::Callback;
  spec.callback = std::move(fn);
  spec.empty_subset_value = empty_value;
  return spec;
}

void validate(const ValueFunctionSpec& spec) {
  if (spec.timeout.count() <= 0) throw Error(ErrorCode::InvalidConfig, "value timeout must be positive");
  if (spec.max_parallel_invocations == 0) {
    throw Error(ErrorCode::InvalidConfig, "max_parallel_invocations must be positive");
  }
  if (!std::isfinite(spec.empty_subset_value)) {
    throw Error(ErrorCode::InvalidConfig, "empty_subset_value must be finite");
  }
  switch (spec.kind) {
    case ValueKind::ExternalCommand:
      if (spec.command.empty()) throw Error(ErrorCode::InvalidConfig, "value command is empty");
      break;
    case ValueKind::Builtin:
      if (!spec.builtin) throw Error(ErrorCode::InvalidConfig, "built-in game not set");
      break;
    case ValueKind::Callback:
      if (!spec.callback) throw Error(ErrorCode::InvalidConfig, "value callback not set");
      break;
  }
}

double evaluate_value(const ValueFunctionSpec& spec, std::span<const std::string> subset) {
  if (subset.empty()) return spec.empty_subset_value;
  double value = 0.0;
  switch (spec.kind) {
    case ValueKind::ExternalCommand:
      return invoke_value_command(spec.command, subset, spec.timeout);
    case ValueKind::Builtin:
      if (!spec.builtin) throw Error(ErrorCode::InvalidConfig, "built-in game not set");
      value = builtin_value(*spec.builtin, subset);
      break;
    case ValueKind::Callback:
      if (!spec.callback) throw Error(ErrorCode::InvalidConfig, "value callback not set");
      value = spec.callback(subset);
      break;
  }
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::NonFiniteValue, "value function returned a non-finite result");
  }
  return value;
}

}  // namespace shed
