#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cleann/metric.hpp"

namespace cleann {

using NodeId = std::uint32_t;
inline constexpr NodeId kInvalidNode = std::numeric_limits<NodeId>::max();

struct Neighbor {
  NodeId id = kInvalidNode;
  float distance = 0.0f;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
  }
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Error types. Library code throws these; std::invalid_argument is used for
// malformed caller input (dimension mismatch, bad parameters).

class CapacityExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class InvalidOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class ReusePolicy { FreshFirst, ReusedFirst };

enum class BridgePredicate { SameDepth, AlwaysTrue };

struct BridgeConfig {
  bool enabled = true;
  /// Empty with `auto_depths` set means "derive from the current index size".
  std::vector<std::uint32_t> depths;
  bool auto_depths = true;
  BridgePredicate predicate = BridgePredicate::SameDepth;
  std::size_t max_pairs_per_query = 256;
};

enum class EngineMode { CleANN, Naive, Fresh, Rebuild };

EngineMode parse_engine(std::string_view name);
std::string_view engine_name(EngineMode m);

struct IndexParams {
  std::size_t dim = 0;
  std::size_t capacity = 0;
  std::uint32_t max_degree = 64;      // R
  std::uint32_t search_width = 75;    // L
  std::uint32_t insert_width = 64;    // L_I
  float alpha = 1.2f;
  std::uint32_t eagerness = 7;        // C
  Metric metric = Metric::L2;
  ReusePolicy reuse = ReusePolicy::FreshFirst;
  BridgeConfig bridge;

  /// Throws std::invalid_argument describing the first bad field.
  void validate() const;
};

}  // namespace cleann
