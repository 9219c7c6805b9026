#include "cleann/graph_store.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <unordered_set>

namespace cleann {

static_assert(std::endian::native == std::endian::little,
              "snapshot format assumes a little-endian host");

GraphStore::GraphStore(std::size_t dim, std::size_t capacity, std::uint32_t max_degree,
                       Metric metric, ReusePolicy reuse)
    : dim_(dim),
      capacity_(capacity),
      max_degree_(max_degree),
      metric_(metric),
      reuse_(reuse),
      values_(dim * capacity, 0.0f),
      slots_(std::make_unique<Slot[]>(capacity)) {
  if (dim == 0 || capacity == 0 || max_degree == 0) {
    throw std::invalid_argument("GraphStore: dim, capacity and R must be >= 1");
  }
  if (capacity >= kInvalidNode) throw std::invalid_argument("GraphStore: capacity too large");
  empty_slots_.reserve(capacity);
  for (std::size_t i = capacity; i-- > 0;) empty_slots_.push_back(static_cast<NodeId>(i));
}

void GraphStore::set_vector(NodeId v, std::span<const float> x) {
  if (x.size() != dim_) {
    throw std::invalid_argument("vector dimension " + std::to_string(x.size()) +
                                " does not match index dimension " + std::to_string(dim_));
  }
  std::copy(x.begin(), x.end(), values_.begin() + std::size_t{v} * dim_);
}

void GraphStore::note_occupied() {
  const auto now = occupied_.fetch_add(1, std::memory_order_relaxed) + 1;
  auto peak = peak_.load(std::memory_order_relaxed);
  while (now > peak && !peak_.compare_exchange_weak(peak, now, std::memory_order_relaxed)) {
  }
}

AcquiredSlot GraphStore::acquire_slot() {
  for (;;) {
    NodeId id = kInvalidNode;
    bool reused = false;
    {
      std::lock_guard lock(pool_mutex_);
      const bool prefer_fresh = reuse_ == ReusePolicy::FreshFirst;
      const bool have_fresh = !empty_slots_.empty();
      const bool have_reuse = !replaceable_.empty();
      if (!have_fresh && !have_reuse) {
        throw CapacityExhausted("slot arena full: capacity " + std::to_string(capacity_));
      }
      if (have_fresh && (prefer_fresh || !have_reuse)) {
        id = empty_slots_.back();
        empty_slots_.pop_back();
      } else {
        id = replaceable_.front();
        replaceable_.pop_front();
        reused = true;
      }
    }

    auto& slot = slots_[id];
    if (!reused) {
      // Entries may be stale when place_live claimed the slot directly.
      std::lock_guard h_lock(slot.h_mutex);
      if (status(id) != SlotStatus::Empty) continue;
      set_status(slot, SlotStatus::Live);
      slot.h = -1;
      live_.fetch_add(1, std::memory_order_relaxed);
      note_occupied();
      return {id, false, {}};
    }

    AcquiredSlot out{id, true, {}};
    std::lock_guard h_lock(slot.h_mutex);
    if (status(id) != SlotStatus::Replaceable) continue;
    {
      std::shared_lock adj(slot.adj_mutex);
      out.retained_neighbors = slot.neighbors;
    }
    set_status(slot, SlotStatus::Live);
    slot.h = -1;
    replaceable_count_.fetch_sub(1, std::memory_order_relaxed);
    live_.fetch_add(1, std::memory_order_relaxed);
    return out;
  }
}

void GraphStore::place_live(NodeId v, std::span<const float> x) {
  if (v >= capacity_) throw std::out_of_range("place_live: id out of range");
  auto& slot = slots_[v];
  std::lock_guard h_lock(slot.h_mutex);
  if (status(v) != SlotStatus::Empty) {
    throw InvalidOperation("place_live: slot " + std::to_string(v) + " is not empty");
  }
  set_vector(v, x);
  set_status(slot, SlotStatus::Live);
  slot.h = -1;
  live_.fetch_add(1, std::memory_order_relaxed);
  note_occupied();
}

void GraphStore::tombstone(NodeId v) {
  if (v >= capacity_) throw InvalidOperation("delete: id out of range");
  auto& slot = slots_[v];
  std::lock_guard h_lock(slot.h_mutex);
  if (status(v) != SlotStatus::Live) {
    throw InvalidOperation("delete: node " + std::to_string(v) + " is not live");
  }
  set_status(slot, SlotStatus::Tombstoned);
  slot.h = 0;
  h_writes_.fetch_add(1, std::memory_order_relaxed);
  live_.fetch_sub(1, std::memory_order_relaxed);
  tombstoned_.fetch_add(1, std::memory_order_relaxed);
}

void GraphStore::mark_replaceable(NodeId v, std::uint32_t threshold) {
  auto& slot = slots_[v];
  std::lock_guard h_lock(slot.h_mutex);
  if (status(v) != SlotStatus::Tombstoned) {
    throw InvalidOperation("mark_replaceable: node " + std::to_string(v) + " is not tombstoned");
  }
  if (slot.h < static_cast<std::int64_t>(threshold)) {
    throw InvalidOperation("mark_replaceable: node " + std::to_string(v) +
                           " has not reached the eagerness threshold");
  }
  if (pinned(v)) throw InvalidOperation("mark_replaceable: node is pinned");
  set_status(slot, SlotStatus::Replaceable);
  slot.h = -1;
  h_writes_.fetch_add(1, std::memory_order_relaxed);
  {
    std::lock_guard lock(pool_mutex_);
    replaceable_.push_back(v);
  }
  tombstoned_.fetch_sub(1, std::memory_order_relaxed);
  replaceable_count_.fetch_add(1, std::memory_order_relaxed);
}

bool GraphStore::try_mark_replaceable(NodeId v, std::uint32_t threshold) {
  if (status(v) != SlotStatus::Tombstoned || pinned(v)) return false;
  auto& slot = slots_[v];
  std::lock_guard h_lock(slot.h_mutex);
  if (status(v) != SlotStatus::Tombstoned || slot.h < static_cast<std::int64_t>(threshold)) {
    return false;
  }
  set_status(slot, SlotStatus::Replaceable);
  slot.h = -1;
  h_writes_.fetch_add(1, std::memory_order_relaxed);
  {
    std::lock_guard lock(pool_mutex_);
    replaceable_.push_back(v);
  }
  tombstoned_.fetch_sub(1, std::memory_order_relaxed);
  replaceable_count_.fetch_add(1, std::memory_order_relaxed);
  return true;
}

bool GraphStore::increment_consolidations(NodeId v) {
  auto& slot = slots_[v];
  std::lock_guard h_lock(slot.h_mutex);
  if (slot.h < 0 || status(v) != SlotStatus::Tombstoned) return false;
  ++slot.h;
  h_writes_.fetch_add(1, std::memory_order_relaxed);
  return true;
}

std::optional<std::uint32_t> GraphStore::consolidation_count(NodeId v) const {
  auto& slot = slots_[v];
  std::lock_guard h_lock(slot.h_mutex);
  if (slot.h < 0) return std::nullopt;
  return static_cast<std::uint32_t>(slot.h);
}

void GraphStore::release_to_empty(NodeId v) {
  auto& slot = slots_[v];
  std::lock_guard h_lock(slot.h_mutex);
  const auto st = status(v);
  if (st != SlotStatus::Tombstoned && st != SlotStatus::Replaceable) {
    throw InvalidOperation("release_to_empty: node " + std::to_string(v) + " is not deleted");
  }
  {
    std::unique_lock adj(slot.adj_mutex);
    slot.neighbors.clear();
    ++slot.version;
  }
  set_status(slot, SlotStatus::Empty);
  slot.h = -1;
  {
    std::lock_guard lock(pool_mutex_);
    empty_slots_.push_back(v);
    if (st == SlotStatus::Replaceable) {
      std::erase(replaceable_, v);
    }
  }
  if (st == SlotStatus::Tombstoned) {
    tombstoned_.fetch_sub(1, std::memory_order_relaxed);
  } else {
    replaceable_count_.fetch_sub(1, std::memory_order_relaxed);
  }
  occupied_.fetch_sub(1, std::memory_order_relaxed);
}

std::vector<NodeId> GraphStore::replaceable_snapshot() const {
  std::lock_guard lock(pool_mutex_);
  return {replaceable_.begin(), replaceable_.end()};
}

std::vector<NodeId> GraphStore::read_neighbors(NodeId v) const {
  std::shared_lock lock(slots_[v].adj_mutex);
  return slots_[v].neighbors;
}

std::uint64_t GraphStore::read_neighbors_into(NodeId v, std::vector<NodeId>& out) const {
  std::shared_lock lock(slots_[v].adj_mutex);
  out.assign(slots_[v].neighbors.begin(), slots_[v].neighbors.end());
  return slots_[v].version;
}

void GraphStore::validate_list(NodeId v, std::span<const NodeId> list) const {
  if (list.size() > max_degree_) {
    throw InvariantViolation("neighbor list of " + std::to_string(v) + " has " +
                             std::to_string(list.size()) + " entries, bound is " +
                             std::to_string(max_degree_));
  }
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i] == v) throw InvariantViolation("self loop on node " + std::to_string(v));
    if (list[i] >= capacity_) throw InvariantViolation("neighbor id out of range");
    for (std::size_t j = 0; j < i; ++j) {
      if (list[j] == list[i]) {
        throw InvariantViolation("duplicate neighbor " + std::to_string(list[i]) + " on node " +
                                 std::to_string(v));
      }
    }
  }
}

void GraphStore::write_neighbors(NodeId v, std::span<const NodeId> list) {
  validate_list(v, list);
  auto& slot = slots_[v];
  std::unique_lock lock(slot.adj_mutex);
  slot.neighbors.assign(list.begin(), list.end());
  ++slot.version;
  adjacency_writes_.fetch_add(1, std::memory_order_relaxed);
}

bool GraphStore::write_neighbors_if_unchanged(NodeId v, std::span<const NodeId> list,
                                              std::uint64_t version) {
  validate_list(v, list);
  auto& slot = slots_[v];
  std::unique_lock lock(slot.adj_mutex);
  if (slot.version != version) return false;
  slot.neighbors.assign(list.begin(), list.end());
  ++slot.version;
  adjacency_writes_.fetch_add(1, std::memory_order_relaxed);
  return true;
}

StoreStats GraphStore::stats() const {
  StoreStats s;
  s.live = live_.load(std::memory_order_relaxed);
  s.tombstoned = tombstoned_.load(std::memory_order_relaxed);
  s.replaceable = replaceable_count_.load(std::memory_order_relaxed);
  s.peak_slots = peak_.load(std::memory_order_relaxed);
  for (std::size_t i = 0; i < capacity_; ++i) {
    if (status(static_cast<NodeId>(i)) == SlotStatus::Empty) continue;
    std::shared_lock lock(slots_[i].adj_mutex);
    s.edges += slots_[i].neighbors.size();
  }
  return s;
}

std::vector<std::string> GraphStore::check_invariants() const {
  std::vector<std::string> problems;
  std::size_t live = 0, tomb = 0, repl = 0;
  std::unordered_set<NodeId> in_pool;
  {
    std::lock_guard lock(pool_mutex_);
    for (auto v : replaceable_) {
      if (status(v) == SlotStatus::Replaceable && !in_pool.insert(v).second) {
        problems.push_back("slot " + std::to_string(v) + " queued twice as replaceable");
      }
    }
  }
  for (std::size_t i = 0; i < capacity_; ++i) {
    const auto v = static_cast<NodeId>(i);
    const auto& slot = slots_[i];
    const auto st = status(v);
    std::int32_t h;
    {
      std::lock_guard h_lock(slot.h_mutex);
      h = slot.h;
    }
    std::vector<NodeId> nbrs;
    {
      std::shared_lock adj(slot.adj_mutex);
      nbrs = slot.neighbors;
    }
    try {
      validate_list(v, nbrs);
    } catch (const InvariantViolation& e) {
      problems.emplace_back(e.what());
    }
    switch (st) {
      case SlotStatus::Empty:
        if (!nbrs.empty()) problems.push_back("empty slot " + std::to_string(v) + " has edges");
        if (h >= 0) problems.push_back("empty slot " + std::to_string(v) + " has H");
        break;
      case SlotStatus::Live:
        ++live;
        if (h >= 0) problems.push_back("live slot " + std::to_string(v) + " has H");
        break;
      case SlotStatus::Tombstoned:
        ++tomb;
        if (h < 0) problems.push_back("tombstone " + std::to_string(v) + " lacks H");
        if (in_pool.contains(v)) {
          problems.push_back("tombstone " + std::to_string(v) + " is in the replaceable set");
        }
        break;
      case SlotStatus::Replaceable:
        ++repl;
        if (h >= 0) problems.push_back("replaceable slot " + std::to_string(v) + " has H");
        if (!in_pool.contains(v)) {
          problems.push_back("replaceable slot " + std::to_string(v) + " missing from set");
        }
        break;
    }
  }
  if (live != live_.load()) problems.push_back("live counter drift");
  if (tomb != tombstoned_.load()) problems.push_back("tombstone counter drift");
  if (repl != replaceable_count_.load()) problems.push_back("replaceable counter drift");
  return problems;
}

// Snapshot layout (little-endian):
//   char[8] "CLNNSNAP", u32 version, u32 dim, u32 capacity, u32 R, u8 metric,
//   u32 start id
//   per slot: u8 status, f32[dim] vector, u32 degree, u32[degree] neighbors
//   i32[capacity] H table (-1 = absent)
//   u32 count, u32[count] replaceable set in reuse order
namespace {

constexpr char kMagic[8] = {'C', 'L', 'N', 'N', 'S', 'N', 'A', 'P'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw std::runtime_error("snapshot truncated at byte " + std::to_string(in.tellg()));
  }
  return v;
}

}  // namespace

void GraphStore::save(std::ostream& out, NodeId start) const {
  out.write(kMagic, sizeof(kMagic));
  put(out, kVersion);
  put(out, static_cast<std::uint32_t>(dim_));
  put(out, static_cast<std::uint32_t>(capacity_));
  put(out, max_degree_);
  put(out, static_cast<std::uint8_t>(metric_));
  put(out, start);
  std::vector<NodeId> nbrs;
  for (std::size_t i = 0; i < capacity_; ++i) {
    const auto v = static_cast<NodeId>(i);
    put(out, static_cast<std::uint8_t>(status(v)));
    out.write(reinterpret_cast<const char*>(vector_data(v)),
              static_cast<std::streamsize>(dim_ * sizeof(float)));
    read_neighbors_into(v, nbrs);
    put(out, static_cast<std::uint32_t>(nbrs.size()));
    out.write(reinterpret_cast<const char*>(nbrs.data()),
              static_cast<std::streamsize>(nbrs.size() * sizeof(NodeId)));
  }
  for (std::size_t i = 0; i < capacity_; ++i) {
    std::lock_guard h_lock(slots_[i].h_mutex);
    put(out, slots_[i].h);
  }
  const auto pool = replaceable_snapshot();
  std::vector<NodeId> valid;
  for (auto v : pool) {
    if (status(v) == SlotStatus::Replaceable) valid.push_back(v);
  }
  put(out, static_cast<std::uint32_t>(valid.size()));
  for (auto v : valid) put(out, v);
}

std::unique_ptr<GraphStore> GraphStore::load(std::istream& in, NodeId& start, ReusePolicy reuse) {
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not a snapshot file (bad magic)");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) {
    throw std::runtime_error("unsupported snapshot version " + std::to_string(version));
  }
  const auto dim = get<std::uint32_t>(in);
  const auto capacity = get<std::uint32_t>(in);
  const auto max_degree = get<std::uint32_t>(in);
  const auto metric_byte = get<std::uint8_t>(in);
  if (metric_byte > static_cast<std::uint8_t>(Metric::Cosine)) {
    throw std::runtime_error("snapshot has unknown metric");
  }
  start = get<NodeId>(in);
  auto store = std::make_unique<GraphStore>(dim, capacity, max_degree,
                                            static_cast<Metric>(metric_byte), reuse);
  store->empty_slots_.clear();
  std::vector<NodeId> nbrs;
  for (std::uint32_t i = 0; i < capacity; ++i) {
    const auto st_byte = get<std::uint8_t>(in);
    if (st_byte > static_cast<std::uint8_t>(SlotStatus::Replaceable)) {
      throw std::runtime_error("snapshot slot " + std::to_string(i) + " has bad status");
    }
    if (!in.read(reinterpret_cast<char*>(store->values_.data() + std::size_t{i} * dim),
                 static_cast<std::streamsize>(dim * sizeof(float)))) {
      throw std::runtime_error("snapshot truncated in slot " + std::to_string(i));
    }
    const auto degree = get<std::uint32_t>(in);
    if (degree > max_degree) throw std::runtime_error("snapshot degree exceeds R");
    nbrs.resize(degree);
    for (auto& n : nbrs) n = get<NodeId>(in);
    store->validate_list(i, nbrs);
    auto& slot = store->slots_[i];
    slot.neighbors = nbrs;
    const auto st = static_cast<SlotStatus>(st_byte);
    store->set_status(slot, st);
    switch (st) {
      case SlotStatus::Empty: break;
      case SlotStatus::Live: ++store->live_; break;
      case SlotStatus::Tombstoned: ++store->tombstoned_; break;
      case SlotStatus::Replaceable: ++store->replaceable_count_; break;
    }
    if (st != SlotStatus::Empty) ++store->occupied_;
  }
  for (std::uint32_t i = capacity; i-- > 0;) {
    if (store->status(i) == SlotStatus::Empty) store->empty_slots_.push_back(i);
  }
  for (std::uint32_t i = 0; i < capacity; ++i) store->slots_[i].h = get<std::int32_t>(in);
  const auto count = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto v = get<NodeId>(in);
    if (v >= capacity) throw std::runtime_error("snapshot replaceable id out of range");
    store->replaceable_.push_back(v);
  }
  store->peak_ = store->occupied_.load();
  if (start != kInvalidNode) {
    if (start >= capacity) throw std::runtime_error("snapshot start id out of range");
    store->pin(start);
  }
  return store;
}

}  // namespace cleann
