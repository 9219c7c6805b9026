#include "cleann/index.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

#include "cleann/consolidate.hpp"
#include "cleann/prune.hpp"

namespace cleann {

NodeId compute_medoid(const GraphStore& store, std::span<const NodeId> ids,
                      std::size_t sample_limit, std::uint64_t seed) {
  if (ids.empty()) return kInvalidNode;
  std::vector<NodeId> sample(ids.begin(), ids.end());
  if (sample.size() > sample_limit) {
    std::mt19937_64 rng(seed);
    std::shuffle(sample.begin(), sample.end(), rng);
    sample.resize(sample_limit);
    std::sort(sample.begin(), sample.end());
  }
  const auto n = static_cast<std::int64_t>(sample.size());
  std::vector<double> cost(sample.size(), 0.0);
#pragma omp parallel for schedule(dynamic, 64) if (n > 2048)
  for (std::int64_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      if (i != j) acc += store.distance(sample[i], sample[j]);
    }
    cost[i] = acc;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < cost.size(); ++i) {
    if (cost[i] < cost[best] || (cost[i] == cost[best] && sample[i] < sample[best])) best = i;
  }
  return sample[best];
}

Index::Index(IndexParams params, EngineMode mode)
    : params_(std::move(params)), mode_(mode) {
  params_.validate();
  store_ = std::make_unique<GraphStore>(params_.dim, params_.capacity, params_.max_degree,
                                        params_.metric, params_.reuse);
}

SearchResult Index::beam_search(std::span<const float> q, std::size_t width,
                                bool performance_sensitive) {
  const NodeId s = start();
  if (s == kInvalidNode) {
    if (q.size() != params_.dim) throw std::invalid_argument("query dimension mismatch");
    return {};
  }
  const NodeId starts[] = {s};
  if (mode_ == EngineMode::CleANN) {
    return clean_dynamic_beam_search(*store_, q, width, starts, performance_sensitive, params_);
  }
  return greedy_beam_search(*store_, q, width, starts);
}

void Index::link_node(NodeId v, std::span<const NodeId> extra, float alpha, bool bridge) {
  const auto x = store_->vector(v);
  const NodeId starts[] = {start()};
  SearchResult res;
  if (mode_ == EngineMode::CleANN) {
    IndexParams p = params_;
    p.bridge.enabled = p.bridge.enabled && bridge;
    res = clean_dynamic_beam_search(*store_, x, params_.insert_width, starts, false, p);
  } else {
    res = greedy_beam_search(*store_, x, params_.insert_width, starts);
  }

  std::vector<NodeId> candidates;
  candidates.reserve(res.visited.size() + extra.size());
  auto admit = [&](NodeId u) {
    if (u == v || u >= store_->capacity()) return;
    const auto st = store_->status(u);
    if (st == SlotStatus::Live || st == SlotStatus::Tombstoned) candidates.push_back(u);
  };
  for (auto u : res.visited) admit(u);
  for (auto u : extra) admit(u);

  const auto chosen = robust_prune(*store_, v, candidates, alpha, params_.max_degree);
  store_->write_neighbors(v, chosen);
  const NodeId self[] = {v};
  for (auto w : chosen) add_neighbors(*store_, w, self, alpha);
}

NodeId Index::insert(std::span<const float> x) {
  if (x.size() != params_.dim) {
    throw std::invalid_argument("insert: vector dimension " + std::to_string(x.size()) +
                                " does not match index dimension " +
                                std::to_string(params_.dim));
  }
  auto slot = store_->acquire_slot();
  store_->set_vector(slot.id, x);
  if (start() == kInvalidNode) {
    std::lock_guard lock(start_mutex_);
    if (start() == kInvalidNode) {
      store_->pin(slot.id);
      start_.store(slot.id, std::memory_order_release);
      return slot.id;
    }
  }
  link_node(slot.id, slot.retained_neighbors, params_.alpha, true);
  return slot.id;
}

void Index::remove(NodeId v) { store_->tombstone(v); }

std::vector<Neighbor> Index::search(std::span<const float> q, std::size_t k,
                                    bool performance_sensitive) {
  if (k == 0) throw std::invalid_argument("search: k must be >= 1");
  if (k > params_.search_width) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true)) {
      std::cerr << "warning: k=" << k << " exceeds beam width L=" << params_.search_width
                << "; clamping k to L\n";
    }
    k = params_.search_width;
  }
  auto res = beam_search(q, params_.search_width, performance_sensitive);
  std::vector<Neighbor> out;
  out.reserve(k);
  for (const auto& nb : res.best) {
    if (out.size() == k) break;
    if (store_->is_live(nb.id)) out.push_back(nb);
  }
  return out;
}

void Index::build_graph(std::span<const NodeId> ids, const BuildOptions& opts) {
  if (opts.passes != 1 && opts.passes != 2) {
    throw std::invalid_argument("build: passes must be 1 or 2");
  }
  const NodeId medoid = compute_medoid(*store_, ids, 10000, opts.seed);
  store_->pin(medoid);
  start_.store(medoid, std::memory_order_release);

  std::mt19937_64 rng(opts.seed);
  std::vector<NodeId> order(ids.begin(), ids.end());
  std::erase(order, medoid);

  // Two-pass builds link with alpha = 1 first and refine with the configured
  // alpha; single-pass builds use the configured alpha throughout.
  for (int pass = 0; pass < opts.passes; ++pass) {
    const float alpha = (opts.passes == 2 && pass == 0) ? 1.0f : params_.alpha;
    std::shuffle(order.begin(), order.end(), rng);
    const auto n = static_cast<std::int64_t>(order.size());
    std::exception_ptr failure;
    std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic, 8) num_threads(std::max(opts.threads, 1)) if (opts.threads > 1)
    for (std::int64_t i = 0; i < n; ++i) {
      try {
        const NodeId v = order[i];
        if (pass == 0) {
          link_node(v, {}, alpha, true);
        } else {
          link_node(v, store_->read_neighbors(v), alpha, true);
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  }
}

std::vector<NodeId> Index::build(std::span<const float> data, std::size_t n,
                                 const BuildOptions& opts) {
  if (n == 0) throw std::invalid_argument("build: no data");
  if (data.size() != n * params_.dim) {
    throw std::invalid_argument("build: data size does not match n x dim");
  }
  if (start() != kInvalidNode || store_->live_count() != 0) {
    throw InvalidOperation("build: index is not empty");
  }
  if (n > store_->capacity()) throw CapacityExhausted("build: more points than capacity");
  std::vector<NodeId> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    ids[i] = static_cast<NodeId>(i);
    store_->place_live(ids[i], data.subspan(i * params_.dim, params_.dim));
  }
  build_graph(ids, opts);
  return ids;
}

void Index::rebuild(std::uint64_t seed, int threads) {
  auto fresh = std::make_unique<GraphStore>(params_.dim, params_.capacity, params_.max_degree,
                                            params_.metric, params_.reuse);
  std::vector<NodeId> ids;
  const auto cap = static_cast<NodeId>(store_->capacity());
  for (NodeId v = 0; v < cap; ++v) {
    if (store_->is_live(v)) {
      fresh->place_live(v, store_->vector(v));
      ids.push_back(v);
    }
  }
  carried_peak_ = std::max(carried_peak_, store_->stats().peak_slots);
  store_ = std::move(fresh);
  start_.store(kInvalidNode, std::memory_order_release);
  if (ids.empty()) return;
  build_graph(ids, BuildOptions{2, seed, threads});
}

std::size_t Index::consolidate_all() { return global_consolidate_baseline(*store_, params_.alpha); }

IndexStats Index::stats() const {
  const auto s = store_->stats();
  return {s.live, s.tombstoned, s.replaceable, s.edges, std::max(s.peak_slots, carried_peak_)};
}

void Index::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  store_->save(out, start());
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::unique_ptr<Index> Index::load(const std::filesystem::path& path, IndexParams params,
                                   EngineMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  NodeId start = kInvalidNode;
  auto store = GraphStore::load(in, start, params.reuse);
  params.dim = store->dim();
  params.capacity = store->capacity();
  params.max_degree = store->max_degree();
  params.metric = store->metric();
  auto index = std::make_unique<Index>(params, mode);
  index->store_ = std::move(store);
  index->start_.store(start, std::memory_order_release);
  return index;
}

}  // namespace cleann
