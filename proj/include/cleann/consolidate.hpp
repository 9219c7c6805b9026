#pragma once

#include <cstddef>
#include <vector>

#include "cleann/graph_store.hpp"
#include "cleann/params.hpp"

namespace cleann {

/// Rebuilds N(v) from its live neighbors plus the live out-neighbors (other
/// than v) of each deleted neighbor, pruning when the result reaches R.
/// Deleted direct neighbors are dropped. Returns false if N(v) held no
/// deleted neighbor and was left untouched.
bool consolidate(GraphStore& store, NodeId v, float alpha);

/// consolidate(v), then H(w) += 1 for every deleted w that was in N(v)
/// beforehand. Returns the nodes whose counter was incremented.
std::vector<NodeId> clean_consolidate(GraphStore& store, NodeId v, float alpha);

/// Global pass of the periodic-consolidation baseline: consolidates every
/// live node, then frees every slot that was tombstoned when the pass began
/// (pinned slots excepted). Locks are taken node by node, so searches may
/// run concurrently. Returns the number of freed slots.
std::size_t global_consolidate_baseline(GraphStore& store, float alpha);

}  // namespace cleann
