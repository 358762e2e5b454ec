#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hinet/grid_model.hpp"

namespace hinet {

struct BipartitionResult {
  std::vector<int> left;
  std::vector<int> right;
  /// Crossing edges as (left vertex, right vertex), sorted.
  std::vector<std::pair<int, int>> cut;
};

/// Deterministic bisection: BFS level split from a pseudo-peripheral vertex,
/// then boundary refinement by vertex swaps (cut never increases, sizes
/// preserved). Disconnected inputs get whole components assigned to sides
/// first; only the largest is split if the balance window requires it.
BipartitionResult bipartition(const std::vector<int>& vertices,
                              const std::vector<std::vector<int>>& adjacency);

/// Matrix-index cut edge of an internal node: row in the left child's range,
/// col in the right child's range (permuted coordinates, parallels merged).
struct CutEdge {
  int row = 0;
  int col = 0;
};

struct TreeNode {
  int id = -1;
  int parent = -1;
  int left = -1;
  int right = -1;
  int depth = 0;
  /// Contiguous matrix-index range [begin, end) after permutation.
  int begin = 0;
  int end = 0;
  /// Bus range [bus_begin, bus_end) in leaf order.
  int bus_begin = 0;
  int bus_end = 0;
  std::vector<CutEdge> cut_edges;

  bool is_leaf() const { return left < 0; }
  int size() const { return end - begin; }
  int bus_count() const { return bus_end - bus_begin; }
};

/// Binary partition tree over the bus graph. All phases of a bus stay in one
/// leaf; every node's matrix indices are contiguous under `perm`.
struct PartitionTree {
  std::vector<TreeNode> nodes;
  int root = 0;
  int d_th = 1;
  int phases = 1;
  /// perm[natural index] = permuted position; iperm is the inverse.
  std::vector<int> perm;
  std::vector<int> iperm;
  std::vector<int> leaf_of_bus;
  /// Bus ids in leaf order (bus_order[permuted bus position] = bus id).
  std::vector<int> bus_order;

  int dimension() const { return static_cast<int>(perm.size()); }
  std::vector<int> leaves() const;
  std::string to_json_string() const;
};

/// Recursively bipartitions until every leaf holds <= d_th buses and emits
/// the permutation that makes every node's indices contiguous.
PartitionTree build_partition_tree(const NetworkModel& net, int d_th);

/// Deepest node whose range contains both leaves.
int lca(const PartitionTree& tree, int leaf_a, int leaf_b);

/// Leaf holding `bus`; throws NetworkError for unknown ids.
int locate_leaf(const PartitionTree& tree, int bus);

}  // namespace hinet
