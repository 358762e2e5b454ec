#include "hinet/partition.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <set>

#include "json.hpp"

namespace hinet {

namespace {

/// BFS order over `vertices` from `start`; `level[v]` gets the hop distance.
std::vector<int> bfs_order(const std::vector<int>& vertices,
                           const std::vector<std::vector<int>>& adj, int start,
                           std::map<int, int>& level) {
  std::set<int> in_set(vertices.begin(), vertices.end());
  std::vector<int> order;
  std::queue<int> q;
  level.clear();
  level[start] = 0;
  q.push(start);
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    order.push_back(v);
    for (int w : adj[v]) {
      if (!in_set.count(w) || level.count(w)) continue;
      level[w] = level[v] + 1;
      q.push(w);
    }
  }
  return order;
}

int pseudo_peripheral(const std::vector<int>& vertices,
                      const std::vector<std::vector<int>>& adj) {
  std::map<int, int> level;
  auto order = bfs_order(vertices, adj, vertices.front(), level);
  // Farthest vertex from an arbitrary start; ties resolve to the lowest id.
  int far = order.front();
  for (int v : order)
    if (level[v] > level[far] || (level[v] == level[far] && v < far)) far = v;
  return far;
}

std::vector<std::vector<int>> components(const std::vector<int>& vertices,
                                         const std::vector<std::vector<int>>& adj) {
  std::set<int> in_set(vertices.begin(), vertices.end());
  std::set<int> seen;
  std::vector<std::vector<int>> comps;
  for (int s : vertices) {
    if (seen.count(s)) continue;
    std::vector<int> comp;
    std::queue<int> q;
    q.push(s);
    seen.insert(s);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      comp.push_back(v);
      for (int w : adj[v])
        if (in_set.count(w) && !seen.count(w)) {
          seen.insert(w);
          q.push(w);
        }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

int cut_size(const std::set<int>& left, const std::vector<int>& vertices,
             const std::vector<std::vector<int>>& adj) {
  std::set<int> in_set(vertices.begin(), vertices.end());
  int cut = 0;
  for (int v : vertices) {
    if (!left.count(v)) continue;
    for (int w : adj[v])
      if (in_set.count(w) && !left.count(w)) ++cut;
  }
  return cut;
}

/// Fiduccia-Mattheyses-style refinement. Each pass greedily moves the best
/// unlocked vertex (negative gains included, so basins can be crossed),
/// keeping the running size inside the +-25% window, then keeps the best
/// prefix that restores the exact ceil(n/2) split. The cut never increases
/// across passes and the result stays balanced.
void fm_refine(std::set<int>& left, const std::vector<int>& vertices,
               const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(vertices.size());
  const int target = (n + 1) / 2;
  const int lo = static_cast<int>(std::ceil(target - n / 4.0));
  const int hi = static_cast<int>(std::floor(target + n / 4.0));

  std::map<int, int> local;  // vertex id -> dense index
  for (int i = 0; i < n; ++i) local[vertices[i]] = i;
  std::vector<std::vector<int>> nb(n);
  for (int i = 0; i < n; ++i)
    for (int w : adj[vertices[i]]) {
      const auto it = local.find(w);
      if (it != local.end()) nb[i].push_back(it->second);
    }

  std::vector<char> side(n);  // 0 = left, 1 = right
  for (int i = 0; i < n; ++i) side[i] = left.count(vertices[i]) ? 0 : 1;

  for (int pass = 0; pass < 16; ++pass) {
    std::vector<int> ext(n, 0), internal(n, 0);
    int cut = 0, nl = 0;
    for (int i = 0; i < n; ++i) {
      if (side[i] == 0) ++nl;
      for (int j : nb[i]) {
        if (side[j] == side[i])
          ++internal[i];
        else {
          ++ext[i];
          if (j > i) ++cut;
        }
      }
    }

    const int cut0 = cut;
    std::vector<char> locked(n, 0);
    std::vector<int> moved;
    int best_cut = cut0;
    int best_prefix = 0;

    for (int step = 0; step < n; ++step) {
      int pick = -1, pick_gain = 0;
      for (int i = 0; i < n; ++i) {
        if (locked[i]) continue;
        if (side[i] == 0 ? nl - 1 < lo : nl + 1 > hi) continue;
        const int gain = ext[i] - internal[i];
        if (pick < 0 || gain > pick_gain) {
          pick = i;
          pick_gain = gain;
        }
      }
      if (pick < 0) break;

      side[pick] ^= 1;
      locked[pick] = 1;
      cut -= pick_gain;
      nl += side[pick] ? -1 : 1;
      std::swap(ext[pick], internal[pick]);
      for (int j : nb[pick]) {
        if (side[j] == side[pick]) {
          --ext[j];
          ++internal[j];
        } else {
          --internal[j];
          ++ext[j];
        }
      }
      moved.push_back(pick);
      // A half split is acceptable on either side for odd n.
      if ((nl == target || nl == n - target) && cut < best_cut) {
        best_cut = cut;
        best_prefix = static_cast<int>(moved.size());
      }
    }

    // Undo everything past the best balanced prefix.
    for (int m = static_cast<int>(moved.size()) - 1; m >= best_prefix; --m)
      side[moved[m]] ^= 1;
    if (best_cut >= cut0) break;
  }

  left.clear();
  for (int i = 0; i < n; ++i)
    if (side[i] == 0) left.insert(vertices[i]);
}

}  // namespace

namespace {

/// Greedy graph growing from `start`: absorb the frontier vertex with the
/// highest internal-minus-external connectivity. Eats tightly meshed areas
/// whole before crossing sparse tie edges.
std::set<int> grow_split(const std::vector<int>& vertices,
                         const std::vector<std::vector<int>>& adj, int start,
                         int target) {
  std::set<int> in_set(vertices.begin(), vertices.end());
  std::set<int> left{start};
  while (static_cast<int>(left.size()) < target) {
    int pick = -1, pick_gain = INT_MIN;
    bool pick_frontier = false;
    for (int v : vertices) {
      if (left.count(v)) continue;
      int in = 0, out = 0;
      for (int w : adj[v]) {
        if (!in_set.count(w)) continue;
        (left.count(w) ? in : out)++;
      }
      const bool frontier = in > 0;
      const int gain = in - out;
      if (pick < 0 || (frontier && !pick_frontier) ||
          (frontier == pick_frontier && gain > pick_gain)) {
        pick = v;
        pick_gain = gain;
        pick_frontier = frontier;
      }
    }
    left.insert(pick);
  }
  return left;
}

}  // namespace

BipartitionResult bipartition(const std::vector<int>& vertices,
                              const std::vector<std::vector<int>>& adjacency) {
  const int n = static_cast<int>(vertices.size());
  if (n < 2) throw NetworkError("bipartition: need at least 2 vertices");

  const int target = (n + 1) / 2;
  std::set<int> left;

  auto comps = components(vertices, adjacency);
  if (comps.size() == 1) {
    std::map<int, int> level;
    const int start = pseudo_peripheral(vertices, adjacency);
    auto order = bfs_order(vertices, adjacency, start, level);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return level[a] != level[b] ? level[a] < level[b] : a < b;
    });

    // Candidate initial splits: the BFS level-set prefix plus greedy graph
    // growing from a handful of spread-out seeds. Refine each and keep the
    // smallest cut; single-seed growth can land in a bad basin that the
    // move-based refinement cannot leave.
    std::vector<std::set<int>> candidates;
    candidates.emplace_back(order.begin(), order.begin() + target);
    for (int pos : {0, n / 4, n / 2, 3 * n / 4, n - 1})
      candidates.push_back(grow_split(vertices, adjacency, order[pos], target));

    int best_cut = INT_MAX;
    for (std::set<int>& cand : candidates) {
      fm_refine(cand, vertices, adjacency);
      const int cut = cut_size(cand, vertices, adjacency);
      if (cut < best_cut) {
        best_cut = cut;
        left = cand;
      }
    }
  } else {
    // Whole components go to the lighter side, largest first.
    std::stable_sort(comps.begin(), comps.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });
    std::vector<int> right_v;
    for (const auto& comp : comps) {
      if (left.size() <= right_v.size())
        left.insert(comp.begin(), comp.end());
      else
        right_v.insert(right_v.end(), comp.begin(), comp.end());
    }
    // If whole-component packing cannot reach the balance window, move
    // trailing vertices of the heavier side across.
    const int lo = static_cast<int>(std::ceil(target - n / 4.0));
    const int hi = static_cast<int>(std::floor(target + n / 4.0));
    while (static_cast<int>(left.size()) > hi) {
      const int v = *left.rbegin();
      left.erase(v);
    }
    if (static_cast<int>(left.size()) < lo) {
      std::set<int> right_set(vertices.begin(), vertices.end());
      for (int v : left) right_set.erase(v);
      while (static_cast<int>(left.size()) < lo) {
        const int v = *right_set.begin();
        right_set.erase(v);
        left.insert(v);
      }
      fm_refine(left, vertices, adjacency);
    }
  }

  BipartitionResult res;
  std::set<int> in_set(vertices.begin(), vertices.end());
  for (int v : vertices)
    (left.count(v) ? res.left : res.right).push_back(v);
  std::sort(res.left.begin(), res.left.end());
  std::sort(res.right.begin(), res.right.end());
  for (int v : res.left)
    for (int w : adjacency[v])
      if (in_set.count(w) && !left.count(w)) res.cut.emplace_back(v, w);
  std::sort(res.cut.begin(), res.cut.end());
  return res;
}

namespace {

struct TreeBuilder {
  const NetworkModel& net;
  int d_th;
  PartitionTree tree;
  std::vector<std::vector<int>> adj;
  int next_bus_pos = 0;

  explicit TreeBuilder(const NetworkModel& n, int dth) : net(n), d_th(dth) {
    adj = bus_adjacency(net);
    tree.d_th = dth;
    tree.phases = net.phases();
    tree.leaf_of_bus.assign(net.n_buses(), -1);
    tree.bus_order.resize(net.n_buses());
  }

  int build(std::vector<int> buses, int parent, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    TreeNode& self = tree.nodes[id];
    self.id = id;
    self.parent = parent;
    self.depth = depth;
    self.bus_begin = next_bus_pos;

    if (static_cast<int>(buses.size()) <= d_th) {
      std::sort(buses.begin(), buses.end());
      for (int b : buses) {
        tree.leaf_of_bus[b] = id;
        tree.bus_order[next_bus_pos++] = b;
      }
      tree.nodes[id].bus_end = next_bus_pos;
      return id;
    }

    auto split = bipartition(buses, adj);
    const int l = build(std::move(split.left), id, depth + 1);
    const int r = build(std::move(split.right), id, depth + 1);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    tree.nodes[id].bus_end = next_bus_pos;
    return id;
  }
};

}  // namespace

PartitionTree build_partition_tree(const NetworkModel& net, int d_th) {
  if (d_th < 1) throw NetworkError("build_partition_tree: d_th must be >= 1");

  TreeBuilder builder(net, d_th);
  std::vector<int> all(net.n_buses());
  std::iota(all.begin(), all.end(), 0);
  builder.tree.root = builder.build(std::move(all), -1, 0);
  PartitionTree tree = std::move(builder.tree);

  const int phases = net.phases();
  tree.perm.resize(net.dimension());
  tree.iperm.resize(net.dimension());
  for (int pos = 0; pos < net.n_buses(); ++pos) {
    const int bus = tree.bus_order[pos];
    for (int p = 0; p < phases; ++p) {
      tree.perm[net.node_index(bus, p)] = pos * phases + p;
      tree.iperm[pos * phases + p] = net.node_index(bus, p);
    }
  }
  for (TreeNode& n : tree.nodes) {
    n.begin = n.bus_begin * phases;
    n.end = n.bus_end * phases;
  }

  // Cut bookkeeping: each non-ground branch lands in the cut list of the one
  // node where its endpoints separate, keyed by permuted matrix indices.
  // Parallel branches between the same pair merge into one edge.
  std::vector<std::set<std::pair<int, int>>> cut_sets(tree.nodes.size());
  for (const Branch& b : net.branches) {
    if (b.to == kGround) continue;
    int la = tree.leaf_of_bus[b.from];
    int lb = tree.leaf_of_bus[b.to];
    if (la == lb) continue;
    const int k = lca(tree, la, lb);
    const TreeNode& node = tree.nodes[k];
    for (int p = 0; p < phases; ++p) {
      int ra = tree.perm[net.node_index(b.from, p)];
      int rb = tree.perm[net.node_index(b.to, p)];
      if (ra > rb) std::swap(ra, rb);
      // ra falls in the left child's range, rb in the right child's.
      (void)node;
      cut_sets[k].insert({ra, rb});
    }
  }
  for (size_t i = 0; i < tree.nodes.size(); ++i)
    for (const auto& [r, c] : cut_sets[i]) tree.nodes[i].cut_edges.push_back({r, c});

  return tree;
}

std::vector<int> PartitionTree::leaves() const {
  std::vector<int> out;
  for (const TreeNode& n : nodes)
    if (n.is_leaf()) out.push_back(n.id);
  return out;
}

int lca(const PartitionTree& tree, int leaf_a, int leaf_b) {
  int a = leaf_a, b = leaf_b;
  while (a != b) {
    if (tree.nodes[a].depth >= tree.nodes[b].depth)
      a = tree.nodes[a].parent;
    else
      b = tree.nodes[b].parent;
  }
  return a;
}

int locate_leaf(const PartitionTree& tree, int bus) {
  if (bus < 0 || bus >= static_cast<int>(tree.leaf_of_bus.size()))
    throw NetworkError("locate_leaf: unknown bus " + std::to_string(bus));
  return tree.leaf_of_bus[bus];
}

std::string PartitionTree::to_json_string() const {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const TreeNode& n : nodes)
    j["nodes"].push_back({{"id", n.id},
                          {"range", {n.begin, n.end}},
                          {"left", n.left},
                          {"right", n.right},
                          {"cut_edge_count", n.cut_edges.size()}});
  j["permutation"] = perm;
  return j.dump(2) + "\n";
}

}  // namespace hinet
