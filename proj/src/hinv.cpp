#include "hinet/hinv.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <set>

#include "hinet/dense.hpp"

namespace hinet {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<CutEdge> scan_cut_edges(const TreeNode& left, const TreeNode& right,
                                    const ConductanceMatrix& g) {
  std::vector<CutEdge> cut;
  for (int r = left.begin; r < left.end; ++r)
    for (const auto& [c, v] : g.row(r))
      if (c >= right.begin && c < right.end && v != 0.0) cut.push_back({r, c});
  return cut;  // row-major map order is already (row, col) sorted
}

std::pair<MatrixXd, MatrixXd> decompose_coupling(const TreeNode& left,
                                                 const TreeNode& right,
                                                 const std::vector<CutEdge>& cut,
                                                 const ConductanceMatrix& g) {
  const int k = static_cast<int>(cut.size());
  MatrixXd h1 = MatrixXd::Zero(left.size(), k);
  MatrixXd h2 = MatrixXd::Zero(right.size(), k);
  for (int e = 0; e < k; ++e) {
    h1(cut[e].row - left.begin, e) = 1.0;
    h2(cut[e].col - right.begin, e) = g.at(cut[e].row, cut[e].col);
  }
  return {std::move(h1), std::move(h2)};
}

CouplingFactor compute_coupling_factor(const ApplyOp& apply_left,
                                       const ApplyOp& apply_right,
                                       const MatrixXd& h1, const MatrixXd& h2) {
  CouplingFactor cf;
  const int k = static_cast<int>(h1.cols());
  cf.u_factor.resize(h1.rows(), k);
  cf.v_factor.resize(h2.rows(), k);
  VectorXd col(h1.rows()), out(h1.rows());
  for (int e = 0; e < k; ++e) {
    col = h1.col(e);
    out.resize(h1.rows());
    apply_left(col, out);
    cf.u_factor.col(e) = out;
  }
  VectorXd col2(h2.rows()), out2(h2.rows());
  for (int e = 0; e < k; ++e) {
    col2 = h2.col(e);
    out2.resize(h2.rows());
    apply_right(col2, out2);
    cf.v_factor.col(e) = out2;
  }
  return cf;
}

void HInverse::apply_subtree(int node_id, const double* x, double* y,
                             std::uint64_t& tally) const {
  const TreeNode& n = tree_->nodes[node_id];
  if (n.is_leaf()) {
    Eigen::Map<const VectorXd> xs(x + n.begin, n.size());
    Eigen::Map<VectorXd> ys(y + n.begin, n.size());
    ys.noalias() = leaf_blocks_[node_id] * xs;
    tally += dense::matvec_flops(n.size(), n.size());
    return;
  }
  apply_subtree(n.left, x, y, tally);
  apply_subtree(n.right, x, y, tally);

  const CouplingFactor& cf = couplings_[node_id];
  const auto k = static_cast<std::uint64_t>(cf.rank());
  if (k == 0) return;
  const TreeNode& l = tree_->nodes[n.left];
  const TreeNode& r = tree_->nodes[n.right];
  Eigen::Map<const VectorXd> xl(x + l.begin, l.size());
  Eigen::Map<const VectorXd> xr(x + r.begin, r.size());
  Eigen::Map<VectorXd> yl(y + l.begin, l.size());
  Eigen::Map<VectorXd> yr(y + r.begin, r.size());

  // Cross terms of Eq-style block structure: y_l += M x_r, y_r += M^T x_l
  // with M = -u v^T, evaluated in factored order.
  const VectorXd tv = cf.v_factor.transpose() * xr;
  yl.noalias() -= cf.u_factor * tv;
  const VectorXd tu = cf.u_factor.transpose() * xl;
  yr.noalias() -= cf.v_factor * tu;

  const auto m = static_cast<std::uint64_t>(l.size());
  const auto nn = static_cast<std::uint64_t>(r.size());
  // v^T x_r: k*n mult, k*(n-1) add; fused y_l -= u t: m*k mult, m*k add.
  tally += dense::matvec_flops(k, nn) + m * k + m * k;
  tally += dense::matvec_flops(k, m) + nn * k + nn * k;
}

VectorXd HInverse::apply(const Eigen::Ref<const VectorXd>& x) const {
  if (x.size() != tree_->dimension())
    throw std::invalid_argument("HInverse::apply: dimension mismatch (" +
                                std::to_string(x.size()) + " vs " +
                                std::to_string(tree_->dimension()) + ")");
  VectorXd y(x.size());
  std::uint64_t tally = 0;
  apply_subtree(tree_->root, x.data(), y.data(), tally);
  flops_.apply.fetch_add(tally, std::memory_order_relaxed);
  return y;
}

MatrixXd HInverse::materialize() const {
  const int n = tree_->dimension();
  if (n > 5000)
    throw std::invalid_argument("HInverse::materialize: dimension " +
                                std::to_string(n) + " exceeds the 5000 guard");
  MatrixXd out = MatrixXd::Zero(n, n);
  for (const TreeNode& node : tree_->nodes) {
    if (node.is_leaf()) {
      out.block(node.begin, node.begin, node.size(), node.size()) =
          leaf_blocks_[node.id];
      continue;
    }
    const CouplingFactor& cf = couplings_[node.id];
    const TreeNode& l = tree_->nodes[node.left];
    const TreeNode& r = tree_->nodes[node.right];
    if (cf.rank() == 0) continue;
    const MatrixXd m = -cf.u_factor * cf.v_factor.transpose();
    out.block(l.begin, r.begin, l.size(), r.size()) = m;
    out.block(r.begin, l.begin, r.size(), l.size()) = m.transpose();
  }
  return out;
}

bool HInverse::identical_to(const HInverse& other) const {
  auto same = [](const MatrixXd& a, const MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    return std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
  };
  if (leaf_blocks_.size() != other.leaf_blocks_.size()) return false;
  for (size_t i = 0; i < leaf_blocks_.size(); ++i) {
    if (!same(leaf_blocks_[i], other.leaf_blocks_[i])) return false;
    if (!same(couplings_[i].u_factor, other.couplings_[i].u_factor)) return false;
    if (!same(couplings_[i].v_factor, other.couplings_[i].v_factor)) return false;
    const auto& ca = couplings_[i].cut;
    const auto& cb = other.couplings_[i].cut;
    if (ca.size() != cb.size()) return false;
    for (size_t e = 0; e < ca.size(); ++e)
      if (ca[e].row != cb[e].row || ca[e].col != cb[e].col) return false;
  }
  return true;
}

namespace {

/// Leaf re-inversion shared by construction and modify: dense LU with partial
/// pivoting, column solves against the identity, then exact symmetrization.
MatrixXd invert_leaf(const ConductanceMatrix& g, const TreeNode& leaf,
                     std::uint64_t& tally) {
  MatrixXd block = g.dense_block(leaf.begin, leaf.end);
  try {
    const dense::LuFactors f = dense::lu_factor(std::move(block));
    tally += f.flops;
    MatrixXd inv = dense::lu_invert(f, tally);
    MatrixXd sym = 0.5 * (inv + inv.transpose());
    tally += 2 * static_cast<std::uint64_t>(leaf.size()) * leaf.size();
    return sym;
  } catch (const dense::SingularMatrixError& e) {
    throw dense::SingularMatrixError(
        "leaf node " + std::to_string(leaf.id) + " (matrix rows " +
            std::to_string(leaf.begin) + ".." + std::to_string(leaf.end) +
            ") is singular: " + e.what(),
        e.condition_estimate);
  }
}

}  // namespace

void HInverse::recompute_factor(const ConductanceMatrix& g, int node_id,
                                std::uint64_t& tally) {
  const PartitionTree& tree = *tree_;
  const TreeNode& node = tree.nodes[node_id];
  const TreeNode& l = tree.nodes[node.left];
  const TreeNode& r = tree.nodes[node.right];

  CouplingFactor cf;
  cf.cut = scan_cut_edges(l, r, g);
  const int k = static_cast<int>(cf.cut.size());
  auto [h1, h2] = decompose_coupling(l, r, cf.cut, g);

  cf.u_factor.resize(l.size(), k);
  cf.v_factor.resize(r.size(), k);
  VectorXd in(tree.dimension()), out(tree.dimension());
  for (int e = 0; e < k; ++e) {
    in.setZero();
    in.segment(l.begin, l.size()) = h1.col(e);
    apply_subtree(node.left, in.data(), out.data(), tally);
    cf.u_factor.col(e) = out.segment(l.begin, l.size());
  }
  for (int e = 0; e < k; ++e) {
    in.setZero();
    in.segment(r.begin, r.size()) = h2.col(e);
    apply_subtree(node.right, in.data(), out.data(), tally);
    cf.v_factor.col(e) = out.segment(r.begin, r.size());
  }
  couplings_[node_id] = std::move(cf);
}

HInverse hierarchical_ginv(const ConductanceMatrix& g, const PartitionTree& tree) {
  if (g.dim() != tree.dimension())
    throw std::invalid_argument("hierarchical_ginv: matrix/tree dimension mismatch");

  HInverse h;
  h.tree_ = &tree;
  h.leaf_blocks_.resize(tree.nodes.size());
  h.couplings_.resize(tree.nodes.size());

  std::uint64_t tally = 0;
  // Post-order over the node array: children were appended after their
  // parent, so a reverse sweep visits children first.
  for (auto it = tree.nodes.rbegin(); it != tree.nodes.rend(); ++it) {
    const TreeNode& node = *it;
    if (node.is_leaf()) {
      h.leaf_blocks_[node.id] = invert_leaf(g, node, tally);
    } else {
      h.recompute_factor(g, node.id, tally);
    }
  }
  h.flops_.construction += tally;
  return h;
}

ModifyStats modify(HInverse& hinv, const ConductanceMatrix& g_new,
                   const std::vector<std::pair<int, int>>& changed_entries,
                   bool faithful_update) {
  ModifyStats stats;
  if (changed_entries.empty()) return stats;

  const PartitionTree& tree = hinv.tree();
  const int phases = tree.phases;
  auto leaf_of_index = [&](int idx) {
    return tree.leaf_of_bus[tree.bus_order[idx / phases]];
  };

  std::set<int> leaves;
  for (const auto& [r, c] : changed_entries) {
    if (r < 0 || r >= tree.dimension() || c < 0 || c >= tree.dimension())
      throw std::invalid_argument("modify: changed entry out of range");
    leaves.insert(leaf_of_index(r));
    leaves.insert(leaf_of_index(c));
  }
  if (leaves.size() > 2)
    throw std::invalid_argument(
        "modify: changed entries span more than two leaves (" +
        std::to_string(leaves.size()) + ")");

  std::uint64_t tally = 0;
  for (int leaf : leaves) {
    hinv.leaf_blocks_[leaf] = invert_leaf(g_new, tree.nodes[leaf], tally);
    ++stats.leaves_reinverted;
  }

  const int leaf_a = *leaves.begin();
  const int leaf_b = *leaves.rbegin();
  const int k = lca(tree, leaf_a, leaf_b);
  stats.lca_node = k;

  if (!tree.nodes[k].is_leaf()) {
    std::vector<int> to_update;
    if (faithful_update) {
      // Literal recursion: every internal node under the LCA, children first.
      std::vector<int> stack{k}, order;
      while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        if (tree.nodes[id].is_leaf()) continue;
        order.push_back(id);
        stack.push_back(tree.nodes[id].left);
        stack.push_back(tree.nodes[id].right);
      }
      to_update.assign(order.rbegin(), order.rend());
    } else {
      // Pruned: only the internal nodes on the two leaf-to-LCA paths carry
      // changed child operators or changed cut edges; subtrees holding
      // neither fault bus are provably unchanged and are skipped.
      std::set<int> path;
      for (int leaf : leaves)
        for (int v = tree.nodes[leaf].parent; v != -1 && tree.nodes[v].depth >= tree.nodes[k].depth;
             v = tree.nodes[v].parent)
          path.insert(v);
      path.insert(k);
      to_update.assign(path.begin(), path.end());
      std::sort(to_update.begin(), to_update.end(), [&](int a, int b) {
        return tree.nodes[a].depth > tree.nodes[b].depth;
      });
    }
    for (int id : to_update) {
      hinv.recompute_factor(g_new, id, tally);
      ++stats.factors_recomputed;
    }
  }

  hinv.flops_.modify += tally;
  stats.flops = tally;
  return stats;
}

std::uint64_t tree_hash(const PartitionTree& tree) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint64_t>(tree.d_th));
  mix(static_cast<std::uint64_t>(tree.phases));
  for (const TreeNode& n : tree.nodes) {
    mix(static_cast<std::uint64_t>(n.begin));
    mix(static_cast<std::uint64_t>(n.end));
    mix(static_cast<std::uint64_t>(n.left + 1));
    mix(static_cast<std::uint64_t>(n.right + 1));
  }
  for (int p : tree.perm) mix(static_cast<std::uint64_t>(p));
  return h;
}

namespace {

constexpr std::uint64_t kDumpMagic = 0x48494e5644554d50ull;  // "HINVDUMP"

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint64_t read_u64(std::ifstream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
void write_matrix(std::ofstream& out, const MatrixXd& m) {
  write_u64(out, static_cast<std::uint64_t>(m.rows()));
  write_u64(out, static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
}
MatrixXd read_matrix(std::ifstream& in) {
  const auto rows = static_cast<Eigen::Index>(read_u64(in));
  const auto cols = static_cast<Eigen::Index>(read_u64(in));
  MatrixXd m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  return m;
}

}  // namespace

void save_hinverse(const HInverse& hinv, const std::string& path) {
  static_assert(std::endian::native == std::endian::little,
                "dump format is little-endian");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_hinverse: cannot write '" + path + "'");
  write_u64(out, kDumpMagic);
  write_u64(out, tree_hash(*hinv.tree_));
  write_u64(out, static_cast<std::uint64_t>(hinv.tree_->nodes.size()));
  for (const TreeNode& n : hinv.tree_->nodes) {
    if (n.is_leaf()) {
      write_matrix(out, hinv.leaf_blocks_[n.id]);
    } else {
      const CouplingFactor& cf = hinv.couplings_[n.id];
      write_u64(out, static_cast<std::uint64_t>(cf.cut.size()));
      for (const CutEdge& e : cf.cut) {
        write_u64(out, static_cast<std::uint64_t>(e.row));
        write_u64(out, static_cast<std::uint64_t>(e.col));
      }
      write_matrix(out, cf.u_factor);
      write_matrix(out, cf.v_factor);
    }
  }
}

HInverse load_hinverse(const std::string& path, const PartitionTree& tree) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_hinverse: cannot open '" + path + "'");
  if (read_u64(in) != kDumpMagic)
    throw std::runtime_error("load_hinverse: bad magic in '" + path + "'");
  if (read_u64(in) != tree_hash(tree))
    throw std::runtime_error("load_hinverse: dump was built on a different tree");
  const auto count = read_u64(in);
  if (count != tree.nodes.size())
    throw std::runtime_error("load_hinverse: node count mismatch");

  HInverse h;
  h.tree_ = &tree;
  h.leaf_blocks_.resize(tree.nodes.size());
  h.couplings_.resize(tree.nodes.size());
  for (const TreeNode& n : tree.nodes) {
    if (n.is_leaf()) {
      h.leaf_blocks_[n.id] = read_matrix(in);
    } else {
      CouplingFactor cf;
      const auto k = read_u64(in);
      cf.cut.resize(k);
      for (auto& e : cf.cut) {
        e.row = static_cast<int>(read_u64(in));
        e.col = static_cast<int>(read_u64(in));
      }
      cf.u_factor = read_matrix(in);
      cf.v_factor = read_matrix(in);
      h.couplings_[n.id] = std::move(cf);
    }
  }
  if (!in) throw std::runtime_error("load_hinverse: truncated dump '" + path + "'");
  return h;
}

}  // namespace hinet
