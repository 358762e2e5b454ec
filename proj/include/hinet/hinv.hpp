#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "hinet/conductance.hpp"
#include "hinet/flops.hpp"
#include "hinet/partition.hpp"

namespace hinet {

/// Rank-k factors of an internal node's off-diagonal inverse block. The
/// implied block is M = -u_factor * v_factor^T, with u_factor = G_l^{-1} h1
/// and v_factor = G_r^{-1} h2. The conductance sits entirely on h2, so h1
/// carries unit columns (h1 h2^T reproduces the off-diagonal block of G
/// exactly). k == 0 means the children are decoupled and M is zero.
struct CouplingFactor {
  Eigen::MatrixXd u_factor;
  Eigen::MatrixXd v_factor;
  /// Cut edges this factor was built from, global permuted (row, col).
  std::vector<CutEdge> cut;

  int rank() const { return static_cast<int>(u_factor.cols()); }
};

struct ModifyStats {
  std::uint64_t flops = 0;
  int lca_node = -1;
  int leaves_reinverted = 0;
  int factors_recomputed = 0;
};

/// Tree-aligned approximate inverse: dense symmetric blocks at the leaves,
/// one CouplingFactor per internal node. The (2,1) block of every internal
/// node is implicitly the transpose of its (1,2) block.
class HInverse {
 public:
  HInverse() = default;

  const PartitionTree& tree() const { return *tree_; }

  /// y = G~^{-1} x in tree (permuted) order. Read-only and safe to call
  /// concurrently; the FLOP tally is accumulated atomically.
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Explicit dense assembly, exactly symmetric. Test oracle only; guarded
  /// to dimensions <= 5000.
  Eigen::MatrixXd materialize() const;

  FlopSnapshot flops() const { return flops_.snapshot(); }

  const Eigen::MatrixXd& leaf_block(int node_id) const { return leaf_blocks_[node_id]; }
  const CouplingFactor& coupling(int node_id) const { return couplings_[node_id]; }

  /// Bitwise equality of all blocks and factors (tree identity assumed).
  bool identical_to(const HInverse& other) const;

  /// Applies the operator restricted to `node_id`'s subtree; x/y address the
  /// full permuted vector, tally goes to the given counter.
  void apply_subtree(int node_id, const double* x, double* y,
                     std::uint64_t& tally) const;

 private:
  friend HInverse hierarchical_ginv(const ConductanceMatrix&, const PartitionTree&);
  friend ModifyStats modify(HInverse&, const ConductanceMatrix&,
                            const std::vector<std::pair<int, int>>&, bool);
  friend void save_hinverse(const HInverse&, const std::string&);
  friend HInverse load_hinverse(const std::string&, const PartitionTree&);

  /// Rebuilds one internal node's factor from the current child operators
  /// and the matrix as it stands now (cut edges re-scanned).
  void recompute_factor(const ConductanceMatrix& g, int node_id,
                        std::uint64_t& tally);

  const PartitionTree* tree_ = nullptr;
  std::vector<Eigen::MatrixXd> leaf_blocks_;   // by node id, empty if internal
  std::vector<CouplingFactor> couplings_;      // by node id, empty if leaf
  mutable FlopCounters flops_;
};

/// Cut-edge factorization H = h1 h2^T for the off-diagonal block between two
/// sibling ranges: column e of h1 is the unit vector at the edge's row,
/// column e of h2 carries the stored stamp G(row, col) = -g_e at the edge's
/// column. Both are in child-local coordinates.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> decompose_coupling(
    const TreeNode& left, const TreeNode& right, const std::vector<CutEdge>& cut,
    const ConductanceMatrix& g);

/// Reads the current cut edges between two sibling ranges off the matrix
/// sparsity (exact zeros are not edges), sorted by (row, col).
std::vector<CutEdge> scan_cut_edges(const TreeNode& left, const TreeNode& right,
                                    const ConductanceMatrix& g);

/// Inverse operators act column-by-column; cost is whatever the operators
/// tally, the copies are free.
using ApplyOp = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;
CouplingFactor compute_coupling_factor(const ApplyOp& apply_left,
                                       const ApplyOp& apply_right,
                                       const Eigen::MatrixXd& h1,
                                       const Eigen::MatrixXd& h2);

/// Bottom-up construction: leaves are inverted directly (dense LU with
/// partial pivoting, column solves, then symmetrized), every internal node
/// gets its factor from the children's hierarchical operators. No global
/// inversion happens anywhere. `g` must already be in tree order.
HInverse hierarchical_ginv(const ConductanceMatrix& g, const PartitionTree& tree);

/// Local update after a single-branch change: re-inverts the (at most two)
/// leaves holding changed entries, then recomputes coupling factors bottom-up
/// along the leaf-to-LCA paths; everything outside the LCA's subtree is left
/// untouched. With `faithful_update` the recursion instead revisits every
/// internal node under the LCA; both orders produce bit-identical state.
ModifyStats modify(HInverse& hinv, const ConductanceMatrix& g_new,
                   const std::vector<std::pair<int, int>>& changed_entries,
                   bool faithful_update = false);

/// Regression fixture dump: little-endian doubles plus a tree hash so a dump
/// can only be loaded against the tree it was built on.
void save_hinverse(const HInverse& hinv, const std::string& path);
HInverse load_hinverse(const std::string& path, const PartitionTree& tree);

std::uint64_t tree_hash(const PartitionTree& tree);

}  // namespace hinet
