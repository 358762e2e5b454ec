#include "doctest.h"

#include <Eigen/Dense>
#include <cstring>
#include <filesystem>
#include <atomic>
#include <memory>
#include <thread>

#include "hinet/dense.hpp"
#include "hinet/hinv.hpp"
#include "hinet/synth.hpp"
#include "test_support.hpp"

using namespace hinet;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

/// The tree lives on the heap: HInverse keeps a reference to it, so its
/// address must survive moves of the fixture.
struct Built {
  NetworkModel net;
  std::unique_ptr<PartitionTree> tree;
  ConductanceMatrix g;  // permuted
  HInverse hinv;
};

Built build(const NetworkModel& net, int d_th) {
  Built b;
  b.net = net;
  b.tree = std::make_unique<PartitionTree>(build_partition_tree(b.net, d_th));
  b.g = assemble_conductance(b.net, b.net.delta_t).permuted(b.tree->perm);
  b.hinv = hierarchical_ginv(b.g, *b.tree);
  return b;
}

double rel_err(const MatrixXd& a, const MatrixXd& b) {
  return (a - b).norm() / b.norm();
}

bool bits_equal(const MatrixXd& a, const MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

/// Changed-entry list for adding `delta_g` between permuted rows (b < 0 =
/// ground) of a permuted matrix; mirrors what a fault transition produces.
std::vector<std::pair<int, int>> stamp_delta(ConductanceMatrix& g, int a, int b,
                                             double delta_g) {
  g.stamp(a, b, delta_g);
  std::vector<std::pair<int, int>> changed{{a, a}};
  if (b >= 0) {
    changed.push_back({b, b});
    changed.push_back({std::min(a, b), std::max(a, b)});
  }
  return changed;
}

}  // namespace

TEST_CASE("decompose_coupling reproduces the off-diagonal block exactly") {
  SUBCASE("no cut edges give empty factors") {
    const Built b = build(testsup::decoupled_network(), 2);
    const TreeNode& root = b.tree->nodes[b.tree->root];
    REQUIRE_FALSE(root.is_leaf());
    const auto cut =
        scan_cut_edges(b.tree->nodes[root.left], b.tree->nodes[root.right], b.g);
    CHECK(cut.empty());
    const auto [h1, h2] = decompose_coupling(b.tree->nodes[root.left],
                                             b.tree->nodes[root.right], cut, b.g);
    CHECK(h1.cols() == 0);
    CHECK(h2.cols() == 0);
  }
  SUBCASE("single edge of conductance 1: h1=[1], h2=[-1]") {
    const Built b = build(testsup::two_bus_network(), 1);
    const TreeNode& root = b.tree->nodes[b.tree->root];
    const auto cut =
        scan_cut_edges(b.tree->nodes[root.left], b.tree->nodes[root.right], b.g);
    REQUIRE(cut.size() == 1);
    const auto [h1, h2] = decompose_coupling(b.tree->nodes[root.left],
                                             b.tree->nodes[root.right], cut, b.g);
    CHECK(h1(0, 0) == 1.0);
    CHECK(h2(0, 0) == -1.0);
    CHECK((h1 * h2.transpose())(0, 0) == -1.0);
  }
  SUBCASE("random 20-bus network: h1 h2^T equals the extracted block") {
    const Built b = build(random_test_network(33, 20), 10);
    const TreeNode& root = b.tree->nodes[b.tree->root];
    const TreeNode& l = b.tree->nodes[root.left];
    const TreeNode& r = b.tree->nodes[root.right];
    const auto cut = scan_cut_edges(l, r, b.g);
    const auto [h1, h2] = decompose_coupling(l, r, cut, b.g);
    const MatrixXd h = h1 * h2.transpose();
    const MatrixXd dense = b.g.dense();
    const MatrixXd block = dense.block(l.begin, r.begin, l.size(), r.size());
    CHECK((h - block).norm() == 0.0);
  }
}

TEST_CASE("compute_coupling_factor on 1x1 blocks matches the hand value") {
  // G1 = [2], G2 = [2], H = [-1]  =>  M = -(G1^-1 H G2^-1) = 0.25
  MatrixXd h1(1, 1), h2(1, 1);
  h1 << 1.0;
  h2 << -1.0;
  auto half = [](const VectorXd& x, VectorXd& y) { y = 0.5 * x; };
  const CouplingFactor cf = compute_coupling_factor(half, half, h1, h2);
  CHECK(cf.u_factor(0, 0) == 0.5);
  CHECK(cf.v_factor(0, 0) == -0.5);
  CHECK((-cf.u_factor * cf.v_factor.transpose())(0, 0) == 0.25);
}

TEST_CASE("two-bus coupled example materializes to the known approximation") {
  const Built b = build(testsup::two_bus_network(), 1);
  const MatrixXd m = b.hinv.materialize();
  MatrixXd expected(2, 2);
  expected << 0.5, 0.25, 0.25, 0.5;
  CHECK((m - expected).norm() <= 1e-15);
  // The exact inverse is [[2/3,1/3],[1/3,2/3]]; the gap is the method's
  // one-level approximation error, not a bug.
  MatrixXd exact(2, 2);
  exact << 2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0;
  CHECK(rel_err(m, exact) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("single leaf is the exact dense inverse") {
  const Built b = build(random_test_network(8, 12), 12);
  CHECK(b.tree->nodes.size() == 1);
  const MatrixXd m = b.hinv.materialize();
  const MatrixXd prod = m * b.g.dense();
  CHECK((prod - MatrixXd::Identity(12, 12)).norm() <= 1e-12);
}

TEST_CASE("block-diagonal input is inverted exactly through the hierarchy") {
  const Built b = build(testsup::decoupled_network(), 2);
  const MatrixXd m = b.hinv.materialize();
  const MatrixXd exact = b.g.dense().inverse();
  CHECK(rel_err(m, exact) <= 1e-12);
  for (const TreeNode& n : b.tree->nodes)
    if (!n.is_leaf()) CHECK(b.hinv.coupling(n.id).rank() == 0);
}

TEST_CASE("apply behaves linearly and matches materialization") {
  const Built b = build(random_test_network(55, 60), 8);
  const int n = b.tree->dimension();
  SUBCASE("zero maps to zero") { CHECK(b.hinv.apply(VectorXd::Zero(n)).norm() == 0.0); }
  SUBCASE("random vectors agree with the dense operator") {
    const MatrixXd m = b.hinv.materialize();
    for (int trial = 0; trial < 5; ++trial) {
      const VectorXd x = testsup::random_vector(n, 100 + trial);
      const VectorXd y = b.hinv.apply(x);
      const VectorXd oracle = m * x;
      CHECK((y - oracle).norm() <= 1e-13 * oracle.norm());
    }
  }
  SUBCASE("dimension mismatch throws") {
    CHECK_THROWS_AS((void)b.hinv.apply(VectorXd::Zero(n + 1)), std::invalid_argument);
  }
}

TEST_CASE("decoupled halves keep left-supported vectors on the left") {
  const Built b = build(testsup::decoupled_network(), 2);
  const TreeNode& root = b.tree->nodes[b.tree->root];
  VectorXd x = VectorXd::Zero(4);
  x[b.tree->nodes[root.left].begin] = 1.0;
  const VectorXd y = b.hinv.apply(x);
  for (int i = b.tree->nodes[root.right].begin; i < b.tree->nodes[root.right].end; ++i)
    CHECK(y[i] == 0.0);
}

TEST_CASE("operator is symmetric under the inner product") {
  const Built b = build(random_test_network(77, 80), 9);
  const int n = b.tree->dimension();
  for (int trial = 0; trial < 3; ++trial) {
    const VectorXd x = testsup::random_vector(n, 300 + trial);
    const VectorXd y = testsup::random_vector(n, 400 + trial);
    const double a = x.dot(b.hinv.apply(y));
    const double c = y.dot(b.hinv.apply(x));
    CHECK(std::abs(a - c) <= 1e-12 * std::max(std::abs(a), 1.0));
  }
}

TEST_CASE("materialize is exactly symmetric and guarded at 5000") {
  const Built b = build(random_test_network(21, 64), 7);
  const MatrixXd m = b.hinv.materialize();
  CHECK((m - m.transpose()).norm() == 0.0);

  const Built big = build(testsup::path_network(5001), 40);
  CHECK_THROWS_WITH_AS((void)big.hinv.materialize(), doctest::Contains("guard"),
                       std::invalid_argument);
}

TEST_CASE("apply tallies the closed-form dense count on a single leaf") {
  const Built b = build(testsup::path_network(4), 4);
  CHECK(b.hinv.flops().apply == 0);
  (void)b.hinv.apply(testsup::random_vector(4, 1));
  CHECK(b.hinv.flops().apply == 28);  // 4*4 multiplies + 4*3 adds
}

TEST_CASE("identical builds produce identical flop tallies") {
  const Built a = build(random_test_network(5, 90), 12);
  const Built b = build(random_test_network(5, 90), 12);
  CHECK(a.hinv.flops().construction == b.hinv.flops().construction);
  CHECK(a.hinv.identical_to(b.hinv));
}

TEST_CASE("null modification leaves the operator untouched bit for bit") {
  Built b = build(random_test_network(44, 70), 8);
  const HInverse before = b.hinv;
  const ModifyStats stats = modify(b.hinv, b.g, {});
  CHECK(stats.flops == 0);
  CHECK(stats.leaves_reinverted == 0);
  CHECK(b.hinv.identical_to(before));
}

TEST_CASE("same-leaf change re-inverts one leaf and no factors") {
  Built b = build(random_test_network(50, 100), 16);
  const int leaf = b.tree->leaves().front();
  const TreeNode& ln = b.tree->nodes[leaf];
  REQUIRE(ln.size() >= 2);
  const auto changed = stamp_delta(b.g, ln.begin, ln.begin + 1, 0.1);

  const HInverse before = b.hinv;
  const ModifyStats stats = modify(b.hinv, b.g, changed);
  CHECK(stats.lca_node == leaf);
  CHECK(stats.leaves_reinverted == 1);
  CHECK(stats.factors_recomputed == 0);

  // Everything except that leaf block is untouched bitwise.
  for (const TreeNode& n : b.tree->nodes) {
    if (n.is_leaf() && n.id != leaf)
      CHECK(bits_equal(b.hinv.leaf_block(n.id), before.leaf_block(n.id)));
    if (!n.is_leaf())
      CHECK(bits_equal(b.hinv.coupling(n.id).u_factor, before.coupling(n.id).u_factor));
  }
  const MatrixXd fresh = b.g.dense_block(ln.begin, ln.end).inverse();
  CHECK((b.hinv.leaf_block(leaf) - fresh).norm() <= 1e-12 * fresh.norm());
}

TEST_CASE("cross-root change agrees with a from-scratch rebuild") {
  Built b = build(random_test_network(60, 90), 8);
  const TreeNode& root = b.tree->nodes[b.tree->root];
  REQUIRE_FALSE(root.is_leaf());
  const int a = b.tree->nodes[root.left].begin;
  const int c = b.tree->nodes[root.right].end - 1;
  const auto changed = stamp_delta(b.g, a, c, 0.25);

  modify(b.hinv, b.g, changed);
  const HInverse rebuilt = hierarchical_ginv(b.g, *b.tree);
  CHECK(rel_err(b.hinv.materialize(), rebuilt.materialize()) <= 1e-12);
}

TEST_CASE("any change matches the rebuild inside its LCA subtree") {
  // The update region of the modification algorithm is the LCA subtree;
  // blocks outside it are left as they were by construction. Random
  // networks, thresholds and fault locations.
  for (std::uint64_t seed : {61u, 62u, 63u, 64u, 65u, 66u, 67u, 68u}) {
    const int n = 60 + static_cast<int>(seed * 29) % 120;
    const int dth = 4 + static_cast<int>(seed * 11) % 15;
    Built b = build(random_test_network(seed, n), dth);

    testsup::Rng rng(seed * 13 + 5);
    const int a = rng.below(b.tree->dimension());
    int c = rng.below(b.tree->dimension());
    if (c == a) c = (a + 1) % b.tree->dimension();
    const auto changed = stamp_delta(b.g, a, c, 0.05 + rng.u01());

    const HInverse before = b.hinv;
    const ModifyStats stats = modify(b.hinv, b.g, changed);
    const TreeNode& k = b.tree->nodes[stats.lca_node];

    const HInverse rebuilt = hierarchical_ginv(b.g, *b.tree);
    const MatrixXd got = b.hinv.materialize();
    const MatrixXd want = rebuilt.materialize();
    const MatrixXd old = before.materialize();

    const MatrixXd got_k = got.block(k.begin, k.begin, k.size(), k.size());
    const MatrixXd want_k = want.block(k.begin, k.begin, k.size(), k.size());
    CHECK((got_k - want_k).norm() <= 1e-12 * want_k.norm());

    // Outside the LCA's principal block the operator is bitwise what it was.
    MatrixXd got_out = got, old_out = old;
    got_out.block(k.begin, k.begin, k.size(), k.size()).setZero();
    old_out.block(k.begin, k.begin, k.size(), k.size()).setZero();
    CHECK((got_out - old_out).norm() == 0.0);
  }
}

TEST_CASE("pruned and faithful updates produce bit-identical state") {
  for (std::uint64_t seed : {4u, 9u, 27u}) {
    Built pruned = build(random_test_network(seed, 90), 7);
    Built faithful = build(random_test_network(seed, 90), 7);
    REQUIRE(pruned.hinv.identical_to(faithful.hinv));

    testsup::Rng rng(seed * 7 + 1);
    const int a = rng.below(pruned.tree->dimension());
    int c = rng.below(pruned.tree->dimension());
    if (c == a) c = (a + 1) % pruned.tree->dimension();
    const auto changed_p = stamp_delta(pruned.g, a, c, 0.3);
    const auto changed_f = stamp_delta(faithful.g, a, c, 0.3);
    REQUIRE(changed_p == changed_f);

    modify(pruned.hinv, pruned.g, changed_p, false);
    modify(faithful.hinv, faithful.g, changed_f, true);
    CHECK(pruned.hinv.identical_to(faithful.hinv));
  }
}

TEST_CASE("a branch appearing and disappearing updates the cut list") {
  Built b = build(random_test_network(71, 40), 5);
  const TreeNode& root = b.tree->nodes[b.tree->root];
  // A cross-root pair with no existing branch.
  int a = -1, c = -1;
  for (int i = b.tree->nodes[root.left].begin;
       i < b.tree->nodes[root.left].end && a < 0; ++i)
    for (int j = b.tree->nodes[root.right].begin;
         j < b.tree->nodes[root.right].end; ++j)
      if (b.g.at(i, j) == 0.0) {
        a = i;
        c = j;
        break;
      }
  REQUIRE(a >= 0);

  const int k_before = b.hinv.coupling(b.tree->root).rank();
  auto changed = stamp_delta(b.g, a, c, 0.5);
  modify(b.hinv, b.g, changed);
  CHECK(b.hinv.coupling(b.tree->root).rank() == k_before + 1);

  changed = stamp_delta(b.g, a, c, -0.5);
  modify(b.hinv, b.g, changed);
  CHECK(b.hinv.coupling(b.tree->root).rank() == k_before);
  CHECK(b.g.at(a, c) == 0.0);
}

TEST_CASE("changes spanning three leaves are rejected") {
  Built b = build(testsup::path_network(12), 2);
  const auto leaves = b.tree->leaves();
  REQUIRE(leaves.size() >= 3);
  std::vector<std::pair<int, int>> changed{
      {b.tree->nodes[leaves[0]].begin, b.tree->nodes[leaves[0]].begin},
      {b.tree->nodes[leaves[1]].begin, b.tree->nodes[leaves[1]].begin},
      {b.tree->nodes[leaves[2]].begin, b.tree->nodes[leaves[2]].begin}};
  CHECK_THROWS_WITH_AS(modify(b.hinv, b.g, changed),
                       doctest::Contains("more than two leaves"),
                       std::invalid_argument);
}

TEST_CASE("inverse error is non-increasing as the threshold doubles") {
  const NetworkModel net = random_test_network(12, 96);
  const ConductanceMatrix g0 = assemble_conductance(net, net.delta_t);
  const MatrixXd exact = g0.dense().inverse();
  double prev = std::numeric_limits<double>::infinity();
  int violations = 0;
  for (int d = 2; d <= 96; d *= 2) {
    const PartitionTree tree = build_partition_tree(net, d);
    const ConductanceMatrix g = g0.permuted(tree.perm);
    const HInverse h = hierarchical_ginv(g, tree);
    MatrixXd exact_p(g.dim(), g.dim());
    for (int i = 0; i < g.dim(); ++i)
      for (int j = 0; j < g.dim(); ++j)
        exact_p(tree.perm[i], tree.perm[j]) = exact(i, j);
    const double err = (h.materialize() - exact_p).norm() / exact_p.norm();
    if (err > prev * (1 + 1e-9)) ++violations;
    prev = err;
  }
  CHECK(violations <= 1);
}

TEST_CASE("concurrent applies give identical results and a consistent tally") {
  const Built b = build(random_test_network(91, 80), 9);
  const int n = b.tree->dimension();
  const VectorXd x = testsup::random_vector(n, 17);
  const VectorXd expect = b.hinv.apply(x);
  const std::uint64_t per_call = b.hinv.flops().apply;

  std::vector<std::thread> workers;
  std::atomic<int> mismatches{0};
  for (int w = 0; w < 4; ++w)
    workers.emplace_back([&] {
      for (int rep = 0; rep < 25; ++rep) {
        const VectorXd y = b.hinv.apply(x);
        if (std::memcmp(y.data(), expect.data(), sizeof(double) * y.size()) != 0)
          mismatches.fetch_add(1);
      }
    });
  for (auto& w : workers) w.join();
  CHECK(mismatches.load() == 0);
  CHECK(b.hinv.flops().apply == per_call * 101);
}

TEST_CASE("binary dump round-trips and refuses a foreign tree") {
  const Built b = build(random_test_network(19, 50), 6);
  const auto path = (std::filesystem::temp_directory_path() / "hinv.dump").string();
  save_hinverse(b.hinv, path);
  const HInverse loaded = load_hinverse(path, *b.tree);
  CHECK(loaded.identical_to(b.hinv));

  const PartitionTree other = build_partition_tree(random_test_network(19, 50), 7);
  CHECK_THROWS_WITH_AS((void)load_hinverse(path, other),
                       doctest::Contains("different tree"), std::runtime_error);
}

TEST_CASE("singular leaf names the leaf and offers a condition estimate") {
  NetworkModel net = testsup::decoupled_network();
  for (Bus& bus : net.buses) bus.shunt_g = 0.0;  // floating halves
  const PartitionTree tree = build_partition_tree(net, 2);
  const ConductanceMatrix g =
      assemble_conductance(net, net.delta_t).permuted(tree.perm);
  CHECK_THROWS_WITH_AS((void)hierarchical_ginv(g, tree),
                       doctest::Contains("leaf node"), dense::SingularMatrixError);
}
