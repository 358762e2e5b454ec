#pragma once

#include <Eigen/Dense>
#include <random>

#include "hinet/grid_model.hpp"

namespace testsup {

/// Deterministic uniform helpers (std distributions are not portable).
struct Rng {
  std::mt19937_64 eng;
  explicit Rng(std::uint64_t seed) : eng(seed) {}
  double u01() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }
  int below(int n) { return static_cast<int>(eng() % static_cast<std::uint64_t>(n)); }
};

inline Eigen::MatrixXd random_spd(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
  return a.transpose() * a + n * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::VectorXd random_vector(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
  return v;
}

/// Two buses with 1 S shunts tied by a 1 ohm resistor: G = [[2,-1],[-1,2]].
inline hinet::NetworkModel two_bus_network() {
  hinet::NetworkModel net;
  net.name = "two_bus";
  net.delta_t = 20e-6;
  net.t_end = 1e-3;
  net.buses = {hinet::Bus{0, 1, 1.0}, hinet::Bus{1, 1, 1.0}};
  hinet::Branch r;
  r.from = 0;
  r.to = 1;
  r.kind = hinet::BranchKind::Resistor;
  r.r = 1.0;
  net.branches = {r};
  return net;
}

/// 13-bus path: splits into leaves of sizes {4,3,3,3} at d_th = 4.
inline hinet::NetworkModel path_network(int n) {
  hinet::NetworkModel net;
  net.name = "path" + std::to_string(n);
  net.delta_t = 20e-6;
  net.t_end = 1e-3;
  for (int i = 0; i < n; ++i) net.buses.push_back(hinet::Bus{i, 1, 1.0});
  for (int i = 0; i + 1 < n; ++i) {
    hinet::Branch b;
    b.from = i;
    b.to = i + 1;
    b.kind = hinet::BranchKind::Resistor;
    b.r = 1.0;
    net.branches.push_back(b);
  }
  return net;
}

/// Two disconnected resistor pairs; every coupling rank is zero. Bypasses
/// load-time validation on purpose (in-code construction is allowed to).
inline hinet::NetworkModel decoupled_network() {
  hinet::NetworkModel net;
  net.name = "decoupled";
  net.delta_t = 20e-6;
  net.t_end = 1e-3;
  for (int i = 0; i < 4; ++i) net.buses.push_back(hinet::Bus{i, 1, 1.0});
  auto tie = [](int a, int b) {
    hinet::Branch br;
    br.from = a;
    br.to = b;
    br.kind = hinet::BranchKind::Resistor;
    br.r = 2.0;
    return br;
  };
  net.branches = {tie(0, 1), tie(2, 3)};
  return net;
}

}  // namespace testsup
