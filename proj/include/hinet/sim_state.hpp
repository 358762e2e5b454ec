#pragma once

#include <Eigen/Dense>
#include <set>
#include <vector>

#include "hinet/grid_model.hpp"

namespace hinet {

/// Mutable per-step state of the EMT loop. Everything else in the model is
/// immutable after construction.
struct SimulationState {
  double t = 0.0;
  /// Nodal voltages in natural (unpermuted) order, length = net.dimension().
  Eigen::VectorXd v;
  /// Branch currents oriented from->to, one entry per (branch, phase).
  std::vector<double> branch_current;
  /// Indices into net.faults of faults currently stamped into G.
  std::set<int> active_faults;

  static SimulationState cold(const NetworkModel& net) {
    SimulationState s;
    s.v = Eigen::VectorXd::Zero(net.dimension());
    s.branch_current.assign(net.branches.size() * net.phases(), 0.0);
    return s;
  }
};

}  // namespace hinet
