#include "hinet/conductance.hpp"

#include <cmath>

namespace hinet {

Eigen::MatrixXd ConductanceMatrix::dense_block(int begin, int end) const {
  const int n = end - begin;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int r = begin; r < end; ++r)
    for (const auto& [c, v] : rows_[r])
      if (c >= begin && c < end) m(r - begin, c - begin) = v;
  return m;
}

ConductanceMatrix ConductanceMatrix::permuted(const std::vector<int>& perm) const {
  ConductanceMatrix out(dim_, dt_);
  for (int r = 0; r < dim_; ++r)
    for (const auto& [c, v] : rows_[r]) out.rows_[perm[r]][perm[c]] = v;
  out.branch_g = branch_g;
  out.warnings = warnings;
  return out;
}

double companion_conductance(const Branch& b, double delta_t) {
  switch (b.kind) {
    case BranchKind::Resistor: return 1.0 / b.r;
    case BranchKind::Inductor: return delta_t / (2.0 * b.l);
    case BranchKind::Capacitor: return 2.0 * b.c / delta_t;
    case BranchKind::SeriesRL: return 1.0 / (b.r + 2.0 * b.l / delta_t);
  }
  return 0.0;
}

double branch_history_current(const Branch& b, double i_prev, double vdrop_prev,
                              double delta_t) {
  switch (b.kind) {
    case BranchKind::Resistor:
      return 0.0;
    case BranchKind::Inductor:
      return i_prev + delta_t / (2.0 * b.l) * vdrop_prev;
    case BranchKind::Capacitor:
      return -i_prev - 2.0 * b.c / delta_t * vdrop_prev;
    case BranchKind::SeriesRL: {
      const double g = 1.0 / (b.r + 2.0 * b.l / delta_t);
      return g * vdrop_prev + g * (2.0 * b.l / delta_t - b.r) * i_prev;
    }
  }
  return 0.0;
}

ConductanceMatrix assemble_conductance(const NetworkModel& net, double delta_t) {
  if (!(delta_t > 0)) throw NetworkError("assemble_conductance: delta_t must be > 0");
  const int phases = net.phases();
  ConductanceMatrix g(net.dimension(), delta_t);
  g.branch_g.resize(net.branches.size());

  for (const Bus& bus : net.buses)
    if (bus.shunt_g > 0)
      for (int p = 0; p < phases; ++p)
        g.add_entry(net.node_index(bus.id, p), net.node_index(bus.id, p), bus.shunt_g);

  for (size_t i = 0; i < net.branches.size(); ++i) {
    const Branch& b = net.branches[i];
    const double gc = companion_conductance(b, delta_t);
    g.branch_g[i] = gc;
    for (int p = 0; p < phases; ++p) {
      const int a = net.node_index(b.from, p);
      const int bb = b.to == kGround ? -1 : net.node_index(b.to, p);
      g.stamp(a, bb, gc);
    }
  }

  // A connected component with no ground path makes G singular; the solver
  // oracle will detect it, here it is only flagged.
  std::vector<double> ground_g(net.n_buses(), 0.0);
  for (const Bus& bus : net.buses) ground_g[bus.id] += bus.shunt_g;
  for (size_t i = 0; i < net.branches.size(); ++i)
    if (net.branches[i].to == kGround) ground_g[net.branches[i].from] += g.branch_g[i];

  const auto adj = bus_adjacency(net);
  std::vector<int> comp(net.n_buses(), -1);
  for (int s = 0; s < net.n_buses(); ++s) {
    if (comp[s] != -1) continue;
    double total = 0.0;
    std::vector<int> stack{s};
    comp[s] = s;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      total += ground_g[v];
      for (int w : adj[v])
        if (comp[w] == -1) {
          comp[w] = s;
          stack.push_back(w);
        }
    }
    if (total <= 0)
      g.warnings.push_back("component containing bus " + std::to_string(s) +
                           " has no path to ground; matrix is singular");
  }
  return g;
}

Eigen::VectorXd history_currents(const NetworkModel& net,
                                 const SimulationState& state, double delta_t) {
  const int phases = net.phases();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(net.dimension());
  for (size_t i = 0; i < net.branches.size(); ++i) {
    const Branch& b = net.branches[i];
    if (b.kind == BranchKind::Resistor) continue;
    for (int p = 0; p < phases; ++p) {
      const int a = net.node_index(b.from, p);
      const int bb = b.to == kGround ? -1 : net.node_index(b.to, p);
      const double vdrop = state.v[a] - (bb >= 0 ? state.v[bb] : 0.0);
      const double ih = branch_history_current(
          b, state.branch_current[i * phases + p], vdrop, delta_t);
      out[a] -= ih;
      if (bb >= 0) out[bb] += ih;
    }
  }
  return out;
}

Eigen::VectorXd injection_vector(const NetworkModel& net, double t) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(net.dimension());
  for (const SourceWaveform& s : net.sources)
    out[net.node_index(s.bus, s.phase)] +=
        s.magnitude * std::sin(2.0 * M_PI * s.frequency * t + s.phase_angle);
  return out;
}

}  // namespace hinet
