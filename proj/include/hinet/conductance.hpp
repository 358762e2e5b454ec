#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "hinet/grid_model.hpp"
#include "hinet/sim_state.hpp"

namespace hinet {

/// Real symmetric sparse conductance matrix from companion-model stamping.
/// Entries are kept exactly symmetric: every stamp writes (a,b) and (b,a)
/// with the same value.
class ConductanceMatrix {
 public:
  ConductanceMatrix() = default;
  ConductanceMatrix(int dim, double delta_t) : dim_(dim), dt_(delta_t), rows_(dim) {}

  int dim() const { return dim_; }
  double delta_t() const { return dt_; }

  double at(int r, int c) const {
    const auto& row = rows_[r];
    const auto it = row.find(c);
    return it == row.end() ? 0.0 : it->second;
  }

  /// row/col += v at (r,c) and (c,r).
  void add_entry(int r, int c, double v) {
    rows_[r][c] += v;
    if (r != c) rows_[c][r] += v;
  }

  /// Standard two-terminal stamp: +g on both diagonals, -g off-diagonal.
  /// b < 0 means ground: diagonal of a only.
  void stamp(int a, int b, double g) {
    rows_[a][a] += g;
    if (b >= 0) {
      rows_[b][b] += g;
      rows_[a][b] += -g;
      rows_[b][a] += -g;
    }
  }

  const std::map<int, double>& row(int r) const { return rows_[r]; }

  std::size_t nonzeros() const {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.size();
    return n;
  }

  Eigen::MatrixXd dense() const { return dense_block(0, dim_); }

  /// Principal submatrix over [begin, end).
  Eigen::MatrixXd dense_block(int begin, int end) const;

  /// Reordered copy: entry (a,b) moves to (perm[a], perm[b]).
  ConductanceMatrix permuted(const std::vector<int>& perm) const;

  /// Companion conductance per branch (identical across phases).
  std::vector<double> branch_g;
  /// Non-fatal assembly diagnostics (e.g. a component with no ground path).
  std::vector<std::string> warnings;

 private:
  int dim_ = 0;
  double dt_ = 0.0;
  std::vector<std::map<int, double>> rows_;
};

/// Trapezoidal companion conductance of a branch: resistor 1/R, inductor
/// dt/(2L), capacitor 2C/dt, series-RL 1/(R + 2L/dt).
double companion_conductance(const Branch& b, double delta_t);

/// History current source of a branch for the step after (i_prev, vdrop_prev),
/// oriented from->to in parallel with the companion conductance.
/// Resistors have no memory and return 0.
double branch_history_current(const Branch& b, double i_prev, double vdrop_prev,
                              double delta_t);

/// Stamps shunts and all branches of `net` for time step `delta_t`.
ConductanceMatrix assemble_conductance(const NetworkModel& net, double delta_t);

/// RHS contribution of branch history sources: -i_his at `from`, +i_his at
/// `to` for every branch with memory, evaluated from the previous-step state.
Eigen::VectorXd history_currents(const NetworkModel& net,
                                 const SimulationState& state, double delta_t);

/// Source injections i_in(t), natural node order.
Eigen::VectorXd injection_vector(const NetworkModel& net, double t);

}  // namespace hinet
