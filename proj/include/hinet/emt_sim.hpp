#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hinet/conductance.hpp"
#include "hinet/grid_model.hpp"
#include "hinet/hinv.hpp"
#include "hinet/reference.hpp"
#include "hinet/sim_state.hpp"

namespace hinet {

enum class SolverKind { Hierarchical, Reference, Both };
const char* solver_kind_name(SolverKind k);
SolverKind solver_kind_from_name(const std::string& name);

struct SimulationConfig {
  double delta_t = 0.0;  // 0 -> take from the network file
  double t_end = 0.0;    // 0 -> take from the network file
  int d_th = 32;
  SolverKind solver = SolverKind::Hierarchical;
  int output_decimation = 1;
  bool faithful_update = false;
};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepRecord {
  double t = 0.0;
  std::vector<double> v;        // natural node order
  std::uint64_t flops_solve = 0;
  double rel_err = -1.0;        // < 0 when only one solver ran
};

struct FaultTransition {
  double t = 0.0;
  int fault_index = -1;
  bool on = false;
  ModifyStats stats;
  std::uint64_t oracle_refactor_flops = 0;
};

struct TimeSeriesOutput {
  std::vector<std::string> node_labels;
  std::vector<StepRecord> rows;
  std::vector<FaultTransition> transitions;
  int steps = 0;
  double max_rel_err = 0.0;
  double mean_rel_err = 0.0;
  FlopSnapshot hinv_flops;
  std::uint64_t oracle_factor_flops = 0;
  std::uint64_t oracle_solve_flops = 0;

  /// CSV: `t,<node labels...>,flops_solve[,rel_err]`, 17-significant-digit
  /// floats, one row per recorded step.
  std::string to_csv() const;
  std::string summary_json(const NetworkModel& net, const SimulationConfig& cfg) const;
};

/// Time-domain EMT loop: per step i = i_in(t) + i_his(t-dt), v = G~^{-1} i
/// (and/or the direct-factorization oracle), history propagation, fault
/// switching through modify(). With solver = Both the two lanes run
/// independent trajectories against the same G and the per-step voltage
/// error between them is recorded.
class Simulator {
 public:
  Simulator(NetworkModel net, SimulationConfig cfg);

  // HInverse references the tree member, so the object must stay put.
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;
  Simulator(Simulator&&) = delete;
  Simulator& operator=(Simulator&&) = delete;

  /// Overrides the cold start. Must be called before the first step.
  void set_state(const SimulationState& s);

  /// Advances one delta_t; returns false once t_end is reached.
  bool step();

  /// Runs to t_end and collects the output.
  TimeSeriesOutput run();

  const SimulationState& state() const { return hier_active() ? hier_ : ref_; }
  const SimulationState& reference_state() const { return ref_; }
  const NetworkModel& network() const { return net_; }
  const SimulationConfig& config() const { return cfg_; }
  const PartitionTree& tree() const { return tree_; }
  const HInverse& hinverse() const { return hinv_; }
  const ConductanceMatrix& conductance() const { return g_natural_; }
  const ConductanceMatrix& conductance_permuted() const { return g_perm_; }
  const std::vector<FaultTransition>& transitions() const { return transitions_; }
  double delta_t() const { return dt_; }
  int total_steps() const { return total_steps_; }
  int steps_done() const { return step_; }
  double last_rel_err() const { return last_rel_err_; }

  /// Stamps the fault conductance in or out and updates both solvers.
  /// Exposed for tests; the step loop calls it on schedule.
  FaultTransition apply_fault_transition(const FaultEvent& event, bool on,
                                         int fault_index = -1);

 private:
  bool hier_active() const { return cfg_.solver != SolverKind::Reference; }
  bool ref_active() const { return cfg_.solver != SolverKind::Hierarchical; }
  Eigen::VectorXd solve_hier(const Eigen::VectorXd& rhs_natural,
                             std::uint64_t& flops);
  void advance_lane(SimulationState& s, bool hierarchical, double t,
                    std::uint64_t& flops);

  NetworkModel net_;
  SimulationConfig cfg_;
  double dt_ = 0.0;
  int total_steps_ = 0;
  int step_ = 0;
  PartitionTree tree_;
  ConductanceMatrix g_natural_;
  ConductanceMatrix g_perm_;
  HInverse hinv_;
  std::unique_ptr<DenseFactorization> oracle_;
  std::uint64_t oracle_factor_flops_ = 0;
  std::uint64_t oracle_solve_base_ = 0;
  SimulationState hier_;
  SimulationState ref_;
  double last_rel_err_ = -1.0;
  std::vector<FaultTransition> transitions_;
  /// (step index, fault index, on) sorted by step.
  std::vector<std::tuple<int, int, bool>> schedule_;
  std::size_t next_event_ = 0;
  std::vector<StepRecord> rows_;
  double err_sum_ = 0.0;
  int err_count_ = 0;
  double max_rel_err_ = 0.0;
};

}  // namespace hinet
