#include "hinet/emt_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"

namespace hinet {

const char* solver_kind_name(SolverKind k) {
  switch (k) {
    case SolverKind::Hierarchical: return "hierarchical";
    case SolverKind::Reference: return "reference";
    case SolverKind::Both: return "both";
  }
  return "?";
}

SolverKind solver_kind_from_name(const std::string& name) {
  if (name == "hierarchical") return SolverKind::Hierarchical;
  if (name == "reference") return SolverKind::Reference;
  if (name == "both") return SolverKind::Both;
  throw SimulationError("unknown solver '" + name + "'");
}

Simulator::Simulator(NetworkModel net, SimulationConfig cfg)
    : net_(std::move(net)), cfg_(cfg) {
  validate_network(net_);
  dt_ = cfg_.delta_t > 0 ? cfg_.delta_t : net_.delta_t;
  const double t_end = cfg_.t_end > 0 ? cfg_.t_end : net_.t_end;
  if (!(dt_ > 0) || !(t_end >= dt_))
    throw SimulationError("bad time grid: delta_t=" + std::to_string(dt_) +
                          " t_end=" + std::to_string(t_end));
  total_steps_ = static_cast<int>(std::llround(t_end / dt_));

  tree_ = build_partition_tree(net_, cfg_.d_th);
  g_natural_ = assemble_conductance(net_, dt_);
  g_perm_ = g_natural_.permuted(tree_.perm);
  if (hier_active()) hinv_ = hierarchical_ginv(g_perm_, tree_);
  if (ref_active()) {
    oracle_ = std::make_unique<DenseFactorization>(g_natural_);
    oracle_factor_flops_ += oracle_->factor_flops();
  }

  hier_ = SimulationState::cold(net_);
  ref_ = SimulationState::cold(net_);

  // Fault timing snaps to the nearest step; the new G takes effect for the
  // solve at that step. Faults that collapse to zero steps are dropped.
  for (size_t i = 0; i < net_.faults.size(); ++i) {
    const FaultEvent& f = net_.faults[i];
    const int on = std::max<int>(1, static_cast<int>(std::llround(f.t_on / dt_)));
    const int off = static_cast<int>(std::llround(f.t_off / dt_));
    if (off <= on) continue;
    schedule_.emplace_back(on, static_cast<int>(i), true);
    if (off <= total_steps_) schedule_.emplace_back(off, static_cast<int>(i), false);
  }
  std::sort(schedule_.begin(), schedule_.end());
}

void Simulator::set_state(const SimulationState& s) {
  if (step_ != 0) throw SimulationError("set_state: simulation already started");
  if (s.v.size() != net_.dimension() ||
      s.branch_current.size() != net_.branches.size() * net_.phases())
    throw SimulationError("set_state: state dimensions do not match the network");
  hier_ = s;
  ref_ = s;
}

FaultTransition Simulator::apply_fault_transition(const FaultEvent& event, bool on,
                                                  int fault_index) {
  const double gf = 1.0 / event.fault_resistance;
  const double signed_g = on ? gf : -gf;
  const int phases = net_.phases();

  std::vector<std::pair<int, int>> changed;
  for (int p = 0; p < phases; ++p) {
    const int a = net_.node_index(event.bus_a, p);
    const int b = event.bus_b == kGround ? -1 : net_.node_index(event.bus_b, p);
    g_natural_.stamp(a, b, signed_g);
    const int pa = tree_.perm[a];
    const int pb = b >= 0 ? tree_.perm[b] : -1;
    g_perm_.stamp(pa, pb, signed_g);
    changed.emplace_back(pa, pa);
    if (pb >= 0) {
      changed.emplace_back(pb, pb);
      changed.emplace_back(std::min(pa, pb), std::max(pa, pb));
    }
  }

  FaultTransition tr;
  tr.t = (step_ + 1) * dt_;  // effective for the solve at this step
  tr.fault_index = fault_index;
  tr.on = on;
  if (hier_active())
    tr.stats = modify(hinv_, g_perm_, changed, cfg_.faithful_update);
  if (ref_active()) {
    oracle_ = std::make_unique<DenseFactorization>(g_natural_);
    tr.oracle_refactor_flops = oracle_->factor_flops();
    oracle_factor_flops_ += oracle_->factor_flops();
  }

  if (on)
    hier_.active_faults.insert(fault_index), ref_.active_faults.insert(fault_index);
  else
    hier_.active_faults.erase(fault_index), ref_.active_faults.erase(fault_index);
  return tr;
}

Eigen::VectorXd Simulator::solve_hier(const Eigen::VectorXd& rhs_natural,
                                      std::uint64_t& flops) {
  const int n = net_.dimension();
  Eigen::VectorXd xp(n), v(n);
  for (int i = 0; i < n; ++i) xp[tree_.perm[i]] = rhs_natural[i];
  const std::uint64_t before = hinv_.flops().apply;
  const Eigen::VectorXd yp = hinv_.apply(xp);
  flops = hinv_.flops().apply - before;
  for (int i = 0; i < n; ++i) v[i] = yp[tree_.perm[i]];
  return v;
}

void Simulator::advance_lane(SimulationState& s, bool hierarchical, double t,
                             std::uint64_t& flops) {
  const int phases = net_.phases();
  const Eigen::VectorXd i_his = history_currents(net_, s, dt_);
  // Stash the per-branch history sources; the post-solve current update
  // needs exactly the values used in this solve.
  std::vector<double> ih(net_.branches.size() * phases, 0.0);
  for (size_t b = 0; b < net_.branches.size(); ++b) {
    const Branch& br = net_.branches[b];
    if (br.kind == BranchKind::Resistor) continue;
    for (int p = 0; p < phases; ++p) {
      const int a = net_.node_index(br.from, p);
      const int bb = br.to == kGround ? -1 : net_.node_index(br.to, p);
      const double vdrop = s.v[a] - (bb >= 0 ? s.v[bb] : 0.0);
      ih[b * phases + p] =
          branch_history_current(br, s.branch_current[b * phases + p], vdrop, dt_);
    }
  }

  const Eigen::VectorXd rhs = injection_vector(net_, t) + i_his;
  Eigen::VectorXd v;
  if (hierarchical) {
    v = solve_hier(rhs, flops);
  } else {
    const std::uint64_t before = oracle_->solve_flops();
    v = oracle_->solve(rhs);
    flops = oracle_->solve_flops() - before;
  }

  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i]))
      throw SimulationError(std::string("non-finite voltage in ") +
                            (hierarchical ? "hierarchical" : "reference") +
                            " solver at step " + std::to_string(step_ + 1) +
                            " (t=" + std::to_string(t) + "), node " +
                            std::to_string(i));

  for (size_t b = 0; b < net_.branches.size(); ++b) {
    const Branch& br = net_.branches[b];
    if (br.kind == BranchKind::Resistor) continue;
    const double g = companion_conductance(br, dt_);
    for (int p = 0; p < phases; ++p) {
      const int a = net_.node_index(br.from, p);
      const int bb = br.to == kGround ? -1 : net_.node_index(br.to, p);
      const double vdrop = v[a] - (bb >= 0 ? v[bb] : 0.0);
      s.branch_current[b * phases + p] = g * vdrop + ih[b * phases + p];
    }
  }
  s.v = v;
  s.t = t;
}

bool Simulator::step() {
  if (step_ >= total_steps_) return false;
  const int j = step_ + 1;
  while (next_event_ < schedule_.size() && std::get<0>(schedule_[next_event_]) <= j) {
    const auto [snap, fi, on] = schedule_[next_event_++];
    transitions_.push_back(apply_fault_transition(net_.faults[fi], on, fi));
  }

  const double t = j * dt_;
  std::uint64_t hier_flops = 0, ref_flops = 0;
  if (hier_active()) advance_lane(hier_, true, t, hier_flops);
  if (ref_active()) advance_lane(ref_, false, t, ref_flops);

  last_rel_err_ = -1.0;
  if (cfg_.solver == SolverKind::Both) {
    last_rel_err_ = voltage_error(hier_.v, ref_.v).value;
    err_sum_ += last_rel_err_;
    ++err_count_;
    max_rel_err_ = std::max(max_rel_err_, last_rel_err_);
  }

  ++step_;
  if ((step_ % cfg_.output_decimation) == 0 || step_ == total_steps_) {
    StepRecord row;
    row.t = t;
    const Eigen::VectorXd& v = hier_active() ? hier_.v : ref_.v;
    row.v.assign(v.data(), v.data() + v.size());
    row.flops_solve = hier_active() ? hier_flops : ref_flops;
    row.rel_err = last_rel_err_;
    rows_.push_back(std::move(row));
  }
  return step_ < total_steps_;
}

TimeSeriesOutput Simulator::run() {
  while (step()) {
  }
  TimeSeriesOutput out;
  const int phases = net_.phases();
  for (const Bus& b : net_.buses)
    for (int p = 0; p < phases; ++p)
      out.node_labels.push_back(phases == 1
                                    ? "v" + std::to_string(b.id)
                                    : "v" + std::to_string(b.id) + "_p" + std::to_string(p));
  out.rows = std::move(rows_);
  out.transitions = transitions_;
  out.steps = step_;
  out.max_rel_err = max_rel_err_;
  out.mean_rel_err = err_count_ > 0 ? err_sum_ / err_count_ : 0.0;
  out.hinv_flops = hier_active() ? hinv_.flops() : FlopSnapshot{};
  out.oracle_factor_flops = oracle_factor_flops_;
  out.oracle_solve_flops = oracle_ ? oracle_->solve_flops() : 0;
  return out;
}

std::string TimeSeriesOutput::to_csv() const {
  std::string s = "t";
  for (const auto& l : node_labels) s += "," + l;
  s += ",flops_solve";
  const bool with_err = !rows.empty() && rows.front().rel_err >= 0;
  if (with_err) s += ",rel_err";
  s += "\n";
  char buf[64];
  for (const StepRecord& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.t);
    s += buf;
    for (double v : r.v) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      s += buf;
    }
    s += "," + std::to_string(r.flops_solve);
    if (with_err) {
      std::snprintf(buf, sizeof buf, ",%.17g", r.rel_err);
      s += buf;
    }
    s += "\n";
  }
  return s;
}

std::string TimeSeriesOutput::summary_json(const NetworkModel& net,
                                           const SimulationConfig& cfg) const {
  nlohmann::json j;
  j["config"] = {{"net", net.name},
                 {"delta_t", cfg.delta_t > 0 ? cfg.delta_t : net.delta_t},
                 {"t_end", cfg.t_end > 0 ? cfg.t_end : net.t_end},
                 {"d_th", cfg.d_th},
                 {"solver", solver_kind_name(cfg.solver)},
                 {"output_decimation", cfg.output_decimation},
                 {"faithful_update", cfg.faithful_update}};
  // FNV-1a over the canonical config text; reruns with the same hash
  // reproduce all numbers exactly.
  const std::string canon = j["config"].dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  j["config_hash"] = hex;
  j["steps"] = steps;
  j["flops"] = {{"hinv_construction", hinv_flops.construction},
                {"hinv_apply", hinv_flops.apply},
                {"hinv_modify", hinv_flops.modify},
                {"oracle_factor", oracle_factor_flops},
                {"oracle_solve", oracle_solve_flops}};
  j["errors"] = {{"metric", "max_relative_voltage_error"},
                 {"norm", "max-relative-entry"},
                 {"max_rel_err", max_rel_err},
                 {"mean_rel_err", mean_rel_err}};
  j["fault_transitions"] = nlohmann::json::array();
  for (const FaultTransition& tr : transitions)
    j["fault_transitions"].push_back(
        {{"t", tr.t},
         {"fault_index", tr.fault_index},
         {"direction", tr.on ? "on" : "off"},
         {"modify_flops", tr.stats.flops},
         {"lca_node", tr.stats.lca_node},
         {"leaves_reinverted", tr.stats.leaves_reinverted},
         {"factors_recomputed", tr.stats.factors_recomputed},
         {"oracle_refactor_flops", tr.oracle_refactor_flops}});
  return j.dump(2) + "\n";
}

}  // namespace hinet
