#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hinet {

/// Ground is node index -1; it never appears in the conductance matrix
/// (grounded reference formulation).
inline constexpr int kGround = -1;

struct Bus {
  int id = 0;
  int phases = 1;
  double shunt_g = 0.0;  // siemens per phase, >= 0
};

enum class BranchKind { Resistor, Inductor, Capacitor, SeriesRL };

const char* branch_kind_name(BranchKind k);
BranchKind branch_kind_from_name(const std::string& name);

/// Per-phase two-terminal element; no inter-phase mutual coupling.
struct Branch {
  int from = 0;
  int to = kGround;
  BranchKind kind = BranchKind::Resistor;
  double r = 0.0;  // ohms
  double l = 0.0;  // henries
  double c = 0.0;  // farads
};

/// Sinusoidal current injection i(t) = magnitude * sin(2*pi*f*t + phase_angle).
struct SourceWaveform {
  int bus = 0;
  int phase = 0;
  double magnitude = 0.0;    // amperes, >= 0
  double frequency = 60.0;   // hertz, > 0
  double phase_angle = 0.0;  // radians
};

/// Resistive fault branch switched in at t_on and out at t_off.
struct FaultEvent {
  int bus_a = 0;
  int bus_b = kGround;
  double fault_resistance = 0.0;  // ohms, > 0
  double t_on = 0.0;
  double t_off = 0.0;
};

struct NetworkModel {
  std::string name;
  double delta_t = 20e-6;
  double t_end = 60e-3;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<SourceWaveform> sources;
  std::vector<FaultEvent> faults;

  int n_buses() const { return static_cast<int>(buses.size()); }
  int phases() const { return buses.empty() ? 1 : buses.front().phases; }
  /// Matrix dimension: one node per bus per phase.
  int dimension() const { return n_buses() * phases(); }
  /// Matrix index of (bus, phase) in natural (unpermuted) order.
  int node_index(int bus, int phase) const { return bus * phases() + phase; }
};

class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checks all model invariants: dense 0..n-1 bus ids, uniform phase count,
/// positive parameters, no dangling references, connected branch graph
/// (ground branches excluded). Throws NetworkError with the offending
/// location in the message.
void validate_network(const NetworkModel& net);

NetworkModel load_network(const std::string& path);
NetworkModel parse_network(const std::string& json_text,
                           const std::string& origin = "<string>");
std::string network_to_json(const NetworkModel& net);
void save_network(const NetworkModel& net, const std::string& path);

/// rows x cols disjoint copies of `base`, tied between grid-adjacent copies
/// at four fixed port buses {0, n/3, 2n/3, n-1} with branches cloned from
/// `tie`. Sources are replicated per copy; fault events are kept only on
/// copy (0,0). Bus ids are re-indexed densely and the result is
/// deterministic given the inputs.
NetworkModel generate_grid_array(const NetworkModel& base, int rows, int cols,
                                 const Branch& tie);

/// Undirected bus-level adjacency (ground ignored, parallels deduped).
std::vector<std::vector<int>> bus_adjacency(const NetworkModel& net);

}  // namespace hinet
