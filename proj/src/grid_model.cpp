#include "hinet/grid_model.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hinet {

using nlohmann::json;

const char* branch_kind_name(BranchKind k) {
  switch (k) {
    case BranchKind::Resistor: return "resistor";
    case BranchKind::Inductor: return "inductor";
    case BranchKind::Capacitor: return "capacitor";
    case BranchKind::SeriesRL: return "series-RL";
  }
  return "?";
}

BranchKind branch_kind_from_name(const std::string& name) {
  std::string s;
  for (char c : name) s.push_back(static_cast<char>(std::tolower(c)));
  if (s == "resistor") return BranchKind::Resistor;
  if (s == "inductor") return BranchKind::Inductor;
  if (s == "capacitor") return BranchKind::Capacitor;
  if (s == "series-rl" || s == "series_rl") return BranchKind::SeriesRL;
  throw NetworkError("unknown branch kind '" + name + "'");
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw NetworkError(where + ": " + what);
}

void check_bus_ref(const NetworkModel& net, int bus, bool ground_ok,
                   const std::string& where) {
  if (bus == kGround) {
    if (!ground_ok) fail(where, "ground not allowed here");
    return;
  }
  if (bus < 0 || bus >= net.n_buses())
    fail(where, "dangling bus reference " + std::to_string(bus) + " (network has " +
                    std::to_string(net.n_buses()) + " buses)");
}

}  // namespace

std::vector<std::vector<int>> bus_adjacency(const NetworkModel& net) {
  std::vector<std::set<int>> nb(net.n_buses());
  for (const Branch& b : net.branches) {
    if (b.to == kGround || b.from == b.to) continue;
    nb[b.from].insert(b.to);
    nb[b.to].insert(b.from);
  }
  std::vector<std::vector<int>> adj(net.n_buses());
  for (int i = 0; i < net.n_buses(); ++i) adj[i].assign(nb[i].begin(), nb[i].end());
  return adj;
}

void validate_network(const NetworkModel& net) {
  const int n = net.n_buses();
  if (n == 0) fail(net.name, "network has no buses");
  for (int i = 0; i < n; ++i) {
    const Bus& b = net.buses[i];
    if (b.id != i)
      fail(net.name, "bus ids must be dense 0..n-1, got id " + std::to_string(b.id) +
                         " at position " + std::to_string(i));
    if (b.phases < 1)
      fail(net.name, "bus " + std::to_string(i) + ": phases must be >= 1");
    if (b.phases != net.buses[0].phases)
      fail(net.name, "bus " + std::to_string(i) + ": phase count differs from bus 0");
    if (b.shunt_g < 0)
      fail(net.name, "bus " + std::to_string(i) + ": negative shunt conductance");
  }
  if (!(net.delta_t > 0)) fail(net.name, "delta_t must be > 0");
  if (!(net.t_end >= net.delta_t)) fail(net.name, "t_end must be >= delta_t");

  for (size_t i = 0; i < net.branches.size(); ++i) {
    const Branch& b = net.branches[i];
    const std::string where = net.name + ", branch " + std::to_string(i);
    check_bus_ref(net, b.from, false, where);
    check_bus_ref(net, b.to, true, where);
    if (b.from == b.to) fail(where, "self loop");
    switch (b.kind) {
      case BranchKind::Resistor:
        if (!(b.r > 0)) fail(where, "resistor needs r > 0");
        break;
      case BranchKind::Inductor:
        if (!(b.l > 0)) fail(where, "inductor needs l > 0");
        break;
      case BranchKind::Capacitor:
        if (!(b.c > 0)) fail(where, "capacitor needs c > 0");
        break;
      case BranchKind::SeriesRL:
        if (!(b.r > 0) || !(b.l > 0)) fail(where, "series-RL needs r > 0 and l > 0");
        break;
    }
  }

  for (size_t i = 0; i < net.sources.size(); ++i) {
    const SourceWaveform& s = net.sources[i];
    const std::string where = net.name + ", source " + std::to_string(i);
    check_bus_ref(net, s.bus, false, where);
    if (s.phase < 0 || s.phase >= net.phases()) fail(where, "phase out of range");
    if (s.magnitude < 0) fail(where, "magnitude must be >= 0");
    if (!(s.frequency > 0)) fail(where, "frequency must be > 0");
  }

  for (size_t i = 0; i < net.faults.size(); ++i) {
    const FaultEvent& f = net.faults[i];
    const std::string where = net.name + ", fault " + std::to_string(i);
    check_bus_ref(net, f.bus_a, false, where);
    check_bus_ref(net, f.bus_b, true, where);
    if (f.bus_a == f.bus_b) fail(where, "fault endpoints coincide");
    if (!(f.fault_resistance > 0)) fail(where, "fault_resistance must be > 0");
    if (!(f.t_on >= 0) || !(f.t_on < f.t_off) || !(f.t_off <= net.t_end))
      fail(where, "need 0 <= t_on < t_off <= t_end");
  }

  // Connectivity of the branch graph, ignoring ground branches.
  const auto adj = bus_adjacency(net);
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adj[v])
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        stack.push_back(w);
      }
  }
  if (reached != n)
    fail(net.name, "branch graph disconnected (" + std::to_string(reached) + " of " +
                       std::to_string(n) + " buses reachable from bus 0)");
}

namespace {

int parse_bus_field(const json& j, const std::string& where) {
  if (j.is_string()) {
    if (j.get<std::string>() == "ground") return kGround;
    throw NetworkError(where + ": bus must be an integer or \"ground\"");
  }
  return j.get<int>();
}

json bus_field_to_json(int bus) {
  if (bus == kGround) return json("ground");
  return json(bus);
}

}  // namespace

NetworkModel parse_network(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw NetworkError(origin + ": JSON parse failure: " + e.what());
  }

  NetworkModel net;
  try {
    net.name = j.value("name", origin);
    net.delta_t = j.at("delta_t").get<double>();
    net.t_end = j.at("t_end").get<double>();

    for (const json& jb : j.at("buses")) {
      Bus b;
      b.id = jb.at("id").get<int>();
      b.phases = jb.value("phases", 1);
      b.shunt_g = jb.value("shunt_g", 0.0);
      net.buses.push_back(b);
    }
    for (const json& jb : j.value("branches", json::array())) {
      Branch b;
      b.from = parse_bus_field(jb.at("from"), origin + " branch");
      b.to = parse_bus_field(jb.at("to"), origin + " branch");
      b.kind = branch_kind_from_name(jb.at("kind").get<std::string>());
      const json params = jb.value("params", json::object());
      b.r = params.value("r", 0.0);
      b.l = params.value("l", 0.0);
      b.c = params.value("c", 0.0);
      net.branches.push_back(b);
    }
    for (const json& js : j.value("sources", json::array())) {
      SourceWaveform s;
      s.bus = js.at("bus").get<int>();
      s.phase = js.value("phase", 0);
      s.magnitude = js.at("magnitude").get<double>();
      s.frequency = js.at("frequency").get<double>();
      s.phase_angle = js.value("phase_angle", 0.0);
      net.sources.push_back(s);
    }
    for (const json& jf : j.value("faults", json::array())) {
      FaultEvent f;
      f.bus_a = jf.at("bus_a").get<int>();
      f.bus_b = parse_bus_field(jf.at("bus_b"), origin + " fault");
      f.fault_resistance = jf.at("fault_resistance").get<double>();
      f.t_on = jf.at("t_on").get<double>();
      f.t_off = jf.at("t_off").get<double>();
      net.faults.push_back(f);
    }
  } catch (const json::exception& e) {
    throw NetworkError(origin + ": bad network schema: " + e.what());
  }

  validate_network(net);
  return net;
}

NetworkModel load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NetworkError("cannot open network file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str(), path);
}

std::string network_to_json(const NetworkModel& net) {
  json j;
  j["name"] = net.name;
  j["delta_t"] = net.delta_t;
  j["t_end"] = net.t_end;
  j["buses"] = json::array();
  for (const Bus& b : net.buses)
    j["buses"].push_back({{"id", b.id}, {"phases", b.phases}, {"shunt_g", b.shunt_g}});
  j["branches"] = json::array();
  for (const Branch& b : net.branches) {
    json params = json::object();
    switch (b.kind) {
      case BranchKind::Resistor: params["r"] = b.r; break;
      case BranchKind::Inductor: params["l"] = b.l; break;
      case BranchKind::Capacitor: params["c"] = b.c; break;
      case BranchKind::SeriesRL:
        params["r"] = b.r;
        params["l"] = b.l;
        break;
    }
    j["branches"].push_back({{"from", bus_field_to_json(b.from)},
                             {"to", bus_field_to_json(b.to)},
                             {"kind", branch_kind_name(b.kind)},
                             {"params", params}});
  }
  j["sources"] = json::array();
  for (const SourceWaveform& s : net.sources)
    j["sources"].push_back({{"bus", s.bus},
                            {"phase", s.phase},
                            {"kind", "sinusoidal"},
                            {"magnitude", s.magnitude},
                            {"frequency", s.frequency},
                            {"phase_angle", s.phase_angle}});
  j["faults"] = json::array();
  for (const FaultEvent& f : net.faults)
    j["faults"].push_back({{"bus_a", f.bus_a},
                           {"bus_b", bus_field_to_json(f.bus_b)},
                           {"fault_resistance", f.fault_resistance},
                           {"t_on", f.t_on},
                           {"t_off", f.t_off}});
  return j.dump(2) + "\n";
}

void save_network(const NetworkModel& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw NetworkError("cannot write network file '" + path + "'");
  out << network_to_json(net);
}

NetworkModel generate_grid_array(const NetworkModel& base, int rows, int cols,
                                 const Branch& tie) {
  if (rows < 1 || cols < 1)
    throw NetworkError("generate_grid_array: rows and cols must be >= 1");
  validate_network(base);

  const int nb = base.n_buses();
  NetworkModel out;
  out.name = base.name + "_" + std::to_string(rows) + "x" + std::to_string(cols);
  out.delta_t = base.delta_t;
  out.t_end = base.t_end;

  auto copy_offset = [&](int r, int c) { return (r * cols + c) * nb; };

  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int off = copy_offset(r, c);
      for (const Bus& b : base.buses)
        out.buses.push_back(Bus{b.id + off, b.phases, b.shunt_g});
      for (const Branch& b : base.branches) {
        Branch nbch = b;
        nbch.from += off;
        if (nbch.to != kGround) nbch.to += off;
        out.branches.push_back(nbch);
      }
      for (const SourceWaveform& s : base.sources) {
        SourceWaveform ns = s;
        ns.bus += off;
        out.sources.push_back(ns);
      }
      if (r == 0 && c == 0)
        for (const FaultEvent& f : base.faults) out.faults.push_back(f);
    }

  // Tie ports: four fixed buses of the base, same bus in both copies.
  std::vector<int> ports{0, nb / 3, 2 * nb / 3, nb - 1};
  ports.erase(std::unique(ports.begin(), ports.end()), ports.end());

  auto add_ties = [&](int off_a, int off_b) {
    for (int p : ports) {
      Branch t = tie;
      t.from = off_a + p;
      t.to = off_b + p;
      out.branches.push_back(t);
    }
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) add_ties(copy_offset(r, c), copy_offset(r, c + 1));
      if (r + 1 < rows) add_ties(copy_offset(r, c), copy_offset(r + 1, c));
    }

  validate_network(out);
  return out;
}

}  // namespace hinet
