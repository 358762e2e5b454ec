#include "hinet/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "hinet/emt_sim.hpp"
#include "hinet/hinv.hpp"
#include "hinet/reference.hpp"
#include "hinet/synth.hpp"

namespace hinet {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

double parse_time(const std::string& text) {
  std::string t = text;
  double scale = 1.0;
  if (t.size() > 2 && t.substr(t.size() - 2) == "ms")
    scale = 1e-3, t = t.substr(0, t.size() - 2);
  else if (t.size() > 2 && t.substr(t.size() - 2) == "us")
    scale = 1e-6, t = t.substr(0, t.size() - 2);
  else if (t.size() > 1 && t.back() == 's')
    t = t.substr(0, t.size() - 1);
  return std::stod(t) * scale;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(const json& cfg) {
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a(cfg.dump())));
  return hex;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw NetworkError("cannot write '" + path.string() + "'");
  out << content;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

NetworkModel net_from_flags(const std::string& net_path, std::uint64_t seed) {
  if (!net_path.empty()) return load_network(net_path);
  return synth179(seed);
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

int cmd_simulate(const std::string& net_path, int d_th, double dt, double tend,
                 const std::string& solver, const std::string& fault_flag,
                 const std::string& out_dir, bool faithful, int decimation) {
  NetworkModel net = load_network(net_path);
  if (!fault_flag.empty()) net.faults.push_back(parse_fault_flag(fault_flag));
  validate_network(net);

  SimulationConfig cfg;
  cfg.d_th = d_th;
  cfg.delta_t = dt;
  cfg.t_end = tend;
  cfg.solver = solver_kind_from_name(solver);
  cfg.faithful_update = faithful;
  cfg.output_decimation = decimation;

  Simulator sim(net, cfg);
  TimeSeriesOutput out = sim.run();

  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "simulation.csv", out.to_csv());
  write_file(fs::path(out_dir) / "summary.json", out.summary_json(net, cfg));
  std::cout << "wrote " << (fs::path(out_dir) / "simulation.csv").string() << " and "
            << (fs::path(out_dir) / "summary.json").string() << " (" << out.steps
            << " steps";
  if (cfg.solver == SolverKind::Both)
    std::cout << ", max rel err " << out.max_rel_err;
  std::cout << ")\n";
  return 0;
}

int cmd_bench_dth(const std::string& net_path, std::uint64_t seed,
                  std::vector<int> dths, const std::string& out_dir) {
  const NetworkModel net = net_from_flags(net_path, seed);
  const ConductanceMatrix g = assemble_conductance(net, net.delta_t);

  if (dths.empty()) {
    for (int d = 2; d < net.n_buses(); d *= 2) dths.push_back(d);
    dths.push_back(net.n_buses());
  }

  json report;
  report["experiment"] = "dth_sweep";
  report["net"] = net.name;
  report["error_norm"] = "frobenius";
  report["sweep"] = {{"variable", "d_th"}, {"values", dths}};
  json cfg = {{"net", net.name}, {"seed", seed}, {"dths", dths}};
  report["config_hash"] = hash_hex(cfg);

  std::vector<double> errors;
  report["points"] = json::array();
  for (int d : dths) {
    Timer timer;
    const PartitionTree tree = build_partition_tree(net, d);
    const ConductanceMatrix gp = g.permuted(tree.perm);
    const HInverse hinv = hierarchical_ginv(gp, tree);
    const ErrorReport err = inverse_error(hinv, gp);
    errors.push_back(err.value);
    report["points"].push_back({{"d_th", d},
                                {"inverse_error", err.value},
                                {"construction_flops", hinv.flops().construction},
                                {"leaves", tree.leaves().size()},
                                {"wall_time_s", timer.seconds()}});
  }

  int violations = 0;
  for (size_t i = 1; i < errors.size(); ++i)
    if (errors[i] > errors[i - 1]) ++violations;
  report["non_increasing_violations"] = violations;
  report["error_drop_orders"] =
      std::log10(std::max(errors.front(), 1e-300) / std::max(errors.back(), 1e-300));

  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "dth_sweep.json", report.dump(2) + "\n");
  std::cout << "wrote " << (fs::path(out_dir) / "dth_sweep.json").string() << " ("
            << errors.size() << " points, " << report["error_drop_orders"]
            << " orders of error drop)\n";
  return 0;
}

std::pair<int, int> parse_copies(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos)
    throw NetworkError("bad --copies '" + text + "', expected RxC");
  return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
}

Branch default_tie() {
  Branch tie;
  tie.kind = BranchKind::SeriesRL;
  tie.r = 1.0;
  tie.l = 5e-3;
  return tie;
}

int cmd_bench_scaling(std::uint64_t seed, int d_th,
                      std::vector<std::string> copies_list,
                      const std::string& out_dir) {
  if (copies_list.empty())
    copies_list = {"1x1", "1x2", "2x2", "3x3", "3x4"};
  const NetworkModel base = synth179(seed);

  json report;
  report["experiment"] = "scaling";
  report["base"] = base.name;
  json cfg = {{"base", base.name}, {"seed", seed}, {"d_th", d_th}, {"copies", copies_list}};
  report["config_hash"] = hash_hex(cfg);
  report["sweep"] = {{"variable", "copies"}, {"values", copies_list}};
  report["points"] = json::array();

  std::vector<double> sizes, cons, applies, dense_solves;
  for (const std::string& copies : copies_list) {
    Timer timer;
    const auto [rows, cols] = parse_copies(copies);
    const NetworkModel net =
        rows * cols == 1 ? base : generate_grid_array(base, rows, cols, default_tie());
    const ConductanceMatrix g = assemble_conductance(net, net.delta_t);
    const PartitionTree tree = build_partition_tree(net, d_th);
    const ConductanceMatrix gp = g.permuted(tree.perm);
    const HInverse hinv = hierarchical_ginv(gp, tree);

    // One representative solve for the per-step cost.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(net.dimension());
    for (int i = 0; i < net.dimension(); ++i) x[i] = std::sin(0.7 * i + 0.3);
    (void)hinv.apply(x);
    const std::uint64_t apply_flops = hinv.flops().apply;

    const DenseFactorization oracle(g);
    const std::uint64_t dense_solve = oracle.solve_flops_per_call();

    sizes.push_back(net.n_buses());
    cons.push_back(static_cast<double>(hinv.flops().construction));
    applies.push_back(static_cast<double>(apply_flops));
    dense_solves.push_back(static_cast<double>(dense_solve));
    report["points"].push_back(
        {{"copies", copies},
         {"buses", net.n_buses()},
         {"construction_flops", hinv.flops().construction},
         {"apply_flops", apply_flops},
         {"dense_solve_flops", dense_solve},
         {"sparse_substitute_flops", oracle.sparse_substitute_flops()},
         {"wall_time_s", timer.seconds()}});
  }

  report["slopes"] = {{"construction", loglog_slope(sizes, cons)},
                      {"apply", loglog_slope(sizes, applies)},
                      {"dense_solve", loglog_slope(sizes, dense_solves)}};

  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "scaling.json", report.dump(2) + "\n");
  std::cout << "wrote " << (fs::path(out_dir) / "scaling.json").string()
            << " (construction slope " << report["slopes"]["construction"] << ")\n";
  return 0;
}

int cmd_gen(const std::string& base_name, std::uint64_t seed, int buses,
            const std::string& copies, const std::string& out_dir) {
  NetworkModel base;
  if (base_name == "synth179")
    base = synth179(seed);
  else if (base_name == "synth")
    base = synth_grid(buses, seed);
  else
    throw NetworkError("unknown --base '" + base_name + "' (use synth179 or synth)");

  NetworkModel net = base;
  if (!copies.empty()) {
    const auto [rows, cols] = parse_copies(copies);
    if (rows * cols > 1) net = generate_grid_array(base, rows, cols, default_tie());
  }

  fs::create_directories(out_dir);
  const fs::path path = fs::path(out_dir) / (net.name + ".json");
  save_network(net, path.string());
  std::cout << "wrote " << path.string() << " (" << net.n_buses() << " buses, "
            << net.branches.size() << " branches)\n";
  return 0;
}

}  // namespace

FaultEvent parse_fault_flag(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  if (parts.size() != 5)
    throw NetworkError("bad --fault '" + text + "', expected A:B:RESohm:TON:TOFF");

  FaultEvent f;
  f.bus_a = std::stoi(parts[0]);
  f.bus_b = parts[1] == "gnd" ? kGround : std::stoi(parts[1]);
  std::string res = parts[2];
  if (res.size() > 3 && res.substr(res.size() - 3) == "ohm")
    res = res.substr(0, res.size() - 3);
  f.fault_resistance = std::stod(res);
  f.t_on = parse_time(parts[3]);
  f.t_off = parse_time(parts[4]);
  return f;
}

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"hierarchical approximate-inverse network solver for EMT simulation"};
  app.require_subcommand(1);

  std::string net_path, solver = "hierarchical", fault_flag, out_dir = ".";
  std::string base_name = "synth179", copies;
  std::vector<int> dths;
  std::vector<std::string> copies_list;
  int d_th = 74, decimation = 1, buses = 179;
  double dt = 0.0, tend = 0.0;
  std::uint64_t seed = 1;
  bool faithful = false;

  CLI::App* sim = app.add_subcommand("simulate", "run the EMT loop on a network file");
  sim->add_option("--net", net_path, "network JSON file")->required();
  sim->add_option("--dth", d_th, "partition node threshold");
  sim->add_option("--dt", dt, "time step in seconds (default: from file)");
  sim->add_option("--tend", tend, "simulation horizon in seconds (default: from file)");
  sim->add_option("--solver", solver, "hierarchical|reference|both");
  sim->add_option("--fault", fault_flag, "extra fault A:B:RESohm:TON:TOFF (B may be gnd)");
  sim->add_option("--out", out_dir, "output directory");
  sim->add_option("--decimation", decimation, "record every k-th step");
  sim->add_flag("--faithful-update", faithful, "literal (unpruned) modification recursion");

  CLI::App* bdth = app.add_subcommand("bench-dth", "inverse error vs node threshold");
  bdth->add_option("--net", net_path, "network JSON file (default: seeded synth179)");
  bdth->add_option("--seed", seed, "generator seed");
  bdth->add_option("--dths", dths, "thresholds to sweep")->delimiter(',');
  bdth->add_option("--out", out_dir, "output directory");

  CLI::App* bsc = app.add_subcommand("bench-scaling", "FLOP scaling over grid arrays");
  bsc->add_option("--seed", seed, "generator seed");
  bsc->add_option("--dth", d_th, "partition node threshold");
  bsc->add_option("--copies", copies_list, "array sizes, e.g. 1x1,2x2,3x4")->delimiter(',');
  bsc->add_option("--out", out_dir, "output directory");

  CLI::App* gen = app.add_subcommand("gen", "write a synthetic network file");
  gen->add_option("--base", base_name, "synth179 or synth");
  gen->add_option("--buses", buses, "bus count for --base synth");
  gen->add_option("--copies", copies, "grid array RxC of the base");
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--out", out_dir, "output directory");

  std::vector<std::string> argv_like(args.rbegin(), args.rend());
  try {
    app.parse(argv_like);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(net_path, d_th, dt, tend, solver, fault_flag, out_dir,
                          faithful, decimation);
    if (bdth->parsed()) return cmd_bench_dth(net_path, seed, dths, out_dir);
    if (bsc->parsed()) return cmd_bench_scaling(seed, d_th, copies_list, out_dir);
    if (gen->parsed()) return cmd_gen(base_name, seed, buses, copies, out_dir);
  } catch (const NetworkError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const dense::SingularMatrixError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 1;
  } catch (const SimulationError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace hinet
