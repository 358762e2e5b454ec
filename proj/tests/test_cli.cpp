#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "hinet/cli.hpp"
#include "hinet/synth.hpp"

using namespace hinet;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("fault flag parses buses, resistance and times") {
  const FaultEvent f = parse_fault_flag("1:81:10ohm:10ms:30ms");
  CHECK(f.bus_a == 1);
  CHECK(f.bus_b == 81);
  CHECK(f.fault_resistance == 10.0);
  CHECK(f.t_on == doctest::Approx(0.010).epsilon(1e-12));
  CHECK(f.t_off == doctest::Approx(0.030).epsilon(1e-12));

  const FaultEvent g = parse_fault_flag("3:gnd:2.5ohm:500us:1ms");
  CHECK(g.bus_b == kGround);
  CHECK(g.fault_resistance == 2.5);
  CHECK(g.t_on == doctest::Approx(500e-6).epsilon(1e-12));

  CHECK_THROWS_AS((void)parse_fault_flag("1:2:3"), NetworkError);
}

TEST_CASE("gen is deterministic and its files pass validation") {
  const fs::path d1 = fresh_dir("hinet_gen1");
  const fs::path d2 = fresh_dir("hinet_gen2");
  CHECK(cli_main({"gen", "--base", "synth179", "--seed", "7", "--out", d1.string()}) == 0);
  CHECK(cli_main({"gen", "--base", "synth179", "--seed", "7", "--out", d2.string()}) == 0);
  CHECK(slurp(d1 / "synth179.json") == slurp(d2 / "synth179.json"));
  const NetworkModel net = load_network((d1 / "synth179.json").string());
  CHECK(net.n_buses() == 179);
}

TEST_CASE("gen expands grid arrays to the expected size") {
  const fs::path dir = fresh_dir("hinet_gen_array");
  CHECK(cli_main({"gen", "--base", "synth179", "--copies", "2x2", "--seed", "1",
                  "--out", dir.string()}) == 0);
  const NetworkModel net = load_network((dir / "synth179_2x2.json").string());
  CHECK(net.n_buses() == 716);
}

TEST_CASE("simulate writes CSV with rel_err and a summary") {
  const fs::path dir = fresh_dir("hinet_sim");
  save_network(synth_grid(24, 3), (dir / "net.json").string());
  CHECK(cli_main({"simulate", "--net", (dir / "net.json").string(), "--dth", "6",
                  "--solver", "both", "--tend", "0.002", "--out",
                  (dir / "out").string()}) == 0);
  const std::string csv = slurp(dir / "out" / "simulation.csv");
  CHECK(csv.rfind("t,", 0) == 0);
  CHECK(csv.find("rel_err") != std::string::npos);
  const std::string summary = slurp(dir / "out" / "summary.json");
  CHECK(summary.find("max_rel_err") != std::string::npos);
}

TEST_CASE("simulate accepts an extra fault flag") {
  const fs::path dir = fresh_dir("hinet_sim_fault");
  save_network(synth_grid(24, 3), (dir / "net.json").string());
  CHECK(cli_main({"simulate", "--net", (dir / "net.json").string(), "--dth", "6",
                  "--solver", "both", "--tend", "0.004", "--fault",
                  "1:5:10ohm:1ms:2ms", "--out", (dir / "out").string()}) == 0);
  const std::string summary = slurp(dir / "out" / "summary.json");
  CHECK(summary.find("fault_transitions") != std::string::npos);
  CHECK(summary.find("\"direction\": \"on\"") != std::string::npos);
}

TEST_CASE("missing network file exits with the usage code and names the path") {
  CHECK(cli_main({"simulate", "--net", "/no/such/net.json"}) == 2);
  CHECK(cli_main({"simulate"}) == 2);
  CHECK(cli_main({}) == 2);
}

TEST_CASE("a singular network exits with the solver-failure code") {
  const fs::path dir = fresh_dir("hinet_singular");
  NetworkModel net;
  net.name = "floating";
  net.delta_t = 20e-6;
  net.t_end = 1e-3;
  net.buses = {Bus{0, 1, 0.0}, Bus{1, 1, 0.0}};
  Branch b;
  b.from = 0;
  b.to = 1;
  b.kind = BranchKind::Resistor;
  b.r = 1.0;
  net.branches = {b};  // no path to ground anywhere
  save_network(net, (dir / "net.json").string());
  // d_th 2 puts the whole singular matrix into one leaf.
  CHECK(cli_main({"simulate", "--net", (dir / "net.json").string(), "--dth", "2",
                  "--out", dir.string()}) == 1);
  // The direct-factorization oracle detects it regardless of the partition.
  CHECK(cli_main({"simulate", "--net", (dir / "net.json").string(), "--dth", "1",
                  "--solver", "reference", "--out", dir.string()}) == 1);
}

TEST_CASE("faithful update reproduces the pruned run byte for byte") {
  const fs::path dir = fresh_dir("hinet_faithful");
  save_network(synth_grid(40, 9), (dir / "net.json").string());
  const std::vector<std::string> common{
      "simulate", "--net",  (dir / "net.json").string(),
      "--dth",    "8",      "--solver",
      "both",     "--tend", "0.004",
      "--fault",  "2:31:10ohm:1ms:3ms"};
  auto with_out = [&](const std::string& out, bool faithful) {
    std::vector<std::string> args = common;
    args.insert(args.end(), {"--out", out});
    if (faithful) args.push_back("--faithful-update");
    return args;
  };
  CHECK(cli_main(with_out((dir / "pruned").string(), false)) == 0);
  CHECK(cli_main(with_out((dir / "faithful").string(), true)) == 0);
  CHECK(slurp(dir / "pruned" / "simulation.csv") ==
        slurp(dir / "faithful" / "simulation.csv"));
}

TEST_CASE("bench-dth sweep is monotone and exact at the single-leaf end") {
  const fs::path dir = fresh_dir("hinet_bdth");
  save_network(synth_grid(200, 5), (dir / "net.json").string());
  CHECK(cli_main({"bench-dth", "--net", (dir / "net.json").string(), "--dths",
                  "2,4,8,16,32,64,128,200", "--out", dir.string()}) == 0);
  const std::string rep = slurp(dir / "dth_sweep.json");
  CHECK(rep.find("\"experiment\": \"dth_sweep\"") != std::string::npos);
  CHECK(rep.find("config_hash") != std::string::npos);

  const auto j = nlohmann::json::parse(rep);
  CHECK(j["non_increasing_violations"].get<int>() <= 1);
  CHECK(j["error_drop_orders"].get<double>() >= 4.0);
  CHECK(j["points"].size() == 8);
  CHECK(j["points"].back()["inverse_error"].get<double>() <= 1e-12);
}

TEST_CASE("bench-scaling runs a single point quickly") {
  const fs::path dir = fresh_dir("hinet_bscale");
  CHECK(cli_main({"bench-scaling", "--seed", "1", "--dth", "74", "--copies", "1x1,1x2",
                  "--out", dir.string()}) == 0);
  const std::string rep = slurp(dir / "scaling.json");
  CHECK(rep.find("\"experiment\": \"scaling\"") != std::string::npos);
  CHECK(rep.find("construction_flops") != std::string::npos);
  CHECK(rep.find("dense_solve_flops") != std::string::npos);
}
