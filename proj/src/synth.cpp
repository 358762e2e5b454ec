#include "hinet/synth.hpp"

#include <cmath>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace hinet {

namespace {

/// mt19937_64 with explicit mappings; std::uniform_*_distribution is
/// implementation-defined and would break cross-platform determinism.
struct Rng {
  std::mt19937_64 eng;
  explicit Rng(std::uint64_t seed) : eng(seed) {}
  double u01() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }
  int below(int n) { return static_cast<int>(eng() % static_cast<std::uint64_t>(n)); }
};

/// Randomized Prim spanning tree over an 8-neighborhood lattice, then chords
/// on the lowest-degree vertices until the minimum degree reaches 3 (or the
/// candidate set runs out). Meshy enough that no bus can be cut loose more
/// cheaply than severing an inter-area tie.
std::vector<std::pair<int, int>> mesh_edges(int n, int width, Rng& rng) {
  auto lattice_neighbors = [&](int b) {
    std::vector<int> out;
    const int r = b / width, c = b % width;
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const int rr = r + dr, cc = c + dc;
        const int w = rr * width + cc;
        if (rr >= 0 && cc >= 0 && cc < width && w >= 0 && w < n) out.push_back(w);
      }
    return out;
  };

  std::set<std::pair<int, int>> edges;
  std::vector<int> degree(n, 0);
  auto add_edge = [&](int a, int b) {
    if (edges.insert({std::min(a, b), std::max(a, b)}).second) {
      ++degree[a];
      ++degree[b];
    }
  };

  std::vector<char> in_tree(n, 0);
  std::vector<std::pair<int, int>> frontier;
  in_tree[0] = 1;
  for (int w : lattice_neighbors(0)) frontier.push_back({0, w});
  int joined = 1;
  while (joined < n) {
    const int pick = rng.below(static_cast<int>(frontier.size()));
    auto [a, b] = frontier[pick];
    frontier.erase(frontier.begin() + pick);
    if (in_tree[b]) continue;
    in_tree[b] = 1;
    ++joined;
    add_edge(a, b);
    for (int w : lattice_neighbors(b))
      if (!in_tree[w]) frontier.push_back({b, w});
  }

  for (bool progress = true; progress;) {
    progress = false;
    for (int b = 0; b < n; ++b) {
      if (degree[b] >= 3) continue;
      int best = -1;
      for (int w : lattice_neighbors(b)) {
        if (edges.count({std::min(b, w), std::max(b, w)})) continue;
        if (best < 0 || degree[w] < degree[best] || (degree[w] == degree[best] && w < best))
          best = w;
      }
      if (best >= 0) {
        add_edge(b, best);
        progress = true;
      }
    }
  }
  return {edges.begin(), edges.end()};
}

}  // namespace

NetworkModel synth_grid(int n_buses, std::uint64_t seed) {
  Rng rng(seed);
  NetworkModel net;
  net.name = "synth" + std::to_string(n_buses);
  net.delta_t = 20e-6;
  net.t_end = 60e-3;

  for (int i = 0; i < n_buses; ++i) {
    Bus b;
    b.id = i;
    b.shunt_g = rng.uniform(0.02, 0.10);
    if (rng.u01() < 0.40) b.shunt_g += rng.uniform(0.10, 0.40);  // load bus
    net.buses.push_back(b);
  }

  // Transmission-grid structure: densely meshed areas of ~45 buses joined
  // by a handful of long inter-area lines. At EMT time steps a line's
  // companion conductance is dt/2L, so the long ties couple areas weakly
  // compared with the load/charging paths to ground.
  const int n_regions = std::max(1, (n_buses + 22) / 45);
  std::vector<int> region_begin(n_regions + 1, 0);
  for (int r = 0; r <= n_regions; ++r)
    region_begin[r] = static_cast<int>(static_cast<long long>(n_buses) * r / n_regions);

  for (int r = 0; r < n_regions; ++r) {
    const int begin = region_begin[r];
    const int size = region_begin[r + 1] - begin;
    const int width = static_cast<int>(std::ceil(std::sqrt(double(size))));
    if (size == 1) continue;
    for (auto [a, b] : mesh_edges(size, width, rng)) {
      Branch br;
      br.from = begin + a;
      br.to = begin + b;
      br.kind = BranchKind::SeriesRL;
      br.r = rng.uniform(0.5, 3.0);
      br.l = rng.uniform(1e-3, 8e-3);
      net.branches.push_back(br);
    }
  }

  // Multi-circuit corridors of long lines between grid-adjacent areas;
  // individually much weaker than any in-area line.
  const int rw = static_cast<int>(std::ceil(std::sqrt(double(n_regions))));
  auto add_region_ties = [&](int ra, int rb) {
    for (int t = 0; t < 6; ++t) {
      Branch br;
      br.from = region_begin[ra] + rng.below(region_begin[ra + 1] - region_begin[ra]);
      br.to = region_begin[rb] + rng.below(region_begin[rb + 1] - region_begin[rb]);
      br.kind = BranchKind::SeriesRL;
      br.r = rng.uniform(2.0, 6.0);
      br.l = rng.uniform(300e-3, 600e-3);
      net.branches.push_back(br);
    }
  };
  for (int r = 0; r < n_regions; ++r) {
    if (r % rw + 1 < rw && r + 1 < n_regions) add_region_ties(r, r + 1);
    if (r + rw < n_regions) add_region_ties(r, r + rw);
  }

  // Line-charging style shunt capacitors on a quarter of the buses.
  for (int i = 0; i < n_buses; ++i)
    if (rng.u01() < 0.25) {
      Branch br;
      br.from = i;
      br.to = kGround;
      br.kind = BranchKind::Capacitor;
      br.c = rng.uniform(0.5e-6, 2e-6);
      net.branches.push_back(br);
    }

  // Generator-like injections in every area plus a load current at every
  // bus. Shunt-dominated grounding keeps voltages local, so buses without
  // any injection would idle at microvolts.
  for (int r = 0; r < n_regions; ++r) {
    const int begin = region_begin[r];
    const int size = region_begin[r + 1] - begin;
    const int n_src = std::min(size, 3);
    for (int s = 0; s < n_src; ++s) {
      SourceWaveform src;
      src.bus = begin + rng.below(size);
      src.magnitude = rng.uniform(0.5, 2.0);
      src.frequency = 60.0;
      src.phase_angle = rng.uniform(0.0, 2.0 * M_PI);
      net.sources.push_back(src);
    }
  }
  for (int i = 0; i < n_buses; ++i) {
    SourceWaveform load;
    load.bus = i;
    load.magnitude = rng.uniform(0.05, 0.3);
    load.frequency = 60.0;
    load.phase_angle = rng.uniform(0.0, 2.0 * M_PI);
    net.sources.push_back(load);
  }

  validate_network(net);
  return net;
}

NetworkModel synth179(std::uint64_t seed) {
  NetworkModel net = synth_grid(179, seed);
  net.name = "synth179";
  return net;
}

NetworkModel random_test_network(std::uint64_t seed, int n_buses, int phases) {
  Rng rng(seed);
  NetworkModel net;
  net.name = "random" + std::to_string(n_buses) + "_s" + std::to_string(seed);
  net.delta_t = 20e-6;
  net.t_end = 10e-3;

  for (int i = 0; i < n_buses; ++i) {
    Bus b;
    b.id = i;
    b.phases = phases;
    b.shunt_g = rng.uniform(0.05, 0.5);
    net.buses.push_back(b);
  }

  // Random tree plus ~30% chords; all four kinds.
  auto add_branch = [&](int a, int b) {
    Branch br;
    br.from = a;
    br.to = b;
    const double roll = rng.u01();
    if (roll < 0.4) {
      br.kind = BranchKind::Resistor;
      br.r = rng.uniform(0.5, 8.0);
    } else if (roll < 0.6) {
      br.kind = BranchKind::Inductor;
      br.l = rng.uniform(1e-3, 30e-3);
    } else if (roll < 0.75) {
      br.kind = BranchKind::Capacitor;
      br.c = rng.uniform(0.5e-6, 5e-6);
    } else {
      br.kind = BranchKind::SeriesRL;
      br.r = rng.uniform(0.5, 4.0);
      br.l = rng.uniform(1e-3, 20e-3);
    }
    net.branches.push_back(br);
  };
  for (int i = 1; i < n_buses; ++i) add_branch(rng.below(i), i);
  const int extra = static_cast<int>(std::lround(0.3 * n_buses));
  for (int e = 0; e < extra; ++e) {
    const int a = rng.below(n_buses);
    const int b = rng.below(n_buses);
    if (a != b) add_branch(std::min(a, b), std::max(a, b));
  }

  const int n_src = std::max(1, n_buses / 10);
  for (int s = 0; s < n_src; ++s) {
    SourceWaveform src;
    src.bus = rng.below(n_buses);
    src.phase = phases > 1 ? rng.below(phases) : 0;
    src.magnitude = rng.uniform(0.2, 1.5);
    src.frequency = 60.0;
    src.phase_angle = rng.uniform(0.0, 2.0 * M_PI);
    net.sources.push_back(src);
  }

  validate_network(net);
  return net;
}

}  // namespace hinet
