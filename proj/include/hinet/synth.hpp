#pragma once

#include <cstdint>

#include "hinet/grid_model.hpp"

namespace hinet {

/// Deterministic synthetic transmission-style grid: n buses on a lattice,
/// randomized spanning tree plus chords up to average degree ~2.5, every bus
/// grounded through a load conductance, scattered shunt capacitors, a handful
/// of sinusoidal injections at generator-like buses.
NetworkModel synth_grid(int n_buses, std::uint64_t seed);

/// The 179-bus stand-in used by the benchmark harness.
NetworkModel synth179(std::uint64_t seed);

/// Small random connected network with all four branch kinds, for tests.
NetworkModel random_test_network(std::uint64_t seed, int n_buses, int phases = 1);

}  // namespace hinet
