#pragma once

#include <atomic>
#include <cstdint>

namespace hinet {

/// Tally of floating-point additions and multiplications (divisions are
/// counted as multiplications). Each kernel adds the closed-form operation
/// count of the loop it just ran, so identical inputs always produce
/// identical tallies.
struct FlopSnapshot {
  std::uint64_t construction = 0;
  std::uint64_t apply = 0;
  std::uint64_t modify = 0;

  std::uint64_t total() const { return construction + apply + modify; }
};

/// Apply may run concurrently from many threads once construction is done,
/// so its tally is atomic; construction and modify are single-writer.
struct FlopCounters {
  std::uint64_t construction = 0;
  std::atomic<std::uint64_t> apply{0};
  std::uint64_t modify = 0;

  FlopCounters() = default;
  FlopCounters(const FlopCounters& o)
      : construction(o.construction), apply(o.apply.load()), modify(o.modify) {}
  FlopCounters& operator=(const FlopCounters& o) {
    construction = o.construction;
    apply.store(o.apply.load());
    modify = o.modify;
    return *this;
  }

  FlopSnapshot snapshot() const {
    return FlopSnapshot{construction, apply.load(), modify};
  }
};

}  // namespace hinet
