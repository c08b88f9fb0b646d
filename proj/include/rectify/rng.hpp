#pragma once

#include <cstdint>
#include <random>

namespace rectify {

// Seeded generator with an explicit uniform mapping so results are stable
// across standard libraries.
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    double uniform() { return (double)(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    uint64_t bits() { return eng_(); }
    uint64_t below(uint64_t n) { return eng_() % n; }

  private:
    std::mt19937_64 eng_;
};

} // namespace rectify
