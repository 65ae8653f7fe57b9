#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace unicorn {

// All randomness in the project flows from a single root seed through named
// substreams so that runs are reproducible and components do not perturb each
// other's draws when code paths change.
uint64_t derive_seed(uint64_t root, std::string_view stream);
uint64_t derive_seed(uint64_t root, std::string_view stream, uint64_t index);

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1). 53-bit mantissa.
  double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be > 0.
  int64_t uniform_int(int64_t n);

  // Uniform in [lo, hi).
  double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(static_cast<int64_t>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace unicorn
