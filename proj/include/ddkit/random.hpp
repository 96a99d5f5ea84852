#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace ddkit {

// mt19937_64 with portable mappings to doubles and bounded integers; the
// standard distributions are implementation-defined, which would make
// seeded outputs differ between standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, bound), bound > 0; rejection sampling.
  std::uint64_t below(std::uint64_t bound);

  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mixes a seed with a string key (e.g. a sample id) into a child seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

}  // namespace ddkit
