#ifndef UNVEILER_RNG_HPP_
#define UNVEILER_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace unveiler {

// Seeded random stream. The mapping from engine output to doubles and
// integers is done here rather than through <random> distributions so
// that streams are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform over [0, n)
  std::size_t index(std::size_t n);

  // uniform over [lo, hi] inclusive
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(index(static_cast<std::size_t>(hi - lo) + 1));
  }

 private:
  std::mt19937_64 engine_;
};

// Child streams: the same parent seed and label always give the same
// child seed, and different labels give unrelated streams.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace unveiler

#endif  // UNVEILER_RNG_HPP_
