#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace survsl {

/// SplitMix64 finalizer. Used to derive independent stream seeds from a root
/// seed so that parallel work items draw the same numbers as a serial run.
std::uint64_t mix_seed(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t substream);

/// Reproducible random source.
///
/// The engine is MT19937-64 (std::mt19937_64, whose output sequence is fixed
/// by the C++ standard). Distributions are implemented here rather than taken
/// from <random>, because the standard library distributions are
/// implementation-defined and would break cross-platform reproducibility:
///   uniform  : top 53 bits of one draw, scaled to [0, 1)
///   normal   : Box-Muller, both variates used in order
///   index(n) : Lemire's nearly-divisionless bounded integer with rejection
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();
  /// Uniform on the open interval (0, 1).
  double uniform_open();
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double exponential(double rate);
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t index(std::size_t n);

  template <class T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Indices of a with-replacement resample of size n.
std::vector<std::size_t> resample_indices(std::size_t n, Rng& rng);

}  // namespace survsl
