#pragma once

#include <cstdint>
#include <random>

namespace bma {

// Seeded stream owned by one chain. Every sampler takes one of these by
// reference; identical seeds give bit-identical chains on a given build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return uniform_(engine_); }
  double normal() { return normal_(engine_); }
  double gamma(double shape, double scale) {
    std::gamma_distribution<double> g(shape, scale);
    return g(engine_);
  }
  double chi_squared(double dof) { return gamma(0.5 * dof, 2.0); }

  // uniform over {0, 1, ..., bound-1}
  std::uint64_t below(std::uint64_t bound) {
    std::uniform_int_distribution<std::uint64_t> d(0, bound - 1);
    return d(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace bma
