#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace cfm {

/// Counter-based generator: every draw is a stateless hash of
/// (seed, stream, counter), so fixtures reproduce bit-identically across
/// platforms and parallel consumers can fork independent streams.
class CounterRng {
 public:
  explicit CounterRng(uint64_t seed, uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  CounterRng fork(uint64_t substream) const {
    return CounterRng(seed_, stream_ * 0x9e3779b97f4a7c15ULL + substream + 1);
  }

  double uniform() {  // in (0, 1)
    uint64_t z = hash(counter_++);
    return (static_cast<double>(z >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  Eigen::MatrixXd gaussian_matrix(int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = gaussian();
    return m;
  }

  Eigen::VectorXd gaussian_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = gaussian();
    return v;
  }

 private:
  uint64_t hash(uint64_t counter) const {
    // splitmix64 over the mixed key
    uint64_t z = seed_ ^ (stream_ * 0xbf58476d1ce4e5b9ULL) ^
                 (counter * 0x94d049bb133111ebULL);
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  uint64_t seed_;
  uint64_t stream_;
  uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace cfm
