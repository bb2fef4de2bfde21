#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace liftms {

// Keyed random stream: (master seed, trial index, tag) -> independent stream.
// The key is mixed through splitmix64 so streams never overlap by construction,
// and the normal sampler is hand-rolled (Box-Muller) so sequences do not depend
// on the standard library's distribution implementation.
class StreamRng {
 public:
  StreamRng(std::uint64_t master, std::uint64_t trial, std::string_view tag)
      : engine_(mix_key(master, trial, tag)) {}

  std::uint64_t draw_u64() { return engine_(); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0, u2 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double two_pi = 6.283185307179586476925286766559;
    spare_ = mag * std::sin(two_pi * u2);
    have_spare_ = true;
    return mag * std::cos(two_pi * u2);
  }

  Eigen::VectorXd normal_vec(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  Eigen::MatrixXd normal_mat(int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    // column-major fill, matches vectorization order used elsewhere
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

  std::uint32_t uniform_index(std::uint32_t n) {
    return static_cast<std::uint32_t>(uniform() * n) % n;
  }

  static std::uint64_t mix_key(std::uint64_t master, std::uint64_t trial,
                               std::string_view tag) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a over the tag
    for (unsigned char c : tag) {
      h ^= c;
      h *= 1099511628211ull;
    }
    std::uint64_t x = splitmix(master);
    x = splitmix(x ^ (0x9e3779b97f4a7c15ull + trial));
    x = splitmix(x ^ h);
    return x;
  }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace liftms
