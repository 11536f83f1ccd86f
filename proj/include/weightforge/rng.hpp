#pragma once
// Deterministic random streams. All randomness in the library flows from a
// single 64-bit seed; subsystems derive labelled child streams so that the
// same (seed, label) pair always yields the same sequence, independent of
// the standard library's distribution implementations.

#include <cstdint>
#include <cmath>
#include <string_view>
#include <vector>

namespace weightforge {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ^ 0xd1b54a32d192ed03ULL) {
    // burn-in decorrelates trivially related seeds
    next_u64();
    next_u64();
  }

  // Labelled child stream: independent of the parent's future output.
  Rng child(std::string_view label, std::uint64_t index = 0) const {
    std::uint64_t s = state_;
    std::uint64_t h = detail::fnv1a(label);
    s ^= h + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
    s ^= (index + 1) * 0xda942042e4dd58b5ULL;
    return Rng(s);
  }

  std::uint64_t next_u64() { return detail::splitmix64(state_); }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

  // standard normal via Box-Muller (deterministic, no cached spare)
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double exponential() {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -std::log(u);
  }

  // Symmetric alpha-stable variate, Chambers-Mallows-Stuck construction.
  // alpha in (0,2]; alpha==2 reduces to a scaled gaussian.
  double stable(double alpha) {
    if (alpha >= 2.0) return gaussian() * std::sqrt(2.0);
    const double half_pi = 1.5707963267948966192313216916398;
    double theta = uniform(-half_pi, half_pi);
    double w = exponential();
    double num = std::sin(alpha * theta);
    double den = std::pow(std::cos(theta), 1.0 / alpha);
    double tail = std::pow(std::cos((1.0 - alpha) * theta) / w, (1.0 - alpha) / alpha);
    return num / den * tail;
  }

  std::vector<double> gaussian_vector(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = gaussian();
    return v;
  }

  std::vector<double> uniform_vector(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }

 private:
  std::uint64_t state_;
};

}  // namespace weightforge
