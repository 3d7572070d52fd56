#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace liesim {

// Stream roles keep draws for different purposes statistically independent
// even when they share a global seed and replica index.
enum class Role : std::uint32_t {
  driver = 1,
  reference = 2,
  quadrature = 3,
  permutation = 4,
  subsample = 5,
  gauge_sample = 6,
  aux = 7,
  test = 8,
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97f4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based Philox4x32-10 generator. A stream is identified by
// (seed, replica, role); advancing only bumps the 128-bit counter, so
// replicas can be generated independently and in parallel with
// reproducible output.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t replica, Role role)
      : RngStream(seed, replica, static_cast<std::uint32_t>(role)) {}

  RngStream(std::uint64_t seed, std::uint64_t replica, std::uint32_t role) {
    std::uint64_t s = seed;
    const std::uint64_t k = detail::splitmix64(s);
    key_[0] = static_cast<std::uint32_t>(k);
    key_[1] = static_cast<std::uint32_t>(k >> 32);
    std::uint64_t mix = seed ^ (replica * 0x9E3779B97f4A7C15ULL) ^
                        (static_cast<std::uint64_t>(role) << 32);
    const std::uint64_t sid = detail::splitmix64(mix);
    stream_[0] = static_cast<std::uint32_t>(sid);
    stream_[1] = static_cast<std::uint32_t>(sid >> 32);
  }

  std::uint32_t next_u32() {
    if (buf_pos_ == 4) refill();
    return buf_[buf_pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); safe as an argument of log().
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Box-Muller with one cached value; avoids std::normal_distribution so
  // streams are identical across standard library implementations.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
    if (mean == 0.0) return 0;
    if (mean <= 60.0) {
      // Knuth multiplication method.
      const double limit = std::exp(-mean);
      double prod = uniform_open();
      std::uint64_t n = 0;
      while (prod > limit) {
        ++n;
        prod *= uniform_open();
      }
      return n;
    }
    return poisson_ptrs(mean);
  }

  // Fisher-Yates shuffle of an index array.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_u64() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  void refill() {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(counter_),
        static_cast<std::uint32_t>(counter_ >> 32), stream_[0], stream_[1]};
    std::array<std::uint32_t, 2> key = {key_[0], key_[1]};
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ULL * ctr[0];
      const std::uint64_t p1 = 0xCD9E8D57ULL * ctr[2];
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += 0x9E3779B9U;
      key[1] += 0xBB67AE85U;
    }
    buf_ = ctr;
    buf_pos_ = 0;
    ++counter_;
  }

  // Hoermann's PTRS transformed-rejection sampler for large means.
  std::uint64_t poisson_ptrs(double mean) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = uniform() - 0.5;
      const double v = uniform_open();
      const double us = 0.5 - std::abs(u);
      const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (kf < 0.0) continue;
      const std::uint64_t k = static_cast<std::uint64_t>(kf);
      if (us >= 0.07 && v <= v_r) return k;
      if (us < 0.013 && v > us) continue;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
          kf * loglam - mean - std::lgamma(kf + 1.0)) {
        return k;
      }
    }
  }

  std::uint32_t key_[2];
  std::uint32_t stream_[2];
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace liesim
