#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace wlab {

// Counter-based pseudo-random stream: draw k is a bijective 64-bit mix of
// key + k*phi, so streams have random access and a stream is fully
// determined by its key. Substreams are derived by hashing a tag into the
// key, which keeps replica-level parallelism reproducible: worker count and
// scheduling order cannot change any draw.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(derive_key(seed, stream)) {}

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    return mix(seed + kGolden * (mix(stream + kGolden) | 1ull));
  }

  CounterRng substream(std::uint64_t tag) const {
    return CounterRng(derive_key(key_, tag));
  }

  std::uint64_t next_u64() { return mix(key_ + kGolden * ++counter_); }

  // Uniform on the open interval (0,1); endpoints are never produced.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u = uniform01();
    const double v = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double theta = 6.283185307179586476925286766559 * v;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Uniform integer in [0, n)
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n)) %
           n;
  }

  std::uint64_t key() const { return key_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return CounterRng::mix(a + 0x9E3779B97F4A7C15ull * CounterRng::mix(b));
}

}  // namespace wlab
