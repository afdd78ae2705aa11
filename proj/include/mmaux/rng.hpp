#pragma once

#include <cmath>
#include <cstdint>

namespace mmaux {

// SplitMix64-based generator. Fully specified, so seeded streams are
// bit-identical across platforms and standard libraries; every random
// decision in the project goes through this type.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Unbiased uniform integer in [0, n). Rejection sampling, n >= 1.
  std::uint64_t bounded(std::uint64_t n) {
    const std::uint64_t threshold = (0ULL - n) % n;  // 2^64 mod n
    std::uint64_t x = next_u64();
    while (x < threshold) x = next_u64();
    return x % n;
  }

  int next_int(int n) { return static_cast<int>(bounded(static_cast<std::uint64_t>(n))); }

  // Standard normal via Box-Muller with a cached spare.
  double next_gauss() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double two_pi = 6.283185307179586476925286766559;
    const double angle = next_double() * two_pi;
    const double radius = std::sqrt(-2.0 * std::log(1.0 - next_double()));
    spare_ = std::sin(angle) * radius;
    has_spare_ = true;
    return std::cos(angle) * radius;
  }

  // Derives an independent stream. Used to give posts, epochs, and loss
  // components their own deterministic randomness.
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static Rng fork(std::uint64_t seed, std::uint64_t salt) { return Rng(mix(seed, salt)); }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stream salts so that enabling one randomized component never shifts the
// random draws of another.
namespace rng_salt {
inline constexpr std::uint64_t kPost = 0x706F7374ULL;       // per-post data generation
inline constexpr std::uint64_t kPrototype = 0x70726F74ULL;  // class patch prototypes
inline constexpr std::uint64_t kSplit = 0x73706C74ULL;      // dataset splitting
inline constexpr std::uint64_t kSubsample = 0x73756273ULL;  // low-resource subsampling
inline constexpr std::uint64_t kInit = 0x696E6974ULL;       // parameter init
inline constexpr std::uint64_t kShuffle = 0x73687566ULL;    // epoch shuffling
inline constexpr std::uint64_t kItm = 0x69746D21ULL;        // train ITM perturbation
inline constexpr std::uint64_t kItmVal = 0x69746D76ULL;     // validation ITM perturbation
}  // namespace rng_salt

}  // namespace mmaux
