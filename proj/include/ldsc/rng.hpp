#pragma once

#include <cstdint>
#include <limits>

#include <Eigen/Core>

namespace ldsc {

/// SplitMix64 output function. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// xoshiro256++ (Blackman & Vigna). Satisfies UniformRandomBitGenerator.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

using Rng = Xoshiro256pp;

/// Node in a tree of seeds. A child key is a hash of (parent key, index), so
/// the stream for any path is reproducible without drawing from siblings and
/// results never depend on which worker consumed which stream.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t master) noexcept : key_(mix64(master)) {}

  SeedStream child(std::uint64_t index) const noexcept {
    return SeedStream(Tag{}, mix64(key_ ^ mix64(index + 0x632be59bd9b4e019ull)));
  }
  std::uint64_t key() const noexcept { return key_; }
  Rng engine() const noexcept { return Rng(key_); }

 private:
  struct Tag {};
  SeedStream(Tag, std::uint64_t key) noexcept : key_(key) {}
  std::uint64_t key_;
};

double standard_normal(Rng& rng);
double uniform01(Rng& rng);
/// Uniform integer in [0, bound).
std::uint64_t uniform_index(Rng& rng, std::uint64_t bound);

void fill_standard_normal(Eigen::Ref<Eigen::MatrixXd> out, Rng& rng);
void fill_standard_normal(Eigen::Ref<Eigen::VectorXd> out, Rng& rng);

}  // namespace ldsc
