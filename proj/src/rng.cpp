#include "ldsc/rng.hpp"

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace ldsc {

Xoshiro256pp::Xoshiro256pp(std::uint64_t seed) noexcept {
  std::uint64_t z = seed;
  for (auto& word : s_) {
    word = mix64(z);
    z += 0x9e3779b97f4a7c15ull;
  }
}

// Boost's distributions are used instead of <random> ones because their
// algorithms are fixed across standard library implementations.
double standard_normal(Rng& rng) {
  boost::random::normal_distribution<double> dist;
  return dist(rng);
}

double uniform01(Rng& rng) {
  boost::random::uniform_01<double> dist;
  return dist(rng);
}

std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  boost::random::uniform_int_distribution<std::uint64_t> dist(0, bound - 1);
  return dist(rng);
}

void fill_standard_normal(Eigen::Ref<Eigen::MatrixXd> out, Rng& rng) {
  boost::random::normal_distribution<double> dist;
  double* data = out.data();
  if (out.outerStride() == out.innerSize()) {
    const Eigen::Index total = out.size();
    for (Eigen::Index i = 0; i < total; ++i) data[i] = dist(rng);
    return;
  }
  for (Eigen::Index c = 0; c < out.cols(); ++c)
    for (Eigen::Index r = 0; r < out.rows(); ++r) out(r, c) = dist(rng);
}

void fill_standard_normal(Eigen::Ref<Eigen::VectorXd> out, Rng& rng) {
  boost::random::normal_distribution<double> dist;
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = dist(rng);
}

}  // namespace ldsc
