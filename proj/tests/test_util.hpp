#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Core>

#include "ldsc/error.hpp"
#include "ldsc/model.hpp"
#include "ldsc/rng.hpp"

namespace ldsc::testing {

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("ldsc_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Random correlation template: normalized Gram matrix of a q x (q + 3) normal matrix.
inline Eigen::MatrixXd random_correlation(std::size_t q, Rng& rng) {
  Eigen::MatrixXd g(q, q + 3);
  fill_standard_normal(Eigen::Ref<Eigen::MatrixXd>(g), rng);
  Eigen::MatrixXd s = g * g.transpose();
  const Eigen::VectorXd d = s.diagonal().cwiseSqrt().cwiseInverse();
  return d.asDiagonal() * s * d.asDiagonal();
}

inline CovarianceModel random_covariance(const std::vector<std::size_t>& sizes, Rng& rng) {
  std::vector<Eigen::MatrixXd> t;
  for (auto q : sizes) t.push_back(random_correlation(q, rng));
  return build_covariance(BlockStructure::build(sizes), t);
}

inline CovarianceModel ar1_covariance(const std::vector<std::size_t>& sizes, const std::vector<double>& rhos) {
  std::vector<BlockGenerator> g;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    BlockGenerator b;
    b.kind = BlockGenerator::Kind::Ar1;
    b.rho = rhos[k % rhos.size()];
    g.push_back(b);
  }
  return build_covariance(BlockStructure::build(sizes), g);
}

inline Eigen::VectorXd normal_vector(std::size_t n, Rng& rng, double sd = 1.0) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  fill_standard_normal(Eigen::Ref<Eigen::VectorXd>(v), rng);
  return v * sd;
}

}  // namespace ldsc::testing

#define EXPECT_LDSC_ERROR(stmt, expected)                                   \
  do {                                                                      \
    try {                                                                   \
      (void)(stmt);                                                         \
      ADD_FAILURE() << "expected " #expected;                               \
    } catch (const ::ldsc::Error& e) {                                      \
      EXPECT_EQ(e.code(), (expected)) << e.what();                          \
    }                                                                       \
  } while (0)
