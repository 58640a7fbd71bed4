#include "ldsc/model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "ldsc/error.hpp"
#include "ldsc/textio.hpp"

namespace ldsc {

// ---------------------------------------------------------------------------
// BlockStructure

BlockStructure BlockStructure::build(std::vector<std::size_t> block_sizes,
                                     std::optional<std::size_t> max_block_size,
                                     std::size_t max_variants) {
  require(!block_sizes.empty(), ErrorCode::EmptyStructure, "block size list is empty");
  BlockStructure s;
  s.offsets_.reserve(block_sizes.size());
  std::size_t total = 0;
  for (std::size_t k = 0; k < block_sizes.size(); ++k) {
    const std::size_t q = block_sizes[k];
    require(q >= 1, ErrorCode::InvalidArgument, "block " + std::to_string(k) + " has size 0");
    if (max_block_size)
      require(q <= *max_block_size, ErrorCode::SizeOverflow,
              "block " + std::to_string(k) + " exceeds the configured bound " +
                  std::to_string(*max_block_size));
    s.offsets_.push_back(total);
    total += q;
    require(total <= max_variants, ErrorCode::SizeOverflow,
            "total variant count exceeds " + std::to_string(max_variants));
  }
  s.sizes_ = std::move(block_sizes);
  s.p_ = total;
  return s;
}

BlockStructure BlockStructure::uniform(std::size_t num_blocks, std::size_t block_size) {
  return build(std::vector<std::size_t>(num_blocks, block_size));
}

std::size_t BlockStructure::max_block_size() const noexcept {
  return sizes_.empty() ? 0 : *std::max_element(sizes_.begin(), sizes_.end());
}

std::size_t BlockStructure::block_of(std::size_t variant) const {
  require(variant < p_, ErrorCode::InvalidArgument, "variant index out of range");
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), variant);
  return static_cast<std::size_t>(it - offsets_.begin()) - 1;
}

BlockStructure BlockStructure::merged(std::size_t factor) const {
  require(factor >= 1, ErrorCode::InvalidArgument, "merge factor must be >= 1");
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < sizes_.size(); k += factor) {
    std::size_t q = 0;
    for (std::size_t j = k; j < std::min(k + factor, sizes_.size()); ++j) q += sizes_[j];
    out.push_back(q);
  }
  return build(std::move(out));
}

BlockStructure BlockStructure::permuted(const std::vector<std::size_t>& order) const {
  require(order.size() == sizes_.size(), ErrorCode::DimensionMismatch, "permutation length");
  std::vector<std::size_t> out;
  out.reserve(order.size());
  for (auto k : order) out.push_back(sizes_.at(k));
  return build(std::move(out));
}

BlockStructure build_block_structure(const std::vector<std::size_t>& block_sizes) {
  return BlockStructure::build(block_sizes);
}

// ---------------------------------------------------------------------------
// CovarianceModel

Eigen::MatrixXd CovarianceModel::dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p(), p());
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const auto o = static_cast<Eigen::Index>(structure_.offset(k));
    const auto q = static_cast<Eigen::Index>(structure_.size(k));
    out.block(o, o, q, q) = blocks_[k];
  }
  return out;
}

Eigen::VectorXd CovarianceModel::multiply(const Eigen::VectorXd& v) const {
  require(static_cast<std::size_t>(v.size()) == p(), ErrorCode::DimensionMismatch,
          "vector length does not match covariance dimension");
  Eigen::VectorXd out(v.size());
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const auto o = static_cast<Eigen::Index>(structure_.offset(k));
    const auto q = static_cast<Eigen::Index>(structure_.size(k));
    out.segment(o, q).noalias() = blocks_[k] * v.segment(o, q);
  }
  return out;
}

Eigen::VectorXd CovarianceModel::eigenvalues() const {
  Eigen::VectorXd out(p());
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(blocks_[k], Eigen::EigenvaluesOnly);
    out.segment(static_cast<Eigen::Index>(structure_.offset(k)), es.eigenvalues().size()) =
        es.eigenvalues();
  }
  return out;
}

CovarianceModel CovarianceModel::permuted(const std::vector<std::size_t>& order) const {
  std::vector<Eigen::MatrixXd> b;
  b.reserve(order.size());
  for (auto k : order) b.push_back(blocks_.at(k));
  return build_covariance(structure_.permuted(order), b);
}

Eigen::MatrixXd generate_block(const BlockGenerator& gen, std::size_t size) {
  const auto q = static_cast<Eigen::Index>(size);
  switch (gen.kind) {
    case BlockGenerator::Kind::Identity:
      return Eigen::MatrixXd::Identity(q, q);
    case BlockGenerator::Kind::Ar1: {
      if (!gen.segment_rhos.empty()) {
        require(gen.segment >= 1, ErrorCode::InvalidArgument, "ar1 segment must be >= 1");
        for (double r : gen.segment_rhos)
          require(std::abs(r) < 1.0, ErrorCode::InvalidArgument, "ar1 requires |rho| < 1");
        const auto seg = static_cast<Eigen::Index>(gen.segment);
        const auto len = static_cast<Eigen::Index>(gen.segment_rhos.size());
        Eigen::MatrixXd m = Eigen::MatrixXd::Identity(q, q);
        for (Eigen::Index i = 0; i < q; ++i) {
          double c = 1.0;
          for (Eigen::Index j = i + 1; j < q && c != 0.0; ++j) {
            c *= gen.segment_rhos[static_cast<std::size_t>((j / seg) % len)];
            m(i, j) = m(j, i) = c;
          }
        }
        return m;
      }
      require(std::abs(gen.rho) < 1.0, ErrorCode::InvalidArgument, "ar1 requires |rho| < 1");
      Eigen::MatrixXd m(q, q);
      for (Eigen::Index i = 0; i < q; ++i)
        for (Eigen::Index j = 0; j < q; ++j)
          m(i, j) = std::pow(gen.rho, static_cast<double>(std::abs(i - j)));
      return m;
    }
    case BlockGenerator::Kind::Exchangeable: {
      Eigen::MatrixXd m = Eigen::MatrixXd::Constant(q, q, gen.rho);
      m.diagonal().setOnes();
      return m;
    }
    case BlockGenerator::Kind::Explicit:
      require(gen.matrix.rows() == q && gen.matrix.cols() == q, ErrorCode::DimensionMismatch,
              "explicit template is " + std::to_string(gen.matrix.rows()) + "x" +
                  std::to_string(gen.matrix.cols()) + ", block size is " + std::to_string(size));
      return gen.matrix;
  }
  return {};
}

CovarianceModel build_covariance(const BlockStructure& structure,
                                 const std::vector<Eigen::MatrixXd>& templates,
                                 std::optional<EigenBand> band) {
  require(templates.size() == structure.num_blocks(), ErrorCode::DimensionMismatch,
          "got " + std::to_string(templates.size()) + " templates for " +
              std::to_string(structure.num_blocks()) + " blocks");
  std::vector<Eigen::MatrixXd> blocks;
  blocks.reserve(templates.size());
  for (std::size_t k = 0; k < templates.size(); ++k) {
    const auto q = static_cast<Eigen::Index>(structure.size(k));
    const Eigen::MatrixXd& t = templates[k];
    const std::string where = "block " + std::to_string(k);
    require(t.rows() == q && t.cols() == q, ErrorCode::DimensionMismatch,
            where + " template is " + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) +
                ", expected " + std::to_string(q));
    require(t.allFinite(), ErrorCode::InvalidArgument, where + " has non-finite entries");
    const double scale = std::max(1.0, t.cwiseAbs().maxCoeff());
    require((t - t.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, ErrorCode::InvalidArgument,
            where + " is not symmetric");
    require((t.diagonal().array() > 0.0).all(), ErrorCode::NotPositiveDefinite,
            where + " has a non-positive diagonal entry");

    // Correlation form: D^{-1/2} T D^{-1/2}, symmetrized, unit diagonal exactly.
    const Eigen::VectorXd inv_sd = t.diagonal().array().sqrt().inverse();
    Eigen::MatrixXd c = inv_sd.asDiagonal() * t * inv_sd.asDiagonal();
    c = 0.5 * (c + c.transpose()).eval();
    c.diagonal().setOnes();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    require(lo > kPsdTolerance, ErrorCode::NotPositiveDefinite,
            where + " has minimum eigenvalue " + textio::format_double(lo));
    if (band) {
      require(lo >= band->lo && hi <= band->hi, ErrorCode::NotPositiveDefinite,
              where + " eigenvalues [" + textio::format_double(lo) + ", " + textio::format_double(hi) +
                  "] fall outside the configured band");
    }
    blocks.push_back(std::move(c));
  }
  return CovarianceModel(structure, std::move(blocks));
}

CovarianceModel build_covariance(const BlockStructure& structure,
                                 const std::vector<BlockGenerator>& generators,
                                 std::optional<EigenBand> band) {
  require(generators.size() == 1 || generators.size() == structure.num_blocks(),
          ErrorCode::DimensionMismatch, "need one generator or one per block");
  std::vector<Eigen::MatrixXd> templates;
  templates.reserve(structure.num_blocks());
  for (std::size_t k = 0; k < structure.num_blocks(); ++k) {
    const auto& gen = generators.size() == 1 ? generators.front() : generators[k];
    templates.push_back(generate_block(gen, structure.size(k)));
  }
  return build_covariance(structure, templates, band);
}

// ---------------------------------------------------------------------------
// BlockFactor

Eigen::VectorXd BlockFactor::multiply(const Eigen::VectorXd& v) const {
  require(static_cast<std::size_t>(v.size()) == structure_.p(), ErrorCode::DimensionMismatch,
          "vector length does not match factor dimension");
  Eigen::VectorXd out(v.size());
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    const auto o = static_cast<Eigen::Index>(structure_.offset(k));
    const auto q = static_cast<Eigen::Index>(structure_.size(k));
    out.segment(o, q).noalias() = factors_[k] * v.segment(o, q);
  }
  return out;
}

BlockFactor block_sqrt(const CovarianceModel& cov) {
  std::vector<Eigen::MatrixXd> factors;
  factors.reserve(cov.blocks().size());
  for (std::size_t k = 0; k < cov.blocks().size(); ++k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov.block(k));
    require(es.info() == Eigen::Success, ErrorCode::NotPositiveDefinite,
            "eigen decomposition failed for block " + std::to_string(k));
    require(es.eigenvalues().minCoeff() > kPsdTolerance, ErrorCode::NotPositiveDefinite,
            "block " + std::to_string(k));
    const Eigen::MatrixXd& v = es.eigenvectors();
    Eigen::MatrixXd f = v * es.eigenvalues().cwiseSqrt().asDiagonal() * v.transpose();
    factors.push_back(0.5 * (f + f.transpose()));
  }
  return BlockFactor(cov.structure(), std::move(factors));
}

// ---------------------------------------------------------------------------
// Spec documents

namespace {

BlockGenerator generator_from_json(const nlohmann::json& j) {
  BlockGenerator g;
  const std::string kind = j.value("kind", std::string("identity"));
  if (kind == "identity") {
    g.kind = BlockGenerator::Kind::Identity;
  } else if (kind == "ar1") {
    g.kind = BlockGenerator::Kind::Ar1;
    if (j.at("rho").is_array()) {
      g.segment_rhos = j.at("rho").get<std::vector<double>>();
      require(!g.segment_rhos.empty(), ErrorCode::InvalidArgument, "ar1 rho list is empty");
      g.segment = j.value("segment", std::size_t{1});
    } else {
      g.rho = j.at("rho").get<double>();
    }
  } else if (kind == "exchangeable") {
    g.kind = BlockGenerator::Kind::Exchangeable;
    g.rho = j.at("rho").get<double>();
  } else {
    fail(ErrorCode::ParseError, "unknown block kind '" + kind + "'");
  }
  return g;
}

}  // namespace

CovarianceModel covariance_from_json(const std::string& json_text, const std::string& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("covariance spec: ") + e.what());
  }
  try {
    if (doc.contains("blocks")) {
      std::vector<std::size_t> sizes;
      std::vector<BlockGenerator> gens;
      for (const auto& b : doc.at("blocks")) {
        const auto size = b.at("size").get<long long>();
        require(size >= 1, ErrorCode::InvalidArgument, "block size must be >= 1");
        sizes.push_back(static_cast<std::size_t>(size));
        gens.push_back(generator_from_json(b));
      }
      return build_covariance(BlockStructure::build(std::move(sizes)), gens);
    }
    if (doc.value("kind", std::string()) == "explicit") {
      std::filesystem::path file = doc.at("file").get<std::string>();
      if (file.is_relative()) file = std::filesystem::path(base_dir) / file;
      auto mats = read_block_matrices(file.string());
      std::vector<std::size_t> sizes;
      for (const auto& m : mats) sizes.push_back(static_cast<std::size_t>(m.rows()));
      return build_covariance(BlockStructure::build(std::move(sizes)), mats);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("covariance spec: ") + e.what());
  }
  fail(ErrorCode::ParseError, "covariance spec needs a \"blocks\" list or kind \"explicit\"");
}

CovarianceModel load_covariance_spec(const std::string& path) {
  const auto dir = std::filesystem::path(path).parent_path();
  return covariance_from_json(textio::read_file(path), dir.empty() ? "." : dir.string());
}

std::vector<Eigen::MatrixXd> read_block_matrices(const std::string& path) {
  const std::string text = textio::read_file(path);
  std::vector<Eigen::MatrixXd> out;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;

  auto flush = [&]() {
    if (rows.empty()) return;
    const auto q = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd m(q, q);
    for (Eigen::Index i = 0; i < q; ++i) {
      require(static_cast<Eigen::Index>(rows[i].size()) == q, ErrorCode::ParseError,
              path + ": block ending at line " + std::to_string(line_no) + " is not square");
      for (Eigen::Index j = 0; j < q; ++j) m(i, j) = rows[i][j];
    }
    out.push_back(std::move(m));
    rows.clear();
  };

  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = textio::split_ws(line);
    if (fields.empty()) {
      flush();
      continue;
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) row.push_back(textio::parse_double(f, path + ":" + std::to_string(line_no)));
    rows.push_back(std::move(row));
  }
  flush();
  require(!out.empty(), ErrorCode::ParseError, path + ": no block matrices found");
  return out;
}

void write_block_matrices(const CovarianceModel& cov, const std::string& path) {
  std::string s;
  for (std::size_t k = 0; k < cov.blocks().size(); ++k) {
    if (k) s += '\n';
    const auto& b = cov.block(k);
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      for (Eigen::Index j = 0; j < b.cols(); ++j) {
        if (j) s += '\t';
        s += textio::format_double(b(i, j));
      }
      s += '\n';
    }
  }
  textio::write_file(path, s);
}

}  // namespace ldsc
