#include "ldsc/ldscores.hpp"

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "ldsc/error.hpp"
#include "ldsc/textio.hpp"

namespace ldsc {

LdScoreVector true_ld_scores(const CovarianceModel& a, const CovarianceModel* b) {
  if (b != nullptr)
    require(a.structure() == b->structure(), ErrorCode::StructureMismatch,
            "covariance models have different block structures");
  LdScoreVector out;
  out.values.resize(static_cast<Eigen::Index>(a.p()));
  out.kind = b ? ScoreKind::Cross : ScoreKind::Within;
  out.source = ScoreSource::True;
  out.structure = a.structure();
  for (std::size_t k = 0; k < a.structure().num_blocks(); ++k) {
    const auto o = static_cast<Eigen::Index>(a.structure().offset(k));
    const auto& sa = a.block(k);
    if (b)
      out.values.segment(o, sa.rows()) = sa.cwiseProduct(b->block(k)).rowwise().sum();
    else
      out.values.segment(o, sa.rows()) = sa.array().square().rowwise().sum();
  }
  return out;
}

BlockMoments block_moments(const GenotypePanel& panel, const BlockStructure& structure) {
  require(structure.p() == panel.p(), ErrorCode::StructureMismatch,
          "structure covers " + std::to_string(structure.p()) + " variants, panel has " +
              std::to_string(panel.p()));
  BlockMoments out;
  out.structure = structure;
  out.n = panel.n();
  out.gram.reserve(structure.num_blocks());
  for (std::size_t k = 0; k < structure.num_blocks(); ++k) {
    const Eigen::MatrixXd cols = panel.columns(structure.offset(k), structure.size(k));
    const auto q = cols.cols();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(q, q);
    g.selfadjointView<Eigen::Lower>().rankUpdate(cols.transpose());
    out.gram.push_back(g.selfadjointView<Eigen::Lower>());
  }
  return out;
}

BlockMoments pool_moments(const BlockMoments& a, const BlockMoments& b) {
  require(a.structure == b.structure, ErrorCode::StructureMismatch, "moments use different block structures");
  BlockMoments out;
  out.structure = a.structure;
  out.n = a.n + b.n;
  out.gram.reserve(a.gram.size());
  for (std::size_t k = 0; k < a.gram.size(); ++k) out.gram.push_back(a.gram[k] + b.gram[k]);
  return out;
}

std::vector<Eigen::MatrixXd> sample_covariances(const BlockMoments& m) {
  require(m.n >= 2, ErrorCode::DegeneratePanel, "LD estimation needs a reference panel with n >= 2");
  std::vector<Eigen::MatrixXd> out;
  out.reserve(m.gram.size());
  const double inv_n = 1.0 / static_cast<double>(m.n);
  for (const auto& g : m.gram) out.push_back(g * inv_n);
  return out;
}

LdScoreVector scores_from_moments(const BlockMoments& a, const BlockMoments* b) {
  if (b != nullptr)
    require(a.structure == b->structure, ErrorCode::StructureMismatch, "moments use different block structures");
  const auto cov_a = sample_covariances(a);
  const auto cov_b = b ? sample_covariances(*b) : std::vector<Eigen::MatrixXd>{};
  LdScoreVector out;
  out.values.resize(static_cast<Eigen::Index>(a.structure.p()));
  out.kind = b ? ScoreKind::Cross : ScoreKind::Within;
  out.source = ScoreSource::Estimated;
  out.panel_n = b ? std::vector<std::size_t>{a.n, b->n} : std::vector<std::size_t>{a.n};
  out.structure = a.structure;
  for (std::size_t k = 0; k < cov_a.size(); ++k) {
    const auto o = static_cast<Eigen::Index>(a.structure.offset(k));
    const auto q = cov_a[k].rows();
    if (b)
      out.values.segment(o, q) = cov_a[k].cwiseProduct(cov_b[k]).rowwise().sum();
    else
      out.values.segment(o, q) = cov_a[k].array().square().rowwise().sum();
  }
  return out;
}

LdScoreVector estimate_ld_scores(const GenotypePanel& a, const GenotypePanel* b, const BlockStructure& structure) {
  require(a.n() >= 2, ErrorCode::DegeneratePanel, "reference panel needs n >= 2");
  if (b == nullptr) return scores_from_moments(block_moments(a, structure));
  require(b->n() >= 2, ErrorCode::DegeneratePanel, "reference panel needs n >= 2");
  require(b->p() == a.p(), ErrorCode::StructureMismatch, "reference panels differ in width");
  const BlockMoments mb = block_moments(*b, structure);
  return scores_from_moments(block_moments(a, structure), &mb);
}

LdScoreVector pooled_ld_scores(const GenotypePanel& a, const GenotypePanel& b, const BlockStructure& structure) {
  require(b.p() == a.p(), ErrorCode::StructureMismatch, "reference panels differ in width");
  LdScoreVector out = scores_from_moments(pool_moments(block_moments(a, structure), block_moments(b, structure)));
  out.panel_n = {a.n(), b.n()};
  out.pooled = true;
  return out;
}

namespace {

const char* kind_name(ScoreKind k) { return k == ScoreKind::Cross ? "cross" : "within"; }
const char* source_name(ScoreSource s) { return s == ScoreSource::True ? "true" : "estimated"; }

}  // namespace

void write_ldscores(const LdScoreVector& scores, const std::string& path, const nlohmann::ordered_json& provenance) {
  require(scores.structure.p() == scores.p(), ErrorCode::StructureMismatch,
          "score vector length does not match its block structure");
  std::string s = "CHR\tSNP\tBP\tL2\n";
  for (std::size_t k = 0; k < scores.structure.num_blocks(); ++k) {
    const std::string chr = std::to_string(k + 1);
    for (std::size_t j = scores.structure.offset(k); j < scores.structure.offset(k) + scores.structure.size(k); ++j) {
      s += chr;
      s += '\t';
      s += textio::variant_id(j);
      s += '\t';
      s += std::to_string(j + 1);
      s += '\t';
      s += textio::format_double(scores.values[static_cast<Eigen::Index>(j)]);
      s += '\n';
    }
  }
  textio::write_file(path, s);

  nlohmann::ordered_json meta;
  meta["kind"] = kind_name(scores.kind);
  meta["source"] = source_name(scores.source);
  meta["pooled"] = scores.pooled;
  meta["panel_n"] = scores.panel_n;
  if (!provenance.is_null()) meta["config"] = provenance;
  textio::write_file(path + ".json", meta.dump(2) + "\n");
}

LdScoreVector read_ldscores(const std::string& path) {
  const std::string text = textio::read_file(path);
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::ParseError, path + ":1: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = textio::split_ws(line);
  const int c_chr = textio::find_column(header, "CHR");
  const int c_l2 = textio::find_column(header, "L2");
  require(c_chr >= 0, ErrorCode::MissingColumn, path + ": no CHR column");
  require(c_l2 >= 0, ErrorCode::MissingColumn, path + ": no L2 column");

  std::vector<double> values;
  std::vector<std::size_t> sizes;
  std::vector<std::string> seen_chr;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto fields = textio::split_ws(line);
    require(fields.size() == header.size(), ErrorCode::ParseError,
            where + ": expected " + std::to_string(header.size()) + " fields, got " +
                std::to_string(fields.size()));
    const std::string chr(fields[static_cast<std::size_t>(c_chr)]);
    if (seen_chr.empty() || seen_chr.back() != chr) {
      for (const auto& c : seen_chr)
        require(c != chr, ErrorCode::ParseError, where + ": block " + chr + " is not contiguous");
      seen_chr.push_back(chr);
      sizes.push_back(0);
    }
    ++sizes.back();
    values.push_back(textio::parse_double(fields[static_cast<std::size_t>(c_l2)], where));
  }
  require(!values.empty(), ErrorCode::ParseError, path + ": no data rows");

  LdScoreVector out;
  out.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  out.structure = BlockStructure::build(sizes);
  out.source = ScoreSource::Estimated;

  const std::string meta_path = path + ".json";
  if (std::filesystem::exists(meta_path)) {
    try {
      const auto meta = nlohmann::json::parse(textio::read_file(meta_path));
      out.kind = meta.value("kind", std::string("within")) == "cross" ? ScoreKind::Cross : ScoreKind::Within;
      out.source = meta.value("source", std::string("estimated")) == "true" ? ScoreSource::True
                                                                             : ScoreSource::Estimated;
      out.pooled = meta.value("pooled", false);
      out.panel_n = meta.value("panel_n", std::vector<std::size_t>{});
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::ParseError, meta_path + ": " + e.what());
    }
  }
  return out;
}

}  // namespace ldsc
