#include "ldsc/sumstats.hpp"

#include <cmath>
#include <sstream>

#include "ldsc/error.hpp"
#include "ldsc/textio.hpp"

namespace ldsc {

SummaryStats marginal_stats(const Cohort& cohort, std::string trait_id) {
  require(cohort.panel != nullptr, ErrorCode::InvalidArgument, "cohort has no panel");
  return marginal_stats(*cohort.panel, cohort.rows, cohort.phenotype, std::move(trait_id));
}

SummaryStats marginal_stats(const GenotypePanel& panel, const std::vector<Eigen::Index>& rows,
                            const Eigen::VectorXd& phenotype, std::string trait_id) {
  require(rows.size() == static_cast<std::size_t>(phenotype.size()), ErrorCode::DimensionMismatch,
          "phenotype length does not match the cohort row count");
  require(rows.size() >= 2, ErrorCode::InsufficientSamples, "summary statistics need n >= 2");

  // Scatter the phenotype into a panel-length vector so one X^T y product
  // covers any row subset, including the factored representation.
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(panel.n()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && static_cast<std::size_t>(rows[i]) < panel.n(), ErrorCode::DimensionMismatch,
            "cohort row index out of range");
    y[rows[i]] += phenotype[static_cast<Eigen::Index>(i)];
  }
  SummaryStats out;
  out.beta = panel.transpose_multiply(y) / static_cast<double>(rows.size());
  out.n = rows.size();
  out.trait_id = std::move(trait_id);
  return out;
}

WVector make_w(const SummaryStats& a, const SummaryStats* b) {
  WVector out;
  if (b == nullptr) {
    out.values = a.beta.array().square();
    out.kind = WVector::Kind::Squared;
    return out;
  }
  require(a.p() == b->p(), ErrorCode::LengthMismatch,
          "summary statistics have lengths " + std::to_string(a.p()) + " and " + std::to_string(b->p()));
  out.values = a.beta.cwiseProduct(b->beta);
  out.kind = WVector::Kind::Product;
  return out;
}

void write_sumstats(const SummaryStats& stats, const std::string& path) {
  require(stats.variant_ids.empty() || stats.variant_ids.size() == stats.p(), ErrorCode::LengthMismatch,
          "variant id count does not match beta length");
  const std::string n = std::to_string(stats.n);
  const double root_n = std::sqrt(static_cast<double>(stats.n));
  std::string s = "SNP\tN\tBETA\tZ\n";
  for (std::size_t j = 0; j < stats.p(); ++j) {
    const double beta = stats.beta[static_cast<Eigen::Index>(j)];
    s += stats.variant_ids.empty() ? textio::variant_id(j) : stats.variant_ids[j];
    s += '\t';
    s += n;
    s += '\t';
    s += textio::format_double(beta);
    s += '\t';
    s += textio::format_double(beta * root_n);
    s += '\n';
  }
  textio::write_file(path, s);
}

SummaryStats read_sumstats(const std::string& path) {
  const std::string text = textio::read_file(path);
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::ParseError, path + ":1: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = textio::split(line, '\t');
  const int c_snp = textio::find_column(header, "SNP");
  const int c_n = textio::find_column(header, "N");
  const int c_beta = textio::find_column(header, "BETA");
  for (auto [col, name] : {std::pair{c_snp, "SNP"}, std::pair{c_n, "N"}, std::pair{c_beta, "BETA"}})
    require(col >= 0, ErrorCode::MissingColumn, path + ": no " + std::string(name) + " column");

  SummaryStats out;
  std::vector<double> beta;
  bool have_n = false;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto fields = textio::split(line, '\t');
    require(fields.size() == header.size(), ErrorCode::ParseError,
            where + ": expected " + std::to_string(header.size()) + " fields, got " +
                std::to_string(fields.size()));
    const long long n = textio::parse_int(fields[static_cast<std::size_t>(c_n)], where);
    require(n >= 2, ErrorCode::ParseError, where + ": N must be at least 2");
    if (!have_n) {
      out.n = static_cast<std::size_t>(n);
      have_n = true;
    } else {
      require(static_cast<std::size_t>(n) == out.n, ErrorCode::ParseError, where + ": N differs from earlier rows");
    }
    out.variant_ids.emplace_back(fields[static_cast<std::size_t>(c_snp)]);
    beta.push_back(textio::parse_double(fields[static_cast<std::size_t>(c_beta)], where));
  }
  require(have_n, ErrorCode::ParseError, path + ": no data rows");
  out.beta = Eigen::Map<Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
  out.trait_id = path;
  return out;
}

}  // namespace ldsc
