#include "blockqn/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "blockqn/metrics.hpp"

namespace blockqn {

namespace {

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, const std::string& what) {
  std::ostringstream os;
  os << source << ":" << line << ": " << what;
  throw Error(ErrorKind::ParseError, os.str());
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

DatasetStats dataset_stats(const LogisticData& data) {
  DatasetStats st;
  st.n = data.features.rows();
  st.d = data.features.cols();
  st.nnz = data.features.nonZeros();
  for (double b : data.labels)
    if (b > 0.0) ++st.positives;
  return st;
}

LogisticData parse_dataset(std::istream& in, const std::string& source) {
  std::vector<Eigen::Triplet<double>> entries;
  std::vector<double> labels;
  Eigen::Index max_index = 0;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest(line);
    if (const auto hash = rest.find('#'); hash != std::string_view::npos) rest = rest.substr(0, hash);

    std::vector<std::string_view> tokens;
    std::size_t pos = 0;
    while (pos < rest.size()) {
      const std::size_t start = rest.find_first_not_of(" \t\r", pos);
      if (start == std::string_view::npos) break;
      const std::size_t end = rest.find_first_of(" \t\r", start);
      tokens.push_back(rest.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
      pos = end == std::string_view::npos ? rest.size() : end;
    }
    if (tokens.empty()) continue;

    double label = 0.0;
    if (!parse_number(tokens[0], label)) parse_fail(source, line_no, "bad label '" + std::string(tokens[0]) + "'");
    if (label == 1.0) label = 1.0;
    else if (label == 0.0 || label == -1.0) label = -1.0;
    else parse_fail(source, line_no, "label must be one of -1, 0, +1; got '" + std::string(tokens[0]) + "'");

    const auto row = static_cast<Eigen::Index>(labels.size());
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      const std::string_view tok = tokens[i];
      const std::size_t colon = tok.find(':');
      if (colon == std::string_view::npos) parse_fail(source, line_no, "expected index:value, got '" + std::string(tok) + "'");
      long long index = 0;
      double value = 0.0;
      if (!parse_number(tok.substr(0, colon), index) || index < 1)
        parse_fail(source, line_no, "bad feature index in '" + std::string(tok) + "'");
      if (!parse_number(tok.substr(colon + 1), value) || !std::isfinite(value))
        parse_fail(source, line_no, "bad feature value in '" + std::string(tok) + "'");
      max_index = std::max<Eigen::Index>(max_index, static_cast<Eigen::Index>(index));
      if (value != 0.0) entries.emplace_back(row, static_cast<Eigen::Index>(index - 1), value);
    }
    labels.push_back(label);
  }
  if (labels.empty()) throw Error(ErrorKind::EmptyDataset, source + ": no samples");
  if (max_index == 0) throw Error(ErrorKind::EmptyDataset, source + ": no features");

  LogisticData out;
  out.features.resize(static_cast<Eigen::Index>(labels.size()), max_index);
  out.features.setFromTriplets(entries.begin(), entries.end());
  out.features.makeCompressed();
  out.labels = std::move(labels);
  return out;
}

LogisticData load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open dataset '" + path + "'");
  return parse_dataset(in, path);
}

LogisticProblem synth_logistic(Eigen::Index n, Eigen::Index d, std::uint64_t seed, double gamma) {
  if (n < 1 || d < 1) throw Error(ErrorKind::Config, "synthetic logistic needs n, d >= 1");
  Rng rng(seed);
  Vector planted(d);
  for (Eigen::Index j = 0; j < d; ++j) planted(j) = rng.normal();

  Matrix rows(n, d);
  std::vector<double> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) rows(i, j) = rng.normal();
    rows.row(i).normalize();
    double label = rows.row(i).dot(planted) >= 0.0 ? 1.0 : -1.0;
    if (rng.uniform() < 0.1) label = -label;
    labels[static_cast<std::size_t>(i)] = label;
  }
  LogisticProblem out;
  out.data.features = rows.sparseView();
  out.data.features.makeCompressed();
  out.data.labels = std::move(labels);
  out.gamma = gamma;
  return out;
}

QuadraticObjective make_quadratic(Eigen::Index d, double kappa, std::uint64_t seed) {
  Rng rng(seed);
  const Matrix q = random_orthogonal(d, rng);
  Vector spectrum(d);
  for (Eigen::Index i = 0; i < d; ++i) spectrum(i) = std::exp(std::log(kappa) * rng.uniform());
  spectrum(0) = 1.0;
  if (d > 1) spectrum(d - 1) = kappa;
  Vector b(d);
  for (Eigen::Index i = 0; i < d; ++i) b(i) = rng.normal();
  return QuadraticObjective(SymMatrix(q * spectrum.asDiagonal() * q.transpose()), std::move(b));
}

}  // namespace blockqn
