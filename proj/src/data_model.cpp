#include "penscore/data_model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "penscore/errors.hpp"

namespace penscore {

Dataset standardize(const Eigen::Ref<const Eigen::MatrixXd>& raw_X,
                    const Eigen::Ref<const Eigen::VectorXd>& raw_y,
                    std::vector<std::string> names) {
  const Eigen::Index n = raw_X.rows();
  const Eigen::Index d = raw_X.cols();
  if (raw_y.size() != n) throw InvalidArgument("response length does not match design rows");
  if (n < 2) throw InvalidArgument("need at least two observations");
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != d)
    throw InvalidArgument("number of column names does not match design columns");

  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(raw_y(i))) throw NonFiniteInput(i, d);
    for (Eigen::Index j = 0; j < d; ++j)
      if (!std::isfinite(raw_X(i, j))) throw NonFiniteInput(i, j);
  }

  Dataset out;
  out.y = raw_y.array() - raw_y.mean();
  out.X.resize(n, d);
  const double dn = static_cast<double>(n);
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::VectorXd c = raw_X.col(j).array() - raw_X.col(j).mean();
    const double ss = c.squaredNorm();
    const double scale = raw_X.col(j).cwiseAbs().maxCoeff();
    // a constant column leaves only rounding noise after centering
    if (!(ss > 0.0) || std::sqrt(ss / dn) <= 1e-13 * std::max(scale, 1e-300))
      throw ZeroVarianceColumn(j);
    out.X.col(j) = c * std::sqrt(dn / ss);
  }
  if (names.empty()) {
    names.reserve(d);
    for (Eigen::Index j = 0; j < d; ++j) names.push_back("x" + std::to_string(j + 1));
  }
  out.names = std::move(names);
  return out;
}

std::vector<Eigen::Index> complement_indices(Eigen::Index d, Eigen::Index j) {
  std::vector<Eigen::Index> idx;
  idx.reserve(d > 0 ? d - 1 : 0);
  for (Eigen::Index k = 0; k < d; ++k)
    if (k != j) idx.push_back(k);
  return idx;
}

FeatureSplit split(const Dataset& dataset, Eigen::Index j) {
  if (j < 0 || j >= dataset.d())
    throw IndexOutOfRange("feature index " + std::to_string(j) + " outside [0, " +
                          std::to_string(dataset.d()) + ")");
  FeatureSplit s;
  s.j = j;
  s.x = dataset.X.col(j);
  s.Z = dataset.X(Eigen::all, complement_indices(dataset.d(), j));
  return s;
}

namespace {

std::vector<std::string> split_csv_record(const std::string& line, std::size_t row) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted) throw ParseError("unterminated quote on row " + std::to_string(row));
  fields.push_back(std::move(cur));
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

RawTable read_csv(std::istream& in) {
  RawTable table;
  std::string line;
  std::size_t row = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (row == 0 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.empty()) {
      ++row;
      continue;
    }
    auto fields = split_csv_record(line, row + 1);
    if (table.header.empty()) {
      for (auto& f : fields) table.header.push_back(trim(f));
      ++row;
      continue;
    }
    if (fields.size() != table.header.size())
      throw ParseError("row " + std::to_string(row + 1) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(table.header.size()));
    std::vector<double> vals(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string f = trim(fields[c]);
      const char* b = f.data();
      const char* e = f.data() + f.size();
      auto [ptr, ec] = std::from_chars(b, e, vals[c]);
      if (f.empty() || ec != std::errc() || ptr != e || !std::isfinite(vals[c]))
        throw ParseError("cannot parse row " + std::to_string(row + 1) + ", column " +
                         std::to_string(c + 1) + " ('" + table.header[c] + "'): '" + f + "'");
    }
    rows.push_back(std::move(vals));
    ++row;
  }
  if (table.header.empty()) throw ParseError("empty CSV input");
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return table;
}

RawTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path);
  return read_csv(in);
}

Dataset dataset_from_table(const RawTable& table, const std::string& response) {
  Eigen::Index resp = -1;
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (table.header[c] == response) resp = static_cast<Eigen::Index>(c);
  if (resp < 0) throw InvalidArgument("response column '" + response + "' not found");
  const auto d = static_cast<Eigen::Index>(table.header.size()) - 1;
  const auto cols = complement_indices(d + 1, resp);
  std::vector<std::string> names;
  for (auto c : cols) names.push_back(table.header[static_cast<std::size_t>(c)]);
  return standardize(table.values(Eigen::all, cols), table.values.col(resp), std::move(names));
}

}  // namespace penscore
