#include "sgopt/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "sgopt/random.hpp"

namespace sgopt {

DatasetError::DatasetError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

DataFormat parse_data_format(const std::string& name) {
  if (name == "libsvm" || name == "svmlight") return DataFormat::libsvm;
  if (name == "csv") return DataFormat::csv;
  throw std::invalid_argument("unknown data format '" + name + "' (expected libsvm or csv)");
}

namespace {

bool parse_double(std::string_view token, double& out) {
  if (token.empty()) return false;
  // from_chars rejects a leading '+'.
  if (token.front() == '+') token.remove_prefix(1);
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool parse_index(std::string_view token, long& out) {
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

Dataset from_rows(const std::vector<std::vector<double>>& rows, const std::vector<double>& targets, Eigen::Index dim) {
  Dataset d;
  d.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), dim);
  d.targets.resize(static_cast<Eigen::Index>(targets.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      d.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    d.targets(static_cast<Eigen::Index>(r)) = targets[r];
  }
  return d;
}

}  // namespace

Dataset read_libsvm(std::istream& in, Eigen::Index dim) {
  struct Entry {
    long index;
    double value;
  };
  std::vector<std::vector<Entry>> rows;
  std::vector<double> targets;
  long max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (is_blank(line)) continue;

    std::vector<Entry> entries;
    std::size_t pos = 0;
    bool have_label = false;
    long last_index = 0;
    while (pos < line.size()) {
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      if (pos >= line.size()) break;
      std::size_t end = pos;
      while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
      std::string_view token(line.data() + pos, end - pos);
      const std::size_t column = pos + 1;
      if (!have_label) {
        double label = 0.0;
        if (!parse_double(token, label)) throw DatasetError("invalid label '" + std::string(token) + "'", line_no, column);
        targets.push_back(label);
        have_label = true;
      } else {
        const auto colon = token.find(':');
        if (colon == std::string_view::npos)
          throw DatasetError("expected idx:value, got '" + std::string(token) + "'", line_no, column);
        long index = 0;
        double value = 0.0;
        if (!parse_index(token.substr(0, colon), index) || index < 1)
          throw DatasetError("invalid feature index in '" + std::string(token) + "'", line_no, column);
        if (index <= last_index)
          throw DatasetError("feature indices must be strictly ascending", line_no, column);
        if (!parse_double(token.substr(colon + 1), value))
          throw DatasetError("invalid feature value in '" + std::string(token) + "'", line_no, column + colon + 1);
        last_index = index;
        max_index = std::max(max_index, index);
        entries.push_back({index, value});
      }
      pos = end;
    }
    rows.push_back(std::move(entries));
  }
  if (rows.empty()) throw DatasetError("no data rows", line_no, 0);
  if (dim == 0) dim = static_cast<Eigen::Index>(max_index);
  if (max_index > dim) throw DatasetError("feature index exceeds requested dimension", line_no, 0);

  Dataset d;
  d.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), dim);
  d.targets = Eigen::Map<const Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(targets.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (const Entry& e : rows[r]) d.features(static_cast<Eigen::Index>(r), e.index - 1) = e.value;
  return d;
}

Dataset read_csv(std::istream& in, const CsvOptions& options) {
  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  std::size_t width = 0;
  std::string line;
  std::size_t line_no = 0;
  bool skip_header = options.header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    if (skip_header) {
      skip_header = false;
      continue;
    }
    std::vector<double> cells;
    std::size_t start = 0;
    std::size_t field = 0;
    while (true) {
      const std::size_t stop = line.find(options.delimiter, start);
      std::string_view raw(line.data() + start, (stop == std::string::npos ? line.size() : stop) - start);
      while (!raw.empty() && std::isspace(static_cast<unsigned char>(raw.front()))) raw.remove_prefix(1);
      while (!raw.empty() && std::isspace(static_cast<unsigned char>(raw.back()))) raw.remove_suffix(1);
      ++field;
      double v = 0.0;
      if (!parse_double(raw, v))
        throw DatasetError("non-numeric cell '" + std::string(raw) + "' in field " + std::to_string(field), line_no,
                           start + 1);
      cells.push_back(v);
      if (stop == std::string::npos) break;
      start = stop + 1;
    }
    if (cells.size() < 2) throw DatasetError("need at least one feature and a target", line_no, 1);
    if (width == 0) width = cells.size();
    if (cells.size() != width)
      throw DatasetError("expected " + std::to_string(width) + " fields, found " + std::to_string(cells.size()), line_no,
                         1);
    targets.push_back(cells.back());
    cells.pop_back();
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw DatasetError("no data rows", line_no, 0);
  return from_rows(rows, targets, static_cast<Eigen::Index>(width - 1));
}

Dataset load_dataset(const std::filesystem::path& path, DataFormat format, const CsvOptions& csv) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  return format == DataFormat::libsvm ? read_libsvm(in) : read_csv(in, csv);
}

void write_csv(std::ostream& out, const Dataset& data) {
  char buf[64];
  auto put = [&](double v) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, ptr - buf);
  };
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.dim(); ++c) {
      put(data.features(r, c));
      out << ',';
    }
    put(data.targets(r));
    out << '\n';
  }
}

Dataset one_hot_encode(const Dataset& data, Eigen::Index column) {
  if (column < 0 || column >= data.dim()) throw std::out_of_range("one_hot_encode: column out of range");
  std::map<double, Eigen::Index> levels;
  for (Eigen::Index r = 0; r < data.rows(); ++r) levels.emplace(data.features(r, column), 0);
  Eigen::Index next = 0;
  for (auto& [value, slot] : levels) slot = next++;
  const auto k = static_cast<Eigen::Index>(levels.size());

  Dataset out;
  out.targets = data.targets;
  out.features = Eigen::MatrixXd::Zero(data.rows(), data.dim() - 1 + k);
  out.features.leftCols(column) = data.features.leftCols(column);
  out.features.rightCols(data.dim() - column - 1) = data.features.rightCols(data.dim() - column - 1);
  for (Eigen::Index r = 0; r < data.rows(); ++r) out.features(r, column + levels.at(data.features(r, column))) = 1.0;
  return out;
}

TrainTestSplit split_train_test(const Dataset& data, Eigen::Index test_rows) {
  if (test_rows < 0 || test_rows >= data.rows())
    throw std::invalid_argument("test split of " + std::to_string(test_rows) + " rows leaves no training data (dataset has " +
                                std::to_string(data.rows()) + " rows)");
  const Eigen::Index train_rows = data.rows() - test_rows;
  TrainTestSplit s;
  s.train.features = data.features.topRows(train_rows);
  s.train.targets = data.targets.head(train_rows);
  s.test.features = data.features.bottomRows(test_rows);
  s.test.targets = data.targets.tail(test_rows);
  return s;
}

Eigen::Index resolve_test_rows(const Dataset& data, double split) {
  if (!(split >= 0.0)) throw std::invalid_argument("test split must be nonnegative");
  if (split < 1.0) return static_cast<Eigen::Index>(std::llround(split * static_cast<double>(data.rows())));
  if (split != std::floor(split)) throw std::invalid_argument("test split >= 1 must be a whole row count");
  return static_cast<Eigen::Index>(split);
}

Standardizer Standardizer::fit(const Dataset& train) {
  Standardizer s;
  const double n = static_cast<double>(train.rows());
  s.mean = train.features.colwise().mean().transpose();
  s.scale.resize(train.dim());
  for (Eigen::Index c = 0; c < train.dim(); ++c) {
    const double var = (train.features.col(c).array() - s.mean(c)).square().sum() / n;
    s.scale(c) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  s.target_mean = train.targets.mean();
  return s;
}

void Standardizer::apply(Dataset& data) const {
  for (Eigen::Index c = 0; c < data.dim(); ++c)
    data.features.col(c) = (data.features.col(c).array() - mean(c)) / scale(c);
  data.targets.array() -= target_mean;
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> partition_contiguous(Eigen::Index rows, int node_count) {
  if (node_count < 1) throw std::invalid_argument("partition needs at least one node");
  if (rows < node_count)
    throw std::invalid_argument("cannot give each of " + std::to_string(node_count) + " nodes a row out of " +
                                std::to_string(rows));
  const Eigen::Index base = rows / node_count;
  const Eigen::Index extra = rows % node_count;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> ranges;
  Eigen::Index begin = 0;
  for (int i = 0; i < node_count; ++i) {
    const Eigen::Index len = base + (i < extra ? 1 : 0);
    ranges.emplace_back(begin, begin + len);
    begin += len;
  }
  return ranges;
}

Dataset synthetic_abalone(std::uint64_t seed) {
  constexpr Eigen::Index kRows = 4177;
  RandomStream rng(seed, 0, StreamPurpose::generator);
  Dataset d;
  d.features.resize(kRows, 8);
  d.targets.resize(kRows);
  for (Eigen::Index r = 0; r < kRows; ++r) {
    const double u = rng.uniform();
    const int sex = u < 0.32 ? 1 : (u < 0.63 ? 2 : 3);  // 3 = infant
    const double size = std::clamp(0.52 + 0.12 * rng.normal() - (sex == 3 ? 0.12 : 0.0), 0.08, 0.82);
    const double length = size;
    const double diameter = 0.79 * size + 0.012 * rng.normal();
    const double height = 0.27 * size + 0.015 * rng.normal();
    const double whole = std::max(0.002, 3.6 * std::pow(size, 3.0) * std::exp(0.1 * rng.normal()));
    const double shucked = whole * (0.43 + 0.04 * rng.normal());
    const double viscera = whole * (0.22 + 0.02 * rng.normal());
    const double shell = whole * (0.29 + 0.03 * rng.normal());
    const double rings = std::max(1.0, std::round(3.0 + 8.0 * size + 12.0 * shell - 5.0 * shucked +
                                                  (sex == 3 ? -1.0 : 0.5) + 2.2 * rng.normal()));
    d.features.row(r) << sex, length, diameter, height, whole, shucked, viscera, shell;
    d.targets(r) = rings;
  }
  return d;
}

}  // namespace sgopt
