#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sgopt {

/// Malformed input; carries the 1-based line and column of the offending token.
class DatasetError : public std::runtime_error {
 public:
  DatasetError(const std::string& what, std::size_t line, std::size_t column);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct Dataset {
  Eigen::MatrixXd features;  // rows x d
  Eigen::VectorXd targets;

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

enum class DataFormat { libsvm, csv };

DataFormat parse_data_format(const std::string& name);

/// `label idx:val idx:val ...`, 1-based ascending indices. Missing entries are
/// zero. `dim` forces the feature count; 0 infers it from the largest index.
Dataset read_libsvm(std::istream& in, Eigen::Index dim = 0);

struct CsvOptions {
  bool header = false;
  char delimiter = ',';
};

/// Last column is the target; every other column is a feature.
Dataset read_csv(std::istream& in, const CsvOptions& options = {});

Dataset load_dataset(const std::filesystem::path& path, DataFormat format, const CsvOptions& csv = {});

/// Writes header-less CSV (features..., target) in shortest round-trip form.
void write_csv(std::ostream& out, const Dataset& data);

/// Replaces integer-coded column `column` by one indicator column per distinct
/// value (ascending), inserted at the same position.
Dataset one_hot_encode(const Dataset& data, Eigen::Index column);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

/// The last `test_rows` rows become the test set.
TrainTestSplit split_train_test(const Dataset& data, Eigen::Index test_rows);

/// Resolves a split given either as a row count (>= 1) or a fraction in [0, 1).
Eigen::Index resolve_test_rows(const Dataset& data, double split);

/// Per-column affine map fitted on training data.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // columns with zero spread keep scale 1
  double target_mean = 0.0;

  static Standardizer fit(const Dataset& train);
  void apply(Dataset& data) const;
};

/// Contiguous row ranges [begin, end), one per node. The remainder is handed
/// out one row per node starting from node 0.
std::vector<std::pair<Eigen::Index, Eigen::Index>> partition_contiguous(Eigen::Index rows, int node_count);

/// Synthetic stand-in shaped like the Abalone regression data: 4177 rows, an
/// integer-coded sex column (1/2/3) followed by 7 positively correlated size and
/// weight measurements, target = ring count.
Dataset synthetic_abalone(std::uint64_t seed);

}  // namespace sgopt
