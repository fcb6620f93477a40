#pragma once

// Regression random forest built from exact CART trees, with impurity and
// permutation importance, partial dependence and a JSON model format.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aqd::forest {

/// Dense row-major feature matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  const std::vector<double>& data() const noexcept { return data_; }

  /// Appends a row; the first row fixes the column count when the matrix is empty.
  void append_row(std::span<const double> values);
  /// Rows at `indices`, in that order.
  Matrix select_rows(std::span<const std::size_t> indices) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct ForestParams {
  std::size_t n_trees = 200;
  std::optional<std::size_t> max_depth;  // nullopt = unlimited
  std::size_t min_leaf = 2;
  std::optional<std::size_t> mtry;  // nullopt = ceil(n_features / 3)
  bool bootstrap = true;
  std::uint64_t seed = 42;

  std::size_t resolved_mtry(std::size_t n_features) const;
  /// Throws ConfigError on n_trees == 0, min_leaf == 0 or mtry outside [1, n_features].
  void validate(std::size_t n_features) const;
  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

/// Split nodes send rows with x[feature] <= threshold left. Leaves have feature == -1.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;  // mean training target in the node
  std::uint32_t n = 0;  // training samples (bootstrap multiplicity included)

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> row) const noexcept;
  std::size_t depth() const;
  std::size_t leaf_count() const noexcept;
  friend bool operator==(const Tree&, const Tree&) = default;
};

class Forest {
 public:
  Forest() = default;
  /// Assembles a forest from parts; `importances` empty means all-zero.
  Forest(std::vector<Tree> trees, ForestParams params, std::vector<std::string> feature_names,
         std::vector<double> importances);

  /// Trains `params.n_trees` trees. Tree t draws from a stream seeded by
  /// (params.seed, t), so the result does not depend on `threads`.
  static Forest fit(const Matrix& X, std::span<const double> y, const ForestParams& params,
                    std::vector<std::string> feature_names = {}, std::size_t threads = 1);

  double predict_row(std::span<const double> row) const;
  std::vector<double> predict(const Matrix& X) const;

  const std::vector<Tree>& trees() const noexcept { return trees_; }
  const ForestParams& params() const noexcept { return params_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  std::size_t n_features() const noexcept { return feature_names_.size(); }
  bool oob_available() const noexcept { return params_.bootstrap; }
  /// Normalized impurity importance (sums to 1 unless the forest has no splits).
  const std::vector<double>& importances() const noexcept { return importances_; }
  /// Index of a feature by name; nullopt if absent.
  std::optional<std::size_t> feature_index(std::string_view name) const;

  std::string to_json() const;
  /// Throws SchemaError on an unknown format version or malformed document.
  static Forest from_json(std::string_view text);

  friend bool operator==(const Forest&, const Forest&) = default;

 private:
  std::vector<Tree> trees_;
  ForestParams params_;
  std::vector<std::string> feature_names_;
  std::vector<double> importances_;
};

inline constexpr std::string_view kForestFormat = "aqd.forest/1";

const std::vector<double>& impurity_importance(const Forest& forest);

struct PermutationImportance {
  double baseline_r2 = 0.0;
  std::vector<double> mean_drop;
  std::vector<double> std_drop;
};

/// Mean drop in R^2 when each column is shuffled, over `repeats` seeded shuffles.
PermutationImportance permutation_importance(const Forest& forest, const Matrix& X, std::span<const double> y,
                                             std::size_t repeats, std::uint64_t seed);

/// PD(v) = mean over background rows of predict(row with feature := v).
std::vector<double> partial_dependence(const Forest& forest, std::size_t feature, std::span<const double> grid,
                                       const Matrix& background);
/// Surface over grid_a x grid_b; result(i, j) = PD(grid_a[i], grid_b[j]).
Matrix partial_dependence_2d(const Forest& forest, std::size_t feature_a, std::size_t feature_b,
                             std::span<const double> grid_a, std::span<const double> grid_b,
                             const Matrix& background);

/// Pearson correlation between columns. Entries involving a zero-variance
/// column are NaN.
Matrix pearson_corr_matrix(const Matrix& X);

}  // namespace aqd::forest
