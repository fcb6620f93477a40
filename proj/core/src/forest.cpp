#include "aqd/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "aqd/errors.hpp"
#include "aqd/evaluation.hpp"
#include "aqd/geodata.hpp"
#include "aqd/random.hpp"
#include "forest_json.hpp"

namespace aqd::forest {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw SchemaError("matrix data size does not match shape");
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && data_.empty()) cols_ = values.size();
  if (values.size() != cols_) {
    throw SchemaError("row has " + std::to_string(values.size()) + " columns, expected " + std::to_string(cols_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto src = row(indices[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

std::size_t ForestParams::resolved_mtry(std::size_t n_features) const {
  if (mtry) return *mtry;
  return std::max<std::size_t>(1, (n_features + 2) / 3);
}

void ForestParams::validate(std::size_t n_features) const {
  if (n_trees == 0) throw ConfigError("n_trees must be at least 1");
  if (min_leaf == 0) throw ConfigError("min_leaf must be at least 1");
  if (max_depth && *max_depth == 0) throw ConfigError("max_depth must be at least 1");
  if (n_features == 0) throw ConfigError("forest needs at least one feature");
  const auto m = resolved_mtry(n_features);
  if (m < 1 || m > n_features) {
    throw ConfigError("mtry " + std::to_string(m) + " outside [1, " + std::to_string(n_features) + "]");
  }
}

double Tree::predict(std::span<const double> row) const noexcept {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& nd = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right);
  }
  return nodes[i].value;
}

std::size_t Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (!nodes[i].is_leaf()) {
      stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
    }
  }
  return best;
}

std::size_t Tree::leaf_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

namespace {

// Shared, read-only view of the training set.
struct TrainingSet {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<std::vector<double>> cols;        // column-major copy of X
  std::vector<std::vector<std::uint32_t>> sorted;  // per feature, all rows by (value, row)
  std::span<const double> y;
};

struct Split {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double score = 0.0;
  double w_left = 0.0, s_left = 0.0, w_right = 0.0, s_right = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const TrainingSet& ts, const ForestParams& params, std::uint64_t seed)
      : ts_(ts), params_(params), mtry_(params.resolved_mtry(ts.p)), rng_(seed) {}

  Tree build(std::vector<double>& importance) {
    importance_ = &importance;
    std::vector<std::uint32_t> count(ts_.n, 0);
    if (params_.bootstrap) {
      for (std::size_t k = 0; k < ts_.n; ++k) ++count[rng_.below(ts_.n)];
    } else {
      std::fill(count.begin(), count.end(), 1u);
    }
    stats_.resize(ts_.n);
    rows_.clear();
    for (std::size_t r = 0; r < ts_.n; ++r) {
      stats_[r] = {static_cast<double>(count[r]), count[r] * ts_.y[r]};
      if (count[r] > 0) rows_.push_back(static_cast<std::uint32_t>(r));
    }
    order_.resize(ts_.p);
    for (std::size_t f = 0; f < ts_.p; ++f) {
      auto& o = order_[f];
      o.clear();
      o.reserve(rows_.size());
      for (auto r : ts_.sorted[f]) {
        if (count[r] > 0) o.push_back(r);
      }
    }
    goes_left_.assign(ts_.n, 0);
    scratch_.resize(rows_.size());
    features_.resize(ts_.p);
    std::iota(features_.begin(), features_.end(), std::size_t{0});

    double w = 0.0, s = 0.0;
    for (auto r : rows_) {
      w += stats_[r].w;
      s += stats_[r].wy;
    }
    tree_.nodes.clear();
    grow(0, rows_.size(), 0, w, s, std::vector<std::uint8_t>(ts_.p, 0));
    return std::move(tree_);
  }

 private:
  struct RowStat {
    double w;   // bootstrap multiplicity
    double wy;  // multiplicity * target
  };

  bool is_pure(std::size_t begin, std::size_t end) const {
    const double y0 = ts_.y[rows_[begin]];
    for (std::size_t k = begin + 1; k < end; ++k) {
      if (ts_.y[rows_[k]] != y0) return false;
    }
    return true;
  }

  bool leaf_by_size(double w, std::size_t depth) const {
    return w < 2.0 * static_cast<double>(params_.min_leaf) || (params_.max_depth && depth >= *params_.max_depth);
  }

  std::int32_t add_leaf(double w, double s) {
    TreeNode nd;
    nd.value = s / w;
    nd.n = static_cast<std::uint32_t>(w);
    tree_.nodes.push_back(nd);
    return static_cast<std::int32_t>(tree_.nodes.size() - 1);
  }

  void scan_feature(std::size_t f, std::size_t begin, std::size_t end, double w_tot, double s_tot, Split& best) const {
    const double* col = ts_.cols[f].data();
    const std::uint32_t* o = order_[f].data();
    const double min_leaf = static_cast<double>(params_.min_leaf);
    double wl = 0.0, sl = 0.0;
    double a = col[o[begin]];
    for (std::size_t k = begin; k + 1 < end; ++k) {
      const auto& st = stats_[o[k]];
      wl += st.w;
      sl += st.wy;
      const double b = col[o[k + 1]];
      if (a == b) continue;
      const double prev = a;
      a = b;
      if (wl < min_leaf) continue;
      const double wr = w_tot - wl;
      if (wr < min_leaf) break;
      const double sr = s_tot - sl;
      const double score = sl * sl / wl + sr * sr / wr;
      if (best.found && score < best.score) continue;
      double thr = prev + (b - prev) * 0.5;
      if (thr >= b) thr = prev;
      bool better = !best.found || score > best.score;
      if (!better) better = f < best.feature || (f == best.feature && thr < best.threshold);
      if (better) best = Split{true, f, thr, score, wl, sl, wr, sr};
    }
  }

  void partition(std::vector<std::uint32_t>& o, std::size_t begin, std::size_t end) {
    // Branch-free: the left/right choice is close to a coin flip.
    std::size_t li = begin, ri = 0;
    std::uint32_t* data = o.data();
    std::uint32_t* spill = scratch_.data();
    for (std::size_t k = begin; k < end; ++k) {
      const auto r = data[k];
      const std::size_t g = goes_left_[r];
      data[li] = r;
      spill[ri] = r;
      li += g;
      ri += 1 - g;
    }
    std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(ri), o.begin() + static_cast<std::ptrdiff_t>(li));
  }

  // `constant` flags features already known to be constant over this node's
  // rows; they stay constant below, so their row lists are never touched again.
  std::int32_t grow(std::size_t begin, std::size_t end, std::size_t depth, double w, double s,
                    std::vector<std::uint8_t> constant) {
    if (leaf_by_size(w, depth) || is_pure(begin, end)) return add_leaf(w, s);

    Split best;
    std::size_t visited = 0;
    for (std::size_t i = 0; i < ts_.p && visited < mtry_; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng_.below(ts_.p - i));
      std::swap(features_[i], features_[j]);
      const std::size_t f = features_[i];
      if (constant[f]) continue;
      const auto& o = order_[f];
      if (ts_.cols[f][o[begin]] == ts_.cols[f][o[end - 1]]) {
        constant[f] = 1;
        continue;
      }
      ++visited;
      scan_feature(f, begin, end, w, s, best);
    }
    if (!best.found) return add_leaf(w, s);

    (*importance_)[best.feature] += best.score - s * s / w;

    const auto self = static_cast<std::int32_t>(tree_.nodes.size());
    TreeNode nd;
    nd.feature = static_cast<std::int32_t>(best.feature);
    nd.threshold = best.threshold;
    nd.value = s / w;
    nd.n = static_cast<std::uint32_t>(w);
    tree_.nodes.push_back(nd);

    std::int32_t l = -1, r = -1;
    if (leaf_by_size(best.w_left, depth + 1) && leaf_by_size(best.w_right, depth + 1)) {
      l = add_leaf(best.w_left, best.s_left);
      r = add_leaf(best.w_right, best.s_right);
    } else {
      const auto& bcol = ts_.cols[best.feature];
      std::size_t n_left = 0;
      for (std::size_t k = begin; k < end; ++k) {
        const auto row = rows_[k];
        const bool left = bcol[row] <= best.threshold;
        goes_left_[row] = left ? 1 : 0;
        n_left += left ? 1 : 0;
      }
      partition(rows_, begin, end);
      for (std::size_t f = 0; f < ts_.p; ++f) {
        if (!constant[f]) partition(order_[f], begin, end);
      }
      const auto mid = begin + n_left;
      l = grow(begin, mid, depth + 1, best.w_left, best.s_left, constant);
      r = grow(mid, end, depth + 1, best.w_right, best.s_right, std::move(constant));
    }
    tree_.nodes[static_cast<std::size_t>(self)].left = l;
    tree_.nodes[static_cast<std::size_t>(self)].right = r;
    return self;
  }

  const TrainingSet& ts_;
  const ForestParams& params_;
  std::size_t mtry_;
  Rng rng_;
  std::vector<RowStat> stats_;
  std::vector<std::uint32_t> rows_;                // in-bag rows, partitioned by node
  std::vector<std::vector<std::uint32_t>> order_;  // per feature, in-bag rows sorted within each node
  std::vector<std::uint8_t> goes_left_;
  std::vector<std::uint32_t> scratch_;
  std::vector<std::size_t> features_;
  std::vector<double>* importance_ = nullptr;
  Tree tree_;
};

}  // namespace

Forest::Forest(std::vector<Tree> trees, ForestParams params, std::vector<std::string> feature_names,
               std::vector<double> importances)
    : trees_(std::move(trees)),
      params_(params),
      feature_names_(std::move(feature_names)),
      importances_(std::move(importances)) {
  if (importances_.empty()) importances_.assign(feature_names_.size(), 0.0);
  if (importances_.size() != feature_names_.size()) throw SchemaError("importances do not match feature count");
}

Forest Forest::fit(const Matrix& X, std::span<const double> y, const ForestParams& params,
                   std::vector<std::string> feature_names, std::size_t threads) {
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  if (y.size() != n) throw SchemaError("target length " + std::to_string(y.size()) + " != rows " + std::to_string(n));
  params.validate(p);
  if (n < 2 * params.min_leaf) {
    throw DataError("need at least 2*min_leaf = " + std::to_string(2 * params.min_leaf) + " rows, got " + std::to_string(n));
  }
  if (n > std::numeric_limits<std::uint32_t>::max()) throw DataError("too many rows");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(y[i])) throw DataError("target row " + std::to_string(i) + " is not finite");
    for (std::size_t j = 0; j < p; ++j) {
      if (!std::isfinite(X(i, j))) {
        throw DataError("feature " + std::to_string(j) + " row " + std::to_string(i) + " is not finite");
      }
    }
  }
  if (feature_names.empty()) {
    for (std::size_t j = 0; j < p; ++j) feature_names.push_back("f" + std::to_string(j));
  }
  if (feature_names.size() != p) throw SchemaError("feature names do not match column count");

  TrainingSet ts;
  ts.n = n;
  ts.p = p;
  ts.y = y;
  ts.cols.assign(p, std::vector<double>(n));
  ts.sorted.assign(p, std::vector<std::uint32_t>(n));
  for (std::size_t j = 0; j < p; ++j) {
    auto& col = ts.cols[j];
    for (std::size_t i = 0; i < n; ++i) col[i] = X(i, j);
    auto& o = ts.sorted[j];
    std::iota(o.begin(), o.end(), 0u);
    std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
  }

  std::vector<Tree> trees(params.n_trees);
  std::vector<std::vector<double>> imp(params.n_trees, std::vector<double>(p, 0.0));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < params.n_trees; t = next++) {
      TreeBuilder b(ts, params, derive_seed(params.seed, t));
      trees[t] = b.build(imp[t]);
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, params.n_trees);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<double> total(p, 0.0);
  for (const auto& v : imp) {
    for (std::size_t j = 0; j < p; ++j) total[j] += v[j];
  }
  const double sum = std::accumulate(total.begin(), total.end(), 0.0);
  if (sum > 0.0) {
    for (auto& v : total) v /= sum;
  }
  return Forest(std::move(trees), params, std::move(feature_names), std::move(total));
}

double Forest::predict_row(std::span<const double> row) const {
  if (row.size() != n_features()) {
    throw SchemaError("row has " + std::to_string(row.size()) + " features, model expects " + std::to_string(n_features()));
  }
  if (trees_.empty()) throw DataError("forest has no trees");
  double acc = 0.0;
  for (const auto& t : trees_) acc += t.predict(row);
  return acc / static_cast<double>(trees_.size());
}

std::vector<double> Forest::predict(const Matrix& X) const {
  if (X.cols() != n_features()) {
    throw SchemaError("matrix has " + std::to_string(X.cols()) + " columns, model expects " + std::to_string(n_features()));
  }
  std::vector<double> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = predict_row(X.row(i));
  return out;
}

std::optional<std::size_t> Forest::feature_index(std::string_view name) const {
  for (std::size_t j = 0; j < feature_names_.size(); ++j) {
    if (feature_names_[j] == name) return j;
  }
  return std::nullopt;
}

// JSON: metadata through nlohmann, tree arrays written by hand because a
// full-size forest has millions of nodes and a DOM would be wasteful.

namespace detail {

namespace {
template <class T, class F>
void append_array(std::string& out, const std::vector<TreeNode>& nodes, F get) {
  out += '[';
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(get(nodes[i]));
    } else {
      out += std::to_string(get(nodes[i]));
    }
  }
  out += ']';
}
}  // namespace

void append_forest_json(std::string& out, const Forest& forest) {
  const auto& p = forest.params();
  nlohmann::ordered_json params;
  params["n_trees"] = p.n_trees;
  params["max_depth"] = p.max_depth ? nlohmann::ordered_json(*p.max_depth) : nlohmann::ordered_json(nullptr);
  params["min_leaf"] = p.min_leaf;
  params["mtry"] = p.mtry ? nlohmann::ordered_json(*p.mtry) : nlohmann::ordered_json(nullptr);
  params["bootstrap"] = p.bootstrap;
  params["seed"] = p.seed;

  out += "{\"format\":";
  out += nlohmann::json(std::string(kForestFormat)).dump();
  out += ",\"params\":";
  out += params.dump();
  out += ",\"feature_names\":";
  out += nlohmann::json(forest.feature_names()).dump();
  out += ",\"importances\":[";
  for (std::size_t j = 0; j < forest.importances().size(); ++j) {
    if (j) out += ',';
    out += format_double(forest.importances()[j]);
  }
  out += "],\"trees\":[";
  for (std::size_t t = 0; t < forest.trees().size(); ++t) {
    const auto& nodes = forest.trees()[t].nodes;
    if (t) out += ',';
    out += "{\"feature\":";
    append_array<std::int32_t>(out, nodes, [](const TreeNode& n) { return n.feature; });
    out += ",\"threshold\":";
    append_array<double>(out, nodes, [](const TreeNode& n) { return n.threshold; });
    out += ",\"left\":";
    append_array<std::int32_t>(out, nodes, [](const TreeNode& n) { return n.left; });
    out += ",\"right\":";
    append_array<std::int32_t>(out, nodes, [](const TreeNode& n) { return n.right; });
    out += ",\"value\":";
    append_array<double>(out, nodes, [](const TreeNode& n) { return n.value; });
    out += ",\"n\":";
    append_array<std::uint32_t>(out, nodes, [](const TreeNode& n) { return n.n; });
    out += '}';
  }
  out += "]}";
}

Forest forest_from_json(const nlohmann::json& doc) {
  try {
    if (!doc.is_object() || !doc.contains("format")) throw SchemaError("forest document has no format field");
    const auto fmt = doc.at("format").get<std::string>();
    if (fmt != kForestFormat) throw SchemaError("unsupported forest format '" + fmt + "'");
    const auto& jp = doc.at("params");
    ForestParams p;
    p.n_trees = jp.at("n_trees").get<std::size_t>();
    if (!jp.at("max_depth").is_null()) p.max_depth = jp.at("max_depth").get<std::size_t>();
    p.min_leaf = jp.at("min_leaf").get<std::size_t>();
    if (!jp.at("mtry").is_null()) p.mtry = jp.at("mtry").get<std::size_t>();
    p.bootstrap = jp.at("bootstrap").get<bool>();
    p.seed = jp.at("seed").get<std::uint64_t>();
    auto names = doc.at("feature_names").get<std::vector<std::string>>();
    auto imps = doc.at("importances").get<std::vector<double>>();

    std::vector<Tree> trees;
    for (const auto& jt : doc.at("trees")) {
      const auto& f = jt.at("feature");
      const auto& th = jt.at("threshold");
      const auto& l = jt.at("left");
      const auto& r = jt.at("right");
      const auto& v = jt.at("value");
      const auto& n = jt.at("n");
      const std::size_t m = f.size();
      if (th.size() != m || l.size() != m || r.size() != m || v.size() != m || n.size() != m || m == 0) {
        throw SchemaError("tree arrays have inconsistent lengths");
      }
      Tree t;
      t.nodes.resize(m);
      for (std::size_t i = 0; i < m; ++i) {
        auto& nd = t.nodes[i];
        nd.feature = f[i].get<std::int32_t>();
        nd.threshold = th[i].get<double>();
        nd.left = l[i].get<std::int32_t>();
        nd.right = r[i].get<std::int32_t>();
        nd.value = v[i].get<double>();
        nd.n = n[i].get<std::uint32_t>();
        if (nd.feature >= static_cast<std::int32_t>(names.size())) throw SchemaError("node feature out of range");
        if (!nd.is_leaf()) {
          const auto in_range = [&](std::int32_t c) {
            return c > static_cast<std::int32_t>(i) && c < static_cast<std::int32_t>(m);
          };
          if (!in_range(nd.left) || !in_range(nd.right)) throw SchemaError("node child index out of range");
        }
      }
      trees.push_back(std::move(t));
    }
    return Forest(std::move(trees), p, std::move(names), std::move(imps));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed forest document: ") + e.what());
  }
}

}  // namespace detail

std::string Forest::to_json() const {
  std::string out;
  detail::append_forest_json(out, *this);
  return out;
}

Forest Forest::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("forest JSON does not parse: ") + e.what());
  }
  return detail::forest_from_json(doc);
}

const std::vector<double>& impurity_importance(const Forest& forest) { return forest.importances(); }

PermutationImportance permutation_importance(const Forest& forest, const Matrix& X, std::span<const double> y,
                                             std::size_t repeats, std::uint64_t seed) {
  if (repeats == 0) throw ConfigError("permutation repeats must be at least 1");
  PermutationImportance out;
  out.baseline_r2 = eval::r2_score(y, forest.predict(X));
  const std::size_t p = X.cols();
  out.mean_drop.assign(p, 0.0);
  out.std_drop.assign(p, 0.0);
  Matrix work = X;
  std::vector<double> column(X.rows());
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> drops;
    for (std::size_t r = 0; r < repeats; ++r) {
      for (std::size_t i = 0; i < X.rows(); ++i) column[i] = X(i, j);
      Rng rng(derive_seed(seed, j * repeats + r));
      rng.shuffle(column);
      for (std::size_t i = 0; i < X.rows(); ++i) work(i, j) = column[i];
      drops.push_back(out.baseline_r2 - eval::r2_score(y, forest.predict(work)));
    }
    for (std::size_t i = 0; i < X.rows(); ++i) work(i, j) = X(i, j);
    const double mean = std::accumulate(drops.begin(), drops.end(), 0.0) / static_cast<double>(repeats);
    double var = 0.0;
    for (double d : drops) var += (d - mean) * (d - mean);
    out.mean_drop[j] = mean;
    out.std_drop[j] = std::sqrt(var / static_cast<double>(repeats));
  }
  return out;
}

std::vector<double> partial_dependence(const Forest& forest, std::size_t feature, std::span<const double> grid,
                                       const Matrix& background) {
  if (feature >= forest.n_features()) throw SchemaError("partial dependence feature out of range");
  if (background.rows() == 0) throw DataError("partial dependence needs background rows");
  std::vector<double> out;
  std::vector<double> row(background.cols());
  for (double v : grid) {
    double acc = 0.0;
    for (std::size_t i = 0; i < background.rows(); ++i) {
      const auto src = background.row(i);
      std::copy(src.begin(), src.end(), row.begin());
      row[feature] = v;
      acc += forest.predict_row(row);
    }
    out.push_back(acc / static_cast<double>(background.rows()));
  }
  return out;
}

Matrix partial_dependence_2d(const Forest& forest, std::size_t feature_a, std::size_t feature_b,
                             std::span<const double> grid_a, std::span<const double> grid_b,
                             const Matrix& background) {
  if (feature_a >= forest.n_features() || feature_b >= forest.n_features()) {
    throw SchemaError("partial dependence feature out of range");
  }
  if (background.rows() == 0) throw DataError("partial dependence needs background rows");
  Matrix out(grid_a.size(), grid_b.size());
  std::vector<double> row(background.cols());
  for (std::size_t a = 0; a < grid_a.size(); ++a) {
    for (std::size_t b = 0; b < grid_b.size(); ++b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < background.rows(); ++i) {
        const auto src = background.row(i);
        std::copy(src.begin(), src.end(), row.begin());
        row[feature_a] = grid_a[a];
        row[feature_b] = grid_b[b];
        acc += forest.predict_row(row);
      }
      out(a, b) = acc / static_cast<double>(background.rows());
    }
  }
  return out;
}

Matrix pearson_corr_matrix(const Matrix& X) {
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  if (n < 2) throw DataError("correlation needs at least two rows");
  std::vector<double> mean(p, 0.0), sd(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) mean[j] += X(i, j);
    mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) sd[j] += (X(i, j) - mean[j]) * (X(i, j) - mean[j]);
    sd[j] = std::sqrt(sd[j]);
  }
  Matrix out(p, p);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a; b < p; ++b) {
      double c = std::numeric_limits<double>::quiet_NaN();
      if (sd[a] > 0.0 && sd[b] > 0.0) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += (X(i, a) - mean[a]) * (X(i, b) - mean[b]);
        c = a == b ? 1.0 : std::clamp(acc / (sd[a] * sd[b]), -1.0, 1.0);
      }
      out(a, b) = c;
      out(b, a) = c;
    }
  }
  return out;
}

}  // namespace aqd::forest
