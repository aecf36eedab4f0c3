#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bforensics/dataset.hpp"
#include "bforensics/errors.hpp"
#include "bforensics/matrix.hpp"
#include "bforensics/parallel.hpp"
#include "bforensics/rng.hpp"

namespace bforensics {

enum class ModelKind {
  logistic_regression_ovr,
  knn,
  gaussian_nb,
  decision_tree,
  bagged_trees,
  majority_baseline,
  random_baseline,
};

enum class ClassWeight { none, balanced };

inline std::string_view model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::logistic_regression_ovr: return "logistic_regression";
    case ModelKind::knn: return "knn";
    case ModelKind::gaussian_nb: return "gaussian_nb";
    case ModelKind::decision_tree: return "decision_tree";
    case ModelKind::bagged_trees: return "bagged_trees";
    case ModelKind::majority_baseline: return "majority_baseline";
    case ModelKind::random_baseline: return "random_baseline";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  for (auto k : {ModelKind::logistic_regression_ovr, ModelKind::knn, ModelKind::gaussian_nb, ModelKind::decision_tree,
                 ModelKind::bagged_trees, ModelKind::majority_baseline, ModelKind::random_baseline}) {
    if (model_kind_name(k) == s) return k;
  }
  if (s == "logistic_regression_ovr") return ModelKind::logistic_regression_ovr;
  throw ConfigError("unknown model kind \"" + std::string(s) + "\"");
}

struct ModelSpec {
  ModelKind kind = ModelKind::logistic_regression_ovr;
  std::size_t knn_k = 5;
  std::size_t n_estimators = 100;
  std::size_t max_depth = 0;  // 0 = unlimited
  double lr = 0.1;
  std::size_t epochs = 500;
  double l2 = 1e-4;
  ClassWeight class_weight = ClassWeight::none;
  std::uint64_t seed = 0;
  unsigned workers = 1;

  void validate() const {
    if (knn_k == 0) throw ConfigError("knn k must be positive");
    if (n_estimators == 0) throw ConfigError("n_estimators must be positive");
    if (!(lr > 0.0)) throw ConfigError("logistic regression lr must be positive");
    if (epochs == 0) throw ConfigError("epochs must be positive");
    if (!(l2 >= 0.0)) throw ConfigError("l2 must be nonnegative");
  }
};

inline constexpr double kVarianceFloor = 1e-9;

// n / (n_classes * n_c): each class contributes equal total weight.
inline std::vector<double> balanced_class_weights(std::span<const int> y, std::size_t n_classes) {
  std::vector<std::size_t> counts(n_classes, 0);
  for (int c : y) ++counts[static_cast<std::size_t>(c)];
  std::vector<double> w(n_classes, 0.0);
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (counts[c]) w[c] = static_cast<double>(y.size()) / (static_cast<double>(n_classes) * static_cast<double>(counts[c]));
  }
  return w;
}

inline std::vector<double> sample_weights(const ModelSpec& spec, std::span<const int> y, std::size_t n_classes) {
  std::vector<double> w(y.size(), 1.0);
  if (spec.class_weight == ClassWeight::balanced) {
    const auto cw = balanced_class_weights(y, n_classes);
    for (std::size_t i = 0; i < y.size(); ++i) w[i] = cw[static_cast<std::size_t>(y[i])];
  }
  return w;
}

// First maximum wins, so ties go to the smaller class id.
inline int argmax(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual void fit(const Matrix& x, std::span<const int> y, std::size_t n_classes, std::span<const double> weights) = 0;
  // One row per sample, one column per class; rows sum to 1.
  virtual Matrix predict_scores(const Matrix& x) const = 0;
  virtual nlohmann::json to_json() const = 0;

  virtual std::vector<int> predict(const Matrix& x) const {
    const Matrix s = predict_scores(x);
    std::vector<int> out(s.rows());
    for (std::size_t r = 0; r < s.rows(); ++r) out[r] = argmax(s.row(r));
    return out;
  }

  std::size_t n_classes() const { return n_classes_; }

 protected:
  std::size_t n_classes_ = 0;
  std::size_t n_features_ = 0;

  void check_features(const Matrix& x) const {
    if (x.cols() != n_features_) throw DataError("model expects " + std::to_string(n_features_) + " features, got " + std::to_string(x.cols()));
  }
};

// ---------------------------------------------------------------------------
// Logistic regression, one-vs-rest, full-batch gradient descent.

struct BinaryLogistic {
  std::vector<double> coef;
  double bias = 0.0;
};

// Gradient of (1/sum w) * sum_i w_i * logloss_i + (l2/2)|coef|^2 with respect
// to (coef..., bias). Targets are 0/1.
inline std::vector<double> logistic_gradient(const Matrix& x, std::span<const double> target, std::span<const double> weights,
                                             const BinaryLogistic& model, double l2) {
  const std::size_t d = x.cols();
  std::vector<double> g(d + 1, 0.0);
  double wsum = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    double z = model.bias;
    for (std::size_t j = 0; j < d; ++j) z += model.coef[j] * row[j];
    const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    const double r = weights[i] * (p - target[i]);
    for (std::size_t j = 0; j < d; ++j) g[j] += r * row[j];
    g[d] += r;
    wsum += weights[i];
  }
  for (auto& v : g) v /= wsum;
  for (std::size_t j = 0; j < d; ++j) g[j] += l2 * model.coef[j];
  return g;
}

inline double logistic_probability(const BinaryLogistic& m, std::span<const double> row) {
  double z = m.bias;
  for (std::size_t j = 0; j < row.size(); ++j) z += m.coef[j] * row[j];
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

class LogisticRegressionOvR final : public Classifier {
 public:
  explicit LogisticRegressionOvR(const ModelSpec& spec) : spec_(spec) {}

  void fit(const Matrix& x, std::span<const int> y, std::size_t n_classes, std::span<const double> weights) override {
    n_classes_ = n_classes;
    n_features_ = x.cols();
    // Two classes need a single model for class 1.
    const std::size_t n_models = n_classes == 2 ? 1 : n_classes;
    models_.assign(n_models, BinaryLogistic{std::vector<double>(x.cols(), 0.0), 0.0});
    std::vector<double> target(y.size());
    for (std::size_t k = 0; k < n_models; ++k) {
      const int positive = n_classes == 2 ? 1 : static_cast<int>(k);
      for (std::size_t i = 0; i < y.size(); ++i) target[i] = y[i] == positive ? 1.0 : 0.0;
      auto& m = models_[k];
      for (std::size_t epoch = 0; epoch < spec_.epochs; ++epoch) {
        const auto g = logistic_gradient(x, target, weights, m, spec_.l2);
        for (std::size_t j = 0; j < m.coef.size(); ++j) m.coef[j] -= spec_.lr * g[j];
        m.bias -= spec_.lr * g.back();
      }
    }
  }

  Matrix predict_scores(const Matrix& x) const override {
    check_features(x);
    Matrix out(x.rows(), n_classes_);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      if (models_.size() == 1) {
        const double p = logistic_probability(models_[0], x.row(r));
        out(r, 0) = 1.0 - p;
        out(r, 1) = p;
        continue;
      }
      double sum = 0.0;
      for (std::size_t k = 0; k < models_.size(); ++k) sum += out(r, k) = logistic_probability(models_[k], x.row(r));
      for (std::size_t k = 0; k < models_.size(); ++k) out(r, k) = sum > 0 ? out(r, k) / sum : 1.0 / static_cast<double>(n_classes_);
    }
    return out;
  }

  nlohmann::json to_json() const override {
    nlohmann::json j{{"kind", "logistic_regression"}, {"n_classes", n_classes_}, {"n_features", n_features_}};
    auto& ms = j["models"] = nlohmann::json::array();
    for (const auto& m : models_) ms.push_back({{"coef", m.coef}, {"bias", m.bias}});
    return j;
  }

  void load(const nlohmann::json& j) {
    n_classes_ = j.at("n_classes").get<std::size_t>();
    n_features_ = j.at("n_features").get<std::size_t>();
    models_.clear();
    for (const auto& m : j.at("models")) models_.push_back({m.at("coef").get<std::vector<double>>(), m.at("bias").get<double>()});
  }

  const std::vector<BinaryLogistic>& models() const { return models_; }

 private:
  ModelSpec spec_;
  std::vector<BinaryLogistic> models_;
};

// ---------------------------------------------------------------------------
// k-nearest neighbours, Euclidean, brute force. Vote ties go to the smaller
// class id; distance ties to the earlier training row.

class KNearestNeighbors final : public Classifier {
 public:
  explicit KNearestNeighbors(const ModelSpec& spec) : k_(spec.knn_k) {}

  void fit(const Matrix& x, std::span<const int> y, std::size_t n_classes, std::span<const double>) override {
    if (k_ > x.rows()) throw DataError("knn: k=" + std::to_string(k_) + " exceeds training size " + std::to_string(x.rows()));
    n_classes_ = n_classes;
    n_features_ = x.cols();
    train_x_ = x;
    train_y_.assign(y.begin(), y.end());
  }

  Matrix predict_scores(const Matrix& x) const override {
    check_features(x);
    Matrix out(x.rows(), n_classes_);
    std::vector<std::pair<double, std::size_t>> dist(train_x_.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto q = x.row(r);
      for (std::size_t i = 0; i < train_x_.rows(); ++i) {
        const auto t = train_x_.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) s += (q[j] - t[j]) * (q[j] - t[j]);
        dist[i] = {s, i};
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
      for (std::size_t i = 0; i < k_; ++i) out(r, static_cast<std::size_t>(train_y_[dist[i].second])) += 1.0 / static_cast<double>(k_);
    }
    return out;
  }

  nlohmann::json to_json() const override {
    return {{"kind", "knn"}, {"k", k_}, {"n_classes", n_classes_}, {"n_features", n_features_},
            {"x", train_x_.data()}, {"y", train_y_}};
  }

  void load(const nlohmann::json& j) {
    k_ = j.at("k").get<std::size_t>();
    n_classes_ = j.at("n_classes").get<std::size_t>();
    n_features_ = j.at("n_features").get<std::size_t>();
    train_y_ = j.at("y").get<std::vector<int>>();
    const auto data = j.at("x").get<std::vector<double>>();
    train_x_ = Matrix(train_y_.size(), n_features_);
    if (data.size() != train_y_.size() * n_features_) throw DataError("knn model: training matrix size mismatch");
    for (std::size_t i = 0; i < data.size(); ++i) train_x_(i / n_features_, i % n_features_) = data[i];
  }

 private:
  std::size_t k_;
  Matrix train_x_;
  std::vector<int> train_y_;
};

// ---------------------------------------------------------------------------
// Gaussian naive Bayes with a variance floor.

class GaussianNaiveBayes final : public Classifier {
 public:
  void fit(const Matrix& x, std::span<const int> y, std::size_t n_classes, std::span<const double>) override {
    n_classes_ = n_classes;
    n_features_ = x.cols();
    const std::size_t d = x.cols();
    mean_.assign(n_classes, std::vector<double>(d, 0.0));
    var_.assign(n_classes, std::vector<double>(d, 0.0));
    log_prior_.assign(n_classes, -std::numeric_limits<double>::infinity());
    std::vector<std::size_t> count(n_classes, 0);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const auto c = static_cast<std::size_t>(y[i]);
      ++count[c];
      for (std::size_t j = 0; j < d; ++j) mean_[c][j] += x(i, j);
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (!count[c]) continue;
      for (auto& m : mean_[c]) m /= static_cast<double>(count[c]);
      log_prior_[c] = std::log(static_cast<double>(count[c]) / static_cast<double>(y.size()));
    }
    for (std::size_t i = 0; i < y.size(); ++i) {
      const auto c = static_cast<std::size_t>(y[i]);
      for (std::size_t j = 0; j < d; ++j) var_[c][j] += (x(i, j) - mean_[c][j]) * (x(i, j) - mean_[c][j]);
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
      for (auto& v : var_[c]) v = std::max(count[c] ? v / static_cast<double>(count[c]) : 0.0, kVarianceFloor);
    }
  }

  Matrix predict_scores(const Matrix& x) const override {
    check_features(x);
    Matrix out(x.rows(), n_classes_);
    std::vector<double> logp(n_classes_);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = 0; c < n_classes_; ++c) {
        double lp = log_prior_[c];
        if (std::isfinite(lp)) {
          for (std::size_t j = 0; j < n_features_; ++j) {
            const double diff = x(r, j) - mean_[c][j];
            lp -= 0.5 * (std::log(2.0 * std::numbers::pi * var_[c][j]) + diff * diff / var_[c][j]);
          }
        }
        logp[c] = lp;
      }
      const double mx = *std::max_element(logp.begin(), logp.end());
      double sum = 0.0;
      for (std::size_t c = 0; c < n_classes_; ++c) sum += out(r, c) = std::exp(logp[c] - mx);
      for (std::size_t c = 0; c < n_classes_; ++c) out(r, c) /= sum;
    }
    return out;
  }

  nlohmann::json to_json() const override {
    nlohmann::json prior = nlohmann::json::array();
    for (double p : log_prior_) prior.push_back(std::isfinite(p) ? nlohmann::json(p) : nlohmann::json(nullptr));
    return {{"kind", "gaussian_nb"}, {"n_classes", n_classes_}, {"n_features", n_features_},
            {"mean", mean_}, {"var", var_}, {"log_prior", prior}};
  }

  void load(const nlohmann::json& j) {
    n_classes_ = j.at("n_classes").get<std::size_t>();
    n_features_ = j.at("n_features").get<std::size_t>();
    mean_ = j.at("mean").get<std::vector<std::vector<double>>>();
    var_ = j.at("var").get<std::vector<std::vector<double>>>();
    log_prior_.clear();
    for (const auto& p : j.at("log_prior")) log_prior_.push_back(p.is_null() ? -std::numeric_limits<double>::infinity() : p.get<double>());
  }

 private:
  std::vector<std::vector<double>> mean_, var_;
  std::vector<double> log_prior_;
};

// ---------------------------------------------------------------------------
// CART decision tree with weighted Gini impurity. Samples go left when
// x[feature] <= threshold. An impure node is split whenever some threshold
// separates its rows, so unlimited depth fits consistent data exactly.

class DecisionTree final : public Classifier {
 public:
  struct Node {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::vector<double> distribution;  // normalized class weights at the node
  };

  explicit DecisionTree(std::size_t max_depth = 0) : max_depth_(max_depth) {}

  void fit(const Matrix& x, std::span<const int> y, std::size_t n_classes, std::span<const double> weights) override {
    n_classes_ = n_classes;
    n_features_ = x.cols();
    nodes_.clear();
    std::vector<std::size_t> rows(y.size());
    std::iota(rows.begin(), rows.end(), 0);
    grow(x, y, weights, rows, 0);
  }

  Matrix predict_scores(const Matrix& x) const override {
    check_features(x);
    Matrix out(x.rows(), n_classes_);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto& leaf = nodes_[leaf_index(x.row(r))];
      std::copy(leaf.distribution.begin(), leaf.distribution.end(), out.row(r).begin());
    }
    return out;
  }

  std::size_t leaf_index(std::span<const double> row) const {
    std::size_t i = 0;
    while (nodes_[i].feature >= 0) {
      const auto& n = nodes_[i];
      i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return i;
  }

  std::size_t depth() const { return depth_of(0); }
  const std::vector<Node>& nodes() const { return nodes_; }

  nlohmann::json to_json() const override {
    nlohmann::json ns = nlohmann::json::array();
    for (const auto& n : nodes_) {
      ns.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}, {"d", n.distribution}});
    }
    return {{"kind", "decision_tree"}, {"n_classes", n_classes_}, {"n_features", n_features_},
            {"max_depth", max_depth_}, {"nodes", ns}};
  }

  void load(const nlohmann::json& j) {
    n_classes_ = j.at("n_classes").get<std::size_t>();
    n_features_ = j.at("n_features").get<std::size_t>();
    max_depth_ = j.at("max_depth").get<std::size_t>();
    nodes_.clear();
    for (const auto& n : j.at("nodes")) {
      nodes_.push_back({n.at("f").get<int>(), n.at("t").get<double>(), n.at("l").get<std::int32_t>(),
                        n.at("r").get<std::int32_t>(), n.at("d").get<std::vector<double>>()});
    }
    if (nodes_.empty()) throw DataError("decision tree model has no nodes");
  }

 private:
  std::size_t depth_of(std::size_t i) const {
    if (nodes_[i].feature < 0) return 0;
    return 1 + std::max(depth_of(static_cast<std::size_t>(nodes_[i].left)), depth_of(static_cast<std::size_t>(nodes_[i].right)));
  }

  static double gini(std::span<const double> w, double total) {
    if (total <= 0) return 0.0;
    double s = 0.0;
    for (double v : w) s += (v / total) * (v / total);
    return 1.0 - s;
  }

  std::int32_t grow(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                    std::vector<std::size_t>& rows, std::size_t depth) {
    const auto index = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    std::vector<double> dist(n_classes_, 0.0);
    double total = 0.0;
    for (auto r : rows) dist[static_cast<std::size_t>(y[r])] += weights[r], total += weights[r];
    std::size_t classes_present = 0;
    for (double v : dist) classes_present += v > 0 ? 1 : 0;
    {
      auto& node = nodes_[static_cast<std::size_t>(index)];
      node.distribution = dist;
      for (auto& v : node.distribution) v = total > 0 ? v / total : 1.0 / static_cast<double>(n_classes_);
    }
    if (classes_present <= 1 || rows.size() < 2 || (max_depth_ && depth >= max_depth_)) return index;

    const double parent = gini(dist, total);
    double best_gain = -std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> order(rows);
    std::vector<double> left(n_classes_), right(n_classes_);
    for (std::size_t f = 0; f < x.cols(); ++f) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
      std::fill(left.begin(), left.end(), 0.0);
      double left_total = 0.0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const auto r = order[i];
        left[static_cast<std::size_t>(y[r])] += weights[r];
        left_total += weights[r];
        const double a = x(r, f), b = x(order[i + 1], f);
        if (!(a < b)) continue;
        for (std::size_t c = 0; c < n_classes_; ++c) right[c] = dist[c] - left[c];
        const double right_total = total - left_total;
        const double child = total > 0 ? (left_total * gini(left, left_total) + right_total * gini(right, right_total)) / total : 0.0;
        const double gain = parent - child;
        if (gain > best_gain + 1e-15) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          double t = a + (b - a) / 2.0;
          if (!(t < b)) t = a;
          best_threshold = t;
        }
      }
    }
    if (best_feature < 0) return index;

    std::vector<std::size_t> left_rows, right_rows;
    for (auto r : rows) (x(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? left_rows : right_rows).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const auto l = grow(x, y, weights, left_rows, depth + 1);
    const auto rr = grow(x, y, weights, right_rows, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(index)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = rr;
    return index;
  }

  std::size_t max_depth_;
  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Bootstrap-aggregated decision trees with majority vote.

class BaggedTrees final : public Classifier {
 public:
  explicit BaggedTrees(const ModelSpec& spec) : spec_(spec) {}

  void fit(const Matrix& x, std::span<const int> y, std::size_t n_classes, std::span<const double> weights) override {
    n_classes_ = n_classes;
    n_features_ = x.cols();
    trees_.assign(spec_.n_estimators, DecisionTree(spec_.max_depth));
    parallel_for(spec_.n_estimators, spec_.workers, [&](std::size_t e) {
      Rng rng(derive_seed(spec_.seed, 0xba9000ULL + e));
      std::vector<std::size_t> sample(y.size());
      for (auto& s : sample) s = uniform_index(rng, y.size());
      const Matrix bx = x.select_rows(sample);
      std::vector<int> by(sample.size());
      std::vector<double> bw(sample.size());
      for (std::size_t i = 0; i < sample.size(); ++i) by[i] = y[sample[i]], bw[i] = weights[sample[i]];
      trees_[e].fit(bx, by, n_classes, bw);
    });
  }

  Matrix predict_scores(const Matrix& x) const override {
    check_features(x);
    Matrix out(x.rows(), n_classes_);
    for (const auto& tree : trees_) {
      const auto pred = tree.predict(x);
      for (std::size_t r = 0; r < x.rows(); ++r) out(r, static_cast<std::size_t>(pred[r])) += 1.0 / static_cast<double>(trees_.size());
    }
    return out;
  }

  nlohmann::json to_json() const override {
    nlohmann::json ts = nlohmann::json::array();
    for (const auto& t : trees_) ts.push_back(t.to_json());
    return {{"kind", "bagged_trees"}, {"n_classes", n_classes_}, {"n_features", n_features_}, {"trees", ts}};
  }

  void load(const nlohmann::json& j) {
    n_classes_ = j.at("n_classes").get<std::size_t>();
    n_features_ = j.at("n_features").get<std::size_t>();
    trees_.clear();
    for (const auto& t : j.at("trees")) {
      trees_.emplace_back();
      trees_.back().load(t);
    }
  }

  const std::vector<DecisionTree>& trees() const { return trees_; }

 private:
  ModelSpec spec_;
  std::vector<DecisionTree> trees_;
};

// ---------------------------------------------------------------------------
// Baselines.

class MajorityBaseline final : public Classifier {
 public:
  void fit(const Matrix& x, std::span<const int> y, std::size_t n_classes, std::span<const double>) override {
    n_classes_ = n_classes;
    n_features_ = x.cols();
    std::vector<std::size_t> counts(n_classes, 0);
    for (int c : y) ++counts[static_cast<std::size_t>(c)];
    majority_ = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }

  Matrix predict_scores(const Matrix& x) const override {
    Matrix out(x.rows(), n_classes_);
    for (std::size_t r = 0; r < x.rows(); ++r) out(r, static_cast<std::size_t>(majority_)) = 1.0;
    return out;
  }

  nlohmann::json to_json() const override {
    return {{"kind", "majority_baseline"}, {"n_classes", n_classes_}, {"n_features", n_features_}, {"majority", majority_}};
  }

  void load(const nlohmann::json& j) {
    n_classes_ = j.at("n_classes").get<std::size_t>();
    n_features_ = j.at("n_features").get<std::size_t>();
    majority_ = j.at("majority").get<int>();
  }

  int majority() const { return majority_; }

 private:
  int majority_ = 0;
};

// Uniform random class per row. Row r's draw depends only on (seed, r).
class RandomBaseline final : public Classifier {
 public:
  explicit RandomBaseline(std::uint64_t seed) : seed_(seed) {}

  void fit(const Matrix& x, std::span<const int>, std::size_t n_classes, std::span<const double>) override {
    n_classes_ = n_classes;
    n_features_ = x.cols();
  }

  Matrix predict_scores(const Matrix& x) const override {
    Matrix out(x.rows(), n_classes_);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      Rng rng(derive_seed(seed_, r));
      double sum = 0.0;
      for (std::size_t c = 0; c < n_classes_; ++c) sum += out(r, c) = uniform_open01(rng);
      for (std::size_t c = 0; c < n_classes_; ++c) out(r, c) /= sum;
    }
    return out;
  }

  nlohmann::json to_json() const override {
    return {{"kind", "random_baseline"}, {"n_classes", n_classes_}, {"n_features", n_features_}, {"seed", seed_}};
  }

  void load(const nlohmann::json& j) {
    n_classes_ = j.at("n_classes").get<std::size_t>();
    n_features_ = j.at("n_features").get<std::size_t>();
    seed_ = j.at("seed").get<std::uint64_t>();
  }

 private:
  std::uint64_t seed_;
};

// ---------------------------------------------------------------------------

inline std::unique_ptr<Classifier> make_classifier(const ModelSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case ModelKind::logistic_regression_ovr: return std::make_unique<LogisticRegressionOvR>(spec);
    case ModelKind::knn: return std::make_unique<KNearestNeighbors>(spec);
    case ModelKind::gaussian_nb: return std::make_unique<GaussianNaiveBayes>();
    case ModelKind::decision_tree: return std::make_unique<DecisionTree>(spec.max_depth);
    case ModelKind::bagged_trees: return std::make_unique<BaggedTrees>(spec);
    case ModelKind::majority_baseline: return std::make_unique<MajorityBaseline>();
    case ModelKind::random_baseline: return std::make_unique<RandomBaseline>(spec.seed);
  }
  throw ConfigError("unknown model kind");
}

// Fits `spec` on `train`. Class weights (when balanced) apply to logistic
// regression and the tree models; the others ignore sample weights.
inline std::unique_ptr<Classifier> fit_model(const ModelSpec& spec, const Dataset& train) {
  train.validate();
  if (train.rows() == 0) throw DataError("fit: empty training set");
  std::size_t present = 0;
  for (auto c : train.class_counts()) present += c > 0 ? 1 : 0;
  if (present < 2) throw DataError("fit: training set contains a single class");
  auto model = make_classifier(spec);
  const auto w = sample_weights(spec, train.y, train.n_classes());
  model->fit(train.x, train.y, train.n_classes(), w);
  return model;
}

inline std::unique_ptr<Classifier> load_classifier(const nlohmann::json& j) {
  const auto kind = parse_model_kind(j.at("kind").get<std::string>());
  switch (kind) {
    case ModelKind::logistic_regression_ovr: {
      auto m = std::make_unique<LogisticRegressionOvR>(ModelSpec{});
      m->load(j);
      return m;
    }
    case ModelKind::knn: {
      auto m = std::make_unique<KNearestNeighbors>(ModelSpec{});
      m->load(j);
      return m;
    }
    case ModelKind::gaussian_nb: {
      auto m = std::make_unique<GaussianNaiveBayes>();
      m->load(j);
      return m;
    }
    case ModelKind::decision_tree: {
      auto m = std::make_unique<DecisionTree>();
      m->load(j);
      return m;
    }
    case ModelKind::bagged_trees: {
      auto m = std::make_unique<BaggedTrees>(ModelSpec{});
      m->load(j);
      return m;
    }
    case ModelKind::majority_baseline: {
      auto m = std::make_unique<MajorityBaseline>();
      m->load(j);
      return m;
    }
    case ModelKind::random_baseline: {
      auto m = std::make_unique<RandomBaseline>(0);
      m->load(j);
      return m;
    }
  }
  throw DataError("unknown model kind in artifact");
}

}  // namespace bforensics
