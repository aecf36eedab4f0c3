#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "bforensics/classifiers.hpp"
#include "bforensics/dataset.hpp"
#include "bforensics/errors.hpp"
#include "bforensics/features.hpp"
#include "bforensics/metrics.hpp"
#include "bforensics/parallel.hpp"
#include "bforensics/resample.hpp"
#include "bforensics/rng.hpp"

namespace bforensics {

struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Each class is shuffled and dealt round-robin over the folds. The dealing
// position carries over between classes, so fold sizes differ by at most one
// and every fold holds floor or ceil of n_c / K rows of class c.
inline std::vector<FoldSplit> stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("stratified_kfold: K must be at least 2");
  int max_label = -1;
  for (int y : labels) max_label = std::max(max_label, y);
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(max_label + 1));
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);

  std::vector<std::vector<std::size_t>> test(k);
  Rng rng(derive_seed(seed, 0xf01d));
  std::size_t position = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (members.size() < k) {
      throw DataError("stratified_kfold: class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                      " members, fewer than K=" + std::to_string(k));
    }
    shuffle(members, rng);
    for (std::size_t idx : members) test[position++ % k].push_back(idx);
  }
  std::vector<FoldSplit> folds(k);
  std::vector<std::size_t> fold_of(labels.size());
  for (std::size_t f = 0; f < k; ++f) {
    std::sort(test[f].begin(), test[f].end());
    for (auto i : test[f]) fold_of[i] = f;
    folds[f].test = std::move(test[f]);
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      if (fold_of[i] != f) folds[f].train.push_back(i);
    }
  }
  return folds;
}

// How a training fold is rebalanced. `automatic` uses class weights for the
// models that accept them (logistic regression, trees) and SMOTE otherwise;
// baselines are never rebalanced.
enum class Imbalance { none, class_weight, smote, automatic };

inline Imbalance parse_imbalance(std::string_view s) {
  if (s == "none") return Imbalance::none;
  if (s == "class_weight" || s == "balanced") return Imbalance::class_weight;
  if (s == "smote") return Imbalance::smote;
  if (s == "auto") return Imbalance::automatic;
  throw ConfigError("unknown imbalance strategy \"" + std::string(s) + "\"");
}

inline Imbalance resolve_imbalance(Imbalance requested, ModelKind kind) {
  if (requested != Imbalance::automatic) return requested;
  switch (kind) {
    case ModelKind::logistic_regression_ovr:
    case ModelKind::decision_tree:
    case ModelKind::bagged_trees: return Imbalance::class_weight;
    case ModelKind::knn:
    case ModelKind::gaussian_nb: return Imbalance::smote;
    default: return Imbalance::none;
  }
}

struct EvalOptions {
  std::size_t folds = 5;
  Imbalance imbalance = Imbalance::none;
  bool normalize = true;  // z-score fitted on each training fold
  std::uint64_t seed = 0;
  unsigned workers = 1;
  // Inspection hook, called with each fold's final training set.
  std::function<void(std::size_t fold, const Dataset& train)> on_fold;
};

// Stratified K-fold evaluation. Normalization and rebalancing are fitted on
// the training part of each fold only; metrics are computed over the
// concatenated out-of-fold predictions.
inline EvalReport evaluate(const ModelSpec& spec, const Dataset& data, const EvalOptions& opt) {
  data.validate();
  const auto splits = stratified_kfold(data.y, opt.folds, opt.seed);
  const Imbalance strategy = resolve_imbalance(opt.imbalance, spec.kind);

  struct FoldOut {
    std::vector<int> predicted;
    Matrix scores;
  };
  std::vector<FoldOut> outs(splits.size());
  parallel_for(splits.size(), opt.workers, [&](std::size_t f) {
    Dataset train = data.subset(splits[f].train);
    Dataset test = data.subset(splits[f].test);
    if (opt.normalize) {
      const Scaler scaler = normalize_fit(train.x);
      train.x = normalize_apply(scaler, std::move(train.x));
      test.x = normalize_apply(scaler, std::move(test.x));
    }
    ModelSpec fold_spec = spec;
    fold_spec.seed = derive_seed(spec.seed, f);
    if (strategy == Imbalance::class_weight) fold_spec.class_weight = ClassWeight::balanced;
    if (strategy == Imbalance::smote) train = smote(train, derive_seed(opt.seed, 0x500 + f));
    if (opt.on_fold) opt.on_fold(f, train);
    const auto model = fit_model(fold_spec, train);
    outs[f].scores = model->predict_scores(test.x);
    outs[f].predicted.resize(test.rows());
    for (std::size_t r = 0; r < test.rows(); ++r) outs[f].predicted[r] = argmax(outs[f].scores.row(r));
  });

  std::vector<int> actual, predicted;
  std::vector<double> positive_scores;
  std::vector<double> fold_acc;
  for (std::size_t f = 0; f < splits.size(); ++f) {
    std::size_t correct = 0;
    for (std::size_t r = 0; r < splits[f].test.size(); ++r) {
      const int y = data.y[splits[f].test[r]];
      actual.push_back(y);
      predicted.push_back(outs[f].predicted[r]);
      correct += y == outs[f].predicted[r] ? 1 : 0;
      if (data.n_classes() == 2) positive_scores.push_back(outs[f].scores(r, 1));
    }
    fold_acc.push_back(static_cast<double>(correct) / static_cast<double>(splits[f].test.size()));
  }
  EvalReport report = make_report(actual, predicted, data.class_names);
  report.fold_accuracy = std::move(fold_acc);
  if (data.n_classes() == 2) report.roc = roc_auc(positive_scores, actual);
  return report;
}

}  // namespace bforensics
