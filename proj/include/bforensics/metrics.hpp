#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bforensics/errors.hpp"

namespace bforensics {

// counts[actual][predicted]
struct ConfusionMatrix {
  std::vector<std::vector<std::size_t>> counts;

  explicit ConfusionMatrix(std::size_t n_classes = 0) : counts(n_classes, std::vector<std::size_t>(n_classes, 0)) {}

  std::size_t n_classes() const { return counts.size(); }

  void add(int actual, int predicted) { ++counts.at(static_cast<std::size_t>(actual)).at(static_cast<std::size_t>(predicted)); }

  std::size_t support(std::size_t c) const { return std::accumulate(counts[c].begin(), counts[c].end(), std::size_t{0}); }

  std::size_t predicted(std::size_t c) const {
    std::size_t s = 0;
    for (const auto& row : counts) s += row[c];
    return s;
  }

  std::size_t total() const {
    std::size_t s = 0;
    for (std::size_t c = 0; c < n_classes(); ++c) s += support(c);
    return s;
  }
};

inline ConfusionMatrix confusion(std::span<const int> actual, std::span<const int> predicted, std::size_t n_classes) {
  if (actual.size() != predicted.size()) throw InvariantError("confusion: length mismatch");
  ConfusionMatrix cm(n_classes);
  for (std::size_t i = 0; i < actual.size(); ++i) cm.add(actual[i], predicted[i]);
  return cm;
}

// Undefined values (division by zero) are nullopt, reported as null.
struct ClassMetrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::size_t support = 0;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

struct EvalReport {
  std::vector<std::string> class_names;
  ConfusionMatrix confusion{0};
  double accuracy = 0.0;
  std::vector<ClassMetrics> per_class;
  double weighted_f1 = 0.0;  // undefined per-class F1 counts as 0
  std::optional<RocCurve> roc;
  std::vector<double> fold_accuracy;
};

inline std::vector<ClassMetrics> class_metrics(const ConfusionMatrix& cm) {
  std::vector<ClassMetrics> out(cm.n_classes());
  for (std::size_t c = 0; c < cm.n_classes(); ++c) {
    const double tp = static_cast<double>(cm.counts[c][c]);
    const auto pred = cm.predicted(c);
    auto& m = out[c];
    m.support = cm.support(c);
    if (pred > 0) m.precision = tp / static_cast<double>(pred);
    if (m.support > 0) m.recall = tp / static_cast<double>(m.support);
    if (m.precision && m.recall) {
      const double s = *m.precision + *m.recall;
      m.f1 = s > 0 ? 2.0 * *m.precision * *m.recall / s : 0.0;
    }
  }
  return out;
}

inline double accuracy(const ConfusionMatrix& cm) {
  std::size_t correct = 0;
  for (std::size_t c = 0; c < cm.n_classes(); ++c) correct += cm.counts[c][c];
  const auto n = cm.total();
  return n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
}

inline double weighted_f1(std::span<const ClassMetrics> per_class) {
  double num = 0.0, den = 0.0;
  for (const auto& m : per_class) {
    num += static_cast<double>(m.support) * m.f1.value_or(0.0);
    den += static_cast<double>(m.support);
  }
  return den > 0 ? num / den : 0.0;
}

// Threshold sweep over the distinct scores (descending), starting at
// (0, 0, +inf); AUC by the trapezoid rule. Labels are 0/1 with 1 positive.
inline RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvariantError("roc_auc: length mismatch");
  std::size_t pos = 0, neg = 0;
  for (int y : labels) {
    if (y == 1) ++pos;
    else if (y == 0) ++neg;
    else throw InvariantError("roc_auc: labels must be binary");
  }
  if (pos == 0 || neg == 0) throw DataError("roc_auc: need both positive and negative samples");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == t; ++i) {
      if (labels[order[i]] == 1) ++tp;
      else ++fp;
    }
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos), t});
  }
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    curve.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  return curve;
}

inline EvalReport make_report(std::span<const int> actual, std::span<const int> predicted,
                              std::vector<std::string> class_names) {
  EvalReport r;
  r.confusion = confusion(actual, predicted, class_names.size());
  r.class_names = std::move(class_names);
  r.accuracy = accuracy(r.confusion);
  r.per_class = class_metrics(r.confusion);
  r.weighted_f1 = weighted_f1(r.per_class);
  return r;
}

namespace detail {
inline nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }
}  // namespace detail

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["class_names"] = r.class_names;
  j["confusion_matrix"] = r.confusion.counts;
  j["accuracy"] = r.accuracy;
  j["weighted_f1"] = r.weighted_f1;
  auto& pc = j["per_class"] = nlohmann::json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& m = r.per_class[c];
    pc.push_back({{"class", r.class_names[c]},
                  {"precision", detail::opt(m.precision)},
                  {"recall", detail::opt(m.recall)},
                  {"f1", detail::opt(m.f1)},
                  {"support", m.support}});
  }
  j["fold_accuracy"] = r.fold_accuracy;
  if (r.roc) {
    j["auc"] = r.roc->auc;
    auto& pts = j["roc"] = nlohmann::json::array();
    for (const auto& p : r.roc->points) {
      pts.push_back({{"fpr", p.fpr}, {"tpr", p.tpr}, {"threshold", std::isinf(p.threshold) ? nlohmann::json("inf") : nlohmann::json(p.threshold)}});
    }
  }
  return j;
}

// One `metric,class,value` line per number; undefined values are left empty.
inline void write_report_csv(const EvalReport& r, const std::string& path, const std::string& model = "") {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out.precision(17);
  out << "model,metric,class,value\n";
  auto line = [&](const std::string& metric, const std::string& cls, const std::optional<double>& v) {
    out << model << ',' << metric << ',' << cls << ',';
    if (v) out << *v;
    out << '\n';
  };
  line("accuracy", "", r.accuracy);
  line("weighted_f1", "", r.weighted_f1);
  if (r.roc) line("auc", "", r.roc->auc);
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    line("precision", r.class_names[c], r.per_class[c].precision);
    line("recall", r.class_names[c], r.per_class[c].recall);
    line("f1", r.class_names[c], r.per_class[c].f1);
    line("support", r.class_names[c], static_cast<double>(r.per_class[c].support));
  }
}

inline void write_roc_csv(const RocCurve& roc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out.precision(17);
  out << "fpr,tpr,threshold\n";
  for (const auto& p : roc.points) {
    out << p.fpr << ',' << p.tpr << ',';
    if (std::isinf(p.threshold)) out << "inf";
    else out << p.threshold;
    out << '\n';
  }
}

}  // namespace bforensics
