#pragma once

#include <cmath>
#include <fstream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "bforensics/embed.hpp"
#include "bforensics/errors.hpp"
#include "bforensics/ingest.hpp"
#include "bforensics/matrix.hpp"

namespace bforensics {

// Per-column z-score parameters. A column whose spread is zero (relative to its
// magnitude) maps to all zeros.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::size_t cols() const { return mean.size(); }
};

inline bool is_constant_column(double mean, double stddev) {
  return !(stddev > 1e-12 * std::max(1.0, std::abs(mean)));
}

inline Scaler normalize_fit(const Matrix& x, std::span<const std::size_t> fit_rows) {
  if (fit_rows.empty()) throw InvariantError("normalize_fit: no rows to fit on");
  Scaler s;
  s.mean.assign(x.cols(), 0.0);
  s.stddev.assign(x.cols(), 0.0);
  const double n = static_cast<double>(fit_rows.size());
  for (std::size_t r : fit_rows) {
    for (std::size_t c = 0; c < x.cols(); ++c) s.mean[c] += x(r, c);
  }
  for (auto& m : s.mean) m /= n;
  for (std::size_t r : fit_rows) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double d = x(r, c) - s.mean[c];
      s.stddev[c] += d * d;
    }
  }
  for (auto& v : s.stddev) v = std::sqrt(v / n);
  return s;
}

inline Scaler normalize_fit(const Matrix& x) {
  std::vector<std::size_t> all(x.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return normalize_fit(x, all);
}

inline void normalize_apply_row(const Scaler& s, std::span<double> row) {
  for (std::size_t c = 0; c < row.size(); ++c) {
    row[c] = is_constant_column(s.mean[c], s.stddev[c]) ? 0.0 : (row[c] - s.mean[c]) / s.stddev[c];
  }
}

inline Matrix normalize_apply(const Scaler& s, Matrix x) {
  if (x.cols() != s.cols()) throw InvariantError("normalize_apply: column count mismatch");
  for (std::size_t r = 0; r < x.rows(); ++r) normalize_apply_row(s, x.row(r));
  return x;
}

inline nlohmann::json scaler_to_json(const Scaler& s) { return {{"mean", s.mean}, {"std", s.stddev}}; }

inline Scaler scaler_from_json(const nlohmann::json& j) {
  Scaler s{j.at("mean").get<std::vector<double>>(), j.at("std").get<std::vector<double>>()};
  if (s.mean.size() != s.stddev.size()) throw DataError("scaler: mean/std length mismatch");
  return s;
}

struct FeatureMatrix {
  Matrix x;
  std::vector<std::string> row_ids;
  std::vector<std::string> column_names;
  std::size_t imputed_profiles = 0;  // rows whose profile was missing and zero-filled
};

// Column order: embedding dims e0..e{d-1}, then (optionally) the seven profile
// features. Every user must have an embedding row.
inline FeatureMatrix fuse(const EmbeddingMatrix& emb, const ProfileTable* profiles, std::span<const std::string> users) {
  FeatureMatrix out;
  for (std::size_t d = 0; d < emb.dim; ++d) out.column_names.push_back("e" + std::to_string(d));
  if (profiles) {
    for (auto name : kProfileFeatureNames) out.column_names.emplace_back(name);
  }
  const auto index = emb.index();
  std::vector<double> row;
  for (const auto& user : users) {
    auto it = index.find(user);
    if (it == index.end()) throw DataError("user " + user + " has no embedding row");
    const auto e = emb.row(it->second);
    row.assign(e.begin(), e.end());
    if (profiles) {
      auto p = profiles->by_user.find(user);
      if (p == profiles->by_user.end()) {
        ++out.imputed_profiles;
        row.insert(row.end(), kProfileFeatureCount, 0.0);
      } else {
        const auto f = profile_features(p->second);
        row.insert(row.end(), f.begin(), f.end());
      }
    }
    out.x.append_row(row);
    out.row_ids.push_back(user);
  }
  if (users.empty()) out.x = Matrix(0, out.column_names.size());
  return out;
}

inline void write_features_csv(const FeatureMatrix& f, std::span<const std::string> labels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "user_id";
  for (const auto& c : f.column_names) out << ',' << c;
  if (!labels.empty()) out << ",label";
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < f.x.rows(); ++r) {
    out << f.row_ids[r];
    for (double v : f.x.row(r)) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    if (!labels.empty()) out << ',' << labels[r];
    out << '\n';
  }
}

}  // namespace bforensics
