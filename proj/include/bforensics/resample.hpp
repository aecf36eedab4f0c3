#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "bforensics/dataset.hpp"
#include "bforensics/errors.hpp"
#include "bforensics/rng.hpp"

namespace bforensics {

inline constexpr std::size_t kSmoteNeighbors = 5;

// Where a synthetic row came from: base + u * (neighbor - base).
struct SyntheticRow {
  std::size_t base = 0;
  std::size_t neighbor = 0;
  double u = 0.0;
};

struct SmoteResult {
  Dataset data;                          // originals first, then synthetic rows
  std::vector<SyntheticRow> provenance;  // one per synthetic row, indices into the input
};

// Oversamples every class up to the majority count by interpolating between a
// random member and one of its 5 nearest same-class neighbours.
inline SmoteResult smote_detailed(const Dataset& data, std::uint64_t seed) {
  data.validate();
  SmoteResult out{data, {}};
  const auto counts = data.class_counts();
  if (counts.empty()) return out;
  const std::size_t target = *std::max_element(counts.begin(), counts.end());
  Rng rng(derive_seed(seed, 0x5307e));
  std::vector<double> row(data.x.cols());
  for (std::size_t c = 0; c < data.n_classes(); ++c) {
    if (counts[c] == 0 || counts[c] == target) continue;
    if (counts[c] < 2) {
      throw DataError("smote: class \"" + data.class_names[c] + "\" has " + std::to_string(counts[c]) +
                      " sample(s); at least 2 are needed");
    }
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      if (data.y[i] == static_cast<int>(c)) members.push_back(i);
    }
    const std::size_t k = std::min(kSmoteNeighbors, members.size() - 1);
    // Neighbour lists, nearest first; distance ties by row index.
    std::vector<std::vector<std::size_t>> neighbors(members.size());
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t a = 0; a < members.size(); ++a) {
      dist.clear();
      const auto xa = data.x.row(members[a]);
      for (std::size_t b = 0; b < members.size(); ++b) {
        if (a == b) continue;
        const auto xb = data.x.row(members[b]);
        double s = 0.0;
        for (std::size_t j = 0; j < xa.size(); ++j) s += (xa[j] - xb[j]) * (xa[j] - xb[j]);
        dist.emplace_back(s, members[b]);
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      for (std::size_t i = 0; i < k; ++i) neighbors[a].push_back(dist[i].second);
    }
    for (std::size_t n = counts[c]; n < target; ++n) {
      const std::size_t a = uniform_index(rng, members.size());
      const std::size_t nb = neighbors[a][uniform_index(rng, k)];
      const double u = uniform_open01(rng);
      const auto xa = data.x.row(members[a]);
      const auto xb = data.x.row(nb);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] = xa[j] + u * (xb[j] - xa[j]);
      out.data.x.append_row(row);
      out.data.y.push_back(static_cast<int>(c));
      out.provenance.push_back({members[a], nb, u});
    }
  }
  return out;
}

inline Dataset smote(const Dataset& data, std::uint64_t seed) { return smote_detailed(data, seed).data; }

// Keeps a uniform random subset of `target_n` rows of `class_id` and every row
// of the other classes, preserving the original row order.
inline Dataset undersample(const Dataset& data, int class_id, std::size_t target_n, std::uint64_t seed) {
  data.validate();
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    if (data.y[i] == class_id) members.push_back(i);
  }
  if (target_n > members.size()) {
    throw DataError("undersample: target " + std::to_string(target_n) + " exceeds class size " + std::to_string(members.size()));
  }
  Rng rng(derive_seed(seed, 0x0dd5));
  // Partial Fisher-Yates: the first target_n slots end up a uniform subset.
  for (std::size_t i = 0; i < target_n; ++i) {
    std::swap(members[i], members[i + uniform_index(rng, members.size() - i)]);
  }
  std::vector<char> keep(data.rows(), 1);
  for (std::size_t i = target_n; i < members.size(); ++i) keep[members[i]] = 0;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    if (keep[i]) rows.push_back(i);
  }
  return data.subset(rows);
}

}  // namespace bforensics
