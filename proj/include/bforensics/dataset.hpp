#pragma once

#include <span>
#include <string>
#include <vector>

#include "bforensics/errors.hpp"
#include "bforensics/matrix.hpp"

namespace bforensics {

struct Dataset {
  Matrix x;
  std::vector<int> y;
  std::vector<std::string> class_names;

  std::size_t rows() const { return y.size(); }
  std::size_t n_classes() const { return class_names.size(); }

  void validate() const {
    if (x.rows() != y.size()) throw InvariantError("dataset: feature rows and labels differ in length");
    for (int c : y) {
      if (c < 0 || static_cast<std::size_t>(c) >= class_names.size()) {
        throw InvariantError("dataset: label " + std::to_string(c) + " out of range");
      }
    }
  }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(n_classes(), 0);
    for (int c : y) ++counts[static_cast<std::size_t>(c)];
    return counts;
  }

  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset out{x.select_rows(rows), {}, class_names};
    out.y.reserve(rows.size());
    for (std::size_t r : rows) out.y.push_back(y[r]);
    return out;
  }
};

}  // namespace bforensics
