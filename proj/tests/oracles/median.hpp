#pragma once

#include <optional>
#include <span>
#include <stdexcept>

#include "bforensics/labeler.hpp"

namespace oracle {

// Count-based median over Likert codes: the smallest code v such that more
// than half of the (non-disengaged) labels are <= v. For an even count this
// lands on the larger middle value.
inline bforensics::Behavior median_label(std::span<const bforensics::Behavior> labels) {
  if (labels.empty()) throw std::invalid_argument("empty");
  int counts[5] = {0, 0, 0, 0, 0};
  int n = 0;
  for (auto b : labels) {
    const int code = static_cast<int>(b);
    if (code >= 1 && code <= 4) ++counts[code], ++n;
  }
  if (n == 0) return bforensics::Behavior::disengaged;
  int below = 0;
  for (int v = 1; v <= 4; ++v) {
    below += counts[v];
    if (below >= n / 2 + 1) return static_cast<bforensics::Behavior>(v);
  }
  throw std::logic_error("unreachable");
}

}  // namespace oracle
