#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "bforensics/ingest.hpp"

namespace oracle {

// Quadratic restatement of the exposure rule over raw (follower, followee)
// name pairs: a user's exposure time is the minimum over their own shares and
// the shares of everyone they follow.
inline std::map<std::tuple<std::int64_t, int, std::string>, std::int64_t> exposures(
    const std::vector<std::pair<std::string, std::string>>& follows, const std::vector<bforensics::ShareEvent>& shares) {
  std::map<std::tuple<std::int64_t, int, std::string>, std::int64_t> out;
  auto relax = [&](const std::tuple<std::int64_t, int, std::string>& key, std::int64_t t) {
    auto it = out.find(key);
    if (it == out.end() || t < it->second) out[key] = t;
  };
  for (const auto& s : shares) {
    const int msg = static_cast<int>(s.message);
    relax({s.news, msg, s.user}, s.time);
    for (const auto& [follower, followee] : follows) {
      if (followee == s.user && follower != followee) relax({s.news, msg, follower}, s.time);
    }
  }
  return out;
}

}  // namespace oracle
