#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "bforensics/errors.hpp"
#include "bforensics/graph.hpp"

namespace bforensics {

// r_m is the misinformation message of a news pair, r_f its refutation.
enum class Message : std::uint8_t { misinfo = 0, refutation = 1 };

inline char message_code(Message m) { return m == Message::misinfo ? 'm' : 'f'; }

inline Message parse_message(std::string_view s) {
  if (s == "m") return Message::misinfo;
  if (s == "f") return Message::refutation;
  throw DataError("message must be \"m\" or \"f\", got \"" + std::string(s) + "\"");
}

struct ShareEvent {
  std::string user;
  std::int64_t news = 0;
  Message message = Message::misinfo;
  std::int64_t time = 0;
  bool is_source = false;
};

struct ExposureEvent {
  std::string user;
  std::int64_t news = 0;
  Message message = Message::misinfo;
  std::int64_t time = 0;

  friend bool operator==(const ExposureEvent&, const ExposureEvent&) = default;
};

struct UserProfile {
  std::string user;
  double follower_count = 0;
  double friend_count = 0;
  double statuses_count = 0;
  double listed_count = 0;
  double verified = 0;
  double is_protected = 0;
  double account_age_days = 0;
};

inline constexpr std::size_t kProfileFeatureCount = 7;
inline constexpr std::array<std::string_view, kProfileFeatureCount> kProfileFeatureNames = {
    "follower_count", "friend_count", "statuses_count", "listed_count",
    "verified",       "protected",    "account_age_days"};

inline std::array<double, kProfileFeatureCount> profile_features(const UserProfile& p) {
  return {p.follower_count, p.friend_count, p.statuses_count, p.listed_count,
          p.verified,       p.is_protected, p.account_age_days};
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<double> parse_bool01(std::string_view s) {
  if (s == "1" || s == "true" || s == "True" || s == "TRUE") return 1.0;
  if (s == "0" || s == "false" || s == "False" || s == "FALSE") return 0.0;
  return std::nullopt;
}

}  // namespace detail

// Reads `follower<TAB>followee` lines. Blank lines are skipped; duplicates are
// collapsed; ids are assigned in first-seen order.
inline EdgeList load_edges(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge file " + path);
  EdgeList out;
  std::set<std::pair<NodeId, NodeId>> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::strip_cr(raw);
    if (line.empty()) continue;
    const auto cols = detail::split(line, '\t');
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty()) {
      throw ParseError(path, line_no, "expected 2 tab-separated columns, got " + std::to_string(cols.size()));
    }
    const Edge e{out.ids.intern(cols[0]), out.ids.intern(cols[1])};
    if (seen.emplace(e.follower, e.followee).second) {
      out.edges.push_back(e);
    } else {
      ++out.duplicates_dropped;
    }
  }
  if (out.edges.empty()) throw DataError("edge file " + path + " contains no edges");
  return out;
}

inline constexpr std::array<std::string_view, 8> kProfileHeader = {
    "user_id",      "follower_count", "friend_count", "statuses_count",
    "listed_count", "verified",       "protected",    "account_created_unix"};

struct ProfileTable {
  std::unordered_map<std::string, UserProfile> by_user;
  std::int64_t reference_time = 0;
};

// Loads profiles.csv. Account age is measured in days back from
// `reference_time` (unix seconds); when absent, the newest creation time in the
// table is used. Ages are clamped at zero.
inline ProfileTable load_profiles(const std::string& path, std::optional<std::int64_t> reference_time = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open profile file " + path);
  std::string raw;
  if (!std::getline(in, raw)) throw DataError("profile file " + path + " is empty");
  const auto header = detail::split(detail::strip_cr(raw), ',');
  if (!std::equal(header.begin(), header.end(), kProfileHeader.begin(), kProfileHeader.end())) {
    throw ParseError(path, 1, "header must be exactly user_id,follower_count,friend_count,statuses_count,"
                              "listed_count,verified,protected,account_created_unix");
  }
  std::vector<std::pair<UserProfile, std::int64_t>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::strip_cr(raw);
    if (line.empty()) continue;
    const auto cols = detail::split(line, ',');
    if (cols.size() != kProfileHeader.size()) throw ParseError(path, line_no, "expected 8 columns");
    UserProfile p;
    p.user = std::string(cols[0]);
    double* counts[] = {&p.follower_count, &p.friend_count, &p.statuses_count, &p.listed_count};
    for (int c = 0; c < 4; ++c) {
      const auto v = detail::parse_number<double>(cols[c + 1]);
      if (!v || !std::isfinite(*v) || *v < 0) throw ParseError(path, line_no, "bad count in column " + std::string(kProfileHeader[c + 1]));
      *counts[c] = *v;
    }
    const auto verified = detail::parse_bool01(cols[5]);
    const auto prot = detail::parse_bool01(cols[6]);
    if (!verified || !prot) throw ParseError(path, line_no, "verified/protected must be 0/1 or true/false");
    p.verified = *verified;
    p.is_protected = *prot;
    const auto created = detail::parse_number<std::int64_t>(cols[7]);
    if (!created) throw ParseError(path, line_no, "bad account_created_unix");
    rows.emplace_back(std::move(p), *created);
  }
  ProfileTable table;
  std::int64_t newest = 0;
  for (const auto& [p, created] : rows) newest = std::max(newest, created);
  table.reference_time = reference_time.value_or(newest);
  for (auto& [p, created] : rows) {
    p.account_age_days = std::max(0.0, static_cast<double>(table.reference_time - created) / 86400.0);
    const std::string key = p.user;
    if (!table.by_user.emplace(key, std::move(p)).second) {
      throw DataError("profile file " + path + ": duplicate user_id " + key);
    }
  }
  return table;
}

inline ShareEvent parse_event(const nlohmann::json& j) {
  ShareEvent e;
  const auto& user = j.at("user");
  e.user = user.is_string() ? user.get<std::string>() : user.dump();
  e.news = j.at("news").get<std::int64_t>();
  e.message = parse_message(j.at("msg").get<std::string>());
  e.time = j.at("time").get<std::int64_t>();
  e.is_source = j.at("source").get<bool>();
  if (e.time < 0) throw DataError("event time must be >= 0");
  return e;
}

inline nlohmann::json event_to_json(const ShareEvent& e) {
  return {{"user", e.user},
          {"news", e.news},
          {"msg", std::string(1, message_code(e.message))},
          {"time", e.time},
          {"source", e.is_source}};
}

inline std::vector<ShareEvent> load_events(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open event file " + path);
  std::vector<ShareEvent> out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (detail::strip_cr(raw).empty()) continue;
    try {
      out.push_back(parse_event(nlohmann::json::parse(raw)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path, line_no, e.what());
    } catch (const DataError& e) {
      throw ParseError(path, line_no, e.what());
    }
  }
  return out;
}

// Exactly one source record per (news, message).
inline void validate_events(std::span<const ShareEvent> events) {
  std::map<std::pair<std::int64_t, Message>, int> sources;
  for (const auto& e : events) {
    auto& n = sources[{e.news, e.message}];
    if (e.is_source) ++n;
  }
  for (const auto& [key, n] : sources) {
    if (n != 1) {
      throw DataError("news " + std::to_string(key.first) + " message " + message_code(key.second) +
                      ": expected exactly one source record, found " + std::to_string(n));
    }
  }
}

struct ExposureDerivation {
  std::vector<ExposureEvent> exposures;  // sorted by (news, message, user)
  std::size_t unknown_sharer_events = 0;
  std::set<std::string> unknown_sharers;
};

// Exposure policy: a share by v at time t exposes every follower of v at t;
// a user's exposure is the earliest such time, or their own first share of the
// message if that comes earlier. Source authors count as sharers.
inline ExposureDerivation derive_exposures(std::span<const ShareEvent> events, const FollowGraph& graph) {
  using Key = std::pair<std::int64_t, Message>;
  std::map<Key, std::vector<const ShareEvent*>> partitions;
  for (const auto& e : events) partitions[{e.news, e.message}].push_back(&e);

  ExposureDerivation out;
  for (const auto& [key, shares] : partitions) {
    std::unordered_map<NodeId, std::int64_t> known;
    std::map<std::string, std::int64_t> unknown;
    auto relax = [](auto& map, const auto& k, std::int64_t t) {
      auto [it, inserted] = map.try_emplace(k, t);
      if (!inserted && t < it->second) it->second = t;
    };
    for (const ShareEvent* s : shares) {
      const auto id = graph.ids().find(s->user);
      if (!id) {
        ++out.unknown_sharer_events;
        out.unknown_sharers.insert(s->user);
        relax(unknown, s->user, s->time);
        continue;
      }
      relax(known, *id, s->time);
      for (NodeId f : graph.followers(*id)) relax(known, f, s->time);
    }
    const std::size_t first = out.exposures.size();
    for (const auto& [id, t] : known) out.exposures.push_back({graph.ids().name(id), key.first, key.second, t});
    for (const auto& [user, t] : unknown) out.exposures.push_back({user, key.first, key.second, t});
    std::sort(out.exposures.begin() + static_cast<std::ptrdiff_t>(first), out.exposures.end(),
              [](const ExposureEvent& a, const ExposureEvent& b) { return a.user < b.user; });
  }
  return out;
}

}  // namespace bforensics
