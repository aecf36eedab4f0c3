#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bforensics/errors.hpp"
#include "bforensics/ingest.hpp"

namespace bforensics {

// The four engaged classes carry Likert codes 1..4; disengaged has none.
enum class Behavior : std::uint8_t {
  malicious = 1,
  maybe_malicious = 2,
  naive_self_corrector = 3,
  informed_sharer = 4,
  disengaged = 5,
};

inline constexpr std::array<Behavior, 5> kAllBehaviors = {
    Behavior::malicious, Behavior::maybe_malicious, Behavior::naive_self_corrector,
    Behavior::informed_sharer, Behavior::disengaged};

inline constexpr std::array<Behavior, 4> kEngagedBehaviors = {
    Behavior::malicious, Behavior::maybe_malicious, Behavior::naive_self_corrector,
    Behavior::informed_sharer};

inline std::string_view behavior_name(Behavior b) {
  switch (b) {
    case Behavior::malicious: return "malicious";
    case Behavior::maybe_malicious: return "maybe_malicious";
    case Behavior::naive_self_corrector: return "naive_self_corrector";
    case Behavior::informed_sharer: return "informed_sharer";
    case Behavior::disengaged: return "disengaged";
  }
  return "?";
}

inline Behavior parse_behavior(std::string_view s) {
  for (Behavior b : kAllBehaviors) {
    if (behavior_name(b) == s) return b;
  }
  throw DataError("unknown behavior label \"" + std::string(s) + "\"");
}

inline std::optional<int> likert_code(Behavior b) {
  if (b == Behavior::disengaged) return std::nullopt;
  return static_cast<int>(b);
}

inline Behavior from_likert(int code) {
  if (code < 1 || code > 4) throw InvariantError("likert code out of range: " + std::to_string(code));
  return static_cast<Behavior>(code);
}

// Declaration order is the tie-break at equal timestamps: exposures before
// shares, misinformation before refutation.
enum class TimelineEvent : std::uint8_t { exp_m = 0, exp_f = 1, share_m = 2, share_f = 3 };

struct TimedEvent {
  std::int64_t time = 0;
  TimelineEvent kind = TimelineEvent::exp_m;
  friend auto operator<=>(const TimedEvent&, const TimedEvent&) = default;
};

struct UserTimeline {
  std::string user;
  std::int64_t news = 0;
  std::vector<TimedEvent> events;
};

// Labels one time-ordered timeline of a single news pair. Returns nullopt when
// the user was not exposed to both messages.
//
//   no shares                  -> disengaged
//   refutation only            -> informed_sharer
//   misinformation only        -> malicious if some share follows both
//                                 exposures, else maybe_malicious
//   both                       -> by last share: refutation ->
//                                 naive_self_corrector, misinformation ->
//                                 maybe_malicious
inline std::optional<Behavior> label_pair(std::span<const TimelineEvent> ordered) {
  bool seen_m = false, seen_f = false;
  bool shared_m = false, shared_f = false;
  bool share_m_after_both = false;
  TimelineEvent last_share = TimelineEvent::share_m;
  for (TimelineEvent e : ordered) {
    switch (e) {
      case TimelineEvent::exp_m:
        if (seen_m) throw InvariantError("timeline has two misinformation exposures");
        seen_m = true;
        break;
      case TimelineEvent::exp_f:
        if (seen_f) throw InvariantError("timeline has two refutation exposures");
        seen_f = true;
        break;
      case TimelineEvent::share_m:
        if (!seen_m) throw InvariantError("misinformation shared before exposure");
        shared_m = true;
        share_m_after_both = share_m_after_both || seen_f;
        last_share = e;
        break;
      case TimelineEvent::share_f:
        if (!seen_f) throw InvariantError("refutation shared before exposure");
        shared_f = true;
        last_share = e;
        break;
    }
  }
  if (!seen_m || !seen_f) return std::nullopt;
  if (!shared_m && !shared_f) return Behavior::disengaged;
  if (!shared_m) return Behavior::informed_sharer;
  if (!shared_f) return share_m_after_both ? Behavior::malicious : Behavior::maybe_malicious;
  return last_share == TimelineEvent::share_f ? Behavior::naive_self_corrector : Behavior::maybe_malicious;
}

inline std::optional<Behavior> label_pair(const UserTimeline& timeline) {
  auto events = timeline.events;
  std::sort(events.begin(), events.end());
  std::vector<TimelineEvent> kinds;
  kinds.reserve(events.size());
  for (const auto& e : events) kinds.push_back(e.kind);
  return label_pair(kinds);
}

// Median of the Likert codes with disengaged labels dropped; an even count
// takes the larger middle value. All-disengaged stays disengaged.
inline Behavior aggregate_labels(std::span<const Behavior> labels) {
  if (labels.empty()) throw InvariantError("aggregate_labels: empty label list");
  std::vector<int> codes;
  for (Behavior b : labels) {
    if (auto c = likert_code(b)) codes.push_back(*c);
  }
  if (codes.empty()) return Behavior::disengaged;
  std::sort(codes.begin(), codes.end());
  return from_likert(codes[codes.size() / 2]);
}

// Mean of the Likert codes rounded up; exposed only to measure how often it
// disagrees with the median rule.
inline Behavior aggregate_labels_mean(std::span<const Behavior> labels) {
  if (labels.empty()) throw InvariantError("aggregate_labels_mean: empty label list");
  long sum = 0;
  long n = 0;
  for (Behavior b : labels) {
    if (auto c = likert_code(b)) sum += *c, ++n;
  }
  if (n == 0) return Behavior::disengaged;
  return from_likert(static_cast<int>((sum + n - 1) / n));
}

struct PairLabel {
  std::int64_t news = 0;
  Behavior label = Behavior::disengaged;
};

struct LabeledUser {
  std::string user;
  std::vector<PairLabel> per_pair;  // ascending news id
  Behavior final_label = Behavior::disengaged;
};

struct CorpusLabels {
  std::vector<LabeledUser> users;  // ascending user id
  std::map<Behavior, std::size_t> class_counts;
  std::size_t multi_label_users = 0;
  std::size_t median_mean_disagreements = 0;
  std::size_t simultaneous_exposures = 0;  // exp_m and exp_f at the same instant
};

inline CorpusLabels label_corpus(std::span<const ExposureEvent> exposures, std::span<const ShareEvent> shares) {
  std::map<std::pair<std::string, std::int64_t>, std::vector<TimedEvent>> timelines;
  for (const auto& e : exposures) {
    timelines[{e.user, e.news}].push_back(
        {e.time, e.message == Message::misinfo ? TimelineEvent::exp_m : TimelineEvent::exp_f});
  }
  for (const auto& s : shares) {
    auto it = timelines.find({s.user, s.news});
    if (it == timelines.end()) throw InvariantError("share by " + s.user + " has no derived exposure");
    it->second.push_back({s.time, s.message == Message::misinfo ? TimelineEvent::share_m : TimelineEvent::share_f});
  }

  CorpusLabels out;
  for (Behavior b : kAllBehaviors) out.class_counts[b] = 0;
  LabeledUser current;
  auto flush = [&] {
    if (current.per_pair.empty()) return;
    std::vector<Behavior> labels;
    for (const auto& p : current.per_pair) labels.push_back(p.label);
    current.final_label = aggregate_labels(labels);
    if (labels.size() > 1) {
      ++out.multi_label_users;
      if (aggregate_labels_mean(labels) != current.final_label) ++out.median_mean_disagreements;
    }
    ++out.class_counts[current.final_label];
    out.users.push_back(std::move(current));
    current = {};
  };
  for (auto& [key, events] : timelines) {
    if (key.first != current.user) {
      flush();
      current.user = key.first;
    }
    std::sort(events.begin(), events.end());
    std::optional<std::int64_t> tm, tf;
    std::vector<TimelineEvent> kinds;
    for (const auto& e : events) {
      kinds.push_back(e.kind);
      if (e.kind == TimelineEvent::exp_m) tm = e.time;
      if (e.kind == TimelineEvent::exp_f) tf = e.time;
    }
    if (auto label = label_pair(kinds)) {
      if (*tm == *tf) ++out.simultaneous_exposures;
      current.per_pair.push_back({key.second, *label});
    }
  }
  flush();
  return out;
}

// labels.csv: user_id,final_label,n_pairs,per_pair_labels where the last
// column is `news:label` items joined by ';'.
inline void write_labels_csv(const CorpusLabels& labels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "user_id,final_label,n_pairs,per_pair_labels\n";
  for (const auto& u : labels.users) {
    out << u.user << ',' << behavior_name(u.final_label) << ',' << u.per_pair.size() << ',';
    for (std::size_t i = 0; i < u.per_pair.size(); ++i) {
      if (i) out << ';';
      out << u.per_pair[i].news << ':' << behavior_name(u.per_pair[i].label);
    }
    out << '\n';
  }
}

inline std::vector<LabeledUser> read_labels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label file " + path);
  std::string raw;
  if (!std::getline(in, raw) || detail::strip_cr(raw) != "user_id,final_label,n_pairs,per_pair_labels") {
    throw ParseError(path, 1, "bad labels.csv header");
  }
  std::vector<LabeledUser> out;
  std::size_t line_no = 1;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::strip_cr(raw);
    if (line.empty()) continue;
    const auto cols = detail::split(line, ',');
    if (cols.size() != 4) throw ParseError(path, line_no, "expected 4 columns");
    LabeledUser u;
    u.user = std::string(cols[0]);
    try {
      u.final_label = parse_behavior(cols[1]);
      for (auto item : detail::split(cols[3], ';')) {
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) throw DataError("per-pair item without ':'");
        const auto news = detail::parse_number<std::int64_t>(item.substr(0, colon));
        if (!news) throw DataError("bad news id in per-pair labels");
        u.per_pair.push_back({*news, parse_behavior(item.substr(colon + 1))});
      }
    } catch (const DataError& e) {
      throw ParseError(path, line_no, e.what());
    }
    const auto n = detail::parse_number<std::size_t>(cols[2]);
    if (!n || *n != u.per_pair.size()) throw ParseError(path, line_no, "n_pairs does not match per_pair_labels");
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace bforensics
