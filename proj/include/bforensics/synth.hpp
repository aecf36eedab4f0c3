#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "bforensics/errors.hpp"
#include "bforensics/ingest.hpp"
#include "bforensics/labeler.hpp"
#include "bforensics/rng.hpp"

namespace bforensics {

// Directed stochastic block model: u -> v (u follows v) with probability p_in
// inside a block and p_out across blocks. Cells are visited by geometric
// skipping, so the cost is proportional to the number of edges drawn.
// Returned edges are sorted.
inline std::vector<Edge> sbm_edges(std::span<const int> block_of, double p_in, double p_out, Rng& rng) {
  int n_blocks = 0;
  for (int b : block_of) n_blocks = std::max(n_blocks, b + 1);
  std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(n_blocks));
  for (std::size_t i = 0; i < block_of.size(); ++i) members[static_cast<std::size_t>(block_of[i])].push_back(static_cast<NodeId>(i));
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < members.size(); ++a) {
    for (std::size_t b = 0; b < members.size(); ++b) {
      const double p = a == b ? p_in : p_out;
      if (p <= 0.0) continue;
      const std::uint64_t cols = members[b].size();
      const std::uint64_t cells = members[a].size() * cols;
      const double log_q = std::log1p(-std::min(p, 1.0 - 1e-16));
      std::uint64_t cell = 0;
      bool first = true;
      while (true) {
        if (p >= 1.0) {
          cell = first ? 0 : cell + 1;
        } else {
          const double skip = std::floor(std::log(uniform_open01(rng)) / log_q);
          if (skip >= static_cast<double>(cells)) break;
          cell = (first ? 0 : cell + 1) + static_cast<std::uint64_t>(skip);
        }
        first = false;
        if (cell >= cells) break;
        const NodeId u = members[a][cell / cols];
        const NodeId v = members[b][cell % cols];
        if (u != v) edges.push_back({u, v});
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

struct SynthConfig {
  // Users per planted class, in kAllBehaviors order.
  std::array<std::size_t, 5> users_per_class{200, 200, 200, 200, 200};
  std::size_t news_pairs = 3;
  double p_in = 0.05;
  double p_out = 0.002;
  double epsilon = 0.0;  // chance a user follows another class's script on a pair
  std::uint64_t seed = 1;
  std::int64_t max_delay = 10;          // reaction delay, uniform in [1, max_delay] seconds
  std::int64_t refutation_offset = 30;  // refutation source posts this long after the misinformation
  double profile_shift = 0.5;
  std::int64_t reference_time = 1'700'000'000;

  void validate() const {
    if (news_pairs == 0) throw ConfigError("synth: need at least one news pair");
    if (!(p_in > p_out) || !(p_out >= 0.0) || !(p_in <= 1.0)) throw ConfigError("synth: need 1 >= p_in > p_out >= 0");
    if (!(epsilon >= 0.0 && epsilon < 0.5)) throw ConfigError("synth: epsilon must be in [0, 0.5)");
    if (max_delay < 1) throw ConfigError("synth: max_delay must be >= 1");
    if (refutation_offset < 0) throw ConfigError("synth: refutation_offset must be >= 0");
    // Misinformation needs a planted sharer of r_m first (maybe_malicious or
    // naive_self_corrector) and refutation an informed_sharer, otherwise
    // nobody is ever exposed.
    if (users_per_class[1] + users_per_class[2] == 0 || users_per_class[3] == 0) {
      throw ConfigError("synth: no users can seed the cascades; zero expected exposures");
    }
  }
};

struct TruthRow {
  std::string user;
  Behavior planted = Behavior::disengaged;
  std::vector<PairLabel> exposed_pairs;  // pairs with both exposures and the script followed there
};

struct SynthData {
  std::vector<std::string> users;
  std::vector<Behavior> planted;
  std::vector<std::pair<std::string, std::string>> edges;  // follower, followee
  std::size_t n_edges = 0;
  std::vector<ShareEvent> events;
  std::vector<std::pair<UserProfile, std::int64_t>> profiles;  // profile, account_created_unix
  std::vector<TruthRow> truth;
};

namespace detail {

struct ScriptState {
  bool has_m = false, has_f = false;
  bool shared_m = false, shared_f = false;
};

// What a user following `script` shares next, given what they have seen and
// done so far. Each script produces its class's timeline whatever order the
// two exposures arrive in.
inline std::optional<Message> script_action(Behavior script, const ScriptState& s) {
  switch (script) {
    case Behavior::malicious:
      if (s.has_m && s.has_f && !s.shared_m) return Message::misinfo;
      return std::nullopt;
    case Behavior::maybe_malicious:
      if (s.has_m && !s.has_f && !s.shared_m && !s.shared_f) return Message::misinfo;
      if (s.has_f && !s.shared_f && !s.shared_m) return Message::refutation;
      if (s.has_f && s.has_m && s.shared_f && !s.shared_m) return Message::misinfo;
      return std::nullopt;
    case Behavior::naive_self_corrector:
      if (s.has_m && !s.shared_m && !s.shared_f) return Message::misinfo;
      if (s.has_f && s.shared_m && !s.shared_f) return Message::refutation;
      return std::nullopt;
    case Behavior::informed_sharer:
      if (s.has_f && !s.shared_f) return Message::refutation;
      return std::nullopt;
    case Behavior::disengaged:
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace detail

inline SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, 0x5e7));
  SynthData out;
  std::size_t n = 0;
  for (auto c : cfg.users_per_class) n += c;
  std::vector<int> block;
  for (std::size_t c = 0; c < 5; ++c) block.insert(block.end(), cfg.users_per_class[c], static_cast<int>(c));
  shuffle(block, rng);
  for (std::size_t i = 0; i < n; ++i) {
    out.users.push_back("u" + std::to_string(i));
    out.planted.push_back(kAllBehaviors[static_cast<std::size_t>(block[i])]);
  }

  const auto edges = sbm_edges(block, cfg.p_in, cfg.p_out, rng);
  out.n_edges = edges.size();
  std::vector<std::vector<NodeId>> followers(n);
  for (const auto& e : edges) {
    out.edges.emplace_back(out.users[e.follower], out.users[e.followee]);
    followers[e.followee].push_back(e.follower);
  }

  std::vector<std::vector<PairLabel>> exposed(n);
  for (std::size_t pair = 0; pair < cfg.news_pairs; ++pair) {
    const auto news = static_cast<std::int64_t>(pair + 1);
    std::vector<Behavior> script(out.planted);
    for (auto& s : script) {
      if (uniform01(rng) < cfg.epsilon) {
        Behavior other;
        do other = kAllBehaviors[uniform_index(rng, 5)]; while (other == s);
        s = other;
      }
    }
    std::vector<NodeId> m_seeds, f_seeds;
    for (NodeId u = 0; u < n; ++u) {
      if (script[u] == Behavior::maybe_malicious || script[u] == Behavior::naive_self_corrector) m_seeds.push_back(u);
      if (script[u] == Behavior::informed_sharer) f_seeds.push_back(u);
    }
    if (m_seeds.empty() || f_seeds.empty()) throw DataError("synth: news pair " + std::to_string(news) + " has no eligible source");

    std::vector<detail::ScriptState> state(n);
    std::vector<std::int64_t> exp_m(n, -1), exp_f(n, -1);
    // (time, sequence, user, source message or -1 for a wake-up)
    using Item = std::tuple<std::int64_t, std::uint64_t, NodeId, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    std::uint64_t seq = 0;
    std::int64_t last_share = -1;
    auto delay = [&] { return 1 + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::size_t>(cfg.max_delay))); };

    // Share times are strictly increasing, so no two shares in a pair are
    // simultaneous and every exposure a user has at decision time is final.
    auto share = [&](NodeId u, Message msg, std::int64_t requested, bool source) {
      const std::int64_t t = std::max(requested, last_share + 1);
      last_share = t;
      out.events.push_back({out.users[u], news, msg, t, source});
      auto& exp = msg == Message::misinfo ? exp_m : exp_f;
      if (exp[u] < 0) exp[u] = t;
      auto& st = state[u];
      (msg == Message::misinfo ? st.shared_m : st.shared_f) = true;
      (msg == Message::misinfo ? st.has_m : st.has_f) = true;
      queue.emplace(t + delay(), seq++, u, -1);
      for (NodeId f : followers[u]) {
        if (exp[f] >= 0) continue;
        exp[f] = t;
        (msg == Message::misinfo ? state[f].has_m : state[f].has_f) = true;
        queue.emplace(t + delay(), seq++, f, -1);
      }
    };

    queue.emplace(0, seq++, m_seeds[uniform_index(rng, m_seeds.size())], static_cast<int>(Message::misinfo));
    queue.emplace(cfg.refutation_offset, seq++, f_seeds[uniform_index(rng, f_seeds.size())], static_cast<int>(Message::refutation));
    while (!queue.empty()) {
      const auto [t, s, u, source] = queue.top();
      queue.pop();
      if (source >= 0) {
        share(u, static_cast<Message>(source), t, true);
      } else if (auto action = detail::script_action(script[u], state[u])) {
        share(u, *action, t, false);
      }
    }
    for (NodeId u = 0; u < n; ++u) {
      if (exp_m[u] >= 0 && exp_f[u] >= 0) exposed[u].push_back({news, script[u]});
    }
  }

  for (NodeId u = 0; u < n; ++u) {
    out.truth.push_back({out.users[u], out.planted[u], exposed[u]});
    const double k = static_cast<double>(block[u]);
    const double s = cfg.profile_shift * k;
    auto lognormal = [&](double mu, double sigma) { return std::floor(std::exp(mu + sigma * standard_normal(rng))); };
    UserProfile p;
    p.user = out.users[u];
    p.follower_count = lognormal(3.0 + s, 1.0);
    p.friend_count = lognormal(4.0 - 0.5 * s, 1.0);
    p.statuses_count = lognormal(5.0 + 0.3 * s, 1.0);
    p.listed_count = lognormal(1.0 + 0.2 * s, 1.0);
    p.verified = uniform01(rng) < 0.02 + 0.03 * k ? 1.0 : 0.0;
    p.is_protected = uniform01(rng) < 0.05 ? 1.0 : 0.0;
    const double age_days = std::exp(6.0 + 0.2 * s + 0.5 * standard_normal(rng));
    p.account_age_days = age_days;
    out.profiles.emplace_back(p, cfg.reference_time - static_cast<std::int64_t>(age_days * 86400.0));
  }
  return out;
}

struct SynthPaths {
  std::string edges, events, profiles, truth;

  static SynthPaths in_dir(const std::filesystem::path& dir) {
    return {(dir / "edges.tsv").string(), (dir / "events.jsonl").string(), (dir / "profiles.csv").string(),
            (dir / "truth.csv").string()};
  }
};

inline void write_synth(const SynthData& data, const SynthPaths& paths) {
  auto open = [](const std::string& p) {
    const auto parent = std::filesystem::path(p).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream f(p);
    if (!f) throw DataError("cannot open " + p + " for writing");
    return f;
  };
  {
    auto f = open(paths.edges);
    for (const auto& [a, b] : data.edges) f << a << '\t' << b << '\n';
  }
  {
    auto f = open(paths.events);
    for (const auto& e : data.events) f << event_to_json(e).dump() << '\n';
  }
  {
    auto f = open(paths.profiles);
    for (std::size_t i = 0; i < kProfileHeader.size(); ++i) f << (i ? "," : "") << kProfileHeader[i];
    f << '\n';
    for (const auto& [p, created] : data.profiles) {
      f << p.user << ',' << static_cast<std::int64_t>(p.follower_count) << ',' << static_cast<std::int64_t>(p.friend_count) << ','
        << static_cast<std::int64_t>(p.statuses_count) << ',' << static_cast<std::int64_t>(p.listed_count) << ','
        << static_cast<int>(p.verified) << ',' << static_cast<int>(p.is_protected) << ',' << created << '\n';
    }
  }
  {
    auto f = open(paths.truth);
    f << "user_id,class,exposed_pairs,pair_behaviors\n";
    for (const auto& t : data.truth) {
      f << t.user << ',' << behavior_name(t.planted) << ',';
      for (std::size_t i = 0; i < t.exposed_pairs.size(); ++i) f << (i ? ";" : "") << t.exposed_pairs[i].news;
      f << ',';
      for (std::size_t i = 0; i < t.exposed_pairs.size(); ++i) f << (i ? ";" : "") << behavior_name(t.exposed_pairs[i].label);
      f << '\n';
    }
  }
}

}  // namespace bforensics
