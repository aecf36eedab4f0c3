#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "../oracles/exposure.hpp"
#include "bforensics/ingest.hpp"
#include "test_util.hpp"

using namespace bforensics;
using M = Message;

namespace {

FollowGraph graph_of(const std::vector<std::pair<std::string, std::string>>& follows) {
  EdgeList list;
  for (const auto& [a, b] : follows) list.edges.push_back({list.ids.intern(a), list.ids.intern(b)});
  return build_graph(std::move(list)).graph;
}

std::int64_t exposure_time(const ExposureDerivation& d, const std::string& user, M msg) {
  for (const auto& e : d.exposures) {
    if (e.user == user && e.message == msg) return e.time;
  }
  return -1;
}

}  // namespace

TEST(LoadEdges, DeduplicatesAndAssignsFirstSeenIds) {
  TempDir dir;
  const auto list = load_edges(dir.write("e.tsv", "a\tb\na\tb\nb\tc\n"));
  EXPECT_EQ(list.ids.size(), 3u);
  EXPECT_EQ(list.edges.size(), 2u);
  EXPECT_EQ(list.duplicates_dropped, 1u);
  EXPECT_EQ(list.ids.name(0), "a");
  EXPECT_EQ(list.ids.name(2), "c");
}

TEST(LoadEdges, MalformedLineReportsLineNumber) {
  TempDir dir;
  try {
    load_edges(dir.write("e.tsv", "a b c\n"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  try {
    load_edges(dir.write("e2.tsv", "a\tb\n\nx\ty\tz\n"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(LoadEdges, EmptyFileIsAnError) {
  TempDir dir;
  EXPECT_THROW(load_edges(dir.write("e.tsv", "")), DataError);
  EXPECT_THROW(load_edges(dir.file("missing.tsv")), DataError);
}

TEST(LoadEdges, CrlfTolerated) {
  TempDir dir;
  const auto list = load_edges(dir.write("e.tsv", "a\tb\r\nb\ta\r\n"));
  EXPECT_EQ(list.edges.size(), 2u);
  EXPECT_EQ(list.ids.name(1), "b");
}

TEST(Profiles, ParsesAndComputesAge) {
  TempDir dir;
  const auto path = dir.write("p.csv",
                              "user_id,follower_count,friend_count,statuses_count,listed_count,verified,protected,account_created_unix\n"
                              "a,10,20,30,1,1,0,1000000\n"
                              "b,0,0,0,0,false,true,1086400\n");
  const auto t = load_profiles(path);
  EXPECT_EQ(t.reference_time, 1086400);
  EXPECT_DOUBLE_EQ(t.by_user.at("a").account_age_days, 1.0);
  EXPECT_DOUBLE_EQ(t.by_user.at("b").account_age_days, 0.0);
  EXPECT_DOUBLE_EQ(t.by_user.at("a").verified, 1.0);
  EXPECT_DOUBLE_EQ(t.by_user.at("b").is_protected, 1.0);
  const auto t2 = load_profiles(path, 1000000);
  EXPECT_DOUBLE_EQ(t2.by_user.at("b").account_age_days, 0.0);  // clamped
  const auto f = profile_features(t.by_user.at("a"));
  EXPECT_EQ(f[0], 10.0);
  EXPECT_EQ(f[6], 1.0);
}

TEST(Profiles, RejectsBadInput) {
  TempDir dir;
  const std::string header =
      "user_id,follower_count,friend_count,statuses_count,listed_count,verified,protected,account_created_unix\n";
  EXPECT_THROW(load_profiles(dir.write("a.csv", "user,x\n")), ParseError);
  EXPECT_THROW(load_profiles(dir.write("b.csv", header + "a,-1,0,0,0,0,0,0\n")), ParseError);
  EXPECT_THROW(load_profiles(dir.write("c.csv", header + "a,1,0,0,0,2,0,0\n")), ParseError);
  EXPECT_THROW(load_profiles(dir.write("d.csv", header + "a,1,0,0,0,0,0,0\na,1,0,0,0,0,0,0\n")), DataError);
}

TEST(Events, JsonlRoundTrip) {
  TempDir dir;
  const ShareEvent e{"u1", 3, M::refutation, 42, true};
  const auto path = dir.write("ev.jsonl", event_to_json(e).dump() + "\n\n");
  const auto back = load_events(path);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].user, "u1");
  EXPECT_EQ(back[0].news, 3);
  EXPECT_EQ(back[0].message, M::refutation);
  EXPECT_EQ(back[0].time, 42);
  EXPECT_TRUE(back[0].is_source);
}

TEST(Events, RejectsMalformedLines) {
  TempDir dir;
  try {
    load_events(dir.write("a.jsonl", R"({"user":"a","news":1,"msg":"m","time":0,"source":true})" "\n{oops\n"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(load_events(dir.write("b.jsonl", R"({"user":"a","news":1,"msg":"x","time":0,"source":true})" "\n")), ParseError);
  EXPECT_THROW(load_events(dir.write("c.jsonl", R"({"user":"a","news":1,"msg":"m","time":-1,"source":true})" "\n")), ParseError);
}

TEST(Events, ExactlyOneSourcePerMessage) {
  std::vector<ShareEvent> ok = {{"a", 1, M::misinfo, 0, true}, {"b", 1, M::misinfo, 3, false}, {"c", 1, M::refutation, 1, true}};
  EXPECT_NO_THROW(validate_events(ok));
  auto two = ok;
  two[1].is_source = true;
  EXPECT_THROW(validate_events(two), DataError);
  auto none = ok;
  none[2].is_source = false;
  EXPECT_THROW(validate_events(none), DataError);
}

TEST(Exposure, EarliestFolloweeShare) {
  const auto g = graph_of({{"u", "v"}, {"u", "w"}});
  std::vector<ShareEvent> ev = {{"v", 1, M::misinfo, 10, true}, {"w", 1, M::misinfo, 5, false}};
  EXPECT_EQ(exposure_time(derive_exposures(ev, g), "u", M::misinfo), 5);
}

TEST(Exposure, OwnShareWithoutFollowees) {
  const auto g = graph_of({{"x", "u"}});
  std::vector<ShareEvent> ev = {{"u", 1, M::refutation, 7, true}};
  const auto d = derive_exposures(ev, g);
  EXPECT_EQ(exposure_time(d, "u", M::refutation), 7);
  EXPECT_EQ(exposure_time(d, "x", M::refutation), 7);
}

TEST(Exposure, MinimumOfOwnShareAndFolloweeShare) {
  const auto g = graph_of({{"u", "v"}});
  std::vector<ShareEvent> ev = {{"v", 1, M::misinfo, 10, true}, {"u", 1, M::misinfo, 3, false}};
  EXPECT_EQ(exposure_time(derive_exposures(ev, g), "u", M::misinfo), 3);
}

TEST(Exposure, UnknownSharerIsCountedAndSelfExposed) {
  const auto g = graph_of({{"u", "v"}});
  std::vector<ShareEvent> ev = {{"ghost", 1, M::misinfo, 4, true}};
  const auto d = derive_exposures(ev, g);
  EXPECT_EQ(d.unknown_sharer_events, 1u);
  EXPECT_EQ(d.unknown_sharers.count("ghost"), 1u);
  EXPECT_EQ(exposure_time(d, "ghost", M::misinfo), 4);
  EXPECT_EQ(exposure_time(d, "u", M::misinfo), -1);
}

namespace {

struct RandomCase {
  std::vector<std::pair<std::string, std::string>> follows;
  std::vector<ShareEvent> events;
};

RandomCase random_case(std::uint32_t seed) {
  std::mt19937 rng(seed);
  RandomCase c;
  const int n = 12;
  std::uniform_int_distribution<int> node(0, n - 1), t(0, 20), coin(0, 3);
  for (int i = 0; i < 30; ++i) {
    const int a = node(rng), b = node(rng);
    if (a != b) c.follows.emplace_back("n" + std::to_string(a), "n" + std::to_string(b));
  }
  if (c.follows.empty()) c.follows.emplace_back("n0", "n1");
  for (int news = 1; news <= 2; ++news) {
    for (M msg : {M::misinfo, M::refutation}) {
      c.events.push_back({"n" + std::to_string(node(rng)), news, msg, t(rng), true});
      for (int i = 0; i < 6; ++i) {
        c.events.push_back({"n" + std::to_string(node(rng)), news, msg, t(rng), false});
      }
    }
  }
  // an occasional sharer outside the graph
  if (coin(rng) == 0) c.events.push_back({"outsider", 1, M::misinfo, t(rng), false});
  return c;
}

}  // namespace

TEST(Exposure, MatchesBruteForceOracleAndIsOrderIndependent) {
  for (std::uint32_t seed = 0; seed < 200; ++seed) {
    auto c = random_case(seed);
    const auto g = graph_of(c.follows);
    const auto d = derive_exposures(c.events, g);
    const auto expected = oracle::exposures(c.follows, c.events);
    ASSERT_EQ(d.exposures.size(), expected.size()) << "seed " << seed;
    std::set<std::tuple<std::int64_t, int, std::string>> seen;
    for (const auto& e : d.exposures) {
      const auto key = std::make_tuple(e.news, static_cast<int>(e.message), e.user);
      ASSERT_TRUE(seen.insert(key).second) << "duplicate exposure";
      ASSERT_EQ(expected.at(key), e.time) << "seed " << seed;
    }
    // every share is preceded (<=) by the sharer's exposure
    for (const auto& s : c.events) {
      ASSERT_LE(expected.at({s.news, static_cast<int>(s.message), s.user}), s.time);
    }
    std::mt19937 rng(seed);
    for (int k = 0; k < 3; ++k) {
      std::shuffle(c.events.begin(), c.events.end(), rng);
      ASSERT_EQ(derive_exposures(c.events, g).exposures, d.exposures);
    }
  }
}
