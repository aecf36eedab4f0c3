#include <algorithm>
#include <vector>

#include <gtest/gtest.h>

#include "../oracles/median.hpp"
#include "../oracles/state_machine.hpp"
#include "bforensics/labeler.hpp"
#include "test_util.hpp"

using namespace bforensics;
using E = TimelineEvent;

namespace {
std::optional<Behavior> label(std::initializer_list<E> seq) {
  std::vector<E> v(seq);
  return label_pair(v);
}
}  // namespace

TEST(LabelPair, WorkedExamples) {
  EXPECT_EQ(label({E::exp_m, E::share_m, E::exp_f, E::share_m}), Behavior::malicious);
  EXPECT_EQ(label({E::exp_m, E::exp_f}), Behavior::disengaged);
  EXPECT_EQ(label({E::exp_f, E::share_f, E::exp_m}), Behavior::informed_sharer);
  EXPECT_EQ(label({E::exp_m, E::exp_f, E::share_f, E::share_m}), Behavior::maybe_malicious);
  EXPECT_EQ(label({E::exp_m, E::share_m, E::exp_f, E::share_f}), Behavior::naive_self_corrector);
}

TEST(LabelPair, IneligibleWithoutBothExposures) {
  EXPECT_EQ(label({}), std::nullopt);
  EXPECT_EQ(label({E::exp_m, E::share_m, E::share_m}), std::nullopt);
  EXPECT_EQ(label({E::exp_f, E::share_f}), std::nullopt);
}

TEST(LabelPair, ShareBeforeExposureIsAnInvariantViolation) {
  EXPECT_THROW(label({E::share_m, E::exp_m, E::exp_f}), InvariantError);
  EXPECT_THROW(label({E::exp_m, E::share_f, E::exp_f}), InvariantError);
  EXPECT_THROW(label({E::exp_m, E::exp_m, E::exp_f}), InvariantError);
}

TEST(LabelPair, RepeatedSharesAreIdempotent) {
  EXPECT_EQ(label({E::exp_m, E::exp_f, E::share_m, E::share_m, E::share_m}), Behavior::malicious);
  EXPECT_EQ(label({E::exp_f, E::exp_m, E::share_f, E::share_f}), Behavior::informed_sharer);
}

TEST(LabelPair, LastShareDecidesWhenBothShared) {
  EXPECT_EQ(label({E::exp_m, E::share_m, E::exp_f, E::share_f, E::share_m}), Behavior::maybe_malicious);
  EXPECT_EQ(label({E::exp_m, E::share_m, E::exp_f, E::share_f, E::share_m, E::share_f}), Behavior::naive_self_corrector);
}

TEST(LabelPair, MisinfoSharedOnlyBeforeRefutationIsMaybeMalicious) {
  EXPECT_EQ(label({E::exp_m, E::share_m, E::share_m, E::exp_f}), Behavior::maybe_malicious);
}

TEST(LabelPair, TimelineTiesPutExposuresFirstAndMisinfoFirst) {
  UserTimeline t{"u", 1, {{5, E::share_m}, {5, E::exp_f}, {5, E::exp_m}}};
  // Same instant: exp_m, exp_f, share_m -> shared misinformation after both.
  EXPECT_EQ(label_pair(t), Behavior::malicious);
}

TEST(StateMachine, AgreesWithDecisionRuleOnAllSequencesUpToLength8) {
  const auto seqs = oracle::valid_sequences(8);
  // independent count: 4-letter words, each exposure at most once, shares only after their exposure
  ASSERT_EQ(seqs.size(), 511u);
  std::size_t eligible = 0;
  for (const auto& s : seqs) {
    const auto expected = oracle::classify(s);
    ASSERT_EQ(label_pair(s), expected);
    eligible += expected ? 1 : 0;
  }
  EXPECT_GT(eligible, 0u);
}

TEST(StateMachine, DocumentedPathsReproduceTheirClasses) {
  for (const auto& p : oracle::documented_paths()) {
    const auto seq = oracle::events_for_path(p.path);
    std::string walked;
    oracle::run(seq, &walked);
    EXPECT_EQ(walked, p.path);
    EXPECT_EQ(label_pair(seq), p.expected) << p.path;
  }
}

TEST(Aggregate, WorkedExamples) {
  const std::vector<Behavior> a = {Behavior::malicious, Behavior::naive_self_corrector, Behavior::informed_sharer};
  EXPECT_EQ(aggregate_labels(a), Behavior::naive_self_corrector);
  const std::vector<Behavior> b = {Behavior::disengaged, Behavior::malicious};
  EXPECT_EQ(aggregate_labels(b), Behavior::malicious);
  const std::vector<Behavior> c = {Behavior::malicious, Behavior::informed_sharer};
  EXPECT_EQ(aggregate_labels(c), Behavior::informed_sharer);
  const std::vector<Behavior> d = {Behavior::disengaged, Behavior::disengaged};
  EXPECT_EQ(aggregate_labels(d), Behavior::disengaged);
  EXPECT_THROW(aggregate_labels(std::vector<Behavior>{}), InvariantError);
}

TEST(Aggregate, SingletonIsIdentity) {
  for (auto b : kAllBehaviors) {
    const std::vector<Behavior> v = {b};
    EXPECT_EQ(aggregate_labels(v), b);
  }
}

TEST(Aggregate, MatchesCountingOracleAndIsPermutationInvariant) {
  std::vector<Behavior> cur;
  std::size_t checked = 0;
  auto rec = [&](auto&& self, std::size_t start) -> void {
    if (!cur.empty()) {
      auto perm = cur;
      const auto expected = oracle::median_label(perm);
      do {
        ASSERT_EQ(aggregate_labels(perm), expected);
      } while (std::next_permutation(perm.begin(), perm.end()));
      ++checked;
    }
    if (cur.size() == 5) return;
    for (std::size_t i = start; i < kAllBehaviors.size(); ++i) {
      cur.push_back(kAllBehaviors[i]);
      self(self, i);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  EXPECT_EQ(checked, 251u);  // multisets of size 1..5 over 5 labels
}

TEST(Aggregate, MeanVariantRoundsUp) {
  const std::vector<Behavior> v = {Behavior::malicious, Behavior::naive_self_corrector, Behavior::informed_sharer};
  EXPECT_EQ(aggregate_labels_mean(v), Behavior::naive_self_corrector);  // 8/3 -> 3
  const std::vector<Behavior> w = {Behavior::malicious, Behavior::malicious, Behavior::informed_sharer};
  EXPECT_EQ(aggregate_labels(w), Behavior::malicious);
  EXPECT_EQ(aggregate_labels_mean(w), Behavior::maybe_malicious);  // 6/3 -> 2
}

TEST(LabelCorpus, CountsAndDisagreements) {
  using M = Message;
  std::vector<ExposureEvent> exp = {
      {"a", 1, M::misinfo, 0}, {"a", 1, M::refutation, 1}, {"a", 2, M::misinfo, 0}, {"a", 2, M::refutation, 1},
      {"a", 3, M::misinfo, 0}, {"a", 3, M::refutation, 1},
      {"b", 1, M::misinfo, 3}, {"b", 1, M::refutation, 3},
      {"c", 1, M::misinfo, 2},
  };
  std::vector<ShareEvent> shares = {
      {"a", 1, M::misinfo, 5, false}, {"a", 2, M::misinfo, 5, false}, {"a", 3, M::refutation, 5, false},
  };
  const auto c = label_corpus(exp, shares);
  ASSERT_EQ(c.users.size(), 2u);
  EXPECT_EQ(c.users[0].user, "a");
  EXPECT_EQ(c.users[0].final_label, Behavior::malicious);  // [1,1,4]
  EXPECT_EQ(c.users[1].final_label, Behavior::disengaged);
  EXPECT_EQ(c.class_counts.at(Behavior::malicious), 1u);
  EXPECT_EQ(c.class_counts.at(Behavior::disengaged), 1u);
  EXPECT_EQ(c.multi_label_users, 1u);
  EXPECT_EQ(c.median_mean_disagreements, 1u);
  EXPECT_EQ(c.simultaneous_exposures, 1u);
}

TEST(LabelCorpus, NobodyExposedToBothGivesNoUsers) {
  std::vector<ExposureEvent> exp = {{"a", 1, Message::misinfo, 0}, {"b", 1, Message::refutation, 0}};
  EXPECT_TRUE(label_corpus(exp, {}).users.empty());
}

TEST(LabelCorpus, ShareWithoutExposureThrows) {
  std::vector<ShareEvent> shares = {{"a", 1, Message::misinfo, 5, true}};
  EXPECT_THROW(label_corpus({}, shares), InvariantError);
}

TEST(LabelsCsv, RoundTrip) {
  TempDir dir;
  std::vector<ExposureEvent> exp = {{"x", 1, Message::misinfo, 0}, {"x", 1, Message::refutation, 1},
                                    {"x", 4, Message::misinfo, 0}, {"x", 4, Message::refutation, 1}};
  std::vector<ShareEvent> shares = {{"x", 4, Message::refutation, 2, false}};
  const auto c = label_corpus(exp, shares);
  write_labels_csv(c, dir.file("labels.csv"));
  EXPECT_EQ(slurp(dir.file("labels.csv")),
            "user_id,final_label,n_pairs,per_pair_labels\nx,informed_sharer,2,1:disengaged;4:informed_sharer\n");
  const auto back = read_labels_csv(dir.file("labels.csv"));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].final_label, Behavior::informed_sharer);
  ASSERT_EQ(back[0].per_pair.size(), 2u);
  EXPECT_EQ(back[0].per_pair[1].news, 4);
}
