#include <cmath>

#include <gtest/gtest.h>

#include "bforensics/embed.hpp"
#include "test_util.hpp"

using namespace bforensics;

namespace {

// Two disjoint 10-cliques with both edge directions.
FollowGraph two_cliques() {
  EdgeList l;
  for (int i = 0; i < 20; ++i) l.ids.intern("c" + std::to_string(i));
  for (NodeId a = 0; a < 20; ++a) {
    for (NodeId b = 0; b < 20; ++b) {
      if (a != b && a / 10 == b / 10) l.edges.push_back({a, b});
    }
  }
  return build_graph(l).graph;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  return dot(a, b) / std::sqrt(dot(a, a) * dot(b, b));
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)}); }

}  // namespace

TEST(Embed, GradientMatchesCentralDifferences) {
  Rng rng(42);
  const std::size_t d = 4;
  auto vec = [&] {
    std::vector<double> v(d);
    for (auto& x : v) x = standard_normal(rng) * 0.7;
    return v;
  };
  std::vector<double> u = vec(), pos = vec();
  std::vector<std::vector<double>> negs = {vec(), vec(), vec()};
  auto loss = [&] {
    std::vector<std::span<const double>> ns(negs.begin(), negs.end());
    return negative_sampling_loss(u, pos, ns);
  };
  std::vector<std::span<const double>> ns(negs.begin(), negs.end());
  const auto g = negative_sampling_gradient(u, pos, ns);
  const double h = 1e-6;
  auto check = [&](std::vector<double>& x, const std::vector<double>& analytic) {
    for (std::size_t i = 0; i < d; ++i) {
      const double keep = x[i];
      x[i] = keep + h;
      const double up = loss();
      x[i] = keep - h;
      const double down = loss();
      x[i] = keep;
      EXPECT_LT(rel_err((up - down) / (2 * h), analytic[i]), 1e-5);
    }
  };
  check(u, g.vertex);
  check(pos, g.positive);
  for (std::size_t k = 0; k < negs.size(); ++k) check(negs[k], g.negatives[k]);
}

TEST(Embed, SgdStepIsMinusLrTimesGradient) {
  const std::size_t d = 4;
  std::vector<double> u = {0.1, -0.2, 0.3, 0.05}, c0 = {0.2, 0.1, -0.1, 0.4}, c1 = {-0.3, 0.2, 0.1, 0.0};
  std::vector<std::span<const double>> ns = {c1};
  const auto g = negative_sampling_gradient(u, c0, ns);
  const double lr = 0.01;
  auto u2 = u, p2 = c0, n2 = c1;
  double* rows[] = {p2.data(), n2.data()};
  std::vector<double> err(d), tmp(d);
  const double loss = detail::line_step<false>(u2.data(), rows, 2, d, lr, err, tmp);
  EXPECT_NEAR(loss, negative_sampling_loss(u, c0, ns), 1e-15);
  for (std::size_t i = 0; i < d; ++i) {
    EXPECT_NEAR(u2[i], u[i] - lr * g.vertex[i], 1e-15);
    EXPECT_NEAR(p2[i], c0[i] - lr * g.positive[i], 1e-15);
  }
  // the noise row sees the positive row's update first only via u, which is unchanged until the end
  for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(n2[i], c1[i] - lr * g.negatives[0][i], 1e-15);
}

TEST(Embed, SigmoidIsStableAtExtremes) {
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_TRUE(std::isfinite(log_sigmoid(-800.0)));
  EXPECT_NEAR(log_sigmoid(-800.0), -800.0, 1e-9);
  EXPECT_NEAR(sigmoid(-800.0), 0.0, 1e-300);
  EXPECT_DOUBLE_EQ(sigmoid(800.0), 1.0);
}

TEST(Embed, InvalidConfig) {
  TrainConfig c;
  c.negatives = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.dim = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.initial_lr = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(train_line2(two_cliques(), TrainConfig{.negatives = 0}), ConfigError);
}

TEST(Embed, SingleWorkerIsBitwiseDeterministic) {
  const auto g = two_cliques();
  TrainConfig c{.dim = 8, .total_samples = 20000, .seed = 9};
  const auto a = train_line2(g, c);
  const auto b = train_line2(g, c);
  EXPECT_EQ(a.embeddings.vertex, b.embeddings.vertex);
  EXPECT_EQ(a.stats.loss_curve, b.stats.loss_curve);
  c.seed = 10;
  EXPECT_NE(train_line2(g, c).embeddings.vertex, a.embeddings.vertex);
}

TEST(Embed, CliquesSeparateAndLossFalls) {
  const auto g = two_cliques();
  for (unsigned workers : {1u, 4u}) {
    const auto r = train_line2(g, TrainConfig{.dim = 8, .total_samples = 100000, .seed = 3, .workers = workers});
    const auto& e = r.embeddings;
    double intra = 0, inter = 0;
    int ni = 0, nx = 0;
    for (std::size_t a = 0; a < 20; ++a) {
      for (std::size_t b = a + 1; b < 20; ++b) {
        const double c = cosine(e.row(a), e.row(b));
        if (a / 10 == b / 10) intra += c, ++ni;
        else inter += c, ++nx;
      }
    }
    EXPECT_GT(intra / ni, inter / nx + 0.5) << workers << " workers";
    double first = 0, last = 0;
    for (int b = 0; b < 10; ++b) first += r.stats.loss_curve[b], last += r.stats.loss_curve[90 + b];
    EXPECT_LT(last, first);
    for (double x : e.vertex) ASSERT_TRUE(std::isfinite(x));
  }
}

TEST(Embed, IsolatedNodesKeepInitialVectors) {
  EdgeList l;
  l.ids.intern("a");
  l.ids.intern("b");
  l.ids.intern("lonely");  // only followed, never follows
  l.edges = {{0, 1}, {1, 0}, {0, 2}};
  const auto g = build_graph(l).graph;
  const auto init = train_line2(g, TrainConfig{.dim = 4, .total_samples = 1, .seed = 5});
  const auto r = train_line2(g, TrainConfig{.dim = 4, .total_samples = 5000, .seed = 5});
  EXPECT_EQ(r.stats.isolated_nodes, 1u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(r.embeddings.row(2)[i], init.embeddings.row(2)[i]);
  for (double x : init.embeddings.vertex) EXPECT_LE(std::abs(x), 0.5 / 4);
}

TEST(Embed, ProgressCallbackReports) {
  std::vector<TrainProgress> seen;
  train_line2(two_cliques(), TrainConfig{.dim = 4, .total_samples = 10000, .seed = 1, .log_every = 2000},
              [&](const TrainProgress& p) { seen.push_back(p); });
  ASSERT_FALSE(seen.empty());
  EXPECT_EQ(seen.front().total_samples, 10000u);
  for (std::size_t i = 1; i < seen.size(); ++i) EXPECT_LT(seen[i].lr, seen[i - 1].lr);
}

TEST(Embed, ExportImportRoundTripIsExact) {
  TempDir dir;
  const auto r = train_line2(two_cliques(), TrainConfig{.dim = 4, .total_samples = 5000, .seed = 2});
  export_embeddings(r.embeddings, dir.file("e.csv"));
  const auto back = import_embeddings(dir.file("e.csv"));
  EXPECT_EQ(back.dim, 4u);
  EXPECT_EQ(back.node_ids, r.embeddings.node_ids);
  EXPECT_EQ(back.vertex, r.embeddings.vertex);
}

TEST(Embed, ImportRejectsDimensionMismatch) {
  TempDir dir;
  std::string text = "node_id";
  for (int i = 0; i < 16; ++i) text += ",e" + std::to_string(i);
  text += "\na,1,2,3,4,5,6,7,8\n";
  EXPECT_THROW(import_embeddings(dir.write("e.csv", text)), ParseError);
  EXPECT_THROW(import_embeddings(dir.write("f.csv", "id,e0\na,1\n")), ParseError);
  EXPECT_THROW(import_embeddings(dir.write("g.csv", "node_id,e0\na,nan\n")), ParseError);
}
