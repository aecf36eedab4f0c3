#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bforensics/alias.hpp"
#include "bforensics/errors.hpp"
#include "bforensics/graph.hpp"
#include "bforensics/ingest.hpp"
#include "bforensics/parallel.hpp"
#include "bforensics/rng.hpp"

namespace bforensics {

struct TrainConfig {
  std::size_t dim = 16;
  std::uint64_t total_samples = 0;  // 0 means 100 * num_edges
  std::size_t negatives = 5;
  double initial_lr = 0.025;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::uint64_t log_every = 0;  // progress callback period in samples; 0 = never

  std::uint64_t resolved_samples(std::size_t num_edges) const {
    return total_samples ? total_samples : 100 * static_cast<std::uint64_t>(num_edges);
  }

  void validate() const {
    if (dim == 0) throw ConfigError("embedding dim must be positive");
    if (negatives == 0) throw ConfigError("negatives per edge must be positive");
    if (!(initial_lr > 0.0) || !std::isfinite(initial_lr)) throw ConfigError("initial learning rate must be positive");
    if (workers == 0) throw ConfigError("workers must be positive");
  }
};

inline constexpr double kNoisePower = 0.75;
inline constexpr double kMinLrFraction = 1e-4;

// Per-node vertex vectors (the exported features) and context vectors, row-major.
struct EmbeddingMatrix {
  std::size_t dim = 0;
  std::vector<std::string> node_ids;
  std::vector<double> vertex;
  std::vector<double> context;  // empty after import

  std::size_t rows() const { return node_ids.size(); }
  std::span<const double> row(std::size_t i) const { return {vertex.data() + i * dim, dim}; }
  std::span<double> row(std::size_t i) { return {vertex.data() + i * dim, dim}; }

  std::unordered_map<std::string, std::size_t> index() const {
    std::unordered_map<std::string, std::size_t> out;
    out.reserve(node_ids.size());
    for (std::size_t i = 0; i < node_ids.size(); ++i) out.emplace(node_ids[i], i);
    return out;
  }
};

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Negative-sampling loss of one observed edge against its noise set:
//   -log s(u.c_pos) - sum_k log s(-u.c_neg_k)
inline double negative_sampling_loss(std::span<const double> vertex, std::span<const double> positive,
                                     std::span<const std::span<const double>> negatives) {
  double loss = -log_sigmoid(dot(vertex, positive));
  for (auto neg : negatives) loss -= log_sigmoid(-dot(vertex, neg));
  return loss;
}

struct NegativeSamplingGradient {
  std::vector<double> vertex;
  std::vector<double> positive;
  std::vector<std::vector<double>> negatives;
};

inline NegativeSamplingGradient negative_sampling_gradient(std::span<const double> vertex, std::span<const double> positive,
                                                           std::span<const std::span<const double>> negatives) {
  const std::size_t d = vertex.size();
  NegativeSamplingGradient g{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0), {}};
  auto accumulate = [&](std::span<const double> ctx, double label, std::vector<double>& d_ctx) {
    // dL/dx = sigmoid(x) - label for x = u.c
    const double coeff = sigmoid(dot(vertex, ctx)) - label;
    for (std::size_t i = 0; i < d; ++i) {
      g.vertex[i] += coeff * ctx[i];
      d_ctx[i] = coeff * vertex[i];
    }
  };
  accumulate(positive, 1.0, g.positive);
  for (auto neg : negatives) {
    g.negatives.emplace_back(d, 0.0);
    accumulate(neg, 0.0, g.negatives.back());
  }
  return g;
}

namespace detail {

template <bool Shared>
struct Cell {
  static double load(double& x) {
    if constexpr (Shared) return std::atomic_ref<double>(x).load(std::memory_order_relaxed);
    else return x;
  }
  static void store(double& x, double v) {
    if constexpr (Shared) std::atomic_ref<double>(x).store(v, std::memory_order_relaxed);
    else x = v;
  }
};

// One SGD step on edge (u, targets[0]) with targets[1..] as noise. Context
// rows are updated in place; the vertex row takes the summed update at the end.
// Returns the sample loss before the update.
template <bool Shared>
double line_step(double* vertex_row, double* const* context_rows, std::size_t n_targets, std::size_t dim, double lr,
                 std::vector<double>& err, std::vector<double>& u) {
  using C = Cell<Shared>;
  for (std::size_t i = 0; i < dim; ++i) u[i] = C::load(vertex_row[i]), err[i] = 0.0;
  double loss = 0.0;
  for (std::size_t t = 0; t < n_targets; ++t) {
    double* ctx = context_rows[t];
    const double label = t == 0 ? 1.0 : 0.0;
    double x = 0.0;
    for (std::size_t i = 0; i < dim; ++i) x += u[i] * C::load(ctx[i]);
    loss -= t == 0 ? log_sigmoid(x) : log_sigmoid(-x);
    const double g = (label - sigmoid(x)) * lr;
    for (std::size_t i = 0; i < dim; ++i) {
      const double c = C::load(ctx[i]);
      err[i] += g * c;
      C::store(ctx[i], c + g * u[i]);
    }
  }
  for (std::size_t i = 0; i < dim; ++i) C::store(vertex_row[i], C::load(vertex_row[i]) + err[i]);
  return loss;
}

}  // namespace detail

struct TrainProgress {
  std::uint64_t samples_done = 0;
  std::uint64_t total_samples = 0;
  double lr = 0.0;
  double running_loss = 0.0;  // mean sample loss since the previous report
};

struct TrainStats {
  std::uint64_t total_samples = 0;
  std::size_t isolated_nodes = 0;  // no out-edges: vertex vectors never updated
  std::vector<double> loss_curve;  // mean sample loss per 1% of training
};

inline constexpr std::size_t kLossBuckets = 100;

struct TrainResult {
  EmbeddingMatrix embeddings;
  TrainStats stats;
};

// Second-order LINE on a directed graph: edges are drawn uniformly, noise
// vertices from out_degree^0.75, and the learning rate decays linearly with
// consumed samples down to initial_lr * 1e-4. With workers > 1 the parameter
// rows are updated without locking; only the single-worker run is
// bit-reproducible.
inline TrainResult train_line2(const FollowGraph& graph, const TrainConfig& cfg,
                               const std::function<void(const TrainProgress&)>& progress = {}) {
  cfg.validate();
  if (graph.num_nodes() == 0 || graph.num_edges() == 0) throw DataError("train_line2: empty graph");
  const std::size_t n = graph.num_nodes();
  const std::size_t m = graph.num_edges();
  const std::size_t dim = cfg.dim;
  const std::uint64_t total = cfg.resolved_samples(m);

  TrainResult result;
  auto& emb = result.embeddings;
  emb.dim = dim;
  emb.node_ids = graph.ids().names();
  emb.vertex.resize(n * dim);
  emb.context.assign(n * dim, 0.0);
  {
    Rng init(derive_seed(cfg.seed, 0x1417));
    const double half = 0.5 / static_cast<double>(dim);
    for (auto& x : emb.vertex) x = (uniform01(init) * 2.0 - 1.0) * half;
  }

  std::vector<double> noise_weights(n);
  for (NodeId v = 0; v < n; ++v) {
    noise_weights[v] = std::pow(static_cast<double>(graph.out_degree(v)), kNoisePower);
    if (graph.out_degree(v) == 0) ++result.stats.isolated_nodes;
  }
  const AliasTable noise(noise_weights);

  const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(cfg.workers, std::max<std::uint64_t>(total, 1)));
  std::atomic<std::uint64_t> done{0};
  std::atomic<std::uint64_t> next_report{cfg.log_every ? cfg.log_every : 0};
  std::vector<std::vector<double>> bucket_sum(workers, std::vector<double>(kLossBuckets, 0.0));
  std::vector<std::vector<std::uint64_t>> bucket_n(workers, std::vector<std::uint64_t>(kLossBuckets, 0));
  std::mutex report_mutex;
  double report_loss = 0.0;
  std::uint64_t report_n = 0;

  auto run = [&]<bool Shared>(unsigned w) {
    const std::uint64_t quota = total / workers + (w < total % workers ? 1 : 0);
    Rng rng(derive_seed(cfg.seed, 0x5eed0000ULL + w));
    std::vector<double> err(dim), u(dim);
    std::vector<double*> targets(cfg.negatives + 1);
    double lr = cfg.initial_lr;
    double local_loss = 0.0;
    std::uint64_t local_n = 0;
    constexpr std::uint64_t kSync = 1000;
    for (std::uint64_t i = 0; i < quota; ++i) {
      if (i % kSync == 0) {
        const std::uint64_t global = i == 0 ? done.load() : done.fetch_add(kSync) + kSync;
        lr = cfg.initial_lr * std::max(kMinLrFraction, 1.0 - static_cast<double>(global) / static_cast<double>(total + 1));
        if (progress && cfg.log_every && global >= next_report.load()) {
          std::lock_guard lock(report_mutex);
          if (global >= next_report.load()) {
            report_loss += local_loss, report_n += local_n;
            progress({global, total, lr, report_n ? report_loss / static_cast<double>(report_n) : 0.0});
            report_loss = 0.0, report_n = 0, local_loss = 0.0, local_n = 0;
            next_report.store(global + cfg.log_every);
          }
        }
      }
      const auto [src, dst] = graph.edge(uniform_index(rng, m));
      targets[0] = emb.context.data() + static_cast<std::size_t>(dst) * dim;
      for (std::size_t k = 1; k <= cfg.negatives; ++k) {
        targets[k] = emb.context.data() + noise.sample(rng) * dim;
      }
      const double loss = detail::line_step<Shared>(emb.vertex.data() + static_cast<std::size_t>(src) * dim,
                                                    targets.data(), targets.size(), dim, lr, err, u);
      const std::size_t bucket = static_cast<std::size_t>(i * kLossBuckets / quota);
      bucket_sum[w][bucket] += loss;
      ++bucket_n[w][bucket];
      local_loss += loss;
      ++local_n;
    }
  };

  if (workers == 1) {
    run.template operator()<false>(0);
  } else {
    parallel_for(workers, workers, [&](std::size_t w) { run.template operator()<true>(static_cast<unsigned>(w)); });
  }

  result.stats.total_samples = total;
  result.stats.loss_curve.assign(kLossBuckets, 0.0);
  for (std::size_t b = 0; b < kLossBuckets; ++b) {
    double s = 0.0;
    std::uint64_t c = 0;
    for (unsigned w = 0; w < workers; ++w) s += bucket_sum[w][b], c += bucket_n[w][b];
    result.stats.loss_curve[b] = c ? s / static_cast<double>(c) : 0.0;
  }
  for (double x : emb.vertex) {
    if (!std::isfinite(x)) throw InvariantError("train_line2: non-finite embedding value");
  }
  return result;
}

// embeddings.csv: header node_id,e0..e{dim-1}; values use the shortest
// round-trip decimal form, so export -> import is exact. Rows are streamed.
inline void export_embeddings(const EmbeddingMatrix& emb, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "node_id";
  for (std::size_t d = 0; d < emb.dim; ++d) out << ",e" << d;
  out << '\n';
  std::string line;
  char buf[32];
  for (std::size_t r = 0; r < emb.rows(); ++r) {
    line.assign(emb.node_ids[r]);
    for (double x : emb.row(r)) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), x);
      line.push_back(',');
      line.append(buf, res.ptr);
    }
    line.push_back('\n');
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
  if (!out) throw DataError("write failed: " + path);
}

inline EmbeddingMatrix import_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file " + path);
  std::string raw;
  if (!std::getline(in, raw)) throw DataError("embedding file " + path + " is empty");
  const auto header = detail::split(detail::strip_cr(raw), ',');
  if (header.size() < 2 || header[0] != "node_id") throw ParseError(path, 1, "header must start with node_id");
  EmbeddingMatrix emb;
  emb.dim = header.size() - 1;
  for (std::size_t d = 0; d < emb.dim; ++d) {
    if (header[d + 1] != "e" + std::to_string(d)) throw ParseError(path, 1, "expected column e" + std::to_string(d));
  }
  std::size_t line_no = 1;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::strip_cr(raw);
    if (line.empty()) continue;
    const auto cols = detail::split(line, ',');
    if (cols.size() != emb.dim + 1) {
      throw ParseError(path, line_no, "dimension mismatch: header has " + std::to_string(emb.dim) + " values, row has " +
                                          std::to_string(cols.size() - 1));
    }
    emb.node_ids.emplace_back(cols[0]);
    for (std::size_t d = 0; d < emb.dim; ++d) {
      const auto v = detail::parse_number<double>(cols[d + 1]);
      if (!v || !std::isfinite(*v)) throw ParseError(path, line_no, "bad value in column e" + std::to_string(d));
      emb.vertex.push_back(*v);
    }
  }
  return emb;
}

}  // namespace bforensics
