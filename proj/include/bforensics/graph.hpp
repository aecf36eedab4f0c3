#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bforensics/errors.hpp"

namespace bforensics {

using NodeId = std::uint32_t;

// Dense 0..n-1 ids for opaque external user ids, assigned in first-seen order.
class IdMap {
 public:
  NodeId intern(std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it != index_.end()) return it->second;
    const auto id = static_cast<NodeId>(names_.size());
    names_.emplace_back(name);
    index_.emplace(names_.back(), id);
    return id;
  }

  std::optional<NodeId> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& name(NodeId id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeId> index_;
};

struct Edge {
  NodeId follower;
  NodeId followee;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct EdgeList {
  IdMap ids;
  std::vector<Edge> edges;
  std::size_t duplicates_dropped = 0;
};

// Directed follower -> followee graph in CSR form. Out-edges point at
// followees; the reverse (in-edge) index lists followers and is what exposure
// derivation walks.
class FollowGraph {
 public:
  FollowGraph() = default;

  std::size_t num_nodes() const { return ids_.size(); }
  std::size_t num_edges() const { return out_targets_.size(); }

  std::span<const NodeId> followees(NodeId u) const {
    return {out_targets_.data() + out_offsets_[u], out_targets_.data() + out_offsets_[u + 1]};
  }
  std::span<const NodeId> followers(NodeId u) const {
    return {in_sources_.data() + in_offsets_[u], in_sources_.data() + in_offsets_[u + 1]};
  }
  std::size_t out_degree(NodeId u) const { return out_offsets_[u + 1] - out_offsets_[u]; }
  std::size_t in_degree(NodeId u) const { return in_offsets_[u + 1] - in_offsets_[u]; }

  const IdMap& ids() const { return ids_; }
  const std::vector<std::uint64_t>& out_offsets() const { return out_offsets_; }
  const std::vector<NodeId>& out_targets() const { return out_targets_; }

  // Edge e as (source, target), with edges numbered in CSR order.
  std::pair<NodeId, NodeId> edge(std::size_t e) const {
    return {edge_sources_[e], out_targets_[e]};
  }

  static FollowGraph from_csr(IdMap ids, std::vector<std::uint64_t> out_offsets,
                              std::vector<NodeId> out_targets) {
    FollowGraph g;
    g.ids_ = std::move(ids);
    g.out_offsets_ = std::move(out_offsets);
    g.out_targets_ = std::move(out_targets);
    g.finish();
    return g;
  }

 private:
  void finish() {
    const std::size_t n = ids_.size();
    if (out_offsets_.size() != n + 1 || out_offsets_.back() != out_targets_.size()) {
      throw DataError("graph: CSR offsets inconsistent with edge array");
    }
    edge_sources_.resize(out_targets_.size());
    in_offsets_.assign(n + 1, 0);
    for (NodeId u = 0; u < n; ++u) {
      if (out_offsets_[u] > out_offsets_[u + 1]) throw DataError("graph: offsets not monotone");
      for (auto e = out_offsets_[u]; e < out_offsets_[u + 1]; ++e) {
        const NodeId v = out_targets_[e];
        if (v >= n) throw DataError("graph: edge target out of range");
        if (v == u) throw DataError("graph: self-loop in adjacency");
        if (e > out_offsets_[u] && out_targets_[e - 1] >= v) throw DataError("graph: adjacency not sorted/unique");
        edge_sources_[e] = u;
        ++in_offsets_[v + 1];
      }
    }
    for (std::size_t i = 0; i < n; ++i) in_offsets_[i + 1] += in_offsets_[i];
    in_sources_.resize(out_targets_.size());
    std::vector<std::uint64_t> cursor(in_offsets_.begin(), in_offsets_.end() - 1);
    // Sources are visited in increasing order, so each follower list is sorted.
    for (NodeId u = 0; u < n; ++u) {
      for (auto e = out_offsets_[u]; e < out_offsets_[u + 1]; ++e) {
        in_sources_[cursor[out_targets_[e]]++] = u;
      }
    }
  }

  IdMap ids_;
  std::vector<std::uint64_t> out_offsets_{0};
  std::vector<NodeId> out_targets_;
  std::vector<NodeId> edge_sources_;
  std::vector<std::uint64_t> in_offsets_{0};
  std::vector<NodeId> in_sources_;
};

struct GraphBuild {
  FollowGraph graph;
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_dropped = 0;
};

inline GraphBuild build_graph(EdgeList list) {
  if (list.edges.empty()) throw DataError("build_graph: empty edge list");
  GraphBuild out;
  auto& edges = list.edges;
  const auto before = edges.size();
  std::erase_if(edges, [](const Edge& e) { return e.follower == e.followee; });
  out.self_loops_dropped = before - edges.size();
  std::sort(edges.begin(), edges.end());
  const auto unique_end = std::unique(edges.begin(), edges.end());
  out.duplicates_dropped = list.duplicates_dropped + static_cast<std::size_t>(edges.end() - unique_end);
  edges.erase(unique_end, edges.end());
  if (edges.empty()) throw DataError("build_graph: no edges left after dropping self-loops");

  const std::size_t n = list.ids.size();
  std::vector<std::uint64_t> offsets(n + 1, 0);
  std::vector<NodeId> targets;
  targets.reserve(edges.size());
  for (const auto& e : edges) {
    ++offsets[e.follower + 1];
    targets.push_back(e.followee);
  }
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  out.graph = FollowGraph::from_csr(std::move(list.ids), std::move(offsets), std::move(targets));
  return out;
}

// Binary snapshot layout (little-endian):
//   magic "BFGRAPH\0" | u32 version | u64 n | u64 m
//   u64 out_offsets[n+1] | u32 out_targets[m]
//   n x (u32 byte length, UTF-8 bytes) external ids in node order
namespace snapshot {

inline constexpr char kMagic[8] = {'B', 'F', 'G', 'R', 'A', 'P', 'H', '\0'};
inline constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw DataError("graph snapshot: truncated file");
  return v;
}

}  // namespace snapshot

inline void save_snapshot(const FollowGraph& g, const std::string& path) {
  using namespace snapshot;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint64_t>(g.num_nodes()));
  write_pod(out, static_cast<std::uint64_t>(g.num_edges()));
  out.write(reinterpret_cast<const char*>(g.out_offsets().data()),
            static_cast<std::streamsize>(g.out_offsets().size() * sizeof(std::uint64_t)));
  out.write(reinterpret_cast<const char*>(g.out_targets().data()),
            static_cast<std::streamsize>(g.out_targets().size() * sizeof(NodeId)));
  for (const auto& name : g.ids().names()) {
    write_pod(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  if (!out) throw DataError("write failed: " + path);
}

inline FollowGraph load_snapshot(const std::string& path) {
  using namespace snapshot;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("graph snapshot: bad magic in " + path);
  }
  if (read_pod<std::uint32_t>(in) != kVersion) throw DataError("graph snapshot: unsupported version");
  const auto n = read_pod<std::uint64_t>(in);
  const auto m = read_pod<std::uint64_t>(in);
  std::vector<std::uint64_t> offsets(n + 1);
  std::vector<NodeId> targets(m);
  in.read(reinterpret_cast<char*>(offsets.data()), static_cast<std::streamsize>(offsets.size() * sizeof(std::uint64_t)));
  in.read(reinterpret_cast<char*>(targets.data()), static_cast<std::streamsize>(targets.size() * sizeof(NodeId)));
  if (!in) throw DataError("graph snapshot: truncated arrays");
  IdMap ids;
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto len = read_pod<std::uint32_t>(in);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw DataError("graph snapshot: truncated id map");
    if (ids.intern(name) != i) throw DataError("graph snapshot: duplicate external id " + name);
  }
  return FollowGraph::from_csr(std::move(ids), std::move(offsets), std::move(targets));
}

}  // namespace bforensics
