#pragma once

// Gold/predicted mention alignment: exact, partial, and head matching over a
// shared surface token sequence, with dependency-based alignment of zero
// mentions (maximum-weight bipartite matching over enhanced dependencies).

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "coreval/assignment.hpp"
#include "coreval/conllu.hpp"
#include "coreval/mention.hpp"

namespace coreval {

enum class MatchKind { Exact, Partial, Head };
enum class ZeroMode { Dependency, Strict };

struct MatchStrategy {
  MatchKind kind = MatchKind::Head;
  bool include_singletons = false;
  ZeroMode zero_mode = ZeroMode::Dependency;
};

struct ZeroPair {
  NodeId gold;
  NodeId pred;
  int weight = 0;
};

struct ZeroAlignment {
  std::vector<ZeroPair> pairs;

  std::optional<NodeId> pred_for(const NodeId& gold) const {
    for (const ZeroPair& p : pairs)
      if (p.gold == gold) return p.pred;
    return std::nullopt;
  }
  std::optional<NodeId> gold_for(const NodeId& pred) const {
    for (const ZeroPair& p : pairs)
      if (p.pred == pred) return p.gold;
    return std::nullopt;
  }
  /// Role-swapped view, for symmetric scoring.
  ZeroAlignment transposed() const {
    ZeroAlignment out;
    for (const ZeroPair& p : pairs) out.pairs.push_back({p.pred, p.gold, p.weight});
    return out;
  }
};

class AlignInputError : public std::runtime_error {
 public:
  explicit AlignInputError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace align_detail {

/// 2 when some enhanced dependency agrees in parent and relation, 1 when only
/// a parent agrees, 0 otherwise. Unlabeled relations ("_" or empty) can only
/// reach weight 1.
inline int zero_pair_weight(const Node& gold, const Node& pred) {
  int w = 0;
  for (const EnhancedDep& dg : gold.deps)
    for (const EnhancedDep& dp : pred.deps) {
      if (dg.parent.word != dp.parent.word || dg.parent.empty != dp.parent.empty) continue;
      bool labeled = !dg.rel.empty() && dg.rel != "_" && !dp.rel.empty() && dp.rel != "_";
      w = std::max(w, labeled && dg.rel == dp.rel ? 2 : 1);
    }
  return w;
}

/// Greedy extraction of the optimum matching in a transpose-invariant pair
/// order: a pair is fixed when doing so still allows reaching the optimal
/// total weight on the remainder. Rows/cols with weight <= 0 never pair.
/// Components beyond the canonicalization cap skip the greedy tie-break and
/// take the solver's assignment directly (still optimal and deterministic);
/// the cap bounds the otherwise O(n^2) feasibility re-solves.
inline constexpr int kCanonicalCap = 12;

inline std::vector<std::pair<int, int>> canonical_matching(
    const std::vector<std::vector<double>>& w,
    const std::vector<std::pair<int, int>>& pair_order) {
  int n = static_cast<int>(w.size());
  int m = n == 0 ? 0 : static_cast<int>(w[0].size());
  std::vector<std::pair<int, int>> fixed;
  if (n == 0 || m == 0) return fixed;

  if (n > kCanonicalCap || m > kCanonicalCap) {
    Assignment a = max_weight_assignment(w);
    for (int i = 0; i < n; ++i)
      if (a.row_to_col[i] >= 0 && w[i][a.row_to_col[i]] > 0.0) fixed.emplace_back(i, a.row_to_col[i]);
    return fixed;
  }

  const double eps = 1e-9;
  double target = assignment_value(w);
  std::vector<char> row_used(n, 0), col_used(m, 0);
  double fixed_sum = 0.0;

  auto rest_value = [&](int skip_row, int skip_col) {
    std::vector<int> rows, cols;
    for (int i = 0; i < n; ++i)
      if (!row_used[i] && i != skip_row) rows.push_back(i);
    for (int j = 0; j < m; ++j)
      if (!col_used[j] && j != skip_col) cols.push_back(j);
    std::vector<std::vector<double>> sub(rows.size(), std::vector<double>(cols.size(), 0.0));
    for (std::size_t a = 0; a < rows.size(); ++a)
      for (std::size_t b = 0; b < cols.size(); ++b) sub[a][b] = w[rows[a]][cols[b]];
    return assignment_value(sub);
  };

  for (const auto& [i, j] : pair_order) {
    if (row_used[i] || col_used[j] || w[i][j] <= 0.0) continue;
    if (fixed_sum + w[i][j] + rest_value(i, j) + eps >= target) {
      row_used[i] = 1;
      col_used[j] = 1;
      fixed_sum += w[i][j];
      fixed.emplace_back(i, j);
    }
  }
  return fixed;
}

}  // namespace align_detail

/// Aligns the empty nodes of two corresponding sentences one-to-one by
/// maximizing agreement of their enhanced dependencies; zero-weight pairs are
/// excluded. Deterministic: among co-optimal matchings, pairs are fixed in
/// node order (transpose-invariant).
inline std::vector<ZeroPair> align_zeros_sentence(const Sentence& gold, const Sentence& pred) {
  std::vector<const Node*> g, p;
  for (const Node& n : gold.nodes)
    if (n.id.is_empty_node()) g.push_back(&n);
  for (const Node& n : pred.nodes)
    if (n.id.is_empty_node()) p.push_back(&n);
  if (g.empty() || p.empty()) return {};

  std::vector<std::vector<double>> w(g.size(), std::vector<double>(p.size(), 0.0));
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j)
      w[i][j] = align_detail::zero_pair_weight(*g[i], *p[j]);

  std::vector<std::pair<int, int>> order;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j) order.emplace_back((int)i, (int)j);
  std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    NodeId ga = g[a.first]->id, pa = p[a.second]->id;
    NodeId gb = g[b.first]->id, pb = p[b.second]->id;
    return std::tuple(std::min(ga, pa), std::max(ga, pa)) <
           std::tuple(std::min(gb, pb), std::max(gb, pb));
  });

  std::vector<ZeroPair> out;
  for (const auto& [i, j] : align_detail::canonical_matching(w, order))
    out.push_back({g[i]->id, p[j]->id, static_cast<int>(w[i][j])});
  return out;
}

/// Sentence-by-sentence zero alignment for a document pair.
inline ZeroAlignment align_zeros(const Document& gold, const Document& pred) {
  if (gold.sentences.size() != pred.sentences.size())
    throw AlignInputError("documents differ in sentence count (" +
                          std::to_string(gold.sentences.size()) + " vs " +
                          std::to_string(pred.sentences.size()) + ")");
  ZeroAlignment out;
  for (std::size_t s = 0; s < gold.sentences.size(); ++s) {
    std::vector<ZeroPair> pairs = align_zeros_sentence(gold.sentences[s], pred.sentences[s]);
    out.pairs.insert(out.pairs.end(), pairs.begin(), pairs.end());
  }
  return out;
}

struct MentionRef {
  int entity = -1;
  int mention = -1;
  auto operator<=>(const MentionRef&) const = default;
};

struct MentionAlignment {
  std::vector<std::pair<MentionRef, MentionRef>> pairs;  // (gold, pred)
  std::vector<MentionRef> unmatched_gold;
  std::vector<MentionRef> unmatched_pred;
};

namespace align_detail {

struct FlatMention {
  MentionRef ref;
  const Mention* mention;
  std::vector<NodeId> sorted_nodes;   // gold space for pred mentions
  bool fully_mapped = true;
  std::optional<NodeId> mapped_head;  // gold space
};

inline std::vector<FlatMention> flatten_gold(const CorefDoc& cd) {
  std::vector<FlatMention> out;
  for (int e = 0; e < static_cast<int>(cd.entities.size()); ++e)
    for (int m = 0; m < static_cast<int>(cd.entities[e].mentions.size()); ++m) {
      const Mention& men = cd.entities[e].mentions[m];
      FlatMention fm;
      fm.ref = {e, m};
      fm.mention = &men;
      fm.sorted_nodes = men.nodes;
      std::sort(fm.sorted_nodes.begin(), fm.sorted_nodes.end());
      fm.mapped_head = men.head;
      out.push_back(std::move(fm));
    }
  return out;
}

inline std::vector<FlatMention> flatten_pred(const CorefDoc& cd, const ZeroAlignment& zeros,
                                             ZeroMode mode) {
  std::map<NodeId, NodeId> to_gold;
  if (mode == ZeroMode::Dependency)
    for (const ZeroPair& zp : zeros.pairs) to_gold[zp.pred] = zp.gold;

  auto map_node = [&](const NodeId& id) -> std::optional<NodeId> {
    if (!id.is_empty_node()) return id;
    if (mode == ZeroMode::Strict) return id;
    auto it = to_gold.find(id);
    if (it == to_gold.end()) return std::nullopt;
    return it->second;
  };

  std::vector<FlatMention> out;
  for (int e = 0; e < static_cast<int>(cd.entities.size()); ++e)
    for (int m = 0; m < static_cast<int>(cd.entities[e].mentions.size()); ++m) {
      const Mention& men = cd.entities[e].mentions[m];
      FlatMention fm;
      fm.ref = {e, m};
      fm.mention = &men;
      for (const NodeId& id : men.nodes) {
        auto mapped = map_node(id);
        if (mapped)
          fm.sorted_nodes.push_back(*mapped);
        else
          fm.fully_mapped = false;
      }
      std::sort(fm.sorted_nodes.begin(), fm.sorted_nodes.end());
      fm.mapped_head = map_node(men.head);
      out.push_back(std::move(fm));
    }
  return out;
}

inline int overlap_size(const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
  std::size_t i = 0, j = 0;
  int c = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j])
      ++i;
    else if (b[j] < a[i])
      ++j;
    else {
      ++c;
      ++i;
      ++j;
    }
  }
  return c;
}

inline bool admissible(const FlatMention& g, const FlatMention& p, MatchKind kind) {
  switch (kind) {
    case MatchKind::Exact:
      return p.fully_mapped && g.sorted_nodes == p.sorted_nodes;
    case MatchKind::Head:
      return p.mapped_head && g.mention->head == *p.mapped_head;
    case MatchKind::Partial: {
      if (!p.fully_mapped || !p.mapped_head) return false;
      if (!std::binary_search(p.sorted_nodes.begin(), p.sorted_nodes.end(), g.mention->head))
        return false;
      return std::includes(g.sorted_nodes.begin(), g.sorted_nodes.end(), p.sorted_nodes.begin(),
                           p.sorted_nodes.end());
    }
  }
  return false;
}

}  // namespace align_detail

/// Maximum-cardinality one-to-one mention matching under the strategy's
/// admissibility relation; among co-maximal matchings the one with maximal
/// total node overlap, ties fixed greedily in a transpose-invariant mention
/// order. Strategy admissibility:
///   exact   - identical node sets (zeros identified through the alignment)
///   head    - heads refer to the same token (zeros match only zeros)
///   partial - the prediction contains the gold head and lies within the gold span
inline MentionAlignment align_mentions(const CorefDoc& gold, const CorefDoc& pred,
                                       const MatchStrategy& strategy, const ZeroAlignment& zeros) {
  using namespace align_detail;

  std::vector<FlatMention> g = flatten_gold(gold);
  std::vector<FlatMention> p = flatten_pred(pred, zeros, strategy.zero_mode);

  struct Edge {
    int gi, pi;
    int overlap;
  };
  std::vector<Edge> edges;
  // Bucket gold mentions by head to keep head matching near-linear; the other
  // kinds fall back to the same buckets (every admissible pair shares at
  // least the gold head node).
  std::map<NodeId, std::vector<int>> gold_by_head;
  for (int i = 0; i < static_cast<int>(g.size()); ++i) gold_by_head[g[i].mention->head].push_back(i);

  for (int j = 0; j < static_cast<int>(p.size()); ++j) {
    std::set<int> candidates;
    if (strategy.kind == MatchKind::Head) {
      if (p[j].mapped_head) {
        auto it = gold_by_head.find(*p[j].mapped_head);
        if (it != gold_by_head.end())
          for (int i : it->second) candidates.insert(i);
      }
    } else {
      // exact and partial pairs both contain the gold head among the
      // prediction's nodes, so head buckets cover every admissible pair
      for (const NodeId& id : p[j].sorted_nodes) {
        auto it = gold_by_head.find(id);
        if (it != gold_by_head.end())
          for (int i : it->second) candidates.insert(i);
      }
    }
    for (int i : candidates)
      if (admissible(g[i], p[j], strategy.kind))
        edges.push_back({i, j, overlap_size(g[i].sorted_nodes, p[j].sorted_nodes)});
  }

  // Connected components of the admissibility graph.
  std::vector<int> gcomp(g.size(), -1), pcomp(p.size(), -1);
  int ncomp = 0;
  {
    std::map<int, std::vector<int>> g_edges, p_edges;  // node -> edge indices
    for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
      g_edges[edges[e].gi].push_back(e);
      p_edges[edges[e].pi].push_back(e);
    }
    for (int start = 0; start < static_cast<int>(g.size()); ++start) {
      if (gcomp[start] >= 0 || !g_edges.count(start)) continue;
      int c = ncomp++;
      std::vector<std::pair<bool, int>> stack{{true, start}};
      while (!stack.empty()) {
        auto [is_gold, idx] = stack.back();
        stack.pop_back();
        if (is_gold) {
          if (gcomp[idx] >= 0) continue;
          gcomp[idx] = c;
          for (int e : g_edges[idx]) stack.push_back({false, edges[e].pi});
        } else {
          if (pcomp[idx] >= 0) continue;
          pcomp[idx] = c;
          for (int e : p_edges[idx]) stack.push_back({true, edges[e].gi});
        }
      }
    }
  }

  double big = 1.0;
  for (const Edge& e : edges) big += e.overlap;

  MentionAlignment out;
  std::vector<char> g_matched(g.size(), 0), p_matched(p.size(), 0);

  for (int c = 0; c < ncomp; ++c) {
    std::vector<int> gs, ps;
    for (int i = 0; i < static_cast<int>(g.size()); ++i)
      if (gcomp[i] == c) gs.push_back(i);
    for (int j = 0; j < static_cast<int>(p.size()); ++j)
      if (pcomp[j] == c) ps.push_back(j);

    std::vector<std::vector<double>> w(gs.size(), std::vector<double>(ps.size(), 0.0));
    for (const Edge& e : edges) {
      if (gcomp[e.gi] != c) continue;
      int a = static_cast<int>(std::find(gs.begin(), gs.end(), e.gi) - gs.begin());
      int b = static_cast<int>(std::find(ps.begin(), ps.end(), e.pi) - ps.begin());
      w[a][b] = big + e.overlap;
    }

    // Pair order for tie-breaking: transpose-invariant (unordered span pair)
    // and independent of entity naming (flat mention ordinals, not ids).
    std::vector<std::pair<int, int>> order;
    for (std::size_t a = 0; a < gs.size(); ++a)
      for (std::size_t b = 0; b < ps.size(); ++b)
        if (w[a][b] > 0) order.emplace_back((int)a, (int)b);
    auto key = [&](const std::pair<int, int>& ab) {
      const Mention& mg = *g[gs[ab.first]].mention;
      const Mention& mp = *p[ps[ab.second]].mention;
      std::tuple ga(mg.start(), mg.end(), gs[ab.first]);
      std::tuple pa(mp.start(), mp.end(), ps[ab.second]);
      return ga < pa ? std::tuple(ga, pa) : std::tuple(pa, ga);
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](const auto& x, const auto& y) { return key(x) < key(y); });

    for (const auto& [a, b] : align_detail::canonical_matching(w, order)) {
      out.pairs.emplace_back(g[gs[a]].ref, p[ps[b]].ref);
      g_matched[gs[a]] = 1;
      p_matched[ps[b]] = 1;
    }
  }

  for (int i = 0; i < static_cast<int>(g.size()); ++i)
    if (!g_matched[i]) out.unmatched_gold.push_back(g[i].ref);
  for (int j = 0; j < static_cast<int>(p.size()); ++j)
    if (!p_matched[j]) out.unmatched_pred.push_back(p[j].ref);
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

}  // namespace coreval
