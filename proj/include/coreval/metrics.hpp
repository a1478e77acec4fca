#pragma once

// Coreference metrics over an aligned gold/predicted document pair. Aligned
// mention pairs are identified as one atom; unmatched mentions stay distinct
// atoms, so both partitions live over a common atom universe and twinless
// mentions penalize recall or precision naturally. Counts are raw numerators
// and denominators so documents can be micro-aggregated by summation.

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "coreval/align.hpp"
#include "coreval/assignment.hpp"
#include "coreval/mention.hpp"

namespace coreval {

struct PRF {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;

  static PRF from_counts(double rn, double rd, double pn, double pd) {
    PRF out;
    out.recall = rd > 0 ? rn / rd : 0.0;
    out.precision = pd > 0 ? pn / pd : 0.0;
    out.f1 = harmonic(out.recall, out.precision);
    return out;
  }
  static double harmonic(double r, double p) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }
};

struct RatioCounts {
  double recall_num = 0, recall_den = 0;
  double precision_num = 0, precision_den = 0;

  RatioCounts& operator+=(const RatioCounts& o) {
    recall_num += o.recall_num;
    recall_den += o.recall_den;
    precision_num += o.precision_num;
    precision_den += o.precision_den;
    return *this;
  }
  PRF prf() const { return PRF::from_counts(recall_num, recall_den, precision_num, precision_den); }
};

struct BlancCounts {
  RatioCounts coref;
  RatioCounts noncoref;

  BlancCounts& operator+=(const BlancCounts& o) {
    coref += o.coref;
    noncoref += o.noncoref;
    return *this;
  }
  /// A component with no links on either side is vacuous and skipped; the
  /// final score averages the remaining components.
  PRF prf() const {
    bool c_vac = coref.recall_den == 0 && coref.precision_den == 0;
    bool n_vac = noncoref.recall_den == 0 && noncoref.precision_den == 0;
    if (c_vac && n_vac) return PRF{};
    if (c_vac) return blanc_of(noncoref.prf(), std::nullopt);
    if (n_vac) return blanc_of(coref.prf(), std::nullopt);
    return blanc_of(coref.prf(), noncoref.prf());
  }

 private:
  static PRF blanc_of(const PRF& a, std::optional<PRF> b) {
    if (!b) return a;
    PRF out;
    out.recall = (a.recall + b->recall) / 2;
    out.precision = (a.precision + b->precision) / 2;
    out.f1 = (a.f1 + b->f1) / 2;
    return out;
  }
};

/// The two partitions of the common atom universe produced by alignment.
struct AtomPartitions {
  std::vector<std::vector<int>> gold;
  std::vector<std::vector<int>> pred;
  int atom_count = 0;

  AtomPartitions transposed() const { return AtomPartitions{pred, gold, atom_count}; }
};

inline AtomPartitions build_atoms(const CorefDoc& gold, const CorefDoc& pred,
                                  const MentionAlignment& alignment) {
  AtomPartitions out;
  std::map<std::pair<int, int>, int> gold_atom, pred_atom;
  int next = 0;
  for (const auto& [g, p] : alignment.pairs) {
    gold_atom[{g.entity, g.mention}] = next;
    pred_atom[{p.entity, p.mention}] = next;
    ++next;
  }
  for (const MentionRef& g : alignment.unmatched_gold) gold_atom[{g.entity, g.mention}] = next++;
  for (const MentionRef& p : alignment.unmatched_pred) pred_atom[{p.entity, p.mention}] = next++;
  out.atom_count = next;

  out.gold.resize(gold.entities.size());
  for (int e = 0; e < static_cast<int>(gold.entities.size()); ++e)
    for (int m = 0; m < static_cast<int>(gold.entities[e].mentions.size()); ++m)
      out.gold[e].push_back(gold_atom.at({e, m}));
  out.pred.resize(pred.entities.size());
  for (int e = 0; e < static_cast<int>(pred.entities.size()); ++e)
    for (int m = 0; m < static_cast<int>(pred.entities[e].mentions.size()); ++m)
      out.pred[e].push_back(pred_atom.at({e, m}));
  return out;
}

namespace metric_detail {

/// Entity index per atom for one side; -1 when the atom is absent.
inline std::vector<int> atom_entities(const std::vector<std::vector<int>>& side, int atom_count) {
  std::vector<int> out(atom_count, -1);
  for (int e = 0; e < static_cast<int>(side.size()); ++e)
    for (int a : side[e]) out[a] = e;
  return out;
}

inline double choose2(double n) { return n * (n - 1) / 2.0; }

/// Vilain-style counts for one direction: key entities scored against the
/// response partition.
inline void muc_direction(const std::vector<std::vector<int>>& key,
                          const std::vector<int>& response_entity, double& num, double& den) {
  for (const std::vector<int>& k : key) {
    std::set<int> parts;
    int missing = 0;
    for (int a : k) {
      int e = a < static_cast<int>(response_entity.size()) ? response_entity[a] : -1;
      if (e < 0)
        ++missing;
      else
        parts.insert(e);
    }
    num += static_cast<double>(k.size()) - (parts.size() + missing);
    den += static_cast<double>(k.size()) - 1;
  }
}

inline void b3_direction(const std::vector<std::vector<int>>& key,
                         const std::vector<std::vector<int>>& response, int atom_count, double& num,
                         double& den) {
  std::vector<int> response_entity = atom_entities(response, atom_count);
  for (const std::vector<int>& k : key) {
    std::map<int, int> overlap;
    for (int a : k) {
      int e = response_entity[a];
      if (e >= 0) ++overlap[e];
    }
    for (const auto& [e, cnt] : overlap) num += static_cast<double>(cnt) * cnt / k.size();
    den += static_cast<double>(k.size());
  }
}

inline void lea_direction(const std::vector<std::vector<int>>& key,
                          const std::vector<std::vector<int>>& response, int atom_count, double& num,
                          double& den) {
  std::vector<int> response_entity = atom_entities(response, atom_count);
  for (const std::vector<int>& k : key) {
    den += static_cast<double>(k.size());
    if (k.size() == 1) {
      // self-link: resolved when the atom appears in the other partition
      if (response_entity[k[0]] >= 0) num += 1.0;
      continue;
    }
    std::map<int, int> overlap;
    for (int a : k) {
      int e = response_entity[a];
      if (e >= 0) ++overlap[e];
    }
    double preserved = 0;
    for (const auto& [e, cnt] : overlap) preserved += choose2(cnt);
    num += k.size() * preserved / choose2(static_cast<double>(k.size()));
  }
}

}  // namespace metric_detail

/// MUC: link-based counts (Vilain partition formulation). Singleton entities
/// contribute nothing to either side.
inline RatioCounts muc_counts(const AtomPartitions& parts) {
  RatioCounts out;
  std::vector<int> gold_entity = metric_detail::atom_entities(parts.gold, parts.atom_count);
  std::vector<int> pred_entity = metric_detail::atom_entities(parts.pred, parts.atom_count);
  metric_detail::muc_direction(parts.gold, pred_entity, out.recall_num, out.recall_den);
  metric_detail::muc_direction(parts.pred, gold_entity, out.precision_num, out.precision_den);
  return out;
}

/// B3: mention-based per-atom overlap ratios.
inline RatioCounts b_cubed_counts(const AtomPartitions& parts) {
  RatioCounts out;
  metric_detail::b3_direction(parts.gold, parts.pred, parts.atom_count, out.recall_num,
                              out.recall_den);
  metric_detail::b3_direction(parts.pred, parts.gold, parts.atom_count, out.precision_num,
                              out.precision_den);
  return out;
}

/// CEAF-e: optimal one-to-one entity alignment maximizing
/// phi4(K, R) = 2|K&R| / (|K| + |R|).
inline RatioCounts ceaf_e_counts(const AtomPartitions& parts) {
  RatioCounts out;
  out.recall_den = static_cast<double>(parts.gold.size());
  out.precision_den = static_cast<double>(parts.pred.size());
  if (parts.gold.empty() || parts.pred.empty()) return out;

  std::vector<std::set<int>> pred_sets;
  pred_sets.reserve(parts.pred.size());
  for (const auto& r : parts.pred) pred_sets.emplace_back(r.begin(), r.end());

  std::vector<std::vector<double>> phi(parts.gold.size(),
                                       std::vector<double>(parts.pred.size(), 0.0));
  for (std::size_t i = 0; i < parts.gold.size(); ++i)
    for (std::size_t j = 0; j < parts.pred.size(); ++j) {
      int common = 0;
      for (int a : parts.gold[i]) common += pred_sets[j].count(a);
      phi[i][j] = 2.0 * common / (parts.gold[i].size() + parts.pred[j].size());
    }
  double total = assignment_value(phi);
  out.recall_num = total;
  out.precision_num = total;
  return out;
}

/// LEA: size-weighted fraction of links preserved in the other partition.
inline RatioCounts lea_counts(const AtomPartitions& parts) {
  RatioCounts out;
  metric_detail::lea_direction(parts.gold, parts.pred, parts.atom_count, out.recall_num,
                               out.recall_den);
  metric_detail::lea_direction(parts.pred, parts.gold, parts.atom_count, out.precision_num,
                               out.precision_den);
  return out;
}

/// BLANC: coreference-link and non-coreference-link components over each
/// side's own mention pairs.
inline BlancCounts blanc_counts(const AtomPartitions& parts) {
  using metric_detail::choose2;
  BlancCounts out;
  std::vector<int> ge = metric_detail::atom_entities(parts.gold, parts.atom_count);
  std::vector<int> pe = metric_detail::atom_entities(parts.pred, parts.atom_count);

  double c_gold = 0, c_pred = 0;
  for (const auto& k : parts.gold) c_gold += choose2(static_cast<double>(k.size()));
  for (const auto& r : parts.pred) c_pred += choose2(static_cast<double>(r.size()));

  double gold_atoms = 0, pred_atoms = 0, both_atoms = 0;
  for (int a = 0; a < parts.atom_count; ++a) {
    if (ge[a] >= 0) ++gold_atoms;
    if (pe[a] >= 0) ++pred_atoms;
    if (ge[a] >= 0 && pe[a] >= 0) ++both_atoms;
  }

  // pairs of shared atoms grouped by entity membership on each side
  std::map<std::pair<int, int>, int> joint;
  std::map<int, int> shared_gold, shared_pred;
  for (int a = 0; a < parts.atom_count; ++a) {
    if (ge[a] < 0 || pe[a] < 0) continue;
    ++joint[{ge[a], pe[a]}];
    ++shared_gold[ge[a]];
    ++shared_pred[pe[a]];
  }
  double same_gold = 0, same_pred = 0, same_both = 0;
  for (const auto& [k, cnt] : shared_gold) same_gold += choose2(cnt);
  for (const auto& [k, cnt] : shared_pred) same_pred += choose2(cnt);
  for (const auto& [k, cnt] : joint) same_both += choose2(cnt);

  double common_coref = same_both;
  double common_noncoref = choose2(both_atoms) - same_gold - same_pred + same_both;

  out.coref.recall_num = common_coref;
  out.coref.recall_den = c_gold;
  out.coref.precision_num = common_coref;
  out.coref.precision_den = c_pred;
  out.noncoref.recall_num = common_noncoref;
  out.noncoref.recall_den = choose2(gold_atoms) - c_gold;
  out.noncoref.precision_num = common_noncoref;
  out.noncoref.precision_den = choose2(pred_atoms) - c_pred;
  return out;
}

namespace metric_detail {

/// Scoring footprint of a mention: its surface nodes, or its first empty node
/// for zero mentions (size 1).
inline std::vector<NodeId> effective_nodes(const Mention& m) {
  std::vector<NodeId> out;
  for (const NodeId& id : m.nodes)
    if (!id.is_empty_node()) out.push_back(id);
  if (out.empty()) out.push_back(m.nodes.front());
  return out;
}

}  // namespace metric_detail

/// Mention Overlap Ratio: per-pair node overlap against total mention sizes,
/// measuring detection independently of clustering. Sizes count surface
/// nodes; zero mentions count as size 1.
inline RatioCounts mor_counts(const CorefDoc& gold, const CorefDoc& pred,
                              const MentionAlignment& alignment, const ZeroAlignment& zeros) {
  using metric_detail::effective_nodes;
  RatioCounts out;
  std::map<NodeId, NodeId> pred_to_gold;
  for (const ZeroPair& zp : zeros.pairs) pred_to_gold[zp.pred] = zp.gold;

  for (const Entity& e : gold.entities)
    for (const Mention& m : e.mentions) out.recall_den += effective_nodes(m).size();
  for (const Entity& e : pred.entities)
    for (const Mention& m : e.mentions) out.precision_den += effective_nodes(m).size();

  double overlap = 0;
  for (const auto& [g, p] : alignment.pairs) {
    const Mention& mg = gold.entities[g.entity].mentions[g.mention];
    const Mention& mp = pred.entities[p.entity].mentions[p.mention];
    std::set<NodeId> gold_nodes;
    for (const NodeId& id : effective_nodes(mg)) gold_nodes.insert(id);
    for (const NodeId& id : effective_nodes(mp)) {
      NodeId mapped = id;
      if (id.is_empty_node()) {
        auto it = pred_to_gold.find(id);
        if (it == pred_to_gold.end()) continue;
        mapped = it->second;
      }
      if (gold_nodes.count(mapped)) ++overlap;
    }
  }
  out.recall_num = overlap;
  out.precision_num = overlap;
  return out;
}

namespace metric_detail {

inline bool precedes(const Mention& a, const Mention& b) {
  return std::pair(a.start(), a.end()) < std::pair(b.start(), b.end());
}

/// One direction of the anaphor-decomposable zero score: for every anaphoric
/// zero mention of `key`, a hit requires its zero-aligned counterpart to sit
/// in a `response` entity containing a mention aligned to a preceding mention
/// of the zero's own entity.
inline void zero_direction(const CorefDoc& key, const CorefDoc& response,
                           const std::map<NodeId, NodeId>& zero_key_to_resp,
                           const std::map<std::pair<int, int>, std::pair<int, int>>& align_resp_to_key,
                           double& hits, double& anaphoric) {
  // zero mention lookup on the response side: empty node -> (entity, mention)
  std::map<NodeId, std::pair<int, int>> resp_zero_at;
  for (int e = 0; e < static_cast<int>(response.entities.size()); ++e)
    for (int m = 0; m < static_cast<int>(response.entities[e].mentions.size()); ++m) {
      const Mention& men = response.entities[e].mentions[m];
      bool all_empty = true;
      for (const NodeId& id : men.nodes) all_empty = all_empty && id.is_empty_node();
      if (all_empty) resp_zero_at[men.nodes.front()] = {e, m};
    }

  for (int e = 0; e < static_cast<int>(key.entities.size()); ++e) {
    const Entity& entity = key.entities[e];
    for (int m = 0; m < static_cast<int>(entity.mentions.size()); ++m) {
      const Mention& zero = entity.mentions[m];
      bool all_empty = !zero.nodes.empty();
      for (const NodeId& id : zero.nodes) all_empty = all_empty && id.is_empty_node();
      if (!all_empty) continue;
      bool anaph = false;
      for (const Mention& other : entity.mentions)
        if (&other != &zero && precedes(other, zero)) anaph = true;
      if (!anaph) continue;
      anaphoric += 1;

      auto zit = zero_key_to_resp.find(zero.nodes.front());
      if (zit == zero_key_to_resp.end()) continue;
      auto rz = resp_zero_at.find(zit->second);
      if (rz == resp_zero_at.end()) continue;
      const Entity& resp_entity = response.entities[rz->second.first];

      bool hit = false;
      for (int rm = 0; rm < static_cast<int>(resp_entity.mentions.size()) && !hit; ++rm) {
        auto ait = align_resp_to_key.find({rz->second.first, rm});
        if (ait == align_resp_to_key.end()) continue;
        const Mention& key_mention = key.entities[ait->second.first].mentions[ait->second.second];
        if (ait->second.first == e && precedes(key_mention, zero)) hit = true;
      }
      if (hit) hits += 1;
    }
  }
}

}  // namespace metric_detail

/// Anaphor-decomposable score restricted to zero anaphora. Recall counts gold
/// anaphoric zeros, precision is defined symmetrically over predicted ones.
inline RatioCounts zero_anaphora_counts(const CorefDoc& gold, const CorefDoc& pred,
                                        const ZeroAlignment& zeros,
                                        const MentionAlignment& alignment) {
  RatioCounts out;
  std::map<NodeId, NodeId> g2p, p2g;
  for (const ZeroPair& zp : zeros.pairs) {
    g2p[zp.gold] = zp.pred;
    p2g[zp.pred] = zp.gold;
  }
  std::map<std::pair<int, int>, std::pair<int, int>> pred_to_gold, gold_to_pred;
  for (const auto& [g, p] : alignment.pairs) {
    pred_to_gold[{p.entity, p.mention}] = {g.entity, g.mention};
    gold_to_pred[{g.entity, g.mention}] = {p.entity, p.mention};
  }
  metric_detail::zero_direction(gold, pred, g2p, pred_to_gold, out.recall_num, out.recall_den);
  metric_detail::zero_direction(pred, gold, p2g, gold_to_pred, out.precision_num, out.precision_den);
  return out;
}

struct MetricReport {
  PRF muc, b3, ceaf_e, blanc, lea, mor;
  double conll_f1 = 0.0;
  std::optional<PRF> zero_anaphora;
};

inline double conll_f1_of(const MetricReport& r) {
  return (r.muc.f1 + r.b3.f1 + r.ceaf_e.f1) / 3.0;
}

/// Summable per-document metric counts for one matching variant.
struct ScoreAccumulator {
  RatioCounts muc, b3, ceaf, lea, mor, zero;
  BlancCounts blanc;

  void add(const CorefDoc& gold, const CorefDoc& pred, const MentionAlignment& alignment,
           const ZeroAlignment& zeros) {
    AtomPartitions parts = build_atoms(gold, pred, alignment);
    muc += muc_counts(parts);
    b3 += b_cubed_counts(parts);
    ceaf += ceaf_e_counts(parts);
    lea += lea_counts(parts);
    blanc += blanc_counts(parts);
    mor += mor_counts(gold, pred, alignment, zeros);
    zero += zero_anaphora_counts(gold, pred, zeros, alignment);
  }

  ScoreAccumulator& operator+=(const ScoreAccumulator& o) {
    muc += o.muc;
    b3 += o.b3;
    ceaf += o.ceaf;
    lea += o.lea;
    mor += o.mor;
    zero += o.zero;
    blanc += o.blanc;
    return *this;
  }

  MetricReport report() const {
    MetricReport out;
    out.muc = muc.prf();
    out.b3 = b3.prf();
    out.ceaf_e = ceaf.prf();
    out.lea = lea.prf();
    out.blanc = blanc.prf();
    out.mor = mor.prf();
    out.conll_f1 = conll_f1_of(out);
    if (zero.recall_den > 0) out.zero_anaphora = zero.prf();
    return out;
  }
};

}  // namespace coreval
