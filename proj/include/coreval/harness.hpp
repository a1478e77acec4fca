#pragma once

// Dataset-level scoring and reporting: the four matching variants, macro
// averaged leaderboards, deterministic mini-split sampling, UPOS-factorized
// evaluation, and corpus statistics.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coreval/align.hpp"
#include "coreval/conllu.hpp"
#include "coreval/mention.hpp"
#include "coreval/metrics.hpp"

namespace coreval {

enum class Variant {
  HeadNoSingletons,
  PartialNoSingletons,
  ExactNoSingletons,
  HeadWithSingletons,
};

inline constexpr std::array<Variant, 4> kStandardVariants = {
    Variant::HeadNoSingletons,
    Variant::PartialNoSingletons,
    Variant::ExactNoSingletons,
    Variant::HeadWithSingletons,
};

inline std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::HeadNoSingletons: return "head-nosingleton";
    case Variant::PartialNoSingletons: return "partial-nosingleton";
    case Variant::ExactNoSingletons: return "exact-nosingleton";
    case Variant::HeadWithSingletons: return "head-withsingleton";
  }
  return "";
}

inline std::optional<Variant> variant_from_name(std::string_view name) {
  for (Variant v : kStandardVariants)
    if (variant_name(v) == name) return v;
  return std::nullopt;
}

inline MatchStrategy variant_strategy(Variant v, ZeroMode zero_mode = ZeroMode::Dependency) {
  MatchStrategy s;
  s.zero_mode = zero_mode;
  switch (v) {
    case Variant::HeadNoSingletons: s.kind = MatchKind::Head; break;
    case Variant::PartialNoSingletons: s.kind = MatchKind::Partial; break;
    case Variant::ExactNoSingletons: s.kind = MatchKind::Exact; break;
    case Variant::HeadWithSingletons:
      s.kind = MatchKind::Head;
      s.include_singletons = true;
      break;
  }
  return s;
}

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DatasetResult {
  std::string dataset_id;
  std::vector<std::pair<Variant, MetricReport>> reports;

  const MetricReport* report_for(Variant v) const {
    for (const auto& [var, rep] : reports)
      if (var == v) return &rep;
    return nullptr;
  }
};

struct ScoreOptions {
  std::string dataset_id = "dataset";
  std::vector<Variant> variants{kStandardVariants.begin(), kStandardVariants.end()};
  ZeroMode zero_mode = ZeroMode::Dependency;
};

namespace harness_detail {

inline void check_token_parity(const Document& gold, const Document& pred) {
  if (gold.sentences.size() != pred.sentences.size())
    throw DataError("document '" + gold.doc_id + "': sentence count differs (" +
                    std::to_string(gold.sentences.size()) + " vs " +
                    std::to_string(pred.sentences.size()) + ")");
  for (std::size_t s = 0; s < gold.sentences.size(); ++s) {
    std::vector<const Node*> g, p;
    for (const Node& n : gold.sentences[s].nodes)
      if (!n.id.is_empty_node()) g.push_back(&n);
    for (const Node& n : pred.sentences[s].nodes)
      if (!n.id.is_empty_node()) p.push_back(&n);
    std::size_t upto = std::min(g.size(), p.size());
    for (std::size_t i = 0; i < upto; ++i)
      if (g[i]->form != p[i]->form)
        throw DataError("document '" + gold.doc_id + "', sentence " + std::to_string(s + 1) +
                        ", token " + std::to_string(i + 1) + ": gold '" + g[i]->form +
                        "' vs predicted '" + p[i]->form +
                        "' (if the prediction came from plaintext output, run clean first)");
    if (g.size() != p.size())
      throw DataError("document '" + gold.doc_id + "', sentence " + std::to_string(s + 1) +
                      ": token count differs (" + std::to_string(g.size()) + " vs " +
                      std::to_string(p.size()) +
                      ") (if the prediction came from plaintext output, run clean first)");
  }
}

}  // namespace harness_detail

/// Scores one dataset (gold and predicted document lists) under the requested
/// matching variants. Documents are scored individually and micro-aggregated
/// by summing metric numerators and denominators.
inline DatasetResult score_dataset(const std::vector<Document>& gold,
                                   const std::vector<Document>& pred,
                                   const ScoreOptions& opts = {}) {
  if (gold.size() != pred.size() ||
      ![&] {
        for (std::size_t i = 0; i < gold.size(); ++i)
          if (gold[i].doc_id != pred[i].doc_id) return false;
        return true;
      }()) {
    std::string divergent;
    std::set<std::string> gold_ids, pred_ids;
    for (const Document& d : gold) gold_ids.insert(d.doc_id);
    for (const Document& d : pred) pred_ids.insert(d.doc_id);
    for (const std::string& id : gold_ids)
      if (!pred_ids.count(id)) divergent += " -" + id;
    for (const std::string& id : pred_ids)
      if (!gold_ids.count(id)) divergent += " +" + id;
    if (divergent.empty()) divergent = " (same ids, different order)";
    throw DataError("document ids do not match:" + divergent);
  }

  std::map<Variant, ScoreAccumulator> acc;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    harness_detail::check_token_parity(gold[d], pred[d]);
    CorefDoc gold_cd = extract_entities(gold[d]);
    CorefDoc pred_cd = extract_entities(pred[d]);
    ZeroAlignment zeros = align_zeros(gold[d], pred[d]);
    for (Variant v : opts.variants) {
      MatchStrategy strategy = variant_strategy(v, opts.zero_mode);
      CorefDoc gf = strategy.include_singletons ? gold_cd : filter_singletons(gold_cd);
      CorefDoc pf = strategy.include_singletons ? pred_cd : filter_singletons(pred_cd);
      MentionAlignment alignment = align_mentions(gf, pf, strategy, zeros);
      acc[v].add(gf, pf, alignment, zeros);
    }
  }

  DatasetResult out;
  out.dataset_id = opts.dataset_id;
  for (Variant v : opts.variants) out.reports.emplace_back(v, acc[v].report());
  return out;
}

/// Unweighted mean, the macro-average used for ranking.
inline double macro_average(const std::vector<double>& per_dataset_scores) {
  if (per_dataset_scores.empty()) throw DataError("macro average over an empty dataset list");
  double sum = 0;
  for (double v : per_dataset_scores) sum += v;
  return sum / static_cast<double>(per_dataset_scores.size());
}

struct LeaderboardRow {
  std::string system_id;
  std::map<Variant, double> macro;  // per-variant macro-averaged CoNLL F1

  double primary() const {
    auto it = macro.find(Variant::HeadNoSingletons);
    return it == macro.end() ? 0.0 : it->second;
  }
};

/// Builds one leaderboard row from per-dataset results. Datasets the system
/// did not submit score 0 when zero_fill is set (the default ranking policy),
/// otherwise they are skipped from the mean.
inline LeaderboardRow leaderboard_row(const std::string& system_id,
                                      const std::vector<std::string>& datasets,
                                      const std::map<std::string, DatasetResult>& results,
                                      bool zero_fill = true) {
  if (datasets.empty()) throw DataError("leaderboard over an empty dataset list");
  LeaderboardRow row;
  row.system_id = system_id;
  for (Variant v : kStandardVariants) {
    std::vector<double> scores;
    for (const std::string& ds : datasets) {
      auto it = results.find(ds);
      if (it == results.end()) {
        if (zero_fill) scores.push_back(0.0);
        continue;
      }
      const MetricReport* rep = it->second.report_for(v);
      if (rep)
        scores.push_back(rep->conll_f1);
      else if (zero_fill)
        scores.push_back(0.0);
    }
    if (!scores.empty()) row.macro[v] = macro_average(scores);
  }
  return row;
}

inline void rank_rows(std::vector<LeaderboardRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const LeaderboardRow& a, const LeaderboardRow& b) {
    return a.primary() > b.primary();
  });
}

/// Deterministic mini-split sampling: shuffle documents with the seeded RNG,
/// then greedily keep documents that fit under the word cap. A corpus that
/// already fits is returned unchanged; selected documents keep corpus order.
inline std::vector<Document> sample_mini(const std::vector<Document>& docs, long cap_words,
                                         std::uint64_t seed) {
  if (cap_words <= 0) throw DataError("word cap must be positive");
  long total = 0;
  for (const Document& d : docs) total += d.word_count();
  if (total <= cap_words) return docs;

  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng() % i]);  // bounded draw keeps this portable

  std::vector<char> keep(docs.size(), 0);
  long used = 0;
  for (std::size_t idx : order) {
    long wc = docs[idx].word_count();
    if (used + wc <= cap_words) {
      keep[idx] = 1;
      used += wc;
    }
  }
  std::vector<Document> out;
  for (std::size_t i = 0; i < docs.size(); ++i)
    if (keep[i]) out.push_back(docs[i]);
  return out;
}

inline const std::set<std::string>& known_upos_tags() {
  static const std::set<std::string> tags = {"ADJ",  "ADP",   "ADV",  "AUX",  "CCONJ", "DET",
                                             "INTJ", "NOUN",  "NUM",  "PART", "PRON",  "PROPN",
                                             "PUNCT", "SCONJ", "SYM",  "VERB", "X",     "_"};
  return tags;
}

enum class UposMode { Entity, Mention };

namespace harness_detail {

/// UPOS tags of a mention head, expanded with the head's deprel=flat children.
inline std::set<std::string> head_upos_set(const Mention& m, const DocIndex& index) {
  std::set<std::string> out;
  const Node* head = index.find(m.head);
  if (!head) return out;
  out.insert(head->upos);
  if (head->id.is_empty_node()) return out;
  const Document& doc = index.document();
  for (const Node& n : doc.sentences[head->id.sentence].nodes) {
    if (n.id.is_empty_node() || n.head != head->id.word) continue;
    std::string_view rel = n.deprel;
    if (rel == "flat" || rel.starts_with("flat:")) out.insert(n.upos);
  }
  return out;
}

inline CorefDoc upos_filter(const CorefDoc& cd, const std::string& upos, UposMode mode) {
  DocIndex index(cd.document);
  CorefDoc out;
  out.document = cd.document;
  for (const Entity& e : cd.entities) {
    if (mode == UposMode::Entity) {
      bool keep = false;
      for (const Mention& m : e.mentions)
        if (head_upos_set(m, index).count(upos)) keep = true;
      if (keep) out.entities.push_back(e);
    } else {
      Entity filtered{e.id, {}};
      for (const Mention& m : e.mentions)
        if (head_upos_set(m, index).count(upos)) filtered.mentions.push_back(m);
      if (!filtered.mentions.empty()) out.entities.push_back(std::move(filtered));
    }
  }
  return out;
}

}  // namespace harness_detail

/// CoNLL F1 (head match, excluding singletons) restricted to entities or
/// mentions whose head carries the given UPOS. Returns nothing when the tag
/// never occurs on either side.
inline std::optional<double> upos_factorized_score(const std::vector<Document>& gold,
                                                   const std::vector<Document>& pred,
                                                   const std::string& upos, UposMode mode,
                                                   ZeroMode zero_mode = ZeroMode::Dependency) {
  if (!known_upos_tags().count(upos)) {
    std::string valid;
    for (const std::string& t : known_upos_tags()) valid += (valid.empty() ? "" : ", ") + t;
    throw DataError("unknown UPOS tag '" + upos + "' (valid: " + valid + ")");
  }
  if (gold.size() != pred.size()) throw DataError("document count differs between gold and prediction");

  ScoreAccumulator acc;
  long kept = 0;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    harness_detail::check_token_parity(gold[d], pred[d]);
    CorefDoc g = harness_detail::upos_filter(extract_entities(gold[d]), upos, mode);
    CorefDoc p = harness_detail::upos_filter(extract_entities(pred[d]), upos, mode);
    kept += static_cast<long>(g.entities.size() + p.entities.size());
    CorefDoc gf = filter_singletons(g);
    CorefDoc pf = filter_singletons(p);
    ZeroAlignment zeros = align_zeros(gold[d], pred[d]);
    MatchStrategy strategy = variant_strategy(Variant::HeadNoSingletons, zero_mode);
    MentionAlignment alignment = align_mentions(gf, pf, strategy, zeros);
    acc.add(gf, pf, alignment, zeros);
  }
  if (kept == 0) return std::nullopt;
  return acc.report().conll_f1;
}

struct CorpusStats {
  long documents = 0, sentences = 0, words = 0, empty_nodes = 0;

  long entities = 0;
  double entities_per_1k = 0;
  int entity_len_max = 0;
  double entity_len_avg = 0;
  std::array<double, 5> entity_len_pct{};  // lengths 1, 2, 3, 4, 5+

  long mentions = 0;
  double mentions_per_1k = 0;
  int mention_len_max = 0;
  double mention_len_avg = 0;
  std::array<double, 6> mention_len_pct{};  // lengths 0, 1, 2, 3, 4, 5+ (zeros have length 0)

  double pct_with_empty = 0, pct_with_gap = 0, pct_non_treelet = 0;
  std::vector<std::pair<std::string, double>> head_upos_pct;
};

inline CorpusStats corpus_stats(const std::vector<CorefDoc>& docs) {
  CorpusStats st;
  long entity_len_sum = 0;
  long mention_len_sum = 0;
  std::array<long, 5> ent_hist{};
  std::array<long, 6> men_hist{};
  long with_empty = 0, with_gap = 0, non_treelet = 0;
  static const std::array<std::string, 9> upos_buckets = {"NOUN", "PRON", "PROPN", "DET", "ADJ",
                                                          "VERB", "ADV",  "NUM",   "_"};
  std::map<std::string, long> upos_counts;
  long upos_other = 0;

  for (const CorefDoc& cd : docs) {
    ++st.documents;
    st.sentences += static_cast<long>(cd.document.sentences.size());
    st.words += cd.document.word_count();
    for (const Sentence& s : cd.document.sentences)
      for (const Node& n : s.nodes)
        if (n.id.is_empty_node()) ++st.empty_nodes;

    DocIndex index(cd.document);
    for (const Entity& e : cd.entities) {
      ++st.entities;
      int len = static_cast<int>(e.mentions.size());
      entity_len_sum += len;
      st.entity_len_max = std::max(st.entity_len_max, len);
      ++ent_hist[std::min(len, 5) - 1];

      for (const Mention& m : e.mentions) {
        ++st.mentions;
        int words_in = 0;
        for (const NodeId& id : m.nodes)
          if (!id.is_empty_node()) ++words_in;
        mention_len_sum += words_in;
        st.mention_len_max = std::max(st.mention_len_max, words_in);
        ++men_hist[std::min(words_in, 5)];

        MentionFlags flags = classify_mention(m, index);
        if (flags.has_empty) ++with_empty;
        if (flags.has_gap) ++with_gap;
        if (flags.non_treelet) ++non_treelet;

        const Node* head = index.find(m.head);
        std::string upos = head ? head->upos : "_";
        bool bucketed = false;
        for (const std::string& b : upos_buckets)
          if (upos == b) {
            ++upos_counts[b];
            bucketed = true;
          }
        if (!bucketed) ++upos_other;
      }
    }
  }

  if (st.words > 0) {
    st.entities_per_1k = 1000.0 * st.entities / st.words;
    st.mentions_per_1k = 1000.0 * st.mentions / st.words;
  }
  if (st.entities > 0) {
    st.entity_len_avg = static_cast<double>(entity_len_sum) / st.entities;
    for (int i = 0; i < 5; ++i) st.entity_len_pct[i] = 100.0 * ent_hist[i] / st.entities;
  }
  if (st.mentions > 0) {
    st.mention_len_avg = static_cast<double>(mention_len_sum) / st.mentions;
    for (int i = 0; i < 6; ++i) st.mention_len_pct[i] = 100.0 * men_hist[i] / st.mentions;
    st.pct_with_empty = 100.0 * with_empty / st.mentions;
    st.pct_with_gap = 100.0 * with_gap / st.mentions;
    st.pct_non_treelet = 100.0 * non_treelet / st.mentions;
    for (const std::string& b : upos_buckets)
      st.head_upos_pct.emplace_back(b, 100.0 * upos_counts[b] / st.mentions);
    st.head_upos_pct.emplace_back("other", 100.0 * upos_other / st.mentions);
  }
  return st;
}

}  // namespace coreval
