#pragma once

// Report serialization: JSON (stable key order, round-trippable), TSV, and
// human-readable tables.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "coreval/harness.hpp"
#include "coreval/metrics.hpp"

namespace coreval {

using ojson = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"muc", "b3",  "ceaf_e",       "blanc",
                                                 "lea", "mor", "zero_anaphora"};
  return names;
}

namespace report_detail {

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline const PRF* metric_of(const MetricReport& r, const std::string& name) {
  if (name == "muc") return &r.muc;
  if (name == "b3") return &r.b3;
  if (name == "ceaf_e") return &r.ceaf_e;
  if (name == "blanc") return &r.blanc;
  if (name == "lea") return &r.lea;
  if (name == "mor") return &r.mor;
  if (name == "zero_anaphora") return r.zero_anaphora ? &*r.zero_anaphora : nullptr;
  return nullptr;
}

inline bool selected(const std::vector<std::string>& filter, const std::string& name) {
  if (filter.empty()) return true;
  for (const std::string& f : filter)
    if (f == name) return true;
  return false;
}

}  // namespace report_detail

inline ojson to_json(const PRF& p) {
  return ojson{{"recall", p.recall}, {"precision", p.precision}, {"f1", p.f1}};
}

inline PRF prf_from_json(const ojson& j) {
  PRF p;
  p.recall = j.at("recall").get<double>();
  p.precision = j.at("precision").get<double>();
  p.f1 = j.at("f1").get<double>();
  return p;
}

inline ojson to_json(const MetricReport& r, const std::vector<std::string>& metrics = {}) {
  ojson out;
  for (const std::string& name : metric_names()) {
    if (!report_detail::selected(metrics, name)) continue;
    const PRF* prf = report_detail::metric_of(r, name);
    if (name == "zero_anaphora")
      out[name] = prf ? to_json(*prf) : ojson(nullptr);
    else if (prf)
      out[name] = to_json(*prf);
  }
  out["conll_f1"] = r.conll_f1;
  return out;
}

inline MetricReport metric_report_from_json(const ojson& j) {
  MetricReport r;
  r.muc = prf_from_json(j.at("muc"));
  r.b3 = prf_from_json(j.at("b3"));
  r.ceaf_e = prf_from_json(j.at("ceaf_e"));
  r.blanc = prf_from_json(j.at("blanc"));
  r.lea = prf_from_json(j.at("lea"));
  r.mor = prf_from_json(j.at("mor"));
  if (j.contains("zero_anaphora") && !j.at("zero_anaphora").is_null())
    r.zero_anaphora = prf_from_json(j.at("zero_anaphora"));
  r.conll_f1 = j.at("conll_f1").get<double>();
  return r;
}

inline ojson to_json(const DatasetResult& d, const std::vector<std::string>& metrics = {}) {
  ojson out;
  out["schema_version"] = kReportSchemaVersion;
  out["dataset"] = d.dataset_id;
  ojson variants = ojson::object();
  for (const auto& [v, rep] : d.reports) variants[std::string(variant_name(v))] = to_json(rep, metrics);
  out["variants"] = variants;
  return out;
}

inline DatasetResult dataset_result_from_json(const ojson& j) {
  DatasetResult d;
  d.dataset_id = j.at("dataset").get<std::string>();
  for (const auto& [name, rep] : j.at("variants").items()) {
    auto v = variant_from_name(name);
    if (!v) throw DataError("unknown variant '" + name + "' in report");
    d.reports.emplace_back(*v, metric_report_from_json(rep));
  }
  return d;
}

inline std::string dataset_result_tsv(const DatasetResult& d,
                                      const std::vector<std::string>& metrics = {}) {
  using report_detail::fixed;
  std::string out = "dataset\tvariant\tmetric\trecall\tprecision\tf1\n";
  for (const auto& [v, rep] : d.reports) {
    for (const std::string& name : metric_names()) {
      if (!report_detail::selected(metrics, name)) continue;
      const PRF* prf = report_detail::metric_of(rep, name);
      if (!prf) continue;
      out += d.dataset_id + "\t" + std::string(variant_name(v)) + "\t" + name + "\t" +
             fixed(prf->recall, 5) + "\t" + fixed(prf->precision, 5) + "\t" + fixed(prf->f1, 5) +
             "\n";
    }
    out += d.dataset_id + "\t" + std::string(variant_name(v)) + "\tconll_f1\t\t\t" +
           fixed(rep.conll_f1, 5) + "\n";
  }
  return out;
}

inline std::string dataset_result_text(const DatasetResult& d,
                                       const std::vector<std::string>& metrics = {}) {
  using report_detail::fixed;
  std::string out = "dataset: " + d.dataset_id + "\n";
  for (const auto& [v, rep] : d.reports) {
    out += "  [" + std::string(variant_name(v)) + "]  CoNLL F1 = " + fixed(100 * rep.conll_f1, 2) +
           "\n";
    for (const std::string& name : metric_names()) {
      if (!report_detail::selected(metrics, name)) continue;
      const PRF* prf = report_detail::metric_of(rep, name);
      if (!prf) continue;
      out += "    " + name + std::string(14 - std::min<std::size_t>(14, name.size()), ' ') +
             fixed(100 * prf->recall, 2) + " / " + fixed(100 * prf->precision, 2) + " / " +
             fixed(100 * prf->f1, 2) + "\n";
    }
  }
  return out;
}

inline ojson to_json(const LeaderboardRow& row) {
  ojson out;
  out["system"] = row.system_id;
  ojson macro = ojson::object();
  for (const auto& [v, score] : row.macro) macro[std::string(variant_name(v))] = score;
  out["macro"] = macro;
  return out;
}

inline ojson to_json(const CorpusStats& st) {
  ojson out;
  out["schema_version"] = kReportSchemaVersion;
  out["documents"] = st.documents;
  out["sentences"] = st.sentences;
  out["words"] = st.words;
  out["empty_nodes"] = st.empty_nodes;
  out["entities"] = ojson{{"count", st.entities},
                          {"per_1k_words", st.entities_per_1k},
                          {"max_length", st.entity_len_max},
                          {"avg_length", st.entity_len_avg},
                          {"length_pct", st.entity_len_pct}};
  out["mentions"] = ojson{{"count", st.mentions},
                          {"per_1k_words", st.mentions_per_1k},
                          {"max_length", st.mention_len_max},
                          {"avg_length", st.mention_len_avg},
                          {"length_pct", st.mention_len_pct},
                          {"pct_with_empty", st.pct_with_empty},
                          {"pct_with_gap", st.pct_with_gap},
                          {"pct_non_treelet", st.pct_non_treelet}};
  ojson upos = ojson::object();
  for (const auto& [tag, pct] : st.head_upos_pct) upos[tag] = pct;
  out["head_upos_pct"] = upos;
  return out;
}

inline std::string corpus_stats_text(const CorpusStats& st) {
  using report_detail::fixed;
  std::string out;
  out += "documents      " + std::to_string(st.documents) + "\n";
  out += "sentences      " + std::to_string(st.sentences) + "\n";
  out += "words          " + std::to_string(st.words) + "\n";
  out += "empty nodes    " + std::to_string(st.empty_nodes) + "\n";
  out += "entities       " + std::to_string(st.entities) + "  (" + fixed(st.entities_per_1k, 1) +
         " per 1k words, max length " + std::to_string(st.entity_len_max) + ", avg " +
         fixed(st.entity_len_avg, 1) + ")\n";
  out += "  length %     ";
  static const char* ent_labels[] = {"1", "2", "3", "4", "5+"};
  for (int i = 0; i < 5; ++i)
    out += std::string(ent_labels[i]) + ":" + fixed(st.entity_len_pct[i], 1) + (i < 4 ? "  " : "\n");
  out += "mentions       " + std::to_string(st.mentions) + "  (" + fixed(st.mentions_per_1k, 1) +
         " per 1k words, max length " + std::to_string(st.mention_len_max) + ", avg " +
         fixed(st.mention_len_avg, 1) + ")\n";
  out += "  length %     ";
  static const char* men_labels[] = {"0", "1", "2", "3", "4", "5+"};
  for (int i = 0; i < 6; ++i)
    out += std::string(men_labels[i]) + ":" + fixed(st.mention_len_pct[i], 1) + (i < 5 ? "  " : "\n");
  out += "  w/empty " + fixed(st.pct_with_empty, 1) + "%  w/gap " + fixed(st.pct_with_gap, 1) +
         "%  non-treelet " + fixed(st.pct_non_treelet, 1) + "%\n";
  out += "  head UPOS %  ";
  for (std::size_t i = 0; i < st.head_upos_pct.size(); ++i)
    out += st.head_upos_pct[i].first + ":" + fixed(st.head_upos_pct[i].second, 1) +
           (i + 1 < st.head_upos_pct.size() ? "  " : "\n");
  return out;
}

}  // namespace coreval
