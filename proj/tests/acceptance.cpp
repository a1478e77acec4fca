// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Expected values are frozen from hand derivations and the independent
// brute-force oracles in support/oracles.hpp.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "coreval/align.hpp"
#include "coreval/conllu.hpp"
#include "coreval/harness.hpp"
#include "coreval/mention.hpp"
#include "coreval/metrics.hpp"
#include "coreval/textcoref.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace coreval;

namespace {

int g_failures = 0;

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void report(int number, const std::string& name, bool ok, double seconds,
            const std::string& detail = "") {
  std::printf("%s  criterion %d: %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", number, name.c_str(),
              seconds, detail.empty() ? "" : " - ", detail.c_str());
  if (!ok) ++g_failures;
}

bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

// ---------------------------------------------------------------------------
// 1. Metric oracle suite on the worked toy instance.

void criterion_1() {
  Timer timer;
  const AtomPartitions toy{{{0, 1, 2}}, {{0, 1}, {2}}, 3};
  const double tol = 1e-9;

  bool ok = true;
  ok &= close(muc_counts(toy).prf().f1, 2.0 / 3.0, tol);
  ok &= close(b_cubed_counts(toy).prf().f1, 5.0 / 7.0, tol);
  ok &= close(ceaf_e_counts(toy).prf().f1, 8.0 / 15.0, tol);
  ok &= close(lea_counts(toy).prf().f1, 0.5, tol);

  MetricReport r;
  r.muc = muc_counts(toy).prf();
  r.b3 = b_cubed_counts(toy).prf();
  r.ceaf_e = ceaf_e_counts(toy).prf();
  ok &= close(conll_f1_of(r), 67.0 / 105.0, tol);

  double t = timer.seconds();
  report(1, "toy-instance metric values (MUC 2/3, B3 5/7, CEAF-e 8/15, LEA 1/2, CoNLL 67/105)",
         ok && t < 1.0, t);
}

// ---------------------------------------------------------------------------
// 2. Brute-force equivalence for CEAF-e assignment and zero matching.

void criterion_2() {
  Timer timer;
  testgen::Rng rng(2025);
  int failures = 0;

  for (int trial = 0; trial < 200; ++trial) {
    int ng = rng.range(1, 7), np = rng.range(1, 7);
    AtomPartitions parts;
    int atoms = rng.range(1, 10);
    parts.atom_count = atoms;
    auto side = [&](int entities) {
      std::vector<std::vector<int>> out(entities);
      for (int a = 0; a < atoms; ++a) out[rng.eng() % entities].push_back(a);
      std::erase_if(out, [](const std::vector<int>& e) { return e.empty(); });
      return out;
    };
    parts.gold = side(ng);
    parts.pred = side(np);
    if (parts.gold.empty() || parts.pred.empty()) continue;

    std::vector<std::vector<double>> phi(parts.gold.size(),
                                         std::vector<double>(parts.pred.size(), 0.0));
    for (std::size_t i = 0; i < parts.gold.size(); ++i)
      for (std::size_t j = 0; j < parts.pred.size(); ++j) {
        int common = 0;
        for (int a : parts.gold[i])
          for (int b : parts.pred[j])
            if (a == b) ++common;
        phi[i][j] = 2.0 * common / (parts.gold[i].size() + parts.pred[j].size());
      }
    if (!close(ceaf_e_counts(parts).recall_num, oracle::best_total_similarity(phi), 1e-9))
      ++failures;
  }

  for (int trial = 0; trial < 200; ++trial) {
    int ng = rng.range(0, 6), np = rng.range(0, 6);
    Sentence gold, pred;
    auto build = [&](int zeros) {
      Sentence s;
      for (int w = 1; w <= 5; ++w) {
        Node n;
        n.id = NodeId{0, w, 0};
        n.form = "w";
        n.head = w == 1 ? 0 : 1;
        n.deprel = w == 1 ? "root" : "dep";
        s.nodes.push_back(std::move(n));
      }
      std::map<int, int> k;
      for (int z = 0; z < zeros; ++z) {
        int parent = rng.range(1, 5);
        Node n;
        n.id = NodeId{0, parent, ++k[parent]};
        n.deps.push_back({NodeId{0, parent, 0}, rng.pick(testgen::relations())});
        s.nodes.push_back(std::move(n));
      }
      std::sort(s.nodes.begin(), s.nodes.end(),
                [](const Node& a, const Node& b) { return a.id < b.id; });
      return s;
    };
    gold = build(ng);
    pred = build(np);

    std::vector<const Node*> ge, pe;
    for (const Node& n : gold.nodes)
      if (n.id.is_empty_node()) ge.push_back(&n);
    for (const Node& n : pred.nodes)
      if (n.id.is_empty_node()) pe.push_back(&n);
    std::vector<std::vector<double>> w(ge.size(), std::vector<double>(pe.size(), 0.0));
    for (std::size_t i = 0; i < ge.size(); ++i)
      for (std::size_t j = 0; j < pe.size(); ++j)
        w[i][j] = align_detail::zero_pair_weight(*ge[i], *pe[j]);

    double got = 0;
    std::set<NodeId> gu, pu;
    bool valid = true;
    for (const ZeroPair& p : align_zeros_sentence(gold, pred)) {
      got += p.weight;
      valid &= p.weight > 0;
      valid &= gu.insert(p.gold).second;
      valid &= pu.insert(p.pred).second;
    }
    if (!valid || !close(got, oracle::best_matching_value(w), 1e-9)) ++failures;
  }

  double t = timer.seconds();
  report(2, "CEAF-e assignment and zero matching equal exhaustive enumeration (200+200 instances)",
         failures == 0 && t < 30.0, t, failures ? std::to_string(failures) + " mismatches" : "");
}

// ---------------------------------------------------------------------------
// 3. Plaintext round-trip identity over 1000 generated documents.

CorefDoc project_gaps(const CorefDoc& cd) {
  CorefDoc out;
  out.document = cd.document;
  DocIndex index(out.document);
  for (const Entity& e : cd.entities) {
    Entity copy{e.id, {}};
    for (const Mention& m : e.mentions) {
      int lo = index.position(m.nodes.front());
      int hi = index.position(m.nodes.back());
      Mention pm;
      pm.entity_id = e.id;
      for (int p = lo; p <= hi; ++p) pm.nodes.push_back(index.at(p)->id);
      pm.head = compute_head(pm, index);
      copy.mentions.push_back(std::move(pm));
    }
    out.entities.push_back(std::move(copy));
  }
  return out;
}

void criterion_3() {
  Timer timer;
  testgen::Rng rng(3003);
  int failures = 0;
  long with_zeros = 0, with_nesting = 0, with_singletons = 0, with_gaps = 0, with_mwts = 0;

  for (int trial = 0; trial < 1000; ++trial) {
    Document doc = testgen::generate_document(rng, "rt" + std::to_string(trial));
    CorefDoc cd = testgen::generate_coref(rng, doc);

    bool zeros = false, nesting = false, singles = false, gaps = false;
    DocIndex index(cd.document);
    std::vector<std::pair<int, int>> intervals;
    for (const Entity& e : cd.entities) {
      if (e.mentions.size() == 1) singles = true;
      for (const Mention& m : e.mentions) {
        MentionFlags flags = classify_mention(m, index);
        zeros |= flags.is_zero;
        gaps |= flags.has_gap;
        intervals.emplace_back(index.position(m.nodes.front()), index.position(m.nodes.back()));
      }
    }
    for (std::size_t i = 0; i < intervals.size() && !nesting; ++i)
      for (std::size_t j = 0; j < intervals.size() && !nesting; ++j)
        if (i != j && intervals[i].first <= intervals[j].first &&
            intervals[j].second <= intervals[i].second &&
            intervals[i] != intervals[j])
          nesting = true;
    with_zeros += zeros;
    with_nesting += nesting;
    with_singletons += singles;
    with_gaps += gaps;
    with_mwts += !doc.sentences[0].mwts.empty();

    CorefDoc expected = project_gaps(cd);
    CorefDoc back = deserialize(serialize(cd), cd.document);
    bool discontinuous = !entity_structure_equal(cd, expected);
    bool ok = entity_structure_equal(back, expected);
    if (!discontinuous) ok = ok && entity_structure_equal(back, cd);
    if (!ok) ++failures;
  }

  bool covered = with_zeros > 0 && with_nesting > 0 && with_singletons > 0 && with_gaps > 0 &&
                 with_mwts > 0;
  double t = timer.seconds();
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "coverage: zeros %ld, nesting %ld, singletons %ld, gaps %ld, mwts %ld docs",
                with_zeros, with_nesting, with_singletons, with_gaps, with_mwts);
  report(3, "serialize/deserialize round-trip on 1000 generated documents",
         failures == 0 && covered && t < 60.0, t,
         failures ? std::to_string(failures) + " mismatches" : detail);
}

// ---------------------------------------------------------------------------
// 4. Cleaner robustness under token substitutions and bracket deletions.

void criterion_4() {
  Timer timer;
  testgen::Rng rng(4004);
  int failures = 0;

  for (int trial = 0; trial < 500; ++trial) {
    Document doc = testgen::generate_document(rng, "cl" + std::to_string(trial));
    CorefDoc cd = testgen::generate_coref(rng, doc);
    std::string line = serialize(cd);
    testgen::PerturbedLine pert = testgen::perturb_line(rng, line, 0.05, 0.05);

    bool ok = true;
    std::string cleaned = clean(pert.line, cd.document);
    try {
      deserialize(cleaned, cd.document);
    } catch (const std::exception&) {
      ok = false;
    }

    // surface tokens must equal the skeleton sequence exactly
    std::vector<std::string> skeleton_forms;
    for (const Sentence& s : cd.document.sentences)
      for (const Node& n : s.nodes)
        if (!n.id.is_empty_node()) skeleton_forms.push_back(n.form);
    std::vector<std::string> cleaned_surface;
    for (const std::string& tok : text_detail::split_tokens(cleaned)) {
      if (tok.starts_with("##")) continue;
      std::string core;
      std::vector<BracketEvent> events;
      text_detail::lex_token(tok, core, events);
      cleaned_surface.push_back(core);
    }
    ok = ok && cleaned_surface == skeleton_forms;

    // annotations on unperturbed tokens survive verbatim
    std::vector<std::string> before = text_detail::split_tokens(line);
    std::vector<std::string> after = text_detail::split_tokens(cleaned);
    if (before.size() != after.size()) {
      ok = false;
    } else {
      for (std::size_t i = 0; i < before.size(); ++i)
        if (!pert.token_touched[i] && before[i] != after[i]) ok = false;
    }

    ok = ok && clean(cleaned, cd.document) == cleaned;
    if (!ok) ++failures;
  }

  double t = timer.seconds();
  report(4, "cleaner repairs 500 perturbed documents (deserializable, aligned, preserving)",
         failures == 0 && t < 60.0, t, failures ? std::to_string(failures) + " failures" : "");
}

// ---------------------------------------------------------------------------
// 5. Matching-variant ordering under span noise with intact heads.

void criterion_5() {
  Timer timer;
  testgen::Rng rng(5005);
  int failures = 0;
  int fixtures = 0;

  while (fixtures < 100) {
    Document doc = testgen::generate_document(rng, "v" + std::to_string(fixtures));
    CorefDoc gold = testgen::generate_treelet_coref(rng, doc);
    if (gold.entities.size() < 2) continue;
    CorefDoc pred = testgen::noise_spans(rng, gold);
    ++fixtures;

    ZeroAlignment zeros = align_zeros(gold.document, pred.document);
    std::map<Variant, double> conll;
    for (Variant v :
         {Variant::ExactNoSingletons, Variant::PartialNoSingletons, Variant::HeadNoSingletons}) {
      MatchStrategy s = variant_strategy(v);
      CorefDoc g = filter_singletons(gold);
      CorefDoc p = filter_singletons(pred);
      ScoreAccumulator acc;
      acc.add(g, p, align_mentions(g, p, s, zeros), zeros);
      conll[v] = acc.report().conll_f1;
    }
    if (!(conll[Variant::ExactNoSingletons] <= conll[Variant::PartialNoSingletons] + 1e-12 &&
          conll[Variant::PartialNoSingletons] <= conll[Variant::HeadNoSingletons] + 1e-12))
      ++failures;
  }

  double t = timer.seconds();
  report(5, "exact <= partial <= head CoNLL F1 on 100 span-noised fixtures",
         failures == 0 && t < 30.0, t, failures ? std::to_string(failures) + " violations" : "");
}

// ---------------------------------------------------------------------------
// 6. Macro-average over the 22 published per-dataset scores.

void criterion_6() {
  Timer timer;
  std::vector<double> scores = {82.9, 77.1, 80.7, 65.5, 73.0, 76.1, 81.8, 84.5, 76.3, 71.8, 74.5,
                                69.8, 77.7, 68.6, 71.0, 69.9, 77.2, 78.2, 76.3, 80.2, 84.2, 71.2};
  double macro = macro_average(scores);
  bool ok = scores.size() == 22 && close(macro, 75.84, 0.05);
  double t = timer.seconds();
  char detail[64];
  std::snprintf(detail, sizeof detail, "macro = %.4f", macro);
  report(6, "22-dataset macro-average reproduces 75.84 +- 0.05", ok, t, detail);
}

// ---------------------------------------------------------------------------
// 7. Mini sampler: cap, whole documents, determinism.

void criterion_7() {
  Timer timer;
  testgen::Rng rng(7007);
  bool ok = true;

  std::vector<Document> corpus;
  long total = 0;
  for (int i = 0; i < 150; ++i) {
    testgen::DocumentOptions opts;
    opts.max_sentences = 6;
    opts.max_words = 200;
    Document d = testgen::generate_document(rng, "doc" + std::to_string(i), opts);
    total += d.word_count();
    corpus.push_back(std::move(d));
  }
  ok = ok && total > 25000;  // the cap must actually bind

  std::map<std::string, std::string> originals;
  for (const Document& d : corpus) originals[d.doc_id] = write_conllu_text({d});

  for (std::uint64_t seed : {1ull, 2ull, 3ull, 42ull, 9999ull}) {
    std::vector<Document> mini = sample_mini(corpus, 25000, seed);
    long words = 0;
    for (const Document& d : mini) {
      words += d.word_count();
      if (originals[d.doc_id] != write_conllu_text({d})) ok = false;  // never split or edited
    }
    if (words > 25000) ok = false;
  }

  std::string reference = write_conllu_text(sample_mini(corpus, 25000, 42));
  for (int run = 0; run < 100; ++run)
    if (write_conllu_text(sample_mini(corpus, 25000, 42)) != reference) ok = false;

  double t = timer.seconds();
  report(7, "mini sampler keeps totals under 25k words, never splits, 100 reruns byte-identical",
         ok, t);
}

// ---------------------------------------------------------------------------
// 8. Degenerate metric suite.

void criterion_8() {
  Timer timer;
  testgen::Rng rng(8008);
  bool ok = true;

  std::vector<Document> gold;
  while (gold.size() < 4) {
    Document doc = testgen::generate_document(rng, "g" + std::to_string(gold.size()));
    testgen::CorefOptions opts;
    opts.allow_singletons = false;
    CorefDoc cd = testgen::generate_coref(rng, doc, opts);
    if (cd.entities.size() < 2) continue;
    gold.push_back(encode_entities(cd));
  }

  // gold vs gold: every metric and variant at 1.0
  DatasetResult self = score_dataset(gold, gold);
  for (const auto& [variant, report] : self.reports) {
    ok = ok && close(report.muc.f1, 1.0, 1e-12) && close(report.b3.f1, 1.0, 1e-12) &&
         close(report.ceaf_e.f1, 1.0, 1e-12) && close(report.blanc.f1, 1.0, 1e-12) &&
         close(report.lea.f1, 1.0, 1e-12) && close(report.mor.f1, 1.0, 1e-12) &&
         close(report.conll_f1, 1.0, 1e-12);
    if (report.zero_anaphora) ok = ok && close(report.zero_anaphora->f1, 1.0, 1e-12);
  }

  // empty prediction: strip all Entity annotations
  std::vector<Document> empty_pred = gold;
  for (Document& d : empty_pred)
    for (Sentence& s : d.sentences)
      for (Node& n : s.nodes)
        std::erase_if(n.misc,
                      [](const std::string& e) { return std::string_view(e).starts_with("Entity="); });
  DatasetResult none = score_dataset(gold, empty_pred);
  for (const auto& [variant, report] : none.reports) {
    ok = ok && report.muc.f1 == 0.0 && report.b3.f1 == 0.0 && report.ceaf_e.f1 == 0.0 &&
         report.blanc.f1 == 0.0 && report.lea.f1 == 0.0 && report.mor.f1 == 0.0 &&
         report.conll_f1 == 0.0;
  }

  // identical singleton additions leave singleton-excluded scores bit-identical
  std::vector<Document> pred;
  for (const Document& d : gold) {
    CorefDoc cd = extract_entities(d);
    // mild degradation so the scores are not trivially 1
    if (!cd.entities.empty() && cd.entities[0].mentions.size() > 2)
      cd.entities[0].mentions.pop_back();
    pred.push_back(encode_entities(cd));
  }
  auto with_singletons = [](const std::vector<Document>& docs) {
    std::vector<Document> out;
    for (const Document& d : docs) {
      CorefDoc cd = extract_entities(d);
      DocIndex index(cd.document);
      int added = 0;
      for (const Sentence& s : cd.document.sentences) {
        for (const Node& n : s.nodes) {
          if (n.id.is_empty_node() || added >= 2) continue;
          bool used = false;
          for (const Entity& e : cd.entities)
            for (const Mention& m : e.mentions)
              for (const NodeId& id : m.nodes)
                if (id == n.id) used = true;
          if (used) continue;
          Mention m;
          m.entity_id = "single" + std::to_string(++added);
          m.nodes = {n.id};
          m.head = compute_head(m, index);
          cd.entities.push_back(Entity{m.entity_id, {m}});
        }
      }
      out.push_back(encode_entities(cd));
    }
    return out;
  };

  ScoreOptions primary_only;
  primary_only.variants = {Variant::HeadNoSingletons, Variant::PartialNoSingletons,
                           Variant::ExactNoSingletons};
  DatasetResult before = score_dataset(gold, pred, primary_only);
  DatasetResult after = score_dataset(with_singletons(gold), with_singletons(pred), primary_only);
  for (std::size_t i = 0; i < before.reports.size(); ++i) {
    const MetricReport& x = before.reports[i].second;
    const MetricReport& y = after.reports[i].second;
    ok = ok && x.muc.f1 == y.muc.f1 && x.b3.f1 == y.b3.f1 && x.ceaf_e.f1 == y.ceaf_e.f1 &&
         x.lea.f1 == y.lea.f1 && x.blanc.f1 == y.blanc.f1 && x.mor.f1 == y.mor.f1 &&
         x.conll_f1 == y.conll_f1;
  }

  // while the with-singleton B3/CEAF scores can only rise
  ScoreOptions with_sing;
  with_sing.variants = {Variant::HeadWithSingletons};
  DatasetResult ws_before = score_dataset(gold, pred, with_sing);
  DatasetResult ws_after = score_dataset(with_singletons(gold), with_singletons(pred), with_sing);
  ok = ok && ws_after.reports[0].second.b3.f1 >= ws_before.reports[0].second.b3.f1 - 1e-12;
  ok = ok && ws_after.reports[0].second.ceaf_e.f1 >= ws_before.reports[0].second.ceaf_e.f1 - 1e-12;

  double t = timer.seconds();
  report(8, "degenerate suite (self-score 1.0, empty prediction 0.0, singleton invariance)", ok, t);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all 8 criteria passed\n");
  return 0;
}
