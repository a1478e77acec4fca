#include "doctest.h"

#include <set>
#include <string>
#include <vector>

#include "coreval/conllu.hpp"
#include "coreval/mention.hpp"
#include "support/generators.hpp"

using namespace coreval;

namespace {

/// Simple sentence builder: heads[i] is the basic head of word i+1.
Document make_doc(const std::vector<int>& heads, const std::vector<std::string>& entity_misc = {}) {
  Document d;
  d.doc_id = "t";
  Sentence s;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    Node n;
    n.id = NodeId{0, static_cast<int>(i) + 1, 0};
    n.form = "w" + std::to_string(i + 1);
    n.lemma = n.form;
    n.upos = "NOUN";
    n.head = heads[i];
    n.deprel = heads[i] == 0 ? "root" : "dep";
    if (i < entity_misc.size() && !entity_misc[i].empty()) n.misc.push_back("Entity=" + entity_misc[i]);
    s.nodes.push_back(std::move(n));
  }
  d.sentences.push_back(std::move(s));
  return d;
}

std::set<std::vector<int>> word_spans(const Entity& e) {
  std::set<std::vector<int>> out;
  for (const Mention& m : e.mentions) {
    std::vector<int> words;
    for (const NodeId& id : m.nodes) words.push_back(id.word);
    out.insert(words);
  }
  return out;
}

const Entity* find_entity(const CorefDoc& cd, const std::string& id) {
  for (const Entity& e : cd.entities)
    if (e.id == id) return &e;
  return nullptr;
}

}  // namespace

TEST_CASE("single-token entity annotation yields one one-token mention") {
  Document d = make_doc({0, 1, 1}, {"", "(e1)", ""});
  CorefDoc cd = extract_entities(d);
  REQUIRE(cd.entities.size() == 1);
  CHECK(cd.entities[0].id == "e1");
  REQUIRE(cd.entities[0].mentions.size() == 1);
  CHECK(word_spans(cd.entities[0]) == std::set<std::vector<int>>{{2}});
}

TEST_CASE("nested brackets across tokens resolve to inclusive ranges") {
  // opens on token 3, e2 closes on 4, e1 closes on 6
  Document d = make_doc({0, 1, 1, 3, 3, 1}, {"", "", "(e1(e2", "e2)", "", "e1)"});
  CorefDoc cd = extract_entities(d);
  const Entity* e1 = find_entity(cd, "e1");
  const Entity* e2 = find_entity(cd, "e2");
  REQUIRE(e1);
  REQUIRE(e2);
  CHECK(word_spans(*e2) == std::set<std::vector<int>>{{3, 4}});
  CHECK(word_spans(*e1) == std::set<std::vector<int>>{{3, 4, 5, 6}});
}

TEST_CASE("document without entity annotations yields an empty entity list") {
  Document d = make_doc({0, 1});
  CHECK(extract_entities(d).entities.empty());
}

TEST_CASE("crossing brackets of distinct entities are allowed") {
  Document d = make_doc({0, 1, 1, 1}, {"(e1", "(e2", "e1)", "e2)"});
  CorefDoc cd = extract_entities(d);
  CHECK(word_spans(*find_entity(cd, "e1")) == std::set<std::vector<int>>{{1, 2, 3}});
  CHECK(word_spans(*find_entity(cd, "e2")) == std::set<std::vector<int>>{{2, 3, 4}});
}

TEST_CASE("unbalanced brackets raise a structured error") {
  CHECK_THROWS_AS(extract_entities(make_doc({0, 1}, {"(e1", ""})), ExtractError);
  CHECK_THROWS_AS(extract_entities(make_doc({0, 1}, {"", "e1)"})), ExtractError);
}

TEST_CASE("identical same-entity spans are rejected") {
  CHECK_THROWS_AS(extract_entities(make_doc({0, 1}, {"(e1(e1", "e1)e1)"})), ExtractError);
}

TEST_CASE("same-entity nesting is legal, crossing via merged parts is not") {
  // flat bracket matching is per-entity LIFO, so this reads as nesting
  Document nested = make_doc({0, 1, 1, 1}, {"(e1", "(e1", "e1)", "e1)"});
  CorefDoc cd = extract_entities(nested);
  CHECK(word_spans(*find_entity(cd, "e1")) ==
        std::set<std::vector<int>>{{1, 2, 3, 4}, {2, 3}});

  // a discontinuous mention {1,3} crosses the plain mention {2,3,4}
  Document crossing =
      make_doc({0, 1, 1, 1}, {"(e1[1/2])", "(e1", "(e1[2/2])", "e1)"});
  CHECK_THROWS_AS(extract_entities(crossing), ExtractError);
}

TEST_CASE("discontinuous parts merge in part order") {
  Document d = make_doc({0, 1, 1, 1, 1}, {"(e1[1/2]", "e1[1/2])", "", "(e1[2/2]", "e1[2/2])"});
  CorefDoc cd = extract_entities(d);
  const Entity* e1 = find_entity(cd, "e1");
  REQUIRE(e1);
  REQUIRE(e1->mentions.size() == 1);
  CHECK(word_spans(*e1) == std::set<std::vector<int>>{{1, 2, 4, 5}});
  DocIndex index(cd.document);
  CHECK(classify_mention(e1->mentions[0], index).has_gap);
}

TEST_CASE("payload after the entity id is preserved opaquely") {
  Document d = make_doc({0, 1}, {"(e1-person-1-coref)", ""});
  CorefDoc cd = extract_entities(d);
  REQUIRE(cd.entities.size() == 1);
  CHECK(cd.entities[0].mentions[0].payload == "person-1-coref");
  Document round = encode_entities(cd);
  REQUIRE(!round.sentences[0].nodes[0].misc.empty());
  CHECK(round.sentences[0].nodes[0].misc[0] == "Entity=(e1-person-1-coref)");
}

TEST_CASE("compute_head follows the dependency tree") {
  SUBCASE("single node mention heads itself") {
    Document d = make_doc({0, 1});
    DocIndex index(d);
    Mention m{"e", {NodeId{0, 2, 0}}, {}, ""};
    CHECK(compute_head(m, index) == NodeId{0, 2, 0});
  }
  SUBCASE("the external-parent node wins") {
    // "the dog barked": det -> dog, dog -> barked (outside)
    Document d = make_doc({2, 3, 0});
    DocIndex index(d);
    Mention m{"e", {NodeId{0, 1, 0}, NodeId{0, 2, 0}}, {}, ""};
    CHECK(compute_head(m, index) == NodeId{0, 2, 0});
  }
  SUBCASE("equal-depth external parents break ties by surface order") {
    // words 2 and 4 both attach to word 1 (outside the mention), same depth
    Document d = make_doc({0, 1, 1, 1});
    DocIndex index(d);
    Mention m{"e", {NodeId{0, 2, 0}, NodeId{0, 4, 0}}, {}, ""};
    CHECK(compute_head(m, index) == NodeId{0, 2, 0});
    CHECK(classify_mention(m, index).non_treelet);
  }
  SUBCASE("deeper candidates lose to shallower ones") {
    // chain 2 <- 3, and 4 attaches under 3; mention {3,4} vs external 2
    Document d = make_doc({0, 1, 2, 3});
    DocIndex index(d);
    Mention m{"e", {NodeId{0, 3, 0}, NodeId{0, 4, 0}}, {}, ""};
    CHECK(compute_head(m, index) == NodeId{0, 3, 0});
  }
  SUBCASE("zero mentions head themselves") {
    Document d = make_doc({0});
    d.sentences[0].nodes.push_back([] {
      Node n;
      n.id = NodeId{0, 1, 1};
      n.deps.push_back({NodeId{0, 1, 0}, "nsubj"});
      return n;
    }());
    DocIndex index(d);
    Mention m{"e", {NodeId{0, 1, 1}}, {}, ""};
    CHECK(compute_head(m, index) == NodeId{0, 1, 1});
    CHECK(classify_mention(m, index).is_zero);
  }
}

TEST_CASE("head choice matches a naive reference on generated trees") {
  testgen::Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    Document doc = testgen::generate_document(rng, "h" + std::to_string(trial));
    DocIndex index(doc);
    const Sentence& sent = doc.sentences[0];
    std::vector<NodeId> words;
    for (const Node& n : sent.nodes)
      if (!n.id.is_empty_node()) words.push_back(n.id);
    if (words.size() < 2) continue;

    std::vector<NodeId> nodes;
    for (const NodeId& w : words)
      if (rng.chance(0.5)) nodes.push_back(w);
    if (nodes.size() < 2) continue;
    Mention m{"e", nodes, {}, ""};

    // independent reference: depth by repeated parent walking
    auto depth_of = [&](const NodeId& id) {
      int d = 0;
      int cur = id.word;
      while (cur != 0 && d < 1000) {
        const Node* n = sent.find(NodeId{0, cur, 0});
        cur = n->head;
        ++d;
      }
      return d;
    };
    std::set<NodeId> members(nodes.begin(), nodes.end());
    NodeId best{};
    int best_depth = 1 << 20;
    bool found = false;
    for (const NodeId& id : nodes) {
      const Node* n = sent.find(id);
      if (n->head > 0 && members.count(NodeId{0, n->head, 0})) continue;
      int d = depth_of(id);
      if (!found || d < best_depth || (d == best_depth && id < best)) {
        best = id;
        best_depth = d;
        found = true;
      }
    }
    REQUIRE(found);
    CHECK(compute_head(m, index) == best);
  }
}

TEST_CASE("filter_singletons drops size-1 entities and is idempotent") {
  Document d = make_doc({0, 1, 1, 1}, {"(e1)", "(e2)", "(e2)", ""});
  CorefDoc cd = extract_entities(d);
  REQUIRE(cd.entities.size() == 2);
  CorefDoc f = filter_singletons(cd);
  REQUIRE(f.entities.size() == 1);
  CHECK(f.entities[0].id == "e2");
  CorefDoc ff = filter_singletons(f);
  CHECK(ff.entities.size() == 1);
  CHECK(cd.entities.size() == 2);  // input unchanged

  SUBCASE("only singletons yields an empty entity list") {
    Document ds = make_doc({0, 1}, {"(a)", "(b)"});
    CHECK(filter_singletons(extract_entities(ds)).entities.empty());
  }
  SUBCASE("no singletons leaves everything") {
    Document dn = make_doc({0, 1, 1, 1}, {"(a)", "(a)", "(b)", "(b)"});
    CHECK(filter_singletons(extract_entities(dn)).entities.size() == 2);
  }
}

TEST_CASE("classify_mention flags") {
  Document d = make_doc({0, 1, 2, 1, 4});
  DocIndex index(d);
  SUBCASE("contiguous subtree has no flags") {
    Mention m{"e", {NodeId{0, 1, 0}, NodeId{0, 2, 0}, NodeId{0, 3, 0}}, {}, ""};
    MentionFlags f = classify_mention(m, index);
    CHECK_FALSE(f.is_zero);
    CHECK_FALSE(f.has_empty);
    CHECK_FALSE(f.has_gap);
    CHECK_FALSE(f.non_treelet);
  }
  SUBCASE("a skipped surface node means a gap") {
    Mention m{"e", {NodeId{0, 1, 0}, NodeId{0, 2, 0}, NodeId{0, 5, 0}}, {}, ""};
    CHECK(classify_mention(m, index).has_gap);
  }
}

TEST_CASE("connectivity agrees with an independent BFS oracle") {
  testgen::Rng rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    Document doc = testgen::generate_document(rng, "c" + std::to_string(trial));
    DocIndex index(doc);
    const Sentence& sent = doc.sentences[0];
    std::vector<NodeId> words;
    for (const Node& n : sent.nodes)
      if (!n.id.is_empty_node()) words.push_back(n.id);
    std::vector<NodeId> nodes;
    for (const NodeId& w : words)
      if (rng.chance(0.5)) nodes.push_back(w);
    if (nodes.empty()) continue;
    Mention m{"e", nodes, nodes.front(), ""};

    // BFS over undirected head links restricted to mention members
    std::set<NodeId> members(nodes.begin(), nodes.end());
    std::set<NodeId> seen;
    std::vector<NodeId> queue{nodes.front()};
    seen.insert(nodes.front());
    while (!queue.empty()) {
      NodeId cur = queue.back();
      queue.pop_back();
      for (const NodeId& other : nodes) {
        if (seen.count(other)) continue;
        const Node* a = sent.find(cur);
        const Node* b = sent.find(other);
        bool linked = (a->head > 0 && a->head == other.word) || (b->head > 0 && b->head == cur.word);
        if (linked) {
          seen.insert(other);
          queue.push_back(other);
        }
      }
    }
    bool oracle_non_treelet = seen.size() != members.size();
    CHECK(classify_mention(m, index).non_treelet == oracle_non_treelet);
  }
}

TEST_CASE("bracket extraction inverts generated annotation encodings") {
  testgen::Rng rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    Document doc = testgen::generate_document(rng, "x" + std::to_string(trial));
    CorefDoc cd = testgen::generate_coref(rng, doc);
    Document annotated = encode_entities(cd);
    CorefDoc back = extract_entities(annotated);
    CHECK(entity_structure_equal(cd, back));
  }
}

TEST_CASE("extraction is stable across a write/parse cycle") {
  testgen::Rng rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    Document doc = testgen::generate_document(rng, "s" + std::to_string(trial));
    CorefDoc cd = testgen::generate_coref(rng, doc);
    Document annotated = encode_entities(cd);
    std::vector<Document> reparsed = parse_conllu_text(write_conllu_text({annotated}));
    REQUIRE(reparsed.size() == 1);
    CorefDoc back = extract_entities(reparsed[0]);
    CHECK(entity_structure_equal(cd, back));
  }
}
