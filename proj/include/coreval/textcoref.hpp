#pragma once

// One-line-per-document plaintext serialization of coreference annotations:
// tokens are space separated, annotations follow a '|' ("[e" opens entity e,
// "e]" closes it, "[e]" is a single-token mention), empty nodes are rendered
// as "##" plus an optional form/lemma payload and placed directly after their
// syntactic parent. deserialize() restores a line onto a CoNLL-U skeleton and
// clean() repairs arbitrary model output until it deserializes.

#include <cctype>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "coreval/conllu.hpp"
#include "coreval/mention.hpp"

namespace coreval {

struct BracketEvent {
  enum class Kind { Open, Close };
  Kind kind = Kind::Open;
  std::string entity;
  bool operator==(const BracketEvent&) const = default;
};

struct PlainToken {
  std::string surface;  // surface form; unused for empty tokens
  bool is_empty = false;
  std::string empty_payload;
  std::vector<BracketEvent> events;
};

class SerializeError : public std::runtime_error {
 public:
  explicit SerializeError(const std::string& msg) : std::runtime_error(msg) {}
};

class TokenMismatchError : public std::runtime_error {
 public:
  TokenMismatchError(int position, const std::string& expected, const std::string& found)
      : std::runtime_error("token " + std::to_string(position) + ": expected '" + expected +
                           "', found '" + found + "'"),
        position(position) {}
  int position;
};

class PlainFormatError : public std::runtime_error {
 public:
  explicit PlainFormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SerializeOptions {
  bool include_annotations = true;
  bool surface_mwt = false;  // emit multiword-token surface forms instead of syntactic words
};

namespace text_detail {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

/// Token forms may not contain whitespace in the one-line format.
inline std::string plain_form(std::string_view form) {
  std::string out(form);
  for (char& c : out)
    if (is_space(c)) c = '_';
  return out;
}

inline bool valid_event_id(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id)
    if (c == '[' || c == ']' || c == '|' || is_space(c)) return false;
  return true;
}

/// Parses an annotation suffix. Returns false on malformed input.
inline bool parse_events(std::string_view s, std::vector<BracketEvent>& out) {
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '[') {
      std::size_t j = i + 1;
      while (j < s.size() && s[j] != '[' && s[j] != ']') ++j;
      std::string_view id = s.substr(i + 1, j - i - 1);
      if (!valid_event_id(id)) return false;
      out.push_back({BracketEvent::Kind::Open, std::string(id)});
      if (j < s.size() && s[j] == ']') {
        out.push_back({BracketEvent::Kind::Close, std::string(id)});
        ++j;
      }
      i = j;
    } else {
      std::size_t j = s.find(']', i);
      if (j == std::string_view::npos) return false;
      std::string_view id = s.substr(i, j - i);
      if (!valid_event_id(id)) return false;
      out.push_back({BracketEvent::Kind::Close, std::string(id)});
      i = j + 1;
    }
  }
  return true;
}

/// Renders events back to the bracket syntax. An adjacent Open(e)+Close(e)
/// pair always refers to the same mention (stack discipline), so it renders
/// as "[e]". A plain close directly after an unmerged open would be swallowed
/// by the bracket grammar, so such closes are bubbled leftward; swapping a
/// close past an open of a different entity never changes stack semantics.
inline std::string render_events(const std::vector<BracketEvent>& events) {
  struct Unit {
    int type;  // 0 = open, 1 = close, 2 = open+close pair
    std::string id;
  };
  std::vector<Unit> units;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const BracketEvent& e = events[i];
    if (e.kind == BracketEvent::Kind::Open && i + 1 < events.size() &&
        events[i + 1].kind == BracketEvent::Kind::Close && events[i + 1].entity == e.entity) {
      units.push_back({2, e.entity});
      ++i;
    } else {
      units.push_back({e.kind == BracketEvent::Kind::Open ? 0 : 1, e.entity});
    }
  }
  bool moved = true;
  while (moved) {
    moved = false;
    for (std::size_t i = 0; i + 1 < units.size(); ++i)
      if (units[i].type == 0 && units[i + 1].type == 1) {
        std::swap(units[i], units[i + 1]);
        moved = true;
      }
  }
  std::string out;
  for (const Unit& u : units) {
    if (u.type == 0)
      out += "[" + u.id;
    else if (u.type == 1)
      out += u.id + "]";
    else
      out += "[" + u.id + "]";
  }
  return out;
}

inline std::string render_token(const PlainToken& t, bool with_annotations) {
  std::string out = t.is_empty ? "##" + t.empty_payload : t.surface;
  if (with_annotations && !t.events.empty()) out += "|" + render_events(t.events);
  return out;
}

/// Splits a raw token into core and events. The split point is the first '|'
/// whose suffix parses as a complete event sequence; tokens without such a
/// split carry no annotation.
inline void lex_token(std::string_view raw, std::string& core, std::vector<BracketEvent>& events) {
  std::size_t from = 0;
  while (true) {
    std::size_t bar = raw.find('|', from);
    if (bar == std::string_view::npos) break;
    std::vector<BracketEvent> parsed;
    if (parse_events(raw.substr(bar + 1), parsed)) {
      core = std::string(raw.substr(0, bar));
      events = std::move(parsed);
      return;
    }
    from = bar + 1;
  }
  core = std::string(raw);
  events.clear();
}

/// Anchor used for empty-node placement: the first enhanced parent that is
/// not the root. Returns nullptr for orphans.
inline const NodeId* empty_anchor(const Node& n) {
  for (const EnhancedDep& d : n.deps)
    if (!d.parent.is_root()) return &d.parent;
  return nullptr;
}

inline std::string empty_payload_of(const Node& n) {
  if (n.form != "_" && !n.form.empty()) return n.form;
  if (n.lemma != "_" && !n.lemma.empty()) return n.lemma;
  return "";
}

struct TokenLayout {
  std::vector<PlainToken> tokens;
  std::vector<std::vector<NodeId>> covered;  // node ids per token, emission order
  std::map<NodeId, int> token_of;
};

/// Emits the token stream for one document: surface words (or MWT surface
/// forms), each followed by the empty nodes anchored to it, recursively.
inline TokenLayout layout_tokens(const Document& doc, bool surface_mwt) {
  TokenLayout out;
  long total_empty = 0;
  long emitted_empty = 0;

  for (const Sentence& sent : doc.sentences) {
    std::map<NodeId, std::vector<const Node*>> anchored;
    for (const Node& n : sent.nodes) {
      if (!n.id.is_empty_node()) continue;
      ++total_empty;
      const NodeId* anchor = empty_anchor(n);
      if (!anchor)
        throw SerializeError("empty node " + n.id.column() + " has no parent to anchor its placement");
      anchored[NodeId{n.id.sentence, anchor->word, anchor->empty}].push_back(&n);
    }

    auto emit = [&](const PlainToken& tok, std::vector<NodeId> ids) {
      for (const NodeId& id : ids) out.token_of[id] = static_cast<int>(out.tokens.size());
      out.tokens.push_back(tok);
      out.covered.push_back(std::move(ids));
    };
    auto emit_empties = [&](const NodeId& at, auto&& self) -> void {
      auto it = anchored.find(at);
      if (it == anchored.end()) return;
      for (const Node* e : it->second) {
        PlainToken tok;
        tok.is_empty = true;
        tok.empty_payload = plain_form(empty_payload_of(*e));
        emit(tok, {e->id});
        ++emitted_empty;
        self(e->id, self);
      }
    };

    std::size_t mwt_at = 0;
    for (std::size_t ni = 0; ni < sent.nodes.size(); ++ni) {
      const Node& n = sent.nodes[ni];
      if (n.id.is_empty_node()) continue;
      if (surface_mwt && mwt_at < sent.mwts.size() && sent.mwts[mwt_at].first == n.id.word) {
        const MwtRange& m = sent.mwts[mwt_at++];
        std::vector<NodeId> ids;
        std::vector<NodeId> words;
        for (int w = m.first; w <= m.last; ++w) {
          NodeId id{n.id.sentence, w, 0};
          ids.push_back(id);
          words.push_back(id);
        }
        PlainToken tok;
        tok.surface = plain_form(m.form);
        emit(tok, ids);
        for (const NodeId& w : words) emit_empties(w, emit_empties);
        continue;
      }
      if (surface_mwt && !sent.mwts.empty()) {
        // words covered by an already-emitted MWT token were handled above
        bool covered_by_mwt = false;
        for (const MwtRange& m : sent.mwts)
          if (n.id.word >= m.first && n.id.word <= m.last) covered_by_mwt = true;
        if (covered_by_mwt) continue;
      }
      PlainToken tok;
      tok.surface = plain_form(n.form);
      emit(tok, {n.id});
      emit_empties(n.id, emit_empties);
    }
  }
  if (emitted_empty != total_empty)
    throw SerializeError("empty nodes anchored in a cycle cannot be placed");
  return out;
}

}  // namespace text_detail

/// Serializes one coreference document to a single line.
inline std::string serialize(const CorefDoc& cd, const SerializeOptions& opts = {},
                             std::vector<Diagnostic>* diagnostics = nullptr) {
  using namespace text_detail;

  TokenLayout layout = layout_tokens(cd.document, opts.surface_mwt);

  if (opts.include_annotations) {
    for (const Entity& e : cd.entities) {
      for (char c : e.id)
        if (c == ' ' || c == '|' || c == '[' || c == ']' || is_space(c))
          throw SerializeError("entity id '" + e.id + "' contains a reserved character");
    }

    struct Span {
      const std::string* id;
      int open_token;
      int close_token;
    };
    std::vector<Span> spans;
    for (const Entity& e : cd.entities)
      for (const Mention& m : e.mentions) {
        int lo = -1, hi = -1;
        bool contiguous_ids = true;
        for (const NodeId& id : m.nodes) {
          auto it = layout.token_of.find(id);
          if (it == layout.token_of.end())
            throw SerializeError("mention of '" + e.id + "' references node " + id.column() +
                                 " outside the document");
          lo = lo < 0 ? it->second : std::min(lo, it->second);
          hi = hi < 0 ? it->second : std::max(hi, it->second);
        }
        std::size_t covered_nodes = 0;
        for (int t = lo; t <= hi; ++t) covered_nodes += layout.covered[t].size();
        if (covered_nodes != m.nodes.size()) contiguous_ids = false;
        if (!contiguous_ids && diagnostics)
          diagnostics->push_back({"mention of '" + e.id +
                                      "' is not a contiguous token interval; serialized as its "
                                      "covering span",
                                  m.start().sentence, m.start().column()});
        spans.push_back({&e.id, lo, hi});
      }

    // Opens by start, longer span first, ties by entity id; closes innermost first.
    std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
      return std::tuple(a.open_token, -a.close_token, *a.id) <
             std::tuple(b.open_token, -b.close_token, *b.id);
    });
    std::map<int, std::vector<int>> closes_at;
    for (std::size_t i = 0; i < spans.size(); ++i) closes_at[spans[i].close_token].push_back((int)i);

    std::size_t si = 0;
    for (int t = 0; t < static_cast<int>(layout.tokens.size()); ++t) {
      std::vector<BracketEvent>& events = layout.tokens[t].events;
      std::vector<int> opening;
      while (si < spans.size() && spans[si].open_token == t) opening.push_back((int)si++);
      std::vector<int> closing = closes_at.count(t) ? closes_at[t] : std::vector<int>{};
      std::sort(closing.begin(), closing.end(), std::greater<int>());

      for (int idx : opening) {
        events.push_back({BracketEvent::Kind::Open, *spans[idx].id});
        if (spans[idx].close_token == t) {
          events.push_back({BracketEvent::Kind::Close, *spans[idx].id});
          std::erase(closing, idx);
        }
      }
      for (int idx : closing) events.push_back({BracketEvent::Kind::Close, *spans[idx].id});
    }
  }

  std::string line;
  for (std::size_t t = 0; t < layout.tokens.size(); ++t) {
    const PlainToken& tok = layout.tokens[t];
    if (!opts.include_annotations && tok.is_empty) continue;  // bare input variant
    if (!line.empty()) line += ' ';
    std::string rendered = render_token(tok, opts.include_annotations);
    if (diagnostics && !tok.is_empty)
      for (char c : tok.surface)
        if (c == '|' || c == '[' || c == ']') {
          diagnostics->push_back({"token form '" + tok.surface + "' contains annotation syntax",
                                  -1, ""});
          break;
        }
    line += rendered;
  }
  return line;
}

/// Serializes every document of a parsed file, one line each.
inline std::vector<std::string> serialize_documents(const std::vector<Document>& docs,
                                                    const SerializeOptions& opts = {}) {
  std::vector<std::string> lines;
  lines.reserve(docs.size());
  for (const Document& d : docs) lines.push_back(serialize(extract_entities(d), opts));
  return lines;
}

struct DeserializeOptions {
  bool surface_mwt = false;
};

namespace text_detail {

struct ExpectedToken {
  std::string form;            // plain form to match
  std::vector<NodeId> words;   // surface nodes covered by this token
};

inline std::vector<ExpectedToken> expected_stream(const Document& doc, bool surface_mwt) {
  std::vector<ExpectedToken> out;
  for (const Sentence& sent : doc.sentences) {
    std::size_t mwt_at = 0;
    for (const Node& n : sent.nodes) {
      if (n.id.is_empty_node()) continue;
      if (surface_mwt && mwt_at < sent.mwts.size() && sent.mwts[mwt_at].first == n.id.word) {
        const MwtRange& m = sent.mwts[mwt_at++];
        ExpectedToken tok;
        tok.form = plain_form(m.form);
        for (int w = m.first; w <= m.last; ++w) tok.words.push_back(NodeId{n.id.sentence, w, 0});
        out.push_back(std::move(tok));
        continue;
      }
      if (surface_mwt) {
        bool covered = false;
        for (const MwtRange& m : sent.mwts)
          if (n.id.word >= m.first && n.id.word <= m.last) covered = true;
        if (covered) continue;
      }
      out.push_back({plain_form(n.form), {n.id}});
    }
  }
  return out;
}

inline std::vector<std::string> split_tokens(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

/// Splits "##payload|events"; payload keeps everything when no '|' suffix parses.
inline void lex_empty_token(std::string_view raw, std::string& payload,
                            std::vector<BracketEvent>& events) {
  std::string core;
  lex_token(raw, core, events);
  payload = core.substr(2);  // strip "##"
}

}  // namespace text_detail

/// Restores a plaintext line onto a skeleton document. The skeleton provides
/// the surface token sequence; its own empty nodes and Entity annotations are
/// discarded. "##" tokens become fresh empty nodes "parent.k" anchored to the
/// preceding surface token with an enhanced "dep" relation.
inline CorefDoc deserialize(const std::string& line, const Document& skeleton,
                            const DeserializeOptions& opts = {}) {
  using namespace text_detail;

  Document doc;
  doc.doc_id = skeleton.doc_id;
  doc.synthetic_doc_id = skeleton.synthetic_doc_id;
  for (const Sentence& sent : skeleton.sentences) {
    Sentence copy;
    copy.sent_id = sent.sent_id;
    copy.comments = sent.comments;
    copy.mwts = sent.mwts;
    for (const Node& n : sent.nodes) {
      if (n.id.is_empty_node()) continue;
      Node node = n;
      std::erase_if(node.deps, [](const EnhancedDep& d) { return d.parent.is_empty_node(); });
      std::erase_if(node.misc,
                    [](const std::string& e) { return std::string_view(e).starts_with("Entity="); });
      copy.nodes.push_back(std::move(node));
    }
    doc.sentences.push_back(std::move(copy));
  }

  std::vector<ExpectedToken> expected = expected_stream(doc, opts.surface_mwt);
  std::vector<std::string> raw = split_tokens(line);

  // new empty nodes per anchor word, in emission order
  std::map<NodeId, std::vector<Node>> new_empties;
  std::vector<NodeId> flat;                 // final node order as emitted
  std::vector<std::pair<int, int>> token_ranges;  // [first, last] indices into flat per token

  struct OpenBracket {
    std::string entity;
    int start_flat;
  };
  std::map<std::string, std::vector<OpenBracket>> open;
  struct RawMention {
    std::string entity;
    std::vector<NodeId> nodes;
  };
  std::vector<RawMention> mentions;

  std::size_t at = 0;  // next expected token
  const NodeId* last_word = nullptr;

  for (std::size_t r = 0; r < raw.size(); ++r) {
    const std::string& tok = raw[r];
    std::vector<BracketEvent> events;
    int first_flat = static_cast<int>(flat.size());

    if (tok.starts_with("##")) {
      if (!last_word)
        throw TokenMismatchError(static_cast<int>(r), "a surface token before any empty token", tok);
      std::string payload;
      lex_empty_token(tok, payload, events);
      NodeId anchor{last_word->sentence, last_word->word, 0};
      std::vector<Node>& group = new_empties[anchor];
      Node n;
      n.id = NodeId{anchor.sentence, anchor.word, static_cast<int>(group.size()) + 1};
      n.form = payload.empty() ? "_" : payload;
      n.deps.push_back({anchor, "dep"});
      group.push_back(n);
      flat.push_back(n.id);
    } else {
      if (at >= expected.size())
        throw TokenMismatchError(static_cast<int>(r), "end of document", tok);
      const ExpectedToken& exp = expected[at];
      if (tok == exp.form) {
        // no annotation
      } else if (tok.size() > exp.form.size() && tok.compare(0, exp.form.size(), exp.form) == 0 &&
                 tok[exp.form.size()] == '|') {
        if (!parse_events(std::string_view(tok).substr(exp.form.size() + 1), events))
          throw PlainFormatError("malformed annotation on token '" + tok + "'");
      } else {
        throw TokenMismatchError(static_cast<int>(r), exp.form, tok);
      }
      for (const NodeId& w : exp.words) flat.push_back(w);
      last_word = &exp.words.back();
      ++at;
    }
    token_ranges.emplace_back(first_flat, static_cast<int>(flat.size()) - 1);

    for (const BracketEvent& ev : events) {
      if (ev.kind == BracketEvent::Kind::Open) {
        open[ev.entity].push_back({ev.entity, first_flat});
      } else {
        auto it = open.find(ev.entity);
        if (it == open.end() || it->second.empty())
          throw PlainFormatError("closing bracket for '" + ev.entity + "' without a matching opening");
        OpenBracket ob = it->second.back();
        it->second.pop_back();
        RawMention m;
        m.entity = ev.entity;
        for (int i = ob.start_flat; i < static_cast<int>(flat.size()); ++i) m.nodes.push_back(flat[i]);
        mentions.push_back(std::move(m));
      }
    }
  }
  if (at != expected.size())
    throw TokenMismatchError(static_cast<int>(raw.size()), expected[at].form, "end of line");
  for (const auto& [id, stack] : open)
    if (!stack.empty()) throw PlainFormatError("opening bracket for '" + id + "' never closed");

  for (Sentence& sent : doc.sentences) {
    std::vector<Node> merged;
    for (const Node& n : sent.nodes) {
      merged.push_back(n);
      auto it = new_empties.find(n.id);
      if (it != new_empties.end())
        for (const Node& e : it->second) merged.push_back(e);
    }
    sent.nodes = std::move(merged);
  }

  CorefDoc out;
  out.document = std::move(doc);
  DocIndex index(out.document);

  std::map<std::string, int> entity_order;
  for (const RawMention& rm : mentions) {
    if (!entity_order.count(rm.entity)) {
      entity_order.emplace(rm.entity, static_cast<int>(out.entities.size()));
      out.entities.push_back(Entity{rm.entity, {}});
    }
    Entity& e = out.entities[entity_order[rm.entity]];
    bool duplicate = false;
    for (const Mention& prev : e.mentions)
      if (prev.nodes == rm.nodes) duplicate = true;
    if (duplicate) continue;
    Mention m;
    m.entity_id = rm.entity;
    m.nodes = rm.nodes;
    m.head = compute_head(m, index);
    e.mentions.push_back(std::move(m));
  }
  for (Entity& e : out.entities)
    std::sort(e.mentions.begin(), e.mentions.end(), [](const Mention& a, const Mention& b) {
      return std::pair(a.start(), a.end()) < std::pair(b.start(), b.end());
    });
  return out;
}

/// Repairs raw model output for one document: fixes bracket structure, aligns
/// the token sequence to the skeleton by word-level edit distance (empty
/// tokens are ignored in the distance), restores skeleton forms, and migrates
/// annotations from deleted tokens to the previous aligned token (document
/// initial: to the next). Total: any input yields a deserializable line.
inline std::string clean(const std::string& raw_line, const Document& skeleton,
                         const DeserializeOptions& opts = {}) {
  using namespace text_detail;

  std::vector<ExpectedToken> expected = expected_stream(skeleton, opts.surface_mwt);

  struct RawTok {
    bool is_empty = false;
    std::string core;  // surface form or empty payload
    std::vector<BracketEvent> events;
  };
  std::vector<RawTok> toks;
  for (const std::string& t : split_tokens(raw_line)) {
    RawTok rt;
    if (t.starts_with("##")) {
      rt.is_empty = true;
      lex_empty_token(t, rt.core, rt.events);
    } else {
      lex_token(t, rt.core, rt.events);
    }
    toks.push_back(std::move(rt));
  }

  // Bracket repair over the whole event stream: spurious closes are dropped,
  // unclosed opens are closed at the final token in reverse-open order.
  std::map<std::string, int> open_count;
  std::vector<std::string> open_order;
  for (RawTok& rt : toks) {
    std::vector<BracketEvent> kept;
    for (BracketEvent& ev : rt.events) {
      if (ev.kind == BracketEvent::Kind::Open) {
        ++open_count[ev.entity];
        open_order.push_back(ev.entity);
        kept.push_back(std::move(ev));
      } else {
        if (open_count[ev.entity] > 0) {
          --open_count[ev.entity];
          for (auto it = open_order.rbegin(); it != open_order.rend(); ++it)
            if (*it == ev.entity) {
              open_order.erase(std::next(it).base());
              break;
            }
          kept.push_back(std::move(ev));
        }
      }
    }
    rt.events = std::move(kept);
  }
  if (!toks.empty())
    for (auto it = open_order.rbegin(); it != open_order.rend(); ++it)
      toks.back().events.push_back({BracketEvent::Kind::Close, *it});

  // Surface stream with attached empties.
  struct SurfaceTok {
    std::string core;
    std::vector<BracketEvent> events;
    std::vector<RawTok> empties;
  };
  std::vector<SurfaceTok> surface;
  std::vector<RawTok> leading_empties;
  for (RawTok& rt : toks) {
    if (rt.is_empty) {
      if (surface.empty())
        leading_empties.push_back(std::move(rt));
      else
        surface.back().empties.push_back(std::move(rt));
    } else {
      surface.push_back({std::move(rt.core), std::move(rt.events), {}});
    }
  }

  auto render_line = [](const std::vector<SurfaceTok>& slots) {
    std::string line;
    for (const SurfaceTok& s : slots) {
      if (!line.empty()) line += ' ';
      line += s.core;
      if (!s.events.empty()) line += "|" + render_events(s.events);
      for (const RawTok& e : s.empties) {
        line += " ##" + e.core;
        if (!e.events.empty()) line += "|" + render_events(e.events);
      }
    }
    return line;
  };

  if (surface.empty() || expected.empty()) {
    std::vector<SurfaceTok> bare;
    for (const ExpectedToken& e : expected) bare.push_back({e.form, {}, {}});
    return render_line(bare);
  }

  // Word-level edit distance, unit costs, minimizing (cost, -equal-matches).
  std::size_t n = surface.size(), m = expected.size();
  struct Cell {
    int cost;
    int neg_eq;
    bool operator<(const Cell& o) const { return std::tie(cost, neg_eq) < std::tie(o.cost, o.neg_eq); }
  };
  std::vector<std::vector<Cell>> dp(n + 1, std::vector<Cell>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) dp[i][0] = {static_cast<int>(i), 0};
  for (std::size_t j = 0; j <= m; ++j) dp[0][j] = {static_cast<int>(j), 0};
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      bool eq = surface[i - 1].core == expected[j - 1].form;
      Cell diag{dp[i - 1][j - 1].cost + (eq ? 0 : 1), dp[i - 1][j - 1].neg_eq - (eq ? 1 : 0)};
      Cell del{dp[i - 1][j].cost + 1, dp[i - 1][j].neg_eq};
      Cell ins{dp[i][j - 1].cost + 1, dp[i][j - 1].neg_eq};
      dp[i][j] = std::min(diag, std::min(del, ins));
    }

  enum Op { kMatch, kDelete, kInsert };
  std::vector<std::pair<Op, std::pair<int, int>>> ops;  // (op, (raw index, skel index))
  {
    std::size_t i = n, j = m;
    while (i > 0 || j > 0) {
      if (i > 0 && j > 0) {
        bool eq = surface[i - 1].core == expected[j - 1].form;
        Cell diag{dp[i - 1][j - 1].cost + (eq ? 0 : 1), dp[i - 1][j - 1].neg_eq - (eq ? 1 : 0)};
        if (!(dp[i][j] < diag) && !(diag < dp[i][j])) {
          ops.push_back({kMatch, {static_cast<int>(i - 1), static_cast<int>(j - 1)}});
          --i;
          --j;
          continue;
        }
      }
      if (i > 0) {
        Cell del{dp[i - 1][j].cost + 1, dp[i - 1][j].neg_eq};
        if (!(dp[i][j] < del) && !(del < dp[i][j])) {
          ops.push_back({kDelete, {static_cast<int>(i - 1), -1}});
          --i;
          continue;
        }
      }
      ops.push_back({kInsert, {-1, static_cast<int>(j - 1)}});
      --j;
    }
    std::reverse(ops.begin(), ops.end());
  }

  std::vector<SurfaceTok> out;
  int last_anchor = -1;
  std::vector<BracketEvent> initial_events;
  std::vector<RawTok> initial_empties = std::move(leading_empties);

  for (const auto& [op, idx] : ops) {
    if (op == kInsert) {
      out.push_back({expected[idx.second].form, {}, {}});
    } else if (op == kDelete) {
      SurfaceTok& dead = surface[idx.first];
      if (last_anchor >= 0) {
        SurfaceTok& target = out[last_anchor];
        target.events.insert(target.events.end(), dead.events.begin(), dead.events.end());
        for (RawTok& e : dead.empties) target.empties.push_back(std::move(e));
      } else {
        initial_events.insert(initial_events.end(), dead.events.begin(), dead.events.end());
        for (RawTok& e : dead.empties) initial_empties.push_back(std::move(e));
      }
    } else {
      SurfaceTok& src = surface[idx.first];
      SurfaceTok slot{expected[idx.second].form, {}, {}};
      slot.events = std::move(initial_events);
      initial_events.clear();
      slot.events.insert(slot.events.end(), src.events.begin(), src.events.end());
      slot.empties = std::move(initial_empties);
      initial_empties.clear();
      for (RawTok& e : src.empties) slot.empties.push_back(std::move(e));
      last_anchor = static_cast<int>(out.size());
      out.push_back(std::move(slot));
    }
  }
  // Buffered events with no anchor can only remain if nothing aligned, which
  // the unit-cost distance rules out for nonempty inputs.
  return render_line(out);
}

}  // namespace coreval
