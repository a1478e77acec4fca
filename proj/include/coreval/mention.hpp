#pragma once

// Entity/mention layer over parsed documents: decodes the "Entity" MISC
// attribute (bracket events with optional part indices for discontinuous
// mentions), computes mention heads from the basic dependency tree, and
// classifies mentions (zero / gapped / non-treelet).

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "coreval/conllu.hpp"

namespace coreval {

struct Mention {
  std::string entity_id;
  std::vector<NodeId> nodes;  // document order, possibly discontinuous
  NodeId head;
  std::string payload;  // opaque fields after the entity id ("etype-head-...")

  NodeId start() const { return nodes.front(); }
  NodeId end() const { return nodes.back(); }
};

struct Entity {
  std::string id;
  std::vector<Mention> mentions;

  bool is_singleton() const { return mentions.size() == 1; }
};

struct CorefDoc {
  Document document;
  std::vector<Entity> entities;
};

class ExtractError : public std::runtime_error {
 public:
  ExtractError(const std::string& entity, int sentence, const std::string& msg)
      : std::runtime_error("entity '" + entity + "' (sentence " + std::to_string(sentence) +
                           "): " + msg) {}
};

struct MentionFlags {
  bool is_zero = false;
  bool has_empty = false;
  bool has_gap = false;
  bool non_treelet = false;
};

/// Node lookup, global ordering, and basic-tree geometry for one document.
class DocIndex {
 public:
  explicit DocIndex(const Document& doc) : doc_(&doc) {
    for (std::size_t si = 0; si < doc.sentences.size(); ++si)
      for (std::size_t ni = 0; ni < doc.sentences[si].nodes.size(); ++ni) {
        const Node& n = doc.sentences[si].nodes[ni];
        positions_.emplace(n.id, static_cast<int>(order_.size()));
        order_.push_back(&n);
      }
    depth_.assign(order_.size(), -1);
  }

  const Document& document() const { return *doc_; }
  int size() const { return static_cast<int>(order_.size()); }
  const Node* at(int pos) const { return order_[pos]; }
  const Node* find(const NodeId& id) const {
    auto it = positions_.find(id);
    return it == positions_.end() ? nullptr : order_[it->second];
  }
  int position(const NodeId& id) const {
    auto it = positions_.find(id);
    return it == positions_.end() ? -1 : it->second;
  }

  /// Depth in the basic tree: a node attached to the root has depth 1.
  /// Nodes outside the basic tree or on a head cycle report a huge depth.
  int depth(const NodeId& id) const {
    int pos = position(id);
    if (pos < 0) return kUnreachable;
    if (depth_[pos] >= 0) return depth_[pos];

    std::vector<int> path;
    int base = kUnreachable;
    int cur = pos;
    while (cur >= 0) {
      if (depth_[cur] >= 0) {
        base = depth_[cur];
        break;
      }
      bool cycle = false;
      for (int seen : path)
        if (seen == cur) cycle = true;
      if (cycle) break;
      path.push_back(cur);
      const Node* n = order_[cur];
      if (n->id.is_empty_node() || n->head < 0) break;
      if (n->head == 0) {
        base = 0;
        break;
      }
      cur = position(NodeId{n->id.sentence, n->head, 0});
    }
    int d = base;
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      d = d >= kUnreachable ? kUnreachable : d + 1;
      depth_[*it] = d;
    }
    return depth_[pos];
  }

  static constexpr int kUnreachable = std::numeric_limits<int>::max() / 2;

 private:
  const Document* doc_;
  std::vector<const Node*> order_;
  std::map<NodeId, int> positions_;
  mutable std::vector<int> depth_;
};

namespace mention_detail {

struct EntityEvent {
  bool open = false;
  bool close = false;  // open && close on a single node
  std::string id;
  int part = 0;       // 0 = whole mention, k >= 1 = part k
  int part_total = 0;
  std::string payload;
};

/// Splits "e5[2/3]-person-2" into id "e5", part 2/3, payload "person-2".
inline void split_id_field(std::string_view text, EntityEvent& ev, int sentence) {
  std::size_t hyphen = text.find('-');
  std::string_view idpart = hyphen == std::string_view::npos ? text : text.substr(0, hyphen);
  ev.payload = hyphen == std::string_view::npos ? "" : std::string(text.substr(hyphen + 1));
  std::size_t lb = idpart.find('[');
  if (lb != std::string_view::npos && idpart.ends_with(']')) {
    std::string_view inner = idpart.substr(lb + 1, idpart.size() - lb - 2);
    std::size_t slash = inner.find('/');
    int p = 0, t = 0;
    if (slash != std::string_view::npos && detail::parse_uint(inner.substr(0, slash), p) &&
        detail::parse_uint(inner.substr(slash + 1), t) && p >= 1 && t >= p) {
      ev.part = p;
      ev.part_total = t;
      idpart = idpart.substr(0, lb);
    }
  }
  ev.id = std::string(idpart);
  if (ev.id.empty()) throw ExtractError("", sentence, "empty entity id in Entity attribute");
}

inline std::vector<EntityEvent> parse_entity_value(std::string_view value, int sentence) {
  std::vector<EntityEvent> events;
  std::size_t i = 0;
  while (i < value.size()) {
    if (value[i] == '(') {
      std::size_t j = i + 1;
      while (j < value.size() && value[j] != '(' && value[j] != ')') ++j;
      EntityEvent ev;
      ev.open = true;
      split_id_field(value.substr(i + 1, j - i - 1), ev, sentence);
      if (j < value.size() && value[j] == ')') {
        ev.close = true;
        ++j;
      }
      events.push_back(std::move(ev));
      i = j;
    } else {
      std::size_t j = value.find(')', i);
      if (j == std::string_view::npos)
        throw ExtractError(std::string(value.substr(i)), sentence,
                           "closing bracket without ')' terminator");
      EntityEvent ev;
      ev.close = true;
      split_id_field(value.substr(i, j - i), ev, sentence);
      events.push_back(std::move(ev));
      i = j + 1;
    }
  }
  return events;
}

inline std::optional<std::string_view> entity_attribute(const Node& n) {
  for (const std::string& entry : n.misc)
    if (std::string_view(entry).starts_with("Entity=")) return std::string_view(entry).substr(7);
  return std::nullopt;
}

}  // namespace mention_detail

/// Head of a mention per the dependency tree: among nodes whose basic parent
/// lies outside the mention (or is the root), the one with minimal tree depth,
/// then earliest surface order. A mention of empty nodes only heads itself.
inline NodeId compute_head(const Mention& mention, const DocIndex& index) {
  bool any_surface = false;
  for (const NodeId& id : mention.nodes)
    if (!id.is_empty_node()) any_surface = true;
  if (!any_surface) return mention.nodes.front();

  std::set<NodeId> members(mention.nodes.begin(), mention.nodes.end());
  NodeId best;
  int best_depth = std::numeric_limits<int>::max();
  bool found = false;
  for (const NodeId& id : mention.nodes) {
    if (id.is_empty_node()) continue;
    const Node* n = index.find(id);
    if (!n) continue;
    bool external = n->head <= 0 || !members.count(NodeId{id.sentence, n->head, 0});
    if (!external) continue;
    int d = index.depth(id);
    if (!found || d < best_depth || (d == best_depth && id < best)) {
      best = id;
      best_depth = d;
      found = true;
    }
  }
  return found ? best : mention.nodes.front();
}

/// Decodes Entity annotations into entities. Opening brackets match the most
/// recent unclosed occurrence of the same entity id; nesting and crossing of
/// distinct entities is allowed, same-entity crossing and duplicate spans are
/// rejected. Discontinuous parts ("[1/2]") are merged in part order.
inline CorefDoc extract_entities(const Document& doc) {
  using mention_detail::EntityEvent;

  CorefDoc out;
  out.document = doc;
  DocIndex index(out.document);

  struct OpenSpan {
    std::string id;
    int part = 0;
    int part_total = 0;
    std::string payload;
    int start_pos = 0;
    int sentence = 0;
  };
  struct PartialMention {
    std::string payload;
    std::vector<NodeId> nodes;
    int next_part = 1;
    int part_total = 0;
  };

  std::map<std::string, std::vector<OpenSpan>> open;              // per-entity stacks
  std::map<std::string, std::vector<PartialMention>> partial;     // discontinuous assembly, FIFO
  std::map<std::string, int> entity_order;
  std::vector<Entity> entities;

  auto entity_slot = [&](const std::string& id) -> Entity& {
    auto it = entity_order.find(id);
    if (it == entity_order.end()) {
      entity_order.emplace(id, static_cast<int>(entities.size()));
      entities.push_back(Entity{id, {}});
      return entities.back();
    }
    return entities[it->second];
  };

  auto finish_span = [&](const OpenSpan& span, int end_pos) {
    std::vector<NodeId> nodes;
    for (int p = span.start_pos; p <= end_pos; ++p) nodes.push_back(index.at(p)->id);
    if (span.part_total == 0) {
      Mention m;
      m.entity_id = span.id;
      m.payload = span.payload;
      m.nodes = std::move(nodes);
      entity_slot(span.id).mentions.push_back(std::move(m));
      return;
    }
    std::vector<PartialMention>& assembling = partial[span.id];
    PartialMention* pm = nullptr;
    if (span.part == 1) {
      assembling.push_back(PartialMention{span.payload, {}, 1, span.part_total});
      pm = &assembling.back();
    } else {
      // first assembly expecting this part (FIFO over interleaved mentions)
      for (PartialMention& cand : assembling)
        if (cand.next_part == span.part && cand.part_total == span.part_total) {
          pm = &cand;
          break;
        }
      if (!pm)
        throw ExtractError(span.id, span.sentence, "discontinuous mention part out of order");
    }
    pm->nodes.insert(pm->nodes.end(), nodes.begin(), nodes.end());
    ++pm->next_part;
    if (span.part == span.part_total) {
      Mention m;
      m.entity_id = span.id;
      m.payload = pm->payload;
      m.nodes = std::move(pm->nodes);
      entity_slot(span.id).mentions.push_back(std::move(m));
      for (std::size_t i = 0; i < assembling.size(); ++i)
        if (&assembling[i] == pm) {
          assembling.erase(assembling.begin() + i);
          break;
        }
      if (assembling.empty()) partial.erase(span.id);
    }
  };

  for (int pos = 0; pos < index.size(); ++pos) {
    const Node& node = *index.at(pos);
    auto attr = mention_detail::entity_attribute(node);
    if (!attr) continue;
    for (const EntityEvent& ev : mention_detail::parse_entity_value(*attr, node.id.sentence)) {
      if (ev.open) {
        OpenSpan span{ev.id, ev.part, ev.part_total, ev.payload, pos, node.id.sentence};
        if (ev.close) {
          finish_span(span, pos);
        } else {
          open[ev.id].push_back(std::move(span));
        }
      } else {
        // most recent open with the same id and part signature
        auto it = open.find(ev.id);
        OpenSpan span;
        bool found = false;
        if (it != open.end()) {
          auto& stack = it->second;
          for (auto rit = stack.rbegin(); rit != stack.rend(); ++rit)
            if (rit->part == ev.part && rit->part_total == ev.part_total) {
              span = *rit;
              stack.erase(std::next(rit).base());
              found = true;
              break;
            }
        }
        if (!found)
          throw ExtractError(ev.id, node.id.sentence, "closing bracket without a matching opening");
        finish_span(span, pos);
      }
    }
  }
  for (const auto& [id, stack] : open)
    if (!stack.empty())
      throw ExtractError(id, stack.back().sentence, "opening bracket never closed");
  if (!partial.empty())
    throw ExtractError(partial.begin()->first, -1, "discontinuous mention missing its final part");

  for (Entity& e : entities) {
    std::sort(e.mentions.begin(), e.mentions.end(), [](const Mention& a, const Mention& b) {
      return std::pair(a.start(), a.end()) < std::pair(b.start(), b.end());
    });
    for (std::size_t i = 0; i < e.mentions.size(); ++i)
      for (std::size_t j = i + 1; j < e.mentions.size(); ++j) {
        const Mention& a = e.mentions[i];
        const Mention& b = e.mentions[j];
        if (a.nodes == b.nodes)
          throw ExtractError(e.id, a.start().sentence, "two identical mention spans in one entity");
        if (a.start() < b.start() && b.start() <= a.end() && a.end() < b.end())
          throw ExtractError(e.id, a.start().sentence, "crossing mentions within one entity");
      }
    for (Mention& m : e.mentions) m.head = compute_head(m, index);
  }
  out.entities = std::move(entities);
  return out;
}

/// Drops entities with a single mention ("Table 3, excluding singletons").
inline CorefDoc filter_singletons(const CorefDoc& cd) {
  CorefDoc out;
  out.document = cd.document;
  for (const Entity& e : cd.entities)
    if (e.mentions.size() >= 2) out.entities.push_back(e);
  return out;
}

inline MentionFlags classify_mention(const Mention& m, const DocIndex& index) {
  MentionFlags flags;
  bool all_empty = true;
  for (const NodeId& id : m.nodes) {
    if (id.is_empty_node())
      flags.has_empty = true;
    else
      all_empty = false;
  }
  flags.is_zero = all_empty;

  std::set<NodeId> members(m.nodes.begin(), m.nodes.end());

  int lo = index.position(m.nodes.front());
  int hi = index.position(m.nodes.back());
  for (int p = lo + 1; p < hi && !flags.has_gap; ++p) {
    const Node* n = index.at(p);
    if (!n->id.is_empty_node() && !members.count(n->id)) flags.has_gap = true;
  }

  // Connectivity: surface nodes link through their basic parent, empty nodes
  // through any enhanced parent.
  auto linked_into = [&](const NodeId& id) {
    std::vector<NodeId> parents;
    const Node* n = index.find(id);
    if (!n) return parents;
    if (!id.is_empty_node()) {
      if (n->head > 0) parents.push_back(NodeId{id.sentence, n->head, 0});
    } else {
      for (const EnhancedDep& d : n->deps)
        if (!d.parent.is_root()) parents.push_back(NodeId{id.sentence, d.parent.word, d.parent.empty});
    }
    return parents;
  };
  std::map<NodeId, int> comp;
  int next_comp = 0;
  for (const NodeId& id : m.nodes) comp[id] = next_comp++;
  auto unite = [&](const NodeId& a, const NodeId& b) {
    int ca = comp[a], cb = comp[b];
    if (ca == cb) return;
    for (auto& [k, v] : comp)
      if (v == cb) v = ca;
  };
  for (const NodeId& id : m.nodes)
    for (const NodeId& parent : linked_into(id))
      if (members.count(parent)) unite(id, parent);
  std::set<int> distinct;
  for (auto& [k, v] : comp) distinct.insert(v);
  flags.non_treelet = distinct.size() > 1;
  return flags;
}

namespace mention_detail {

struct RenderedEvent {
  bool open;
  std::string text;  // id + optional "[i/n]" (+ "-payload" on opens)
  int open_seq;      // global opening order, for canonical close ordering
};

}  // namespace mention_detail

/// Re-encodes entity annotations into the Entity MISC attribute, replacing any
/// existing Entity entries. Discontinuous mentions are split into maximal
/// contiguous runs and emitted with part indices.
inline Document encode_entities(const CorefDoc& cd) {
  Document doc = cd.document;
  DocIndex index(doc);

  struct Span {
    std::string id;
    std::string payload;
    int part = 0, part_total = 0;
    int start = 0, end = 0;  // global positions
  };
  std::vector<Span> spans;
  for (const Entity& e : cd.entities) {
    for (char c : e.id)
      if (c == '(' || c == ')' || c == '-' || c == '[' || c == ']' || c == '|' || c == ' ' ||
          c == '\t')
        throw ExtractError(e.id, -1, "entity id contains a character reserved by the grammar");
    for (const Mention& m : e.mentions) {
      std::vector<std::pair<int, int>> runs;
      for (const NodeId& id : m.nodes) {
        int p = index.position(id);
        if (p < 0) throw ExtractError(e.id, id.sentence, "mention node missing from document");
        if (!runs.empty() && p == runs.back().second + 1)
          runs.back().second = p;
        else
          runs.emplace_back(p, p);
      }
      int total = static_cast<int>(runs.size());
      for (int i = 0; i < total; ++i)
        spans.push_back(Span{e.id, m.payload, total > 1 ? i + 1 : 0, total > 1 ? total : 0,
                             runs[i].first, runs[i].second});
    }
  }
  // Opens: by start, longer span first, then id. Assign opening sequence.
  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
    return std::tuple(a.start, -a.end, a.id, a.part) < std::tuple(b.start, -b.end, b.id, b.part);
  });

  std::map<int, std::string> values;  // position -> rendered Entity value
  struct Pending {
    const Span* span;
    int seq;
  };
  std::map<int, std::vector<Pending>> closes_at;
  for (std::size_t i = 0; i < spans.size(); ++i) closes_at[spans[i].end].push_back({&spans[i], (int)i});

  auto id_text = [](const Span& s) {
    std::string t = s.id;
    if (s.part_total > 0) t += "[" + std::to_string(s.part) + "/" + std::to_string(s.part_total) + "]";
    return t;
  };

  std::size_t si = 0;
  for (int pos = 0; pos < index.size(); ++pos) {
    std::vector<const Span*> opened_here;
    while (si < spans.size() && spans[si].start == pos) {
      opened_here.push_back(&spans[si]);
      ++si;
    }
    std::vector<Pending> closing = closes_at.count(pos) ? closes_at[pos] : std::vector<Pending>{};
    std::sort(closing.begin(), closing.end(),
              [](const Pending& a, const Pending& b) { return a.seq > b.seq; });
    for (const Span* s : opened_here)
      if (s->end == pos) std::erase_if(closing, [&](const Pending& p) { return p.span == s; });

    // Plain closes first: a close straight after an unterminated opening would
    // be swallowed into its id by the bracket grammar.
    std::string value;
    for (const Pending& p : closing) value += id_text(*p.span) + ")";
    for (const Span* s : opened_here) {
      value += "(";
      value += id_text(*s);
      if (!s->payload.empty()) value += "-" + s->payload;
      if (s->end == pos) value += ")";
    }
    if (!value.empty()) values[pos] = std::move(value);
  }

  int pos = 0;
  for (Sentence& sent : doc.sentences)
    for (Node& n : sent.nodes) {
      std::erase_if(n.misc, [](const std::string& e) { return std::string_view(e).starts_with("Entity="); });
      auto it = values.find(pos);
      if (it != values.end()) n.misc.push_back("Entity=" + it->second);
      ++pos;
    }
  return doc;
}

/// Entity-structure equality: same entity ids with the same mention node sets.
inline bool entity_structure_equal(const CorefDoc& a, const CorefDoc& b) {
  auto canon = [](const CorefDoc& cd) {
    std::map<std::string, std::set<std::vector<NodeId>>> m;
    for (const Entity& e : cd.entities)
      for (const Mention& men : e.mentions) m[e.id].insert(men.nodes);
    return m;
  };
  return canon(a) == canon(b);
}

}  // namespace coreval
