#pragma once

// CoNLL-U reader/writer for coreference corpora: surface words, empty nodes
// ("3.1"), multi-word token ranges ("2-3"), enhanced dependencies and MISC
// are preserved so that parse -> write is byte-identical on well-formed input.

#include <algorithm>
#include <compare>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace coreval {

struct NodeId {
  int sentence = 0;
  int word = 0;   // 1-based surface index; 0 only for root or leading empties
  int empty = 0;  // 0 = surface word, k > 0 = empty node "word.k"

  bool is_empty_node() const { return empty > 0; }
  bool is_root() const { return word == 0 && empty == 0; }
  auto operator<=>(const NodeId&) const = default;

  /// Column form without the sentence index: "3", "3.1".
  std::string column() const {
    std::string s = std::to_string(word);
    if (empty > 0) {
      s += '.';
      s += std::to_string(empty);
    }
    return s;
  }
};

struct EnhancedDep {
  NodeId parent;  // word==0 && empty==0 encodes the root
  std::string rel;
  bool operator==(const EnhancedDep&) const = default;
};

struct Node {
  NodeId id;
  std::string form = "_";
  std::string lemma = "_";
  std::string upos = "_";
  std::string xpos = "_";
  std::string feats = "_";
  int head = -1;  // basic head word index, 0 = root, -1 = absent ("_")
  std::string deprel = "_";
  std::vector<EnhancedDep> deps;
  std::vector<std::string> misc;  // raw "Key=Value" entries, order preserved
};

struct MwtRange {
  int first = 0;
  int last = 0;
  std::string form;
  std::string misc = "_";
};

struct Sentence {
  std::string sent_id;
  std::vector<std::string> comments;  // raw lines including the leading '#'
  std::vector<Node> nodes;            // increasing by (word, empty)
  std::vector<MwtRange> mwts;         // increasing by first

  const Node* find(const NodeId& id) const {
    for (const Node& n : nodes)
      if (n.id.word == id.word && n.id.empty == id.empty) return &n;
    return nullptr;
  }
  int word_count() const {
    int c = 0;
    for (const Node& n : nodes) c += n.id.is_empty_node() ? 0 : 1;
    return c;
  }
};

struct Document {
  std::string doc_id;
  bool synthetic_doc_id = false;  // no "# newdoc" marker carried an id
  std::vector<Sentence> sentences;

  const Node* find(const NodeId& id) const {
    if (id.sentence < 0 || id.sentence >= static_cast<int>(sentences.size())) return nullptr;
    return sentences[id.sentence].find(id);
  }
  long word_count() const {
    long c = 0;
    for (const Sentence& s : sentences) c += s.word_count();
    return c;
  }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct Diagnostic {
  std::string message;
  int sentence = -1;   // index within the document, -1 = document level
  std::string node;    // column form of the offending node, may be empty
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline bool parse_uint(std::string_view s, int& out) {
  if (s.empty() || s.size() > 9) return false;
  int v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// "# newdoc id = X" -> X; "# newdoc" -> ""; anything else -> nullopt-like flag.
inline bool match_comment_key(std::string_view line, std::string_view key, std::string& value,
                              bool& bare) {
  if (!line.starts_with('#')) return false;
  std::string_view rest = trim(line.substr(1));
  if (!rest.starts_with(key)) return false;
  rest.remove_prefix(key.size());
  if (rest.empty()) {
    bare = true;
    value.clear();
    return true;
  }
  if (rest.front() != ' ' && rest.front() != '\t' && rest.front() != '=') return false;
  std::size_t eq = rest.find('=');
  if (eq == std::string_view::npos) {
    bare = true;
    value.clear();
    return true;
  }
  bare = false;
  value = std::string(trim(rest.substr(eq + 1)));
  return true;
}

}  // namespace detail

namespace conllu_detail {

struct PendingSentence {
  std::vector<std::string> comments;
  std::vector<Node> nodes;
  std::vector<int> node_lines;
  std::vector<MwtRange> mwts;
  std::string sent_id;
  bool has_newdoc = false;
  std::string newdoc_id;
  int first_line = 0;

  bool empty() const { return comments.empty() && nodes.empty() && mwts.empty(); }
};

inline NodeId parse_dep_target(std::string_view s, int line) {
  NodeId id;
  std::size_t dot = s.find('.');
  if (dot == std::string_view::npos) {
    if (!detail::parse_uint(s, id.word)) throw ParseError(line, "malformed dependency head '" + std::string(s) + "'");
  } else {
    if (!detail::parse_uint(s.substr(0, dot), id.word) || !detail::parse_uint(s.substr(dot + 1), id.empty) ||
        id.empty == 0)
      throw ParseError(line, "malformed dependency head '" + std::string(s) + "'");
  }
  return id;
}

inline void parse_deps(std::string_view col, Node& node, int line) {
  if (col == "_") return;
  for (std::string_view item : detail::split(col, '|')) {
    std::size_t colon = item.find(':');
    if (colon == std::string_view::npos || colon == 0)
      throw ParseError(line, "malformed enhanced dependency '" + std::string(item) + "'");
    EnhancedDep dep;
    dep.parent = parse_dep_target(item.substr(0, colon), line);
    dep.rel = std::string(item.substr(colon + 1));
    node.deps.push_back(std::move(dep));
  }
}

}  // namespace conllu_detail

/// Parses a whole CoNLL-U stream into documents split on "# newdoc" comments.
/// Input without any "# newdoc" becomes a single document with a synthetic id.
inline std::vector<Document> parse_conllu(std::istream& in, const std::string& default_doc_id = "doc") {
  using conllu_detail::PendingSentence;

  std::vector<Document> docs;
  PendingSentence pending;
  int line_no = 0;
  int last_word = 0;
  int last_empty = 0;
  int synthetic_count = 0;

  auto flush_sentence = [&]() {
    if (pending.empty()) return;
    if (pending.nodes.empty())
      throw ParseError(pending.first_line, "comment block without any token lines");

    // Resolve heads now that the sentence is complete.
    int nwords = last_word;
    for (std::size_t i = 0; i < pending.nodes.size(); ++i) {
      const Node& n = pending.nodes[i];
      int at = pending.node_lines[i];
      if (n.head > nwords)
        throw ParseError(at, "head '" + std::to_string(n.head) + "' references a nonexistent node");
      for (const EnhancedDep& d : n.deps) {
        if (d.parent.is_root()) continue;
        if (d.parent.word > nwords)
          throw ParseError(at, "enhanced head '" + d.parent.column() + "' references a nonexistent node");
        if (d.parent.is_empty_node()) {
          bool found = false;
          for (const Node& other : pending.nodes)
            if (other.id.word == d.parent.word && other.id.empty == d.parent.empty) found = true;
          if (!found)
            throw ParseError(at, "enhanced head '" + d.parent.column() + "' references a nonexistent node");
        }
      }
    }

    if (pending.has_newdoc || docs.empty()) {
      Document doc;
      if (pending.has_newdoc && !pending.newdoc_id.empty()) {
        doc.doc_id = pending.newdoc_id;
      } else {
        ++synthetic_count;
        doc.doc_id = synthetic_count == 1 ? default_doc_id
                                          : default_doc_id + "_" + std::to_string(synthetic_count);
        doc.synthetic_doc_id = true;
      }
      docs.push_back(std::move(doc));
    }
    Document& doc = docs.back();
    Sentence sent;
    sent.sent_id = pending.sent_id;
    sent.comments = std::move(pending.comments);
    sent.nodes = std::move(pending.nodes);
    sent.mwts = std::move(pending.mwts);
    int sidx = static_cast<int>(doc.sentences.size());
    for (Node& n : sent.nodes) {
      n.id.sentence = sidx;
      for (EnhancedDep& d : n.deps) d.parent.sentence = sidx;
    }
    doc.sentences.push_back(std::move(sent));
    pending = PendingSentence{};
    last_word = 0;
    last_empty = 0;
  };

  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();  // CRLF -> LF

    if (raw.empty()) {
      flush_sentence();
      continue;
    }
    if (pending.empty()) pending.first_line = line_no;

    if (raw[0] == '#') {
      if (!pending.nodes.empty())
        throw ParseError(line_no, "comment line after token lines within a sentence");
      std::string value;
      bool bare = false;
      if (detail::match_comment_key(raw, "newdoc", value, bare)) {
        pending.has_newdoc = true;
        pending.newdoc_id = value;
      } else if (detail::match_comment_key(raw, "sent_id", value, bare) && !bare) {
        pending.sent_id = value;
      }
      pending.comments.push_back(raw);
      continue;
    }

    std::vector<std::string_view> cols = detail::split(raw, '\t');
    if (cols.size() != 10)
      throw ParseError(line_no, "expected 10 tab-separated columns, found " + std::to_string(cols.size()));

    std::string_view id = cols[0];
    std::size_t dash = id.find('-');
    std::size_t dot = id.find('.');

    if (dash != std::string_view::npos) {  // multi-word token range
      MwtRange mwt;
      if (!detail::parse_uint(id.substr(0, dash), mwt.first) ||
          !detail::parse_uint(id.substr(dash + 1), mwt.last) || mwt.first == 0)
        throw ParseError(line_no, "malformed multiword token id '" + std::string(id) + "'");
      if (mwt.last < mwt.first)
        throw ParseError(line_no, "malformed multiword token id '" + std::string(id) + "': empty range");
      if (mwt.first != last_word + 1)
        throw ParseError(line_no, "multiword token id '" + std::string(id) + "' out of position");
      for (int c = 2; c <= 8; ++c)
        if (cols[c] != "_")
          throw ParseError(line_no, "multiword token line may only carry FORM and MISC");
      mwt.form = std::string(cols[1]);
      mwt.misc = std::string(cols[9]);
      pending.mwts.push_back(std::move(mwt));
      continue;
    }

    Node node;
    if (dot != std::string_view::npos) {  // empty node
      if (!detail::parse_uint(id.substr(0, dot), node.id.word) ||
          !detail::parse_uint(id.substr(dot + 1), node.id.empty) || node.id.empty == 0)
        throw ParseError(line_no, "malformed node id '" + std::string(id) + "'");
      if (node.id.word != last_word)
        throw ParseError(line_no, "empty node id '" + std::string(id) + "' out of position");
      if (node.id.empty == last_empty)
        throw ParseError(line_no, "duplicate node id '" + std::string(id) + "'");
      if (node.id.empty != last_empty + 1)
        throw ParseError(line_no, "non-consecutive empty node id '" + std::string(id) + "'");
      last_empty = node.id.empty;
    } else {
      if (!detail::parse_uint(id, node.id.word) || node.id.word == 0)
        throw ParseError(line_no, "malformed node id '" + std::string(id) + "'");
      if (node.id.word == last_word)
        throw ParseError(line_no, "duplicate node id '" + std::string(id) + "'");
      if (node.id.word != last_word + 1)
        throw ParseError(line_no, "non-consecutive node id '" + std::string(id) + "'");
      last_word = node.id.word;
      last_empty = 0;
    }

    node.form = std::string(cols[1]);
    node.lemma = std::string(cols[2]);
    node.upos = std::string(cols[3]);
    node.xpos = std::string(cols[4]);
    node.feats = std::string(cols[5]);

    if (cols[6] == "_") {
      if (!node.id.is_empty_node())
        throw ParseError(line_no, "surface node '" + std::string(id) + "' has no basic head");
      node.head = -1;
    } else {
      if (node.id.is_empty_node())
        throw ParseError(line_no, "empty node '" + std::string(id) + "' must not have a basic head");
      if (!detail::parse_uint(cols[6], node.head))
        throw ParseError(line_no, "malformed head '" + std::string(cols[6]) + "'");
    }
    node.deprel = std::string(cols[7]);
    conllu_detail::parse_deps(cols[8], node, line_no);
    if (cols[9] != "_")
      for (std::string_view entry : detail::split(cols[9], '|')) node.misc.emplace_back(entry);

    pending.node_lines.push_back(line_no);
    pending.nodes.push_back(std::move(node));
  }
  ++line_no;
  flush_sentence();
  return docs;
}

inline std::vector<Document> parse_conllu_text(std::string_view text,
                                               const std::string& default_doc_id = "doc") {
  std::istringstream in{std::string(text)};
  return parse_conllu(in, default_doc_id);
}

inline void write_conllu(const std::vector<Document>& docs, std::ostream& out) {
  for (const Document& doc : docs) {
    for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
      const Sentence& sent = doc.sentences[si];
      if (si == 0 && !doc.synthetic_doc_id) {
        bool has_newdoc = false;
        for (const std::string& c : sent.comments)
          if (std::string_view(c).starts_with("# newdoc") || std::string_view(c).starts_with("#newdoc"))
            has_newdoc = true;
        if (!has_newdoc) out << "# newdoc id = " << doc.doc_id << '\n';
      }
      for (const std::string& c : sent.comments) out << c << '\n';

      std::size_t mwt_at = 0;
      for (const Node& n : sent.nodes) {
        while (mwt_at < sent.mwts.size() && !n.id.is_empty_node() &&
               sent.mwts[mwt_at].first == n.id.word) {
          const MwtRange& m = sent.mwts[mwt_at++];
          out << m.first << '-' << m.last << '\t' << m.form << "\t_\t_\t_\t_\t_\t_\t_\t" << m.misc
              << '\n';
        }
        out << n.id.column() << '\t' << n.form << '\t' << n.lemma << '\t' << n.upos << '\t' << n.xpos
            << '\t' << n.feats << '\t';
        if (n.head < 0)
          out << '_';
        else
          out << n.head;
        out << '\t' << n.deprel << '\t';
        if (n.deps.empty()) {
          out << '_';
        } else {
          for (std::size_t i = 0; i < n.deps.size(); ++i) {
            if (i) out << '|';
            out << n.deps[i].parent.column() << ':' << n.deps[i].rel;
          }
        }
        out << '\t';
        if (n.misc.empty()) {
          out << '_';
        } else {
          for (std::size_t i = 0; i < n.misc.size(); ++i) {
            if (i) out << '|';
            out << n.misc[i];
          }
        }
        out << '\n';
      }
      out << '\n';
    }
  }
}

inline std::string write_conllu_text(const std::vector<Document>& docs) {
  std::ostringstream out;
  write_conllu(docs, out);
  return out.str();
}

/// Structural invariant checks; an empty result means the document is well formed.
inline std::vector<Diagnostic> validate(const Document& doc) {
  std::vector<Diagnostic> out;
  if (doc.doc_id.empty()) out.push_back({"empty doc_id", -1, ""});

  for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
    const Sentence& sent = doc.sentences[si];
    int s = static_cast<int>(si);

    int nwords = 0;
    for (const Node& n : sent.nodes)
      if (!n.id.is_empty_node()) nwords = std::max(nwords, n.id.word);

    for (std::size_t i = 0; i + 1 < sent.nodes.size(); ++i) {
      const NodeId& a = sent.nodes[i].id;
      const NodeId& b = sent.nodes[i + 1].id;
      if (std::pair(a.word, a.empty) >= std::pair(b.word, b.empty)) {
        if (std::pair(a.word, a.empty) == std::pair(b.word, b.empty))
          out.push_back({"duplicate id", s, b.column()});
        else
          out.push_back({"node order violation", s, b.column()});
      }
    }

    for (const Node& n : sent.nodes) {
      if (n.id.is_empty_node()) {
        if (n.head >= 0) out.push_back({"empty node with basic head", s, n.id.column()});
      } else {
        if (n.head < 0) out.push_back({"surface node without basic head", s, n.id.column()});
        if (n.head > nwords) out.push_back({"head references a nonexistent node", s, n.id.column()});
      }
      for (const EnhancedDep& d : n.deps) {
        if (d.parent.is_root()) continue;
        if (!sent.find(NodeId{s, d.parent.word, d.parent.empty}))
          out.push_back({"enhanced head references a nonexistent node", s, n.id.column()});
      }
    }

    // Basic-tree cycles over surface nodes. 0 = white, 1 = on path, 2 = done.
    std::unordered_map<int, int> color;
    for (const Node& n : sent.nodes) {
      if (n.id.is_empty_node() || n.head < 0 || n.head > nwords) continue;
      if (color[n.id.word]) continue;
      std::vector<int> path;
      int cur = n.id.word;
      while (cur != 0 && color[cur] == 0) {
        color[cur] = 1;
        path.push_back(cur);
        const Node* p = sent.find(NodeId{s, cur, 0});
        if (!p || p->head < 0 || p->head > nwords) break;
        cur = p->head;
      }
      if (cur != 0 && color[cur] == 1)
        out.push_back({"cycle in basic dependencies", s, std::to_string(cur)});
      for (int w : path) color[w] = 2;
    }

    for (std::size_t i = 0; i < sent.mwts.size(); ++i) {
      const MwtRange& m = sent.mwts[i];
      if (m.first > m.last || m.first < 1 || m.last > nwords)
        out.push_back({"multiword token range out of bounds", s, std::to_string(m.first)});
      if (i > 0 && m.first <= sent.mwts[i - 1].last)
        out.push_back({"overlapping multiword token ranges", s, std::to_string(m.first)});
    }
  }
  return out;
}

/// Mirrors the shared-task input preprocessing that removes empty node forms.
inline void strip_empty_node_forms(Document& doc) {
  for (Sentence& sent : doc.sentences)
    for (Node& n : sent.nodes)
      if (n.id.is_empty_node()) {
        n.form = "_";
        n.lemma = "_";
      }
}

}  // namespace coreval
