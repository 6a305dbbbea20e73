#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "atn/error.hpp"
#include "atn/rng.hpp"
#include "atn/tensor.hpp"

namespace atn {

// Class index order is fixed; it determines confusion-matrix layout and the
// classifier output order everywhere.
enum class Polarity : int { negative = 0, neutral = 1, positive = 2 };
enum class DocLabel : int { negative = 0, positive = 1 };

inline const char* polarity_name(Polarity p) {
  switch (p) {
    case Polarity::negative: return "negative";
    case Polarity::neutral: return "neutral";
    case Polarity::positive: return "positive";
  }
  return "?";
}

inline const char* doc_label_name(DocLabel l) {
  return l == DocLabel::positive ? "positive" : "negative";
}

struct AspectSample {
  std::vector<std::string> tokens;
  std::size_t target_lo = 0;  // 1-based, inclusive
  std::size_t target_hi = 0;
  Polarity label = Polarity::neutral;
};

struct DocSample {
  std::vector<std::string> tokens;
  DocLabel label = DocLabel::negative;
};

enum class AttentionKind { alpha, beta, delta, gamma };

inline const char* kind_name(AttentionKind k) {
  switch (k) {
    case AttentionKind::alpha: return "alpha";
    case AttentionKind::beta: return "beta";
    case AttentionKind::delta: return "delta";
    case AttentionKind::gamma: return "gamma";
  }
  return "?";
}

// Per-token weight vector attached to a sample.
struct AttentionRecord {
  AttentionKind kind = AttentionKind::alpha;
  Tensor weights;
};

inline bool is_distribution(const Tensor& w, double tol = 1e-6) {
  double sum = 0.0;
  for (double x : w.v) {
    if (!(x >= 0.0)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

// ---- tokenizer ------------------------------------------------------------

struct TokenSpan {
  std::string text;
  std::size_t begin = 0;  // [begin, end) byte range in the source string
  std::size_t end = 0;
};

namespace detail {

inline bool tok_space(unsigned char c) { return c < 128 && std::isspace(c); }
inline bool tok_punct(unsigned char c) { return c < 128 && std::ispunct(c); }
inline char tok_lower(unsigned char c) {
  return c < 128 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c);
}

}  // namespace detail

// Lowercases ASCII, splits every ASCII punctuation character into its own
// token, and otherwise splits on whitespace. Bytes >= 128 pass through.
inline std::vector<TokenSpan> tokenize_spans(const std::string& text) {
  std::vector<TokenSpan> out;
  TokenSpan cur;
  bool open = false;
  auto flush = [&](std::size_t end) {
    if (open) {
      cur.end = end;
      out.push_back(cur);
      cur.text.clear();
      open = false;
    }
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (detail::tok_space(c)) {
      flush(i);
    } else if (detail::tok_punct(c)) {
      flush(i);
      out.push_back(TokenSpan{std::string(1, static_cast<char>(c)), i, i + 1});
    } else {
      if (!open) {
        cur.begin = i;
        open = true;
      }
      cur.text.push_back(detail::tok_lower(c));
    }
  }
  flush(text.size());
  return out;
}

inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  for (TokenSpan& s : tokenize_spans(text)) out.push_back(std::move(s.text));
  return out;
}

// Smallest contiguous token span whose surface covers [char_from, char_to).
// Returns 1-based inclusive token indices.
inline std::pair<std::size_t, std::size_t> align_char_span(
    const std::vector<std::string>& tokens, std::size_t char_from,
    std::size_t char_to, const std::string& original_text) {
  if (char_from >= char_to || char_to > original_text.size())
    throw ArgumentError("align_char_span: offsets out of bounds");
  std::vector<TokenSpan> spans = tokenize_spans(original_text);
  if (spans.size() != tokens.size())
    throw ArgumentError("align_char_span: tokens do not match text");
  for (std::size_t i = 0; i < spans.size(); ++i)
    if (spans[i].text != tokens[i])
      throw ArgumentError("align_char_span: tokens do not match text");
  std::size_t lo = 0, hi = 0;
  bool found = false;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    bool hit = spans[i].begin < char_to && spans[i].end > char_from;
    if (hit) {
      if (!found) lo = i;
      hi = i;
      found = true;
    }
  }
  if (!found) throw AlignmentError("character span covers no token");
  return {lo + 1, hi + 1};
}

// ---- minimal XML reader ---------------------------------------------------

struct XmlElem {
  std::string name;
  std::map<std::string, std::string> attrs;
  std::vector<XmlElem> children;
  std::string text;  // concatenated character data, entity-decoded
  std::size_t line = 0;

  const XmlElem* child(const std::string& n) const {
    for (const XmlElem& c : children)
      if (c.name == n) return &c;
    return nullptr;
  }
  const std::string& attr(const std::string& n) const {
    auto it = attrs.find(n);
    if (it == attrs.end())
      throw ParseError("missing attribute '" + n + "' on <" + name + ">", line);
    return it->second;
  }
};

namespace detail {

struct XmlCursor {
  const std::string& s;
  std::size_t i = 0;
  std::size_t line = 1;

  bool eof() const { return i >= s.size(); }
  char peek() const { return s[i]; }
  char take() {
    char c = s[i++];
    if (c == '\n') ++line;
    return c;
  }
  bool starts(const char* lit) const {
    return s.compare(i, std::string::traits_type::length(lit), lit) == 0;
  }
  void skip(std::size_t n) {
    for (std::size_t k = 0; k < n && !eof(); ++k) take();
  }
  void skip_ws() {
    while (!eof() && tok_space(static_cast<unsigned char>(peek()))) take();
  }
};

inline bool xml_name_char(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || c == '-' || c == ':' || c == '.';
}

inline std::string xml_name(XmlCursor& c) {
  std::string out;
  while (!c.eof() && xml_name_char(c.peek())) out.push_back(c.take());
  if (out.empty()) throw ParseError("expected a tag or attribute name", c.line);
  return out;
}

inline void xml_decode_entity(XmlCursor& c, std::string& out) {
  std::size_t at = c.line;
  std::string name;
  c.take();  // '&'
  while (!c.eof() && c.peek() != ';' && name.size() < 12) name.push_back(c.take());
  if (c.eof() || c.peek() != ';') throw ParseError("unterminated entity", at);
  c.take();
  if (name == "amp") out.push_back('&');
  else if (name == "lt") out.push_back('<');
  else if (name == "gt") out.push_back('>');
  else if (name == "quot") out.push_back('"');
  else if (name == "apos") out.push_back('\'');
  else if (name.size() > 1 && name[0] == '#') {
    int base = (name[1] == 'x' || name[1] == 'X') ? 16 : 10;
    try {
      long code = std::stol(name.substr(base == 16 ? 2 : 1), nullptr, base);
      if (code < 1 || code > 0x10ffff) throw ParseError("bad character reference", at);
      // encode as UTF-8
      char32_t cp = static_cast<char32_t>(code);
      if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
      } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
      } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
      } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
      }
    } catch (const std::logic_error&) {
      throw ParseError("bad character reference", at);
    }
  } else {
    throw ParseError("unknown entity '&" + name + ";'", at);
  }
}

inline std::string xml_attr_value(XmlCursor& c) {
  if (c.eof() || (c.peek() != '"' && c.peek() != '\''))
    throw ParseError("expected a quoted attribute value", c.line);
  char quote = c.take();
  std::string out;
  while (!c.eof() && c.peek() != quote) {
    if (c.peek() == '&') xml_decode_entity(c, out);
    else out.push_back(c.take());
  }
  if (c.eof()) throw ParseError("unterminated attribute value", c.line);
  c.take();
  return out;
}

inline void xml_skip_misc(XmlCursor& c) {
  for (;;) {
    c.skip_ws();
    if (c.starts("<?")) {
      while (!c.eof() && !c.starts("?>")) c.take();
      if (c.eof()) throw ParseError("unterminated processing instruction", c.line);
      c.skip(2);
    } else if (c.starts("<!--")) {
      std::size_t at = c.line;
      c.skip(4);
      while (!c.eof() && !c.starts("-->")) c.take();
      if (c.eof()) throw ParseError("unterminated comment", at);
      c.skip(3);
    } else if (c.starts("<!")) {
      while (!c.eof() && c.peek() != '>') c.take();
      if (c.eof()) throw ParseError("unterminated declaration", c.line);
      c.take();
    } else {
      return;
    }
  }
}

inline XmlElem xml_element(XmlCursor& c) {
  if (c.eof() || c.peek() != '<') throw ParseError("expected '<'", c.line);
  XmlElem e;
  e.line = c.line;
  c.take();
  e.name = xml_name(c);
  for (;;) {
    c.skip_ws();
    if (c.eof()) throw ParseError("unterminated tag <" + e.name + ">", e.line);
    if (c.starts("/>")) {
      c.skip(2);
      return e;
    }
    if (c.peek() == '>') {
      c.take();
      break;
    }
    std::string key = xml_name(c);
    c.skip_ws();
    if (c.eof() || c.peek() != '=')
      throw ParseError("expected '=' after attribute '" + key + "'", c.line);
    c.take();
    c.skip_ws();
    e.attrs[key] = xml_attr_value(c);
  }
  // content until the matching close tag
  for (;;) {
    if (c.eof()) throw ParseError("missing </" + e.name + ">", e.line);
    if (c.starts("</")) {
      std::size_t at = c.line;
      c.skip(2);
      std::string close = xml_name(c);
      c.skip_ws();
      if (c.eof() || c.peek() != '>') throw ParseError("malformed close tag", at);
      c.take();
      if (close != e.name)
        throw ParseError("mismatched </" + close + ">, expected </" + e.name + ">", at);
      return e;
    }
    if (c.starts("<!--")) {
      std::size_t at = c.line;
      c.skip(4);
      while (!c.eof() && !c.starts("-->")) c.take();
      if (c.eof()) throw ParseError("unterminated comment", at);
      c.skip(3);
    } else if (c.peek() == '<') {
      e.children.push_back(xml_element(c));
    } else if (c.peek() == '&') {
      xml_decode_entity(c, e.text);
    } else {
      e.text.push_back(c.take());
    }
  }
}

}  // namespace detail

inline XmlElem parse_xml(const std::string& bytes) {
  detail::XmlCursor c{bytes};
  detail::xml_skip_misc(c);
  if (c.eof()) throw ParseError("empty document", c.line);
  XmlElem root = detail::xml_element(c);
  detail::xml_skip_misc(c);
  if (!c.eof()) throw ParseError("trailing content after root element", c.line);
  return root;
}

// ---- SemEval aspect corpus ------------------------------------------------

struct ParseDiagnostics {
  std::size_t sentences = 0;
  std::size_t conflict_dropped = 0;
  std::size_t alignment_skipped = 0;
};

struct AspectCorpus {
  std::vector<AspectSample> samples;
  ParseDiagnostics diag;
};

inline AspectCorpus parse_aspect_xml(const std::string& bytes) {
  XmlElem root = parse_xml(bytes);
  if (root.name != "sentences")
    throw ParseError("expected root element <sentences>, got <" + root.name + ">",
                     root.line);
  AspectCorpus out;
  for (const XmlElem& sent : root.children) {
    if (sent.name != "sentence") continue;
    const XmlElem* text_el = sent.child("text");
    if (!text_el)
      throw ParseError("<sentence> without <text>", sent.line);
    ++out.diag.sentences;
    const XmlElem* terms = sent.child("aspectTerms");
    if (!terms) continue;
    std::vector<std::string> tokens = tokenize(text_el->text);
    for (const XmlElem& term : terms->children) {
      if (term.name != "aspectTerm") continue;
      const std::string& pol = term.attr("polarity");
      if (pol == "conflict") {
        ++out.diag.conflict_dropped;
        continue;
      }
      Polarity label;
      if (pol == "positive") label = Polarity::positive;
      else if (pol == "negative") label = Polarity::negative;
      else if (pol == "neutral") label = Polarity::neutral;
      else throw ParseError("unknown polarity '" + pol + "'", term.line);
      std::size_t from, to;
      try {
        from = static_cast<std::size_t>(std::stoull(term.attr("from")));
        to = static_cast<std::size_t>(std::stoull(term.attr("to")));
      } catch (const std::logic_error&) {
        throw ParseError("non-numeric from/to offset", term.line);
      }
      try {
        auto [lo, hi] = align_char_span(tokens, from, to, text_el->text);
        out.samples.push_back(AspectSample{tokens, lo, hi, label});
      } catch (const AlignmentError&) {
        ++out.diag.alignment_skipped;
      } catch (const ArgumentError&) {
        ++out.diag.alignment_skipped;
      }
    }
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << body;
}

inline AspectCorpus load_aspect_xml(const std::string& path) {
  return parse_aspect_xml(read_file(path));
}

// ---- document corpus ------------------------------------------------------

enum class DocLabelScheme {
  leading_label,  // first whitespace field of each line is the label
  file_positive,  // whole file is one polarity
  file_negative,
};

inline constexpr std::size_t kDocMaxLen = 500;

inline std::vector<DocSample> load_doc_corpus(std::istream& in,
                                              DocLabelScheme scheme,
                                              std::size_t max_len = kDocMaxLen) {
  std::vector<DocSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string body;
    DocLabel label;
    if (scheme == DocLabelScheme::leading_label) {
      std::size_t ws = 0;
      while (ws < line.size() &&
             !detail::tok_space(static_cast<unsigned char>(line[ws])))
        ++ws;
      std::string raw = line.substr(0, ws);
      if (raw.empty()) continue;  // blank line
      if (raw == "positive" || raw == "pos" || raw == "1" || raw == "+")
        label = DocLabel::positive;
      else if (raw == "negative" || raw == "neg" || raw == "0" || raw == "-")
        label = DocLabel::negative;
      else
        throw ParseError("unknown label token '" + raw + "'", lineno);
      body = line.substr(ws);
    } else {
      label = scheme == DocLabelScheme::file_positive ? DocLabel::positive
                                                      : DocLabel::negative;
      body = line;
    }
    std::vector<std::string> tokens = tokenize(body);
    if (tokens.empty()) continue;  // a document must have at least one token
    if (tokens.size() > max_len) tokens.resize(max_len);
    out.push_back(DocSample{std::move(tokens), label});
  }
  return out;
}

inline std::vector<DocSample> load_doc_corpus_file(const std::string& path,
                                                   DocLabelScheme scheme,
                                                   std::size_t max_len = kDocMaxLen) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return load_doc_corpus(in, scheme, max_len);
}

// ---- vocabulary -----------------------------------------------------------

struct Vocabulary {
  static constexpr int pad_id = 0;
  static constexpr int unk_id = 1;

  std::vector<std::string> id_to_token;  // dense, starts with <pad>, <unk>
  std::unordered_map<std::string, int> token_to_id;

  std::size_t size() const { return id_to_token.size(); }

  int id(const std::string& tok) const {
    auto it = token_to_id.find(tok);
    return it == token_to_id.end() ? unk_id : it->second;
  }

  std::vector<int> ids(const std::vector<std::string>& tokens) const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const std::string& t : tokens) out.push_back(id(t));
    return out;
  }
};

// A token enters the vocabulary when its frequency reaches the threshold in
// either corpus. Ids are assigned by combined frequency descending, ties
// lexicographic, after the reserved <pad> and <unk> entries.
inline Vocabulary build_vocab(const std::vector<AspectSample>& aspect_samples,
                              const std::vector<DocSample>& doc_samples,
                              std::size_t min_count_asc = 1,
                              std::size_t min_count_doc = 2) {
  if (min_count_asc < 1 || min_count_doc < 1)
    throw ArgumentError("build_vocab: min_count must be >= 1");
  std::map<std::string, std::pair<std::size_t, std::size_t>> freq;  // asc, doc
  for (const AspectSample& s : aspect_samples)
    for (const std::string& t : s.tokens) ++freq[t].first;
  for (const DocSample& s : doc_samples)
    for (const std::string& t : s.tokens) ++freq[t].second;

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, f] : freq)
    if (f.first >= min_count_asc || f.second >= min_count_doc)
      kept.emplace_back(tok, f.first + f.second);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  v.id_to_token = {"<pad>", "<unk>"};
  for (auto& [tok, f] : kept) v.id_to_token.push_back(tok);
  for (std::size_t i = 0; i < v.id_to_token.size(); ++i)
    v.token_to_id[v.id_to_token[i]] = static_cast<int>(i);
  return v;
}

// ---- word vectors ---------------------------------------------------------

struct EmbeddingMatrix {
  Tensor values;  // |V| x d_e
  bool frozen = true;
};

// Rows for in-vocabulary tokens come from the file; everything else (including
// <pad> and <unk>) is drawn from U(-0.1, 0.1). The whole matrix is frozen.
inline EmbeddingMatrix load_word_vectors(std::istream& in, const Vocabulary& vocab,
                                         std::size_t dim, Rng& rng) {
  EmbeddingMatrix m;
  m.values = Tensor({vocab.size(), dim});
  for (double& x : m.values.v) x = rng.uniform(-0.1, 0.1);
  m.frozen = true;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t ws = line.find(' ');
    if (ws == std::string::npos)
      throw ParseError("word vector line has no values", lineno);
    std::string word = line.substr(0, ws);
    // count fields cheaply before deciding whether to parse them
    std::size_t fields = 0;
    for (std::size_t i = ws; i < line.size();) {
      while (i < line.size() && line[i] == ' ') ++i;
      if (i >= line.size()) break;
      ++fields;
      while (i < line.size() && line[i] != ' ') ++i;
    }
    if (fields != dim)
      throw ParseError("word vector dimension " + std::to_string(fields) +
                           " != " + std::to_string(dim),
                       lineno);
    auto it = vocab.token_to_id.find(word);
    if (it == vocab.token_to_id.end()) continue;
    const char* p = line.c_str() + ws;
    char* end = nullptr;
    for (std::size_t d = 0; d < dim; ++d) {
      double val = std::strtod(p, &end);
      if (end == p) throw ParseError("bad number in word vector", lineno);
      m.values(static_cast<std::size_t>(it->second), d) = val;
      p = end;
    }
  }
  return m;
}

inline EmbeddingMatrix load_word_vectors_file(const std::string& path,
                                              const Vocabulary& vocab,
                                              std::size_t dim, Rng& rng) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return load_word_vectors(in, vocab, dim, rng);
}

// ---- relative distance ----------------------------------------------------

// l_i = lo - i left of the span, 0 inside it, i - hi to the right. Indices
// are 1-based.
inline std::vector<int> relative_distances(std::size_t n, std::size_t target_lo,
                                           std::size_t target_hi) {
  if (target_lo < 1 || target_lo > target_hi || target_hi > n)
    throw ArgumentError("relative_distances: span out of bounds");
  std::vector<int> out(n);
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < target_lo) out[i - 1] = static_cast<int>(target_lo - i);
    else if (i <= target_hi) out[i - 1] = 0;
    else out[i - 1] = static_cast<int>(i - target_hi);
  }
  return out;
}

// ---- stratified subsampling -----------------------------------------------

// Keeps round(fraction * n_c) samples of each class c, chosen by shuffling
// each class's index list; output preserves the original relative order.
inline std::vector<DocSample> subsample_docs(const std::vector<DocSample>& samples,
                                             double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw ArgumentError("subsample_docs: fraction out of [0,1]");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i)
    by_class[static_cast<int>(samples[i].label)].push_back(i);

  Rng rng(seed);
  std::vector<std::size_t> chosen;
  for (auto& [label, idx] : by_class) {
    std::size_t k = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(idx.size())));
    rng.shuffle(idx);
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + k);
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<DocSample> out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(samples[i]);
  return out;
}

}  // namespace atn
