#include <catch2/catch_amalgamated.hpp>

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "atn/corpus.hpp"
#include "testutil.hpp"

using namespace atn;

TEST_CASE("tokenize basics") {
  auto toks = tokenize("The tastes are great , but the service is dreadful");
  REQUIRE(toks.size() == 10);
  REQUIRE(toks.front() == "the");
  REQUIRE(toks[4] == ",");
  REQUIRE(toks.back() == "dreadful");

  REQUIRE(tokenize("").empty());
  REQUIRE(tokenize("   \t\n ").empty());

  auto r = tokenize("reliable.");
  REQUIRE(r == std::vector<std::string>{"reliable", "."});

  REQUIRE(tokenize("The TASTES") == std::vector<std::string>{"the", "tastes"});
  REQUIRE(tokenize("wi-fi") == std::vector<std::string>{"wi", "-", "fi"});
  REQUIRE(tokenize("don't") == std::vector<std::string>{"don", "'", "t"});
}

TEST_CASE("tokenizer split set matches the rule table fixture") {
  std::ifstream in("fixtures/tokenizer_rules.txt");
  REQUIRE(in.good());
  std::set<char> fixture;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    REQUIRE(line.size() == 1);
    fixture.insert(line[0]);
  }
  // Every listed character becomes its own token, even glued to words.
  for (char c : fixture) {
    std::string s = "ab";
    s += c;
    s += "cd";
    auto toks = tokenize(s);
    REQUIRE(toks == std::vector<std::string>{"ab", std::string(1, c), "cd"});
  }
  // And the table is exactly the ASCII punctuation set the tokenizer uses.
  std::set<char> expected;
  for (int c = 0; c < 128; ++c)
    if (std::ispunct(c)) expected.insert(static_cast<char>(c));
  REQUIRE(fixture == expected);
}

TEST_CASE("tokenize_spans offsets reconstruct the tokens") {
  std::string text = "Great Pizza, BAD service!! (really)";
  auto spans = tokenize_spans(text);
  for (const TokenSpan& s : spans) {
    REQUIRE(s.end > s.begin);
    std::string surface = text.substr(s.begin, s.end - s.begin);
    for (char& c : surface) c = static_cast<char>(std::tolower((unsigned char)c));
    REQUIRE(surface == s.text);
  }
  for (std::size_t i = 1; i < spans.size(); ++i)
    REQUIRE(spans[i].begin >= spans[i - 1].end);
}

TEST_CASE("align_char_span single and multiword targets") {
  std::string text = "the service is dreadful";
  auto tokens = tokenize(text);
  auto [lo, hi] = align_char_span(tokens, 4, 11, text);
  REQUIRE(lo == 2);
  REQUIRE(hi == 2);

  std::string text2 = "great for content creation tasks";
  auto tokens2 = tokenize(text2);
  std::size_t from = text2.find("content");
  auto [lo2, hi2] = align_char_span(tokens2, from, from + 16, text2);
  REQUIRE(hi2 - lo2 + 1 == 2);
  REQUIRE(tokens2[lo2 - 1] == "content");
  REQUIRE(tokens2[hi2 - 1] == "creation");

  REQUIRE_THROWS_AS(align_char_span(tokens, 3, 4, text), AlignmentError);
  REQUIRE_THROWS_AS(align_char_span(tokens, 4, 4, text), ArgumentError);
  REQUIRE_THROWS_AS(align_char_span(tokens, 0, 1000, text), ArgumentError);
}

namespace {

// Independent oracle: the narrowest contiguous token range such that every
// non-space character of [from, to) falls inside one of its tokens.
std::pair<std::size_t, std::size_t> brute_force_span(const std::string& text,
                                                     std::size_t from,
                                                     std::size_t to) {
  auto spans = tokenize_spans(text);
  std::vector<int> owner(text.size(), -1);
  for (std::size_t t = 0; t < spans.size(); ++t)
    for (std::size_t p = spans[t].begin; p < spans[t].end; ++p)
      owner[p] = static_cast<int>(t);
  auto covered = [&](std::size_t i, std::size_t j) {
    for (std::size_t p = from; p < to; ++p) {
      if (owner[p] < 0) continue;
      if (static_cast<std::size_t>(owner[p]) < i ||
          static_cast<std::size_t>(owner[p]) > j)
        return false;
    }
    return true;
  };
  bool any_owned = false;
  for (std::size_t p = from; p < to; ++p) any_owned |= owner[p] >= 0;
  if (!any_owned) return {0, 0};  // no token touched
  std::size_t best_i = 0, best_j = spans.size();
  for (std::size_t width = 0; width < spans.size(); ++width)
    for (std::size_t i = 0; i + width < spans.size(); ++i) {
      std::size_t j = i + width;
      bool touches = false;
      for (std::size_t t = i; t <= j; ++t)
        touches |= spans[t].begin < to && spans[t].end > from;
      if (touches && covered(i, j)) {
        if (best_j == spans.size()) {
          best_i = i;
          best_j = j;
        }
      }
    }
  return {best_i + 1, best_j + 1};
}

}  // namespace

TEST_CASE("align_char_span agrees with the brute-force oracle") {
  std::vector<std::string> texts = {
      "the fajitas were tasty , the salsa was not",
      "ask for Usha , the nicest bartender in manhattan",
      "I liked the wine-list and the cheap (really cheap) desserts!",
      "a b c d e f",
  };
  Rng rng(101);
  std::size_t checked = 0;
  for (const std::string& text : texts) {
    auto tokens = tokenize(text);
    for (int trial = 0; trial < 200; ++trial) {
      std::size_t from = rng.below(text.size());
      std::size_t to = from + 1 + rng.below(text.size() - from);
      auto expect = brute_force_span(text, from, to);
      if (expect.first == 0) {
        REQUIRE_THROWS_AS(align_char_span(tokens, from, to, text), AlignmentError);
      } else {
        auto got = align_char_span(tokens, from, to, text);
        REQUIRE(got.first == expect.first);
        REQUIRE(got.second == expect.second);
        ++checked;
      }
    }
  }
  REQUIRE(checked > 300);
}

namespace {

const char* kSmallXml = R"(<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<sentences>
    <sentence id="1">
        <text>The tastes are great, but the service is dreadful.</text>
        <aspectTerms>
            <aspectTerm term="tastes" polarity="positive" from="4" to="10"/>
            <aspectTerm term="service" polarity="negative" from="30" to="37"/>
        </aspectTerms>
    </sentence>
    <sentence id="2">
        <text>Try the &quot;fish &amp; chips&quot; platter.</text>
        <aspectTerms>
            <aspectTerm term="fish &amp; chips" polarity="neutral" from="9" to="21"/>
        </aspectTerms>
    </sentence>
    <sentence id="3">
        <text>No opinions here.</text>
    </sentence>
</sentences>
)";

}  // namespace

TEST_CASE("parse_aspect_xml on a small document") {
  AspectCorpus c = parse_aspect_xml(kSmallXml);
  REQUIRE(c.diag.sentences == 3);
  REQUIRE(c.samples.size() == 3);

  const AspectSample& s0 = c.samples[0];
  REQUIRE(s0.label == Polarity::positive);
  REQUIRE(s0.tokens[s0.target_lo - 1] == "tastes");
  REQUIRE(s0.target_lo == s0.target_hi);

  const AspectSample& s1 = c.samples[1];
  REQUIRE(s1.label == Polarity::negative);
  REQUIRE(s1.tokens[s1.target_lo - 1] == "service");

  // entity decoding: the term spans "fish & chips" -> three tokens
  const AspectSample& s2 = c.samples[2];
  REQUIRE(s2.label == Polarity::neutral);
  REQUIRE(s2.target_hi - s2.target_lo + 1 == 3);
  REQUIRE(s2.tokens[s2.target_lo - 1] == "fish");
  REQUIRE(s2.tokens[s2.target_hi - 1] == "chips");
}

TEST_CASE("parse_aspect_xml drops conflict polarity") {
  const char* xml = R"(<sentences>
  <sentence id="9">
    <text>Food was great but pricey.</text>
    <aspectTerms>
      <aspectTerm term="Food" polarity="conflict" from="0" to="4"/>
    </aspectTerms>
  </sentence>
</sentences>)";
  AspectCorpus c = parse_aspect_xml(xml);
  REQUIRE(c.samples.empty());
  REQUIRE(c.diag.conflict_dropped == 1);
}

TEST_CASE("parse_aspect_xml reports malformed input with a line number") {
  const char* bad = "<sentences>\n  <sentence id=\"1\">\n    <text>hi</wrong>\n";
  try {
    parse_aspect_xml(bad);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE(e.line() == 3);
    REQUIRE(std::string(e.what()).find("line 3") != std::string::npos);
  }

  REQUIRE_THROWS_AS(parse_aspect_xml("<wrongroot/>"), ParseError);
  REQUIRE_THROWS_AS(parse_aspect_xml("<sentences><sentence><text>a&bogus;b</text></sentence></sentences>"), ParseError);
  REQUIRE_THROWS_AS(parse_aspect_xml(""), ParseError);
}

TEST_CASE("parse_aspect_xml skips unalignable offsets and counts them") {
  const char* xml = R"(<sentences>
  <sentence id="1">
    <text>a   b</text>
    <aspectTerms>
      <aspectTerm term=" " polarity="positive" from="2" to="3"/>
      <aspectTerm term="b" polarity="negative" from="4" to="5"/>
    </aspectTerms>
  </sentence>
</sentences>)";
  AspectCorpus c = parse_aspect_xml(xml);
  REQUIRE(c.samples.size() == 1);
  REQUIRE(c.samples[0].tokens[c.samples[0].target_lo - 1] == "b");
  REQUIRE(c.diag.alignment_skipped == 1);
}

TEST_CASE("load_doc_corpus leading labels") {
  std::istringstream in(
      "positive the food was amazing and the staff friendly\n"
      "negative awful experience , will not come back\n");
  auto docs = load_doc_corpus(in, DocLabelScheme::leading_label);
  REQUIRE(docs.size() == 2);
  REQUIRE(docs[0].label == DocLabel::positive);
  REQUIRE(docs[0].tokens.front() == "the");
  REQUIRE(docs[1].label == DocLabel::negative);
  REQUIRE(docs[1].tokens.front() == "awful");
}

TEST_CASE("load_doc_corpus unknown label names the line") {
  std::istringstream in("positive fine\nmeh not a label\n");
  try {
    load_doc_corpus(in, DocLabelScheme::leading_label);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE(e.line() == 2);
    REQUIRE(std::string(e.what()).find("meh") != std::string::npos);
  }
}

TEST_CASE("load_doc_corpus per-file polarity and truncation") {
  std::ostringstream long_line;
  for (int i = 0; i < 600; ++i) long_line << "w" << i << ' ';
  std::istringstream in(long_line.str() + "\n");
  auto docs = load_doc_corpus(in, DocLabelScheme::file_positive);
  REQUIRE(docs.size() == 1);
  REQUIRE(docs[0].label == DocLabel::positive);
  REQUIRE(docs[0].tokens.size() == 500);
  REQUIRE(docs[0].tokens.front() == "w0");
  REQUIRE(docs[0].tokens.back() == "w499");

  std::istringstream in2("bad movie\n\nanother bad one\n");
  auto neg = load_doc_corpus(in2, DocLabelScheme::file_negative, 3);
  REQUIRE(neg.size() == 2);
  REQUIRE(neg[1].tokens.size() == 3);
  REQUIRE(neg[0].label == DocLabel::negative);
}

TEST_CASE("build_vocab reserved entries and min_count") {
  AspectSample a{{"good"}, 1, 1, Polarity::positive};
  DocSample d{{"good"}, DocLabel::positive};
  Vocabulary v = build_vocab({a}, {d});
  REQUIRE(v.size() == 3);
  REQUIRE(v.id_to_token[0] == "<pad>");
  REQUIRE(v.id_to_token[1] == "<unk>");
  REQUIRE(v.id("good") == 2);
  REQUIRE(v.id("absent") == Vocabulary::unk_id);

  // a token appearing once in either corpus with min_count=2 maps to <unk>
  Vocabulary v2 = build_vocab({a}, {d}, 2, 2);
  REQUIRE(v2.size() == 2);
  REQUIRE(v2.id("good") == Vocabulary::unk_id);

  // doc-side threshold applies independently of the aspect side
  DocSample d2{{"solo"}, DocLabel::negative};
  Vocabulary v3 = build_vocab({}, {d, d2}, 1, 2);
  REQUIRE(v3.id("solo") == Vocabulary::unk_id);
  REQUIRE(v3.id("good") == Vocabulary::unk_id);
  Vocabulary v4 = build_vocab({}, {d, d, d2}, 1, 2);
  REQUIRE(v4.id("good") == 2);
}

TEST_CASE("build_vocab id order matches an independent frequency tally") {
  Rng rng(7);
  std::vector<std::string> alphabet = {"pasta", "cold", "menu",  "wine",
                                       "slow",  "warm", "crust", "tip"};
  std::vector<AspectSample> aspect;
  std::vector<DocSample> docs;
  for (int i = 0; i < 40; ++i) {
    std::vector<std::string> toks;
    for (int k = 0; k < 6; ++k) toks.push_back(alphabet[rng.below(alphabet.size())]);
    if (i % 2)
      aspect.push_back({toks, 1, 1, Polarity::neutral});
    else
      docs.push_back({toks, DocLabel::positive});
  }
  Vocabulary v = build_vocab(aspect, docs, 1, 1);

  std::map<std::string, std::size_t> tally;
  for (const auto& s : aspect)
    for (const auto& t : s.tokens) ++tally[t];
  for (const auto& s : docs)
    for (const auto& t : s.tokens) ++tally[t];
  std::vector<std::pair<std::string, std::size_t>> order(tally.begin(), tally.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  REQUIRE(v.size() == order.size() + 2);
  for (std::size_t i = 0; i < order.size(); ++i) {
    // same frequency rank; ties must be lexicographic
    REQUIRE(tally[v.id_to_token[i + 2]] == order[i].second);
    if (i + 1 < order.size() && order[i].second == order[i + 1].second)
      REQUIRE(v.id_to_token[i + 2] < v.id_to_token[i + 3]);
  }
  // determinism
  Vocabulary again = build_vocab(aspect, docs, 1, 1);
  REQUIRE(again.id_to_token == v.id_to_token);
}

TEST_CASE("load_word_vectors copies file rows and fills the rest uniformly") {
  Vocabulary v = build_vocab({AspectSample{{"good", "bad", "new"}, 1, 1,
                                           Polarity::positive}},
                             {});
  std::string file =
      "good 0.25 -1.5 3.0\n"
      "irrelevant 9 9 9\n"
      "bad 0.125 0.5 -0.75\n";
  std::istringstream in(file);
  Rng rng(3);
  EmbeddingMatrix m = load_word_vectors(in, v, 3, rng);
  REQUIRE(m.frozen);
  REQUIRE(m.values.rows() == v.size());
  REQUIRE(m.values.cols() == 3);

  std::size_t good = v.id("good"), bad = v.id("bad"), nw = v.id("new");
  REQUIRE(m.values(good, 0) == 0.25);
  REQUIRE(m.values(good, 1) == -1.5);
  REQUIRE(m.values(good, 2) == 3.0);
  REQUIRE(m.values(bad, 0) == 0.125);
  for (std::size_t c = 0; c < 3; ++c) {
    REQUIRE(m.values(nw, c) > -0.1);
    REQUIRE(m.values(nw, c) < 0.1);
  }

  // second-pass oracle: re-scan the same text and compare matched rows
  std::istringstream again(file);
  std::string line;
  while (std::getline(again, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    auto it = v.token_to_id.find(word);
    if (it == v.token_to_id.end()) continue;
    for (std::size_t c = 0; c < 3; ++c) {
      double x;
      ls >> x;
      REQUIRE(m.values(static_cast<std::size_t>(it->second), c) == x);
    }
  }
}

TEST_CASE("load_word_vectors rejects dimension mismatches") {
  Vocabulary v = build_vocab({AspectSample{{"good"}, 1, 1, Polarity::positive}}, {});
  std::istringstream in("good 1.0 2.0\n");
  Rng rng(1);
  try {
    load_word_vectors(in, v, 3, rng);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE(e.line() == 1);
  }
  // mismatch detection applies to out-of-vocabulary lines too
  std::istringstream in2("elsewhere 1.0\n");
  Rng rng2(1);
  REQUIRE_THROWS_AS(load_word_vectors(in2, v, 3, rng2), ParseError);
}

TEST_CASE("relative_distances fixtures") {
  REQUIRE(relative_distances(10, 8, 8) ==
          std::vector<int>{7, 6, 5, 4, 3, 2, 1, 0, 1, 2});
  REQUIRE(relative_distances(4, 1, 4) == std::vector<int>{0, 0, 0, 0});
  REQUIRE(relative_distances(1, 1, 1) == std::vector<int>{0});
  REQUIRE_THROWS_AS(relative_distances(5, 0, 2), ArgumentError);
  REQUIRE_THROWS_AS(relative_distances(5, 3, 2), ArgumentError);
  REQUIRE_THROWS_AS(relative_distances(5, 2, 6), ArgumentError);
}

TEST_CASE("relative_distances randomized oracle and shape") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 1 + rng.below(30);
    std::size_t lo = 1 + rng.below(n);
    std::size_t hi = lo + rng.below(n - lo + 1);
    auto d = relative_distances(n, lo, hi);
    REQUIRE(d.size() == n);
    for (std::size_t i = 1; i <= n; ++i) {
      int expect = i < lo   ? static_cast<int>(lo - i)
                   : i <= hi ? 0
                             : static_cast<int>(i - hi);
      REQUIRE(d[i - 1] == expect);
    }
    // zero exactly on the span, unit steps away from it
    for (std::size_t i = 0; i < n; ++i) {
      bool inside = i + 1 >= lo && i + 1 <= hi;
      REQUIRE((d[i] == 0) == inside);
    }
    for (std::size_t i = 1; i + 1 < lo; ++i) REQUIRE(d[i] == d[i - 1] - 1);
    for (std::size_t i = hi; i + 1 < n; ++i) REQUIRE(d[i + 1] == d[i] + 1);
  }
}

TEST_CASE("subsample_docs endpoints and stratification") {
  std::vector<DocSample> docs;
  for (int i = 0; i < 100; ++i)
    docs.push_back({{"p" + std::to_string(i)}, DocLabel::positive});
  for (int i = 0; i < 100; ++i)
    docs.push_back({{"n" + std::to_string(i)}, DocLabel::negative});

  auto all = subsample_docs(docs, 1.0, 5);
  REQUIRE(all.size() == docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i)
    REQUIRE(all[i].tokens == docs[i].tokens);

  REQUIRE(subsample_docs(docs, 0.0, 5).empty());

  auto half = subsample_docs(docs, 0.5, 5);
  std::size_t pos = 0, neg = 0;
  for (const auto& d : half)
    (d.label == DocLabel::positive ? pos : neg)++;
  REQUIRE(pos == 50);
  REQUIRE(neg == 50);

  auto again = subsample_docs(docs, 0.5, 5);
  REQUIRE(again.size() == half.size());
  for (std::size_t i = 0; i < half.size(); ++i)
    REQUIRE(again[i].tokens == half[i].tokens);
  auto other = subsample_docs(docs, 0.5, 6);
  bool differs = false;
  for (std::size_t i = 0; i < half.size(); ++i)
    differs |= other[i].tokens != half[i].tokens;
  REQUIRE(differs);

  // odd class sizes stay within one sample of the exact proportion
  docs.push_back({{"extra"}, DocLabel::positive});
  auto odd = subsample_docs(docs, 0.5, 7);
  pos = neg = 0;
  for (const auto& d : odd)
    (d.label == DocLabel::positive ? pos : neg)++;
  REQUIRE(std::llabs(static_cast<long long>(pos) - 50) <= 1);
  REQUIRE(neg == 50);
}

TEST_CASE("attention record helpers") {
  REQUIRE(is_distribution(Tensor::vec({0.5, 0.5})));
  REQUIRE(is_distribution(Tensor::vec({1.0})));
  REQUIRE_FALSE(is_distribution(Tensor::vec({0.6, 0.6})));
  REQUIRE_FALSE(is_distribution(Tensor::vec({1.5, -0.5})));
  REQUIRE(std::string(kind_name(AttentionKind::delta)) == "delta");
  REQUIRE(std::string(polarity_name(Polarity::negative)) == "negative");
}
