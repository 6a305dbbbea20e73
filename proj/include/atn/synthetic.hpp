#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "atn/corpus.hpp"
#include "atn/rng.hpp"

namespace atn {

// Generated world where one planted lexicon decides both document polarity
// and aspect polarity: a document is positive iff it contains positive
// lexicon tokens; an aspect is positive/negative iff a lexicon token sits
// within near_radius of the target, and neutral when only far-away lexicon
// tokens (distractors) occur. Every generator is deterministic in the seed.
struct SynthSpec {
  std::size_t n_fillers = 40;
  std::size_t n_sentiment = 4;  // per polarity
  std::size_t n_aspects = 6;
  std::size_t d_e = 12;
  // Sentiment-dimension noise on filler vectors. Nonzero keeps the pooled
  // signal below the noise floor on long documents, so classification has to
  // go through attention instead of the mean.
  double filler_noise = 0.45;
  // Baseline noise on every other dimension. Real pretrained vectors have
  // entries of this magnitude; vectors much smaller than this stall early
  // training at tiny model widths.
  double base_noise = 0.25;

  std::size_t doc_len_min = 15;
  std::size_t doc_len_max = 40;

  std::size_t sent_len_min = 9;
  std::size_t sent_len_max = 14;
  std::size_t near_radius = 2;   // evidence lands within this distance
  std::size_t far_min = 5;       // distractors land at least this far
  double distractor_prob = 0.9;
  double multiword_prob = 0.2;
  // With plants disabled, neutral sentences are pure filler instead of
  // carrying far-away lexicon tokens.
  bool neutral_plants = true;
  // Number of near evidence tokens per positive/negative sentence. Each one
  // independently flips to the opposite polarity with cue_flip_prob, so with
  // several plants a single cue is unreliable and the label is carried by
  // their majority.
  std::size_t near_plants = 1;
  double cue_flip_prob = 0.0;
  // Confusers are loud fillers: their sentiment dimension sits at conf_amp,
  // between the filler noise band and the lexicon amplitude. They appear in
  // documents and in far slots uncorrelated with any label, so far-zone
  // content carries no signal but still pollutes position-blind attention.
  // When enabled they replace far sentiment distractors entirely.
  std::size_t n_confusers = 0;
  double conf_amp = 0.55;
  double conf_doc_prob = 0.5;

  std::uint64_t seed = 17;
};

namespace synth {

inline std::string filler(std::size_t i) { return "f" + std::to_string(i); }
inline std::string pos_word(std::size_t i) { return "plus" + std::to_string(i); }
inline std::string neg_word(std::size_t i) { return "minus" + std::to_string(i); }
inline std::string aspect_word(std::size_t i) { return "asp" + std::to_string(i); }
inline std::string conf_word(std::size_t i) { return "conf" + std::to_string(i); }

}  // namespace synth

// Word vectors with a clean linear structure: dimension 0 carries sentiment
// (+/-0.8), dimension 1 marks aspect words, everything else is small noise.
inline std::vector<std::pair<std::string, std::vector<double>>> synth_vectors(
    const SynthSpec& spec) {
  Rng rng(spec.seed ^ 0x5eedbeefULL);
  std::vector<std::pair<std::string, std::vector<double>>> out;
  // dims 0 and 1 carry the structure with only a small jitter so the
  // sentiments and the fillers stay separated; the rest is baseline noise
  auto noise_row = [&](double dim0, double dim1) {
    std::vector<double> v(spec.d_e);
    for (double& x : v) x = rng.uniform(-spec.base_noise, spec.base_noise);
    v[0] = dim0 + rng.uniform(-0.05, 0.05);
    if (spec.d_e > 1) v[1] = dim1 + rng.uniform(-0.05, 0.05);
    return v;
  };
  for (std::size_t i = 0; i < spec.n_fillers; ++i)
    out.emplace_back(synth::filler(i),
                     noise_row(rng.uniform(-spec.filler_noise, spec.filler_noise), 0.0));
  for (std::size_t i = 0; i < spec.n_sentiment; ++i)
    out.emplace_back(synth::pos_word(i), noise_row(0.8, 0.0));
  for (std::size_t i = 0; i < spec.n_sentiment; ++i)
    out.emplace_back(synth::neg_word(i), noise_row(-0.8, 0.0));
  for (std::size_t i = 0; i < spec.n_aspects; ++i)
    out.emplace_back(synth::aspect_word(i), noise_row(0.0, 0.8));
  for (std::size_t i = 0; i < spec.n_confusers; ++i)
    out.emplace_back(synth::conf_word(i),
                     noise_row(i % 2 == 0 ? spec.conf_amp : -spec.conf_amp, 0.0));
  return out;
}

// Documents: fillers plus 1-2 planted lexicon tokens of the document's
// polarity. Labels alternate, so any prefix is nearly balanced.
inline std::vector<DocSample> synth_docs(const SynthSpec& spec, std::size_t n,
                                         std::uint64_t salt = 0) {
  Rng rng(spec.seed + 0x0d0cULL + salt);
  std::vector<DocSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool positive = i % 2 == 0;
    std::size_t len =
        spec.doc_len_min + rng.below(spec.doc_len_max - spec.doc_len_min + 1);
    std::vector<std::string> toks(len);
    for (auto& t : toks) t = synth::filler(rng.below(spec.n_fillers));
    std::size_t plants = 1 + rng.below(2);
    for (std::size_t k = 0; k < plants; ++k) {
      std::size_t at = rng.below(len);
      std::size_t w = rng.below(spec.n_sentiment);
      toks[at] = positive ? synth::pos_word(w) : synth::neg_word(w);
    }
    if (spec.n_confusers > 0 && rng.uniform() < spec.conf_doc_prob) {
      std::size_t extra = 1 + rng.below(2);
      for (std::size_t k = 0; k < extra; ++k)
        toks[rng.below(len)] = synth::conf_word(rng.below(spec.n_confusers));
    }
    out.push_back(DocSample{std::move(toks),
                            positive ? DocLabel::positive : DocLabel::negative});
  }
  return out;
}

// Documents with exactly one planted token at a recorded position, for
// attention-argmax probes.
inline std::vector<std::pair<DocSample, std::size_t>> synth_probe_docs(
    const SynthSpec& spec, std::size_t n, std::uint64_t salt = 1) {
  Rng rng(spec.seed + 0x9b0bULL + salt);
  std::vector<std::pair<DocSample, std::size_t>> out;
  for (std::size_t i = 0; i < n; ++i) {
    bool positive = i % 2 == 0;
    std::size_t len =
        spec.doc_len_min + rng.below(spec.doc_len_max - spec.doc_len_min + 1);
    std::vector<std::string> toks(len);
    for (auto& t : toks) t = synth::filler(rng.below(spec.n_fillers));
    std::size_t at = rng.below(len);
    std::size_t w = rng.below(spec.n_sentiment);
    toks[at] = positive ? synth::pos_word(w) : synth::neg_word(w);
    out.emplace_back(
        DocSample{std::move(toks),
                  positive ? DocLabel::positive : DocLabel::negative},
        at);
  }
  return out;
}

// Aspect sentences. Positive/negative: one lexicon token of that polarity
// within near_radius of the target; usually also an opposite-polarity
// distractor at distance >= far_min. Neutral: distractors only.
inline std::vector<AspectSample> synth_aspects(const SynthSpec& spec,
                                               std::size_t n,
                                               std::uint64_t salt = 2) {
  Rng rng(spec.seed + 0xa59ecULL + salt);
  std::vector<AspectSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Polarity label = static_cast<Polarity>(i % 3);
    // canonical layout keeps the target near the left edge so near slots (both
    // sides) and far slots (to the right) always exist; a coin flip mirrors
    // the whole sentence afterwards
    std::size_t width = rng.uniform() < spec.multiword_prob ? 2 : 1;
    std::size_t lo0 = spec.near_radius + rng.below(2);
    std::size_t hi0 = lo0 + width - 1;
    std::size_t floor_len = hi0 + spec.far_min + 2;
    std::size_t len = std::max(spec.sent_len_min, floor_len);
    len += rng.below(spec.sent_len_max > len ? spec.sent_len_max - len + 1 : 1);

    std::vector<std::string> toks(len);
    for (auto& t : toks) t = synth::filler(rng.below(spec.n_fillers));
    for (std::size_t k = lo0; k <= hi0; ++k)
      toks[k] = synth::aspect_word(rng.below(spec.n_aspects));

    auto place = [&](std::size_t at, bool positive) {
      toks[at] = positive ? synth::pos_word(rng.below(spec.n_sentiment))
                          : synth::neg_word(rng.below(spec.n_sentiment));
    };
    auto far_slot = [&]() {
      return hi0 + spec.far_min + rng.below(len - hi0 - spec.far_min);
    };
    // With confusers enabled, far slots hold loud fillers whose sign is tied
    // to the word index, so far-zone content stays independent of the label.
    auto place_far = [&](bool positive) {
      if (spec.n_confusers > 0)
        toks[far_slot()] = synth::conf_word(rng.below(spec.n_confusers));
      else
        place(far_slot(), positive);
    };

    if (label == Polarity::neutral) {
      if (spec.neutral_plants) {
        std::size_t plants = 1 + rng.below(2);
        for (std::size_t k = 0; k < plants; ++k)
          place_far(rng.uniform() < 0.5);
      }
    } else {
      bool positive = label == Polarity::positive;
      for (std::size_t k = 0; k < spec.near_plants; ++k) {
        std::size_t d = 1 + rng.below(spec.near_radius);
        bool left = rng.uniform() < 0.5 && lo0 >= d;
        bool pol = positive;
        if (spec.cue_flip_prob > 0 && rng.uniform() < spec.cue_flip_prob)
          pol = !pol;
        place(left ? lo0 - d : hi0 + d, pol);
      }
      if (rng.uniform() < spec.distractor_prob) place_far(!positive);
    }

    if (rng.uniform() < 0.5) {
      std::reverse(toks.begin(), toks.end());
      std::size_t new_lo = len - 1 - hi0;
      hi0 = len - 1 - lo0;
      lo0 = new_lo;
    }
    out.push_back(AspectSample{std::move(toks), lo0 + 1, hi0 + 1, label});
  }
  return out;
}

// ---- serialization --------------------------------------------------------

inline std::string doc_corpus_text(const std::vector<DocSample>& docs) {
  std::string out;
  for (const DocSample& d : docs) {
    out += doc_label_name(d.label);
    for (const std::string& t : d.tokens) {
      out += ' ';
      out += t;
    }
    out += '\n';
  }
  return out;
}

inline std::string vectors_text(
    const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
  std::string out;
  char buf[64];
  for (const auto& [word, v] : rows) {
    out += word;
    for (double x : v) {
      std::snprintf(buf, sizeof buf, " %.6f", x);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// SemEval-2014-schema XML for a list of samples; offsets are recomputed from
// the reassembled sentence text, so the file round-trips through
// parse_aspect_xml.
inline std::string aspect_xml_text(const std::vector<AspectSample>& samples) {
  std::string out =
      "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n<sentences>\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const AspectSample& s = samples[i];
    std::string text;
    std::size_t from = 0, to = 0;
    for (std::size_t k = 0; k < s.tokens.size(); ++k) {
      if (k) text += ' ';
      if (k + 1 == s.target_lo) from = text.size();
      text += s.tokens[k];
      if (k + 1 == s.target_hi) to = text.size();
    }
    std::string term = text.substr(from, to - from);
    out += "    <sentence id=\"" + std::to_string(i + 1) + "\">\n";
    out += "        <text>" + xml_escape(text) + "</text>\n";
    out += "        <aspectTerms>\n";
    out += "            <aspectTerm term=\"" + xml_escape(term) +
           "\" polarity=\"" + polarity_name(s.label) + "\" from=\"" +
           std::to_string(from) + "\" to=\"" + std::to_string(to) + "\"/>\n";
    out += "        </aspectTerms>\n";
    out += "    </sentence>\n";
  }
  out += "</sentences>\n";
  return out;
}

// Writes docs.txt, vectors.txt, asc_train.xml, asc_test.xml under dir.
inline void write_synth_world(const std::string& dir, const SynthSpec& spec,
                              std::size_t n_docs, std::size_t n_train,
                              std::size_t n_test) {
  write_text_file(dir + "/docs.txt", doc_corpus_text(synth_docs(spec, n_docs)));
  write_text_file(dir + "/vectors.txt", vectors_text(synth_vectors(spec)));
  write_text_file(dir + "/asc_train.xml",
                  aspect_xml_text(synth_aspects(spec, n_train, 2)));
  write_text_file(dir + "/asc_test.xml",
                  aspect_xml_text(synth_aspects(spec, n_test, 3)));
}

// ---- schema fixtures with the published class counts ----------------------

// Restaurant-Train 2164/637/807 (+conflict), Restaurant-Test 728/196/196,
// Laptop-Train 994/464/870, Laptop-Test 341/169/128. Sentences are synthetic;
// only the schema and the label counts matter.
inline std::string semeval_fixture_xml(std::size_t n_pos, std::size_t n_neu,
                                       std::size_t n_neg, std::size_t n_conflict,
                                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<const char*> nouns = {"service", "pizza",  "staff",  "battery",
                                    "screen",  "keyboard", "salmon", "decor"};
  std::vector<const char*> pos_adj = {"great", "lovely", "fantastic", "solid"};
  std::vector<const char*> neg_adj = {"dreadful", "slow", "awful", "flimsy"};
  std::vector<std::pair<std::string, std::size_t>> order;  // polarity, count
  order = {{"positive", n_pos}, {"neutral", n_neu}, {"negative", n_neg},
           {"conflict", n_conflict}};

  std::string out =
      "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n<sentences>\n";
  std::size_t id = 0;
  for (const auto& [polarity, count] : order) {
    for (std::size_t i = 0; i < count; ++i) {
      const char* noun = nouns[rng.below(nouns.size())];
      std::string text;
      std::size_t from, to;
      if (polarity == "positive") {
        text = std::string("The ") + noun + " was " + pos_adj[rng.below(4)] + ".";
        from = 4;
      } else if (polarity == "negative") {
        text = std::string("The ") + noun + " was " + neg_adj[rng.below(4)] + ".";
        from = 4;
      } else if (polarity == "neutral") {
        text = std::string("They brought the ") + noun + " quickly.";
        from = 17;
      } else {
        text = std::string("The ") + noun + " was " + pos_adj[rng.below(4)] +
               " but " + neg_adj[rng.below(4)] + ".";
        from = 4;
      }
      to = from + std::string(noun).size();
      ++id;
      out += "    <sentence id=\"" + std::to_string(id) + "\">\n";
      out += "        <text>" + xml_escape(text) + "</text>\n";
      out += "        <aspectTerms>\n";
      out += "            <aspectTerm term=\"" + std::string(noun) +
             "\" polarity=\"" + polarity + "\" from=\"" + std::to_string(from) +
             "\" to=\"" + std::to_string(to) + "\"/>\n";
      out += "        </aspectTerms>\n";
      out += "    </sentence>\n";
    }
  }
  out += "</sentences>\n";
  return out;
}

inline void write_semeval_fixture(const std::string& dir) {
  write_text_file(dir + "/Restaurants_Train.xml",
                  semeval_fixture_xml(2164, 637, 807, 91, 11));
  write_text_file(dir + "/Restaurants_Test_Gold.xml",
                  semeval_fixture_xml(728, 196, 196, 14, 12));
  write_text_file(dir + "/Laptop_Train.xml",
                  semeval_fixture_xml(994, 464, 870, 45, 13));
  write_text_file(dir + "/Laptops_Test_Gold.xml",
                  semeval_fixture_xml(341, 169, 128, 16, 14));
}

}  // namespace atn
