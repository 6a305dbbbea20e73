#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "atn/asc.hpp"
#include "atn/checkpoint.hpp"
#include "atn/config.hpp"
#include "atn/corpus.hpp"
#include "atn/dsc.hpp"
#include "atn/error.hpp"
#include "atn/heatmap.hpp"
#include "atn/metrics.hpp"
#include "atn/transfer.hpp"

namespace atn {

using json = nlohmann::json;

// ---- report types ----------------------------------------------------------

struct SeedReport {
  std::uint64_t seed = 0;
  MetricsReport test;
  AscTrainLog log;
  std::string checkpoint_file;  // relative to out_dir
};

struct RunReport {
  RunConfig config;  // as resolved for this run
  std::string note;  // degenerate-configuration documentation, empty otherwise
  bool teacher_used = false;
  DscTrainLog teacher_log;
  std::uint64_t teacher_hash = 0;
  std::vector<SeedReport> seeds;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_macro_f1 = 0.0;
  double std_macro_f1 = 0.0;
};

// ---- helpers ---------------------------------------------------------------

// Shuffled split; at least one sample lands on each side. The split draws
// from the per-seed master stream, so it is reproducible and mode-independent.
inline std::pair<std::vector<IdAspect>, std::vector<IdAspect>> dev_split(
    const std::vector<IdAspect>& all, double fraction, Rng& rng) {
  if (all.size() < 2) throw ArgumentError("dev_split: need at least 2 samples");
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ArgumentError("dev_split: fraction must lie in (0, 1)");
  std::vector<std::size_t> idx(all.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(idx);
  std::size_t n_dev = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(all.size())));
  n_dev = std::min(std::max<std::size_t>(n_dev, 1), all.size() - 1);
  std::vector<IdAspect> dev, train;
  for (std::size_t i = 0; i < idx.size(); ++i)
    (i < n_dev ? dev : train).push_back(all[idx[i]]);
  return {std::move(train), std::move(dev)};
}

namespace detail {

inline std::string fmt2(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

inline void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  sd = std::sqrt(var / static_cast<double>(xs.size()));  // population sigma
}

inline json metrics_json(const MetricsReport& r) {
  json per = json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const ClassMetrics& m = r.per_class[c];
    per.push_back({{"class", polarity_name(static_cast<Polarity>(c))},
                   {"precision", m.precision},
                   {"recall", m.recall},
                   {"f1", m.f1},
                   {"support", m.support}});
  }
  return {{"accuracy", r.accuracy},
          {"macro_f1", r.macro_f1},
          {"confusion", r.confusion},
          {"per_class", per},
          {"total", r.total}};
}

inline json asc_log_json(const AscTrainLog& log) {
  json epochs = json::array();
  for (const AscEpochLog& e : log.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"train_acc", e.train_acc},
                      {"dev_acc", e.dev_acc},
                      {"dev_f1", e.dev_f1}});
  return {{"best_epoch", log.best_epoch},
          {"best_dev_acc", log.best_dev_acc},
          {"epochs", epochs}};
}

inline json dsc_log_json(const DscTrainLog& log) {
  json epochs = json::array();
  for (const DscEpochLog& e : log.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"held_acc", e.held_acc}});
  return {{"best_epoch", log.best_epoch},
          {"best_acc", log.best_acc},
          {"epochs", epochs}};
}

}  // namespace detail

// Two-decimal human rendering of a metrics report.
inline std::string metrics_text(const MetricsReport& r) {
  std::string out = "accuracy " + detail::fmt2(r.accuracy) + " | macro-F1 " +
                    detail::fmt2(r.macro_f1) + " | n " + std::to_string(r.total) +
                    "\n";
  out += "class      precision  recall     f1         support\n";
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const ClassMetrics& m = r.per_class[c];
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-10s %-10.2f %-10.2f %-10.2f %zu\n",
                  polarity_name(static_cast<Polarity>(c)), m.precision, m.recall,
                  m.f1, m.support);
    out += buf;
  }
  out += "confusion (rows gold, cols pred):\n";
  for (const auto& row : r.confusion) {
    for (std::size_t j = 0; j < row.size(); ++j)
      out += (j ? " " : "  ") + std::to_string(row[j]);
    out += "\n";
  }
  return out;
}

// ---- data loading ----------------------------------------------------------

// The document corpus feeds the vocabulary in full whenever it is configured,
// regardless of mode or dsc_fraction: it is an unlabeled-embedding-level
// resource, and keeping the vocabulary fixed across a fraction sweep means
// only the teacher's training data varies.
struct LoadedWorld {
  AspectCorpus train;
  AspectCorpus test;
  std::vector<DocSample> docs;  // full corpus; subsample per run
  Vocabulary vocab;
  EmbeddingMatrix embedding;
};

inline LoadedWorld load_world(const RunConfig& cfg) {
  LoadedWorld w;
  w.train = load_aspect_xml(cfg.train_path);
  w.test = load_aspect_xml(cfg.test_path);
  if (w.train.samples.empty()) throw ArgumentError("train corpus is empty");
  if (w.test.samples.empty()) throw ArgumentError("test corpus is empty");
  if (!cfg.doc_path.empty())
    w.docs = load_doc_corpus_file(cfg.doc_path, DocLabelScheme::leading_label);
  w.vocab = build_vocab(w.train.samples, w.docs);
  Rng vec_rng(cfg.vector_seed);
  if (cfg.vectors_path.empty()) {
    std::istringstream empty;
    w.embedding = load_word_vectors(empty, w.vocab, cfg.d_e, vec_rng);
  } else {
    w.embedding = load_word_vectors_file(cfg.vectors_path, w.vocab, cfg.d_e, vec_rng);
  }
  return w;
}

// ---- standalone teacher pretraining ----------------------------------------

struct TeacherReport {
  DscTrainLog log;
  std::uint64_t hash = 0;
  std::size_t n_docs = 0;
  std::string checkpoint_file;  // relative to out_dir
};

// Pretrains a document model for later reuse via the dsc_checkpoint key. The
// vocabulary comes from the same train/doc corpora a run() with this config
// would use, so the checkpoint passes run()'s vocabulary-equality check.
inline TeacherReport pretrain_teacher(const RunConfig& cfg) {
  auto require_file = [](const std::string& what, const std::string& path) {
    if (path.empty() || !std::filesystem::exists(path))
      throw ArgumentError("pretrain: " + what + " is required and must exist");
  };
  require_file("train_path", cfg.train_path);
  require_file("doc_path", cfg.doc_path);
  if (!(cfg.dsc_fraction > 0.0 && cfg.dsc_fraction <= 1.0))
    throw ArgumentError("pretrain: dsc_fraction must lie in (0, 1]");

  AspectCorpus train = load_aspect_xml(cfg.train_path);
  std::vector<DocSample> docs =
      load_doc_corpus_file(cfg.doc_path, DocLabelScheme::leading_label);
  Vocabulary vocab = build_vocab(train.samples, docs);
  Rng vec_rng(cfg.vector_seed);
  EmbeddingMatrix emb;
  if (cfg.vectors_path.empty()) {
    std::istringstream empty;
    emb = load_word_vectors(empty, vocab, cfg.d_e, vec_rng);
  } else {
    emb = load_word_vectors_file(cfg.vectors_path, vocab, cfg.d_e, vec_rng);
  }

  std::vector<DocSample> sub = subsample_docs(docs, cfg.dsc_fraction, cfg.dsc_seed);
  if (sub.empty()) throw ArgumentError("pretrain: document subsample is empty");

  DscTrainConfig tcfg;
  tcfg.lr = cfg.dsc_lr;
  tcfg.momentum = cfg.dsc_momentum;
  tcfg.dropout = cfg.dsc_dropout;
  tcfg.epochs = cfg.dsc_epochs;
  tcfg.batch = cfg.dsc_batch;
  tcfg.held_out_fraction = cfg.dsc_held_out;
  tcfg.seed = cfg.dsc_seed;
  Rng trng(cfg.dsc_seed);
  DscConfig dcfg;
  dcfg.d_e = cfg.d_e;
  dcfg.d_h = cfg.d_h;
  DscModel teacher = make_dsc(vocab, leaf(emb.values, false), dcfg, trng);

  TeacherReport rep;
  rep.log = pretrain_dsc(teacher, sub, tcfg);
  freeze(teacher);
  Checkpoint tc = make_dsc_checkpoint(teacher);
  rep.hash = checkpoint_value_hash(tc);
  rep.n_docs = sub.size();
  rep.checkpoint_file = "teacher.ckpt";

  std::filesystem::create_directories(cfg.out_dir);
  std::filesystem::path out(cfg.out_dir);
  save_checkpoint(tc, (out / "teacher.ckpt").string());

  std::string jsonl =
      json{{"record", "teacher"},
           {"hash", rep.hash},
           {"n_docs", rep.n_docs},
           {"checkpoint", rep.checkpoint_file},
           {"log", detail::dsc_log_json(rep.log)}}
          .dump() + "\n";
  write_text_file((out / "teacher.jsonl").string(), jsonl);
  write_text_file((out / "teacher.txt").string(),
                  "pretrained on " + std::to_string(rep.n_docs) +
                      " documents | best held-out acc " +
                      detail::fmt2(rep.log.best_acc) + " (epoch " +
                      std::to_string(rep.log.best_epoch) + ")\n");
  return rep;
}

// ---- the run driver --------------------------------------------------------

inline RunReport run(const RunConfig& cfg_in) {
  RunConfig cfg = cfg_in;
  validate_run_config(cfg);
  std::filesystem::create_directories(cfg.out_dir);

  RunReport rep;
  double effective_lambda = cfg.lambda;
  bool needs_teacher =
      cfg.mode == "af" || (cfg.mode == "ag" && effective_lambda > 0.0);
  if (cfg.dsc_fraction == 0.0 && needs_teacher) {
    needs_teacher = false;
    if (cfg.mode == "ag") {
      effective_lambda = 0.0;
      rep.note =
          "dsc_fraction = 0: no teacher; guidance weight forced to 0, so this "
          "run reduces to the base model";
    } else {
      rep.note =
          "dsc_fraction = 0: no teacher; fusion sees uniform document "
          "attention";
    }
  }

  LoadedWorld world = load_world(cfg);

  std::optional<Vocabulary> teacher_vocab;  // keeps a loaded teacher's vocab alive
  std::optional<DscModel> teacher;
  if (needs_teacher) {
    if (!cfg.dsc_checkpoint.empty()) {
      Checkpoint tc = load_checkpoint(cfg.dsc_checkpoint);
      if (tc.vocab != world.vocab.id_to_token)
        throw ContractError(
            "teacher checkpoint vocabulary does not match this run; pretrain "
            "with the same train/doc corpora");
      rep.teacher_hash = checkpoint_value_hash(tc);
      teacher_vocab = vocab_from_checkpoint(tc);
      teacher = rebuild_dsc(tc, *teacher_vocab);
    } else {
      std::vector<DocSample> docs =
          subsample_docs(world.docs, cfg.dsc_fraction, cfg.dsc_seed);
      if (docs.empty())
        throw ArgumentError("document corpus subsample is empty");
      DscTrainConfig tcfg;
      tcfg.lr = cfg.dsc_lr;
      tcfg.momentum = cfg.dsc_momentum;
      tcfg.dropout = cfg.dsc_dropout;
      tcfg.epochs = cfg.dsc_epochs;
      tcfg.batch = cfg.dsc_batch;
      tcfg.held_out_fraction = cfg.dsc_held_out;
      tcfg.seed = cfg.dsc_seed;
      Rng trng(cfg.dsc_seed);
      DscConfig dcfg;
      dcfg.d_e = cfg.d_e;
      dcfg.d_h = cfg.d_h;
      teacher = make_dsc(world.vocab, leaf(world.embedding.values, false), dcfg, trng);
      rep.teacher_log = pretrain_dsc(*teacher, docs, tcfg);
      freeze(*teacher);
      Checkpoint tc = make_dsc_checkpoint(*teacher);
      rep.teacher_hash = checkpoint_value_hash(tc);
      save_checkpoint(tc,
                      (std::filesystem::path(cfg.out_dir) / "teacher.ckpt").string());
    }
    rep.teacher_used = true;
  }

  std::vector<IdAspect> train_ids =
      encode_aspects(world.train.samples, world.vocab, cfg.max_position);
  std::vector<IdAspect> test_ids =
      encode_aspects(world.test.samples, world.vocab, cfg.max_position);

  AscConfig acfg;
  acfg.d_e = cfg.d_e;
  acfg.d_h = cfg.d_h;
  acfg.d_p = cfg.d_p;
  acfg.max_position = cfg.max_position;

  AscTrainConfig scfg;
  scfg.lr = cfg.lr;
  scfg.momentum = cfg.momentum;
  scfg.dropout = cfg.dropout;
  scfg.batch = cfg.batch;
  scfg.epochs = cfg.epochs;
  scfg.lambda = effective_lambda;

  // The line-delimited report grows as the run progresses and the file is
  // rewritten after every completed stage, so an aborted seed leaves the
  // records of everything that finished.
  std::filesystem::path out(cfg.out_dir);
  write_text_file((out / "config.resolved").string(),
                  run_config_to_kv(cfg).render());
  std::string jsonl;
  auto flush = [&] { write_text_file((out / "report.jsonl").string(), jsonl); };
  jsonl += json{{"record", "config"}, {"values", run_config_to_kv(cfg).values}}
               .dump() + "\n";
  if (rep.teacher_used)
    jsonl += json{{"record", "teacher"},
                  {"hash", rep.teacher_hash},
                  {"log", detail::dsc_log_json(rep.teacher_log)}}
                 .dump() + "\n";
  flush();

  for (std::uint64_t seed : cfg.seeds) {
    Rng master(seed);
    auto [tr, dv] = dev_split(train_ids, cfg.dev_fraction, master);
    AscModel student =
        make_asc(world.vocab, leaf(world.embedding.values, false), acfg, master);

    SeedReport sr;
    sr.seed = seed;
    std::string tag;
    if (cfg.mode == "base") {
      tag = "asc";
      sr.log = train_base_asc(student, tr, dv, scfg, master);
      sr.test = evaluate(
          [&](const IdAspect& s) { return asc_forward(student, s).probs; },
          test_ids);
      save_checkpoint(make_asc_checkpoint(student, tag),
                      (std::filesystem::path(cfg.out_dir) /
                       ("seed" + std::to_string(seed) + ".ckpt"))
                          .string());
    } else if (cfg.mode == "ag") {
      tag = "atn-ag";
      if (teacher) {
        sr.log = atn_ag_train(student, *teacher, tr, dv, scfg, master);
      } else {
        // Without a teacher (lambda 0 or dsc_fraction 0) guidance training is
        // exactly base training.
        sr.log = train_base_asc(student, tr, dv, scfg, master);
      }
      sr.test = evaluate(
          [&](const IdAspect& s) { return asc_forward(student, s).probs; },
          test_ids);
      save_checkpoint(make_asc_checkpoint(student, tag),
                      (std::filesystem::path(cfg.out_dir) /
                       ("seed" + std::to_string(seed) + ".ckpt"))
                          .string());
    } else {
      tag = "atn-af";
      FusionGate gate = make_fusion_gate(student.params, master);
      const DscModel* tp = teacher ? &*teacher : nullptr;
      sr.log = atn_af_train(student, tp, gate, tr, dv, scfg, master);
      sr.test = evaluate(
          [&](const IdAspect& s) {
            return atn_af_predict(student, tp, gate, s).probs;
          },
          test_ids);
      save_checkpoint(make_asc_checkpoint(student, tag, rep.teacher_hash),
                      (std::filesystem::path(cfg.out_dir) /
                       ("seed" + std::to_string(seed) + ".ckpt"))
                          .string());
    }
    sr.checkpoint_file = "seed" + std::to_string(seed) + ".ckpt";
    jsonl += json{{"record", "seed"},
                  {"seed", sr.seed},
                  {"metrics", detail::metrics_json(sr.test)},
                  {"log", detail::asc_log_json(sr.log)},
                  {"checkpoint", sr.checkpoint_file}}
                 .dump() + "\n";
    flush();
    rep.seeds.push_back(std::move(sr));
  }

  std::vector<double> accs, f1s;
  for (const SeedReport& sr : rep.seeds) {
    accs.push_back(sr.test.accuracy);
    f1s.push_back(sr.test.macro_f1);
  }
  detail::mean_std(accs, rep.mean_accuracy, rep.std_accuracy);
  detail::mean_std(f1s, rep.mean_macro_f1, rep.std_macro_f1);
  rep.config = cfg;

  jsonl += json{{"record", "summary"},
                {"mode", cfg.mode},
                {"n_seeds", rep.seeds.size()},
                {"effective_lambda", effective_lambda},
                {"mean_accuracy", rep.mean_accuracy},
                {"std_accuracy", rep.std_accuracy},
                {"mean_macro_f1", rep.mean_macro_f1},
                {"std_macro_f1", rep.std_macro_f1},
                {"note", rep.note}}
               .dump() + "\n";
  flush();

  std::string txt = "mode " + cfg.mode + " | seeds " +
                    render_seed_list(cfg.seeds) + " | lambda " +
                    detail::fmt2(effective_lambda) + "\n";
  if (rep.teacher_used)
    txt += "teacher: best held-out acc " + detail::fmt2(rep.teacher_log.best_acc) +
           " (epoch " + std::to_string(rep.teacher_log.best_epoch) + ")\n";
  if (!rep.note.empty()) txt += "note: " + rep.note + "\n";
  for (const SeedReport& sr : rep.seeds)
    txt += "seed " + std::to_string(sr.seed) + ": test acc " +
           detail::fmt2(sr.test.accuracy) + " | macro-F1 " +
           detail::fmt2(sr.test.macro_f1) + " | best dev " +
           detail::fmt2(sr.log.best_dev_acc) + " (epoch " +
           std::to_string(sr.log.best_epoch) + ")\n";
  txt += "mean: acc " + detail::fmt2(rep.mean_accuracy) + " +/- " +
         detail::fmt2(rep.std_accuracy) + " | macro-F1 " +
         detail::fmt2(rep.mean_macro_f1) + " +/- " +
         detail::fmt2(rep.std_macro_f1) + "\n";
  write_text_file((out / "report.txt").string(), txt);

  return rep;
}

// ---- sweeps ----------------------------------------------------------------

struct SweepPoint {
  double x = 0.0;
  RunReport report;
};

struct SweepReport {
  std::string axis;  // "lambda" | "dsc_fraction"
  std::vector<SweepPoint> points;
};

namespace detail {

// Accuracy-vs-x curve as a standalone SVG: one polyline over the sweep
// points, dots at the measurements, tick labels from the exact x values.
inline std::string sweep_svg(const std::string& xlabel,
                             const std::vector<double>& xs,
                             const std::vector<double>& ys) {
  const double W = 640, H = 420, L = 70, R = 20, T = 20, B = 50;
  double x_lo = xs.front(), x_hi = xs.back();
  if (x_hi == x_lo) {
    x_lo -= 0.5;
    x_hi += 0.5;
  }
  double y_lo = *std::min_element(ys.begin(), ys.end());
  double y_hi = *std::max_element(ys.begin(), ys.end());
  y_lo = std::max(0.0, std::floor(y_lo) - 1.0);
  y_hi = std::min(100.0, std::ceil(y_hi) + 1.0);
  if (y_hi == y_lo) y_hi = y_lo + 1.0;
  auto px = [&](double x) { return L + (x - x_lo) / (x_hi - x_lo) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y_lo) / (y_hi - y_lo) * (H - T - B); };
  auto num = [](double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
                  "height=\"420\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
  s += "<line x1=\"" + num(L) + "\" y1=\"" + num(H - B) + "\" x2=\"" + num(W - R) +
       "\" y2=\"" + num(H - B) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(L) + "\" y1=\"" + num(T) + "\" x2=\"" + num(L) +
       "\" y2=\"" + num(H - B) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double y = y_lo + (y_hi - y_lo) * i / 4.0;
    s += "<text x=\"" + num(L - 8) + "\" y=\"" + num(py(y) + 4) +
         "\" text-anchor=\"end\">" + num(y) + "</text>\n";
    s += "<line x1=\"" + num(L - 4) + "\" y1=\"" + num(py(y)) + "\" x2=\"" + num(L) +
         "\" y2=\"" + num(py(y)) + "\" stroke=\"black\"/>\n";
  }
  for (double x : xs) {
    s += "<text x=\"" + num(px(x)) + "\" y=\"" + num(H - B + 18) +
         "\" text-anchor=\"middle\">" + format_double(x) + "</text>\n";
    s += "<line x1=\"" + num(px(x)) + "\" y1=\"" + num(H - B) + "\" x2=\"" +
         num(px(x)) + "\" y2=\"" + num(H - B + 4) + "\" stroke=\"black\"/>\n";
  }
  s += "<text x=\"" + num((L + W - R) / 2) + "\" y=\"" + num(H - 12) +
       "\" text-anchor=\"middle\">" + xlabel + "</text>\n";
  s += "<text x=\"16\" y=\"" + num((T + H - B) / 2) +
       "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       num((T + H - B) / 2) + ")\">mean test accuracy</text>\n";
  s += "<polyline fill=\"none\" stroke=\"#b2182b\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ' ';
    s += num(px(xs[i])) + "," + num(py(ys[i]));
  }
  s += "\"/>\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    s += "<circle cx=\"" + num(px(xs[i])) + "\" cy=\"" + num(py(ys[i])) +
         "\" r=\"3.5\" fill=\"#b2182b\"/>\n";
  s += "</svg>\n";
  return s;
}

inline void write_sweep_artifacts(const SweepReport& sweep,
                                  const std::string& out_dir,
                                  const std::string& header_note) {
  std::filesystem::path out(out_dir);
  std::string stem = "sweep_" + sweep.axis;

  std::string tsv;
  if (!header_note.empty()) tsv += "# " + header_note + "\n";
  tsv += sweep.axis +
         "\tmean_accuracy\tstd_accuracy\tmean_macro_f1\tstd_macro_f1\n";
  std::string jsonl;
  std::vector<double> xs, ys;
  for (const SweepPoint& p : sweep.points) {
    tsv += format_double(p.x) + "\t" + format_double(p.report.mean_accuracy) +
           "\t" + format_double(p.report.std_accuracy) + "\t" +
           format_double(p.report.mean_macro_f1) + "\t" +
           format_double(p.report.std_macro_f1) + "\n";
    jsonl += json{{"record", "sweep_point"},
                  {"axis", sweep.axis},
                  {"x", p.x},
                  {"mean_accuracy", p.report.mean_accuracy},
                  {"std_accuracy", p.report.std_accuracy},
                  {"mean_macro_f1", p.report.mean_macro_f1},
                  {"std_macro_f1", p.report.std_macro_f1},
                  {"note", p.report.note},
                  {"out_dir", p.report.config.out_dir}}
                 .dump() + "\n";
    xs.push_back(p.x);
    ys.push_back(p.report.mean_accuracy);
  }
  write_text_file((out / (stem + ".tsv")).string(), tsv);
  write_text_file((out / (stem + ".jsonl")).string(), jsonl);
  write_text_file((out / (stem + ".svg")).string(),
                  sweep_svg(sweep.axis, xs, ys));
}

}  // namespace detail

inline SweepReport sweep_lambda(const RunConfig& base,
                                std::vector<double> lambdas = {}) {
  if (base.mode != "ag")
    throw ArgumentError("sweep_lambda: mode must be ag");
  if (lambdas.empty())
    for (int i = 0; i <= 10; ++i) lambdas.push_back(i / 10.0);
  for (double l : lambdas)
    if (l < 0.0) throw ArgumentError("sweep_lambda: lambda must be >= 0");
  std::sort(lambdas.begin(), lambdas.end());
  std::filesystem::create_directories(base.out_dir);

  SweepReport sweep;
  sweep.axis = "lambda";
  for (double l : lambdas) {
    RunConfig sub = base;
    sub.lambda = l;
    sub.out_dir = (std::filesystem::path(base.out_dir) /
                   ("lambda-" + format_double(l)))
                      .string();
    sweep.points.push_back({l, run(sub)});
  }
  detail::write_sweep_artifacts(sweep, base.out_dir, "");
  return sweep;
}

inline SweepReport sweep_dsc_fraction(
    const RunConfig& base, std::vector<double> fractions = {}) {
  if (base.mode != "ag" && base.mode != "af")
    throw ArgumentError("sweep_dsc_fraction: mode must be ag or af");
  if (!base.dsc_checkpoint.empty())
    throw ArgumentError(
        "sweep_dsc_fraction: the teacher is re-pretrained per fraction; drop "
        "dsc_checkpoint");
  if (fractions.empty()) fractions = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (double f : fractions)
    if (!(f >= 0.0 && f <= 1.0))
      throw ArgumentError("sweep_dsc_fraction: fraction outside [0, 1]");
  std::sort(fractions.begin(), fractions.end());
  std::filesystem::create_directories(base.out_dir);

  SweepReport sweep;
  sweep.axis = "dsc_fraction";
  for (double f : fractions) {
    RunConfig sub = base;
    sub.dsc_fraction = f;
    sub.out_dir = (std::filesystem::path(base.out_dir) /
                   ("fraction-" + format_double(f)))
                      .string();
    sweep.points.push_back({f, run(sub)});
  }
  detail::write_sweep_artifacts(
      sweep, base.out_dir,
      "fraction 0 runs have no teacher: ag falls back to the base model "
      "(lambda forced to 0), af fuses against uniform document attention");
  return sweep;
}

// ---- checkpoint evaluation and visualization -------------------------------

namespace detail {

// Rebuilds the aspect model (plus teacher for atn-af) behind a uniform
// predict interface. Vocabularies sit behind unique_ptr so the models'
// vocabulary pointers survive moves of this struct.
struct LoadedStudent {
  Checkpoint ckpt;
  std::unique_ptr<Vocabulary> vocab;
  AscModel model;
  std::unique_ptr<Vocabulary> teacher_vocab;
  std::optional<DscModel> teacher;
  std::optional<FusionGate> gate;

  bool fused() const { return ckpt.tag == "atn-af"; }

  AfOutput predict(const IdAspect& s) const {
    if (fused())
      return atn_af_predict(model, teacher ? &*teacher : nullptr, *gate, s);
    AscOutput o = asc_forward(model, s);
    return AfOutput{o.probs, Tensor(), o.beta, Tensor()};
  }
};

inline LoadedStudent load_student(const std::string& ckpt_path,
                                  const std::string& teacher_path) {
  LoadedStudent out;
  out.ckpt = load_checkpoint(ckpt_path);
  if (out.ckpt.tag == "dsc")
    throw ArgumentError(
        "this is a document-model checkpoint; aspect evaluation needs an "
        "asc/atn-ag/atn-af checkpoint");
  out.vocab = std::make_unique<Vocabulary>(vocab_from_checkpoint(out.ckpt));
  out.model = rebuild_asc(out.ckpt, *out.vocab);
  if (out.ckpt.tag == "atn-af") out.gate = gate_from_model(out.model);

  if (!teacher_path.empty()) {
    Checkpoint tc = load_checkpoint(teacher_path);
    if (tc.vocab != out.ckpt.vocab)
      throw ContractError("teacher checkpoint vocabulary does not match");
    out.teacher_vocab = std::make_unique<Vocabulary>(vocab_from_checkpoint(tc));
    if (out.ckpt.tag == "atn-af" &&
        checkpoint_value_hash(tc) != out.ckpt.teacher_hash)
      throw ContractError(
          "teacher checkpoint does not match the hash recorded at save time");
    out.teacher = rebuild_dsc(tc, *out.teacher_vocab);
  } else if (out.ckpt.tag == "atn-af" && out.ckpt.teacher_hash != 0) {
    throw ArgumentError(
        "this atn-af checkpoint was trained against a teacher; pass its "
        "checkpoint");
  }
  return out;
}

}  // namespace detail

inline MetricsReport eval_checkpoint(const std::string& ckpt_path,
                                     const std::string& teacher_path,
                                     const std::string& test_path) {
  detail::LoadedStudent ls = detail::load_student(ckpt_path, teacher_path);
  AspectCorpus test = load_aspect_xml(test_path);
  if (test.samples.empty()) throw ArgumentError("test corpus is empty");
  std::vector<IdAspect> ids =
      encode_aspects(test.samples, *ls.vocab, ls.model.cfg.max_position);
  return evaluate([&](const IdAspect& s) { return ls.predict(s).probs; }, ids);
}

// First `count` test sentences, one heatmap row per attention variant the
// checkpoint supports. A teacher passed alongside an atn-ag/asc checkpoint
// adds the document attention and guidance rows.
inline void visualize_checkpoint(const std::string& ckpt_path,
                                 const std::string& teacher_path,
                                 const std::string& test_path,
                                 std::size_t count, const std::string& out_html) {
  detail::LoadedStudent ls = detail::load_student(ckpt_path, teacher_path);
  AspectCorpus test = load_aspect_xml(test_path);
  if (test.samples.empty()) throw ArgumentError("test corpus is empty");
  count = std::min(count, test.samples.size());
  if (count == 0) throw ArgumentError("visualize: count must be positive");

  std::vector<HeatmapSample> rows;
  for (std::size_t i = 0; i < count; ++i) {
    const AspectSample& s = test.samples[i];
    IdAspect ids = encode_aspect(s, *ls.vocab, ls.model.cfg.max_position);
    AfOutput out = ls.predict(ids);

    HeatmapSample hs;
    hs.tokens = s.tokens;
    hs.target_lo = s.target_lo;
    hs.target_hi = s.target_hi;
    hs.gold = polarity_name(s.label);
    hs.pred = polarity_name(static_cast<Polarity>(argmax_class(out.probs)));
    if (ls.fused()) {
      hs.rows.push_back({"alpha", {AttentionKind::alpha, out.alpha}});
      hs.rows.push_back({"beta", {AttentionKind::beta, out.beta}});
      hs.rows.push_back({"gamma'", {AttentionKind::gamma, out.gamma}});
    } else {
      if (ls.teacher) {
        AttentionRecord alpha = teacher_attention(*ls.teacher, ids.ids);
        hs.rows.push_back({"alpha", alpha});
        hs.rows.push_back(
            {"delta",
             reweight_alpha(alpha, relative_distances(ids.ids.size(), ids.lo,
                                                      ids.hi))});
      }
      hs.rows.push_back({"beta", {AttentionKind::beta, out.beta}});
    }
    rows.push_back(std::move(hs));
  }
  export_heatmap(rows, out_html);
}

}  // namespace atn
