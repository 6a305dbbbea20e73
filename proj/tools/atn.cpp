#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "atn/config.hpp"
#include "atn/harness.hpp"
#include "atn/synthetic.hpp"

namespace {

// --config file, repeatable --set KEY=VALUE overrides, and ergonomic flags
// for the knobs that vary between invocations. Precedence: file, then --set,
// then explicit flags.
struct ConfigArgs {
  std::string config;
  std::vector<std::string> sets;
  std::string mode, out_dir, seeds;
  double lambda = 0.0, dsc_fraction = 0.0;
  std::size_t epochs = 0;
  CLI::Option *o_mode = nullptr, *o_out = nullptr, *o_seeds = nullptr,
              *o_lambda = nullptr, *o_fraction = nullptr, *o_epochs = nullptr;

  void attach(CLI::App* sub) {
    sub->add_option("--config", config, "flat key = value config file");
    sub->add_option("--set", sets, "override KEY=VALUE (repeatable)");
    o_mode = sub->add_option("--mode", mode, "base | ag | af");
    o_out = sub->add_option("--out", out_dir, "output directory");
    o_seeds = sub->add_option("--seeds", seeds, "comma-separated seed list");
    o_lambda = sub->add_option("--lambda", lambda, "guidance loss weight");
    o_fraction = sub->add_option("--dsc-fraction", dsc_fraction,
                                 "fraction of the document corpus");
    o_epochs = sub->add_option("--epochs", epochs, "training epochs");
  }

  atn::KvConfig kv() const {
    atn::KvConfig kv;
    if (!config.empty()) kv = atn::parse_kv_file(config);
    for (const std::string& s : sets)
      for (const auto& [k, v] : atn::parse_kv(s).values) kv.values[k] = v;
    if (o_mode->count()) kv.set("mode", mode);
    if (o_out->count()) kv.set("out_dir", out_dir);
    if (o_seeds->count()) kv.set("seeds", seeds);
    if (o_lambda->count()) kv.set("lambda", lambda);
    if (o_fraction->count()) kv.set("dsc_fraction", dsc_fraction);
    if (o_epochs->count()) kv.set("epochs", epochs);
    return kv;
  }

  atn::RunConfig rc() const { return atn::run_config_from_kv(kv()); }
};

std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attention transfer for aspect-level sentiment"};
  app.require_subcommand(1);

  // ---- pretrain-dsc ----
  auto* cmd_pre = app.add_subcommand(
      "pretrain-dsc", "pretrain the document model and save teacher.ckpt");
  ConfigArgs pre_args;
  pre_args.attach(cmd_pre);
  cmd_pre->callback([&] {
    atn::RunConfig rc = pre_args.rc();
    atn::TeacherReport rep = atn::pretrain_teacher(rc);
    std::cout << atn::read_file(join(rc.out_dir, "teacher.txt"))
              << "wrote " << join(rc.out_dir, rep.checkpoint_file) << "\n";
  });

  // ---- train ----
  auto* cmd_train = app.add_subcommand(
      "train", "train the aspect model (base, ag, or af) over all seeds");
  ConfigArgs train_args;
  train_args.attach(cmd_train);
  cmd_train->callback([&] {
    atn::RunConfig rc = train_args.rc();
    atn::run(rc);
    std::cout << atn::read_file(join(rc.out_dir, "report.txt"))
              << "artifacts in " << rc.out_dir << "\n";
  });

  // ---- eval ----
  auto* cmd_eval =
      app.add_subcommand("eval", "evaluate a checkpoint on a test corpus");
  ConfigArgs eval_args;
  eval_args.attach(cmd_eval);
  std::string eval_ckpt, eval_teacher, eval_test, eval_json;
  cmd_eval->add_option("--checkpoint", eval_ckpt, "asc/atn-ag/atn-af checkpoint")
      ->required();
  cmd_eval->add_option("--teacher", eval_teacher,
                       "dsc checkpoint (required for atn-af)");
  auto* o_eval_test =
      cmd_eval->add_option("--test", eval_test, "test XML (default: config test_path)");
  cmd_eval->add_option("--json", eval_json, "also write the report as JSONL");
  cmd_eval->callback([&] {
    std::string test = eval_test;
    if (!o_eval_test->count()) {
      test = eval_args.rc().test_path;
      if (test.empty())
        throw atn::ArgumentError("eval: pass --test or a config with test_path");
    }
    atn::MetricsReport r =
        atn::eval_checkpoint(eval_ckpt, eval_teacher, atn::resolve_data_path(test));
    std::cout << atn::metrics_text(r);
    if (!eval_json.empty()) {
      atn::write_text_file(
          eval_json, atn::json{{"record", "eval"},
                               {"checkpoint", eval_ckpt},
                               {"metrics", atn::detail::metrics_json(r)}}
                             .dump() + "\n");
      std::cout << "wrote " << eval_json << "\n";
    }
  });

  // ---- sweep-lambda ----
  auto* cmd_sl = app.add_subcommand(
      "sweep-lambda", "run the ag mode across guidance weights");
  ConfigArgs sl_args;
  sl_args.attach(cmd_sl);
  std::string sl_values;
  cmd_sl->add_option("--lambdas", sl_values,
                     "comma-separated weights (default 0,0.1,...,1)");
  cmd_sl->callback([&] {
    atn::RunConfig rc = sl_args.rc();
    std::vector<double> values;
    if (!sl_values.empty()) values = atn::parse_double_list(sl_values);
    atn::SweepReport s = atn::sweep_lambda(rc, values);
    for (const atn::SweepPoint& p : s.points)
      std::printf("lambda %-6s acc %.2f +/- %.2f | macro-F1 %.2f +/- %.2f\n",
                  atn::format_double(p.x).c_str(), p.report.mean_accuracy,
                  p.report.std_accuracy, p.report.mean_macro_f1,
                  p.report.std_macro_f1);
    std::cout << "artifacts in " << rc.out_dir << "\n";
  });

  // ---- sweep-dsc ----
  auto* cmd_sd = app.add_subcommand(
      "sweep-dsc", "re-pretrain the teacher on corpus fractions and re-run");
  ConfigArgs sd_args;
  sd_args.attach(cmd_sd);
  std::string sd_values;
  cmd_sd->add_option("--fractions", sd_values,
                     "comma-separated fractions (default 0,0.25,0.5,0.75,1)");
  cmd_sd->callback([&] {
    atn::RunConfig rc = sd_args.rc();
    std::vector<double> values;
    if (!sd_values.empty()) values = atn::parse_double_list(sd_values);
    atn::SweepReport s = atn::sweep_dsc_fraction(rc, values);
    for (const atn::SweepPoint& p : s.points)
      std::printf("fraction %-5s acc %.2f +/- %.2f | macro-F1 %.2f +/- %.2f\n",
                  atn::format_double(p.x).c_str(), p.report.mean_accuracy,
                  p.report.std_accuracy, p.report.mean_macro_f1,
                  p.report.std_macro_f1);
    std::cout << "artifacts in " << rc.out_dir << "\n";
  });

  // ---- visualize ----
  auto* cmd_vis = app.add_subcommand(
      "visualize", "render attention heatmaps for test sentences");
  ConfigArgs vis_args;
  vis_args.attach(cmd_vis);
  std::string vis_ckpt, vis_teacher, vis_test, vis_out = "heatmap.html";
  std::size_t vis_count = 8;
  cmd_vis->add_option("--checkpoint", vis_ckpt, "asc/atn-ag/atn-af checkpoint")
      ->required();
  cmd_vis->add_option("--teacher", vis_teacher,
                      "dsc checkpoint (adds alpha/delta rows)");
  auto* o_vis_test =
      cmd_vis->add_option("--test", vis_test, "test XML (default: config test_path)");
  cmd_vis->add_option("--count", vis_count, "number of sentences");
  cmd_vis->add_option("--html", vis_out, "output HTML path");
  cmd_vis->callback([&] {
    std::string test = vis_test;
    if (!o_vis_test->count()) {
      test = vis_args.rc().test_path;
      if (test.empty())
        throw atn::ArgumentError("visualize: pass --test or a config with test_path");
    }
    atn::visualize_checkpoint(vis_ckpt, vis_teacher, atn::resolve_data_path(test),
                              vis_count, vis_out);
    std::cout << "wrote " << vis_out << "\n";
  });

  // ---- synth-world ----
  auto* cmd_sw = app.add_subcommand(
      "synth-world", "generate a synthetic corpus plus a ready-to-run config");
  std::string sw_out;
  std::size_t sw_docs = 5000, sw_train = 120, sw_test = 200;
  std::uint64_t sw_seed = 17;
  cmd_sw->add_option("--out", sw_out, "output directory")->required();
  cmd_sw->add_option("--docs", sw_docs, "documents for pretraining");
  cmd_sw->add_option("--train", sw_train, "aspect training sentences");
  cmd_sw->add_option("--test", sw_test, "aspect test sentences");
  cmd_sw->add_option("--seed", sw_seed, "world seed");
  cmd_sw->callback([&] {
    std::filesystem::create_directories(sw_out);
    // Confuser world: far slots hold loud fillers whose amplitude sits
    // between filler noise and the lexicon, uncorrelated with the label.
    // A document-scale teacher learns the boundary; a sentence-scale
    // student benefits from inheriting it.
    atn::SynthSpec spec;
    spec.seed = sw_seed;
    spec.sent_len_min = 7;
    spec.sent_len_max = 9;
    spec.far_min = 4;
    spec.n_confusers = 8;
    spec.conf_amp = 0.62;
    spec.conf_doc_prob = 0.8;
    atn::write_synth_world(sw_out, spec, sw_docs, sw_train, sw_test);

    atn::RunConfig rc;
    rc.mode = "ag";
    rc.train_path = join(sw_out, "asc_train.xml");
    rc.test_path = join(sw_out, "asc_test.xml");
    rc.doc_path = join(sw_out, "docs.txt");
    rc.vectors_path = join(sw_out, "vectors.txt");
    rc.out_dir = join(sw_out, "runs");
    rc.d_e = spec.d_e;
    rc.d_h = 48;
    rc.d_p = 8;
    rc.max_position = 60;
    rc.dropout = 0.1;
    rc.epochs = 60;
    rc.batch = 8;
    rc.dev_fraction = 0.25;
    rc.dsc_epochs = 8;
    rc.dsc_batch = 16;
    rc.dsc_dropout = 0.2;
    atn::write_text_file(join(sw_out, "config"), atn::run_config_to_kv(rc).render());
    std::cout << "wrote corpus and config under " << sw_out << "\n"
              << "try: atn train --config " << join(sw_out, "config") << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
