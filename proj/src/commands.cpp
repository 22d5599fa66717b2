#include "ecg/commands.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ecg/error.hpp"
#include "ecg/model_file.hpp"
#include "ecg/synth.hpp"

namespace ecg::cli {

namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string fixed(const std::optional<double>& v, int digits = 4) {
  if (!v) return "undef";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, *v);
  return buf;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json cm_json(const ConfusionMatrix& cm) {
  json rows = json::array();
  for (const auto& row : cm.counts) rows.push_back(row);
  return rows;
}

json metrics_json(const ClassMetrics& m) {
  json per = json::object();
  for (const auto c : kAllClasses) {
    const auto& pc = m.per_class[static_cast<std::size_t>(class_index(c))];
    per[std::string(to_string(c))] = {{"precision", opt_json(pc.precision)},
                                      {"sensitivity", opt_json(pc.sensitivity)},
                                      {"specificity", opt_json(pc.specificity)},
                                      {"f1", opt_json(pc.f1)}};
  }
  return {{"accuracy", m.accuracy}, {"per_class", per}};
}

json summary_json(const MetricSummary& s) {
  return {{"mean", opt_json(s.mean)}, {"std", opt_json(s.stddev)}, {"defined", s.defined}, {"excluded", s.excluded}};
}

void warn_skipped(const BuildResult& built, std::ostream& err) {
  for (const auto& s : built.skipped) err << "warning: skipping segment " << s.source_id << ": " << s.reason << '\n';
}

BuildResult load_dataset(const std::filesystem::path& path, const PreprocessConfig& pre, std::ostream& err) {
  auto built = build_dataset(load_segments_csv(path), pre);
  warn_skipped(built, err);
  if (built.dataset.segments.empty()) throw Error(ErrorCode::DegenerateDataset, "no usable segments in " + path.string());
  return built;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f << text;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return 1;
}

void add_pipeline_flags(CLI::App* app, PipelineFlags& f) {
  app->add_option("--seed", f.seed, "Base random seed");
  app->add_option("--epochs", f.epochs, "Training epochs")->check(CLI::PositiveNumber);
  app->add_option("--lr", f.learning_rate, "Adam learning rate");
  app->add_option("--l1", f.l1_lambda, "L1 penalty on dense weights");
  app->add_option("--batch-size", f.batch_size, "Mini-batch size (>= 2)");
  app->add_option("--test-fraction", f.test_fraction, "Held-out fraction of the dataset");
  app->add_option("--bins", f.entropy_bins, "Histogram bins for Shannon entropy")->check(CLI::PositiveNumber);
  app->add_option("--input-dim", f.input_dim, "Network input width (features are truncated or zero-padded)")
      ->check(CLI::PositiveNumber);
  app->add_flag("--stratified", f.stratified, "Stratify the train/test split by class");
  app->add_flag("--parallel", f.parallel, "Run feature extraction / iterations on OpenMP threads");
  app->add_flag("--resample-prefilter", f.resample_prefilter, "Moving-average prefilter before resampling");
}

}  // namespace

PipelineConfig PipelineFlags::pipeline() const {
  PipelineConfig c;
  c.train.epochs = epochs;
  c.train.learning_rate = learning_rate;
  c.train.l1_lambda = l1_lambda;
  c.train.batch_size = batch_size;
  c.train.test_fraction = test_fraction;
  c.train.seed = seed;
  c.features.entropy_bins = entropy_bins;
  c.input_dim = input_dim;
  c.stratified = stratified;
  c.execution = parallel ? Execution::Parallel : Execution::Serial;
  return c;
}

PreprocessConfig PipelineFlags::preprocess() const {
  PreprocessConfig p;
  p.resample_prefilter = resample_prefilter;
  return p;
}

int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto segments = synth::generate_balanced(args.per_class, args.seed, args.noise_std, args.rate_hz,
                                                   args.duration_s);
    save_segments_csv(args.output, segments);
    out << "wrote " << segments.size() << " segments to " << args.output.string() << '\n';
    return 0;
  });
}

int cmd_featurize(const FeaturizeArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!args.model && !args.fit_pca)
      throw Error(ErrorCode::InvalidArgument, "PCA columns need --model <file> or --fit-pca");
    PreprocessConfig pre = args.flags.preprocess();
    FeatureConfig feat = args.flags.pipeline().features;
    std::optional<ModelFile> model;
    if (args.model) {
      model = load_model(*args.model);
      pre = model->preprocess;
      feat = model->features;
    }
    const auto built = load_dataset(args.input, pre, err);
    const auto& segs = built.dataset.segments;
    PcaModel pca;
    if (model) {
      pca = model->pca;
    } else {
      err << "warning: --fit-pca fits PCA on the whole input; scores leak across any later train/test split\n";
      pca = pca_fit(stack_signals(segs));
    }
    const auto features = featurize(segs, pca, feat, args.flags.parallel ? Execution::Parallel : Execution::Serial);

    std::ofstream f(args.output);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + args.output.string());
    f << "label";
    for (const auto name : kFeatureNames) f << ',' << name;
    f << '\n';
    for (std::size_t i = 0; i < segs.size(); ++i) {
      f << (segs[i].label ? to_string(*segs[i].label) : std::string_view("?"));
      for (Eigen::Index j = 0; j < features.cols(); ++j) f << ',' << num(features(static_cast<Eigen::Index>(i), j));
      f << '\n';
    }
    out << "wrote " << segs.size() << " feature rows to " << args.output.string() << '\n';
    return 0;
  });
}

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const PipelineConfig config = args.flags.pipeline();
    const PreprocessConfig pre = args.flags.preprocess();
    const auto built = load_dataset(args.input, pre, err);
    const auto fp = fit_pipeline(built.dataset, config, args.flags.seed);

    ModelFile mf;
    mf.preprocess = pre;
    mf.features = config.features;
    mf.train = config.train;
    mf.pca = fp.pca;
    mf.mlp = fp.mlp;
    save_model(args.model_out, mf);

    if (args.history_out) {
      json epochs = json::array();
      for (std::size_t e = 0; e < fp.history.size(); ++e)
        epochs.push_back({{"epoch", e + 1}, {"loss", fp.history[e].loss}, {"accuracy", fp.history[e].accuracy}});
      write_text(*args.history_out, json{{"epochs", epochs}}.dump(2) + "\n");
    }
    char line[160];
    std::snprintf(line, sizeof(line), "epochs=%zu train_accuracy=%.4f test_accuracy=%.4f train_n=%zu test_n=%zu\n",
                  fp.history.size(), fp.train_accuracy, fp.test_accuracy, fp.partition.train.size(),
                  fp.partition.test.size());
    out << line;
    return 0;
  });
}

std::string format_report(const RepeatedEvalResult& r) {
  std::ostringstream s;
  const auto& m = r.averaged_metrics;
  s << "Averaged over " << r.iterations.size() << " iteration(s); metrics from the averaged confusion matrix\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-6s %-10s %-12s %-12s %-9s %-9s\n", "Class", "Precision", "Sensitivity",
                "Specificity", "F1 Score", "Accuracy");
  s << line;
  for (const auto c : kAllClasses) {
    const auto& pc = m.per_class[static_cast<std::size_t>(class_index(c))];
    std::snprintf(line, sizeof(line), "%-6s %-10s %-12s %-12s %-9s %-9s\n", std::string(to_string(c)).c_str(),
                  fixed(pc.precision).c_str(), fixed(pc.sensitivity).c_str(), fixed(pc.specificity).c_str(),
                  fixed(pc.f1).c_str(), fixed(m.accuracy).c_str());
    s << line;
  }
  s << "\nAveraged confusion matrix (rows: true, columns: predicted)\n";
  std::snprintf(line, sizeof(line), "%-6s", "");
  s << line;
  for (const auto c : kAllClasses) {
    std::snprintf(line, sizeof(line), " %9s", std::string(to_string(c)).c_str());
    s << line;
  }
  s << '\n';
  for (const auto t : kAllClasses) {
    std::snprintf(line, sizeof(line), "%-6s", std::string(to_string(t)).c_str());
    s << line;
    for (const auto p : kAllClasses) {
      std::snprintf(line, sizeof(line), " %9.2f",
                    r.averaged_cm.counts[static_cast<std::size_t>(class_index(t))][static_cast<std::size_t>(class_index(p))]);
      s << line;
    }
    s << '\n';
  }
  s << "\nPer-iteration mean +/- std (undefined values excluded)\n";
  const auto pm = [](const MetricSummary& x) {
    std::string v = fixed(x.mean) + " +/- " + fixed(x.stddev);
    if (x.excluded) v += " (" + std::to_string(x.excluded) + " excluded)";
    return v;
  };
  s << "accuracy " << pm(r.accuracy) << '\n';
  for (const auto c : kAllClasses) {
    const auto& pc = r.per_iteration[static_cast<std::size_t>(class_index(c))];
    s << to_string(c) << ": precision " << pm(pc.precision) << ", sensitivity " << pm(pc.sensitivity)
      << ", specificity " << pm(pc.specificity) << ", f1 " << pm(pc.f1) << '\n';
  }
  return s.str();
}

std::string results_json(const RepeatedEvalResult& r, const EvalArgs& args) {
  json per_iter = json::array();
  for (const auto& it : r.iterations)
    per_iter.push_back({{"seed", it.seed}, {"confusion_matrix", cm_json(it.cm)}, {"metrics", metrics_json(it.metrics)}});
  json summary_per_class = json::object();
  for (const auto c : kAllClasses) {
    const auto& pc = r.per_iteration[static_cast<std::size_t>(class_index(c))];
    summary_per_class[std::string(to_string(c))] = {{"precision", summary_json(pc.precision)},
                                                    {"sensitivity", summary_json(pc.sensitivity)},
                                                    {"specificity", summary_json(pc.specificity)},
                                                    {"f1", summary_json(pc.f1)}};
  }
  const auto cfg = args.flags.pipeline();
  json doc = {
      {"format", "ecgnn-eval-results"},
      {"version", 1},
      {"class_order", {"NSR", "SB", "ST", "VF", "AF"}},
      {"iterations", r.iterations.size()},
      {"base_seed", args.flags.seed},
      {"config",
       {{"epochs", cfg.train.epochs},
        {"learning_rate", cfg.train.learning_rate},
        {"l1_lambda", cfg.train.l1_lambda},
        {"batch_size", cfg.train.batch_size},
        {"test_fraction", cfg.train.test_fraction},
        {"entropy_bins", cfg.features.entropy_bins},
        {"input_dim", cfg.input_dim},
        {"stratified", cfg.stratified}}},
      {"averaged", {{"confusion_matrix", cm_json(r.averaged_cm)}, {"metrics", metrics_json(r.averaged_metrics)}}},
      {"per_iteration_summary", {{"accuracy", summary_json(r.accuracy)}, {"per_class", summary_per_class}}},
      {"per_iteration", per_iter},
  };
  return doc.dump(2) + "\n";
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto built = load_dataset(args.input, args.flags.preprocess(), err);
    const auto result = repeated_eval(built.dataset, args.flags.pipeline(), args.iterations, args.flags.seed);
    const auto report = format_report(result);
    out << report;
    if (args.report_out) write_text(*args.report_out, report);
    if (args.results_out) write_text(*args.results_out, results_json(result, args));
    return 0;
  });
}

int cmd_predict(const PredictArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ModelFile mf = load_model(args.model);
    const auto built = load_dataset(args.input, mf.preprocess, err);
    const auto& segs = built.dataset.segments;
    for (const auto& s : segs)
      if (s.signal.size() != mf.pca.dim())
        throw Error(ErrorCode::LengthMismatch, "segment " + s.source_id + " has " + std::to_string(s.signal.size()) +
                                                   " samples after preprocessing; model expects " +
                                                   std::to_string(mf.pca.dim()));
    const Eigen::MatrixXd x = adapt_feature_width(
        featurize(segs, mf.pca, mf.features, args.parallel ? Execution::Parallel : Execution::Serial),
        mf.mlp.input_dim);
    const Eigen::MatrixXd probs = forward_infer(mf.mlp, x);

    std::ofstream file;
    if (args.output) {
      file.open(*args.output);
      if (!file) throw Error(ErrorCode::IoError, "cannot write " + args.output->string());
    }
    std::ostream& dst = args.output ? static_cast<std::ostream&>(file) : out;
    dst << "source_id,actual,predicted,p_NSR,p_SB,p_ST,p_VF,p_AF\n";
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const Eigen::RowVectorXd p = probs.row(static_cast<Eigen::Index>(i));
      const int cls = argmax(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
      dst << segs[i].source_id << ',' << (segs[i].label ? to_string(*segs[i].label) : std::string_view("?")) << ','
          << to_string(class_from_index(cls));
      for (Eigen::Index c = 0; c < p.size(); ++c) dst << ',' << num(p(c));
      dst << '\n';
    }
    return 0;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"ecgnn: ECG rhythm classification with a compact neural network"};
  app.set_config("--config", "", "TOML/INI file with option defaults; command-line flags take precedence");
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a balanced synthetic segment CSV");
  g->add_option("-o,--output", gen.output, "Output segment CSV")->required();
  g->add_option("--per-class", gen.per_class, "Segments per class")->check(CLI::PositiveNumber);
  g->add_option("--seed", gen.seed, "Random seed");
  g->add_option("--noise", gen.noise_std, "Noise standard deviation relative to the R amplitude");
  g->add_option("--rate", gen.rate_hz, "Sampling rate in Hz")->check(CLI::PositiveNumber);
  g->add_option("--duration", gen.duration_s, "Segment duration in seconds")->check(CLI::PositiveNumber);

  FeaturizeArgs feat;
  auto* f = app.add_subcommand("featurize", "Write label + 17 feature columns per segment");
  f->add_option("input", feat.input, "Segment CSV")->required()->check(CLI::ExistingFile);
  f->add_option("-o,--output", feat.output, "Feature CSV")->required();
  f->add_option("--model", feat.model, "Model file supplying PCA and preprocessing constants");
  f->add_flag("--fit-pca", feat.fit_pca, "Fit PCA on the whole input (leaks across splits)");
  add_pipeline_flags(f, feat.flags);

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Split, fit PCA, train, and save a model");
  t->add_option("input", tr.input, "Labeled segment CSV")->required()->check(CLI::ExistingFile);
  t->add_option("-o,--output", tr.model_out, "Model file to write")->required();
  t->add_option("--history", tr.history_out, "Write per-epoch loss/accuracy as JSON");
  add_pipeline_flags(t, tr.flags);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Repeated random-split evaluation with an averaged confusion matrix");
  e->add_option("input", ev.input, "Labeled segment CSV")->required()->check(CLI::ExistingFile);
  e->add_option("--iterations", ev.iterations, "Number of split/train/test repetitions")->check(CLI::PositiveNumber);
  e->add_option("--results", ev.results_out, "Structured JSON results file");
  e->add_option("--report", ev.report_out, "Also write the text report here");
  add_pipeline_flags(e, ev.flags);

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Classify segments with a saved model");
  p->add_option("model", pr.model, "Model file")->required()->check(CLI::ExistingFile);
  p->add_option("input", pr.input, "Segment CSV (labels optional)")->required()->check(CLI::ExistingFile);
  p->add_option("-o,--output", pr.output, "Prediction CSV (default: stdout)");
  p->add_flag("--parallel", pr.parallel, "Featurize on OpenMP threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex, out, err);
  }

  if (g->parsed()) return cmd_generate(gen, out, err);
  if (f->parsed()) return cmd_featurize(feat, out, err);
  if (t->parsed()) return cmd_train(tr, out, err);
  if (e->parsed()) return cmd_eval(ev, out, err);
  if (p->parsed()) return cmd_predict(pr, out, err);
  return 2;
}

}  // namespace ecg::cli
