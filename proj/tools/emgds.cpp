// emgds: synthetic corpus generation, feature extraction, single/dual-stage
// training and evaluation, and the class-grouping dendrogram.
//
// Exit codes: 0 success, 1 runtime or data error, 2 usage error.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "emgds/emgds.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::uint64_t seed = 42;
  bool verbose = false;
};

void write_text(const fs::path& path, const std::string& text) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw emgds::Error(emgds::ErrorCode::IoError, "cannot write '" + path.string() + "'");
  const auto n = std::fwrite(text.data(), 1, text.size(), f);
  const bool ok = std::fclose(f) == 0 && n == text.size();
  if (!ok) throw emgds::Error(emgds::ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

std::string codes(const std::vector<emgds::Activity>& classes) {
  std::string out = "{";
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (i) out += ',';
    out += emgds::activity_code(classes[i]);
  }
  return out + "}";
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

// --- synth -------------------------------------------------------------------

struct SynthOptions {
  std::string out;
  emgds::SynthConfig cfg;
};

void add_synth(CLI::App& app, SynthOptions& o) {
  auto* cmd = app.add_subcommand("synth", "Write a seeded synthetic sEMG corpus as CSV");
  cmd->add_option("--out", o.out, "Output corpus CSV")->required();
  cmd->add_option("--subjects", o.cfg.subjects, "Number of subjects")->capture_default_str();
  cmd->add_option("--reps", o.cfg.reps_per_activity, "Repetitions per activity")->capture_default_str();
  cmd->add_option("--rate", o.cfg.rate_hz, "Sampling rate in Hz")->capture_default_str();
  cmd->add_option("--duration", o.cfg.duration_s, "Recording length in seconds")->capture_default_str();
  cmd->add_option("--power-scale", o.cfg.power_rms_scale,
                  "Envelope ratio of power to precision grasps")
      ->capture_default_str();
}

int run_synth(SynthOptions o, const GlobalOptions& g) {
  o.cfg.seed = g.seed;
  try {
    o.cfg.validate();
  } catch (const emgds::Error& e) {
    throw UsageError(e.what());
  }
  const auto corpus = emgds::synth_corpus(o.cfg);
  emgds::write_csv(corpus, o.out);
  const std::size_t samples = corpus.recordings.front().size();
  std::cout << "synth: subjects=" << o.cfg.subjects << " reps=" << o.cfg.reps_per_activity
            << " rate=" << o.cfg.rate_hz << " duration=" << o.cfg.duration_s
            << " power_scale=" << o.cfg.power_rms_scale << " seed=" << o.cfg.seed << "\n"
            << "wrote " << corpus.recordings.size() << " recordings, " << samples
            << " samples per channel, " << corpus.recordings.size() * samples << " rows to "
            << o.out << "\n";
  return 0;
}

// --- features ----------------------------------------------------------------

struct FeaturesOptions {
  std::string in, out, window = "full";
  int ar_order = 4;
  double rate = 500.0;
};

void add_features(CLI::App& app, FeaturesOptions& o) {
  auto* cmd = app.add_subcommand("features", "Extract time-domain features from a corpus CSV");
  cmd->add_option("--in", o.in, "Input corpus CSV")->required();
  cmd->add_option("--out", o.out, "Output features CSV")->required();
  cmd->add_option("--ar-order", o.ar_order, "Autoregressive model order")->capture_default_str();
  cmd->add_option("--window", o.window, "full or sliding:<len>:<step>")->capture_default_str();
  cmd->add_option("--rate", o.rate, "Sampling rate of the corpus in Hz")->capture_default_str();
}

int run_features(const FeaturesOptions& o, const GlobalOptions&) {
  emgds::FeatureConfig cfg;
  cfg.ar_order = o.ar_order;
  emgds::Window window;
  try {
    cfg.validate();
    window = emgds::parse_window(o.window);
  } catch (const emgds::Error& e) {
    throw UsageError(e.what());
  }
  if (!(o.rate > 0.0)) throw UsageError("--rate must be positive");
  const auto corpus = emgds::ingest_csv(o.in, o.rate);
  emgds::FeatureTable table{cfg, emgds::extract(corpus, cfg, window)};
  emgds::write_features_csv(table, o.out);
  std::cout << "features: ar_order=" << cfg.ar_order << " window=" << emgds::describe_window(window)
            << "\nwrote " << table.rows.size() << " rows x " << cfg.dimension() << " features from "
            << corpus.recordings.size() << " recordings to " << o.out << "\n";
  return 0;
}

// --- shared training/evaluation helpers -------------------------------------

struct SplitDescriptor {
  std::string protocol = "holdout";
  double train_fraction = 0.7;
  int k = 5;
  int fold = 0;
  std::uint64_t seed = 42;

  json to_json() const {
    if (protocol == "kfold") return {{"protocol", "kfold"}, {"k", k}, {"fold", fold}, {"seed", seed}};
    return {{"protocol", "holdout"}, {"train_fraction", train_fraction}, {"seed", seed}};
  }

  static SplitDescriptor from_json(const json& j) {
    SplitDescriptor d;
    try {
      d.protocol = j.at("protocol").get<std::string>();
      d.seed = j.at("seed").get<std::uint64_t>();
      if (d.protocol == "kfold") {
        d.k = j.at("k").get<int>();
        d.fold = j.at("fold").get<int>();
      } else if (d.protocol == "holdout") {
        d.train_fraction = j.at("train_fraction").get<double>();
      } else {
        throw emgds::Error(emgds::ErrorCode::SchemaError, "unknown split protocol");
      }
    } catch (const json::exception& e) {
      throw emgds::Error(emgds::ErrorCode::SchemaError, std::string("split descriptor: ") + e.what());
    }
    return d;
  }

  emgds::SplitIndices apply(std::span<const emgds::RecordingKey> keys) const {
    if (protocol == "kfold") return emgds::kfold_fold(keys, emgds::KFold{k, seed}, fold);
    return emgds::holdout_split(keys, emgds::Holdout{train_fraction, seed});
  }
};

std::vector<emgds::FeatureVector> select_subject(std::vector<emgds::FeatureVector> rows,
                                                 const std::optional<std::string>& subject) {
  if (!subject) return rows;
  std::vector<emgds::FeatureVector> out;
  for (auto& r : rows)
    if (r.key.subject == *subject) out.push_back(std::move(r));
  if (out.empty()) {
    throw emgds::Error(emgds::ErrorCode::EmptyCorpus, "no rows for subject '" + *subject + "'");
  }
  return out;
}

std::vector<emgds::FeatureVector> pick(const std::vector<emgds::FeatureVector>& rows,
                                       const std::vector<std::size_t>& idx) {
  std::vector<emgds::FeatureVector> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(rows[i]);
  return out;
}

std::vector<emgds::RecordingKey> keys_of(const std::vector<emgds::FeatureVector>& rows) {
  std::vector<emgds::RecordingKey> keys;
  keys.reserve(rows.size());
  for (const auto& r : rows) keys.push_back(r.key);
  return keys;
}

json retain_json(const emgds::Retain& r) {
  if (const auto* c = std::get_if<emgds::ComponentCount>(&r)) return {{"pca_dims", c->count}};
  return {{"pca_var", std::get<emgds::VarianceFraction>(r).fraction}};
}

// --- train -------------------------------------------------------------------

struct TrainOptions {
  std::string features, mode = "dual", model, report, kernel = "rbf", gamma = "auto";
  double c = 1.0, tol = 1e-3, coef0 = 1.0;
  int degree = 3, max_passes = 200;
  std::optional<double> pca_var;
  std::optional<std::size_t> pca_dims;
  double split = 0.7;
  std::optional<int> kfold;
  int fold = 0;
  std::optional<std::string> subject;
};

void add_train(CLI::App& app, TrainOptions& o) {
  auto* cmd = app.add_subcommand("train", "Train a single- or dual-stage classifier");
  cmd->add_option("--features", o.features, "Features CSV")->required();
  cmd->add_option("--mode", o.mode, "single or dual")
      ->check(CLI::IsMember({"single", "dual"}))
      ->capture_default_str();
  cmd->add_option("--model", o.model, "Output model JSON")->required();
  cmd->add_option("--report", o.report, "Output train report JSON (default: <model>.train.json)");
  cmd->add_option("--kernel", o.kernel, "rbf, linear or poly")
      ->check(CLI::IsMember({"rbf", "linear", "poly"}))
      ->capture_default_str();
  cmd->add_option("--c", o.c, "SVM regularization constant")->capture_default_str();
  cmd->add_option("--gamma", o.gamma, "RBF gamma or 'auto'")->capture_default_str();
  cmd->add_option("--degree", o.degree, "Polynomial kernel degree")->capture_default_str();
  cmd->add_option("--coef0", o.coef0, "Polynomial kernel offset")->capture_default_str();
  cmd->add_option("--tol", o.tol, "SMO KKT tolerance")->capture_default_str();
  cmd->add_option("--max-passes", o.max_passes, "SMO pass limit")->capture_default_str();
  auto* var = cmd->add_option("--pca-var", o.pca_var, "Retained variance fraction (default 0.95)");
  auto* dims = cmd->add_option("--pca-dims", o.pca_dims, "Fixed number of PCA components");
  var->excludes(dims);
  auto* split = cmd->add_option("--split", o.split, "Holdout train fraction")->capture_default_str();
  auto* kfold = cmd->add_option("--kfold", o.kfold, "Use k-fold splitting with this k");
  split->excludes(kfold);
  cmd->add_option("--fold", o.fold, "Held-out fold index for --kfold")->capture_default_str();
  cmd->add_option("--subject", o.subject, "Train on one subject only");
}

emgds::Hyperparams hyper_from(const TrainOptions& o, std::uint64_t seed) {
  emgds::Hyperparams h;
  if (o.pca_dims) h.retain = emgds::ComponentCount{*o.pca_dims};
  else h.retain = emgds::VarianceFraction{o.pca_var.value_or(0.95)};
  if (o.kernel == "linear") {
    h.svm.kernel = emgds::LinearKernel{};
  } else if (o.kernel == "poly") {
    if (o.degree < 1) throw UsageError("--degree must be >= 1");
    h.svm.kernel = emgds::PolynomialKernel{o.degree, o.coef0};
  } else if (o.gamma == "auto") {
    h.svm.kernel = emgds::RbfKernel{};
  } else {
    double g = 0.0;
    try {
      std::size_t pos = 0;
      g = std::stod(o.gamma, &pos);
      if (pos != o.gamma.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw UsageError("--gamma must be a positive number or 'auto'");
    }
    if (!(g > 0.0)) throw UsageError("--gamma must be positive");
    h.svm.kernel = emgds::RbfKernel{g};
  }
  if (!(o.c > 0.0)) throw UsageError("--c must be positive");
  if (!(o.tol > 0.0)) throw UsageError("--tol must be positive");
  if (o.max_passes < 1) throw UsageError("--max-passes must be >= 1");
  if (auto* vf = std::get_if<emgds::VarianceFraction>(&h.retain);
      vf && !(vf->fraction > 0.0 && vf->fraction <= 1.0)) {
    throw UsageError("--pca-var must lie in (0, 1]");
  }
  if (auto* cc = std::get_if<emgds::ComponentCount>(&h.retain); cc && cc->count < 1) {
    throw UsageError("--pca-dims must be >= 1");
  }
  h.svm.c = o.c;
  h.svm.tol = o.tol;
  h.svm.max_passes = o.max_passes;
  h.svm.seed = seed;
  return h;
}

json hyper_json(const emgds::Hyperparams& h) {
  json j = retain_json(h.retain);
  j["kernel"] = emgds::to_json(h.svm.kernel);
  j["c"] = h.svm.c;
  j["tol"] = h.svm.tol;
  j["max_passes"] = h.svm.max_passes;
  j["seed"] = h.svm.seed;
  return j;
}

int run_train(const TrainOptions& o, const GlobalOptions& g) {
  SplitDescriptor split;
  split.seed = g.seed;
  if (o.kfold) {
    if (*o.kfold < 2) throw UsageError("--kfold must be >= 2");
    if (o.fold < 0 || o.fold >= *o.kfold) throw UsageError("--fold must lie in [0, k)");
    split.protocol = "kfold";
    split.k = *o.kfold;
    split.fold = o.fold;
  } else {
    if (!(o.split > 0.0 && o.split < 1.0)) throw UsageError("--split must lie in (0, 1)");
    split.train_fraction = o.split;
  }
  const auto hyper = hyper_from(o, g.seed);

  auto table = emgds::read_features_csv(o.features);
  const auto rows = select_subject(std::move(table.rows), o.subject);
  const auto keys = keys_of(rows);
  const auto idx = split.apply(keys);
  const auto train = pick(rows, idx.train);

  emgds::ModelDocument doc;
  json report;
  if (o.mode == "single") {
    auto m = emgds::train_single(train, hyper);
    report["retained_dims"] = {{"single", m.pca.output_dim()}};
    json sv = json::array();
    for (const auto& b : m.classifier.models) sv.push_back(b.support_count());
    report["support_vectors"] = {{"single", sv}};
    doc.model = std::move(m);
  } else {
    auto m = emgds::train_dual(train, hyper);
    report["retained_dims"] = {{"stage1", m.stage1_pca.output_dim()},
                               {"power", m.power.pca.output_dim()},
                               {"precision", m.precision.pca.output_dim()}};
    json power = json::array(), precision = json::array();
    for (const auto& b : m.power.classifier.models) power.push_back(b.support_count());
    for (const auto& b : m.precision.classifier.models) precision.push_back(b.support_count());
    report["support_vectors"] = {
        {"stage1", m.stage1.support_count()}, {"power", power}, {"precision", precision}};
    doc.model = std::move(m);
  }
  const json subject = o.subject ? json(*o.subject) : json(nullptr);
  doc.metadata = {{"split", split.to_json()}, {"subject", subject}, {"hyperparameters", hyper_json(hyper)}};
  const auto train_report = emgds::evaluate(doc.model, train);

  report["format_version"] = emgds::kReportFormatVersion;
  report["mode"] = o.mode;
  report["config"] = {{"mode", o.mode},
                      {"split", split.to_json()},
                      {"subject", subject},
                      {"hyperparameters", hyper_json(hyper)},
                      {"seed", g.seed}};
  report["n_train"] = idx.train.size();
  report["n_test"] = idx.test.size();
  report["training_accuracy"] = train_report.accuracy;
  if (train_report.dual) report["training_stage1_accuracy"] = train_report.dual->stage1.accuracy();

  emgds::save_model(doc, o.model);
  const std::string report_path =
      o.report.empty() ? (fs::path(o.model).replace_extension(".train.json")).string() : o.report;
  write_text(report_path, emgds::dump_json(report));

  std::cout << "train: mode=" << o.mode << " subject=" << (o.subject ? *o.subject : "all")
            << " split=" << split.to_json().dump() << "\n"
            << "trained on " << idx.train.size() << " vectors (" << idx.test.size()
            << " held out); training accuracy " << percent(train_report.accuracy) << "\n"
            << "model: " << o.model << "\nreport: " << report_path << "\n";
  if (g.verbose) std::cerr << emgds::dump_json(report);
  return 0;
}

// --- evaluate ----------------------------------------------------------------

struct EvaluateOptions {
  std::string features, model, report;
  std::optional<std::string> compare;
  bool timestamp = false;
};

void add_evaluate(CLI::App& app, EvaluateOptions& o) {
  auto* cmd = app.add_subcommand("evaluate", "Evaluate a trained model on its held-out split");
  cmd->add_option("--features", o.features, "Features CSV used for training")->required();
  cmd->add_option("--model", o.model, "Model JSON")->required();
  cmd->add_option("--report", o.report, "Output evaluation report JSON")->required();
  cmd->add_option("--compare", o.compare, "Second model of the other mode for a side-by-side line");
  cmd->add_flag("--timestamp", o.timestamp, "Record the current UTC time in the report");
}

struct Evaluation {
  emgds::ModelDocument doc;
  SplitDescriptor split;
  json subject;
  emgds::EvalReport report;
};

Evaluation evaluate_model(const std::string& model_path, const emgds::FeatureTable& table) {
  Evaluation ev;
  ev.doc = emgds::load_model(model_path);
  if (!ev.doc.metadata.contains("split")) {
    throw emgds::Error(emgds::ErrorCode::SchemaError, "model metadata has no split descriptor");
  }
  ev.split = SplitDescriptor::from_json(ev.doc.metadata.at("split"));
  ev.subject = ev.doc.metadata.value("subject", json(nullptr));
  std::optional<std::string> subject;
  if (ev.subject.is_string()) subject = ev.subject.get<std::string>();
  const auto rows = select_subject(table.rows, subject);
  const auto keys = keys_of(rows);
  const auto idx = ev.split.apply(keys);
  ev.report = emgds::evaluate(ev.doc.model, pick(rows, idx.test));
  return ev;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int run_evaluate(const EvaluateOptions& o, const GlobalOptions& g) {
  const auto table = emgds::read_features_csv(o.features);
  const auto ev = evaluate_model(o.model, table);
  std::optional<Evaluation> other;
  if (o.compare) {
    other = evaluate_model(*o.compare, table);
    if (other->report.mode == ev.report.mode) {
      throw UsageError("--compare needs one single-stage and one dual-stage model");
    }
  }

  json report = emgds::to_json(ev.report);
  report["split"] = ev.split.to_json();
  report["seed"] = ev.split.seed;
  report["subject"] = ev.subject;
  report["granularity"] = ev.subject.is_string() ? "per-subject" : "combined";
  report["config"] = {{"mode", ev.report.mode},
                      {"hyperparameters", ev.doc.metadata.value("hyperparameters", json::object())}};
  report["timestamp"] = o.timestamp ? json(utc_now()) : json(nullptr);
  write_text(o.report, emgds::dump_json(report));

  std::cout << "evaluate: mode=" << ev.report.mode << " test vectors=" << ev.report.total
            << " accuracy=" << percent(ev.report.accuracy) << "\n";
  if (ev.report.dual) {
    const auto& s = *ev.report.dual;
    std::cout << "  stage 1 (power vs precision): " << percent(s.stage1.accuracy()) << "\n"
              << "  stage 2 power (routed / all): " << percent(s.power_routed.accuracy()) << " / "
              << percent(s.power_all.accuracy()) << "\n"
              << "  stage 2 precision (routed / all): " << percent(s.precision_routed.accuracy())
              << " / " << percent(s.precision_all.accuracy()) << "\n";
  }
  if (other) {
    const auto& single = ev.report.mode == "single" ? ev.report : other->report;
    const auto& dual = ev.report.mode == "dual" ? ev.report : other->report;
    std::cout << "compare: single=" << percent(single.accuracy) << " dual=" << percent(dual.accuracy)
              << "\n";
  }
  if (g.verbose) std::cerr << emgds::dump_json(report);
  return 0;
}

// --- dendrogram ----------------------------------------------------------------

struct DendrogramOptions {
  std::string features, linkage = "single";
  std::optional<double> pca_var;
  std::optional<std::size_t> pca_dims;
  std::optional<std::string> out, dot, newick, subject;
};

void add_dendrogram(CLI::App& app, DendrogramOptions& o) {
  auto* cmd = app.add_subcommand("dendrogram", "Cluster the classes by Mahalanobis distance");
  cmd->add_option("--features", o.features, "Features CSV")->required();
  auto* var = cmd->add_option("--pca-var", o.pca_var, "Retained variance fraction (default 0.95)");
  auto* dims = cmd->add_option("--pca-dims", o.pca_dims, "Fixed number of PCA components");
  var->excludes(dims);
  cmd->add_option("--linkage", o.linkage, "single, complete or average")
      ->check(CLI::IsMember({"single", "complete", "average"}))
      ->capture_default_str();
  cmd->add_option("--out", o.out, "Dendrogram JSON output");
  cmd->add_option("--dot", o.dot, "Graphviz DOT output");
  cmd->add_option("--newick", o.newick, "Newick output");
  cmd->add_option("--subject", o.subject, "Use one subject only");
}

int run_dendrogram(const DendrogramOptions& o, const GlobalOptions&) {
  emgds::Retain retain = emgds::VarianceFraction{o.pca_var.value_or(0.95)};
  if (o.pca_dims) retain = emgds::ComponentCount{*o.pca_dims};
  if (o.pca_var && !(*o.pca_var > 0.0 && *o.pca_var <= 1.0)) throw UsageError("--pca-var must lie in (0, 1]");
  const auto method = emgds::parse_linkage(o.linkage);

  auto table = emgds::read_features_csv(o.features);
  const auto rows = select_subject(std::move(table.rows), o.subject);
  const auto pca = emgds::fit_pca(rows, retain);
  std::vector<std::vector<double>> reduced;
  std::vector<emgds::Activity> labels;
  for (const auto& r : rows) {
    reduced.push_back(emgds::project(pca, r.values));
    labels.push_back(*r.label);
  }
  const auto sep = emgds::class_separation(reduced, labels);
  const auto tree = emgds::linkage(sep, method);

  if (o.out) write_text(*o.out, emgds::export_dendrogram(tree, emgds::DendrogramFormat::Json));
  if (o.dot) write_text(*o.dot, emgds::export_dendrogram(tree, emgds::DendrogramFormat::Dot));
  if (o.newick) write_text(*o.newick, emgds::export_dendrogram(tree, emgds::DendrogramFormat::Newick));

  const auto& root = tree.nodes[static_cast<std::size_t>(tree.root())];
  std::cout << "dendrogram: linkage=" << o.linkage << " pca_dims=" << pca.output_dim()
            << (sep.regularized ? " (covariance regularized)" : "") << "\n";
  if (!root.is_leaf()) {
    std::cout << "root split: " << codes(tree.leaves(root.left)) << " | "
              << codes(tree.leaves(root.right)) << " at height " << root.height << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emgds: dual-stage sEMG grasp classification"};
  app.require_subcommand(1);
  GlobalOptions global;
  app.add_option("--seed", global.seed, "Master seed")->capture_default_str();
  app.add_flag("-v,--verbose", global.verbose, "Echo reports to stderr");

  SynthOptions synth;
  FeaturesOptions features;
  TrainOptions train;
  EvaluateOptions evaluate;
  DendrogramOptions dendrogram;
  add_synth(app, synth);
  add_features(app, features);
  add_train(app, train);
  add_evaluate(app, evaluate);
  add_dendrogram(app, dendrogram);
  // Accept --seed after the subcommand name as well.
  for (auto* sub : app.get_subcommands({})) {
    sub->add_option("--seed", global.seed, "Master seed")->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("synth")) return run_synth(synth, global);
    if (app.got_subcommand("features")) return run_features(features, global);
    if (app.got_subcommand("train")) return run_train(train, global);
    if (app.got_subcommand("evaluate")) return run_evaluate(evaluate, global);
    if (app.got_subcommand("dendrogram")) return run_dendrogram(dendrogram, global);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const emgds::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
