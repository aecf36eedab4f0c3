#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bforensics/classifiers.hpp"
#include "bforensics/config.hpp"
#include "bforensics/cv.hpp"
#include "bforensics/embed.hpp"
#include "bforensics/features.hpp"
#include "bforensics/graph.hpp"
#include "bforensics/ingest.hpp"
#include "bforensics/labeler.hpp"
#include "bforensics/metrics.hpp"
#include "bforensics/resample.hpp"
#include "bforensics/synth.hpp"

namespace bforensics {

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::filesystem::path workdir;
  std::string edges, events, profiles;
  std::optional<std::int64_t> reference_time;

  TrainConfig embed;

  ModelSpec stage1_model;
  std::optional<std::size_t> stage1_undersample;  // default: number of "others" rows
  std::size_t stage1_folds = 5;

  ModelSpec stage2_model;
  Imbalance stage2_imbalance = Imbalance::automatic;
  std::size_t stage2_folds = 10;

  unsigned workers = 1;  // CV folds and bagging; results do not depend on it
  SynthConfig synth;

  std::string artifact(const std::string& name) const { return (workdir / name).string(); }

  void validate() const {
    if (stage1_folds < 2 || stage2_folds < 2) throw ConfigError("CV folds must be at least 2");
    if (workdir.empty()) throw ConfigError("workdir must be set");
    embed.validate();
    stage1_model.validate();
    stage2_model.validate();
  }
};

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "seed", "workdir", "edges", "events", "profiles", "reference_time", "workers",
      "embed.dim", "embed.samples", "embed.negatives", "embed.lr", "embed.workers",
      "stage1.model", "stage1.undersample", "stage1.folds",
      "stage2.model", "stage2.imbalance", "stage2.folds",
      "model.knn_k", "model.n_estimators", "model.max_depth", "model.lr", "model.epochs", "model.l2",
      "simulate.malicious", "simulate.maybe_malicious", "simulate.naive_self_corrector", "simulate.informed_sharer",
      "simulate.disengaged", "simulate.news_pairs", "simulate.p_in", "simulate.p_out", "simulate.epsilon",
      "simulate.max_delay", "simulate.refutation_offset", "simulate.profile_shift", "simulate.reference_time",
  };
  return keys;
}

inline PipelineConfig pipeline_config(const Config& c) {
  c.check_known(known_config_keys());
  PipelineConfig p;
  p.seed = c.require<std::uint64_t>("seed");
  p.workdir = c.get_string("workdir", "work");
  p.edges = c.get_string("edges", (p.workdir / "edges.tsv").string());
  p.events = c.get_string("events", (p.workdir / "events.jsonl").string());
  p.profiles = c.get_string("profiles", (p.workdir / "profiles.csv").string());
  if (c.has("reference_time")) p.reference_time = c.require<std::int64_t>("reference_time");
  p.workers = c.get<unsigned>("workers", default_workers());

  p.embed.dim = c.get<std::size_t>("embed.dim", 16);
  p.embed.total_samples = c.get<std::uint64_t>("embed.samples", 0);
  p.embed.negatives = c.get<std::size_t>("embed.negatives", 5);
  p.embed.initial_lr = c.get<double>("embed.lr", 0.025);
  p.embed.workers = c.get<unsigned>("embed.workers", 1);
  p.embed.seed = derive_seed(p.seed, 1);

  ModelSpec base;
  base.knn_k = c.get<std::size_t>("model.knn_k", base.knn_k);
  base.n_estimators = c.get<std::size_t>("model.n_estimators", base.n_estimators);
  base.max_depth = c.get<std::size_t>("model.max_depth", base.max_depth);
  base.lr = c.get<double>("model.lr", base.lr);
  base.epochs = c.get<std::size_t>("model.epochs", base.epochs);
  base.l2 = c.get<double>("model.l2", base.l2);
  base.workers = p.workers;

  p.stage1_model = base;
  p.stage1_model.kind = parse_model_kind(c.get_string("stage1.model", "logistic_regression"));
  p.stage1_model.seed = derive_seed(p.seed, 2);
  if (c.has("stage1.undersample")) p.stage1_undersample = c.require<std::size_t>("stage1.undersample");
  p.stage1_folds = c.get<std::size_t>("stage1.folds", 5);

  p.stage2_model = base;
  p.stage2_model.kind = parse_model_kind(c.get_string("stage2.model", "bagged_trees"));
  p.stage2_model.seed = derive_seed(p.seed, 3);
  p.stage2_imbalance = parse_imbalance(c.get_string("stage2.imbalance", "auto"));
  p.stage2_folds = c.get<std::size_t>("stage2.folds", 10);

  auto& s = p.synth;
  const char* class_keys[] = {"simulate.malicious", "simulate.maybe_malicious", "simulate.naive_self_corrector",
                              "simulate.informed_sharer", "simulate.disengaged"};
  for (std::size_t i = 0; i < 5; ++i) s.users_per_class[i] = c.get<std::size_t>(class_keys[i], s.users_per_class[i]);
  s.news_pairs = c.get<std::size_t>("simulate.news_pairs", s.news_pairs);
  s.p_in = c.get<double>("simulate.p_in", s.p_in);
  s.p_out = c.get<double>("simulate.p_out", s.p_out);
  s.epsilon = c.get<double>("simulate.epsilon", s.epsilon);
  s.max_delay = c.get<std::int64_t>("simulate.max_delay", s.max_delay);
  s.refutation_offset = c.get<std::int64_t>("simulate.refutation_offset", s.refutation_offset);
  s.profile_shift = c.get<double>("simulate.profile_shift", s.profile_shift);
  s.reference_time = c.get<std::int64_t>("simulate.reference_time", s.reference_time);
  s.seed = derive_seed(p.seed, 4);

  p.validate();
  return p;
}

namespace detail {

inline void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing artifact " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

inline void ensure_workdir(const PipelineConfig& cfg) { std::filesystem::create_directories(cfg.workdir); }

inline void require_file(const std::string& path, const std::string& what) {
  if (!std::filesystem::exists(path)) throw DataError(what + " not found: " + path);
}

}  // namespace detail

// ---------------------------------------------------------------- simulate

inline SynthData run_simulate(const PipelineConfig& cfg) {
  detail::ensure_workdir(cfg);
  SynthData data = generate(cfg.synth);
  write_synth(data, {cfg.edges, cfg.events, cfg.profiles, cfg.artifact("truth.csv")});
  return data;
}

// ---------------------------------------------------------------- label

struct LabelRun {
  CorpusLabels labels;
  nlohmann::json report;
};

inline LabelRun run_label(const PipelineConfig& cfg) {
  detail::ensure_workdir(cfg);
  detail::require_file(cfg.edges, "edge file");
  detail::require_file(cfg.events, "event file");
  const auto built = build_graph(load_edges(cfg.edges));
  const auto events = load_events(cfg.events);
  validate_events(events);
  const auto derived = derive_exposures(events, built.graph);
  LabelRun run{label_corpus(derived.exposures, events), {}};
  write_labels_csv(run.labels, cfg.artifact("labels.csv"));

  auto& r = run.report;
  r["labeled_users"] = run.labels.users.size();
  for (Behavior b : kAllBehaviors) {
    auto it = run.labels.class_counts.find(b);
    r["class_counts"][std::string(behavior_name(b))] = it == run.labels.class_counts.end() ? 0 : it->second;
  }
  r["multi_label_users"] = run.labels.multi_label_users;
  r["median_mean_disagreements"] = run.labels.median_mean_disagreements;
  r["simultaneous_exposures"] = run.labels.simultaneous_exposures;
  r["events"] = events.size();
  r["exposures"] = derived.exposures.size();
  r["unknown_sharer_events"] = derived.unknown_sharer_events;
  r["unknown_sharers"] = derived.unknown_sharers.size();
  detail::write_json(r, cfg.artifact("label_report.json"));
  return run;
}

// ---------------------------------------------------------------- graph / embed

inline GraphBuild run_build_graph(const PipelineConfig& cfg) {
  detail::ensure_workdir(cfg);
  detail::require_file(cfg.edges, "edge file");
  auto built = build_graph(load_edges(cfg.edges));
  save_snapshot(built.graph, cfg.artifact("graph.bin"));
  detail::write_json({{"nodes", built.graph.num_nodes()},
                      {"edges", built.graph.num_edges()},
                      {"self_loops_dropped", built.self_loops_dropped},
                      {"duplicates_dropped", built.duplicates_dropped}},
                     cfg.artifact("graph_report.json"));
  return built;
}

inline FollowGraph load_or_build_graph(const PipelineConfig& cfg) {
  const auto snap = cfg.artifact("graph.bin");
  if (std::filesystem::exists(snap)) return load_snapshot(snap);
  return run_build_graph(cfg).graph;
}

inline TrainStats run_embed(const PipelineConfig& cfg, const std::function<void(const TrainProgress&)>& progress = {}) {
  detail::ensure_workdir(cfg);
  const FollowGraph graph = load_or_build_graph(cfg);
  auto result = train_line2(graph, cfg.embed, progress);
  export_embeddings(result.embeddings, cfg.artifact("embeddings.csv"));
  detail::write_json({{"dim", cfg.embed.dim},
                      {"total_samples", result.stats.total_samples},
                      {"isolated_nodes", result.stats.isolated_nodes},
                      {"loss_curve", result.stats.loss_curve}},
                     cfg.artifact("embed_report.json"));
  return result.stats;
}

// ---------------------------------------------------------------- features

inline const std::vector<std::string>& stage1_class_names() {
  static const std::vector<std::string> names = {"disengaged", "others"};
  return names;
}

inline const std::vector<std::string>& stage2_class_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (Behavior b : kEngagedBehaviors) v.emplace_back(behavior_name(b));
    return v;
  }();
  return names;
}

struct StageData {
  Dataset data;
  std::vector<std::string> users;
  std::vector<std::string> columns;
  std::size_t unembedded = 0;       // labeled users absent from the embedding
  std::size_t imputed_profiles = 0;
};

inline ProfileTable load_profiles_for(const PipelineConfig& cfg) {
  detail::require_file(cfg.profiles, "profile file");
  return load_profiles(cfg.profiles, cfg.reference_time);
}

// Stage 1: every labeled user, embedding-only features, disengaged (0) vs
// others (1). Stage 2: engaged users only, embedding plus profile features,
// classes in malicious..informed_sharer order.
inline StageData build_stage_data(int stage, std::span<const LabeledUser> labels, const EmbeddingMatrix& emb,
                                  const ProfileTable* profiles) {
  StageData out;
  const auto index = emb.index();
  std::vector<int> y;
  for (const auto& u : labels) {
    if (stage == 2 && u.final_label == Behavior::disengaged) continue;
    if (!index.count(u.user)) {
      ++out.unembedded;
      continue;
    }
    out.users.push_back(u.user);
    if (stage == 1) y.push_back(u.final_label == Behavior::disengaged ? 0 : 1);
    else y.push_back(*likert_code(u.final_label) - 1);
  }
  auto fm = fuse(emb, stage == 2 ? profiles : nullptr, out.users);
  out.columns = fm.column_names;
  out.imputed_profiles = fm.imputed_profiles;
  out.data = {std::move(fm.x), std::move(y), stage == 1 ? stage1_class_names() : stage2_class_names()};
  return out;
}

inline void run_features(const PipelineConfig& cfg) {
  const auto labels = read_labels_csv(cfg.artifact("labels.csv"));
  const auto emb = import_embeddings(cfg.artifact("embeddings.csv"));
  const auto profiles = load_profiles_for(cfg);
  for (int stage : {1, 2}) {
    const auto sd = build_stage_data(stage, labels, emb, &profiles);
    FeatureMatrix fm{sd.data.x, sd.users, sd.columns, sd.imputed_profiles};
    std::vector<std::string> names;
    for (int c : sd.data.y) names.push_back(sd.data.class_names[static_cast<std::size_t>(c)]);
    write_features_csv(fm, names, cfg.artifact("features_stage" + std::to_string(stage) + ".csv"));
  }
}

// ---------------------------------------------------------------- stages

struct StageResult {
  EvalReport report;
  std::unique_ptr<Classifier> model;
  Scaler scaler;
  nlohmann::json report_json;
};

inline nlohmann::json model_artifact(const Classifier& model, const Scaler& scaler, const StageData& sd) {
  return {{"classifier", model.to_json()},
          {"scaler", scaler_to_json(scaler)},
          {"class_names", sd.data.class_names},
          {"columns", sd.columns}};
}

inline std::unique_ptr<Classifier> fit_final(const ModelSpec& spec, Imbalance imbalance, Dataset data, Scaler& scaler,
                                             std::uint64_t seed) {
  scaler = normalize_fit(data.x);
  data.x = normalize_apply(scaler, std::move(data.x));
  ModelSpec s = spec;
  const Imbalance strategy = resolve_imbalance(imbalance, spec.kind);
  if (strategy == Imbalance::class_weight) s.class_weight = ClassWeight::balanced;
  if (strategy == Imbalance::smote) data = smote(data, seed);
  return fit_model(s, data);
}

inline StageResult run_stage1(const PipelineConfig& cfg) {
  const auto labels = read_labels_csv(cfg.artifact("labels.csv"));
  const auto emb = import_embeddings(cfg.artifact("embeddings.csv"));
  auto sd = build_stage_data(1, labels, emb, nullptr);
  const auto counts = sd.data.class_counts();
  // Disengaged users are undersampled once, before cross-validation.
  const std::size_t target = std::min(cfg.stage1_undersample.value_or(counts[1]), counts[0]);
  Dataset data = undersample(sd.data, 0, target, derive_seed(cfg.seed, 5));
  for (auto c : data.class_counts()) {
    if (c < cfg.stage1_folds) {
      throw DataError("stage1: a class has " + std::to_string(c) + " rows, fewer than K=" + std::to_string(cfg.stage1_folds));
    }
  }
  EvalOptions opt;
  opt.folds = cfg.stage1_folds;
  opt.imbalance = Imbalance::none;
  opt.seed = derive_seed(cfg.seed, 6);
  opt.workers = cfg.workers;

  StageResult r;
  r.report = evaluate(cfg.stage1_model, data, opt);
  r.model = fit_final(cfg.stage1_model, Imbalance::none, data, r.scaler, opt.seed);

  auto& j = r.report_json;
  j["model"] = model_kind_name(cfg.stage1_model.kind);
  j["folds"] = cfg.stage1_folds;
  j["rows"] = data.rows();
  j["disengaged_before_undersampling"] = counts[0];
  j["undersample_target"] = target;
  j["unembedded_users"] = sd.unembedded;
  j["report"] = report_to_json(r.report);
  detail::write_json(j, cfg.artifact("stage1_report.json"));
  write_report_csv(r.report, cfg.artifact("stage1_report.csv"), std::string(model_kind_name(cfg.stage1_model.kind)));
  if (r.report.roc) write_roc_csv(*r.report.roc, cfg.artifact("stage1_roc.csv"));
  sd.data = std::move(data);
  detail::write_json(model_artifact(*r.model, r.scaler, sd), cfg.artifact("stage1_model.json"));
  return r;
}

struct Stage2Result : StageResult {
  EvalReport majority;
  EvalReport random;
};

inline Stage2Result run_stage2(const PipelineConfig& cfg,
                               std::function<void(std::size_t, const Dataset&)> on_fold = {}) {
  detail::require_file(cfg.artifact("stage1_model.json"), "stage-1 model (run stage1 first)");
  const auto labels = read_labels_csv(cfg.artifact("labels.csv"));
  const auto emb = import_embeddings(cfg.artifact("embeddings.csv"));
  const auto profiles = load_profiles_for(cfg);
  const auto sd = build_stage_data(2, labels, emb, &profiles);
  for (auto c : sd.data.class_counts()) {
    if (c < cfg.stage2_folds) {
      throw DataError("stage2: a class has " + std::to_string(c) + " rows, fewer than K=" + std::to_string(cfg.stage2_folds));
    }
  }
  EvalOptions opt;
  opt.folds = cfg.stage2_folds;
  opt.imbalance = cfg.stage2_imbalance;
  opt.seed = derive_seed(cfg.seed, 7);
  opt.workers = cfg.workers;
  opt.on_fold = [&](std::size_t f, const Dataset& train) {
    for (const auto& name : train.class_names) {
      if (name == behavior_name(Behavior::disengaged)) throw InvariantError("stage2: disengaged class in training fold");
    }
    if (on_fold) on_fold(f, train);
  };

  Stage2Result r;
  r.report = evaluate(cfg.stage2_model, sd.data, opt);
  EvalOptions base_opt = opt;
  base_opt.imbalance = Imbalance::none;
  base_opt.on_fold = {};
  ModelSpec majority_spec;
  majority_spec.kind = ModelKind::majority_baseline;
  r.majority = evaluate(majority_spec, sd.data, base_opt);
  ModelSpec random_spec;
  random_spec.kind = ModelKind::random_baseline;
  random_spec.seed = derive_seed(cfg.seed, 8);
  r.random = evaluate(random_spec, sd.data, base_opt);
  r.model = fit_final(cfg.stage2_model, cfg.stage2_imbalance, sd.data, r.scaler, opt.seed);

  auto& j = r.report_json;
  j["model"] = model_kind_name(cfg.stage2_model.kind);
  j["folds"] = cfg.stage2_folds;
  j["rows"] = sd.data.rows();
  j["imbalance"] = static_cast<int>(resolve_imbalance(cfg.stage2_imbalance, cfg.stage2_model.kind));
  j["unembedded_users"] = sd.unembedded;
  j["imputed_profiles"] = sd.imputed_profiles;
  j["report"] = report_to_json(r.report);
  j["baseline_majority"] = report_to_json(r.majority);
  j["baseline_random"] = report_to_json(r.random);
  detail::write_json(j, cfg.artifact("stage2_report.json"));
  const std::string model_name(model_kind_name(cfg.stage2_model.kind));
  write_report_csv(r.report, cfg.artifact("stage2_report.csv"), model_name);
  detail::write_json(model_artifact(*r.model, r.scaler, sd), cfg.artifact("stage2_model.json"));
  return r;
}

// ---------------------------------------------------------------- predict

inline constexpr std::string_view kUnpredictable = "unpredictable";

struct Prediction {
  std::string user;
  std::string predicted_class;        // kUnpredictable when the user has no embedding
  std::optional<double> stage1_score;  // probability of "others"
};

struct LoadedModel {
  std::unique_ptr<Classifier> classifier;
  Scaler scaler;
  std::vector<std::string> class_names;
  std::size_t columns = 0;
};

inline LoadedModel load_model_artifact(const std::string& path) {
  const auto j = detail::read_json(path);
  try {
    LoadedModel m{load_classifier(j.at("classifier")), scaler_from_json(j.at("scaler")),
                  j.at("class_names").get<std::vector<std::string>>(), j.at("columns").size()};
    if (m.scaler.cols() != m.columns) throw DataError(path + ": scaler width does not match columns");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

// Stage 1 routes each user to disengaged or others; others get the stage-2
// class. Users missing from the embedding are reported as unpredictable.
inline std::vector<Prediction> predict_users(const PipelineConfig& cfg, std::span<const std::string> users) {
  const auto m1 = load_model_artifact(cfg.artifact("stage1_model.json"));
  const auto m2 = load_model_artifact(cfg.artifact("stage2_model.json"));
  const auto emb = import_embeddings(cfg.artifact("embeddings.csv"));
  const auto profiles = load_profiles_for(cfg);
  const auto index = emb.index();
  std::vector<std::string> known;
  for (const auto& u : users) {
    if (index.count(u)) known.push_back(u);
  }
  auto f1 = fuse(emb, nullptr, known);
  auto f2 = fuse(emb, &profiles, known);
  if (f1.x.cols() != m1.columns || f2.x.cols() != m2.columns) {
    throw DataError("predict: feature width does not match the trained models");
  }
  const Matrix s1 = m1.classifier->predict_scores(normalize_apply(m1.scaler, std::move(f1.x)));
  const Matrix s2 = m2.classifier->predict_scores(normalize_apply(m2.scaler, std::move(f2.x)));

  std::vector<Prediction> out;
  std::size_t k = 0;
  for (const auto& u : users) {
    if (!index.count(u)) {
      out.push_back({u, std::string(kUnpredictable), std::nullopt});
      continue;
    }
    Prediction p{u, {}, s1(k, 1)};
    if (argmax(s1.row(k)) == 0) p.predicted_class = m1.class_names[0];
    else p.predicted_class = m2.class_names[static_cast<std::size_t>(argmax(s2.row(k)))];
    out.push_back(std::move(p));
    ++k;
  }
  return out;
}

inline void write_predictions_csv(std::span<const Prediction> preds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out.precision(17);
  out << "user_id,predicted_class,stage1_score\n";
  for (const auto& p : preds) {
    out << p.user << ',' << p.predicted_class << ',';
    if (p.stage1_score) out << *p.stage1_score;
    out << '\n';
  }
}

// ---------------------------------------------------------------- report

// Plain-text digest of whatever stage reports exist in the workdir.
inline std::string run_report(const PipelineConfig& cfg) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  if (std::filesystem::exists(cfg.artifact("label_report.json"))) {
    const auto j = detail::read_json(cfg.artifact("label_report.json"));
    out << "labels: " << j["labeled_users"].get<std::size_t>() << " users\n";
    for (const auto& [k, v] : j["class_counts"].items()) out << "  " << k << ": " << v.get<std::size_t>() << '\n';
  }
  auto stage = [&](const std::string& name, const nlohmann::json& r) {
    out << name << ": accuracy " << r["accuracy"].get<double>() << ", weighted F1 " << r["weighted_f1"].get<double>();
    if (r.contains("auc")) out << ", AUC " << r["auc"].get<double>();
    out << '\n';
  };
  if (std::filesystem::exists(cfg.artifact("stage1_report.json"))) {
    const auto j = detail::read_json(cfg.artifact("stage1_report.json"));
    stage("stage1 " + j["model"].get<std::string>(), j["report"]);
  }
  if (std::filesystem::exists(cfg.artifact("stage2_report.json"))) {
    const auto j = detail::read_json(cfg.artifact("stage2_report.json"));
    stage("stage2 " + j["model"].get<std::string>(), j["report"]);
    stage("stage2 majority baseline", j["baseline_majority"]);
    stage("stage2 random baseline", j["baseline_random"]);
    const auto& pc = j["report"]["per_class"];
    for (const auto& c : pc) {
      out << "  " << c["class"].get<std::string>() << ": precision ";
      if (c["precision"].is_null()) out << "-";
      else out << c["precision"].get<double>();
      out << ", recall ";
      if (c["recall"].is_null()) out << "-";
      else out << c["recall"].get<double>();
      out << '\n';
    }
  }
  const std::string text = out.str();
  std::ofstream f(cfg.artifact("report.txt"));
  f << text;
  return text;
}

}  // namespace bforensics
