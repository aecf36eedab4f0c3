#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bforensics/pipeline.hpp"

namespace bf = bforensics;

namespace {

std::vector<std::string> read_user_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw bf::DataError("cannot open user list " + path);
  std::vector<std::string> users;
  std::string line;
  while (std::getline(in, line)) {
    auto s = bf::detail::strip_cr(line);
    if (!s.empty()) users.emplace_back(s);
  }
  return users;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behavioral forensics: label users from share timelines and predict their class from network features"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "key = value config file (must set seed)");
  app.add_option("--set", overrides, "override a config key, e.g. --set embed.dim=32");

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic graph, event log, profiles and truth");
  auto* label = app.add_subcommand("label", "derive exposures and label users into behavior classes");
  auto* build = app.add_subcommand("build-graph", "build the follower graph and write a binary snapshot");
  auto* embed = app.add_subcommand("embed", "train second-order LINE embeddings");
  auto* features = app.add_subcommand("features", "write stage-1 and stage-2 feature matrices");
  auto* stage1 = app.add_subcommand("stage1", "cross-validate and fit disengaged vs others");
  auto* stage2 = app.add_subcommand("stage2", "cross-validate and fit the four engaged classes");
  auto* predict = app.add_subcommand("predict", "predict classes for users");
  auto* report = app.add_subcommand("report", "print a digest of the stage reports");
  for (auto* sub : {simulate, label, build, embed, features, stage1, stage2, predict, report}) sub->fallthrough();

  std::vector<std::string> users;
  std::string users_file;
  predict->add_option("--user", users, "user id to predict (repeatable)");
  predict->add_option("--users-file", users_file, "file with one user id per line");
  bool verbose = false;
  embed->add_flag("-v,--verbose", verbose, "print training progress");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    bf::Config config = config_path.empty() ? bf::Config{} : bf::Config::load(config_path);
    for (const auto& o : overrides) config.set_override(o);
    const bf::PipelineConfig cfg = bf::pipeline_config(config);

    if (simulate->parsed()) {
      const auto data = bf::run_simulate(cfg);
      std::cout << "users " << data.users.size() << ", edges " << data.n_edges << ", share events " << data.events.size() << '\n';
    } else if (label->parsed()) {
      const auto run = bf::run_label(cfg);
      std::cout << run.report.dump(2) << '\n';
    } else if (build->parsed()) {
      const auto built = bf::run_build_graph(cfg);
      std::cout << "nodes " << built.graph.num_nodes() << ", edges " << built.graph.num_edges() << '\n';
    } else if (embed->parsed()) {
      bf::PipelineConfig c = cfg;
      std::function<void(const bf::TrainProgress&)> progress;
      if (verbose) {
        if (!c.embed.log_every) c.embed.log_every = 1'000'000;
        progress = [](const bf::TrainProgress& p) {
          std::cerr << p.samples_done << "/" << p.total_samples << " lr " << p.lr << " loss " << p.running_loss << '\n';
        };
      }
      const auto stats = bf::run_embed(c, progress);
      std::cout << "samples " << stats.total_samples << ", isolated nodes " << stats.isolated_nodes << '\n';
    } else if (features->parsed()) {
      bf::run_features(cfg);
    } else if (stage1->parsed()) {
      const auto r = bf::run_stage1(cfg);
      std::cout << "accuracy " << r.report.accuracy << ", AUC " << (r.report.roc ? r.report.roc->auc : 0.0) << '\n';
    } else if (stage2->parsed()) {
      const auto r = bf::run_stage2(cfg);
      std::cout << "weighted F1 " << r.report.weighted_f1 << " (majority " << r.majority.weighted_f1 << ", random "
                << r.random.weighted_f1 << ")\n";
    } else if (predict->parsed()) {
      if (!users_file.empty()) {
        const auto more = read_user_list(users_file);
        users.insert(users.end(), more.begin(), more.end());
      }
      if (users.empty()) users = bf::import_embeddings(cfg.artifact("embeddings.csv")).node_ids;
      const auto preds = bf::predict_users(cfg, users);
      bf::write_predictions_csv(preds, cfg.artifact("predictions.csv"));
      std::cout << preds.size() << " predictions written to " << cfg.artifact("predictions.csv") << '\n';
    } else if (report->parsed()) {
      std::cout << bf::run_report(cfg);
    }
  } catch (const bf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const bf::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
