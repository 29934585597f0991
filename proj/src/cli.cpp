#include "fairl/cli.hpp"

#include "fairl/detail/json_fields.hpp"
#include "fairl/experiments.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <optional>
#include <set>
#include <ostream>
#include <sstream>

namespace fairl {

namespace {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out_dir;
};

Json load_config(const GlobalOptions& g) {
  return g.config_path.empty() ? Json::object() : read_json_file(g.config_path);
}

// Writes `text` to <out_dir>/<name>, or to `out` when no directory was given.
void emit(const GlobalOptions& g, const std::string& name, const std::string& text,
          std::ostream& out) {
  if (g.out_dir.empty()) {
    out << text;
    return;
  }
  std::filesystem::create_directories(g.out_dir);
  write_text_file((std::filesystem::path(g.out_dir) / name).string(), text);
}

Json merged(Json base, const Json& overrides, const std::string& where) {
  if (!overrides.is_object()) throw std::invalid_argument(where + ": expected a JSON object");
  for (const auto& item : overrides.items()) base[item.key()] = item.value();
  return base;
}

// generate ------------------------------------------------------------------------

int run_generate(const GlobalOptions& g, const std::string& kind, std::ostream& out) {
  const Json config = load_config(g);
  auto build = [&]() -> EnvBundle {
    if (kind == "objectworld") {
      ObjectworldConfig c = objectworld_config_from_json(config);
      if (g.seed) c.seed = *g.seed;
      return generate(c);
    }
    CopConfig c = cop_config_from_json(config);
    if (g.seed) c.seed = *g.seed;
    return cop_generate(c);
  };
  const EnvBundle env = build();
  emit(g, "env.json", to_json(env).dump(2) + "\n", out);
  return 0;
}

// train -----------------------------------------------------------------------------

struct TrainJob {
  std::uint64_t seed = 0;
  ObjectworldConfig objectworld;
  LearnerSpec learner{"fairl_nn", "nn", {}};
  int n_trajectories = 125;
  int horizon = 40;
  double demo_b = 1.0;
};

TrainJob train_job_from_json(const Json& j) {
  TrainJob job;
  Json objectworld = Json::object(), learner = Json::object();
  detail::JsonFields<Json>(j, "train config")
      .get("seed", job.seed)
      .get("objectworld", objectworld)
      .get("learner", learner)
      .get("n_trajectories", job.n_trajectories)
      .get("horizon", job.horizon)
      .get("demo_b", job.demo_b)
      .finish();
  job.objectworld = objectworld_config_from_json(objectworld);
  Json learner_config = Json::object();
  detail::JsonFields<Json>(learner, "learner")
      .get("label", job.learner.label)
      .get("kind", job.learner.kind)
      .get("config", learner_config)
      .finish();
  if (job.learner.kind != "nn" && job.learner.kind != "gp") {
    throw std::invalid_argument("learner kind must be \"nn\" or \"gp\"");
  }
  if (job.learner.kind == "gp") job.learner.config.max_iter = 5000;
  job.learner.config =
      fairl_config_from_json(merged(to_json(job.learner.config), learner_config, "learner config"));
  if (job.n_trajectories < 1 || job.horizon < 1) {
    throw std::invalid_argument("n_trajectories and horizon must be >= 1");
  }
  return job;
}

Json to_json(const TrainJob& job) {
  return {{"seed", job.seed},
          {"objectworld", to_json(job.objectworld)},
          {"learner",
           {{"label", job.learner.label},
            {"kind", job.learner.kind},
            {"config", to_json(job.learner.config)}}},
          {"n_trajectories", job.n_trajectories},
          {"horizon", job.horizon},
          {"demo_b", job.demo_b}};
}

int run_train(const GlobalOptions& g, const std::optional<std::string>& kind, bool trace,
              std::ostream& out) {
  Json config = load_config(g);
  if (kind) {
    // --kind replaces the learner kind but keeps any learner settings.
    Json learner = config.contains("learner") ? config["learner"] : Json::object();
    learner["kind"] = *kind;
    config["learner"] = learner;
  }
  TrainJob job = train_job_from_json(config);
  if (g.seed) job.seed = *g.seed;
  job.objectworld.seed = derive_seed(job.seed, 1);

  const EnvBundle env = generate(job.objectworld);
  const auto demo_q = value_iteration(env.mdp, env.true_reward).q;
  const auto trajectories = sample_trajectories(env.mdp, demo_q, job.demo_b, job.n_trajectories,
                                                job.horizon, derive_seed(job.seed, 2));

  std::ostringstream trace_csv;
  trace_csv << "iteration,loglik,gradient_norm,seconds\n";
  const auto start = std::chrono::steady_clock::now();
  IterationCallback on_iteration;
  if (trace) {
    on_iteration = [&](int it, double loglik, double grad_norm) {
      const double t =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      trace_csv << it << ',' << format_number(loglik) << ',' << format_number(grad_norm) << ','
                << format_number(t) << '\n';
    };
  }

  Json params;
  Constructions c;
  TrainReport report;
  const std::uint64_t init_seed = derive_seed(job.seed, 3);
  if (job.learner.kind == "nn") {
    auto result = train_nn(env, trajectories, job.learner.config, init_seed, on_iteration);
    params = to_json(result.params);
    c = std::move(result.constructions);
    report = std::move(result.report);
  } else {
    auto result = train_gp(env, trajectories, job.learner.config, init_seed, on_iteration);
    params = to_json(result.params);
    c = std::move(result.constructions);
    report = std::move(result.report);
  }

  const Correlation corr = pearson_correlation(c.r, env.true_reward);
  Json checkpoint{{"config", to_json(job)},
                  {"kind", job.learner.kind},
                  {"params", std::move(params)},
                  {"iterations", report.iterations_run},
                  {"report", to_json(report)}};
  Json reward{{"reward", vector_to_json(c.r)},
              {"true_reward", vector_to_json(env.true_reward)},
              {"correlation", corr.value},
              {"degenerate", corr.degenerate}};

  if (g.out_dir.empty()) {
    out << checkpoint.dump(2) << '\n';
  } else {
    emit(g, "checkpoint.json", checkpoint.dump(2) + "\n", out);
    emit(g, "reward.json", reward.dump(2) + "\n", out);
    if (trace) emit(g, "trace.csv", trace_csv.str(), out);
    out << "correlation " << format_number(corr.value) << '\n';
  }
  return 0;
}

// bench / cop -------------------------------------------------------------------------

int run_bench(const GlobalOptions& g, const std::string& experiment,
              const std::optional<int>& threads, std::ostream& out) {
  Json config = load_config(g);
  if (config.contains("experiment") && config["experiment"] != experiment) {
    throw std::invalid_argument("config is for experiment '" +
                                config["experiment"].get<std::string>() + "', not '" +
                                experiment + "'");
  }
  config["experiment"] = experiment;
  ExperimentConfig c = experiment_config_from_json(config);
  if (g.seed) c.seed = *g.seed;
  if (threads) c.threads = *threads;
  emit(g, experiment + ".csv", to_csv(run_experiment(c)), out);
  return 0;
}

int run_score(const std::string& a, const std::string& b, std::ostream& out) {
  const auto x = reward_from_json(read_json_file(a));
  const auto y = reward_from_json(read_json_file(b));
  const Correlation c = pearson_correlation(x, y);
  out << format_number(c.value) << (c.degenerate ? " degenerate" : "") << '\n';
  return 0;
}

// Names the offending word when the first positional is not a subcommand.
std::string describe(const CLI::ParseError& e, int argc, const char* const* argv) {
  static const std::set<std::string> commands{"generate", "train", "bench", "cop", "score"};
  static const std::set<std::string> valued{"--seed", "--config", "--out"};
  for (int i = 1; i < argc; ++i) {
    const std::string word = argv[i];
    if (valued.count(word)) {
      ++i;
      continue;
    }
    if (word.empty() || word[0] == '-') continue;
    if (!commands.count(word)) return "unknown subcommand '" + word + "'";
    break;
  }
  return e.what();
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Function-approximation inverse reinforcement learning", "fairl"};
  app.require_subcommand(1);

  GlobalOptions g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Seed for generation, sampling and init");
  app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--out", g.out_dir, "Directory for output files (default: stdout)");

  std::string env_kind = "objectworld";
  auto* gen = app.add_subcommand("generate", "Emit an environment bundle as JSON")->fallthrough();
  gen->add_option("--kind", env_kind, "objectworld or cop")
      ->check(CLI::IsMember({"objectworld", "cop"}));

  std::string learner_kind;
  bool trace = false;
  auto* train = app.add_subcommand("train", "Train one learner on one objectworld")->fallthrough();
  auto* kind_opt = train->add_option("--kind", learner_kind, "nn or gp")
                       ->check(CLI::IsMember({"nn", "gp"}));
  train->add_flag("--trace", trace, "Write a per-iteration trace.csv (needs --out)");

  std::string experiment;
  int threads = 1;
  auto* bench = app.add_subcommand("bench", "Run an accuracy, scalability or extension sweep")
                    ->fallthrough();
  bench->add_option("experiment", experiment, "accuracy | scalability | extension")
      ->required()
      ->check(CLI::IsMember({"accuracy", "scalability", "extension"}));
  auto* bench_threads = bench->add_option("--threads", threads, "Worker threads");

  auto* cop = app.add_subcommand("cop", "Run the synthetic COP benchmark")->fallthrough();
  auto* cop_threads = cop->add_option("--threads", threads, "Worker threads");

  std::string file_a, file_b;
  auto* score = app.add_subcommand("score", "Correlation between two reward JSON files")
                    ->fallthrough();
  score->add_option("a", file_a)->required()->check(CLI::ExistingFile);
  score->add_option("b", file_b)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << app.help();
    err << "error: " << describe(e, argc, argv) << '\n';
    return 2;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*gen) return run_generate(g, env_kind, out);
    if (*train) {
      return run_train(g, *kind_opt ? std::optional(learner_kind) : std::nullopt, trace, out);
    }
    if (*bench) {
      return run_bench(g, experiment, *bench_threads ? std::optional(threads) : std::nullopt, out);
    }
    if (*cop) return run_bench(g, "cop", *cop_threads ? std::optional(threads) : std::nullopt, out);
    if (*score) return run_score(file_a, file_b, out);
  } catch (const std::invalid_argument& e) {
    err << app.help();
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace fairl
