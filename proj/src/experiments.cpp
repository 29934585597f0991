#include "fairl/experiments.hpp"

#include "fairl/detail/json_fields.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace fairl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Stream tags for derive_seed.
enum : std::uint64_t {
  kTagEnv = 1,
  kTagDemo = 2,
  kTagInit = 3,
  kTagControl = 4,
  kTagSession = 5,
};

FairlConfig learner_defaults(const std::string& experiment, const std::string& kind) {
  FairlConfig c;
  if (kind == "gp") c.max_iter = 5000;
  if (experiment == "extension") {
    c.hidden_layers = {32, 32, 32};
    c.max_iter = 5000;
  }
  if (experiment == "cop") {
    c.hidden_layers = {32, 32, 32};
    c.max_iter = 2000;
    c.convergence_tol = 1e-9;
  }
  return c;
}

LearnerSpec make_spec(const std::string& experiment, std::string label, std::string kind) {
  LearnerSpec spec;
  spec.label = std::move(label);
  spec.kind = std::move(kind);
  spec.config = learner_defaults(experiment, spec.kind);
  return spec;
}

LearnerSpec learner_from_json(const Json& j, const std::string& experiment) {
  std::string label, kind = "nn";
  Json config = Json::object();
  detail::JsonFields<Json>(j, "learners[]")
      .get("label", label)
      .get("kind", kind)
      .get("config", config)
      .finish();
  if (kind != "nn" && kind != "gp") {
    throw std::invalid_argument("learner kind must be \"nn\" or \"gp\", got '" + kind + "'");
  }
  if (label.empty()) label = "fairl_" + kind;
  LearnerSpec spec = make_spec(experiment, label, kind);
  // Learner fields override the experiment's defaults for that kind.
  Json merged = to_json(spec.config);
  for (const auto& item : config.items()) merged[item.key()] = item.value();
  spec.config = fairl_config_from_json(merged);
  return spec;
}

void validate(const ExperimentConfig& c) {
  const auto& e = c.experiment;
  if (e != "accuracy" && e != "scalability" && e != "extension" && e != "cop") {
    throw std::invalid_argument("unknown experiment '" + e + "'");
  }
  if (c.repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (c.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (c.steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (c.n_trajectories < 1) throw std::invalid_argument("n_trajectories must be >= 1");
  if (c.warmup_iterations < 0 || c.timed_iterations < 1) {
    throw std::invalid_argument("warmup_iterations must be >= 0 and timed_iterations >= 1");
  }
  if (c.threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (!std::isfinite(c.demo_b)) throw std::invalid_argument("demo_b must be finite");
  if (c.learners.empty()) throw std::invalid_argument("at least one learner is required");
  for (int n : c.schedule) {
    if (n < 1) throw std::invalid_argument("schedule entries must be positive");
    if (e == "scalability") {
      const int side = static_cast<int>(std::lround(std::sqrt(n)));
      if (side * side != n || side < 2) {
        throw std::invalid_argument("scalability schedule entries must be perfect squares >= 4");
      }
    }
  }
  if ((e == "accuracy" || e == "scalability") && c.schedule.empty()) {
    throw std::invalid_argument("schedule must not be empty");
  }
  if (e == "extension" && (c.operators.empty() || c.motion_models.empty())) {
    throw std::invalid_argument("extension needs operators and motion_models");
  }
}

// Runs fn(i) for i in [0, count) on up to `threads` workers.
template <class Fn>
void parallel_for(int count, int threads, Fn fn) {
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  for (int t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (int i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& w : workers) w.join();
}

// One repetition's outcome for a table cell.
struct Sample {
  double value = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
  bool degenerate = false;
  bool failed = false;
};

ResultRow summarize(ResultRow row, const std::vector<Sample>& samples) {
  double sum = 0.0, seconds = 0.0;
  int ok = 0;
  for (const auto& s : samples) {
    row.degenerate = row.degenerate || s.degenerate;
    row.failed = row.failed || s.failed;
    seconds += s.seconds;
    if (!s.failed) {
      sum += s.value;
      ++ok;
    }
  }
  row.seconds = samples.empty() ? 0.0 : seconds / samples.size();
  if (row.failed || ok == 0) {
    row.value = std::numeric_limits<double>::quiet_NaN();
    row.stddev = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  row.value = sum / ok;
  double ss = 0.0;
  for (const auto& s : samples) ss += (s.value - row.value) * (s.value - row.value);
  row.stddev = ok > 1 ? std::sqrt(ss / (ok - 1)) : 0.0;
  return row;
}

Sample score(const RewardVector& learned, const RewardVector& truth) {
  const Correlation c = pearson_correlation(learned, truth);
  return {c.value, 0.0, c.degenerate, false};
}

struct Demo {
  EnvBundle env;
  std::vector<Trajectory> trajectories;
};

Demo objectworld_demo(const ObjectworldConfig& base, std::uint64_t seed, int rep,
                      int n_trajectories, int horizon, double demo_b) {
  ObjectworldConfig oc = base;
  oc.seed = derive_seed(seed, kTagEnv, rep);
  Demo d{generate(oc), {}};
  const auto vi = value_iteration(d.env.mdp, d.env.true_reward);
  d.trajectories = sample_trajectories(d.env.mdp, vi.q, demo_b, n_trajectories, horizon,
                                       derive_seed(seed, kTagDemo, rep));
  return d;
}

std::string column_name(int instruction) {
  std::string name = instruction_name(instruction);
  std::replace(name.begin(), name.end(), ' ', '_');
  return name;
}

// Standard normal draws from the portable uniform mapping (Box-Muller).
RewardVector random_reward(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RewardVector r(n);
  for (int i = 0; i < n; i += 2) {
    const double u1 = 1.0 - uniform01(rng());
    const double u2 = uniform01(rng());
    const double radius = std::sqrt(-2.0 * std::log(u1));
    r[i] = radius * std::cos(2.0 * std::numbers::pi * u2);
    if (i + 1 < n) r[i + 1] = radius * std::sin(2.0 * std::numbers::pi * u2);
  }
  return r;
}

}  // namespace

// Configuration -----------------------------------------------------------------

ExperimentConfig default_experiment_config(const std::string& experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  if (experiment == "accuracy") {
    c.schedule = {8, 16, 32, 64, 128, 256, 512};
    c.learners = {make_spec(experiment, "fairl_nn", "nn"), make_spec(experiment, "fairl_gp", "gp")};
  } else if (experiment == "scalability") {
    c.schedule = {25, 225, 625, 1225, 2025};
    c.learners = {make_spec(experiment, "fairl_nn", "nn"), make_spec(experiment, "fairl_gp", "gp")};
  } else if (experiment == "extension") {
    c.objectworld.grid_n = 20;
    c.objectworld.n_objects = 10;
    c.objectworld.n_colors = 5;
    c.operators = {backup::Max{}, backup::LogSumExp{}, backup::PNorm{}, backup::GSoft{}};
    c.motion_models = {MotionModel::QBased, MotionModel::RewardBased};
    c.learners = {make_spec(experiment, "fairl_nn", "nn")};
  } else if (experiment == "cop") {
    c.learners = {make_spec(experiment, "fairl_nn", "nn")};
  } else {
    throw std::invalid_argument("unknown experiment '" + experiment + "'");
  }
  return c;
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  std::string experiment = "accuracy";
  if (j.is_object() && j.contains("experiment")) {
    if (!j.at("experiment").is_string()) throw std::invalid_argument("experiment must be a string");
    experiment = j.at("experiment").get<std::string>();
  }
  ExperimentConfig c = default_experiment_config(experiment);
  detail::JsonFields<Json> fields(j, "experiment config");
  fields.get("experiment", c.experiment)
      .get("seed", c.seed)
      .get("repetitions", c.repetitions)
      .get("schedule", c.schedule)
      .get("horizon", c.horizon)
      .get("demo_b", c.demo_b)
      .get("steps", c.steps)
      .get("n_trajectories", c.n_trajectories)
      .get("warmup_iterations", c.warmup_iterations)
      .get("timed_iterations", c.timed_iterations)
      .get("threads", c.threads);
  if (fields.has("objectworld")) {
    Json merged = to_json(c.objectworld);
    for (const auto& item : j.at("objectworld").items()) merged[item.key()] = item.value();
    c.objectworld = objectworld_config_from_json(merged);
  }
  if (fields.has("cop")) {
    Json merged = to_json(c.cop);
    for (const auto& item : j.at("cop").items()) merged[item.key()] = item.value();
    c.cop = cop_config_from_json(merged);
  }
  if (fields.has("learners")) {
    const Json& learners = j.at("learners");
    if (!learners.is_array()) throw std::invalid_argument("learners must be an array");
    c.learners.clear();
    for (const auto& l : learners) c.learners.push_back(learner_from_json(l, experiment));
  }
  if (fields.has("operators")) {
    const Json& ops = j.at("operators");
    if (!ops.is_array()) throw std::invalid_argument("operators must be an array");
    c.operators.clear();
    for (const auto& o : ops) c.operators.push_back(backup_from_json(o));
  }
  if (fields.has("motion_models")) {
    const Json& models = j.at("motion_models");
    if (!models.is_array()) throw std::invalid_argument("motion_models must be an array");
    c.motion_models.clear();
    for (const auto& m : models) {
      if (!m.is_string()) throw std::invalid_argument("motion_models entries must be strings");
      c.motion_models.push_back(parse_motion_model(m.get<std::string>()));
    }
  }
  fields.finish();
  validate(c);
  return c;
}

Json to_json(const ExperimentConfig& c) {
  Json learners = Json::array();
  for (const auto& l : c.learners) {
    learners.push_back({{"label", l.label}, {"kind", l.kind}, {"config", to_json(l.config)}});
  }
  Json operators = Json::array();
  for (const auto& op : c.operators) operators.push_back(to_json(op));
  Json models = Json::array();
  for (auto m : c.motion_models) models.push_back(to_string(m));
  return {{"experiment", c.experiment},
          {"seed", c.seed},
          {"repetitions", c.repetitions},
          {"objectworld", to_json(c.objectworld)},
          {"cop", to_json(c.cop)},
          {"learners", std::move(learners)},
          {"schedule", c.schedule},
          {"horizon", c.horizon},
          {"demo_b", c.demo_b},
          {"steps", c.steps},
          {"operators", std::move(operators)},
          {"motion_models", std::move(models)},
          {"n_trajectories", c.n_trajectories},
          {"warmup_iterations", c.warmup_iterations},
          {"timed_iterations", c.timed_iterations},
          {"threads", c.threads}};
}

// Output --------------------------------------------------------------------------

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string out(buf, res.ptr);
  if (out.find_first_of(".eni") == std::string::npos) out += ".0";
  return out;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    std::string metric = r.metric;
    if (r.degenerate) metric += "!degenerate";
    if (r.failed) metric += "!failed";
    out << r.experiment << ',' << r.method << ',' << r.n_states << ',' << r.n_samples << ','
        << metric << ',' << format_number(r.value) << ',' << format_number(r.stddev) << ','
        << std::fixed << std::setprecision(6) << r.seconds << std::defaultfloat << ','
        << r.seed << '\n';
  }
}

std::string to_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  write_csv(os, rows);
  return os.str();
}

// Shared pieces --------------------------------------------------------------------

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ tag) ^ index);
}

LearnedReward train_learner(const LearnerSpec& spec, const EnvBundle& env,
                            const std::vector<Trajectory>& trajectories, std::uint64_t seed) {
  const auto start = Clock::now();
  LearnedReward out;
  if (spec.kind == "nn") {
    auto result = train_nn(env, trajectories, spec.config, seed);
    out.reward = std::move(result.constructions.r);
    out.report = std::move(result.report);
  } else if (spec.kind == "gp") {
    auto result = train_gp(env, trajectories, spec.config, seed);
    out.reward = std::move(result.constructions.r);
    out.report = std::move(result.report);
  } else {
    throw std::invalid_argument("unknown learner kind '" + spec.kind + "'");
  }
  out.seconds = seconds_since(start);
  return out;
}

double time_training_iteration(const LearnerSpec& spec, const EnvBundle& env,
                               const std::vector<Trajectory>& trajectories,
                               std::uint64_t seed, int warmup, int timed) {
  std::unique_ptr<VrFunction> approximator;
  if (spec.kind == "nn") {
    const auto shape = network_shape(static_cast<int>(env.features.cols()), spec.config);
    approximator = std::make_unique<MlpVrFunction>(init_mlp(shape, seed));
  } else if (spec.kind == "gp") {
    approximator = std::make_unique<GpVrFunction>(
        init_gp(env.features, spec.config.supporting_points, seed));
  } else {
    throw std::invalid_argument("unknown learner kind '" + spec.kind + "'");
  }
  const ActionCounts counts = count_actions(trajectories, env.mdp.n_states(), env.mdp.n_actions());
  const double step = spec.config.learning_rate /
                      (spec.config.per_step_learning_rate ? std::max(1.0, counts.total) : 1.0);

  std::vector<double> times;
  double sink = 0.0;
  for (int i = 0; i < warmup + timed; ++i) {
    const auto start = Clock::now();
    const Eigen::VectorXd f = approximator->values(env.features);
    const Constructions c = construct(env.mdp, f, spec.config.backup, spec.config.gamma);
    sink += c.r.sum();
    sink += motion_log_likelihood(env.mdp, f, spec.config, counts) +
            approximator->log_prior(env.features);
    const Eigen::VectorXd grad =
        approximator->pullback(env.features, motion_vr_gradient(env.mdp, f, spec.config, counts)) +
        approximator->log_prior_gradient(env.features);
    Eigen::VectorXd update = step * grad;
    limit_step(update, spec.config);
    approximator->set_parameters(approximator->parameters() + update);
    if (i >= warmup) times.push_back(seconds_since(start));
  }
  if (!std::isfinite(sink)) throw DivergenceError(warmup + timed, "timing run diverged");
  std::sort(times.begin(), times.end());
  const auto n = times.size();
  return n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
}

CopSession simulate_cop_session(const EnvBundle& env, double demo_b, std::uint64_t seed) {
  if (!env.cop) throw std::invalid_argument("simulate_cop_session: not a COP instance");
  const CopInfo& info = *env.cop;
  const Mdp& mdp = env.mdp;

  std::vector<QTable> q(kOriginInstruction + 1);
  for (int instruction : info.instructions) {
    q[instruction] =
        value_iteration(mdp, instruction_reward_vector(instruction, info.grid_g)).q;
  }

  std::mt19937_64 rng(seed);
  const int center = info.grid_g / 2;
  int state = (center * info.grid_g + center) * kCopDirections;
  CopSession session;
  std::vector<double> probs;
  for (int instruction : info.schedule) {
    Trajectory segment;
    for (int t = 0; t < info.segment_length; ++t) {
      const Eigen::VectorXd p =
          boltzmann_distribution(q[instruction].row(state).transpose(), demo_b);
      probs.assign(p.data(), p.data() + p.size());
      const int action = sample_index(probs, uniform01(rng()));
      segment.steps.push_back({state, action});
      const auto next = mdp.successors(state, action);
      probs.clear();
      for (const auto& tr : next) probs.push_back(tr.probability);
      state = next[sample_index(probs, uniform01(rng()))].next_state;
    }
    session.segments.push_back(std::move(segment));
    session.instructions.push_back(instruction);
  }
  return session;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("log_log_slope: need two equally long series of length >= 2");
  }
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("log_log_slope: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw std::invalid_argument("log_log_slope: x values must not all be equal");
  return sxy / sxx;
}

// Experiments -------------------------------------------------------------------

std::vector<ResultRow> run_accuracy(const ExperimentConfig& config) {
  validate(config);
  const int n_learners = static_cast<int>(config.learners.size());
  const int n_sizes = static_cast<int>(config.schedule.size());
  const int reps = config.repetitions;
  std::vector<Sample> samples(static_cast<std::size_t>(n_sizes) * n_learners * reps);

  parallel_for(n_sizes * reps, config.threads, [&](int cell) {
    const int size = cell / reps, rep = cell % reps;
    const Demo demo = objectworld_demo(config.objectworld, config.seed, rep,
                                       config.schedule[size], config.horizon, config.demo_b);
    for (int l = 0; l < n_learners; ++l) {
      Sample& out = samples[(static_cast<std::size_t>(size) * n_learners + l) * reps + rep];
      try {
        const auto learned = train_learner(config.learners[l], demo.env, demo.trajectories,
                                           derive_seed(config.seed, kTagInit, rep));
        out = score(learned.reward, demo.env.true_reward);
        out.seconds = learned.seconds;
      } catch (const std::exception&) {
        out.failed = true;
      }
    }
  });

  const int n_states = config.objectworld.grid_n * config.objectworld.grid_n;
  std::vector<ResultRow> rows;
  for (int size = 0; size < n_sizes; ++size) {
    for (int l = 0; l < n_learners; ++l) {
      const auto begin = samples.begin() + (static_cast<long>(size) * n_learners + l) * reps;
      ResultRow row{"accuracy", config.learners[l].label, n_states,
                    static_cast<long>(config.schedule[size]) * config.horizon, "correlation"};
      row.seed = config.seed;
      rows.push_back(summarize(row, {begin, begin + reps}));
    }
  }
  return rows;
}

std::vector<ResultRow> run_scalability(const ExperimentConfig& config) {
  validate(config);
  std::vector<ResultRow> rows;
  for (int n_states : config.schedule) {
    ObjectworldConfig oc = config.objectworld;
    oc.grid_n = static_cast<int>(std::lround(std::sqrt(n_states)));
    oc.n_objects = std::min(oc.n_objects, n_states);
    for (const auto& learner : config.learners) {
      std::vector<Sample> samples;
      for (int rep = 0; rep < config.repetitions; ++rep) {
        const Demo demo = objectworld_demo(oc, config.seed, rep, config.n_trajectories,
                                           config.horizon, config.demo_b);
        Sample s;
        try {
          s.value = time_training_iteration(learner, demo.env, demo.trajectories,
                                            derive_seed(config.seed, kTagInit, rep),
                                            config.warmup_iterations, config.timed_iterations);
          s.seconds = s.value;
        } catch (const std::exception&) {
          s.failed = true;
        }
        samples.push_back(s);
      }
      ResultRow row{"scalability", learner.label, n_states,
                    static_cast<long>(config.n_trajectories) * config.horizon,
                    "seconds_per_iteration"};
      row.seed = config.seed;
      rows.push_back(summarize(row, samples));
    }
  }
  return rows;
}

std::vector<ResultRow> run_extension(const ExperimentConfig& config) {
  validate(config);
  struct Cell {
    LearnerSpec spec;
  };
  std::vector<Cell> cells;
  for (const auto& learner : config.learners) {
    for (const auto& op : config.operators) {
      for (auto model : config.motion_models) {
        LearnerSpec spec = learner;
        spec.config.backup = op;
        spec.config.motion_model = model;
        spec.label = learner.label + ":" + label(op) + "+" + to_string(model);
        cells.push_back({std::move(spec)});
      }
    }
  }
  const int reps = config.repetitions;
  const int n_trajectories = (config.steps + config.horizon - 1) / config.horizon;
  std::vector<Demo> demos;
  for (int rep = 0; rep < reps; ++rep) {
    demos.push_back(objectworld_demo(config.objectworld, config.seed, rep, n_trajectories,
                                     config.horizon, config.demo_b));
  }

  const int n_cells = static_cast<int>(cells.size());
  std::vector<Sample> samples(static_cast<std::size_t>(n_cells) * reps);
  parallel_for(n_cells * reps, config.threads, [&](int i) {
    const int cell = i / reps, rep = i % reps;
    Sample& out = samples[i];
    try {
      const auto learned = train_learner(cells[cell].spec, demos[rep].env, demos[rep].trajectories,
                                         derive_seed(config.seed, kTagInit, rep));
      out = score(learned.reward, demos[rep].env.true_reward);
      out.seconds = learned.seconds / std::max(1, learned.report.iterations_run);
    } catch (const std::exception&) {
      out.failed = true;
    }
  });

  const int n_states = config.objectworld.grid_n * config.objectworld.grid_n;
  std::vector<ResultRow> rows;
  for (int cell = 0; cell < n_cells; ++cell) {
    ResultRow row{"extension", cells[cell].spec.label, n_states,
                  static_cast<long>(n_trajectories) * config.horizon, "correlation"};
    row.seed = config.seed;
    const auto begin = samples.begin() + static_cast<long>(cell) * reps;
    rows.push_back(summarize(row, {begin, begin + reps}));
  }
  return rows;
}

std::vector<ResultRow> run_cop(const ExperimentConfig& config) {
  validate(config);
  const int reps = config.repetitions;
  const int n_methods = static_cast<int>(config.learners.size()) + 1;  // plus the control

  struct RepResult {
    std::vector<int> instructions;
    // [method][instruction column]
    std::vector<std::vector<Sample>> samples;
    long n_samples = 0;
    int n_states = 0;
  };
  std::vector<RepResult> results(reps);

  parallel_for(reps, config.threads, [&](int rep) {
    CopConfig cc = config.cop;
    cc.seed = derive_seed(config.seed, kTagEnv, rep);
    const EnvBundle env = cop_generate(cc);
    const CopSession session =
        simulate_cop_session(env, config.demo_b, derive_seed(config.seed, kTagSession, rep));
    RepResult& res = results[rep];
    res.instructions = env.cop->instructions;
    res.n_states = env.mdp.n_states();
    res.n_samples = static_cast<long>(total_steps(session.segments));
    const int n_cols = static_cast<int>(res.instructions.size());
    res.samples.assign(n_methods, std::vector<Sample>(n_cols));

    // One reward is learned from the whole session and scored per instruction
    // on the states visited while that instruction was active.
    std::vector<RewardVector> learned(n_methods);
    std::vector<char> method_failed(n_methods, 0);
    std::vector<double> method_seconds(n_methods, 0.0);
    for (int m = 0; m + 1 < n_methods; ++m) {
      try {
        auto result = train_learner(config.learners[m], env, session.segments,
                                    derive_seed(config.seed, kTagInit, rep));
        learned[m] = std::move(result.reward);
        method_seconds[m] = result.seconds;
      } catch (const std::exception&) {
        method_failed[m] = 1;
      }
    }
    learned[n_methods - 1] =
        random_reward(env.mdp.n_states(), derive_seed(config.seed, kTagControl, rep));

    for (int col = 0; col < n_cols; ++col) {
      const int instruction = res.instructions[col];
      std::vector<char> visited(env.mdp.n_states(), 0);
      for (std::size_t k = 0; k < session.segments.size(); ++k) {
        if (session.instructions[k] != instruction) continue;
        for (const auto& st : session.segments[k].steps) visited[st.state] = 1;
      }
      std::vector<int> states;
      for (int s = 0; s < env.mdp.n_states(); ++s) {
        if (visited[s]) states.push_back(s);
      }
      for (int m = 0; m < n_methods; ++m) {
        Sample& out = res.samples[m][col];
        if (method_failed[m]) {
          out.failed = true;
          continue;
        }
        if (states.size() < 2) {
          out = {0.0, method_seconds[m], true, false};
          continue;
        }
        Eigen::VectorXd a(states.size()), b(states.size());
        for (std::size_t i = 0; i < states.size(); ++i) {
          a[i] = learned[m][states[i]];
          b[i] = instruction_reward(states[i], instruction, env.cop->grid_g);
        }
        out = score(a, b);
        out.seconds = method_seconds[m];
      }
    }
  });

  std::vector<ResultRow> rows;
  const auto& instructions = results.front().instructions;
  long n_samples = 0;
  for (const auto& r : results) n_samples += r.n_samples;
  n_samples /= reps;
  for (int m = 0; m < n_methods; ++m) {
    const std::string method = m + 1 < n_methods ? config.learners[m].label : "random_control";
    for (std::size_t col = 0; col < instructions.size(); ++col) {
      std::vector<Sample> samples;
      for (const auto& r : results) samples.push_back(r.samples[m][col]);
      ResultRow row{"cop", method, results.front().n_states, n_samples,
                    "correlation:" + column_name(instructions[col])};
      row.seed = config.seed;
      rows.push_back(summarize(row, samples));
    }
  }
  return rows;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
  if (config.experiment == "accuracy") return run_accuracy(config);
  if (config.experiment == "scalability") return run_scalability(config);
  if (config.experiment == "extension") return run_extension(config);
  if (config.experiment == "cop") return run_cop(config);
  throw std::invalid_argument("unknown experiment '" + config.experiment + "'");
}

}  // namespace fairl
