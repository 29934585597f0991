#pragma once

#include "fairl/learner.hpp"
#include "fairl/objectworld.hpp"
#include "fairl/serialization.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace fairl {

struct LearnerSpec {
  std::string label;
  /// "nn" or "gp".
  std::string kind = "nn";
  FairlConfig config;
};

struct ExperimentConfig {
  /// accuracy | scalability | extension | cop
  std::string experiment = "accuracy";
  std::uint64_t seed = 0;
  int repetitions = 1;
  ObjectworldConfig objectworld;
  CopConfig cop;
  std::vector<LearnerSpec> learners;
  /// accuracy: trajectory counts; scalability: state counts (perfect squares).
  std::vector<int> schedule;
  int horizon = 40;
  /// Boltzmann confidence of the demonstrating agent.
  double demo_b = 1.0;
  /// extension: total sampled steps.
  int steps = 10'000;
  std::vector<BackupOperator> operators;
  std::vector<MotionModel> motion_models;
  /// scalability: trajectories sampled per instance, warmup and timed iterations.
  int n_trajectories = 64;
  int warmup_iterations = 2;
  int timed_iterations = 5;
  /// Worker threads for independent sweep cells. Timing sweeps always run serially.
  int threads = 1;
};

/// Fills experiment-specific defaults and validates. Throws std::invalid_argument.
ExperimentConfig experiment_config_from_json(const Json& j);
ExperimentConfig default_experiment_config(const std::string& experiment);
Json to_json(const ExperimentConfig& config);

struct ResultRow {
  std::string experiment;
  std::string method;
  int n_states = 0;
  /// Observed (state, action) steps.
  long n_samples = 0;
  std::string metric;
  double value = 0.0;
  double stddev = 0.0;
  double seconds = 0.0;
  std::uint64_t seed = 0;
  /// A correlation was taken against a constant vector in some repetition.
  bool degenerate = false;
  /// The learner threw; value is NaN.
  bool failed = false;
};

inline constexpr const char* kCsvHeader =
    "experiment,method,n_states,n_samples,metric,value,stddev,seconds,seed";

/// Header line plus one line per row. Flags are appended to the metric name
/// as "!degenerate" or "!failed".
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::string to_csv(const std::vector<ResultRow>& rows);

/// Shortest round-trip decimal form, always with a decimal point or exponent.
std::string format_number(double v);

std::vector<ResultRow> run_accuracy(const ExperimentConfig& config);
std::vector<ResultRow> run_scalability(const ExperimentConfig& config);
std::vector<ResultRow> run_extension(const ExperimentConfig& config);
std::vector<ResultRow> run_cop(const ExperimentConfig& config);

std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

/// Independent 64-bit stream seed for a (base seed, tag, index) triple.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag, std::uint64_t index = 0);

/// Learned reward of one learner on one set of trajectories.
struct LearnedReward {
  RewardVector reward;
  TrainReport report;
  double seconds = 0.0;
};

LearnedReward train_learner(const LearnerSpec& spec, const EnvBundle& env,
                            const std::vector<Trajectory>& trajectories, std::uint64_t seed);

/// Median wall-clock seconds of one full training iteration: forward pass,
/// Q/V/r construction, gradient and parameter update.
double time_training_iteration(const LearnerSpec& spec, const EnvBundle& env,
                               const std::vector<Trajectory>& trajectories,
                               std::uint64_t seed, int warmup, int timed);

/// One continuous COP session: the demonstrator follows each scheduled
/// instruction for one segment, starting from the grid center.
struct CopSession {
  std::vector<Trajectory> segments;
  std::vector<int> instructions;  // one per segment
};

CopSession simulate_cop_session(const EnvBundle& env, double demo_b, std::uint64_t seed);

/// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace fairl
