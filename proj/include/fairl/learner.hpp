#pragma once

#include "fairl/backup.hpp"
#include "fairl/gp.hpp"
#include "fairl/mdp.hpp"
#include "fairl/mlp.hpp"
#include "fairl/objectworld.hpp"
#include "fairl/vr_function.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairl {

/// How observed actions are scored given the constructed Q/V.
enum class MotionModel {
  /// Boltzmann in b * Q(s, a).
  QBased,
  /// exp(Q(s, a) - V(s)) with V the log-sum-exp of Q(s, .), so the model is
  /// always normalized. The configured backup still defines V and r.
  RewardBased,
  /// -V(s) - log sum_k P(k|s,a) exp(-V(k)).
  ValueBased,
};

std::string to_string(MotionModel model);
MotionModel parse_motion_model(const std::string& name);

enum class Optimizer { GradientAscent, Adam };

std::string to_string(Optimizer optimizer);
Optimizer parse_optimizer(const std::string& name);

struct FairlConfig {
  double gamma = 0.9;
  /// Boltzmann confidence.
  double b = 1.0;
  BackupOperator backup = backup::Max{};
  /// Per-step learning rate unless per_step_learning_rate is false.
  double learning_rate = 0.1;
  int max_iter = 3000;
  double convergence_tol = 1e-6;
  /// 0 disables early stopping. Otherwise a holdout split is scored every
  /// iteration and training stops after this many iterations without a new best.
  int early_stop_window = 0;
  double holdout_fraction = 0.2;
  MotionModel motion_model = MotionModel::QBased;
  Optimizer optimizer = Optimizer::GradientAscent;
  /// Divide the ascent step by the number of training steps, so the learning
  /// rate applies per observed (state, action) pair.
  bool per_step_learning_rate = true;
  /// Updates longer than this (Euclidean norm) are shortened to it; 0 disables.
  double max_step_norm = 1.0;
  /// Hidden layer widths; empty means three hidden layers as wide as the input.
  std::vector<int> hidden_layers;
  /// Upper bound on the number of GP supporting states.
  int supporting_points = 64;
};

/// Throws std::invalid_argument on out-of-range fields.
void validate(const FairlConfig& config);

struct TrainReport {
  /// Training log-likelihood (plus log-prior for the GP) before each update.
  std::vector<double> loglik_history;
  int iterations_run = 0;
  bool converged = false;
  double final_gradient_norm = 0.0;
  /// Iteration whose parameters were returned (differs from the last one
  /// only with early stopping).
  int best_iteration = 0;
};

/// Raised when the objective becomes non-finite during training.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int iteration, const std::string& what)
      : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

// Constructions from VR values ------------------------------------------------

/// Q(s,a) = sum_s' P(s'|s,a) f(s').
QTable q_from_vr(const Mdp& mdp, const Eigen::VectorXd& f);

/// V(s) = backup(Q(s, .)).
ValueVector v_from_q(const QTable& q, const BackupOperator& op);
ValueVector v_from_vr(const Mdp& mdp, const Eigen::VectorXd& f, const BackupOperator& op);

/// r(s) = f(s) - gamma V(s).
RewardVector r_from_vr(const Mdp& mdp, const Eigen::VectorXd& f, const BackupOperator& op,
                       double gamma);

struct Constructions {
  Eigen::VectorXd f;
  QTable q;
  ValueVector v;
  RewardVector r;
};

Constructions construct(const Mdp& mdp, const Eigen::VectorXd& f, const BackupOperator& op,
                        double gamma);

// Likelihoods -------------------------------------------------------------------

/// Visit counts n(s, a) over all trajectories.
struct ActionCounts {
  Eigen::MatrixXd counts;  // n_states x n_actions
  double total = 0.0;
};

ActionCounts count_actions(std::span<const Trajectory> trajectories, int n_states,
                           int n_actions);

/// Boltzmann log-likelihood: sum over steps of b Q(s,a) - log sum exp b Q(s, .).
double log_likelihood(std::span<const Trajectory> trajectories, const QTable& q, double b);

double action_log_prob(MotionModel kind, const Mdp& mdp, const Eigen::VectorXd& f,
                       const BackupOperator& op, double b, int state, int action);

/// Log-likelihood of the counted evidence under the configured motion model.
double motion_log_likelihood(const Mdp& mdp, const Eigen::VectorXd& f,
                             const FairlConfig& config, const ActionCounts& counts);

/// d motion_log_likelihood / d f, one entry per state.
Eigen::VectorXd motion_vr_gradient(const Mdp& mdp, const Eigen::VectorXd& f,
                                   const FairlConfig& config, const ActionCounts& counts);

/// Gradient of the motion log-likelihood with respect to the approximator's
/// parameters, evaluated at VR values `f` = approximator.values(features).
Eigen::VectorXd loglik_gradient(std::span<const Trajectory> trajectories, const Mdp& mdp,
                                const VrFunction& approximator,
                                const Eigen::MatrixXd& features, const Eigen::VectorXd& f,
                                const FairlConfig& config);

// Training ----------------------------------------------------------------------

/// Network shape used by train_nn for a given input width.
std::vector<int> network_shape(int input_size, const FairlConfig& config);

/// Initial GP parameters: supporting states, unit signal variance,
/// lambda_d = 1 / Var(feature_d), f_u = 0, jitter = 1e-6 * beta.
GpParams init_gp(const Eigen::MatrixXd& features, int supporting_points, std::uint64_t seed);

/// Called after every iteration with (iteration, loglik, gradient norm).
using IterationCallback = std::function<void(int, double, double)>;

template <class Params>
struct TrainResult {
  Params params;
  Constructions constructions;
  TrainReport report;
};

TrainResult<MlpParams> train_nn(const EnvBundle& env, std::span<const Trajectory> trajectories,
                                const FairlConfig& config, std::uint64_t seed,
                                const IterationCallback& on_iteration = {});

/// Same, starting from the given network instead of a seeded initialization.
TrainResult<MlpParams> train_nn_from(const EnvBundle& env,
                                     std::span<const Trajectory> trajectories,
                                     const FairlConfig& config, MlpParams initial,
                                     const IterationCallback& on_iteration = {});

TrainResult<GpParams> train_gp(const EnvBundle& env, std::span<const Trajectory> trajectories,
                               const FairlConfig& config, std::uint64_t seed,
                               const IterationCallback& on_iteration = {});

/// Objective ascended by the trainers: motion log-likelihood plus log-prior.
double training_objective(const VrFunction& approximator, const Mdp& mdp,
                          const Eigen::MatrixXd& features, const FairlConfig& config,
                          const ActionCounts& counts);

/// Scales `step` down to config.max_step_norm when it is longer.
void limit_step(Eigen::VectorXd& step, const FairlConfig& config);

Eigen::VectorXd training_gradient(const VrFunction& approximator, const Mdp& mdp,
                                  const Eigen::MatrixXd& features, const FairlConfig& config,
                                  const ActionCounts& counts);

}  // namespace fairl
