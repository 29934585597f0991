#include "fairl/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fairl {

std::string to_string(MotionModel model) {
  switch (model) {
    case MotionModel::QBased: return "qbased";
    case MotionModel::RewardBased: return "rewardbased";
    case MotionModel::ValueBased: return "valuebased";
  }
  throw std::invalid_argument("unknown motion model");
}

MotionModel parse_motion_model(const std::string& name) {
  if (name == "qbased") return MotionModel::QBased;
  if (name == "rewardbased") return MotionModel::RewardBased;
  if (name == "valuebased") return MotionModel::ValueBased;
  throw std::invalid_argument("unknown motion model '" + name + "'");
}

std::string to_string(Optimizer optimizer) {
  switch (optimizer) {
    case Optimizer::GradientAscent: return "gradient_ascent";
    case Optimizer::Adam: return "adam";
  }
  throw std::invalid_argument("unknown optimizer");
}

Optimizer parse_optimizer(const std::string& name) {
  if (name == "gradient_ascent") return Optimizer::GradientAscent;
  if (name == "adam") return Optimizer::Adam;
  throw std::invalid_argument("unknown optimizer '" + name + "'");
}

void validate(const FairlConfig& c) {
  if (!(c.gamma >= 0.0 && c.gamma < 1.0)) throw std::invalid_argument("fairl: gamma must lie in [0, 1)");
  if (!std::isfinite(c.b)) throw std::invalid_argument("fairl: b must be finite");
  if (!(c.learning_rate > 0.0)) throw std::invalid_argument("fairl: learning_rate must be positive");
  if (c.max_iter < 0) throw std::invalid_argument("fairl: max_iter must be non-negative");
  if (!(c.convergence_tol > 0.0)) throw std::invalid_argument("fairl: convergence_tol must be positive");
  if (c.early_stop_window < 0) throw std::invalid_argument("fairl: early_stop_window must be non-negative");
  if (!(c.holdout_fraction > 0.0 && c.holdout_fraction < 1.0))
    throw std::invalid_argument("fairl: holdout_fraction must lie in (0, 1)");
  if (!(c.max_step_norm >= 0.0)) throw std::invalid_argument("fairl: max_step_norm must be non-negative");
  if (c.supporting_points < 1) throw std::invalid_argument("fairl: supporting_points must be >= 1");
  for (int h : c.hidden_layers) {
    if (h <= 0) throw std::invalid_argument("fairl: hidden layer widths must be positive");
  }
  fairl::validate(c.backup);
}

// Constructions ----------------------------------------------------------------

QTable q_from_vr(const Mdp& mdp, const Eigen::VectorXd& f) {
  if (f.size() != mdp.n_states()) throw std::invalid_argument("q_from_vr: f has the wrong length");
  QTable q(mdp.n_states(), mdp.n_actions());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      double acc = 0.0;
      for (const auto& t : mdp.successors(s, a)) acc += t.probability * f[t.next_state];
      q(s, a) = acc;
    }
  }
  return q;
}

ValueVector v_from_q(const QTable& q, const BackupOperator& op) {
  ValueVector v(q.rows());
  for (Eigen::Index s = 0; s < q.rows(); ++s) v[s] = apply_backup(op, q.row(s).transpose());
  return v;
}

ValueVector v_from_vr(const Mdp& mdp, const Eigen::VectorXd& f, const BackupOperator& op) {
  return v_from_q(q_from_vr(mdp, f), op);
}

RewardVector r_from_vr(const Mdp& mdp, const Eigen::VectorXd& f, const BackupOperator& op,
                       double gamma) {
  return f - gamma * v_from_vr(mdp, f, op);
}

Constructions construct(const Mdp& mdp, const Eigen::VectorXd& f, const BackupOperator& op,
                        double gamma) {
  Constructions c;
  c.f = f;
  c.q = q_from_vr(mdp, f);
  c.v = v_from_q(c.q, op);
  c.r = f - gamma * c.v;
  return c;
}

// Likelihoods --------------------------------------------------------------------

ActionCounts count_actions(std::span<const Trajectory> trajectories, int n_states,
                           int n_actions) {
  validate_trajectories(trajectories, n_states, n_actions);
  ActionCounts c{Eigen::MatrixXd::Zero(n_states, n_actions), 0.0};
  for (const auto& t : trajectories) {
    for (const auto& step : t.steps) c.counts(step.state, step.action) += 1.0;
    c.total += static_cast<double>(t.steps.size());
  }
  return c;
}

double log_likelihood(std::span<const Trajectory> trajectories, const QTable& q, double b) {
  validate_trajectories(trajectories, static_cast<int>(q.rows()), static_cast<int>(q.cols()));
  double total = 0.0;
  for (const auto& t : trajectories) {
    for (const auto& step : t.steps) {
      const Eigen::VectorXd scaled = b * q.row(step.state).transpose();
      total += scaled[step.action] - log_sum_exp(scaled);
    }
  }
  return total;
}

namespace {

// -V(s) - log sum_k P(k|s,a) exp(-V(k)) for one (s, a).
double value_based_log_prob(const Mdp& mdp, const ValueVector& v, int state, int action) {
  const auto successors = mdp.successors(state, action);
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& t : successors) {
    if (t.probability > 0.0) top = std::max(top, -v[t.next_state]);
  }
  double sum = 0.0;
  for (const auto& t : successors) sum += t.probability * std::exp(-v[t.next_state] - top);
  return -v[state] - (top + std::log(sum));
}

void require_state_action(const Mdp& mdp, int state, int action) {
  if (state < 0 || state >= mdp.n_states() || action < 0 || action >= mdp.n_actions()) {
    throw std::invalid_argument("action_log_prob: state or action out of range");
  }
}

}  // namespace

double action_log_prob(MotionModel kind, const Mdp& mdp, const Eigen::VectorXd& f,
                       const BackupOperator& op, double b, int state, int action) {
  require_state_action(mdp, state, action);
  const QTable q = q_from_vr(mdp, f);
  switch (kind) {
    case MotionModel::QBased: {
      const Eigen::VectorXd scaled = b * q.row(state).transpose();
      return scaled[action] - log_sum_exp(scaled);
    }
    case MotionModel::RewardBased:
      return q(state, action) - log_sum_exp(q.row(state).transpose());
    case MotionModel::ValueBased:
      return value_based_log_prob(mdp, v_from_q(q, op), state, action);
  }
  throw std::invalid_argument("action_log_prob: unknown motion model");
}

double motion_log_likelihood(const Mdp& mdp, const Eigen::VectorXd& f,
                             const FairlConfig& config, const ActionCounts& counts) {
  const QTable q = q_from_vr(mdp, f);
  double total = 0.0;
  switch (config.motion_model) {
    case MotionModel::QBased:
      for (int s = 0; s < mdp.n_states(); ++s) {
        const double visits = counts.counts.row(s).sum();
        if (visits == 0.0) continue;
        const Eigen::VectorXd scaled = config.b * q.row(s).transpose();
        total += counts.counts.row(s).dot(scaled) - visits * log_sum_exp(scaled);
      }
      break;
    case MotionModel::RewardBased:
      for (int s = 0; s < mdp.n_states(); ++s) {
        const double visits = counts.counts.row(s).sum();
        if (visits == 0.0) continue;
        total += counts.counts.row(s).dot(q.row(s)) - visits * log_sum_exp(q.row(s).transpose());
      }
      break;
    case MotionModel::ValueBased: {
      const ValueVector v = v_from_q(q, config.backup);
      for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
          const double n = counts.counts(s, a);
          if (n != 0.0) total += n * value_based_log_prob(mdp, v, s, a);
        }
      }
      break;
    }
  }
  return total;
}

Eigen::VectorXd motion_vr_gradient(const Mdp& mdp, const Eigen::VectorXd& f,
                                   const FairlConfig& config, const ActionCounts& counts) {
  const QTable q = q_from_vr(mdp, f);
  QTable dq = QTable::Zero(mdp.n_states(), mdp.n_actions());

  switch (config.motion_model) {
    case MotionModel::QBased:
      // b * (n(s, .) - N_s * pi(. | s))
      for (int s = 0; s < mdp.n_states(); ++s) {
        const double visits = counts.counts.row(s).sum();
        if (visits == 0.0) continue;
        const Eigen::VectorXd pi = boltzmann_distribution(q.row(s).transpose(), config.b);
        dq.row(s) = config.b * (counts.counts.row(s) - visits * pi.transpose());
      }
      break;
    case MotionModel::RewardBased:
      for (int s = 0; s < mdp.n_states(); ++s) {
        const double visits = counts.counts.row(s).sum();
        if (visits == 0.0) continue;
        const Eigen::VectorXd pi = boltzmann_distribution(q.row(s).transpose(), 1.0);
        dq.row(s) = counts.counts.row(s) - visits * pi.transpose();
      }
      break;
    case MotionModel::ValueBased: {
      const ValueVector v = v_from_q(q, config.backup);
      Eigen::VectorXd dv = Eigen::VectorXd::Zero(mdp.n_states());
      for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
          const double n = counts.counts(s, a);
          if (n == 0.0) continue;
          dv[s] -= n;
          // Softmin weights over successors.
          const auto successors = mdp.successors(s, a);
          double top = -std::numeric_limits<double>::infinity();
          for (const auto& t : successors) {
            if (t.probability > 0.0) top = std::max(top, -v[t.next_state]);
          }
          double z = 0.0;
          for (const auto& t : successors) z += t.probability * std::exp(-v[t.next_state] - top);
          for (const auto& t : successors) {
            dv[t.next_state] += n * t.probability * std::exp(-v[t.next_state] - top) / z;
          }
        }
      }
      for (int s = 0; s < mdp.n_states(); ++s) {
        if (dv[s] == 0.0) continue;
        dq.row(s) = dv[s] * backup_gradient(config.backup, q.row(s).transpose()).transpose();
      }
      break;
    }
  }

  // Push dL/dQ through Q(s,a) = sum_s' P(s'|s,a) f(s').
  Eigen::VectorXd df = Eigen::VectorXd::Zero(mdp.n_states());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const double g = dq(s, a);
      if (g == 0.0) continue;
      for (const auto& t : mdp.successors(s, a)) df[t.next_state] += g * t.probability;
    }
  }
  return df;
}

Eigen::VectorXd loglik_gradient(std::span<const Trajectory> trajectories, const Mdp& mdp,
                                const VrFunction& approximator,
                                const Eigen::MatrixXd& features, const Eigen::VectorXd& f,
                                const FairlConfig& config) {
  const ActionCounts counts = count_actions(trajectories, mdp.n_states(), mdp.n_actions());
  return approximator.pullback(features, motion_vr_gradient(mdp, f, config, counts));
}

double training_objective(const VrFunction& approximator, const Mdp& mdp,
                          const Eigen::MatrixXd& features, const FairlConfig& config,
                          const ActionCounts& counts) {
  const Eigen::VectorXd f = approximator.values(features);
  return motion_log_likelihood(mdp, f, config, counts) + approximator.log_prior(features);
}

Eigen::VectorXd training_gradient(const VrFunction& approximator, const Mdp& mdp,
                                  const Eigen::MatrixXd& features, const FairlConfig& config,
                                  const ActionCounts& counts) {
  const Eigen::VectorXd f = approximator.values(features);
  return approximator.pullback(features, motion_vr_gradient(mdp, f, config, counts)) +
         approximator.log_prior_gradient(features);
}

// Training ------------------------------------------------------------------------

std::vector<int> network_shape(int input_size, const FairlConfig& config) {
  std::vector<int> shape{input_size};
  if (config.hidden_layers.empty()) {
    shape.insert(shape.end(), 3, input_size);
  } else {
    shape.insert(shape.end(), config.hidden_layers.begin(), config.hidden_layers.end());
  }
  shape.push_back(1);
  return shape;
}

GpParams init_gp(const Eigen::MatrixXd& features, int supporting_points, std::uint64_t seed) {
  GpParams p;
  p.length_scales.resize(features.cols());
  for (Eigen::Index d = 0; d < features.cols(); ++d) {
    const auto col = features.col(d).array();
    const double var = (col - col.mean()).square().mean();
    p.length_scales[d] = var > 1e-12 ? 1.0 / var : 1.0;
  }
  p.signal_variance = 1.0;
  p.supporting_states = pick_supporting_states(features, supporting_points, seed);
  p.supporting_values = Eigen::VectorXd::Zero(p.supporting_states.size());
  p.jitter = 1e-6 * p.signal_variance;
  return p;
}

void limit_step(Eigen::VectorXd& step, const FairlConfig& config) {
  if (config.max_step_norm <= 0.0) return;
  const double norm = step.norm();
  if (norm > config.max_step_norm) step *= config.max_step_norm / norm;
}

namespace {

struct Split {
  std::vector<Trajectory> train;
  std::vector<Trajectory> holdout;
};

// Holdout is the trailing block of trajectories.
Split split_holdout(std::span<const Trajectory> trajectories, const FairlConfig& config) {
  Split split;
  const auto n = trajectories.size();
  std::size_t n_holdout = 0;
  if (config.early_stop_window > 0 && n >= 2) {
    n_holdout = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(config.holdout_fraction * n)), 1, n - 1);
  }
  split.train.assign(trajectories.begin(), trajectories.end() - n_holdout);
  split.holdout.assign(trajectories.end() - n_holdout, trajectories.end());
  return split;
}

struct AdamState {
  Eigen::VectorXd m, v;
  int t = 0;
};

TrainReport ascend(VrFunction& approximator, const Mdp& mdp, const Eigen::MatrixXd& features,
                   const FairlConfig& config, std::span<const Trajectory> trajectories,
                   const IterationCallback& on_iteration) {
  const Split split = split_holdout(trajectories, config);
  const ActionCounts train = count_actions(split.train, mdp.n_states(), mdp.n_actions());
  const bool early_stopping = !split.holdout.empty();
  const ActionCounts holdout =
      early_stopping ? count_actions(split.holdout, mdp.n_states(), mdp.n_actions())
                     : ActionCounts{};

  TrainReport report;
  Eigen::VectorXd theta = approximator.parameters();
  const double step_scale =
      config.learning_rate / (config.per_step_learning_rate ? std::max(1.0, train.total) : 1.0);

  AdamState adam{Eigen::VectorXd::Zero(theta.size()), Eigen::VectorXd::Zero(theta.size())};
  Eigen::VectorXd best_theta = theta;
  double best_holdout = -std::numeric_limits<double>::infinity();
  int since_best = 0;
  Eigen::VectorXd step;

  for (int it = 0; it < config.max_iter; ++it) {
    const Eigen::VectorXd f = approximator.values(features);
    if (!f.allFinite()) throw DivergenceError(it, "VR values became non-finite at iteration " + std::to_string(it));
    const double objective =
        motion_log_likelihood(mdp, f, config, train) + approximator.log_prior(features);
    if (!std::isfinite(objective)) {
      throw DivergenceError(it, "log-likelihood became non-finite at iteration " + std::to_string(it));
    }
    const Eigen::VectorXd grad =
        approximator.pullback(features, motion_vr_gradient(mdp, f, config, train)) +
        approximator.log_prior_gradient(features);
    if (!grad.allFinite()) {
      throw DivergenceError(it, "gradient became non-finite at iteration " + std::to_string(it));
    }

    report.loglik_history.push_back(objective);
    report.iterations_run = it + 1;
    report.final_gradient_norm = grad.norm();
    if (on_iteration) on_iteration(it, objective, report.final_gradient_norm);

    if (early_stopping) {
      const double score = motion_log_likelihood(mdp, f, config, holdout);
      if (score > best_holdout) {
        best_holdout = score;
        best_theta = theta;
        report.best_iteration = it;
        since_best = 0;
      } else if (++since_best >= config.early_stop_window) {
        break;
      }
    } else {
      report.best_iteration = it;
    }

    const auto n = report.loglik_history.size();
    if (n >= 2 && std::abs(report.loglik_history[n - 1] - report.loglik_history[n - 2]) <
                      config.convergence_tol) {
      report.converged = true;
      break;
    }

    if (config.optimizer == Optimizer::Adam) {
      constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
      ++adam.t;
      adam.m = beta1 * adam.m + (1.0 - beta1) * grad;
      adam.v = beta2 * adam.v + (1.0 - beta2) * grad.cwiseAbs2();
      const Eigen::VectorXd m_hat = adam.m / (1.0 - std::pow(beta1, adam.t));
      const Eigen::VectorXd v_hat = adam.v / (1.0 - std::pow(beta2, adam.t));
      step = config.learning_rate * (m_hat.array() / (v_hat.array().sqrt() + eps)).matrix();
    } else {
      step = step_scale * grad;
    }
    limit_step(step, config);
    theta += step;
    approximator.set_parameters(theta);
  }

  if (early_stopping) approximator.set_parameters(best_theta);
  return report;
}

void check_features(const EnvBundle& env) {
  if (env.features.rows() != env.mdp.n_states()) {
    throw std::invalid_argument("fairl: feature rows do not match the number of states");
  }
}

}  // namespace

TrainResult<MlpParams> train_nn_from(const EnvBundle& env,
                                     std::span<const Trajectory> trajectories,
                                     const FairlConfig& config, MlpParams initial,
                                     const IterationCallback& on_iteration) {
  validate(config);
  check_features(env);
  if (initial.input_size() != env.features.cols()) {
    throw std::invalid_argument("train_nn: network input size does not match the feature dimension");
  }
  MlpVrFunction approximator(std::move(initial));
  TrainReport report = ascend(approximator, env.mdp, env.features, config, trajectories, on_iteration);
  Constructions c = construct(env.mdp, approximator.values(env.features), config.backup, config.gamma);
  return {approximator.params(), std::move(c), std::move(report)};
}

TrainResult<MlpParams> train_nn(const EnvBundle& env, std::span<const Trajectory> trajectories,
                                const FairlConfig& config, std::uint64_t seed,
                                const IterationCallback& on_iteration) {
  validate(config);
  const auto shape = network_shape(static_cast<int>(env.features.cols()), config);
  return train_nn_from(env, trajectories, config, init_mlp(shape, seed), on_iteration);
}

TrainResult<GpParams> train_gp(const EnvBundle& env, std::span<const Trajectory> trajectories,
                               const FairlConfig& config, std::uint64_t seed,
                               const IterationCallback& on_iteration) {
  validate(config);
  check_features(env);
  GpVrFunction approximator(init_gp(env.features, config.supporting_points, seed));
  TrainReport report = ascend(approximator, env.mdp, env.features, config, trajectories, on_iteration);
  Constructions c = construct(env.mdp, approximator.values(env.features), config.backup, config.gamma);
  return {approximator.params(), std::move(c), std::move(report)};
}

}  // namespace fairl
