#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace fairl {

using RewardVector = Eigen::VectorXd;
using ValueVector = Eigen::VectorXd;
/// Rows are states, columns are actions.
using QTable = Eigen::MatrixXd;

struct Transition {
  int next_state;
  double probability;
};

/**
 * Discrete MDP with a sparse transition model.
 *
 * Successor lists are stored contiguously per (state, action) pair. The
 * constructor validates the model; a constructed Mdp is always well formed.
 */
class Mdp {
 public:
  /// `rows[s * n_actions + a]` lists the successors of (s, a).
  /// Throws std::invalid_argument if any invariant is violated.
  Mdp(int n_states, int n_actions,
      const std::vector<std::vector<Transition>>& rows, double gamma);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  double gamma() const { return gamma_; }

  std::span<const Transition> successors(int state, int action) const {
    const auto row = static_cast<std::size_t>(state) * n_actions_ + action;
    return {transitions_.data() + offsets_[row],
            offsets_[row + 1] - offsets_[row]};
  }

  std::size_t nnz() const { return transitions_.size(); }

 private:
  int n_states_;
  int n_actions_;
  double gamma_;
  std::vector<std::size_t> offsets_;
  std::vector<Transition> transitions_;
};

struct Step {
  int state;
  int action;

  friend bool operator==(const Step&, const Step&) = default;
};

struct Trajectory {
  std::vector<Step> steps;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Throws std::invalid_argument if a trajectory is empty or indexes outside
/// the given state/action ranges.
void validate_trajectories(std::span<const Trajectory> trajectories,
                           int n_states, int n_actions);

std::size_t total_steps(std::span<const Trajectory> trajectories);

struct ValueIterationResult {
  ValueVector values;
  QTable q;
  int iterations = 0;
  /// Sup-norm change of V in the last sweep.
  double residual = 0.0;
  bool converged = false;
};

/// Q(s,a) = sum_s' P(s'|s,a) [r(s') + gamma V(s')] for a fixed V.
QTable bellman_q(const Mdp& mdp, const RewardVector& reward,
                 const ValueVector& values);

/**
 * Solves the Bellman optimality equations by synchronous sweeps, with rewards
 * collected on successor states. Stops when the sup-norm change of V drops
 * below `tol`. Non-convergence is reported through `converged`/`residual`.
 */
ValueIterationResult value_iteration(const Mdp& mdp, const RewardVector& reward,
                                     double tol = 1e-8, int max_iter = 10'000);

/// argmax_a Q(s,a) per state, ties broken towards the lowest action index.
std::vector<int> greedy_policy(const QTable& q);

/// Boltzmann action distribution exp(b q_a) / sum exp(b q), max-subtracted.
Eigen::VectorXd boltzmann_distribution(const Eigen::Ref<const Eigen::VectorXd>& q_row,
                                       double b);

/// Draws a uniform double in [0, 1) from the top 53 bits of one engine output.
double uniform01(std::uint64_t bits);

/// Index drawn from a discrete distribution given a uniform sample in [0, 1).
int sample_index(std::span<const double> probabilities, double u);

/**
 * Samples `count` trajectories of `horizon` steps. Start states are uniform;
 * actions follow the Boltzmann model on `q` and successors follow the
 * transition model. Output depends only on the arguments.
 */
std::vector<Trajectory> sample_trajectories(const Mdp& mdp, const QTable& q,
                                            double b, int count, int horizon,
                                            std::uint64_t seed);

struct Correlation {
  double value = 0.0;
  /// Set when either input has zero variance; value is then 0.
  bool degenerate = false;
};

/// Pearson correlation coefficient. Throws std::invalid_argument on length
/// mismatch or fewer than two entries.
Correlation pearson_correlation(std::span<const double> x,
                                std::span<const double> y);
Correlation pearson_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

}  // namespace fairl
