#include "fairl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace fairl {

Mdp::Mdp(int n_states, int n_actions,
         const std::vector<std::vector<Transition>>& rows, double gamma)
    : n_states_(n_states), n_actions_(n_actions), gamma_(gamma) {
  if (n_states <= 0 || n_actions <= 0) {
    throw std::invalid_argument("Mdp: state and action counts must be positive");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("Mdp: gamma must lie in [0, 1), got " +
                                std::to_string(gamma));
  }
  const auto n_rows = static_cast<std::size_t>(n_states) * n_actions;
  if (rows.size() != n_rows) {
    throw std::invalid_argument("Mdp: expected " + std::to_string(n_rows) +
                                " transition rows, got " +
                                std::to_string(rows.size()));
  }
  offsets_.reserve(n_rows + 1);
  offsets_.push_back(0);
  for (std::size_t row = 0; row < n_rows; ++row) {
    double total = 0.0;
    for (const auto& t : rows[row]) {
      if (t.next_state < 0 || t.next_state >= n_states) {
        throw std::invalid_argument("Mdp: successor " + std::to_string(t.next_state) +
                                    " out of range in row " + std::to_string(row));
      }
      if (!(t.probability >= 0.0) || !std::isfinite(t.probability)) {
        throw std::invalid_argument("Mdp: negative or non-finite probability in row " +
                                    std::to_string(row));
      }
      total += t.probability;
      transitions_.push_back(t);
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("Mdp: probabilities of row " + std::to_string(row) +
                                  " sum to " + std::to_string(total));
    }
    offsets_.push_back(transitions_.size());
  }
}

void validate_trajectories(std::span<const Trajectory> trajectories,
                           int n_states, int n_actions) {
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto& steps = trajectories[i].steps;
    if (steps.empty()) {
      throw std::invalid_argument("trajectory " + std::to_string(i) + " is empty");
    }
    for (const auto& step : steps) {
      if (step.state < 0 || step.state >= n_states || step.action < 0 ||
          step.action >= n_actions) {
        throw std::invalid_argument("trajectory " + std::to_string(i) +
                                    " has an out-of-range (state, action) pair");
      }
    }
  }
}

std::size_t total_steps(std::span<const Trajectory> trajectories) {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.steps.size();
  return n;
}

QTable bellman_q(const Mdp& mdp, const RewardVector& reward,
                 const ValueVector& values) {
  const double gamma = mdp.gamma();
  QTable q(mdp.n_states(), mdp.n_actions());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      double acc = 0.0;
      for (const auto& t : mdp.successors(s, a)) {
        acc += t.probability * (reward[t.next_state] + gamma * values[t.next_state]);
      }
      q(s, a) = acc;
    }
  }
  return q;
}

ValueIterationResult value_iteration(const Mdp& mdp, const RewardVector& reward,
                                     double tol, int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("value_iteration: max_iter must be >= 1");
  if (reward.size() != mdp.n_states()) {
    throw std::invalid_argument("value_iteration: reward length does not match n_states");
  }

  ValueIterationResult result;
  result.values = ValueVector::Zero(mdp.n_states());
  result.residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    result.q = bellman_q(mdp, reward, result.values);
    ValueVector next = result.q.rowwise().maxCoeff();
    result.residual = (next - result.values).cwiseAbs().maxCoeff();
    result.values = std::move(next);
    result.iterations = it + 1;
    if (result.residual < tol) {
      result.converged = true;
      break;
    }
  }
  // Q consistent with the returned V.
  result.q = bellman_q(mdp, reward, result.values);
  return result;
}

std::vector<int> greedy_policy(const QTable& q) {
  std::vector<int> policy(q.rows());
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    int best = 0;
    for (Eigen::Index a = 1; a < q.cols(); ++a) {
      if (q(s, a) > q(s, best)) best = static_cast<int>(a);
    }
    policy[s] = best;
  }
  return policy;
}

Eigen::VectorXd boltzmann_distribution(const Eigen::Ref<const Eigen::VectorXd>& q_row,
                                       double b) {
  const Eigen::VectorXd scaled = b * q_row;
  Eigen::VectorXd p = (scaled.array() - scaled.maxCoeff()).exp();
  return p / p.sum();
}

double uniform01(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

int sample_index(std::span<const double> probabilities, double u) {
  double cumulative = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    cumulative += probabilities[i];
    if (u < cumulative) return static_cast<int>(i);
  }
  // Rounding left u above the final cumulative sum; take the last nonzero entry.
  for (std::size_t i = probabilities.size(); i-- > 0;) {
    if (probabilities[i] > 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(probabilities.size()) - 1;
}

std::vector<Trajectory> sample_trajectories(const Mdp& mdp, const QTable& q,
                                            double b, int count, int horizon,
                                            std::uint64_t seed) {
  if (count < 1 || horizon < 1) {
    throw std::invalid_argument("sample_trajectories: count and horizon must be >= 1");
  }
  if (q.rows() != mdp.n_states() || q.cols() != mdp.n_actions()) {
    throw std::invalid_argument("sample_trajectories: Q shape does not match the MDP");
  }

  std::vector<Eigen::VectorXd> policy(mdp.n_states());
  for (int s = 0; s < mdp.n_states(); ++s) {
    policy[s] = boltzmann_distribution(q.row(s).transpose(), b);
  }

  std::mt19937_64 rng(seed);
  std::vector<double> successor_probs;
  std::vector<Trajectory> out(count);
  for (auto& trajectory : out) {
    trajectory.steps.reserve(horizon);
    int state = static_cast<int>(uniform01(rng()) * mdp.n_states());
    for (int t = 0; t < horizon; ++t) {
      const auto& p = policy[state];
      const int action = sample_index({p.data(), static_cast<std::size_t>(p.size())},
                                      uniform01(rng()));
      trajectory.steps.push_back({state, action});

      const auto successors = mdp.successors(state, action);
      successor_probs.clear();
      for (const auto& tr : successors) successor_probs.push_back(tr.probability);
      state = successors[sample_index(successor_probs, uniform01(rng()))].next_state;
    }
  }
  return out;
}

Correlation pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("pearson_correlation: length mismatch (" +
                                std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) {
    throw std::invalid_argument("pearson_correlation: need at least two entries");
  }
  const auto n = static_cast<double>(x.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  // Relative floor so that constant vectors with rounding noise still count as flat.
  const auto flat = [&](double ss, double mean) {
    return ss <= 1e-24 * n * std::max(1.0, mean * mean);
  };
  if (flat(sxx, mean_x) || flat(syy, mean_y)) return {0.0, true};
  const double r = sxy / std::sqrt(sxx * syy);
  return {std::clamp(r, -1.0, 1.0), false};
}

Correlation pearson_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  return pearson_correlation(std::span<const double>(x.data(), x.size()),
                             std::span<const double>(y.data(), y.size()));
}

}  // namespace fairl
