#pragma once

// Independent reference computations and random generators shared by the
// unit and acceptance tests. Nothing here calls the solver code under test.

#include "fairl/mdp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using fairl::Mdp;
using fairl::Transition;

struct Rng {
  std::mt19937_64 engine;
  explicit Rng(std::uint64_t seed) : engine(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine); }

  Eigen::VectorXd vector(int n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }
  Eigen::VectorXd normal_vector(int n, double scale = 1.0) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = scale * normal();
    return v;
  }
};

/// Random MDP where each (s, a) has 1..branching distinct successors.
inline Mdp random_mdp(Rng& rng, int n_states, int n_actions, int branching, double gamma) {
  std::vector<std::vector<Transition>> rows;
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      const int k = rng.integer(1, std::min(branching, n_states));
      std::vector<int> next(n_states);
      for (int i = 0; i < n_states; ++i) next[i] = i;
      std::shuffle(next.begin(), next.end(), rng.engine);
      std::vector<double> w(k);
      double total = 0.0;
      for (auto& x : w) total += (x = rng.uniform(0.1, 1.0));
      std::vector<Transition> row;
      double used = 0.0;
      for (int i = 0; i < k; ++i) {
        const double p = i + 1 < k ? w[i] / total : 1.0 - used;
        used += p;
        row.push_back({next[i], p});
      }
      rows.push_back(std::move(row));
    }
  }
  return Mdp(n_states, n_actions, rows, gamma);
}

/// Dense P(s'|s,a) for one action.
inline Eigen::MatrixXd dense_transition(const Mdp& mdp, int action) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(mdp.n_states(), mdp.n_states());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (const auto& t : mdp.successors(s, action)) p(s, t.next_state) += t.probability;
  }
  return p;
}

/// Exact value of a deterministic policy with rewards on successor states:
/// V = P_pi (r + gamma V), solved densely.
inline Eigen::VectorXd evaluate_policy(const Mdp& mdp, const Eigen::VectorXd& reward,
                                       const std::vector<int>& policy) {
  const int n = mdp.n_states();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < n; ++s) {
    for (const auto& t : mdp.successors(s, policy[s])) p(s, t.next_state) += t.probability;
  }
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - mdp.gamma() * p;
  return a.partialPivLu().solve(p * reward);
}

inline Eigen::MatrixXd q_of(const Mdp& mdp, const Eigen::VectorXd& reward,
                            const Eigen::VectorXd& v) {
  Eigen::MatrixXd q(mdp.n_states(), mdp.n_actions());
  const Eigen::VectorXd target = reward + mdp.gamma() * v;
  for (int a = 0; a < mdp.n_actions(); ++a) q.col(a) = dense_transition(mdp, a) * target;
  return q;
}

/// Howard policy iteration with exact evaluation. Terminates at the optimal
/// policy of a finite MDP.
inline Eigen::VectorXd policy_iteration(const Mdp& mdp, const Eigen::VectorXd& reward) {
  std::vector<int> policy(mdp.n_states(), 0);
  for (int round = 0; round < 1000; ++round) {
    const Eigen::VectorXd v = evaluate_policy(mdp, reward, policy);
    const Eigen::MatrixXd q = q_of(mdp, reward, v);
    bool changed = false;
    for (int s = 0; s < mdp.n_states(); ++s) {
      Eigen::Index best;
      const double top = q.row(s).maxCoeff(&best);
      if (top > q(s, policy[s]) + 1e-12) {
        policy[s] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed) return v;
  }
  throw std::runtime_error("policy iteration did not terminate");
}

/// Central finite-difference gradient of a scalar function.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& fn,
                                          const Eigen::VectorXd& x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (fn(xp) - fn(xm)) / (2.0 * h);
    xp[i] = xm[i] = x[i];
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||, floor).
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                             double floor = 1e-6) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
}

}  // namespace oracle
