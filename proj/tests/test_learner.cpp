#include "fairl/learner.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace fairl;

namespace {

const std::vector<BackupOperator> kOperators{backup::Max{}, backup::LogSumExp{}, backup::PNorm{},
                                             backup::GSoft{}};
const std::vector<MotionModel> kModels{MotionModel::QBased, MotionModel::RewardBased,
                                       MotionModel::ValueBased};

std::vector<Trajectory> random_trajectories(oracle::Rng& rng, int n_states, int n_actions,
                                            int count, int length) {
  std::vector<Trajectory> out(count);
  for (auto& t : out) {
    for (int i = 0; i < length; ++i) {
      t.steps.push_back({rng.integer(0, n_states - 1), rng.integer(0, n_actions - 1)});
    }
  }
  return out;
}

EnvBundle small_world(std::uint64_t seed) {
  ObjectworldConfig c;
  c.seed = seed;
  return generate(c);
}

std::vector<Trajectory> demonstrations(const EnvBundle& env, int count, std::uint64_t seed) {
  const auto q = value_iteration(env.mdp, env.true_reward).q;
  return sample_trajectories(env.mdp, q, 1.0, count, 40, seed);
}

}  // namespace

TEST_CASE("constructions on a two-state chain") {
  // f(1) = 2 everywhere reachable: Q = P f, V = max Q, r = f - gamma V.
  const Mdp mdp(2, 2, {{{0, 1.0}}, {{1, 1.0}}, {{0, 0.5}, {1, 0.5}}, {{1, 1.0}}}, 0.5);
  const Eigen::VectorXd f = (Eigen::VectorXd(2) << 1.0, 3.0).finished();
  const Constructions c = construct(mdp, f, backup::Max{}, 0.5);
  CHECK(c.q(0, 0) == 1.0);
  CHECK(c.q(0, 1) == 3.0);
  CHECK(c.q(1, 0) == 2.0);
  CHECK(c.v[0] == 3.0);
  CHECK(c.v[1] == 3.0);
  CHECK(c.r[0] == doctest::Approx(1.0 - 1.5));
  CHECK(c.r[1] == doctest::Approx(3.0 - 1.5));
  CHECK(r_from_vr(mdp, f, backup::Max{}, 0.5) == c.r);
  CHECK(v_from_vr(mdp, f, backup::Max{}) == c.v);
}

TEST_CASE("the constructed reward has the VR function as its optimal f") {
  oracle::Rng rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = rng.integer(2, 10), m = rng.integer(1, 4);
    const double gamma = rng.uniform(0.1, 0.95);
    const Mdp mdp = oracle::random_mdp(rng, n, m, 3, gamma);
    const Eigen::VectorXd f = rng.normal_vector(n, 2.0);
    const Constructions c = construct(mdp, f, backup::Max{}, gamma);
    const Eigen::VectorXd exact = oracle::policy_iteration(mdp, c.r);
    CHECK((exact - c.v).lpNorm<Eigen::Infinity>() < 1e-8);
    // Bellman optimality: Q = P (r + gamma V).
    CHECK((oracle::q_of(mdp, c.r, c.v) - c.q).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("log-likelihood hand case") {
  QTable q(1, 2);
  q << 0.0, std::log(3.0);
  const std::vector<Trajectory> one{Trajectory{{{0, 1}}}};
  CHECK(log_likelihood(one, q, 1.0) == doctest::Approx(std::log(0.75)));
  const std::vector<Trajectory> two{Trajectory{{{0, 1}, {0, 0}}}};
  CHECK(log_likelihood(two, q, 1.0) == doctest::Approx(std::log(0.75) + std::log(0.25)));
  CHECK(log_likelihood(one, q, 0.0) == doctest::Approx(std::log(0.5)));
}

TEST_CASE("motion models on a hand example") {
  // Two states, action a moves to state a.
  const Mdp mdp(2, 2, {{{0, 1.0}}, {{1, 1.0}}, {{0, 1.0}}, {{1, 1.0}}}, 0.9);
  const Eigen::VectorXd f = (Eigen::VectorXd(2) << 0.0, std::log(3.0)).finished();
  const double b = 2.0;
  CHECK(action_log_prob(MotionModel::QBased, mdp, f, backup::Max{}, b, 0, 1) ==
        doctest::Approx(std::log(9.0 / 10.0)));
  CHECK(action_log_prob(MotionModel::RewardBased, mdp, f, backup::Max{}, b, 0, 1) ==
        doctest::Approx(std::log(0.75)));
  // V = max Q = ln 3 in both states; deterministic moves give -V(s) + V(s').
  CHECK(action_log_prob(MotionModel::ValueBased, mdp, f, backup::Max{}, b, 0, 1) ==
        doctest::Approx(0.0));
  // With log-sum-exp, V = ln 4 in both states as well.
  CHECK(action_log_prob(MotionModel::ValueBased, mdp, f, backup::LogSumExp{}, b, 1, 0) ==
        doctest::Approx(0.0));
  CHECK_THROWS_AS(action_log_prob(MotionModel::QBased, mdp, f, backup::Max{}, b, 2, 0),
                  std::invalid_argument);
}

TEST_CASE("value-based model with stochastic successors") {
  const Mdp mdp(3, 1, {{{1, 0.5}, {2, 0.5}}, {{1, 1.0}}, {{2, 1.0}}}, 0.9);
  const Eigen::VectorXd f = (Eigen::VectorXd(3) << 0.0, 1.0, 2.0).finished();
  // Single action: V = Q = P f = (1.5, 1, 2).
  const double expected = -1.5 - std::log(0.5 * std::exp(-1.0) + 0.5 * std::exp(-2.0));
  CHECK(action_log_prob(MotionModel::ValueBased, mdp, f, backup::Max{}, 1.0, 0, 0) ==
        doctest::Approx(expected));
}

TEST_CASE("motion log-likelihood sums per-step log-probabilities") {
  oracle::Rng rng(52);
  const Mdp mdp = oracle::random_mdp(rng, 7, 3, 3, 0.9);
  const auto trajectories = random_trajectories(rng, 7, 3, 4, 6);
  const ActionCounts counts = count_actions(trajectories, 7, 3);
  CHECK(counts.total == 24.0);
  const Eigen::VectorXd f = rng.normal_vector(7);
  for (const auto& op : kOperators) {
    for (auto model : kModels) {
      FairlConfig config;
      config.backup = op;
      config.motion_model = model;
      config.b = 1.7;
      double expected = 0.0;
      for (const auto& t : trajectories) {
        for (const auto& s : t.steps) {
          expected += action_log_prob(model, mdp, f, op, config.b, s.state, s.action);
        }
      }
      CHECK(motion_log_likelihood(mdp, f, config, counts) == doctest::Approx(expected));
    }
  }
  FairlConfig qbased;
  qbased.b = 1.7;
  CHECK(motion_log_likelihood(mdp, f, qbased, counts) ==
        doctest::Approx(log_likelihood(trajectories, q_from_vr(mdp, f), 1.7)));
}

TEST_CASE("motion gradient in f matches finite differences") {
  oracle::Rng rng(53);
  for (const auto& op : kOperators) {
    for (auto model : kModels) {
      for (int trial = 0; trial < 10; ++trial) {
        const int n = rng.integer(2, 8), m = rng.integer(2, 4);
        const Mdp mdp = oracle::random_mdp(rng, n, m, 3, 0.9);
        const ActionCounts counts = count_actions(random_trajectories(rng, n, m, 3, 5), n, m);
        FairlConfig config;
        config.backup = op;
        config.motion_model = model;
        config.b = rng.uniform(0.5, 2.0);
        const Eigen::VectorXd f = rng.normal_vector(n);
        const auto fn = [&](const Eigen::VectorXd& x) {
          return motion_log_likelihood(mdp, x, config, counts);
        };
        INFO(label(op), " ", to_string(model));
        CHECK(oracle::relative_error(motion_vr_gradient(mdp, f, config, counts),
                                     oracle::central_difference(fn, f)) < 1e-4);
      }
    }
  }
}

TEST_CASE("parameter gradients match finite differences for both approximators") {
  oracle::Rng rng(54);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = rng.integer(3, 8), m = rng.integer(2, 4), d = rng.integer(1, 3);
    const Mdp mdp = oracle::random_mdp(rng, n, m, 3, 0.9);
    const auto trajectories = random_trajectories(rng, n, m, 3, 5);
    Eigen::MatrixXd features(n, d);
    for (int s = 0; s < n; ++s) features.row(s) = rng.vector(d, -1, 1).transpose();
    FairlConfig config;
    config.backup = kOperators[trial % 4];
    config.motion_model = kModels[trial % 3];

    MlpParams mlp = init_mlp({d, 4, 3, 1}, trial);
    mlp.theta = rng.normal_vector(static_cast<int>(mlp.theta.size()));
    GpParams gp = init_gp(features, 4, trial);
    gp.supporting_values = rng.normal_vector(static_cast<int>(gp.supporting_states.size()));
    gp.jitter = 1e-2;

    MlpVrFunction nn(mlp);
    GpVrFunction gpf(gp);
    for (VrFunction* approx : std::vector<VrFunction*>{&nn, &gpf}) {
      const Eigen::VectorXd theta = approx->parameters();
      const auto fn = [&](const Eigen::VectorXd& x) {
        approx->set_parameters(x);
        const double v = motion_log_likelihood(mdp, approx->values(features), config,
                                               count_actions(trajectories, n, m));
        approx->set_parameters(theta);
        return v;
      };
      const Eigen::VectorXd fd = oracle::central_difference(fn, theta);
      const Eigen::VectorXd g =
          loglik_gradient(trajectories, mdp, *approx, features, approx->values(features), config);
      CHECK(oracle::relative_error(g, fd) < 1e-4);

      const auto prior = [&](const Eigen::VectorXd& x) {
        approx->set_parameters(x);
        const double v = approx->log_prior(features);
        approx->set_parameters(theta);
        return v;
      };
      const Eigen::VectorXd fd_prior = oracle::central_difference(prior, theta);
      CHECK((approx->log_prior_gradient(features) - fd_prior).norm() <=
            1e-4 * std::max(1.0, fd_prior.norm()));
    }
  }
}

TEST_CASE("q-based likelihood is concave for a linear VR function") {
  oracle::Rng rng(55);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = rng.integer(3, 9), m = rng.integer(2, 4), d = rng.integer(1, 4);
    const Mdp mdp = oracle::random_mdp(rng, n, m, 3, 0.9);
    const ActionCounts counts = count_actions(random_trajectories(rng, n, m, 2, 6), n, m);
    Eigen::MatrixXd phi(n, d);
    for (int s = 0; s < n; ++s) phi.row(s) = rng.normal_vector(d).transpose();
    FairlConfig config;
    config.backup = kOperators[trial % 4];
    const auto L = [&](const Eigen::VectorXd& w) {
      return motion_log_likelihood(mdp, phi * w, config, counts);
    };
    const Eigen::VectorXd x = rng.normal_vector(d, 2.0), y = rng.normal_vector(d, 2.0);
    const double t = rng.uniform(0.0, 1.0);
    CHECK(L(t * x + (1 - t) * y) >= t * L(x) + (1 - t) * L(y) - 1e-9);
  }
}

TEST_CASE("the gradient vanishes where the demonstrator's model is matched") {
  // A single state whose Boltzmann policy reproduces the empirical frequencies
  // is a stationary point of the Q-based likelihood.
  const Mdp mdp(3, 2, {{{1, 1.0}}, {{2, 1.0}}, {{1, 1.0}}, {{2, 1.0}}, {{1, 1.0}}, {{2, 1.0}}}, 0.9);
  const std::vector<Trajectory> trajectories{Trajectory{{{0, 0}, {0, 1}, {0, 1}, {0, 1}}}};
  const ActionCounts counts = count_actions(trajectories, 3, 2);
  const Eigen::VectorXd f = (Eigen::VectorXd(3) << 5.0, 0.0, std::log(3.0)).finished();
  FairlConfig config;
  CHECK(motion_vr_gradient(mdp, f, config, counts).norm() < 1e-12);
}

TEST_CASE("training is deterministic and improves the objective") {
  const EnvBundle env = small_world(2);
  const auto trajectories = demonstrations(env, 40, 7);
  FairlConfig config;
  config.max_iter = 200;
  const auto a = train_nn(env, trajectories, config, 1);
  const auto b = train_nn(env, trajectories, config, 1);
  CHECK(a.params.theta == b.params.theta);
  CHECK(a.report.loglik_history == b.report.loglik_history);
  CHECK(a.report.iterations_run == 200);
  CHECK(a.report.loglik_history.back() > a.report.loglik_history.front());
  CHECK(train_nn(env, trajectories, config, 2).params.theta != a.params.theta);

  // Small steps ascend monotonically.
  config.learning_rate = 0.01;
  config.max_iter = 100;
  const auto slow = train_nn(env, trajectories, config, 1);
  for (std::size_t i = 1; i < slow.report.loglik_history.size(); ++i) {
    CHECK(slow.report.loglik_history[i] >= slow.report.loglik_history[i - 1] - 1e-9);
  }

  const auto g = train_gp(env, trajectories, config, 1);
  CHECK(g.report.loglik_history.back() > g.report.loglik_history.front());
}

TEST_CASE("zero iterations return the initialization") {
  const EnvBundle env = small_world(3);
  const auto trajectories = demonstrations(env, 5, 1);
  FairlConfig config;
  config.max_iter = 0;
  const auto r = train_nn(env, trajectories, config, 4);
  CHECK(r.params.theta == init_mlp(network_shape(4, config), 4).theta);
  CHECK(r.report.loglik_history.empty());
  CHECK(r.report.iterations_run == 0);
  CHECK(network_shape(4, config) == std::vector<int>{4, 4, 4, 4, 1});
  config.hidden_layers = {8};
  CHECK(network_shape(4, config) == std::vector<int>{4, 8, 1});
}

TEST_CASE("training recovers the objectworld reward") {
  const EnvBundle env = small_world(0);
  const auto trajectories = demonstrations(env, 125, 11);
  FairlConfig config;
  const auto r = train_nn(env, trajectories, config, 0);
  CHECK(pearson_correlation(r.constructions.r, env.true_reward).value > 0.6);
}

TEST_CASE("divergence is reported with its iteration") {
  const EnvBundle env = small_world(1);
  const auto trajectories = demonstrations(env, 5, 1);
  FairlConfig config;
  config.learning_rate = std::numeric_limits<double>::infinity();
  config.max_step_norm = 0.0;
  config.max_iter = 50;
  try {
    train_nn(env, trajectories, config, 0);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.iteration() >= 1);
  }
}

TEST_CASE("early stopping returns the best holdout iterate") {
  const EnvBundle env = small_world(5);
  const auto trajectories = demonstrations(env, 30, 3);
  FairlConfig config;
  config.max_iter = 400;
  config.early_stop_window = 5;
  config.learning_rate = 2.0;
  const auto r = train_nn(env, trajectories, config, 0);
  CHECK(r.report.best_iteration < r.report.iterations_run);
  CHECK(r.report.iterations_run <= 400);
}

TEST_CASE("config validation") {
  FairlConfig c;
  CHECK_NOTHROW(validate(c));
  c.gamma = 1.0;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c = {};
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c = {};
  c.hidden_layers = {3, 0};
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c = {};
  c.holdout_fraction = 1.0;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  CHECK(parse_motion_model("rewardbased") == MotionModel::RewardBased);
  CHECK_THROWS_AS(parse_motion_model("other"), std::invalid_argument);
  CHECK(parse_optimizer(to_string(Optimizer::Adam)) == Optimizer::Adam);
}
