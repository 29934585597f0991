#include "fairl/objectworld.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace fairl {

namespace {

constexpr std::array<std::array<int, 2>, kObjectworldActions> kMoves{{
    {1, 0}, {0, 1}, {-1, 0}, {0, -1}, {0, 0}}};

constexpr std::array<std::array<int, 2>, kCopDirections> kDirectionSteps{{
    {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

int clamp_cell(int v, int n) { return std::clamp(v, 0, n - 1); }

// Uniform integer in [0, n) from one engine draw.
int draw_below(std::mt19937_64& rng, int n) {
  return std::min(n - 1, static_cast<int>(uniform01(rng()) * n));
}

}  // namespace

void validate(const ObjectworldConfig& c) {
  if (c.grid_n <= 0) throw std::invalid_argument("objectworld: grid_n must be positive");
  if (c.n_objects <= 0) throw std::invalid_argument("objectworld: n_objects must be positive");
  if (c.n_objects > c.grid_n * c.grid_n)
    throw std::invalid_argument("objectworld: more objects than cells");
  if (c.n_colors < 2) throw std::invalid_argument("objectworld: n_colors must be >= 2");
  if (!(c.wind >= 0.0 && c.wind < 1.0))
    throw std::invalid_argument("objectworld: wind must lie in [0, 1)");
}

int chebyshev(int x0, int y0, int x1, int y1) {
  return std::max(std::abs(x0 - x1), std::abs(y0 - y1));
}

double true_reward_at(int state, std::span<const PlacedObject> objects, int grid_n) {
  const int x = state % grid_n;
  const int y = state / grid_n;
  bool near_c1 = false;
  bool near_c2 = false;
  for (const auto& o : objects) {
    const int d = chebyshev(x, y, o.x, o.y);
    if (o.outer_color == kColorC1 && d <= 3) near_c1 = true;
    if (o.outer_color == kColorC2 && d <= 2) near_c2 = true;
  }
  if (near_c1 && near_c2) return 1.0;
  if (near_c1) return -1.0;
  return 0.0;
}

Eigen::VectorXd state_features(int state, std::span<const PlacedObject> objects,
                               int n_colors, int grid_n) {
  const int x = state % grid_n;
  const int y = state / grid_n;
  Eigen::VectorXd feature = Eigen::VectorXd::Constant(2 * n_colors, grid_n);
  for (const auto& o : objects) {
    const double d = chebyshev(x, y, o.x, o.y);
    feature[o.inner_color] = std::min(feature[o.inner_color], d);
    feature[n_colors + o.outer_color] = std::min(feature[n_colors + o.outer_color], d);
  }
  return feature;
}

EnvBundle generate(const ObjectworldConfig& config) {
  validate(config);
  const int n = config.grid_n;
  const int n_states = n * n;
  std::mt19937_64 rng(config.seed);

  // Distinct cells via a partial Fisher-Yates shuffle.
  std::vector<int> cells(n_states);
  std::iota(cells.begin(), cells.end(), 0);
  for (int i = 0; i < config.n_objects; ++i) {
    const int j = i + draw_below(rng, n_states - i);
    std::swap(cells[i], cells[j]);
  }
  std::vector<PlacedObject> objects;
  objects.reserve(config.n_objects);
  for (int i = 0; i < config.n_objects; ++i) {
    PlacedObject o;
    o.x = cells[i] % n;
    o.y = cells[i] / n;
    o.inner_color = draw_below(rng, config.n_colors);
    o.outer_color = draw_below(rng, config.n_colors);
    objects.push_back(o);
  }
  // Both reward-relevant outer colors are always present so the ground truth
  // is never identically zero.
  objects[0].outer_color = kColorC1;
  if (config.n_objects >= 2) objects[1].outer_color = kColorC2;

  std::vector<std::vector<Transition>> rows(static_cast<std::size_t>(n_states) *
                                            kObjectworldActions);
  for (int s = 0; s < n_states; ++s) {
    const int x = s % n;
    const int y = s / n;
    const auto target = [&](int move) {
      return clamp_cell(y + kMoves[move][1], n) * n + clamp_cell(x + kMoves[move][0], n);
    };
    for (int a = 0; a < kObjectworldActions; ++a) {
      std::map<int, double> mass;
      mass[target(a)] += 1.0 - config.wind;
      if (config.wind > 0.0) {
        for (int m = 0; m < kObjectworldActions; ++m) {
          mass[target(m)] += config.wind / kObjectworldActions;
        }
      }
      auto& row = rows[static_cast<std::size_t>(s) * kObjectworldActions + a];
      for (const auto& [next, p] : mass) row.push_back({next, p});
    }
  }

  Eigen::MatrixXd features(n_states, 2 * config.n_colors);
  RewardVector reward(n_states);
  for (int s = 0; s < n_states; ++s) {
    features.row(s) = state_features(s, objects, config.n_colors, n).transpose();
    reward[s] = true_reward_at(s, objects, n);
  }

  return EnvBundle{"objectworld",
                   Mdp(n_states, kObjectworldActions, rows, config.gamma),
                   std::move(features),
                   std::move(reward),
                   n,
                   config.n_colors,
                   std::move(objects),
                   std::nullopt};
}

std::array<double, 2> direction_vector(int direction) {
  const auto [dx, dy] = kDirectionSteps.at(direction);
  const double norm = std::sqrt(static_cast<double>(dx * dx + dy * dy));
  return {dx / norm, dy / norm};
}

std::array<int, 2> direction_step(int direction) { return kDirectionSteps.at(direction); }

std::string instruction_name(int instruction) {
  static const std::array<const char*, kCopDirections + 1> names{
      "right", "top right", "forward", "top left", "left",
      "bottom left", "backward", "bottom right", "origin"};
  return names.at(instruction);
}

void validate(const CopConfig& c) {
  if (c.grid_g <= 0) throw std::invalid_argument("cop: grid_g must be positive");
  if (c.n_directions != 4 && c.n_directions != 8)
    throw std::invalid_argument("cop: n_directions must be 4 or 8");
  if (c.segments_per_instruction < 1 || c.segment_length < 1)
    throw std::invalid_argument("cop: segment counts must be positive");
}

EnvBundle cop_generate(const CopConfig& config) {
  validate(config);
  const int g = config.grid_g;
  const int n_states = g * g * kCopDirections;

  std::vector<std::vector<Transition>> rows(static_cast<std::size_t>(n_states) *
                                            kCopDirections);
  Eigen::MatrixXd features(n_states, 4);
  const double scale = g > 1 ? 1.0 / (g - 1) : 0.0;
  for (int s = 0; s < n_states; ++s) {
    const int cell = s / kCopDirections;
    const int v = s % kCopDirections;
    const int x = cell % g;
    const int y = cell / g;
    for (int a = 0; a < kCopDirections; ++a) {
      const auto [dx, dy] = kDirectionSteps[a];
      const int next = (clamp_cell(y + dy, g) * g + clamp_cell(x + dx, g)) * kCopDirections + a;
      rows[static_cast<std::size_t>(s) * kCopDirections + a].push_back({next, 1.0});
    }
    const auto [vx, vy] = direction_vector(v);
    features.row(s) << x * scale, y * scale, vx, vy;
  }

  CopInfo info;
  info.grid_g = g;
  const int stride = config.n_directions == 8 ? 1 : 2;
  for (int d = 0; d < kCopDirections; d += stride) info.instructions.push_back(d);
  if (config.include_origin) info.instructions.push_back(kOriginInstruction);
  for (int rep = 0; rep < config.segments_per_instruction; ++rep) {
    info.schedule.insert(info.schedule.end(), info.instructions.begin(),
                         info.instructions.end());
  }
  std::mt19937_64 rng(config.seed);
  for (std::size_t i = info.schedule.size(); i > 1; --i) {
    std::swap(info.schedule[i - 1], info.schedule[draw_below(rng, static_cast<int>(i))]);
  }
  info.segment_length = config.segment_length;

  return EnvBundle{"cop",
                   Mdp(n_states, kCopDirections, rows, config.gamma),
                   std::move(features),
                   RewardVector::Zero(n_states),
                   g,
                   0,
                   {},
                   std::move(info)};
}

double ideal_reward(int state, int instructed_direction) {
  if (instructed_direction < 0 || instructed_direction >= kCopDirections) {
    throw std::invalid_argument("ideal_reward: instructed direction must be in [0, 8)");
  }
  const auto v = direction_vector(state % kCopDirections);
  const auto d = direction_vector(instructed_direction);
  return v[0] * d[0] + v[1] * d[1];
}

double origin_reward(int state, int grid_g) {
  const int cell = state / kCopDirections;
  const double cx = 0.5 * (grid_g - 1);
  const double to_x = cx - cell % grid_g;
  const double to_y = cx - cell / grid_g;
  const double norm = std::hypot(to_x, to_y);
  if (norm < 1e-12) return 0.0;
  const auto v = direction_vector(state % kCopDirections);
  return (v[0] * to_x + v[1] * to_y) / norm;
}

double instruction_reward(int state, int instruction, int grid_g) {
  return instruction == kOriginInstruction ? origin_reward(state, grid_g)
                                           : ideal_reward(state, instruction);
}

RewardVector instruction_reward_vector(int instruction, int grid_g) {
  RewardVector r(grid_g * grid_g * kCopDirections);
  for (int s = 0; s < r.size(); ++s) r[s] = instruction_reward(s, instruction, grid_g);
  return r;
}

}  // namespace fairl
