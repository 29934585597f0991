#pragma once

#include "fairl/mdp.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fairl {

// ---------------------------------------------------------------------------
// Objectworld
//
// An N x N grid with colored objects. State index is y * N + x. Actions are
// 0: +x, 1: +y, 2: -x, 3: -y, 4: stay. Colors 0 and 1 are the reward-relevant
// outer colors C1 and C2.
// ---------------------------------------------------------------------------

inline constexpr int kObjectworldActions = 5;
inline constexpr int kColorC1 = 0;
inline constexpr int kColorC2 = 1;

struct ObjectworldConfig {
  int grid_n = 5;
  int n_objects = 2;
  int n_colors = 2;
  std::uint64_t seed = 0;
  /// Probability that a move is replaced by a uniformly random move (stay included).
  double wind = 0.0;
  double gamma = 0.9;
};

struct PlacedObject {
  int x = 0;
  int y = 0;
  int inner_color = 0;
  int outer_color = 0;

  friend bool operator==(const PlacedObject&, const PlacedObject&) = default;
};

inline constexpr int kCopDirections = 8;
/// Instruction code for "return to the origin" in COP schedules.
inline constexpr int kOriginInstruction = 8;

struct CopConfig {
  int grid_g = 10;
  /// 4 (axis directions only) or 8.
  int n_directions = 8;
  std::uint64_t seed = 0;
  /// Each instruction appears this many times in the shuffled schedule.
  int segments_per_instruction = 3;
  int segment_length = 30;
  bool include_origin = true;
  double gamma = 0.9;
};

struct CopInfo {
  int grid_g = 0;
  /// Instruction codes used in this session, in column order.
  std::vector<int> instructions;
  /// One instruction code per episode segment.
  std::vector<int> schedule;
  int segment_length = 0;
};

/// Everything an experiment consumes: the MDP, per-state features and the
/// ground-truth reward, plus generator metadata.
struct EnvBundle {
  std::string kind;  // "objectworld" or "cop"
  Mdp mdp;
  Eigen::MatrixXd features;  // n_states x d
  RewardVector true_reward;
  int grid_n = 0;
  int n_colors = 0;
  std::vector<PlacedObject> objects;
  std::optional<CopInfo> cop;
};

void validate(const ObjectworldConfig& config);

EnvBundle generate(const ObjectworldConfig& config);

int chebyshev(int x0, int y0, int x1, int y1);

/// +1 within 3 of a C1-outer object and within 2 of a C2-outer object,
/// -1 within 3 of a C1-outer object only, 0 otherwise.
double true_reward_at(int state, std::span<const PlacedObject> objects, int grid_n);

/// Chebyshev distance to the nearest object of each inner color, then of each
/// outer color. Missing colors saturate at grid_n.
Eigen::VectorXd state_features(int state, std::span<const PlacedObject> objects,
                               int n_colors, int grid_n);

// ---------------------------------------------------------------------------
// Synthetic center-of-pressure benchmark
//
// State index is (y * G + x) * 8 + v, where v is the current velocity
// direction. Direction codes run counter-clockwise from +x:
// 0 E, 1 NE, 2 N, 3 NW, 4 W, 5 SW, 6 S, 7 SE. Action a sets v = a and moves
// one cell along it, clamped at the border.
// ---------------------------------------------------------------------------

/// Unit vector of a direction code.
std::array<double, 2> direction_vector(int direction);
/// Integer cell offset of a direction code.
std::array<int, 2> direction_step(int direction);

/// Column name used in COP result tables ("forward", "top left", ..., "origin").
std::string instruction_name(int instruction);

void validate(const CopConfig& config);

EnvBundle cop_generate(const CopConfig& config);

/// Cosine between the state's velocity and an instructed direction (0..7).
double ideal_reward(int state, int instructed_direction);

/// Cosine between the state's velocity and the direction towards the grid
/// center; 0 at the center itself.
double origin_reward(int state, int grid_g);

/// Dispatches to ideal_reward or origin_reward.
double instruction_reward(int state, int instruction, int grid_g);

RewardVector instruction_reward_vector(int instruction, int grid_g);

}  // namespace fairl
