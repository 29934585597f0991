#pragma once

#include "fairl/backup.hpp"
#include "fairl/gp.hpp"
#include "fairl/learner.hpp"
#include "fairl/mlp.hpp"
#include "fairl/objectworld.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace fairl {

using Json = nlohmann::ordered_json;

// Every from_json reads fields leniently: keys that are absent keep their
// defaults, unknown keys are rejected so typos in config files surface.

Json to_json(const BackupOperator& op);
BackupOperator backup_from_json(const Json& j);

Json to_json(const ObjectworldConfig& c);
ObjectworldConfig objectworld_config_from_json(const Json& j);

Json to_json(const CopConfig& c);
CopConfig cop_config_from_json(const Json& j);

Json to_json(const FairlConfig& c);
FairlConfig fairl_config_from_json(const Json& j);

/// {"layer_sizes": [...], "theta": [...]}
Json to_json(const MlpParams& p);
MlpParams mlp_params_from_json(const Json& j);

Json to_json(const GpParams& p);
GpParams gp_params_from_json(const Json& j);

/// Objects or COP schedule, features and rewards; enough to audit an instance.
Json to_json(const EnvBundle& env);

Json to_json(const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> trajectories_from_json(const Json& j);

Json to_json(const TrainReport& report);

Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);

/// Reward vector from a file holding a bare array or an object with a
/// "reward" or "true_reward" array.
Eigen::VectorXd reward_from_json(const Json& j);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace fairl
