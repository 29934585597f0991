#include "fairl/serialization.hpp"

#include "fairl/detail/json_fields.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fairl {

using Fields = detail::JsonFields<Json>;

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected a JSON array of numbers");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw std::invalid_argument("expected a JSON array of numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

Json to_json(const BackupOperator& op) {
  Json j{{"kind", kind_name(op)}};
  if (const auto* o = std::get_if<backup::PNorm>(&op)) j["p"] = o->p;
  if (const auto* o = std::get_if<backup::GSoft>(&op)) j["k"] = o->k;
  return j;
}

BackupOperator backup_from_json(const Json& j) {
  if (j.is_string()) return make_backup(j.get<std::string>(), j == "pnorm" ? 10.0 : 100.0);
  std::string kind = "max";
  double p = 10.0, k = 100.0;
  Fields(j, "backup").get("kind", kind).get("p", p).get("k", k).finish();
  return make_backup(kind, kind == "pnorm" ? p : k);
}

Json to_json(const ObjectworldConfig& c) {
  return {{"grid_n", c.grid_n}, {"n_objects", c.n_objects}, {"n_colors", c.n_colors},
          {"seed", c.seed},     {"wind", c.wind},           {"gamma", c.gamma}};
}

ObjectworldConfig objectworld_config_from_json(const Json& j) {
  ObjectworldConfig c;
  Fields(j, "objectworld")
      .get("grid_n", c.grid_n)
      .get("n_objects", c.n_objects)
      .get("n_colors", c.n_colors)
      .get("seed", c.seed)
      .get("wind", c.wind)
      .get("gamma", c.gamma)
      .finish();
  validate(c);
  return c;
}

Json to_json(const CopConfig& c) {
  return {{"grid_g", c.grid_g},
          {"n_directions", c.n_directions},
          {"seed", c.seed},
          {"segments_per_instruction", c.segments_per_instruction},
          {"segment_length", c.segment_length},
          {"include_origin", c.include_origin},
          {"gamma", c.gamma}};
}

CopConfig cop_config_from_json(const Json& j) {
  CopConfig c;
  Fields(j, "cop")
      .get("grid_g", c.grid_g)
      .get("n_directions", c.n_directions)
      .get("seed", c.seed)
      .get("segments_per_instruction", c.segments_per_instruction)
      .get("segment_length", c.segment_length)
      .get("include_origin", c.include_origin)
      .get("gamma", c.gamma)
      .finish();
  validate(c);
  return c;
}

Json to_json(const FairlConfig& c) {
  return {{"gamma", c.gamma},
          {"b", c.b},
          {"backup", to_json(c.backup)},
          {"learning_rate", c.learning_rate},
          {"max_iter", c.max_iter},
          {"convergence_tol", c.convergence_tol},
          {"early_stop_window", c.early_stop_window},
          {"holdout_fraction", c.holdout_fraction},
          {"motion_model", to_string(c.motion_model)},
          {"optimizer", to_string(c.optimizer)},
          {"per_step_learning_rate", c.per_step_learning_rate},
          {"max_step_norm", c.max_step_norm},
          {"hidden_layers", c.hidden_layers},
          {"supporting_points", c.supporting_points}};
}

FairlConfig fairl_config_from_json(const Json& j) {
  FairlConfig c;
  std::string motion = to_string(c.motion_model);
  std::string optimizer = to_string(c.optimizer);
  Fields fields(j, "learner");
  fields.get("gamma", c.gamma)
      .get("b", c.b)
      .get("learning_rate", c.learning_rate)
      .get("max_iter", c.max_iter)
      .get("convergence_tol", c.convergence_tol)
      .get("early_stop_window", c.early_stop_window)
      .get("holdout_fraction", c.holdout_fraction)
      .get("motion_model", motion)
      .get("optimizer", optimizer)
      .get("per_step_learning_rate", c.per_step_learning_rate)
      .get("max_step_norm", c.max_step_norm)
      .get("hidden_layers", c.hidden_layers)
      .get("supporting_points", c.supporting_points);
  if (fields.has("backup")) c.backup = backup_from_json(j.at("backup"));
  fields.finish();
  c.motion_model = parse_motion_model(motion);
  c.optimizer = parse_optimizer(optimizer);
  validate(c);
  return c;
}

Json to_json(const MlpParams& p) {
  return {{"layer_sizes", p.layer_sizes}, {"theta", vector_to_json(p.theta)}};
}

MlpParams mlp_params_from_json(const Json& j) {
  MlpParams p;
  Json theta = Json::array();
  Fields(j, "mlp").get("layer_sizes", p.layer_sizes).get("theta", theta).finish();
  p.theta = vector_from_json(theta);
  validate(p);
  return p;
}

Json to_json(const GpParams& p) {
  return {{"length_scales", vector_to_json(p.length_scales)},
          {"signal_variance", p.signal_variance},
          {"supporting_states", p.supporting_states},
          {"supporting_values", vector_to_json(p.supporting_values)},
          {"jitter", p.jitter}};
}

GpParams gp_params_from_json(const Json& j) {
  GpParams p;
  Json scales = Json::array(), values = Json::array();
  Fields(j, "gp")
      .get("length_scales", scales)
      .get("signal_variance", p.signal_variance)
      .get("supporting_states", p.supporting_states)
      .get("supporting_values", values)
      .get("jitter", p.jitter)
      .finish();
  p.length_scales = vector_from_json(scales);
  p.supporting_values = vector_from_json(values);
  return p;
}

Json to_json(const EnvBundle& env) {
  Json j{{"kind", env.kind},
         {"n_states", env.mdp.n_states()},
         {"n_actions", env.mdp.n_actions()},
         {"gamma", env.mdp.gamma()},
         {"grid_n", env.grid_n}};
  if (env.kind == "objectworld") {
    j["n_colors"] = env.n_colors;
    Json objects = Json::array();
    for (const auto& o : env.objects) {
      objects.push_back({{"x", o.x}, {"y", o.y}, {"inner_color", o.inner_color},
                         {"outer_color", o.outer_color}});
    }
    j["objects"] = std::move(objects);
  }
  if (env.cop) {
    j["instructions"] = env.cop->instructions;
    j["schedule"] = env.cop->schedule;
    j["segment_length"] = env.cop->segment_length;
  }
  Json features = Json::array();
  for (Eigen::Index s = 0; s < env.features.rows(); ++s) {
    features.push_back(vector_to_json(env.features.row(s).transpose()));
  }
  j["features"] = std::move(features);
  j["true_reward"] = vector_to_json(env.true_reward);
  return j;
}

Json to_json(const std::vector<Trajectory>& trajectories) {
  Json out = Json::array();
  for (const auto& t : trajectories) {
    Json steps = Json::array();
    for (const auto& s : t.steps) steps.push_back(Json::array({s.state, s.action}));
    out.push_back(std::move(steps));
  }
  return out;
}

std::vector<Trajectory> trajectories_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("trajectories: expected an array");
  std::vector<Trajectory> out;
  for (const auto& t : j) {
    Trajectory trajectory;
    for (const auto& s : t) {
      if (!s.is_array() || s.size() != 2) {
        throw std::invalid_argument("trajectories: each step must be [state, action]");
      }
      trajectory.steps.push_back({s[0].get<int>(), s[1].get<int>()});
    }
    out.push_back(std::move(trajectory));
  }
  return out;
}

Json to_json(const TrainReport& report) {
  return {{"iterations_run", report.iterations_run},
          {"converged", report.converged},
          {"final_gradient_norm", report.final_gradient_norm},
          {"best_iteration", report.best_iteration},
          {"loglik_history", report.loglik_history}};
}

Eigen::VectorXd reward_from_json(const Json& j) {
  if (j.is_array()) return vector_from_json(j);
  if (j.is_object()) {
    if (j.contains("reward")) return vector_from_json(j.at("reward"));
    if (j.contains("true_reward")) return vector_from_json(j.at("true_reward"));
  }
  throw std::invalid_argument("reward file needs an array or a 'reward'/'true_reward' field");
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("malformed JSON in '" + path + "': " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

}  // namespace fairl
