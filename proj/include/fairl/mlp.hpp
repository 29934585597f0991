#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace fairl {

/**
 * Weights and biases of a fully connected network with tanh hidden units and
 * a single linear output unit.
 *
 * All parameters live in one flat vector. For each layer l, the weight matrix
 * (fan_out x fan_in, column-major) is followed by its bias vector.
 */
struct MlpParams {
  std::vector<int> layer_sizes;
  Eigen::VectorXd theta;

  int n_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int input_size() const { return layer_sizes.front(); }

  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<Eigen::MatrixXd> weight(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);

  /// Offset of layer `layer`'s weight block inside theta.
  Eigen::Index offset(int layer) const;

  static Eigen::Index parameter_count(const std::vector<int>& layer_sizes);
};

/// Throws std::invalid_argument unless there are >= 2 positive layer sizes,
/// the last one is 1, theta has the matching length and is finite.
void validate(const MlpParams& params);

/// All-zero network of the given shape.
MlpParams make_mlp(const std::vector<int>& layer_sizes);

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
MlpParams init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed);

double mlp_forward(const MlpParams& params, const Eigen::Ref<const Eigen::VectorXd>& feature);

/// Outputs for every row of `features`.
Eigen::VectorXd mlp_forward_batch(const MlpParams& params, const Eigen::MatrixXd& features);

/// Gradient of the scalar output with respect to theta.
Eigen::VectorXd mlp_param_gradient(const MlpParams& params,
                                   const Eigen::Ref<const Eigen::VectorXd>& feature);

/// sum_i cotangent_i * d f(features_i) / d theta, in one batched backward pass.
Eigen::VectorXd mlp_pullback(const MlpParams& params, const Eigen::MatrixXd& features,
                             const Eigen::VectorXd& cotangent);

}  // namespace fairl
