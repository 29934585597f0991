#include "fairl/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "fairl/mdp.hpp"

namespace fairl {

Eigen::Index MlpParams::parameter_count(const std::vector<int>& layer_sizes) {
  Eigen::Index n = 0;
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
    n += static_cast<Eigen::Index>(layer_sizes[l]) * (layer_sizes[l - 1] + 1);
  }
  return n;
}

Eigen::Index MlpParams::offset(int layer) const {
  Eigen::Index n = 0;
  for (int l = 0; l < layer; ++l) {
    n += static_cast<Eigen::Index>(layer_sizes[l + 1]) * (layer_sizes[l] + 1);
  }
  return n;
}

Eigen::Map<const Eigen::MatrixXd> MlpParams::weight(int layer) const {
  return {theta.data() + offset(layer), layer_sizes[layer + 1], layer_sizes[layer]};
}

Eigen::Map<Eigen::MatrixXd> MlpParams::weight(int layer) {
  return {theta.data() + offset(layer), layer_sizes[layer + 1], layer_sizes[layer]};
}

Eigen::Map<const Eigen::VectorXd> MlpParams::bias(int layer) const {
  const auto start = offset(layer) + static_cast<Eigen::Index>(layer_sizes[layer + 1]) * layer_sizes[layer];
  return {theta.data() + start, layer_sizes[layer + 1]};
}

Eigen::Map<Eigen::VectorXd> MlpParams::bias(int layer) {
  const auto start = offset(layer) + static_cast<Eigen::Index>(layer_sizes[layer + 1]) * layer_sizes[layer];
  return {theta.data() + start, layer_sizes[layer + 1]};
}

void validate(const MlpParams& params) {
  const auto& sizes = params.layer_sizes;
  if (sizes.size() < 2) throw std::invalid_argument("mlp: need at least input and output layers");
  for (int s : sizes) {
    if (s <= 0) throw std::invalid_argument("mlp: layer sizes must be positive");
  }
  if (sizes.back() != 1) throw std::invalid_argument("mlp: output layer must have exactly 1 unit");
  if (params.theta.size() != MlpParams::parameter_count(sizes)) {
    throw std::invalid_argument("mlp: parameter vector has length " +
                                std::to_string(params.theta.size()) + ", expected " +
                                std::to_string(MlpParams::parameter_count(sizes)));
  }
  if (!params.theta.allFinite()) throw std::invalid_argument("mlp: non-finite parameters");
}

MlpParams make_mlp(const std::vector<int>& layer_sizes) {
  MlpParams p{layer_sizes, Eigen::VectorXd::Zero(MlpParams::parameter_count(layer_sizes))};
  validate(p);
  return p;
}

MlpParams init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  MlpParams p = make_mlp(layer_sizes);
  std::mt19937_64 rng(seed);
  for (int l = 0; l < p.n_layers(); ++l) {
    const double limit = std::sqrt(6.0 / (layer_sizes[l] + layer_sizes[l + 1]));
    auto w = p.weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        w(i, j) = (2.0 * uniform01(rng()) - 1.0) * limit;
      }
    }
  }
  return p;
}

namespace {

void check_input(const MlpParams& params, Eigen::Index width) {
  if (width != params.input_size()) {
    throw std::invalid_argument("mlp: feature dimension " + std::to_string(width) +
                                " does not match input size " +
                                std::to_string(params.input_size()));
  }
}

// Post-activation outputs of every layer, columns are samples.
std::vector<Eigen::MatrixXd> forward_activations(const MlpParams& params,
                                                 const Eigen::MatrixXd& inputs) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(params.n_layers() + 1);
  acts.push_back(inputs);
  for (int l = 0; l < params.n_layers(); ++l) {
    Eigen::MatrixXd z = params.weight(l) * acts.back();
    z.colwise() += params.bias(l);
    if (l + 1 < params.n_layers()) z = z.array().tanh().matrix();
    acts.push_back(std::move(z));
  }
  return acts;
}

}  // namespace

double mlp_forward(const MlpParams& params, const Eigen::Ref<const Eigen::VectorXd>& feature) {
  check_input(params, feature.size());
  const Eigen::MatrixXd input = feature;
  return forward_activations(params, input).back()(0, 0);
}

Eigen::VectorXd mlp_forward_batch(const MlpParams& params, const Eigen::MatrixXd& features) {
  check_input(params, features.cols());
  return forward_activations(params, features.transpose()).back().row(0).transpose();
}

Eigen::VectorXd mlp_pullback(const MlpParams& params, const Eigen::MatrixXd& features,
                             const Eigen::VectorXd& cotangent) {
  check_input(params, features.cols());
  if (cotangent.size() != features.rows()) {
    throw std::invalid_argument("mlp: cotangent length does not match the batch");
  }
  const auto acts = forward_activations(params, features.transpose());

  MlpParams grad = make_mlp(params.layer_sizes);
  Eigen::MatrixXd delta = cotangent.transpose();  // d out / d z, one column per sample
  for (int l = params.n_layers() - 1; l >= 0; --l) {
    grad.weight(l).noalias() = delta * acts[l].transpose();
    grad.bias(l) = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = params.weight(l).transpose() * delta;
      delta = back.array() * (1.0 - acts[l].array().square());
    }
  }
  return grad.theta;
}

Eigen::VectorXd mlp_param_gradient(const MlpParams& params,
                                   const Eigen::Ref<const Eigen::VectorXd>& feature) {
  check_input(params, feature.size());
  const Eigen::MatrixXd row = feature.transpose();
  return mlp_pullback(params, row, Eigen::VectorXd::Ones(1));
}

}  // namespace fairl
