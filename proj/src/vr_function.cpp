#include "fairl/vr_function.hpp"

#include <cmath>
#include <stdexcept>

namespace fairl {

double VrFunction::log_prior(const Eigen::MatrixXd&) const { return 0.0; }

Eigen::VectorXd VrFunction::log_prior_gradient(const Eigen::MatrixXd&) const {
  return Eigen::VectorXd::Zero(parameters().size());
}

MlpVrFunction::MlpVrFunction(MlpParams params) : params_(std::move(params)) {
  validate(params_);
}

void MlpVrFunction::set_parameters(const Eigen::VectorXd& theta) {
  if (theta.size() != params_.theta.size()) {
    throw std::invalid_argument("MlpVrFunction: parameter length mismatch");
  }
  params_.theta = theta;
}

Eigen::VectorXd MlpVrFunction::values(const Eigen::MatrixXd& features) const {
  return mlp_forward_batch(params_, features);
}

Eigen::VectorXd MlpVrFunction::pullback(const Eigen::MatrixXd& features,
                                        const Eigen::VectorXd& cotangent) const {
  return mlp_pullback(params_, features, cotangent);
}

GpVrFunction::GpVrFunction(GpParams params) : params_(std::move(params)) {}

Eigen::VectorXd GpVrFunction::parameters() const {
  const auto d = params_.length_scales.size();
  const auto m = params_.supporting_values.size();
  Eigen::VectorXd theta(d + 1 + m);
  theta.head(d) = params_.length_scales.array().log().matrix();
  theta[d] = std::log(params_.signal_variance);
  theta.tail(m) = params_.supporting_values;
  return theta;
}

void GpVrFunction::set_parameters(const Eigen::VectorXd& theta) {
  const auto d = params_.length_scales.size();
  const auto m = params_.supporting_values.size();
  if (theta.size() != d + 1 + m) {
    throw std::invalid_argument("GpVrFunction: parameter length mismatch");
  }
  params_.length_scales = theta.head(d).array().exp().matrix();
  params_.signal_variance = std::exp(theta[d]);
  params_.supporting_values = theta.tail(m);
}

Eigen::VectorXd GpVrFunction::to_flat(const GpGradient& g) const {
  const auto d = params_.length_scales.size();
  const auto m = params_.supporting_values.size();
  Eigen::VectorXd flat(d + 1 + m);
  // Chain rule through the log parameterization.
  flat.head(d) = g.length_scales.cwiseProduct(params_.length_scales);
  flat[d] = g.signal_variance * params_.signal_variance;
  flat.tail(m) = g.supporting_values;
  return flat;
}

Eigen::VectorXd GpVrFunction::values(const Eigen::MatrixXd& features) const {
  return gp_mean_all(params_, features);
}

Eigen::VectorXd GpVrFunction::pullback(const Eigen::MatrixXd& features,
                                       const Eigen::VectorXd& cotangent) const {
  return to_flat(gp_mean_pullback(params_, features, cotangent));
}

double GpVrFunction::log_prior(const Eigen::MatrixXd& features) const {
  return gp_prior_loglik(params_, features);
}

Eigen::VectorXd GpVrFunction::log_prior_gradient(const Eigen::MatrixXd& features) const {
  return to_flat(gp_prior_gradient(params_, features));
}

}  // namespace fairl
