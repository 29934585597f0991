#pragma once

#include "fairl/gp.hpp"
#include "fairl/mlp.hpp"

#include <Eigen/Core>

namespace fairl {

/// A parameterized VR function f(s, theta) evaluated on the rows of a state
/// feature matrix. Parameters are exposed as one flat vector so trainers and
/// gradient checks can treat every approximator alike.
class VrFunction {
 public:
  virtual ~VrFunction() = default;

  virtual Eigen::VectorXd parameters() const = 0;
  virtual void set_parameters(const Eigen::VectorXd& theta) = 0;

  virtual Eigen::VectorXd values(const Eigen::MatrixXd& features) const = 0;

  /// sum_s cotangent_s * d f(s) / d theta.
  virtual Eigen::VectorXd pullback(const Eigen::MatrixXd& features,
                                   const Eigen::VectorXd& cotangent) const = 0;

  /// Additive log-prior on the parameters; zero unless overridden.
  virtual double log_prior(const Eigen::MatrixXd& features) const;
  virtual Eigen::VectorXd log_prior_gradient(const Eigen::MatrixXd& features) const;
};

class MlpVrFunction final : public VrFunction {
 public:
  explicit MlpVrFunction(MlpParams params);

  const MlpParams& params() const { return params_; }

  Eigen::VectorXd parameters() const override { return params_.theta; }
  void set_parameters(const Eigen::VectorXd& theta) override;
  Eigen::VectorXd values(const Eigen::MatrixXd& features) const override;
  Eigen::VectorXd pullback(const Eigen::MatrixXd& features,
                           const Eigen::VectorXd& cotangent) const override;

 private:
  MlpParams params_;
};

/// Sparse-GP mean as a VR function. The flat parameter vector is
/// [log lambda, log beta, f_u], which keeps the kernel parameters positive
/// under unconstrained updates. The GP prior on f_u is the log-prior term.
class GpVrFunction final : public VrFunction {
 public:
  explicit GpVrFunction(GpParams params);

  const GpParams& params() const { return params_; }

  Eigen::VectorXd parameters() const override;
  void set_parameters(const Eigen::VectorXd& theta) override;
  Eigen::VectorXd values(const Eigen::MatrixXd& features) const override;
  Eigen::VectorXd pullback(const Eigen::MatrixXd& features,
                           const Eigen::VectorXd& cotangent) const override;
  double log_prior(const Eigen::MatrixXd& features) const override;
  Eigen::VectorXd log_prior_gradient(const Eigen::MatrixXd& features) const override;

 private:
  Eigen::VectorXd to_flat(const GpGradient& g) const;

  GpParams params_;
};

}  // namespace fairl
