#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairl {

/**
 * Sparse GP over states: an ARD squared-exponential kernel
 *
 *   k(x, x') = beta * exp(-1/2 sum_d lambda_d (x_d - x'_d)^2)
 *
 * and the VR values f_u held at a set of supporting states. Inputs are rows
 * of a shared state feature matrix.
 */
struct GpParams {
  /// lambda_d, one inverse squared length scale per feature dimension.
  Eigen::VectorXd length_scales;
  /// beta.
  double signal_variance = 1.0;
  std::vector<int> supporting_states;
  Eigen::VectorXd supporting_values;
  double jitter = 1e-6;
};

/// Raised when K_uu + jitter I is not numerically positive definite.
class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws std::invalid_argument on non-positive kernel parameters, duplicate
/// or out-of-range supporting states, or a dimension mismatch with features.
void validate(const GpParams& params, const Eigen::MatrixXd& features);

/// Supporting states drawn uniformly without replacement among states with
/// pairwise distinct feature rows; at most `count` of them.
std::vector<int> pick_supporting_states(const Eigen::MatrixXd& features, int count,
                                        std::uint64_t seed);

double ard_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& x_prime, const GpParams& params);

/// Gram matrix between the rows of `a` and the rows of `b` (no jitter).
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const GpParams& params);

/// Cholesky factor of K_uu + jitter I plus the weights K^-1 f_u.
struct GpFactor {
  Eigen::MatrixXd supporting_features;
  Eigen::MatrixXd k_uu;  // without jitter
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd weights;
};

GpFactor factorize(const GpParams& params, const Eigen::MatrixXd& features);

/// Posterior mean k(s, S_u)^T (K_uu + jitter I)^-1 f_u at one state.
double gp_mean(const GpParams& params, const Eigen::MatrixXd& features, int query_state);

/// Posterior mean at every row of `features`.
Eigen::VectorXd gp_mean_all(const GpParams& params, const Eigen::MatrixXd& features);

/// log N(f_u; 0, K_uu + jitter I).
double gp_prior_loglik(const GpParams& params, const Eigen::MatrixXd& features);

/// Gradient in the natural (lambda, beta, f_u) coordinates. Jitter is held fixed.
struct GpGradient {
  Eigen::VectorXd length_scales;
  double signal_variance = 0.0;
  Eigen::VectorXd supporting_values;
};

/// Gradient of gp_mean at one state.
GpGradient gp_param_gradient(const GpParams& params, const Eigen::MatrixXd& features,
                             int query_state);

/// sum_s cotangent_s * gradient of gp_mean at state s.
GpGradient gp_mean_pullback(const GpParams& params, const Eigen::MatrixXd& features,
                            const Eigen::VectorXd& cotangent);

/// Gradient of gp_prior_loglik.
GpGradient gp_prior_gradient(const GpParams& params, const Eigen::MatrixXd& features);

}  // namespace fairl
