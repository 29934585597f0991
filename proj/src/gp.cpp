#include "fairl/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "fairl/mdp.hpp"

namespace fairl {

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& features, const std::vector<int>& rows) {
  Eigen::MatrixXd out(rows.size(), features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = features.row(rows[i]);
  return out;
}

std::string describe(const std::vector<int>& states) {
  std::ostringstream out;
  out << "{";
  for (std::size_t i = 0; i < states.size(); ++i) out << (i ? "," : "") << states[i];
  out << "}";
  return out.str();
}

// Per dimension d: sum_ij m_ij (a_id - b_jd)^2.
Eigen::VectorXd weighted_sq_dist(const Eigen::MatrixXd& m, const Eigen::MatrixXd& a,
                                 const Eigen::MatrixXd& b) {
  const Eigen::VectorXd row_mass = m.rowwise().sum();
  const Eigen::VectorXd col_mass = m.colwise().sum().transpose();
  const Eigen::MatrixXd mb = m * b;
  return a.array().square().matrix().transpose() * row_mass +
         b.array().square().matrix().transpose() * col_mass -
         2.0 * (a.array() * mb.array()).colwise().sum().matrix().transpose();
}

// Contracts dK against weights m for both kernel parameters:
// d/d lambda_d = -1/2 sum_ij m_ij k_ij delta_ijd^2, d/d beta = sum_ij m_ij k_ij / beta.
void accumulate_kernel_terms(const Eigen::MatrixXd& m, const Eigen::MatrixXd& k,
                             const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             double beta, double sign, GpGradient& out) {
  const Eigen::MatrixXd mk = m.cwiseProduct(k);
  out.length_scales += sign * -0.5 * weighted_sq_dist(mk, a, b);
  out.signal_variance += sign * mk.sum() / beta;
}

GpGradient zero_gradient(const GpParams& params) {
  return {Eigen::VectorXd::Zero(params.length_scales.size()), 0.0,
          Eigen::VectorXd::Zero(params.supporting_values.size())};
}

}  // namespace

void validate(const GpParams& params, const Eigen::MatrixXd& features) {
  if (params.length_scales.size() != features.cols()) {
    throw std::invalid_argument("gp: length_scales has " +
                                std::to_string(params.length_scales.size()) +
                                " entries but features have " +
                                std::to_string(features.cols()) + " columns");
  }
  if (!params.length_scales.allFinite() || (params.length_scales.array() <= 0.0).any()) {
    throw std::invalid_argument("gp: length scales must be finite and positive");
  }
  if (!(params.signal_variance > 0.0) || !std::isfinite(params.signal_variance)) {
    throw std::invalid_argument("gp: signal variance must be finite and positive");
  }
  if (!(params.jitter > 0.0)) throw std::invalid_argument("gp: jitter must be positive");
  if (params.supporting_states.empty()) {
    throw std::invalid_argument("gp: supporting set is empty");
  }
  if (params.supporting_values.size() != static_cast<Eigen::Index>(params.supporting_states.size())) {
    throw std::invalid_argument("gp: supporting values and states differ in length");
  }
  std::set<int> seen;
  for (int s : params.supporting_states) {
    if (s < 0 || s >= features.rows()) {
      throw std::invalid_argument("gp: supporting state " + std::to_string(s) + " out of range");
    }
    if (!seen.insert(s).second) {
      throw std::invalid_argument("gp: duplicate supporting state " + std::to_string(s));
    }
  }
}

std::vector<int> pick_supporting_states(const Eigen::MatrixXd& features, int count,
                                        std::uint64_t seed) {
  std::vector<int> order(features.rows());
  for (int i = 0; i < static_cast<int>(order.size()); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = std::min(i - 1, static_cast<std::size_t>(uniform01(rng()) * i));
    std::swap(order[i - 1], order[j]);
  }
  std::vector<int> picked;
  for (int s : order) {
    if (static_cast<int>(picked.size()) >= count) break;
    const bool duplicate = std::any_of(picked.begin(), picked.end(), [&](int p) {
      return features.row(p) == features.row(s);
    });
    if (!duplicate) picked.push_back(s);
  }
  return picked;
}

double ard_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& x_prime, const GpParams& params) {
  if (x.size() != x_prime.size() || x.size() != params.length_scales.size()) {
    throw std::invalid_argument("ard_kernel: dimension mismatch");
  }
  const double q = (params.length_scales.array() * (x - x_prime).array().square()).sum();
  return params.signal_variance * std::exp(-0.5 * q);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const GpParams& params) {
  // Scale by sqrt(lambda) so the exponent is a plain squared distance.
  const Eigen::RowVectorXd root = params.length_scales.array().sqrt().transpose();
  const Eigen::MatrixXd sa = a.array().rowwise() * root.array();
  const Eigen::MatrixXd sb = b.array().rowwise() * root.array();
  const Eigen::VectorXd na = sa.rowwise().squaredNorm();
  const Eigen::VectorXd nb = sb.rowwise().squaredNorm();
  Eigen::MatrixXd sq = -2.0 * sa * sb.transpose();
  sq.colwise() += na;
  sq.rowwise() += nb.transpose();
  return params.signal_variance * (-0.5 * sq.array().max(0.0)).exp().matrix();
}

GpFactor factorize(const GpParams& params, const Eigen::MatrixXd& features) {
  validate(params, features);
  GpFactor f;
  f.supporting_features = gather_rows(features, params.supporting_states);
  f.k_uu = kernel_matrix(f.supporting_features, f.supporting_features, params);
  Eigen::MatrixXd k = f.k_uu;
  k.diagonal().array() += params.jitter;
  f.llt.compute(k);
  const Eigen::VectorXd diag = f.llt.matrixL().toDenseMatrix().diagonal();
  if (f.llt.info() != Eigen::Success || !diag.allFinite() || (diag.array() <= 0.0).any()) {
    throw FactorizationError("gp: kernel matrix of supporting set " +
                             describe(params.supporting_states) +
                             " is not positive definite");
  }
  f.weights = f.llt.solve(params.supporting_values);
  return f;
}

double gp_mean(const GpParams& params, const Eigen::MatrixXd& features, int query_state) {
  if (query_state < 0 || query_state >= features.rows()) {
    throw std::invalid_argument("gp_mean: query state out of range");
  }
  const GpFactor f = factorize(params, features);
  const Eigen::MatrixXd query = features.row(query_state);
  return (kernel_matrix(query, f.supporting_features, params) * f.weights)(0);
}

Eigen::VectorXd gp_mean_all(const GpParams& params, const Eigen::MatrixXd& features) {
  const GpFactor f = factorize(params, features);
  return kernel_matrix(features, f.supporting_features, params) * f.weights;
}

double gp_prior_loglik(const GpParams& params, const Eigen::MatrixXd& features) {
  const GpFactor f = factorize(params, features);
  const Eigen::MatrixXd l = f.llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const double n = static_cast<double>(params.supporting_values.size());
  return -0.5 * params.supporting_values.dot(f.weights) - 0.5 * log_det -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

GpGradient gp_mean_pullback(const GpParams& params, const Eigen::MatrixXd& features,
                            const Eigen::VectorXd& cotangent) {
  if (cotangent.size() != features.rows()) {
    throw std::invalid_argument("gp: cotangent length does not match the feature rows");
  }
  const GpFactor f = factorize(params, features);
  const Eigen::MatrixXd k_su = kernel_matrix(features, f.supporting_features, params);

  // mean = K_su alpha with alpha = K^-1 f_u; w = K^-1 K_su^T c.
  GpGradient g = zero_gradient(params);
  g.supporting_values = f.llt.solve(k_su.transpose() * cotangent);
  const double beta = params.signal_variance;
  accumulate_kernel_terms(cotangent * f.weights.transpose(), k_su, features,
                          f.supporting_features, beta, 1.0, g);
  accumulate_kernel_terms(g.supporting_values * f.weights.transpose(), f.k_uu,
                          f.supporting_features, f.supporting_features, beta, -1.0, g);
  return g;
}

GpGradient gp_param_gradient(const GpParams& params, const Eigen::MatrixXd& features,
                             int query_state) {
  if (query_state < 0 || query_state >= features.rows()) {
    throw std::invalid_argument("gp_param_gradient: query state out of range");
  }
  Eigen::VectorXd cotangent = Eigen::VectorXd::Zero(features.rows());
  cotangent[query_state] = 1.0;
  return gp_mean_pullback(params, features, cotangent);
}

GpGradient gp_prior_gradient(const GpParams& params, const Eigen::MatrixXd& features) {
  const GpFactor f = factorize(params, features);
  const auto n = params.supporting_values.size();
  const Eigen::MatrixXd k_inv = f.llt.solve(Eigen::MatrixXd::Identity(n, n));

  GpGradient g = zero_gradient(params);
  g.supporting_values = -f.weights;
  // d/dtheta = 1/2 sum_ij (alpha alpha^T - K^-1)_ij dK_ij.
  const Eigen::MatrixXd a = 0.5 * (f.weights * f.weights.transpose() - k_inv);
  accumulate_kernel_terms(a, f.k_uu, f.supporting_features, f.supporting_features,
                          params.signal_variance, 1.0, g);
  return g;
}

}  // namespace fairl
