#pragma once

#include <Eigen/Core>

#include <string>
#include <variant>

namespace fairl {

namespace backup {

struct Max {};
struct LogSumExp {};
/// Shifted p-norm: shift + ||q - shift||_p with shift = min(q) - 1e-9.
struct PNorm {
  double p = 10.0;
};
/// Generalized softmax (1/k) log sum exp(k q).
struct GSoft {
  double k = 100.0;
};

}  // namespace backup

/// Reduction from a state's action values to its state value.
using BackupOperator =
    std::variant<backup::Max, backup::LogSumExp, backup::PNorm, backup::GSoft>;

/// Throws std::invalid_argument when p <= 1 or k <= 0.
void validate(const BackupOperator& op);

/// "max", "logsumexp", "pnorm" or "gsoft".
std::string kind_name(const BackupOperator& op);
/// Human-readable label including the parameter, e.g. "gsoft(k=100)".
std::string label(const BackupOperator& op);

/// Builds an operator from its kind name; `param` is p or k where relevant.
BackupOperator make_backup(const std::string& kind, double param);

using QRow = Eigen::Ref<const Eigen::VectorXd>;

/// Throws std::invalid_argument on empty input.
double apply_backup(const BackupOperator& op, const QRow& q);

/// dV/dq_a. Max returns the one-hot at the lowest maximizing index.
Eigen::VectorXd backup_gradient(const BackupOperator& op, const QRow& q);

/// log sum exp(q) with max subtraction.
double log_sum_exp(const QRow& q);

}  // namespace fairl
