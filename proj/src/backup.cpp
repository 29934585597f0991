#include "fairl/backup.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fairl {

namespace {

constexpr double kPNormMargin = 1e-9;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require_nonempty(const QRow& q) {
  if (q.size() == 0) throw std::invalid_argument("backup: empty action-value vector");
}

Eigen::Index lowest_argmax(const QRow& q) {
  Eigen::Index best = 0;
  for (Eigen::Index a = 1; a < q.size(); ++a) {
    if (q[a] > q[best]) best = a;
  }
  return best;
}

Eigen::Index lowest_argmin(const QRow& q) {
  Eigen::Index best = 0;
  for (Eigen::Index a = 1; a < q.size(); ++a) {
    if (q[a] < q[best]) best = a;
  }
  return best;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

// (sum d_a^p)^(1/p) for positive d, scaled by the largest entry to stay finite.
double scaled_pnorm(const Eigen::VectorXd& d, double p) {
  const double top = d.maxCoeff();
  const double inner = (d.array() / top).pow(p).sum();
  return top * std::pow(inner, 1.0 / p);
}

}  // namespace

void validate(const BackupOperator& op) {
  std::visit(overloaded{
                 [](const backup::PNorm& o) {
                   if (!(o.p > 1.0) || !std::isfinite(o.p))
                     throw std::invalid_argument("pnorm: p must be finite and > 1");
                 },
                 [](const backup::GSoft& o) {
                   if (!(o.k > 0.0) || !std::isfinite(o.k))
                     throw std::invalid_argument("gsoft: k must be finite and > 0");
                 },
                 [](const auto&) {},
             },
             op);
}

std::string kind_name(const BackupOperator& op) {
  return std::visit(overloaded{
                        [](const backup::Max&) { return std::string("max"); },
                        [](const backup::LogSumExp&) { return std::string("logsumexp"); },
                        [](const backup::PNorm&) { return std::string("pnorm"); },
                        [](const backup::GSoft&) { return std::string("gsoft"); },
                    },
                    op);
}

std::string label(const BackupOperator& op) {
  std::ostringstream out;
  out << kind_name(op);
  if (const auto* o = std::get_if<backup::PNorm>(&op)) out << "(p=" << o->p << ")";
  if (const auto* o = std::get_if<backup::GSoft>(&op)) out << "(k=" << o->k << ")";
  return out.str();
}

BackupOperator make_backup(const std::string& kind, double param) {
  BackupOperator op;
  if (kind == "max") {
    op = backup::Max{};
  } else if (kind == "logsumexp") {
    op = backup::LogSumExp{};
  } else if (kind == "pnorm") {
    op = backup::PNorm{param};
  } else if (kind == "gsoft") {
    op = backup::GSoft{param};
  } else {
    throw std::invalid_argument("unknown backup operator '" + kind + "'");
  }
  validate(op);
  return op;
}

double log_sum_exp(const QRow& q) {
  require_nonempty(q);
  const double top = q.maxCoeff();
  return top + std::log((q.array() - top).exp().sum());
}

double apply_backup(const BackupOperator& op, const QRow& q) {
  require_nonempty(q);
  return std::visit(
      overloaded{
          [&](const backup::Max&) { return q.maxCoeff(); },
          [&](const backup::LogSumExp&) { return log_sum_exp(q); },
          [&](const backup::GSoft& o) {
            const Eigen::VectorXd scaled = o.k * q;
            return log_sum_exp(scaled) / o.k;
          },
          [&](const backup::PNorm& o) {
            const double shift = q.minCoeff() - kPNormMargin;
            return shift + scaled_pnorm((q.array() - shift).matrix(), o.p);
          },
      },
      op);
}

Eigen::VectorXd backup_gradient(const BackupOperator& op, const QRow& q) {
  require_nonempty(q);
  return std::visit(
      overloaded{
          [&](const backup::Max&) {
            Eigen::VectorXd g = Eigen::VectorXd::Zero(q.size());
            g[lowest_argmax(q)] = 1.0;
            return g;
          },
          [&](const backup::LogSumExp&) { return softmax(q); },
          [&](const backup::GSoft& o) { return softmax(o.k * q); },
          [&](const backup::PNorm& o) {
            // V = shift(q) + N(q - shift); dN/dd_a = (d_a / N)^(p-1), and the
            // shift tracks the minimum entry.
            const double shift = q.minCoeff() - kPNormMargin;
            const Eigen::VectorXd d = (q.array() - shift).matrix();
            const double norm = scaled_pnorm(d, o.p);
            Eigen::VectorXd g = (d.array() / norm).pow(o.p - 1.0).matrix();
            g[lowest_argmin(q)] += 1.0 - g.sum();
            return g;
          },
      },
      op);
}

}  // namespace fairl
