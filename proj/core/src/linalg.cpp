#include "peeriv/linalg.hpp"

#include <cmath>

#include "peeriv/errors.hpp"
#include "peeriv/parallel.hpp"

namespace peeriv {

Eigen::MatrixXd pairwise_sum(std::vector<Eigen::MatrixXd> parts) {
  if (parts.empty()) return {};
  while (parts.size() > 1) {
    std::vector<Eigen::MatrixXd> next;
    next.reserve((parts.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < parts.size(); i += 2) next.push_back(parts[i] + parts[i + 1]);
    if (parts.size() % 2 == 1) next.push_back(std::move(parts.back()));
    parts = std::move(next);
  }
  return std::move(parts.front());
}

Eigen::MatrixXd accumulate_gram(std::span<const ColumnBlock> blocks, unsigned threads, std::size_t block_rows) {
  Eigen::Index cols = 0;
  const Eigen::Index rows = blocks.empty() ? 0 : blocks.front().rows();
  for (const auto& b : blocks) {
    if (b.rows() != rows) throw UsageError("accumulate_gram: blocks have different row counts");
    cols += b.cols();
  }
  if (rows == 0) return Eigen::MatrixXd::Zero(cols, cols);
  const std::size_t n = static_cast<std::size_t>(rows);
  const std::size_t n_blocks = (n + block_rows - 1) / block_rows;
  std::vector<Eigen::MatrixXd> parts(n_blocks);
  parallel_for(n_blocks, threads, [&](std::size_t bi) {
    const auto start = static_cast<Eigen::Index>(bi * block_rows);
    const auto len = static_cast<Eigen::Index>(std::min(block_rows, n - bi * block_rows));
    Eigen::MatrixXd c(len, cols);
    Eigen::Index off = 0;
    for (const auto& b : blocks) {
      c.middleCols(off, b.cols()) = b.middleRows(start, len);
      off += b.cols();
    }
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(cols, cols);
    g.selfadjointView<Eigen::Lower>().rankUpdate(c.transpose());
    parts[bi] = g.selfadjointView<Eigen::Lower>();
  });
  return pairwise_sum(std::move(parts));
}

GramSolver::GramSolver(const Eigen::MatrixXd& gram, const std::vector<std::string>& names, const std::string& what,
                       double threshold) {
  const Eigen::Index k = gram.rows();
  scale_.resize(k);
  std::vector<std::string> zero_cols;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double d = gram(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) {
      zero_cols.push_back(static_cast<std::size_t>(i) < names.size() ? names[static_cast<std::size_t>(i)]
                                                                     : "#" + std::to_string(i));
      scale_[i] = 1.0;
    } else {
      scale_[i] = 1.0 / std::sqrt(d);
    }
  }
  auto fail = [&](const std::vector<std::string>& cols) {
    std::string msg = "rank deficiency in " + what + ": column set {";
    for (std::size_t i = 0; i < cols.size(); ++i) msg += (i ? ", " : "") + cols[i];
    msg += "} is linearly dependent (or constant zero)";
    throw NumericalError(msg);
  };
  if (!zero_cols.empty()) fail(zero_cols);
  const Eigen::MatrixXd scaled = scale_.asDiagonal() * gram * scale_.asDiagonal();
  qr_.setThreshold(threshold);
  qr_.compute(scaled);
  if (qr_.rank() < k) {
    std::vector<std::string> dependent;
    const auto& perm = qr_.colsPermutation().indices();
    for (Eigen::Index i = qr_.rank(); i < k; ++i) {
      const auto c = static_cast<std::size_t>(perm(i));
      dependent.push_back(c < names.size() ? names[c] : "#" + std::to_string(c));
    }
    fail(dependent);
  }
}

Eigen::MatrixXd GramSolver::solve(const Eigen::MatrixXd& rhs) const {
  const Eigen::MatrixXd scaled_rhs = scale_.asDiagonal() * rhs;
  return scale_.asDiagonal() * qr_.solve(scaled_rhs);
}

Eigen::MatrixXd GramSolver::inverse() const {
  const auto k = scale_.size();
  Eigen::MatrixXd inv = solve(Eigen::MatrixXd::Identity(k, k));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace peeriv
