#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

namespace peeriv {

/// Row-aligned column blocks viewed as one wide matrix [b0 | b1 | ...].
using ColumnBlock = Eigen::Ref<const Eigen::MatrixXd>;

/// Cross-product [b0 b1 ...]ᵀ[b0 b1 ...] accumulated over fixed-size row
/// blocks. Per-block partials are combined by pairwise tree reduction in block
/// order, so the result is bit-identical for any thread count.
Eigen::MatrixXd accumulate_gram(std::span<const ColumnBlock> blocks, unsigned threads = 1,
                                std::size_t block_rows = 16384);

/// Pairwise (tree) sum of partial matrices in index order.
Eigen::MatrixXd pairwise_sum(std::vector<Eigen::MatrixXd> parts);

/// Rank-revealing solver for a symmetric PSD cross-product matrix.
///
/// The matrix is first scaled to unit diagonal, then factored with
/// column-pivoted Householder QR. Throws NumericalError naming the columns that
/// fall outside the numerical rank.
class GramSolver {
 public:
  GramSolver(const Eigen::MatrixXd& gram, const std::vector<std::string>& names, const std::string& what,
             double threshold = 1e-12);

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
  Eigen::MatrixXd inverse() const;

 private:
  Eigen::VectorXd scale_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

}  // namespace peeriv
