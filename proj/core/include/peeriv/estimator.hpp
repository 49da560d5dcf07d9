#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace peeriv {

enum class VcovMode { kClassical, kHc1, kClusterByPlayer };

std::string_view to_string(VcovMode m);
VcovMode parse_vcov_mode(std::string_view s);

struct EstimatorOptions {
  VcovMode vcov = VcovMode::kHc1;
  /// Parameters absorbed before estimation (one per demeaned player); they are
  /// subtracted from the residual degrees of freedom.
  std::size_t absorbed_df = 0;
  /// Contiguous cluster boundaries (G + 1 offsets); required for cluster mode.
  std::span<const std::size_t> cluster_offsets;
  /// First-stage F below this triggers a weak-instrument warning.
  double weak_instrument_f = 10.0;
  unsigned threads = 1;
  std::size_t block_rows = 16384;
};

struct FStatistic {
  double value = 0.0;
  bool capped = false;  // unrestricted RSS numerically zero: F reported as +inf
  std::size_t df_num = 0;
  std::size_t df_den = 0;
  double p_value = 1.0;
};

/// F = [(RSS_r − RSS_u)/q] / [RSS_u/(n − p − absorbed)]. Throws NumericalError
/// when the denominator degrees of freedom are not positive.
FStatistic first_stage_f(double rss_restricted, double rss_unrestricted, std::size_t q, std::size_t n,
                         std::size_t p, std::size_t absorbed = 0);

/// Regression of one endogenous column on [Z W].
struct FirstStage {
  std::string endogenous;
  std::vector<std::string> names;  // Z names then W names
  Eigen::VectorXd coef;
  Eigen::VectorXd se;
  Eigen::MatrixXd vcov;
  FStatistic f;
  double rss_unrestricted = 0.0;
  double rss_restricted = 0.0;
};

struct EstimationResult {
  std::string method;   // "ols" or "tsls"
  std::string outcome;  // label supplied by the caller
  std::vector<std::string> names;
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  Eigen::VectorXd t_stats;
  Eigen::VectorXd p_values;
  Eigen::MatrixXd vcov;
  VcovMode vcov_mode = VcovMode::kHc1;
  std::size_t n_obs = 0;
  std::size_t n_players = 0;
  std::size_t absorbed_df = 0;
  double df_resid = 0.0;
  double rss = 0.0;
  std::vector<FirstStage> first_stage;
  std::vector<std::string> warnings;

  int index_of(std::string_view name) const;
};

/// Least squares of y on X (no intercept is added).
EstimationResult ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                     const EstimatorOptions& options = {});

/// Two-stage least squares with endogenous X, exogenous W and excluded
/// instruments Z. The second stage regresses y on [X̂ W]; the reported
/// covariance uses residuals y − [X W]β with the original X.
EstimationResult tsls(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                      const Eigen::MatrixXd& z, const std::vector<std::string>& x_names,
                      const std::vector<std::string>& w_names, const std::vector<std::string>& z_names,
                      const EstimatorOptions& options = {});

/// Covariance of least-squares coefficients for given residuals and regressors:
/// classical σ²(XᵀX)⁻¹, HC1 sandwich scaled by n/df, or cluster sandwich with
/// the G/(G−1)·(n−1)/(n−k) correction.
Eigen::MatrixXd robust_vcov(const Eigen::VectorXd& residuals, const Eigen::MatrixXd& regressors, VcovMode mode,
                            const EstimatorOptions& options = {});

}  // namespace peeriv
