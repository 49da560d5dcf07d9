#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "peeriv/design.hpp"
#include "peeriv/estimator.hpp"
#include "peeriv/within.hpp"

namespace peeriv {

enum class TableFormat { kText, kJson, kCsv };

std::string_view to_string(TableFormat f);
TableFormat parse_table_format(std::string_view s);

/// "***" for p < 0.01, "**" for p < 0.05, "*" for p < 0.1, else "".
std::string_view significance_stars(double p_value);

/// Five significant digits, at most four decimals: 60.683, 9.4202, 0.0053.
std::string format_number(double v);
/// Coefficient cell with stars, e.g. "60.683***".
std::string format_coefficient(double beta, double p_value);
/// Standard-error cell, e.g. "(9.4202)".
std::string format_std_error(double se);

/// Renders results side by side: one column per result, one row pair
/// (coefficient, standard error) per regressor, then a footer with sample
/// sizes and first-stage F statistics.
std::string render_regression_table(std::span<const EstimationResult> results, TableFormat format);
std::string render_regression_table(const EstimationResult& result, TableFormat format);

/// Effect of one exposure context, by own-team result.
struct MarginalEffect {
  std::string context;
  std::string outcome;
  std::string units;  // "hours" or "probability"
  double loss_effect = 0.0;
  double loss_se = 0.0;
  double loss_ci_low = 0.0;
  double loss_ci_high = 0.0;
  double win_effect = 0.0;
  double win_se = 0.0;
  double win_ci_low = 0.0;
  double win_ci_high = 0.0;
};

inline constexpr double kNormal975 = 1.959963984540054;

/// One entry per context with a `<context>_x_win` interaction. The win effect
/// is base + interaction; its SE uses Var(b) + Var(i) + 2 Cov(b, i).
/// Throws UsageError if a context lacks its interaction column.
std::vector<MarginalEffect> marginal_effects(const EstimationResult& result);

/// Builds a MarginalEffect from bare point estimates (SEs of zero).
MarginalEffect point_effect(std::string context, std::string outcome, std::string units, double base,
                            double interaction);

enum class RankingObjective { kEngagement, kPropagation };

std::string_view to_string(RankingObjective o);
RankingObjective parse_ranking_objective(std::string_view s);

struct RankedCell {
  std::size_t rank = 0;  // 1-based
  std::string context;
  std::string result;  // "loss" or "win"
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Orders every context × {loss, win} cell by descending estimate; among equal
/// estimates the wider confidence interval goes last, and full ties keep input
/// order. Throws UsageError when the effects are empty, use the wrong units for
/// the objective, repeat a context, or contain non-finite values.
std::vector<RankedCell> priority_ranking(std::span<const MarginalEffect> effects, RankingObjective objective);

std::string render_marginal_effects(std::span<const MarginalEffect> effects, TableFormat format);
std::string render_ranking(std::span<const RankedCell> ranking, TableFormat format);
std::string render_exposure_table(const ExposureTable& table, TableFormat format);
std::string render_attrition(const AttritionReport& report, TableFormat format);

/// JSON (de)serialisation of estimation results; non-finite numbers are
/// written as null and read back as NaN (or +inf for capped F values).
std::string result_to_json(const EstimationResult& result, int indent = 2);
EstimationResult result_from_json(std::string_view json);

}  // namespace peeriv
