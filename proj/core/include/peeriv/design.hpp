#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "peeriv/panel.hpp"

namespace peeriv {

/// How co-players are split into exposure contexts.
///   kOppTeam:    {opponents, teammates}
///   kPartySplit: {teammates in a different party, teammates in the same party}; opponents ignored
///   kPooled:     {all other players}
enum class ContextScheme { kOppTeam, kPartySplit, kPooled };

std::string_view to_string(ContextScheme s);
ContextScheme parse_scheme(std::string_view s);
std::vector<std::string> context_names(ContextScheme s);

/// Context index of `peer` from the point of view of `focal` (same match), or
/// -1 when the peer belongs to no context under the scheme.
int peer_context(ContextScheme scheme, const PanelRow& focal, const PanelRow& peer);

enum class DrawPolicy { kExclude, kAsLoss };

std::string_view to_string(DrawPolicy p);
DrawPolicy parse_draw_policy(std::string_view s);

/// Which toxic co-players a focal player is recorded as exposed to.
///
/// By default every toxic co-player counts. `missing_rate` drops a source's
/// exposure data for the whole match (unavailable utterance records);
/// `opponent_reach` / `teammate_reach` thin individual source→target links.
/// All draws are deterministic hashes of (seed, match id, player ids), so the
/// mask does not depend on row order or panel subsetting.
struct ExposureModel {
  double missing_rate = 0.0;
  double opponent_reach = 1.0;
  double teammate_reach = 1.0;
  std::uint64_t seed = 0;

  bool is_identity() const { return missing_rate <= 0.0 && opponent_reach >= 1.0 && teammate_reach >= 1.0; }
  void validate() const;
  bool exposed(const MatchPanel& panel, const PanelRow& source, const PanelRow& target) const;
  bool exposed(std::string_view match_id, std::string_view source_id, std::string_view target_id,
               bool same_team) const;
};

struct DesignOptions {
  ContextScheme scheme = ContextScheme::kOppTeam;
  DrawPolicy draws = DrawPolicy::kExclude;
  /// Adds count×Win columns and the Win covariate.
  bool interact_win = true;
  ExposureModel exposure;
  unsigned threads = 1;
};

/// Row-aligned regression inputs. Column-major matrices; one design row per
/// retained panel row (draws removed under DrawPolicy::kExclude), kept in
/// panel order so each player's rows are contiguous.
struct DesignPanel {
  DesignOptions options;
  std::vector<std::string> context_labels;
  std::vector<std::string> x_names;  // contexts, then <context>_x_win
  std::vector<std::string> w_names;  // win, [belongs_to_party]
  std::vector<std::uint32_t> panel_row;
  std::vector<std::uint32_t> player;
  Eigen::VectorXd y_time;   // hours; NaN when undefined
  Eigen::VectorXd y_toxic;  // 0/1, or latent intensity in continuous mode
  Eigen::MatrixXd x;
  Eigen::MatrixXd w;
  std::size_t draws_excluded = 0;

  std::size_t rows() const { return panel_row.size(); }
  std::size_t num_contexts() const { return context_labels.size(); }
  /// Column index of the Win covariate in `w`, or -1.
  int win_column() const;
};

/// Builds outcomes and endogenous exposure regressors. With `values` (one per
/// panel row) exposure sums the peers' values and y_toxic is the row's own
/// value; otherwise values are the used_toxic flags.
DesignPanel build_exposure_design(const MatchPanel& panel, const DesignOptions& options,
                                  std::span<const double> values = {});

// ---------------------------------------------------------------------------
// Exposure descriptives

struct ExposureCell {
  std::string context;
  MatchResult outcome = MatchResult::kLoss;
  std::size_t rows = 0;
  std::size_t exposed = 0;
  double probability = 0.0;
  double std_error = 0.0;  // clustered by match
};

struct ExposureTable {
  ContextScheme scheme = ContextScheme::kOppTeam;
  std::vector<ExposureCell> cells;  // context-major, loss then win
  double max_probability = 0.0;
  bool below_one_tenth_percent = true;
  std::vector<std::string> warnings;
};

/// P(exposed to at least one toxic co-player) for every context × {loss, win}.
ExposureTable describe_exposure(const MatchPanel& panel, const DesignOptions& options);

struct ExposureRatio {
  double ratio = 0.0;
  double std_error = 0.0;  // delta method, clustered by match
  double numerator = 0.0;
  double denominator = 0.0;
};

/// Ratio of exposure probabilities between two contexts, pooled over win and
/// loss rows.
ExposureRatio exposure_ratio(const MatchPanel& panel, const DesignOptions& options, int numerator_context,
                             int denominator_context);

}  // namespace peeriv
