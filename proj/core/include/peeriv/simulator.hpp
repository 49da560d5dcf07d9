#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "peeriv/design.hpp"
#include "peeriv/panel.hpp"

namespace peeriv {

enum class SimMode { kEngagementConfounded, kPropagationReflection, kTwoPlayerReflection };

std::string_view to_string(SimMode m);
SimMode parse_sim_mode(std::string_view s);

/// Generator parameters. Structural errors are Gaussian.
struct SimConfig {
  SimMode mode = SimMode::kEngagementConfounded;
  std::uint64_t seed = 1;

  std::size_t n_players = 2000;
  /// 0 derives the match count from matches_per_player.
  std::size_t n_matches = 0;
  double matches_per_player = 12.44;
  std::size_t max_matches_per_player = 10000;
  std::size_t team_size = 4;  // forced to 1 in two-player mode
  double party_probability = 0.3;
  std::size_t max_party_size = 4;
  double draw_probability = 0.0;
  /// Win tilt towards the less toxic team (0 = win independent of toxicity).
  double win_toxicity_tilt = 0.0;

  // Engagement: y_time = alpha_y + Σ beta·exposure + shock + eps, floored at 0.
  /// Hours per exposed toxic co-player: opponents|loss, teammates|loss, opponents|win, teammates|win.
  std::array<double, 4> beta_engagement = {20.0, 20.0, 20.0, 20.0};
  double mean_alpha_y = 40.0;
  double sigma_alpha_y = 5.0;
  double sigma_eps = 5.0;
  double sigma_match_shock = 0.0;
  /// Logit shift of every player's toxicity per unit of match shock.
  double shock_toxicity_loading = 0.5;
  /// Base toxicity probability (engagement) or share above the threshold (reflection modes).
  double toxicity_base_rate = 0.1;
  /// Spread of persistent player toxicity propensities (logit scale in engagement mode).
  double sigma_alpha_x = 1.0;

  // Reflection modes: t = a + beta_reflection · B t + e within each match.
  double beta_reflection = 0.5;
  double weight_opponents = 0.5;
  double weight_teammates = 1.0;
  double sigma_reflection_eps = 1.0;

  ExposureModel exposure;

  void validate() const;
  std::size_t resolved_matches() const;
};

/// Ground truth implied by a configuration and realised by one draw.
struct SimTruth {
  SimConfig config;
  std::vector<std::string> coefficient_names;  // design coding (base = loss)
  Eigen::VectorXd coefficients;
  std::vector<double> alpha_x;  // per player, panel player order
  std::vector<double> alpha_y;
  std::vector<double> match_shock;
  std::optional<double> ols_plim;            // two-player mode
  std::optional<double> exposure_ratio;      // teammates/opponents, homogeneous toxicity only
  double toxicity_threshold = 0.0;           // reflection modes
  double realized_toxic_rate = 0.0;
};

struct SimOutput {
  MatchPanel panel;
  std::vector<double> latent;  // per panel row; reflection modes only
  SimTruth truth;
};

SimOutput simulate(const SimConfig& cfg);
SimOutput simulate_engagement_panel(const SimConfig& cfg);
SimOutput simulate_propagation_panel(const SimConfig& cfg);
SimOutput simulate_two_player_panel(const SimConfig& cfg);

/// Probability limit of the naive OLS slope of Y_ij on Y_ik in the symmetric
/// two-player system: 2β/(1+β²). Throws NumericalError for |β| ≥ 1.
double ols_plim_reflection(double beta, double var_alpha = 1.0, double var_eps = 1.0);

/// Solves (I − βB) t = a + e exactly (LU with partial pivoting).
Eigen::VectorXd equilibrium_solve(const Eigen::VectorXd& a, const Eigen::VectorXd& e, double beta,
                                  const Eigen::MatrixXd& adjacency);

/// Within-match adjacency for two teams of `team_size` (team 0 first).
Eigen::MatrixXd context_adjacency(std::size_t team_size, double weight_opponents, double weight_teammates);

double spectral_radius(const Eigen::MatrixXd& m);

/// Truth sidecar: config echo, coefficients, analytic plims.
void write_truth_json(const SimTruth& truth, std::ostream& out);

}  // namespace peeriv
