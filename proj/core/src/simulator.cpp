#include "peeriv/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <nlohmann/json.hpp>
#include <ostream>
#include <random>

#include "peeriv/errors.hpp"
#include "peeriv/parallel.hpp"

namespace peeriv {

namespace {

constexpr std::int64_t kEpochStart = 1'699'574'400;
constexpr std::int64_t kMatchSeconds = 600;

std::uint64_t splitmix(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t z = seed ^ (stream * 0xd1b54a32d192ed03ULL) ^ (index * 0x9e3779b97f4a7c15ULL);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix(seed, stream, index)),
                    static_cast<std::uint32_t>(splitmix(seed, stream, index) >> 32)};
  return std::mt19937_64(seq);
}

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

std::string padded_id(char prefix, std::size_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, value);
  return buf;
}

int id_width(std::size_t count) {
  int w = 6;
  std::size_t cap = 1000000;
  while (count > cap && w < 18) {
    cap *= 10;
    ++w;
  }
  return w;
}

std::size_t effective_team_size(const SimConfig& c) {
  return c.mode == SimMode::kTwoPlayerReflection ? 1 : c.team_size;
}

Eigen::MatrixXd reflection_adjacency(const SimConfig& c) {
  if (c.mode == SimMode::kTwoPlayerReflection) return context_adjacency(1, 1.0, 0.0);
  return context_adjacency(c.team_size, c.weight_opponents, c.weight_teammates);
}

// Everything generated for one member slot of one match.
struct Slot {
  std::uint32_t player = 0;
  std::int32_t party = kSolo;  // index within the match, or solo
  bool toxic = false;
  double latent = 0.0;
  double gap_hours = 0.0;
  MatchResult result = MatchResult::kLoss;
};

struct Composition {
  std::size_t matches = 0;
  std::size_t per_match = 0;
  std::vector<Slot> slots;  // matches × per_match; team 0 first
};

Composition draw_composition(const SimConfig& c) {
  Composition comp;
  const std::size_t ts = effective_team_size(c);
  comp.matches = c.resolved_matches();
  comp.per_match = 2 * ts;
  comp.slots.resize(comp.matches * comp.per_match);
  std::mt19937_64 rng = substream(c.seed, 0, 0);
  std::vector<std::uint32_t> pool(c.n_players);
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = static_cast<std::uint32_t>(i);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t m = 0; m < comp.matches; ++m) {
    Slot* s = &comp.slots[m * comp.per_match];
    for (std::size_t k = 0; k < comp.per_match; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
      std::swap(pool[k], pool[pick(rng)]);
      s[k].player = pool[k];
    }
    if (c.mode == SimMode::kTwoPlayerReflection) continue;
    std::int32_t next_party = 0;
    for (std::size_t side = 0; side < 2; ++side) {
      std::size_t i = 0;
      while (i < ts) {
        const std::size_t room = std::min(c.max_party_size, ts - i);
        if (room >= 2 && unif(rng) < c.party_probability) {
          std::uniform_int_distribution<std::size_t> size_dist(2, room);
          const std::size_t size = size_dist(rng);
          for (std::size_t k = 0; k < size; ++k) s[side * ts + i + k].party = next_party;
          ++next_party;
          i += size;
        } else {
          ++i;
        }
      }
    }
  }
  return comp;
}

struct PlayerTraits {
  std::vector<double> alpha_x;
  std::vector<double> alpha_y;
};

PlayerTraits draw_players(const SimConfig& c) {
  PlayerTraits t;
  t.alpha_x.resize(c.n_players);
  t.alpha_y.resize(c.n_players);
  for (std::size_t p = 0; p < c.n_players; ++p) {
    std::mt19937_64 rng = substream(c.seed, 1, p);
    std::normal_distribution<double> n01(0.0, 1.0);
    t.alpha_x[p] = c.sigma_alpha_x * n01(rng);
    t.alpha_y[p] = c.mean_alpha_y + c.sigma_alpha_y * n01(rng);
  }
  return t;
}

// Decides the match result for side 0, then mirrors it on side 1.
void assign_results(const SimConfig& c, std::mt19937_64& rng, std::span<Slot> s, std::size_t ts) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (c.draw_probability > 0.0 && unif(rng) < c.draw_probability) {
    for (auto& slot : s) slot.result = MatchResult::kDraw;
    return;
  }
  double p_side0 = 0.5;
  if (c.win_toxicity_tilt != 0.0) {
    double diff = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) diff += (k < ts ? -1.0 : 1.0) * (s[k].toxic ? 1.0 : 0.0);
    p_side0 = logistic(c.win_toxicity_tilt * diff);
  }
  const bool side0_wins = unif(rng) < p_side0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const bool win = (k < ts) == side0_wins;
    s[k].result = win ? MatchResult::kWin : MatchResult::kLoss;
  }
}

std::string match_label(std::size_t m, int width) { return padded_id('m', m, width); }
std::string player_label(std::size_t p, int width) { return padded_id('p', p, width); }

// Assigns start/end times so that each player's gap to their next match is
// exactly the generated gap (rounded to seconds) and matches never overlap.
MatchPanel assemble(const SimConfig& c, const Composition& comp, std::vector<double>* latent_out) {
  const std::size_t ts = comp.per_match / 2;
  const int mw = id_width(comp.matches);
  const int pw = id_width(c.n_players);
  const std::size_t n = comp.slots.size();

  std::vector<std::int64_t> start(comp.matches);
  std::vector<std::int64_t> end(n, 0);
  std::vector<std::int64_t> gap_secs(n);
  for (std::size_t i = 0; i < n; ++i) gap_secs[i] = std::llround(comp.slots[i].gap_hours * 3600.0);

  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> last_slot(c.n_players, kNone);
  for (std::size_t m = 0; m < comp.matches; ++m) {
    std::int64_t t = m == 0 ? kEpochStart : start[m - 1] + 1;
    for (std::size_t k = 0; k < comp.per_match; ++k) {
      const std::size_t prev = last_slot[comp.slots[m * comp.per_match + k].player];
      if (prev != kNone) t = std::max(t, start[prev / comp.per_match] + kMatchSeconds + gap_secs[prev]);
    }
    start[m] = t;
    for (std::size_t k = 0; k < comp.per_match; ++k) {
      const std::size_t i = m * comp.per_match + k;
      std::size_t& prev = last_slot[comp.slots[i].player];
      if (prev != kNone) end[prev] = t - gap_secs[prev];
      prev = i;
    }
  }
  for (std::size_t p = 0; p < c.n_players; ++p) {
    if (last_slot[p] != kNone) end[last_slot[p]] = start[last_slot[p] / comp.per_match] + kMatchSeconds;
  }

  PanelBuilder builder(c.mode != SimMode::kTwoPlayerReflection);
  builder.reserve(n);
  std::string party;
  for (std::size_t m = 0; m < comp.matches; ++m) {
    const std::string mid = match_label(m, mw);
    for (std::size_t k = 0; k < comp.per_match; ++k) {
      const Slot& s = comp.slots[m * comp.per_match + k];
      const std::size_t side = k < ts ? 0 : 1;
      party.clear();
      if (s.party != kSolo) party = mid + "-" + std::to_string(side) + "-" + std::to_string(s.party);
      builder.add(mid, player_label(s.player, pw), side == 0 ? "A" : "B", party, start[m],
                  end[m * comp.per_match + k], s.toxic, s.result);
    }
  }
  std::vector<std::uint32_t> row_of_input;
  MatchPanel panel = std::move(builder).build(&row_of_input);
  if (latent_out) {
    latent_out->assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) (*latent_out)[row_of_input[i]] = comp.slots[i].latent;
  }
  return panel;
}

std::vector<double> traits_in_panel_order(const MatchPanel& panel, const std::vector<double>& by_index, int width) {
  std::vector<double> out(panel.num_players(), 0.0);
  for (std::size_t p = 0; p < by_index.size(); ++p) {
    if (auto id = panel.find_player(player_label(p, width))) out[*id] = by_index[p];
  }
  return out;
}

SimTruth base_truth(const SimConfig& c, const MatchPanel& panel, const PlayerTraits& traits) {
  SimTruth t;
  t.config = c;
  const int pw = id_width(c.n_players);
  t.alpha_x = traits_in_panel_order(panel, traits.alpha_x, pw);
  t.alpha_y = traits_in_panel_order(panel, traits.alpha_y, pw);
  std::size_t toxic = 0;
  for (const auto& r : panel.rows()) toxic += r.toxic ? 1 : 0;
  t.realized_toxic_rate = panel.num_rows() ? static_cast<double>(toxic) / static_cast<double>(panel.num_rows()) : 0.0;
  return t;
}

void check_mode(const SimConfig& c, SimMode expected) {
  if (c.mode != expected) {
    throw ConfigError("simulator mode is " + std::string(to_string(c.mode)) + ", expected " +
                      std::string(to_string(expected)));
  }
}

// Reflection modes: latent equilibrium per match, then a global threshold.
SimOutput simulate_reflection(const SimConfig& c) {
  c.validate();
  const PlayerTraits traits = draw_players(c);
  Composition comp = draw_composition(c);
  const std::size_t ts = comp.per_match / 2;
  const Eigen::MatrixXd adjacency = reflection_adjacency(c);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(
      Eigen::MatrixXd::Identity(adjacency.rows(), adjacency.cols()) - c.beta_reflection * adjacency);

  parallel_for(comp.matches, 1, [&](std::size_t m) {
    std::mt19937_64 rng = substream(c.seed, 2, m);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::span<Slot> s(comp.slots.data() + m * comp.per_match, comp.per_match);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(comp.per_match));
    for (std::size_t k = 0; k < s.size(); ++k) {
      rhs[static_cast<Eigen::Index>(k)] = traits.alpha_x[s[k].player] + c.sigma_reflection_eps * n01(rng);
    }
    const Eigen::VectorXd t = lu.solve(rhs);
    for (std::size_t k = 0; k < s.size(); ++k) {
      s[k].latent = t[static_cast<Eigen::Index>(k)];
      s[k].gap_hours = std::max(0.0, traits.alpha_y[s[k].player] + c.sigma_eps * n01(rng));
    }
    assign_results(c, rng, s, ts);
  });

  double threshold = -std::numeric_limits<double>::infinity();
  if (c.toxicity_base_rate <= 0.0) {
    threshold = std::numeric_limits<double>::infinity();
  } else if (c.toxicity_base_rate < 1.0) {
    std::vector<double> all(comp.slots.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = comp.slots[i].latent;
    const auto k = static_cast<std::size_t>(
        std::floor((1.0 - c.toxicity_base_rate) * static_cast<double>(all.size())));
    const std::size_t kth = std::min(k, all.size() - 1);
    std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(kth), all.end());
    threshold = all[kth];
  }
  for (auto& s : comp.slots) s.toxic = s.latent > threshold;

  SimOutput out;
  out.panel = assemble(c, comp, &out.latent);
  out.truth = base_truth(c, out.panel, traits);
  out.truth.toxicity_threshold = threshold;
  out.truth.match_shock.assign(comp.matches, 0.0);
  if (c.mode == SimMode::kTwoPlayerReflection) {
    out.truth.coefficient_names = {"others"};
    out.truth.coefficients = Eigen::VectorXd::Constant(1, c.beta_reflection);
    out.truth.ols_plim = ols_plim_reflection(c.beta_reflection, c.sigma_alpha_x * c.sigma_alpha_x,
                                             c.sigma_reflection_eps * c.sigma_reflection_eps);
  } else {
    out.truth.coefficient_names = {"opponents", "teammates", "opponents_x_win", "teammates_x_win", "win"};
    out.truth.coefficients.resize(5);
    out.truth.coefficients << c.beta_reflection * c.weight_opponents, c.beta_reflection * c.weight_teammates, 0.0,
        0.0, 0.0;
  }
  return out;
}

}  // namespace

std::string_view to_string(SimMode m) {
  switch (m) {
    case SimMode::kEngagementConfounded: return "engagement_confounded";
    case SimMode::kPropagationReflection: return "propagation_reflection";
    case SimMode::kTwoPlayerReflection: return "two_player_reflection";
  }
  return "engagement_confounded";
}

SimMode parse_sim_mode(std::string_view s) {
  if (s == "engagement_confounded" || s == "engagement-confounded" || s == "engagement")
    return SimMode::kEngagementConfounded;
  if (s == "propagation_reflection" || s == "propagation-reflection" || s == "propagation")
    return SimMode::kPropagationReflection;
  if (s == "two_player_reflection" || s == "two-player-reflection" || s == "two-player")
    return SimMode::kTwoPlayerReflection;
  throw ConfigError("unknown simulator mode '" + std::string(s) + "'");
}

std::size_t SimConfig::resolved_matches() const {
  if (n_matches > 0) return n_matches;
  const double per_match = 2.0 * static_cast<double>(effective_team_size(*this));
  return static_cast<std::size_t>(std::llround(static_cast<double>(n_players) * matches_per_player / per_match));
}

void SimConfig::validate() const {
  auto nonneg = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be a finite value >= 0");
  };
  auto prob = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0,1]");
  };
  nonneg(sigma_alpha_x, "sigma_alpha_x");
  nonneg(sigma_alpha_y, "sigma_alpha_y");
  nonneg(sigma_eps, "sigma_eps");
  nonneg(sigma_match_shock, "sigma_match_shock");
  nonneg(sigma_reflection_eps, "sigma_reflection_eps");
  nonneg(matches_per_player, "matches_per_player");
  prob(party_probability, "party_probability");
  prob(draw_probability, "draw_probability");
  prob(toxicity_base_rate, "toxicity_base_rate");
  exposure.validate();
  if (team_size < 1) throw ConfigError("team_size must be >= 1");
  if (max_party_size < 1) throw ConfigError("max_party_size must be >= 1");
  if (!std::isfinite(win_toxicity_tilt)) throw ConfigError("win_toxicity_tilt must be finite");
  for (double b : beta_engagement) {
    if (!std::isfinite(b)) throw ConfigError("beta_engagement entries must be finite");
  }
  const std::size_t per_match = 2 * effective_team_size(*this);
  if (n_players < per_match) {
    throw ConfigError("n_players (" + std::to_string(n_players) + ") is smaller than one match (" +
                      std::to_string(per_match) + " players)");
  }
  const std::size_t m = resolved_matches();
  if (m == 0) throw ConfigError("configuration yields zero matches");
  const long double needed = static_cast<long double>(m) * static_cast<long double>(per_match);
  const long double feasible =
      static_cast<long double>(n_players) * static_cast<long double>(max_matches_per_player);
  if (needed > feasible) {
    throw ConfigError("infeasible schedule: " + std::to_string(m) + " matches need " +
                      std::to_string(static_cast<unsigned long long>(needed)) + " participations but at most " +
                      std::to_string(static_cast<unsigned long long>(feasible)) + " are feasible");
  }
  if (mode != SimMode::kEngagementConfounded) {
    if (!(std::abs(beta_reflection) < 1.0)) throw ConfigError("|beta_reflection| must be < 1");
    nonneg(weight_opponents, "weight_opponents");
    nonneg(weight_teammates, "weight_teammates");
    const double rho = std::abs(beta_reflection) * spectral_radius(reflection_adjacency(*this));
    if (!(rho < 1.0)) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "spectral radius of beta*B is %.6g (must be < 1)", rho);
      throw ConfigError(buf);
    }
  }
}

SimOutput simulate(const SimConfig& cfg) {
  switch (cfg.mode) {
    case SimMode::kEngagementConfounded: return simulate_engagement_panel(cfg);
    case SimMode::kPropagationReflection: return simulate_propagation_panel(cfg);
    case SimMode::kTwoPlayerReflection: return simulate_two_player_panel(cfg);
  }
  throw ConfigError("unknown simulator mode");
}

SimOutput simulate_engagement_panel(const SimConfig& c) {
  check_mode(c, SimMode::kEngagementConfounded);
  c.validate();
  const PlayerTraits traits = draw_players(c);
  Composition comp = draw_composition(c);
  const std::size_t ts = comp.per_match / 2;
  const int mw = id_width(comp.matches);
  const int pw = id_width(c.n_players);
  std::vector<double> shocks(comp.matches, 0.0);
  const double base_logit = c.toxicity_base_rate <= 0.0   ? -std::numeric_limits<double>::infinity()
                            : c.toxicity_base_rate >= 1.0 ? std::numeric_limits<double>::infinity()
                                                          : std::log(c.toxicity_base_rate / (1.0 - c.toxicity_base_rate));
  const bool masked = !c.exposure.is_identity();

  parallel_for(comp.matches, 1, [&](std::size_t m) {
    std::mt19937_64 rng = substream(c.seed, 2, m);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::span<Slot> s(comp.slots.data() + m * comp.per_match, comp.per_match);
    const double shock = c.sigma_match_shock * n01(rng);
    shocks[m] = shock;
    for (auto& slot : s) {
      const double p = logistic(base_logit + traits.alpha_x[slot.player] + c.shock_toxicity_loading * shock);
      slot.toxic = unif(rng) < p;
      slot.latent = slot.toxic ? 1.0 : 0.0;
    }
    assign_results(c, rng, s, ts);

    std::string mid, src, dst;
    if (masked) mid = match_label(m, mw);
    for (std::size_t j = 0; j < s.size(); ++j) {
      double opp = 0.0, team = 0.0;
      if (masked) dst = player_label(s[j].player, pw);
      for (std::size_t k = 0; k < s.size(); ++k) {
        if (k == j || !s[k].toxic) continue;
        const bool same = (k < ts) == (j < ts);
        if (masked) {
          src = player_label(s[k].player, pw);
          if (!c.exposure.exposed(mid, src, dst, same)) continue;
        }
        (same ? team : opp) += 1.0;
      }
      const bool win = s[j].result == MatchResult::kWin;
      const double effect = win ? c.beta_engagement[2] * opp + c.beta_engagement[3] * team
                                : c.beta_engagement[0] * opp + c.beta_engagement[1] * team;
      s[j].gap_hours = std::max(0.0, traits.alpha_y[s[j].player] + effect + shock + c.sigma_eps * n01(rng));
    }
  });

  SimOutput out;
  out.panel = assemble(c, comp, nullptr);
  out.truth = base_truth(c, out.panel, traits);
  out.truth.match_shock = std::move(shocks);
  const auto& b = c.beta_engagement;
  out.truth.coefficient_names = {"opponents", "teammates", "opponents_x_win", "teammates_x_win", "win"};
  out.truth.coefficients.resize(5);
  out.truth.coefficients << b[0], b[1], b[2] - b[0], b[3] - b[1], 0.0;
  if (c.sigma_alpha_x == 0.0 && c.sigma_match_shock == 0.0 && c.win_toxicity_tilt == 0.0 && ts >= 2) {
    const double p = c.toxicity_base_rate;
    const double keep = 1.0 - c.exposure.missing_rate;
    const double team = 1.0 - std::pow(1.0 - p * keep * c.exposure.teammate_reach, static_cast<double>(ts - 1));
    const double opp = 1.0 - std::pow(1.0 - p * keep * c.exposure.opponent_reach, static_cast<double>(ts));
    if (opp > 0.0) out.truth.exposure_ratio = team / opp;
  }
  return out;
}

SimOutput simulate_propagation_panel(const SimConfig& c) {
  check_mode(c, SimMode::kPropagationReflection);
  return simulate_reflection(c);
}

SimOutput simulate_two_player_panel(const SimConfig& c) {
  check_mode(c, SimMode::kTwoPlayerReflection);
  return simulate_reflection(c);
}

double ols_plim_reflection(double beta, double var_alpha, double var_eps) {
  if (!(std::abs(beta) < 1.0)) throw NumericalError("ols_plim_reflection requires |beta| < 1");
  if (!(var_alpha >= 0.0 && var_eps >= 0.0) || var_alpha + var_eps <= 0.0) {
    throw NumericalError("ols_plim_reflection requires non-negative variances with a positive sum");
  }
  // Both variance terms scale Cov and Var identically, so they cancel.
  return 2.0 * beta / (1.0 + beta * beta);
}

Eigen::VectorXd equilibrium_solve(const Eigen::VectorXd& a, const Eigen::VectorXd& e, double beta,
                                  const Eigen::MatrixXd& adjacency) {
  const Eigen::Index n = a.size();
  if (e.size() != n || adjacency.rows() != n || adjacency.cols() != n) {
    throw UsageError("equilibrium_solve: dimension mismatch");
  }
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - beta * adjacency;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) throw NumericalError("equilibrium_solve: I - beta*B is singular");
  return lu.solve(a + e);
}

Eigen::MatrixXd context_adjacency(std::size_t team_size, double weight_opponents, double weight_teammates) {
  const auto n = static_cast<Eigen::Index>(2 * team_size);
  const auto ts = static_cast<Eigen::Index>(team_size);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      b(i, j) = ((i < ts) == (j < ts)) ? weight_teammates : weight_opponents;
    }
  }
  return b;
}

double spectral_radius(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return m.eigenvalues().cwiseAbs().maxCoeff();
}

void write_truth_json(const SimTruth& truth, std::ostream& out) {
  using nlohmann::ordered_json;
  const SimConfig& c = truth.config;
  ordered_json cfg{
      {"mode", to_string(c.mode)},
      {"seed", c.seed},
      {"n_players", c.n_players},
      {"n_matches", c.resolved_matches()},
      {"matches_per_player", c.matches_per_player},
      {"max_matches_per_player", c.max_matches_per_player},
      {"team_size", c.team_size},
      {"party_probability", c.party_probability},
      {"max_party_size", c.max_party_size},
      {"draw_probability", c.draw_probability},
      {"win_toxicity_tilt", c.win_toxicity_tilt},
      {"beta_engagement", c.beta_engagement},
      {"mean_alpha_y", c.mean_alpha_y},
      {"sigma_alpha_y", c.sigma_alpha_y},
      {"sigma_eps", c.sigma_eps},
      {"sigma_match_shock", c.sigma_match_shock},
      {"shock_toxicity_loading", c.shock_toxicity_loading},
      {"toxicity_base_rate", c.toxicity_base_rate},
      {"sigma_alpha_x", c.sigma_alpha_x},
      {"beta_reflection", c.beta_reflection},
      {"weight_opponents", c.weight_opponents},
      {"weight_teammates", c.weight_teammates},
      {"sigma_reflection_eps", c.sigma_reflection_eps},
      {"exposure",
       {{"missing_rate", c.exposure.missing_rate},
        {"opponent_reach", c.exposure.opponent_reach},
        {"teammate_reach", c.exposure.teammate_reach},
        {"seed", c.exposure.seed}}},
  };
  ordered_json beta = ordered_json::object();
  for (std::size_t i = 0; i < truth.coefficient_names.size(); ++i) {
    beta[truth.coefficient_names[i]] = truth.coefficients[static_cast<Eigen::Index>(i)];
  }
  ordered_json j{{"config", cfg}, {"beta_true", beta}};
  j["ols_plim"] = truth.ols_plim ? ordered_json(*truth.ols_plim) : ordered_json(nullptr);
  j["exposure_ratio_teammates_over_opponents"] =
      truth.exposure_ratio ? ordered_json(*truth.exposure_ratio) : ordered_json(nullptr);
  j["toxicity_threshold"] = std::isfinite(truth.toxicity_threshold) ? ordered_json(truth.toxicity_threshold)
                                                                    : ordered_json(nullptr);
  j["realized_toxic_rate"] = truth.realized_toxic_rate;
  j["alpha_x"] = truth.alpha_x;
  j["alpha_y"] = truth.alpha_y;
  j["match_shock"] = truth.match_shock;
  out << j.dump(2) << '\n';
}

}  // namespace peeriv
