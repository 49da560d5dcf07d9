#include "peeriv/design.hpp"

#include <cmath>
#include <limits>

#include "peeriv/errors.hpp"
#include "peeriv/parallel.hpp"

namespace peeriv {

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double unit_interval(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

bool is_win(const PanelRow& r) { return r.result == MatchResult::kWin; }

}  // namespace

std::string_view to_string(ContextScheme s) {
  switch (s) {
    case ContextScheme::kOppTeam: return "opp-team";
    case ContextScheme::kPartySplit: return "party-split";
    case ContextScheme::kPooled: return "pooled";
  }
  return "opp-team";
}

ContextScheme parse_scheme(std::string_view s) {
  if (s == "opp-team" || s == "opp_team") return ContextScheme::kOppTeam;
  if (s == "party-split" || s == "party_split") return ContextScheme::kPartySplit;
  if (s == "pooled") return ContextScheme::kPooled;
  throw ConfigError("unknown scheme '" + std::string(s) + "' (expected opp-team|party-split|pooled)");
}

std::vector<std::string> context_names(ContextScheme s) {
  switch (s) {
    case ContextScheme::kOppTeam: return {"opponents", "teammates"};
    case ContextScheme::kPartySplit: return {"different_party", "same_party"};
    case ContextScheme::kPooled: return {"others"};
  }
  return {};
}

int peer_context(ContextScheme scheme, const PanelRow& focal, const PanelRow& peer) {
  switch (scheme) {
    case ContextScheme::kOppTeam:
      return focal.side == peer.side ? 1 : 0;
    case ContextScheme::kPartySplit:
      if (focal.side != peer.side) return -1;
      return (focal.party != kSolo && focal.party == peer.party) ? 1 : 0;
    case ContextScheme::kPooled:
      return 0;
  }
  return -1;
}

std::string_view to_string(DrawPolicy p) { return p == DrawPolicy::kExclude ? "exclude" : "as-loss"; }

DrawPolicy parse_draw_policy(std::string_view s) {
  if (s == "exclude") return DrawPolicy::kExclude;
  if (s == "as-loss" || s == "as_loss") return DrawPolicy::kAsLoss;
  throw ConfigError("unknown draw policy '" + std::string(s) + "' (expected exclude|as-loss)");
}

void ExposureModel::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(missing_rate)) throw ConfigError("exposure missing_rate must lie in [0,1]");
  if (!in_unit(opponent_reach)) throw ConfigError("exposure opponent_reach must lie in [0,1]");
  if (!in_unit(teammate_reach)) throw ConfigError("exposure teammate_reach must lie in [0,1]");
}

bool ExposureModel::exposed(std::string_view match_id, std::string_view source_id, std::string_view target_id,
                            bool same_team) const {
  if (is_identity()) return true;
  const std::uint64_t base = fnv1a(source_id, fnv1a(match_id, 0xcbf29ce484222325ULL ^ mix64(seed)));
  if (missing_rate > 0.0 && unit_interval(mix64(base)) < missing_rate) return false;
  const double reach = same_team ? teammate_reach : opponent_reach;
  if (reach >= 1.0) return true;
  const std::uint64_t link = fnv1a(target_id, base ^ 0x5bd1e9955bd1e995ULL);
  return unit_interval(mix64(link)) < reach;
}

bool ExposureModel::exposed(const MatchPanel& panel, const PanelRow& source, const PanelRow& target) const {
  if (is_identity()) return true;
  return exposed(panel.match_id(source.match), panel.player_id(source.player), panel.player_id(target.player),
                 source.side == target.side);
}

int DesignPanel::win_column() const {
  for (std::size_t i = 0; i < w_names.size(); ++i) {
    if (w_names[i] == "win") return static_cast<int>(i);
  }
  return -1;
}

DesignPanel build_exposure_design(const MatchPanel& panel, const DesignOptions& options,
                                  std::span<const double> values) {
  options.exposure.validate();
  if (options.scheme == ContextScheme::kPartySplit && !panel.has_party_column()) {
    throw SchemaError("scheme party-split requires a party_id column in the input");
  }
  if (!values.empty() && values.size() != panel.num_rows()) {
    throw UsageError("value vector length does not match panel rows");
  }

  DesignPanel d;
  d.options = options;
  d.context_labels = context_names(options.scheme);
  const std::size_t n_ctx = d.context_labels.size();
  d.x_names = d.context_labels;
  if (options.interact_win) {
    for (const auto& c : d.context_labels) d.x_names.push_back(c + "_x_win");
    d.w_names.push_back("win");
  }
  if (options.scheme == ContextScheme::kPartySplit) d.w_names.push_back("belongs_to_party");

  for (std::size_t i = 0; i < panel.num_rows(); ++i) {
    const auto& r = panel.row(i);
    if (r.result == MatchResult::kDraw && options.draws == DrawPolicy::kExclude) {
      ++d.draws_excluded;
      continue;
    }
    d.panel_row.push_back(static_cast<std::uint32_t>(i));
    d.player.push_back(r.player);
  }

  const std::size_t n = d.rows();
  const std::vector<double> time_next = derive_time_to_next_match(panel);
  d.y_time.resize(static_cast<Eigen::Index>(n));
  d.y_toxic.resize(static_cast<Eigen::Index>(n));
  d.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d.x_names.size()));
  d.w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d.w_names.size()));
  const bool continuous = !values.empty();
  const int win_col = d.win_column();
  const bool party_col = options.scheme == ContextScheme::kPartySplit;

  parallel_for_chunks(n, options.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> exposure(n_ctx);
    for (std::size_t t = begin; t < end; ++t) {
      const auto ti = static_cast<Eigen::Index>(t);
      const std::size_t pi = d.panel_row[t];
      const auto& focal = panel.row(pi);
      d.y_time[ti] = time_next[pi];
      d.y_toxic[ti] = continuous ? values[pi] : (focal.toxic ? 1.0 : 0.0);
      std::fill(exposure.begin(), exposure.end(), 0.0);
      for (auto k : panel.match_members(focal.match)) {
        if (k == pi) continue;
        const auto& peer = panel.row(k);
        const int c = peer_context(options.scheme, focal, peer);
        if (c < 0) continue;
        const double v = continuous ? values[k] : (peer.toxic ? 1.0 : 0.0);
        if (v == 0.0) continue;
        if (!options.exposure.exposed(panel, peer, focal)) continue;
        exposure[static_cast<std::size_t>(c)] += v;
      }
      const double win = is_win(focal) ? 1.0 : 0.0;
      for (std::size_t c = 0; c < n_ctx; ++c) {
        d.x(ti, static_cast<Eigen::Index>(c)) = exposure[c];
        if (options.interact_win) d.x(ti, static_cast<Eigen::Index>(n_ctx + c)) = exposure[c] * win;
      }
      if (win_col >= 0) d.w(ti, win_col) = win;
      if (party_col) d.w(ti, static_cast<Eigen::Index>(d.w_names.size() - 1)) = focal.party != kSolo ? 1.0 : 0.0;
    }
  });
  return d;
}

namespace {

// Per-row exposure indicators for every context; rows in panel order.
// Returns false for rows excluded from descriptives (draws under kExclude).
struct ExposureFlags {
  std::vector<std::uint8_t> included;
  std::vector<std::uint8_t> win;
  std::vector<std::uint8_t> flags;  // n × contexts
  std::size_t contexts = 0;
};

ExposureFlags exposure_flags(const MatchPanel& panel, const DesignOptions& options) {
  options.exposure.validate();
  if (options.scheme == ContextScheme::kPartySplit && !panel.has_party_column()) {
    throw SchemaError("scheme party-split requires a party_id column in the input");
  }
  ExposureFlags f;
  f.contexts = context_names(options.scheme).size();
  const std::size_t n = panel.num_rows();
  f.included.assign(n, 0);
  f.win.assign(n, 0);
  f.flags.assign(n * f.contexts, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& focal = panel.row(i);
    if (focal.result == MatchResult::kDraw && options.draws == DrawPolicy::kExclude) continue;
    f.included[i] = 1;
    f.win[i] = is_win(focal) ? 1 : 0;
    for (auto k : panel.match_members(focal.match)) {
      if (k == i) continue;
      const auto& peer = panel.row(k);
      if (!peer.toxic) continue;
      const int c = peer_context(options.scheme, focal, peer);
      if (c < 0) continue;
      if (!options.exposure.exposed(panel, peer, focal)) continue;
      f.flags[i * f.contexts + static_cast<std::size_t>(c)] = 1;
    }
  }
  return f;
}

}  // namespace

ExposureTable describe_exposure(const MatchPanel& panel, const DesignOptions& options) {
  const ExposureFlags f = exposure_flags(panel, options);
  const auto labels = context_names(options.scheme);
  ExposureTable table;
  table.scheme = options.scheme;

  // Cell index = context * 2 + (win ? 1 : 0).
  const std::size_t n_cells = f.contexts * 2;
  std::vector<std::size_t> rows(n_cells, 0), hits(n_cells, 0);
  for (std::size_t i = 0; i < panel.num_rows(); ++i) {
    if (!f.included[i]) continue;
    for (std::size_t c = 0; c < f.contexts; ++c) {
      const std::size_t cell = c * 2 + f.win[i];
      ++rows[cell];
      hits[cell] += f.flags[i * f.contexts + c];
    }
  }
  // Match-clustered variance of each cell proportion.
  std::vector<double> var(n_cells, 0.0);
  std::vector<double> score(n_cells);
  for (std::uint32_t m = 0; m < panel.num_matches(); ++m) {
    std::fill(score.begin(), score.end(), 0.0);
    for (auto i : panel.match_members(m)) {
      if (!f.included[i]) continue;
      for (std::size_t c = 0; c < f.contexts; ++c) {
        const std::size_t cell = c * 2 + f.win[i];
        const double p = rows[cell] ? static_cast<double>(hits[cell]) / static_cast<double>(rows[cell]) : 0.0;
        score[cell] += f.flags[i * f.contexts + c] - p;
      }
    }
    for (std::size_t cell = 0; cell < n_cells; ++cell) var[cell] += score[cell] * score[cell];
  }

  for (std::size_t c = 0; c < f.contexts; ++c) {
    for (int w = 0; w < 2; ++w) {
      const std::size_t cell = c * 2 + static_cast<std::size_t>(w);
      ExposureCell out;
      out.context = labels[c];
      out.outcome = w ? MatchResult::kWin : MatchResult::kLoss;
      out.rows = rows[cell];
      out.exposed = hits[cell];
      if (rows[cell] > 0) {
        const double nr = static_cast<double>(rows[cell]);
        out.probability = static_cast<double>(hits[cell]) / nr;
        out.std_error = std::sqrt(var[cell]) / nr;
      }
      table.max_probability = std::max(table.max_probability, out.probability);
      table.cells.push_back(std::move(out));
    }
  }
  table.below_one_tenth_percent = table.max_probability < 0.001;
  if (!table.below_one_tenth_percent) {
    table.warnings.push_back("exposure probabilities exceed 0.1%; production telemetry of this kind is "
                             "typically below one tenth of one percent");
  }
  return table;
}

ExposureRatio exposure_ratio(const MatchPanel& panel, const DesignOptions& options, int numerator_context,
                             int denominator_context) {
  const ExposureFlags f = exposure_flags(panel, options);
  const auto nc = static_cast<std::size_t>(numerator_context);
  const auto dc = static_cast<std::size_t>(denominator_context);
  if (numerator_context < 0 || denominator_context < 0 || nc >= f.contexts || dc >= f.contexts) {
    throw UsageError("exposure_ratio: context index out of range");
  }
  double n = 0, a = 0, b = 0;
  for (std::size_t i = 0; i < panel.num_rows(); ++i) {
    if (!f.included[i]) continue;
    n += 1;
    a += f.flags[i * f.contexts + nc];
    b += f.flags[i * f.contexts + dc];
  }
  ExposureRatio out;
  if (n == 0 || b == 0) {
    out.ratio = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.numerator = a / n;
  out.denominator = b / n;
  out.ratio = a / b;
  // Linearisation of a/b: influence (a_i - R b_i) / (n p_b), summed per match.
  double var = 0;
  for (std::uint32_t m = 0; m < panel.num_matches(); ++m) {
    double s = 0;
    for (auto i : panel.match_members(m)) {
      if (!f.included[i]) continue;
      s += f.flags[i * f.contexts + nc] - out.ratio * f.flags[i * f.contexts + dc];
    }
    var += s * s;
  }
  out.std_error = std::sqrt(var) / b;
  return out;
}

}  // namespace peeriv
