#include "peeriv/panel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "peeriv/errors.hpp"

namespace peeriv {

namespace {

constexpr std::size_t kMaxDiagnostics = 20;

std::string join_diagnostics(const std::vector<std::string>& errs, std::string_view header) {
  std::ostringstream os;
  os << header << " (" << errs.size() << " problem" << (errs.size() == 1 ? "" : "s") << ")";
  for (std::size_t i = 0; i < errs.size() && i < kMaxDiagnostics; ++i) os << "\n  " << errs[i];
  if (errs.size() > kMaxDiagnostics) os << "\n  ...";
  return os.str();
}

// Dense remap so that index order equals lexicographic order of the names.
std::vector<std::uint32_t> sorted_remap(std::vector<std::string>& names) {
  std::vector<std::uint32_t> order(names.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return names[a] < names[b]; });
  std::vector<std::uint32_t> remap(names.size());
  std::vector<std::string> sorted;
  sorted.reserve(names.size());
  for (std::uint32_t r = 0; r < order.size(); ++r) {
    remap[order[r]] = r;
    sorted.push_back(std::move(names[order[r]]));
  }
  names = std::move(sorted);
  return remap;
}

}  // namespace

std::string_view to_string(MatchResult r) {
  switch (r) {
    case MatchResult::kWin: return "win";
    case MatchResult::kLoss: return "loss";
    case MatchResult::kDraw: return "draw";
  }
  return "loss";
}

MatchResult parse_match_result(std::string_view s) {
  if (s == "win" || s == "WIN" || s == "Win") return MatchResult::kWin;
  if (s == "loss" || s == "LOSS" || s == "Loss") return MatchResult::kLoss;
  if (s == "draw" || s == "DRAW" || s == "Draw") return MatchResult::kDraw;
  throw ValidationError("unrecognised result value '" + std::string(s) + "' (expected win|loss|draw)");
}

std::uint32_t PanelBuilder::Interner::intern(std::string_view s) {
  std::string key(s);
  auto it = index.find(key);
  if (it != index.end()) return it->second;
  auto id = static_cast<std::uint32_t>(names.size());
  index.emplace(key, id);
  names.push_back(std::move(key));
  return id;
}

void PanelBuilder::add(std::string_view match_id, std::string_view player_id,
                       std::string_view team_id, std::string_view party_id, std::int64_t start,
                       std::int64_t end, bool toxic, MatchResult result, std::size_t source_line) {
  PanelRow r;
  r.match = matches_.intern(match_id);
  r.player = players_.intern(player_id);
  r.team_label = teams_.intern(team_id);
  r.party = party_id.empty() ? kSolo : static_cast<std::int32_t>(parties_.intern(party_id));
  r.start = start;
  r.end = end;
  r.toxic = toxic;
  r.result = result;
  if (match_id.empty()) row_errors_.push_back("line " + std::to_string(source_line) + ": empty match_id");
  if (player_id.empty()) row_errors_.push_back("line " + std::to_string(source_line) + ": empty player_id");
  if (end < start) {
    row_errors_.push_back("line " + std::to_string(source_line) + ": match_end < match_start for match " +
                          std::string(match_id) + ", player " + std::string(player_id));
  }
  raw_.push_back(r);
  lines_.push_back(source_line);
}

void PanelBuilder::add(const PlayerMatchRow& row, std::size_t source_line) {
  add(row.match_id, row.player_id, row.team_id, row.party_id.value_or(std::string{}), row.match_start,
      row.match_end, row.used_toxic, row.result, source_line);
}

MatchPanel PanelBuilder::build(std::vector<std::uint32_t>* row_of_input) && {
  if (!row_errors_.empty()) throw ValidationError(join_diagnostics(row_errors_, "invalid rows"));

  MatchPanel p;
  p.has_party_column_ = has_party_column_;
  const auto match_map = sorted_remap(matches_.names);
  const auto player_map = sorted_remap(players_.names);
  const auto team_map = sorted_remap(teams_.names);
  const auto party_map = sorted_remap(parties_.names);
  for (auto& r : raw_) {
    r.match = match_map[r.match];
    r.player = player_map[r.player];
    r.team_label = team_map[r.team_label];
    if (r.party != kSolo) r.party = static_cast<std::int32_t>(party_map[static_cast<std::size_t>(r.party)]);
  }
  p.match_ids_ = std::move(matches_.names);
  p.player_ids_ = std::move(players_.names);
  p.team_labels_ = std::move(teams_.names);
  p.party_ids_ = std::move(parties_.names);

  const std::size_t n = raw_.size();
  const std::size_t n_matches = p.match_ids_.size();

  // Group by match (counting sort) to run match-level checks.
  std::vector<std::size_t> moff(n_matches + 1, 0);
  for (const auto& r : raw_) ++moff[r.match + 1];
  for (std::size_t m = 0; m < n_matches; ++m) moff[m + 1] += moff[m];
  std::vector<std::uint32_t> by_match(n);
  {
    auto cursor = moff;
    for (std::size_t i = 0; i < n; ++i) by_match[cursor[raw_[i].match]++] = static_cast<std::uint32_t>(i);
  }

  std::vector<std::string> errs;
  std::vector<std::int64_t> match_time(n_matches, 0);
  for (std::size_t m = 0; m < n_matches; ++m) {
    auto first = by_match.begin() + static_cast<std::ptrdiff_t>(moff[m]);
    auto last = by_match.begin() + static_cast<std::ptrdiff_t>(moff[m + 1]);
    std::sort(first, last, [&](std::uint32_t a, std::uint32_t b) { return raw_[a].player < raw_[b].player; });
    const std::string& mid = p.match_ids_[m];

    for (auto it = first; it + 1 < last; ++it) {
      if (raw_[*it].player == raw_[*(it + 1)].player) {
        errs.push_back("duplicate (match_id, player_id) = (" + mid + ", " + p.player_ids_[raw_[*it].player] +
                       ") at lines " + std::to_string(lines_[*it]) + " and " + std::to_string(lines_[*(it + 1)]));
      }
    }

    std::uint32_t label_a = raw_[*first].team_label;
    std::uint32_t label_b = label_a;
    bool two_labels = false;
    bool too_many = false;
    for (auto it = first; it != last; ++it) {
      std::uint32_t t = raw_[*it].team_label;
      if (t == label_a) continue;
      if (!two_labels) {
        label_b = t;
        two_labels = true;
      } else if (t != label_b) {
        too_many = true;
      }
    }
    if (!two_labels || too_many) {
      errs.push_back("match " + mid + ": expected exactly two distinct team_id values");
      continue;
    }
    if (label_b < label_a) std::swap(label_a, label_b);
    std::size_t size0 = 0, size1 = 0;
    std::int64_t t0 = std::numeric_limits<std::int64_t>::max();
    for (auto it = first; it != last; ++it) {
      auto& r = raw_[*it];
      r.side = r.team_label == label_a ? 0 : 1;
      (r.side == 0 ? size0 : size1)++;
      t0 = std::min(t0, r.start);
    }
    match_time[m] = t0;
    if (size0 != size1) {
      errs.push_back("match " + mid + ": team sizes differ (" + p.team_labels_[label_a] + "=" +
                     std::to_string(size0) + ", " + p.team_labels_[label_b] + "=" + std::to_string(size1) + ")");
    }

    // Results must be uniform within a team and complementary across teams.
    bool result_ok = true;
    MatchResult res[2] = {raw_[*first].result, raw_[*first].result};
    bool seen[2] = {false, false};
    for (auto it = first; it != last; ++it) {
      const auto& r = raw_[*it];
      if (!seen[r.side]) {
        res[r.side] = r.result;
        seen[r.side] = true;
      } else if (res[r.side] != r.result) {
        result_ok = false;
      }
    }
    if (result_ok) {
      const bool draw = res[0] == MatchResult::kDraw && res[1] == MatchResult::kDraw;
      const bool decided = (res[0] == MatchResult::kWin && res[1] == MatchResult::kLoss) ||
                           (res[0] == MatchResult::kLoss && res[1] == MatchResult::kWin);
      result_ok = draw || decided;
    }
    if (!result_ok) errs.push_back("match " + mid + ": results must be win/loss across teams or draw/draw");

    // Parties must not straddle teams.
    std::unordered_map<std::int32_t, std::uint8_t> party_side;
    for (auto it = first; it != last; ++it) {
      const auto& r = raw_[*it];
      if (r.party == kSolo) continue;
      auto [pos, inserted] = party_side.emplace(r.party, r.side);
      if (!inserted && pos->second != r.side) {
        errs.push_back("match " + mid + ": party " + p.party_ids_[static_cast<std::size_t>(r.party)] +
                       " spans both teams");
        break;
      }
    }
  }
  if (!errs.empty()) throw ValidationError(join_diagnostics(errs, "invalid matches"));

  // Canonical row order: player, start, match id.
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto& ra = raw_[a];
    const auto& rb = raw_[b];
    if (ra.player != rb.player) return ra.player < rb.player;
    if (ra.start != rb.start) return ra.start < rb.start;
    return ra.match < rb.match;
  });
  p.rows_.resize(n);
  std::vector<std::uint32_t> new_pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.rows_[i] = raw_[order[i]];
    new_pos[order[i]] = static_cast<std::uint32_t>(i);
  }
  raw_.clear();
  raw_.shrink_to_fit();
  if (row_of_input != nullptr) *row_of_input = new_pos;

  p.player_offsets_.assign(p.player_ids_.size() + 1, 0);
  for (const auto& r : p.rows_) ++p.player_offsets_[r.player + 1];
  for (std::size_t k = 0; k + 1 < p.player_offsets_.size(); ++k) p.player_offsets_[k + 1] += p.player_offsets_[k];

  // Members are already sorted by player; stable partition by side keeps that.
  p.match_offsets_ = std::move(moff);
  p.match_members_.resize(n);
  for (std::size_t m = 0; m < n_matches; ++m) {
    std::size_t out = p.match_offsets_[m];
    for (int side = 0; side < 2; ++side) {
      for (std::size_t k = p.match_offsets_[m]; k < p.match_offsets_[m + 1]; ++k) {
        const auto& r = p.rows_[new_pos[by_match[k]]];
        if (r.side == side) p.match_members_[out++] = new_pos[by_match[k]];
      }
    }
  }
  p.match_time_ = std::move(match_time);
  return p;
}

MatchPanel MatchPanel::from_rows(std::span<const PlayerMatchRow> rows, bool has_party_column) {
  PanelBuilder b(has_party_column);
  b.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) b.add(rows[i], i + 1);
  return std::move(b).build();
}

std::optional<std::uint32_t> MatchPanel::find_player(std::string_view id) const {
  auto it = std::lower_bound(player_ids_.begin(), player_ids_.end(), id,
                             [](const std::string& a, std::string_view b) { return a < b; });
  if (it == player_ids_.end() || *it != id) return std::nullopt;
  return static_cast<std::uint32_t>(it - player_ids_.begin());
}

std::optional<std::uint32_t> MatchPanel::find_match(std::string_view id) const {
  auto it = std::lower_bound(match_ids_.begin(), match_ids_.end(), id,
                             [](const std::string& a, std::string_view b) { return a < b; });
  if (it == match_ids_.end() || *it != id) return std::nullopt;
  return static_cast<std::uint32_t>(it - match_ids_.begin());
}

std::optional<std::size_t> MatchPanel::find_row(std::uint32_t match, std::uint32_t player) const {
  for (auto idx : match_members(match)) {
    if (rows_[idx].player == player) return idx;
  }
  return std::nullopt;
}

PlayerMatchRow MatchPanel::to_raw(std::size_t i) const {
  const auto& r = rows_[i];
  PlayerMatchRow out;
  out.match_id = match_ids_[r.match];
  out.player_id = player_ids_[r.player];
  out.team_id = team_labels_[r.team_label];
  if (r.party != kSolo) out.party_id = party_ids_[static_cast<std::size_t>(r.party)];
  out.match_start = r.start;
  out.match_end = r.end;
  out.used_toxic = r.toxic;
  out.result = r.result;
  return out;
}

std::vector<double> derive_time_to_next_match(const MatchPanel& panel) {
  std::vector<double> hours(panel.num_rows(), std::numeric_limits<double>::quiet_NaN());
  for (std::uint32_t p = 0; p < panel.num_players(); ++p) {
    auto [first, last] = panel.player_range(p);
    for (std::size_t i = first; i + 1 < last; ++i) {
      const auto& cur = panel.row(i);
      const auto& next = panel.row(i + 1);
      if (next.start < cur.end) {
        throw DataError("player " + panel.player_id(p) + ": match " + panel.match_id(next.match) +
                        " starts before match " + panel.match_id(cur.match) + " ends");
      }
      hours[i] = static_cast<double>(next.start - cur.end) / 3600.0;
    }
  }
  return hours;
}

}  // namespace peeriv
