#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace peeriv {

enum class MatchResult : std::uint8_t { kWin = 0, kLoss = 1, kDraw = 2 };

std::string_view to_string(MatchResult r);
MatchResult parse_match_result(std::string_view s);

/// One player's participation in one match, as it appears in the input file.
struct PlayerMatchRow {
  std::string match_id;
  std::string player_id;
  std::string team_id;
  std::optional<std::string> party_id;  // empty = solo
  std::int64_t match_start = 0;         // seconds since epoch
  std::int64_t match_end = 0;
  bool used_toxic = false;
  MatchResult result = MatchResult::kLoss;
};

inline constexpr std::int32_t kSolo = -1;

/// Interned row. Ids index into the panel's string tables, which are sorted,
/// so index order equals lexicographic id order.
struct PanelRow {
  std::uint32_t match = 0;
  std::uint32_t player = 0;
  std::uint32_t team_label = 0;
  std::int32_t party = kSolo;
  std::uint8_t side = 0;  // 0/1 within the match, by team label order
  bool toxic = false;
  MatchResult result = MatchResult::kLoss;
  std::int64_t start = 0;
  std::int64_t end = 0;
};

class PanelBuilder;

/// Validated, immutable match panel.
///
/// Rows are stored in (player_id, match_start, match_id) order. Two CSR views
/// are kept: rows per player (contiguous ranges) and rows per match (member
/// lists ordered by side, then player).
class MatchPanel {
 public:
  MatchPanel() = default;

  std::size_t num_rows() const { return rows_.size(); }
  std::size_t num_matches() const { return match_ids_.size(); }
  std::size_t num_players() const { return player_ids_.size(); }
  bool has_party_column() const { return has_party_column_; }

  std::span<const PanelRow> rows() const { return rows_; }
  const PanelRow& row(std::size_t i) const { return rows_[i]; }

  /// Row indices [first, last) belonging to a player.
  std::pair<std::size_t, std::size_t> player_range(std::uint32_t player) const {
    return {player_offsets_[player], player_offsets_[player + 1]};
  }
  /// Row indices of a match's members.
  std::span<const std::uint32_t> match_members(std::uint32_t match) const {
    return {match_members_.data() + match_offsets_[match],
            match_members_.data() + match_offsets_[match + 1]};
  }
  /// Canonical match time: the earliest row start within the match. History
  /// ordering ("prior matches") is by (match_time, match index).
  std::int64_t match_time(std::uint32_t match) const { return match_time_[match]; }
  std::span<const std::int64_t> match_times() const { return match_time_; }

  const std::string& match_id(std::uint32_t m) const { return match_ids_[m]; }
  const std::string& player_id(std::uint32_t p) const { return player_ids_[p]; }
  const std::string& team_label(std::uint32_t t) const { return team_labels_[t]; }
  const std::string& party_id(std::int32_t p) const { return party_ids_[static_cast<std::size_t>(p)]; }

  std::optional<std::uint32_t> find_player(std::string_view id) const;
  std::optional<std::uint32_t> find_match(std::string_view id) const;

  /// Row of (match, player), if the player took part in the match.
  std::optional<std::size_t> find_row(std::uint32_t match, std::uint32_t player) const;

  PlayerMatchRow to_raw(std::size_t i) const;

  /// Validates and canonicalises a set of raw rows.
  static MatchPanel from_rows(std::span<const PlayerMatchRow> rows, bool has_party_column = true);

 private:
  friend class PanelBuilder;

  std::vector<PanelRow> rows_;
  std::vector<std::size_t> player_offsets_;
  std::vector<std::size_t> match_offsets_;
  std::vector<std::uint32_t> match_members_;
  std::vector<std::int64_t> match_time_;
  std::vector<std::string> match_ids_;
  std::vector<std::string> player_ids_;
  std::vector<std::string> team_labels_;
  std::vector<std::string> party_ids_;
  bool has_party_column_ = true;
};

/// Incremental construction with string interning; `build()` sorts and runs
/// every row- and match-level check. Row diagnostics carry the source line.
class PanelBuilder {
 public:
  explicit PanelBuilder(bool has_party_column = true) : has_party_column_(has_party_column) {}

  void reserve(std::size_t n) { raw_.reserve(n); lines_.reserve(n); }

  void add(std::string_view match_id, std::string_view player_id, std::string_view team_id,
           std::string_view party_id, std::int64_t start, std::int64_t end, bool toxic,
           MatchResult result, std::size_t source_line = 0);
  void add(const PlayerMatchRow& row, std::size_t source_line = 0);

  /// `row_of_input`, when given, receives the final row index of each added
  /// row in insertion order.
  MatchPanel build(std::vector<std::uint32_t>* row_of_input = nullptr) &&;

 private:
  struct Interner {
    std::unordered_map<std::string, std::uint32_t> index;
    std::vector<std::string> names;
    std::uint32_t intern(std::string_view s);
  };

  bool has_party_column_;
  Interner matches_, players_, teams_, parties_;
  std::vector<PanelRow> raw_;
  std::vector<std::size_t> lines_;
  std::vector<std::string> row_errors_;
};

/// Hours from the end of each row's match to the same player's next match
/// start; NaN for each player's last observed row. Aligned with panel rows.
/// Throws DataError if a player's next match starts before the current ends.
std::vector<double> derive_time_to_next_match(const MatchPanel& panel);

}  // namespace peeriv
