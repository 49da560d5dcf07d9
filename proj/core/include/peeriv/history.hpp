#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "peeriv/design.hpp"
#include "peeriv/panel.hpp"

namespace peeriv {

struct HistoryEntry {
  std::int64_t time = 0;  // match time
  std::uint32_t match = 0;
  std::uint32_t row = 0;  // panel row
  double value = 0.0;     // used_toxic as 0/1, or a latent intensity

  bool operator==(const HistoryEntry&) const = default;
};

/// Per-player chronological match histories.
///
/// Entries are ordered by (match time, match index); match indices follow
/// lexicographic match_id order, so ties in time break on match_id. Prefix
/// sums over `value` make "how toxic was k before time t" an O(log n) query.
class HistoryIndex {
 public:
  HistoryIndex() = default;

  static HistoryIndex build(const MatchPanel& panel, std::span<const double> values = {});

  std::size_t num_players() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::span<const HistoryEntry> history(std::uint32_t player) const {
    return {entries_.data() + offsets_[player], entries_.data() + offsets_[player + 1]};
  }
  /// Membership test; equivalent to a set lookup over the player's matches.
  bool participated(std::uint32_t player, std::uint32_t match) const;
  /// Number of the player's entries strictly before `match` in history order.
  std::size_t count_before(std::uint32_t player, std::uint32_t match) const;
  /// Sum of `value` over the first `count` entries of the player's history.
  double prefix_sum(std::uint32_t player, std::size_t count) const {
    return prefix_[offsets_[player] + player + count];
  }
  std::int64_t match_time(std::uint32_t match) const { return match_time_[match]; }
  /// True when every value is a small integer, so prefix-sum differences are exact.
  bool integral_values() const { return integral_; }

  bool operator==(const HistoryIndex&) const = default;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<HistoryEntry> entries_;
  std::vector<double> prefix_;  // per player: count+1 running sums, laid out back to back
  std::vector<std::int64_t> match_time_;
  bool integral_ = true;
};

/// Mean of k's values over the matches before `match` that k played without j.
/// std::nullopt when that set is empty. Throws UsageError when k == j.
std::optional<double> leave_one_out_rate(const HistoryIndex& index, std::uint32_t peer, std::uint32_t focal,
                                         std::uint32_t match);

/// Instrument vectors aligned with DesignPanel rows.
///
/// For design row (i, j) and context c, z_c sums leave_one_out_rate(k, j, i)
/// over co-players k in context c, peers without history contributing 0.
/// Interaction instruments are z_c times the row's Win indicator.
struct InstrumentSet {
  std::vector<std::string> z_names;
  Eigen::MatrixXd z;                                 // rows × x columns
  std::vector<std::uint16_t> contributing_peers;     // rows × contexts
  std::size_t contexts = 0;

  std::size_t rows() const { return static_cast<std::size_t>(z.rows()); }
  std::uint32_t contributing(std::size_t row, std::size_t context) const {
    return contributing_peers[row * contexts + context];
  }
  std::uint32_t total_contributing(std::size_t row) const;
};

InstrumentSet build_instruments(const MatchPanel& panel, const HistoryIndex& index, const DesignPanel& design);

/// One row per (match_id, player_id): z columns then contributing peers per context.
void write_instruments(const MatchPanel& panel, const DesignPanel& design, const InstrumentSet& inst,
                       std::ostream& out, char delimiter = ',');

}  // namespace peeriv
