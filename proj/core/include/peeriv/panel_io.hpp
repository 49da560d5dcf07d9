#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peeriv/panel.hpp"

namespace peeriv {

/// Header names for each logical column. Defaults match the canonical file
/// layout written by `write_match_rows`.
struct ColumnSchema {
  std::string match_id = "match_id";
  std::string player_id = "player_id";
  std::string team_id = "team_id";
  std::string party_id = "party_id";
  std::string match_start = "match_start";
  std::string match_end = "match_end";
  std::string used_toxic = "used_toxic";
  std::string result = "result";
  char delimiter = ',';
  /// When false the party column may be absent (every player is solo).
  bool require_party = false;
};

/// A loaded panel plus any optional per-row `latent` column (continuous
/// toxicity intensities written by the simulator's continuous mode).
struct LoadedPanel {
  MatchPanel panel;
  std::optional<std::vector<double>> latent;
};

LoadedPanel load_match_rows(std::istream& in, const ColumnSchema& schema = {});
LoadedPanel load_match_rows_file(const std::string& path, const ColumnSchema& schema = {});

/// Writes rows in panel order. `latent`, when given, is emitted as an extra
/// trailing column with 17 significant digits.
void write_match_rows(const MatchPanel& panel, std::ostream& out,
                      std::span<const double> latent = {}, char delimiter = ',');
void write_match_rows_file(const MatchPanel& panel, const std::string& path,
                           std::span<const double> latent = {}, char delimiter = ',');

/// Splits one delimited line; no quoting support (ids must not contain the delimiter).
std::vector<std::string_view> split_fields(std::string_view line, char delimiter);

}  // namespace peeriv
