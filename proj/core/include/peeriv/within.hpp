#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "peeriv/design.hpp"
#include "peeriv/history.hpp"

namespace peeriv {

enum class Outcome { kTimeToNextMatch, kUsedToxic };

std::string_view to_string(Outcome o);
Outcome parse_outcome(std::string_view s);

/// Row accounting for the estimation sample. rows_in = rows_out + all drops.
struct AttritionReport {
  std::size_t rows_in = 0;
  std::size_t rows_dropped_no_instrument = 0;
  std::size_t rows_dropped_missing_outcome = 0;
  std::size_t rows_dropped_single_match = 0;
  std::size_t rows_out = 0;

  bool reconciles() const {
    return rows_in == rows_out + rows_dropped_no_instrument + rows_dropped_missing_outcome +
                          rows_dropped_single_match;
  }
  bool operator==(const AttritionReport&) const = default;
};

/// Restricted regression sample for one outcome. Rows of a player are
/// contiguous; `group_offsets` delimits them (G + 1 entries).
struct EstimationSample {
  Outcome outcome = Outcome::kUsedToxic;
  std::vector<std::uint32_t> design_row;
  std::vector<std::uint32_t> player;
  std::vector<std::size_t> group_offsets;
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  Eigen::MatrixXd w;
  Eigen::MatrixXd z;
  std::vector<std::string> x_names;
  std::vector<std::string> w_names;
  std::vector<std::string> z_names;
  AttritionReport attrition;
  bool demeaned = false;

  std::size_t rows() const { return design_row.size(); }
  std::size_t num_groups() const { return group_offsets.empty() ? 0 : group_offsets.size() - 1; }
};

/// Applies, in order: (1) drop rows where no co-player has usable history,
/// (2) drop rows with a missing outcome, (3) drop players left with fewer
/// than two rows. Steps 1 and 2 are row-local, so step 3's output is already a
/// fixed point and one pass is final. Throws EmptySampleError if nothing
/// survives.
EstimationSample apply_sample_restrictions(const DesignPanel& design, const InstrumentSet& instruments,
                                           Outcome outcome);

/// Subtracts per-group column means. Groups are contiguous row ranges given by
/// `group_offsets`; summation is sequential within each group.
Eigen::MatrixXd demean_by_player(const Eigen::MatrixXd& columns, std::span<const std::size_t> group_offsets,
                                 unsigned threads = 1);
Eigen::VectorXd demean_by_player(const Eigen::VectorXd& column, std::span<const std::size_t> group_offsets,
                                 unsigned threads = 1);

/// Demeans y, x, w and z of the sample in place.
void demean_sample(EstimationSample& sample, unsigned threads = 1);

}  // namespace peeriv
