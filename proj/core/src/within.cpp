#include "peeriv/within.hpp"

#include <cmath>

#include "peeriv/errors.hpp"
#include "peeriv/parallel.hpp"

namespace peeriv {

std::string_view to_string(Outcome o) {
  return o == Outcome::kTimeToNextMatch ? "time_to_next_match" : "used_toxic";
}

Outcome parse_outcome(std::string_view s) {
  if (s == "time_to_next_match" || s == "engagement") return Outcome::kTimeToNextMatch;
  if (s == "used_toxic" || s == "propagation") return Outcome::kUsedToxic;
  throw ConfigError("unknown outcome '" + std::string(s) + "'");
}

EstimationSample apply_sample_restrictions(const DesignPanel& design, const InstrumentSet& instruments,
                                           Outcome outcome) {
  if (instruments.rows() != design.rows()) throw UsageError("instrument rows do not match design rows");
  const std::size_t n = design.rows();
  const Eigen::VectorXd& y_all = outcome == Outcome::kTimeToNextMatch ? design.y_time : design.y_toxic;

  AttritionReport rep;
  rep.rows_in = n;
  std::vector<std::uint8_t> keep(n, 1);
  for (std::size_t t = 0; t < n; ++t) {
    if (instruments.total_contributing(t) == 0) {
      keep[t] = 0;
      ++rep.rows_dropped_no_instrument;
    } else if (std::isnan(y_all[static_cast<Eigen::Index>(t)])) {
      keep[t] = 0;
      ++rep.rows_dropped_missing_outcome;
    }
  }
  // Players are contiguous in design order.
  for (std::size_t b = 0; b < n;) {
    std::size_t e = b;
    std::size_t kept = 0;
    while (e < n && design.player[e] == design.player[b]) kept += keep[e++];
    if (kept == 1) {
      for (std::size_t t = b; t < e; ++t) {
        if (keep[t]) {
          keep[t] = 0;
          ++rep.rows_dropped_single_match;
        }
      }
    }
    b = e;
  }

  EstimationSample s;
  s.outcome = outcome;
  s.x_names = design.x_names;
  s.w_names = design.w_names;
  s.z_names = instruments.z_names;
  for (std::size_t t = 0; t < n; ++t) {
    if (!keep[t]) continue;
    if (s.player.empty() || s.player.back() != design.player[t]) s.group_offsets.push_back(s.design_row.size());
    s.design_row.push_back(static_cast<std::uint32_t>(t));
    s.player.push_back(design.player[t]);
  }
  rep.rows_out = s.design_row.size();
  s.attrition = rep;
  if (s.design_row.empty()) {
    throw EmptySampleError("empty sample for outcome " + std::string(to_string(outcome)) +
                           " after sample restrictions");
  }
  s.group_offsets.push_back(s.design_row.size());

  const auto m = static_cast<Eigen::Index>(s.rows());
  s.y.resize(m);
  s.x.resize(m, design.x.cols());
  s.w.resize(m, design.w.cols());
  s.z.resize(m, instruments.z.cols());
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto src = static_cast<Eigen::Index>(s.design_row[static_cast<std::size_t>(r)]);
    s.y[r] = y_all[src];
    s.x.row(r) = design.x.row(src);
    s.w.row(r) = design.w.row(src);
    s.z.row(r) = instruments.z.row(src);
  }
  return s;
}

namespace {

void demean_in_place(Eigen::Ref<Eigen::MatrixXd> m, std::span<const std::size_t> offsets, unsigned threads) {
  if (offsets.size() < 2) return;
  if (offsets.back() != static_cast<std::size_t>(m.rows())) {
    throw UsageError("group offsets do not cover the matrix rows");
  }
  const std::size_t groups = offsets.size() - 1;
  parallel_for_chunks(groups, threads, [&](std::size_t gb, std::size_t ge) {
    for (std::size_t g = gb; g < ge; ++g) {
      const auto b = static_cast<Eigen::Index>(offsets[g]);
      const auto e = static_cast<Eigen::Index>(offsets[g + 1]);
      if (e <= b) continue;
      const double len = static_cast<double>(e - b);
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        double sum = 0.0;
        for (Eigen::Index r = b; r < e; ++r) sum += m(r, c);
        const double mean = sum / len;
        for (Eigen::Index r = b; r < e; ++r) m(r, c) -= mean;
      }
    }
  });
}

}  // namespace

Eigen::MatrixXd demean_by_player(const Eigen::MatrixXd& columns, std::span<const std::size_t> group_offsets,
                                 unsigned threads) {
  Eigen::MatrixXd out = columns;
  demean_in_place(out, group_offsets, threads);
  return out;
}

Eigen::VectorXd demean_by_player(const Eigen::VectorXd& column, std::span<const std::size_t> group_offsets,
                                 unsigned threads) {
  Eigen::MatrixXd out = column;
  demean_in_place(out, group_offsets, threads);
  return out.col(0);
}

void demean_sample(EstimationSample& s, unsigned threads) {
  Eigen::Map<Eigen::MatrixXd> y(s.y.data(), s.y.rows(), 1);
  demean_in_place(y, s.group_offsets, threads);
  demean_in_place(s.x, s.group_offsets, threads);
  demean_in_place(s.w, s.group_offsets, threads);
  demean_in_place(s.z, s.group_offsets, threads);
  s.demeaned = true;
}

}  // namespace peeriv
