#pragma once

// Independent reference implementations used by unit and acceptance tests.
// Each one follows the textbook definition directly and is deliberately slow.

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "peeriv/design.hpp"
#include "peeriv/panel.hpp"

namespace peeriv::oracle {

struct RandomPanelSpec {
  std::size_t players = 12;
  std::size_t matches = 20;
  std::size_t team_size = 2;
  double party_probability = 0.3;
  double draw_probability = 0.0;
  double toxic_probability = 0.4;
  bool tied_times = true;  // allow several matches to share a start time
};

/// Random but valid panel: random composition, shuffled match ids, random
/// (possibly tied) start times with no overlaps per player.
inline MatchPanel random_panel(std::uint64_t seed, const RandomPanelSpec& s = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t per = 2 * s.team_size;
  std::vector<std::size_t> pool(s.players);
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  std::vector<std::size_t> id_perm(s.matches);
  for (std::size_t i = 0; i < id_perm.size(); ++i) id_perm[i] = i;
  std::shuffle(id_perm.begin(), id_perm.end(), rng);

  PanelBuilder b(true);
  std::int64_t t = 1'000'000;
  bool can_tie = false;  // previous match used pool[0, per)
  for (std::size_t m = 0; m < s.matches; ++m) {
    std::size_t first = 0;
    if (s.tied_times && can_tie && s.players >= 2 * per && u(rng) < 0.3) {
      // Same start time as the previous match with a disjoint player set.
      first = per;
      can_tie = false;
    } else {
      t += 3600 + static_cast<std::int64_t>(u(rng) * 7200);
      std::shuffle(pool.begin(), pool.end(), rng);
      can_tie = true;
    }
    const std::string mid = "g" + std::to_string(1000 + id_perm[m]);
    const bool draw = u(rng) < s.draw_probability;
    const bool side0_wins = u(rng) < 0.5;
    for (std::size_t k = 0; k < per; ++k) {
      const std::size_t side = k < s.team_size ? 0 : 1;
      std::string party;
      if (s.team_size >= 2 && (k % s.team_size) < 2 && u(rng) < s.party_probability) {
        party = mid + "/" + std::to_string(side);
      }
      const MatchResult res = draw ? MatchResult::kDraw
                                   : (((side == 0) == side0_wins) ? MatchResult::kWin : MatchResult::kLoss);
      b.add(mid, "u" + std::to_string(100 + pool[first + k]), side == 0 ? "red" : "blue", party, t, t + 1800,
            u(rng) < s.toxic_probability, res);
    }
  }
  return std::move(b).build();
}

/// O(n²) instrument: for design row (match i, player j) and each co-player k
/// in context c, average k's values over matches strictly before i (by
/// (match_time, match index)) in which j did not play; sum over k.
inline Eigen::MatrixXd brute_force_instruments(const MatchPanel& panel, const DesignPanel& design,
                                               std::span<const double> values = {}) {
  const std::size_t n_ctx = design.num_contexts();
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(design.rows()),
                                            static_cast<Eigen::Index>(design.x_names.size()));
  auto value_of = [&](std::size_t row) {
    return values.empty() ? (panel.row(row).toxic ? 1.0 : 0.0) : values[row];
  };
  auto plays_in = [&](std::uint32_t player, std::uint32_t match) {
    for (std::size_t r = 0; r < panel.num_rows(); ++r) {
      if (panel.row(r).match == match && panel.row(r).player == player) return true;
    }
    return false;
  };
  auto earlier = [&](std::uint32_t a, std::uint32_t b) {
    const auto ta = panel.match_time(a), tb = panel.match_time(b);
    return ta < tb || (ta == tb && a < b);
  };
  for (std::size_t t = 0; t < design.rows(); ++t) {
    const auto& focal = panel.row(design.panel_row[t]);
    std::vector<double> acc(n_ctx, 0.0);
    for (auto k : panel.match_members(focal.match)) {
      const auto& peer = panel.row(k);
      if (peer.player == focal.player) continue;
      const int c = peer_context(design.options.scheme, focal, peer);
      if (c < 0) continue;
      double sum = 0.0;
      std::size_t count = 0;
      // Scan k's rows in panel order, then order-independent sum for 0/1.
      std::vector<std::pair<std::uint32_t, double>> prior;
      for (std::size_t r = 0; r < panel.num_rows(); ++r) {
        const auto& pr = panel.row(r);
        if (pr.player != peer.player) continue;
        if (!earlier(pr.match, focal.match)) continue;
        if (plays_in(focal.player, pr.match)) continue;
        prior.emplace_back(pr.match, value_of(r));
      }
      std::sort(prior.begin(), prior.end(),
                [&](const auto& a, const auto& b) { return earlier(a.first, b.first); });
      for (const auto& [m, v] : prior) {
        sum += v;
        ++count;
      }
      if (count > 0) acc[static_cast<std::size_t>(c)] += sum / static_cast<double>(count);
    }
    const double win = focal.result == MatchResult::kWin ? 1.0 : 0.0;
    for (std::size_t c = 0; c < n_ctx; ++c) {
      z(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = acc[c];
      if (design.options.interact_win) {
        z(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(n_ctx + c)) = acc[c] * win;
      }
    }
  }
  return z;
}

/// Player dummy matrix for contiguous groups.
inline Eigen::MatrixXd group_dummies(std::span<const std::size_t> offsets) {
  const std::size_t g = offsets.size() - 1;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(offsets.back()), static_cast<Eigen::Index>(g));
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t r = offsets[i]; r < offsets[i + 1]; ++r) d(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = 1.0;
  }
  return d;
}

/// Least squares by complete orthogonal decomposition of the design itself.
inline Eigen::VectorXd lstsq(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return x.completeOrthogonalDecomposition().solve(y);
}

inline Eigen::MatrixXd lstsq_matrix(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  return x.completeOrthogonalDecomposition().solve(y);
}

/// Textbook 2SLS: project X on [Z W], then regress y on [X̂ W].
inline Eigen::VectorXd textbook_tsls(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                                     const Eigen::MatrixXd& z) {
  Eigen::MatrixXd a(z.rows(), z.cols() + w.cols());
  a << z, w;
  const Eigen::MatrixXd xhat = a * lstsq_matrix(a, x);
  Eigen::MatrixXd d(x.rows(), x.cols() + w.cols());
  d << xhat, w;
  return lstsq(d, y);
}

}  // namespace peeriv::oracle
