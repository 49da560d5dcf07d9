#include "peeriv/history.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <unordered_map>

#include "peeriv/errors.hpp"
#include "peeriv/parallel.hpp"

namespace peeriv {

namespace {

struct Key {
  std::int64_t time;
  std::uint32_t match;
};

bool key_less(const HistoryEntry& e, const Key& k) {
  return e.time != k.time ? e.time < k.time : e.match < k.match;
}

}  // namespace

HistoryIndex HistoryIndex::build(const MatchPanel& panel, std::span<const double> values) {
  if (!values.empty() && values.size() != panel.num_rows()) {
    throw UsageError("value vector length does not match panel rows");
  }
  HistoryIndex idx;
  const std::size_t n_players = panel.num_players();
  idx.match_time_.assign(panel.match_times().begin(), panel.match_times().end());
  idx.offsets_.assign(n_players + 1, 0);
  idx.entries_.reserve(panel.num_rows());
  idx.prefix_.reserve(panel.num_rows() + n_players);
  for (std::uint32_t p = 0; p < n_players; ++p) {
    auto [first, last] = panel.player_range(p);
    const std::size_t begin = idx.entries_.size();
    for (std::size_t i = first; i < last; ++i) {
      const auto& r = panel.row(i);
      const double v = values.empty() ? (r.toxic ? 1.0 : 0.0) : values[i];
      if (v != std::floor(v) || std::abs(v) > 1e6) idx.integral_ = false;
      idx.entries_.push_back({panel.match_time(r.match), r.match, static_cast<std::uint32_t>(i), v});
    }
    std::sort(idx.entries_.begin() + static_cast<std::ptrdiff_t>(begin), idx.entries_.end(),
              [](const HistoryEntry& a, const HistoryEntry& b) {
                return a.time != b.time ? a.time < b.time : a.match < b.match;
              });
    double run = 0.0;
    idx.prefix_.push_back(run);
    for (std::size_t e = begin; e < idx.entries_.size(); ++e) {
      run += idx.entries_[e].value;
      idx.prefix_.push_back(run);
    }
    idx.offsets_[p + 1] = idx.entries_.size();
  }
  return idx;
}

bool HistoryIndex::participated(std::uint32_t player, std::uint32_t match) const {
  auto h = history(player);
  const Key key{match_time_[match], match};
  auto it = std::lower_bound(h.begin(), h.end(), key, key_less);
  return it != h.end() && it->match == match;
}

std::size_t HistoryIndex::count_before(std::uint32_t player, std::uint32_t match) const {
  auto h = history(player);
  const Key key{match_time_[match], match};
  return static_cast<std::size_t>(std::lower_bound(h.begin(), h.end(), key, key_less) - h.begin());
}

std::optional<double> leave_one_out_rate(const HistoryIndex& index, std::uint32_t peer, std::uint32_t focal,
                                         std::uint32_t match) {
  if (peer == focal) throw UsageError("leave_one_out_rate: peer and focal player must differ");
  const auto h = index.history(peer);
  const std::size_t before = index.count_before(peer, match);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t e = 0; e < before; ++e) {
    if (index.participated(focal, h[e].match)) continue;
    sum += h[e].value;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

std::uint32_t InstrumentSet::total_contributing(std::size_t row) const {
  std::uint32_t t = 0;
  for (std::size_t c = 0; c < contexts; ++c) t += contributing(row, c);
  return t;
}

InstrumentSet build_instruments(const MatchPanel& panel, const HistoryIndex& index, const DesignPanel& design) {
  if (index.num_players() != panel.num_players()) {
    throw UsageError("history index was built from a different panel");
  }
  const std::size_t n = design.rows();
  const std::size_t n_ctx = design.num_contexts();
  const ContextScheme scheme = design.options.scheme;
  const bool interact = design.options.interact_win;

  InstrumentSet out;
  out.contexts = n_ctx;
  for (const auto& name : design.x_names) out.z_names.push_back("z_" + name);
  out.z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(design.x_names.size()));
  out.contributing_peers.assign(n * n_ctx, 0);

  std::vector<std::int64_t> design_of_row(panel.num_rows(), -1);
  for (std::size_t t = 0; t < n; ++t) design_of_row[design.panel_row[t]] = static_cast<std::int64_t>(t);

  // Walk each focal player's history once. `shared` accumulates, per
  // co-player, the matches already played together (strictly earlier in
  // history order), which are exactly the ones leave-one-out must exclude.
  parallel_for_chunks(panel.num_players(), design.options.threads, [&](std::size_t pb, std::size_t pe) {
    struct Shared {
      std::uint32_t count = 0;
      double sum = 0.0;
    };
    std::unordered_map<std::uint32_t, Shared> shared;
    std::vector<double> z(n_ctx);
    for (std::size_t p = pb; p < pe; ++p) {
      const auto focal_player = static_cast<std::uint32_t>(p);
      shared.clear();
      for (const auto& entry : index.history(focal_player)) {
        const std::uint32_t match = entry.match;
        const auto& focal = panel.row(entry.row);
        const std::int64_t t = design_of_row[entry.row];
        if (t >= 0) {
          std::fill(z.begin(), z.end(), 0.0);
          std::uint16_t* contrib = &out.contributing_peers[static_cast<std::size_t>(t) * n_ctx];
          for (auto k : panel.match_members(match)) {
            if (k == entry.row) continue;
            const auto& peer = panel.row(k);
            const int c = peer_context(scheme, focal, peer);
            if (c < 0) continue;
            const std::size_t before = index.count_before(peer.player, match);
            std::uint32_t excluded = 0;
            double excluded_sum = 0.0;
            if (auto it = shared.find(peer.player); it != shared.end()) {
              excluded = it->second.count;
              excluded_sum = it->second.sum;
            }
            const std::size_t usable = before - excluded;
            if (usable == 0) continue;
            double usable_sum = 0.0;
            if (excluded == 0 || index.integral_values()) {
              usable_sum = index.prefix_sum(peer.player, before) - excluded_sum;
            } else {
              // Prefix minus shared sums is exact only for integer values;
              // otherwise add the usable entries directly so the result does
              // not depend on the excluded values through rounding.
              const auto h = index.history(peer.player);
              for (std::size_t e = 0; e < before; ++e) {
                if (!index.participated(focal_player, h[e].match)) usable_sum += h[e].value;
              }
            }
            const double rate = usable_sum / static_cast<double>(usable);
            z[static_cast<std::size_t>(c)] += rate;
            ++contrib[c];
          }
          const double win = focal.result == MatchResult::kWin ? 1.0 : 0.0;
          const auto ti = static_cast<Eigen::Index>(t);
          for (std::size_t c = 0; c < n_ctx; ++c) {
            out.z(ti, static_cast<Eigen::Index>(c)) = z[c];
            if (interact) out.z(ti, static_cast<Eigen::Index>(n_ctx + c)) = z[c] * win;
          }
        }
        for (auto k : panel.match_members(match)) {
          if (k == entry.row) continue;
          const auto& peer = panel.row(k);
          const auto h = index.history(peer.player);
          // The peer's own value in this match, read back from its history.
          const auto pos = index.count_before(peer.player, match);
          auto& s = shared[peer.player];
          ++s.count;
          s.sum += h[pos].value;
        }
      }
    }
  });
  return out;
}

void write_instruments(const MatchPanel& panel, const DesignPanel& design, const InstrumentSet& inst,
                       std::ostream& out, char delimiter) {
  const char d = delimiter;
  out << "match_id" << d << "player_id";
  for (const auto& name : inst.z_names) out << d << name;
  for (const auto& c : design.context_labels) out << d << "contributing_" << c;
  out << '\n';
  char num[64];
  for (std::size_t t = 0; t < design.rows(); ++t) {
    const auto& r = panel.row(design.panel_row[t]);
    out << panel.match_id(r.match) << d << panel.player_id(r.player);
    for (Eigen::Index c = 0; c < inst.z.cols(); ++c) {
      std::snprintf(num, sizeof num, "%.17g", inst.z(static_cast<Eigen::Index>(t), c));
      out << d << num;
    }
    for (std::size_t c = 0; c < inst.contexts; ++c) out << d << inst.contributing(t, c);
    out << '\n';
  }
  if (!out) throw IoError("write failed while emitting instruments");
}

}  // namespace peeriv
