#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "peeriv/design.hpp"
#include "peeriv/errors.hpp"
#include "peeriv/simulator.hpp"

using namespace peeriv;

namespace {

// j plus two teammates (one toxic) against three opponents (two toxic).
MatchPanel single_match(bool j_wins, bool with_party = true) {
  std::vector<PlayerMatchRow> rows;
  auto add = [&](const char* p, const char* team, bool toxic, bool win, const char* party = nullptr) {
    PlayerMatchRow r;
    r.match_id = "m";
    r.player_id = p;
    r.team_id = team;
    if (party) r.party_id = party;
    r.match_start = 0;
    r.match_end = 60;
    r.used_toxic = toxic;
    r.result = win ? MatchResult::kWin : MatchResult::kLoss;
    rows.push_back(r);
  };
  add("j", "A", false, j_wins, "P");
  add("t1", "A", true, j_wins, "P");
  add("t2", "A", false, j_wins);
  add("o1", "B", true, !j_wins);
  add("o2", "B", true, !j_wins);
  add("o3", "B", false, !j_wins);
  return MatchPanel::from_rows(rows, with_party);
}

std::size_t design_row_of(const MatchPanel& p, const DesignPanel& d, const char* player) {
  const auto pl = *p.find_player(player);
  for (std::size_t t = 0; t < d.rows(); ++t) {
    if (p.row(d.panel_row[t]).player == pl) return t;
  }
  return static_cast<std::size_t>(-1);
}

}  // namespace

TEST(ExposureDesign, CountsOnLoss) {
  const MatchPanel p = single_match(false);
  const DesignPanel d = build_exposure_design(p, {});
  ASSERT_EQ(d.x_names, (std::vector<std::string>{"opponents", "teammates", "opponents_x_win", "teammates_x_win"}));
  ASSERT_EQ(d.w_names, (std::vector<std::string>{"win"}));
  const auto t = static_cast<Eigen::Index>(design_row_of(p, d, "j"));
  EXPECT_EQ(d.x.row(t), Eigen::RowVector4d(2, 1, 0, 0));
  EXPECT_EQ(d.w(t, 0), 0.0);
}

TEST(ExposureDesign, CountsOnWin) {
  const MatchPanel p = single_match(true);
  const DesignPanel d = build_exposure_design(p, {});
  const auto t = static_cast<Eigen::Index>(design_row_of(p, d, "j"));
  EXPECT_EQ(d.x.row(t), Eigen::RowVector4d(2, 1, 2, 1));
  EXPECT_EQ(d.w(t, 0), 1.0);
}

TEST(ExposureDesign, PartySplitContextsAndCovariate) {
  const MatchPanel p = single_match(false);
  DesignOptions o;
  o.scheme = ContextScheme::kPartySplit;
  const DesignPanel d = build_exposure_design(p, o);
  EXPECT_EQ(d.context_labels, (std::vector<std::string>{"different_party", "same_party"}));
  EXPECT_EQ(d.w_names, (std::vector<std::string>{"win", "belongs_to_party"}));
  const auto j = static_cast<Eigen::Index>(design_row_of(p, d, "j"));
  EXPECT_EQ(d.x(j, 0), 0.0);  // t2 is not toxic
  EXPECT_EQ(d.x(j, 1), 1.0);  // t1 shares j's party
  EXPECT_EQ(d.w(j, 1), 1.0);
  const auto t2 = static_cast<Eigen::Index>(design_row_of(p, d, "t2"));
  EXPECT_EQ(d.x(t2, 0), 1.0);  // solo player: every teammate is a different party
  EXPECT_EQ(d.x(t2, 1), 0.0);
  EXPECT_EQ(d.w(t2, 1), 0.0);
}

TEST(ExposureDesign, PartySplitWithoutPartyColumnFails) {
  const MatchPanel p = single_match(false, false);
  DesignOptions o;
  o.scheme = ContextScheme::kPartySplit;
  EXPECT_THROW(build_exposure_design(p, o), SchemaError);
}

TEST(ExposureDesign, DrawPolicies) {
  const MatchPanel p = oracle::random_panel(9, {.players = 12, .matches = 30, .draw_probability = 0.3});
  std::size_t draws = 0;
  for (const auto& r : p.rows()) draws += r.result == MatchResult::kDraw ? 1 : 0;
  ASSERT_GT(draws, 0u);
  const DesignPanel ex = build_exposure_design(p, {});
  EXPECT_EQ(ex.draws_excluded, draws);
  EXPECT_EQ(ex.rows() + draws, p.num_rows());
  DesignOptions o;
  o.draws = DrawPolicy::kAsLoss;
  const DesignPanel as_loss = build_exposure_design(p, o);
  EXPECT_EQ(as_loss.rows(), p.num_rows());
  for (std::size_t t = 0; t < as_loss.rows(); ++t) {
    if (p.row(as_loss.panel_row[t]).result == MatchResult::kDraw) {
      EXPECT_EQ(as_loss.w(static_cast<Eigen::Index>(t), 0), 0.0);
    }
  }
}

TEST(ExposureDesign, InvariantsOnRandomPanels) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MatchPanel p = oracle::random_panel(seed, {.players = 14, .matches = 25, .team_size = 3});
    const DesignPanel d = build_exposure_design(p, {});
    const Eigen::Index k = static_cast<Eigen::Index>(d.num_contexts());
    for (Eigen::Index t = 0; t < d.x.rows(); ++t) {
      for (Eigen::Index c = 0; c < k; ++c) {
        EXPECT_EQ(d.x(t, k + c), d.x(t, c) * d.w(t, 0));
        EXPECT_GE(d.x(t, c), 0.0);
        EXPECT_EQ(d.x(t, c), std::floor(d.x(t, c)));
      }
      EXPECT_LE(d.x.row(t).head(k).sum(), 5.0);
      EXPECT_EQ(d.y_toxic[t], p.row(d.panel_row[static_cast<std::size_t>(t)]).toxic ? 1.0 : 0.0);
    }
  }
}

TEST(ExposureDesign, ThreadCountDoesNotChangeDesign) {
  const MatchPanel p = oracle::random_panel(4, {.players = 30, .matches = 80});
  DesignOptions one, four;
  four.threads = 4;
  const DesignPanel a = build_exposure_design(p, one), b = build_exposure_design(p, four);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.w, b.w);
}

TEST(ExposureDesign, MissingnessScalesCounts) {
  SimConfig cfg;
  cfg.n_players = 4000;
  cfg.n_matches = 8000;
  cfg.toxicity_base_rate = 0.3;
  const SimOutput sim = simulate(cfg);
  DesignOptions full, masked;
  masked.exposure.missing_rate = 0.35;
  masked.exposure.seed = 17;
  const DesignPanel a = build_exposure_design(sim.panel, full);
  const DesignPanel b = build_exposure_design(sim.panel, masked);
  const double ratio = b.x.leftCols(2).sum() / a.x.leftCols(2).sum();
  EXPECT_NEAR(ratio, 0.65, 0.01);
  EXPECT_TRUE(((b.x - a.x).array() <= 0.0).all());
}

TEST(ExposureModel, ValidationAndDeterminism) {
  ExposureModel bad;
  bad.missing_rate = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  ExposureModel m{0.2, 0.5, 0.9, 3};
  int hits = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string id = "p" + std::to_string(i);
    const bool a = m.exposed("m1", id, "q", false);
    EXPECT_EQ(a, m.exposed("m1", id, "q", false));
    hits += a ? 1 : 0;
  }
  EXPECT_NEAR(hits / 1000.0, 0.8 * 0.5, 0.05);
}

TEST(DescribeExposure, NoToxicRowsGiveZeros) {
  auto p = oracle::random_panel(1, {.toxic_probability = 0.0});
  const ExposureTable t = describe_exposure(p, {});
  ASSERT_EQ(t.cells.size(), 4u);
  for (const auto& c : t.cells) {
    EXPECT_EQ(c.probability, 0.0);
    EXPECT_EQ(c.exposed, 0u);
  }
  EXPECT_TRUE(t.below_one_tenth_percent);
  EXPECT_TRUE(t.warnings.empty());
}

TEST(DescribeExposure, MatchesBruteForceRecount) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const MatchPanel p = oracle::random_panel(seed, {.players = 10, .matches = 20, .team_size = 2});
    ASSERT_LE(p.num_rows(), 100u);
    for (ContextScheme scheme : {ContextScheme::kOppTeam, ContextScheme::kPartySplit, ContextScheme::kPooled}) {
      DesignOptions o;
      o.scheme = scheme;
      const ExposureTable t = describe_exposure(p, o);
      const std::size_t k = context_names(scheme).size();
      ASSERT_EQ(t.cells.size(), 2 * k);
      for (std::size_t c = 0; c < k; ++c) {
        for (int w = 0; w < 2; ++w) {
          const MatchResult want = w == 0 ? MatchResult::kLoss : MatchResult::kWin;
          std::size_t rows = 0, exposed = 0;
          for (std::size_t i = 0; i < p.num_rows(); ++i) {
            const auto& f = p.row(i);
            if (f.result != want) continue;
            ++rows;
            bool any = false;
            for (std::size_t r = 0; r < p.num_rows(); ++r) {
              const auto& q = p.row(r);
              if (r == i || q.match != f.match || !q.toxic) continue;
              if (peer_context(scheme, f, q) == static_cast<int>(c)) any = true;
            }
            exposed += any ? 1 : 0;
          }
          const auto& cell = t.cells[2 * c + static_cast<std::size_t>(w)];
          EXPECT_EQ(cell.outcome, want);
          EXPECT_EQ(cell.rows, rows);
          EXPECT_EQ(cell.exposed, exposed);
          EXPECT_DOUBLE_EQ(cell.probability, rows ? static_cast<double>(exposed) / static_cast<double>(rows) : 0.0);
          EXPECT_GE(cell.probability, 0.0);
          EXPECT_LE(cell.probability, 1.0);
        }
      }
    }
  }
}

TEST(DescribeExposure, HighProbabilitiesWarn) {
  const MatchPanel p = oracle::random_panel(2, {.toxic_probability = 0.5});
  const ExposureTable t = describe_exposure(p, {});
  EXPECT_FALSE(t.below_one_tenth_percent);
  EXPECT_FALSE(t.warnings.empty());
}

TEST(DescribeExposure, ConfiguredTeammateOpponentRatioRecovered) {
  SimConfig cfg;
  cfg.n_players = 20000;
  cfg.n_matches = 20000;
  cfg.sigma_alpha_x = 0.0;
  cfg.toxicity_base_rate = 0.05;
  cfg.exposure.opponent_reach = 0.25;
  cfg.exposure.teammate_reach = 1.0;
  const SimOutput sim = simulate(cfg);
  ASSERT_TRUE(sim.truth.exposure_ratio.has_value());
  EXPECT_NEAR(*sim.truth.exposure_ratio, 3.0, 0.1);
  DesignOptions o;
  o.exposure = cfg.exposure;
  const ExposureRatio r = exposure_ratio(sim.panel, o, 1, 0);
  EXPECT_GT(r.std_error, 0.0);
  EXPECT_LT(std::abs(r.ratio - *sim.truth.exposure_ratio), 3.0 * r.std_error)
      << "ratio " << r.ratio << " se " << r.std_error;
}
