#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "peeriv/errors.hpp"
#include "peeriv/panel.hpp"
#include "peeriv/panel_io.hpp"
#include "peeriv/simulator.hpp"

using namespace peeriv;

namespace {

const char* kHeader = "match_id,player_id,team_id,party_id,match_start,match_end,used_toxic,result\n";

LoadedPanel load(const std::string& text, ColumnSchema schema = {}) {
  std::istringstream in(text);
  return load_match_rows(in, schema);
}

template <class E>
std::string error_of(const std::string& text) {
  try {
    load(text);
  } catch (const E& e) {
    return e.what();
  }
  return "<no error>";
}

}  // namespace

TEST(PanelIngest, MinimalTwoVersusTwo) {
  const auto p = load(std::string(kHeader) +
                      "m1,a,0,,100,200,1,win\n"
                      "m1,b,0,,100,200,0,win\n"
                      "m1,c,1,,100,200,0,loss\n"
                      "m1,d,1,,100,200,1,loss\n")
                     .panel;
  EXPECT_EQ(p.num_rows(), 4u);
  EXPECT_EQ(p.num_matches(), 1u);
  EXPECT_EQ(p.num_players(), 4u);
  EXPECT_EQ(p.match_members(0).size(), 4u);
  EXPECT_EQ(p.match_time(0), 100);
}

TEST(PanelIngest, UnequalTeamsNameTheMatch) {
  const std::string msg = error_of<ValidationError>(std::string(kHeader) +
                                                    "bad7,a,0,,100,200,0,win\n"
                                                    "bad7,b,0,,100,200,0,win\n"
                                                    "bad7,c,0,,100,200,0,win\n"
                                                    "bad7,d,1,,100,200,0,loss\n");
  EXPECT_NE(msg.find("bad7"), std::string::npos) << msg;
}

TEST(PanelIngest, DuplicatePairRejected) {
  const std::string msg = error_of<ValidationError>(std::string(kHeader) +
                                                    "m1,a,0,,100,200,0,win\n"
                                                    "m1,a,0,,100,200,0,win\n"
                                                    "m1,c,1,,100,200,0,loss\n"
                                                    "m1,d,1,,100,200,0,loss\n");
  EXPECT_NE(msg.find("m1"), std::string::npos) << msg;
}

TEST(PanelIngest, MissingColumnIsSchemaError) {
  const std::string msg = error_of<SchemaError>("match_id,player_id,team_id,match_start,match_end,result\n"
                                                "m1,a,0,100,200,win\n");
  EXPECT_NE(msg.find("used_toxic"), std::string::npos) << msg;
}

TEST(PanelIngest, ResultsMustBeConsistent) {
  EXPECT_NE(error_of<ValidationError>(std::string(kHeader) +
                                      "m1,a,0,,100,200,0,win\n"
                                      "m1,c,1,,100,200,0,win\n"),
            "<no error>");
  EXPECT_NE(error_of<ValidationError>(std::string(kHeader) +
                                      "m1,a,0,,100,200,0,draw\n"
                                      "m1,c,1,,100,200,0,loss\n"),
            "<no error>");
  // Both teams drawing is valid.
  EXPECT_NO_THROW(load(std::string(kHeader) +
                       "m1,a,0,,100,200,0,draw\n"
                       "m1,c,1,,100,200,0,draw\n"));
}

TEST(PanelIngest, PartyAcrossTeamsRejected) {
  EXPECT_NE(error_of<ValidationError>(std::string(kHeader) +
                                      "m1,a,0,P,100,200,0,win\n"
                                      "m1,b,0,,100,200,0,win\n"
                                      "m1,c,1,P,100,200,0,loss\n"
                                      "m1,d,1,,100,200,0,loss\n"),
            "<no error>");
}

TEST(PanelIngest, EndBeforeStartRejected) {
  EXPECT_NE(error_of<ValidationError>(std::string(kHeader) +
                                      "m1,a,0,,300,200,0,win\n"
                                      "m1,c,1,,100,200,0,loss\n"),
            "<no error>");
}

TEST(PanelIngest, ThreeTeamLabelsRejected) {
  EXPECT_NE(error_of<ValidationError>(std::string(kHeader) +
                                      "m1,a,0,,100,200,0,win\n"
                                      "m1,b,1,,100,200,0,loss\n"
                                      "m1,c,2,,100,200,0,loss\n"),
            "<no error>");
}

TEST(PanelIngest, OptionalPartyColumnAndCustomSchema) {
  ColumnSchema schema;
  schema.match_id = "game";
  schema.delimiter = ';';
  const auto p = load(
                     "game;player_id;team_id;match_start;match_end;used_toxic;result\n"
                     "g;a;x;0;10;true;win\n"
                     "g;b;y;0;10;false;loss\n",
                     schema)
                     .panel;
  EXPECT_FALSE(p.has_party_column());
  EXPECT_EQ(p.num_rows(), 2u);
  schema.require_party = true;
  EXPECT_THROW(load("game;player_id;team_id;match_start;match_end;used_toxic;result\n", schema), SchemaError);
}

TEST(PanelIngest, RowsOrderedByPlayerThenStart) {
  const auto p = load(std::string(kHeader) +
                      "m2,b,0,,500,600,0,win\n"
                      "m2,a,1,,500,600,0,loss\n"
                      "m1,a,0,,100,200,0,win\n"
                      "m1,b,1,,100,200,0,loss\n")
                     .panel;
  ASSERT_EQ(p.num_rows(), 4u);
  EXPECT_EQ(p.player_id(p.row(0).player), "a");
  EXPECT_EQ(p.match_id(p.row(0).match), "m1");
  EXPECT_EQ(p.match_id(p.row(1).match), "m2");
  EXPECT_EQ(p.player_id(p.row(2).player), "b");
  const auto [first, last] = p.player_range(*p.find_player("b"));
  EXPECT_EQ(first, 2u);
  EXPECT_EQ(last, 4u);
  EXPECT_EQ(p.find_row(*p.find_match("m2"), *p.find_player("a")), 1u);
}

TEST(PanelIngest, ShuffledInputGivesIdenticalPanel) {
  const MatchPanel p = oracle::random_panel(3);
  std::vector<PlayerMatchRow> raw;
  for (std::size_t i = 0; i < p.num_rows(); ++i) raw.push_back(p.to_raw(i));
  std::mt19937_64 rng(11);
  std::shuffle(raw.begin(), raw.end(), rng);
  const MatchPanel q = MatchPanel::from_rows(raw);
  ASSERT_EQ(q.num_rows(), p.num_rows());
  for (std::size_t i = 0; i < p.num_rows(); ++i) {
    const auto a = p.to_raw(i), b = q.to_raw(i);
    EXPECT_EQ(a.match_id, b.match_id);
    EXPECT_EQ(a.player_id, b.player_id);
    EXPECT_EQ(a.match_start, b.match_start);
  }
}

TEST(PanelIngest, SimulatorFileRoundTripsBitIdentically) {
  SimConfig cfg;
  cfg.n_players = 20;
  cfg.n_matches = 15;  // 15 matches × 4 players = 60 rows
  cfg.team_size = 2;
  cfg.mode = SimMode::kPropagationReflection;
  cfg.weight_opponents = 0.2;
  cfg.weight_teammates = 0.4;
  const SimOutput sim = simulate(cfg);
  ASSERT_EQ(sim.panel.num_rows(), 60u);
  std::ostringstream first;
  write_match_rows(sim.panel, first, sim.latent);
  std::istringstream in(first.str());
  const LoadedPanel back = load_match_rows(in);
  ASSERT_TRUE(back.latent.has_value());
  std::ostringstream second;
  write_match_rows(back.panel, second, *back.latent);
  EXPECT_EQ(first.str(), second.str());
  for (std::size_t i = 0; i < sim.latent.size(); ++i) EXPECT_EQ(sim.latent[i], (*back.latent)[i]);
}

TEST(PanelIngest, ByteOrderMarkAndCrLfAccepted) {
  const auto p = load("\xEF\xBB\xBF" + std::string("match_id,player_id,team_id,party_id,match_start,match_end,used_toxic,result\r\n") +
                      "m1,a,0,,100,200,1,win\r\n"
                      "m1,b,1,,100,200,0,loss\r\n")
                     .panel;
  EXPECT_EQ(p.num_rows(), 2u);
  EXPECT_TRUE(p.row(0).toxic);
}

TEST(TimeToNextMatch, ArithmeticAndBoundaries) {
  // a: ends 10:00, next starts 12:30. b: ends, returns exactly 24 h later.
  const std::int64_t ten = 10 * 3600, half_past_twelve = 12 * 3600 + 1800;
  std::vector<PlayerMatchRow> rows;
  auto add = [&](std::string m, std::string p, std::string t, std::int64_t s, std::int64_t e, MatchResult r) {
    PlayerMatchRow row;
    row.match_id = std::move(m);
    row.player_id = std::move(p);
    row.team_id = std::move(t);
    row.match_start = s;
    row.match_end = e;
    row.result = r;
    rows.push_back(row);
  };
  add("m1", "a", "0", ten - 1800, ten, MatchResult::kWin);
  add("m1", "x", "1", ten - 1800, ten, MatchResult::kLoss);
  add("m2", "a", "0", half_past_twelve, half_past_twelve + 600, MatchResult::kWin);
  add("m2", "b", "1", half_past_twelve, half_past_twelve + 600, MatchResult::kLoss);
  add("m3", "b", "0", half_past_twelve + 600 + 24 * 3600, half_past_twelve + 600 + 25 * 3600, MatchResult::kWin);
  add("m3", "y", "1", half_past_twelve + 600 + 24 * 3600, half_past_twelve + 600 + 25 * 3600, MatchResult::kLoss);
  const MatchPanel p = MatchPanel::from_rows(rows);
  const auto y = derive_time_to_next_match(p);
  const auto a = *p.find_player("a"), b = *p.find_player("b");
  EXPECT_DOUBLE_EQ(y[*p.find_row(*p.find_match("m1"), a)], 2.5);
  EXPECT_TRUE(std::isnan(y[*p.find_row(*p.find_match("m2"), a)]));
  EXPECT_DOUBLE_EQ(y[*p.find_row(*p.find_match("m2"), b)], 24.0);
  EXPECT_TRUE(std::isnan(y[*p.find_row(*p.find_match("m3"), b)]));
}

TEST(TimeToNextMatch, ExactlyOneMissingPerPlayer) {
  const MatchPanel p = oracle::random_panel(5, {.players = 10, .matches = 30});
  const auto y = derive_time_to_next_match(p);
  for (std::uint32_t pl = 0; pl < p.num_players(); ++pl) {
    const auto [f, l] = p.player_range(pl);
    std::size_t missing = 0;
    for (std::size_t r = f; r < l; ++r) {
      missing += std::isnan(y[r]) ? 1 : 0;
      if (!std::isnan(y[r])) EXPECT_GE(y[r], 0.0);
    }
    EXPECT_EQ(missing, 1u);
    EXPECT_TRUE(std::isnan(y[l - 1]));
  }
}

TEST(TimeToNextMatch, OverlapIsDataErrorNamingPlayer) {
  std::istringstream in(std::string(kHeader) +
                        "m1,zed,0,,100,500,0,win\n"
                        "m1,b,1,,100,500,0,loss\n"
                        "m2,zed,0,,400,900,0,win\n"
                        "m2,c,1,,400,900,0,loss\n");
  const auto p = load_match_rows(in).panel;
  try {
    derive_time_to_next_match(p);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("zed"), std::string::npos);
  }
}
