// peeriv command-line front end: simulate | describe | estimate | report.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "peeriv/design.hpp"
#include "peeriv/errors.hpp"
#include "peeriv/history.hpp"
#include "peeriv/panel_io.hpp"
#include "peeriv/parallel.hpp"
#include "peeriv/pipeline.hpp"
#include "peeriv/report.hpp"
#include "peeriv/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace peeriv;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitParse = 2;
constexpr int kExitUnexpected = 1;
constexpr int kExitConfig = 3;

// CLI11 only reads config files at the root app. Keys outside any [section]
// are filed under the subcommand named on the command line so a plain
// `key = value` file configures that subcommand.
class SubcommandConfig : public CLI::ConfigTOML {
 public:
  explicit SubcommandConfig(std::string section) : section_(std::move(section)) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> items = CLI::ConfigTOML::from_config(input);
    if (section_.empty()) return items;
    for (auto& item : items) {
      if (item.parents.empty()) item.parents.push_back(section_);
    }
    return items;
  }

 private:
  std::string section_;
};

std::string subcommand_in(int argc, char** argv, const std::vector<std::string>& names) {
  for (int i = 1; i < argc; ++i) {
    if (std::find(names.begin(), names.end(), argv[i]) != names.end()) return argv[i];
  }
  return {};
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

void require_input(const std::string& path) {
  if (path.empty()) throw UsageError("an input path is required");
  if (!fs::is_regular_file(path)) throw IoError("input file '" + path + "' does not exist");
}

void require_output(const std::string& path) {
  if (path.empty()) return;
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw IoError("output directory '" + parent.string() + "' does not exist");
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Effective value of every option of a subcommand, for the manifest.
ordered_json config_echo(const CLI::App& app) {
  ordered_json j = ordered_json::object();
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "config" || name == "manifest") continue;
    const auto& res = opt->results();
    if (opt->count() == 0) {
      j[name] = opt->get_default_str();
    } else if (res.size() == 1) {
      j[name] = res.front();
    } else {
      j[name] = res;
    }
  }
  return j;
}

void write_manifest(const std::string& path, const CLI::App& app, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
  if (path.empty()) return;
  ordered_json j{{"tool", "peeriv"}, {"version", kVersion}, {"command", app.get_name()},
                 {"config", config_echo(app)}};
  auto digests = [](const std::vector<std::string>& paths) {
    ordered_json arr = ordered_json::array();
    for (const auto& p : paths) {
      if (p.empty() || p == "-") continue;
      arr.push_back({{"path", p}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
    }
    return arr;
  };
  j["inputs"] = digests(inputs);
  j["outputs"] = digests(outputs);
  j["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  write_text(path, j.dump(2) + "\n");
}

std::string default_manifest(const std::string& out) {
  return (out.empty() || out == "-") ? std::string() : out + ".manifest.json";
}

struct ExposureFlags {
  double missing_rate = 0.0;
  double opponent_reach = 1.0;
  double teammate_reach = 1.0;
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    app->add_option("--missing-rate", missing_rate, "Share of sources whose exposure is unobserved per match")
        ->capture_default_str();
    app->add_option("--opponent-reach", opponent_reach, "Probability an opponent's toxicity reaches a player")
        ->capture_default_str();
    app->add_option("--teammate-reach", teammate_reach, "Probability a teammate's toxicity reaches a player")
        ->capture_default_str();
    app->add_option("--exposure-seed", seed, "Seed of the deterministic exposure mask")->capture_default_str();
  }
  ExposureModel model() const { return {missing_rate, opponent_reach, teammate_reach, seed}; }
};

struct AnalysisFlags {
  std::string input;
  std::string scheme = "opp-team";
  std::string draws = "exclude";
  unsigned threads = 0;
  ExposureFlags exposure;

  void add(CLI::App* app) {
    app->add_option("-i,--input", input, "Player-match panel (CSV)")->required();
    app->add_option("--scheme", scheme, "Context scheme: opp-team | party-split | pooled")->capture_default_str();
    app->add_option("--draws", draws, "Draw handling: exclude | as-loss")->capture_default_str();
    app->add_option("--threads", threads, "Worker threads (0 = PEERIV_THREADS or hardware)")
        ->capture_default_str();
    exposure.add(app);
  }
};

int cmd_simulate(const CLI::App& app, SimConfig cfg, const std::string& mode, double beta, bool beta_given,
                 const std::vector<double>& beta_engagement, const std::string& out, std::string truth,
                 std::string manifest) {
  cfg.mode = parse_sim_mode(mode);
  if (beta_given) {
    cfg.beta_reflection = beta;
    if (cfg.mode == SimMode::kEngagementConfounded && beta_engagement.empty()) cfg.beta_engagement.fill(beta);
  }
  if (!beta_engagement.empty()) {
    if (beta_engagement.size() != 4) throw ConfigError("--beta-engagement takes exactly 4 values");
    std::copy(beta_engagement.begin(), beta_engagement.end(), cfg.beta_engagement.begin());
  }
  if (truth.empty()) truth = out + ".truth.json";
  if (manifest.empty()) manifest = default_manifest(out);
  require_output(out);
  require_output(truth);
  cfg.validate();

  const SimOutput sim = simulate(cfg);
  const bool with_latent = cfg.mode != SimMode::kEngagementConfounded;
  write_match_rows_file(sim.panel, out, with_latent ? std::span<const double>(sim.latent) : std::span<const double>{});
  std::ostringstream tj;
  write_truth_json(sim.truth, tj);
  write_text(truth, tj.str());
  write_manifest(manifest, app, {}, {out, truth});
  std::cerr << "simulated " << sim.panel.num_rows() << " rows, " << sim.panel.num_matches() << " matches, "
            << sim.panel.num_players() << " players\n";
  return 0;
}

DesignOptions design_options(const AnalysisFlags& a, unsigned threads) {
  DesignOptions d;
  d.scheme = parse_scheme(a.scheme);
  d.draws = parse_draw_policy(a.draws);
  d.exposure = a.exposure.model();
  d.threads = threads;
  return d;
}

int cmd_describe(const CLI::App& app, const AnalysisFlags& a, const std::string& format, const std::string& out,
                 std::string manifest) {
  require_input(a.input);
  require_output(out);
  const TableFormat fmt = parse_table_format(format);
  const unsigned threads = resolve_threads(a.threads);
  const DesignOptions d = design_options(a, threads);
  const LoadedPanel loaded = load_match_rows_file(a.input);
  const ExposureTable table = describe_exposure(loaded.panel, d);
  write_text(out, render_exposure_table(table, fmt));
  if (manifest.empty()) manifest = default_manifest(out);
  write_manifest(manifest, app, {a.input}, {out});
  return 0;
}

int cmd_estimate(const CLI::App& app, const AnalysisFlags& a, const std::string& vcov, const std::string& outcome,
                 bool continuous, bool no_interaction, const std::string& out, const std::string& table,
                 const std::string& instruments_path, std::string manifest) {
  require_input(a.input);
  require_output(out);
  require_output(table);
  require_output(instruments_path);
  PipelineOptions opts;
  opts.threads = resolve_threads(a.threads);
  opts.design = design_options(a, opts.threads);
  opts.design.interact_win = !no_interaction;
  opts.vcov = parse_vcov_mode(vcov);
  if (outcome == "both") {
    opts.outcomes = {Outcome::kTimeToNextMatch, Outcome::kUsedToxic};
  } else {
    opts.outcomes = {parse_outcome(outcome)};
  }

  const LoadedPanel loaded = load_match_rows_file(a.input);
  std::span<const double> values;
  if (continuous) {
    if (!loaded.latent) throw SchemaError("--continuous needs a 'latent' column in the input");
    values = *loaded.latent;
  }

  const DesignPanel design = build_exposure_design(loaded.panel, opts.design, values);
  const HistoryIndex index = HistoryIndex::build(loaded.panel, values);
  const InstrumentSet inst = build_instruments(loaded.panel, index, design);
  if (!instruments_path.empty()) {
    std::ostringstream s;
    write_instruments(loaded.panel, design, inst, s);
    write_text(instruments_path, s.str());
  }

  ordered_json doc{{"input", a.input},
                   {"scheme", to_string(opts.design.scheme)},
                   {"draws", to_string(opts.design.draws)},
                   {"continuous", continuous},
                   {"panel_rows", loaded.panel.num_rows()},
                   {"design_rows", design.rows()},
                   {"draws_excluded", design.draws_excluded},
                   {"outcomes", ordered_json::array()}};
  std::vector<EstimationResult> columns;
  for (Outcome o : opts.outcomes) {
    const EstimationSample sample = prepare_sample(design, inst, o, opts.threads);
    const OutcomeEstimates est = estimate_sample(sample, opts);
    doc["outcomes"].push_back({{"outcome", to_string(o)},
                               {"attrition", ordered_json::parse(render_attrition(est.attrition, TableFormat::kJson))},
                               {"ols", ordered_json::parse(result_to_json(est.ols))},
                               {"tsls", ordered_json::parse(result_to_json(est.tsls))}});
    columns.push_back(est.ols);
    columns.push_back(est.tsls);
  }
  if (!out.empty()) write_text(out, doc.dump(2) + "\n");
  if (table != "none") write_text(table, render_regression_table(columns, TableFormat::kText));
  if (manifest.empty()) manifest = default_manifest(out);
  write_manifest(manifest, app, {a.input}, {out, table == "none" ? "" : table, instruments_path});
  return 0;
}

int cmd_report(const std::string& input, const std::string& format, const std::string& method, bool effects,
               bool ranking, const std::string& out) {
  require_input(input);
  require_output(out);
  const TableFormat fmt = parse_table_format(format);
  if (method != "ols" && method != "tsls" && method != "both") {
    throw ConfigError("--method must be ols, tsls or both");
  }
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_text(input));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("'" + input + "' is not valid JSON: " + e.what());
  }
  if (!doc.contains("outcomes")) throw SchemaError("'" + input + "' has no 'outcomes' array");
  std::vector<EstimationResult> results;
  for (const auto& o : doc["outcomes"]) {
    for (const char* m : {"ols", "tsls"}) {
      if (method != "both" && method != m) continue;
      results.push_back(result_from_json(o.at(m).dump()));
    }
  }
  std::string text;
  if (!effects && !ranking) text = render_regression_table(results, fmt);
  for (const auto& r : results) {
    if (!effects && !ranking) break;
    const std::vector<MarginalEffect> me = marginal_effects(r);
    if (effects) {
      if (fmt == TableFormat::kText) text += r.method + ":" + r.outcome + "\n";
      text += render_marginal_effects(me, fmt);
    }
    if (ranking) {
      const auto objective = parse_ranking_objective(r.outcome);
      if (fmt == TableFormat::kText) text += "priority (" + r.method + ":" + r.outcome + ")\n";
      text += render_ranking(priority_ranking(me, objective), fmt);
    }
  }
  write_text(out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leave-one-out IV estimation of peer effects in match panels"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.allow_config_extras(false);
  app.fallthrough();
  app.set_config("--config", "", "Key = value configuration file for the subcommand (flags take precedence)");
  app.config_formatter(
      std::make_shared<SubcommandConfig>(subcommand_in(argc, argv, {"simulate", "describe", "estimate", "report"})));

  // simulate
  CLI::App* sim = app.add_subcommand("simulate", "Generate a synthetic panel with known ground truth");
  SimConfig cfg;
  std::string sim_mode = "engagement_confounded";
  double beta = 0.5;
  std::vector<double> beta_engagement;
  std::string sim_out, sim_truth, sim_manifest;
  ExposureFlags sim_exposure;
  sim->add_option("--mode", sim_mode, "engagement_confounded | propagation_reflection | two_player_reflection")
      ->capture_default_str();
  sim->add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
  sim->add_option("--players", cfg.n_players, "Number of players")->capture_default_str();
  sim->add_option("--matches", cfg.n_matches, "Number of matches (0 = from --matches-per-player)")
      ->capture_default_str();
  sim->add_option("--matches-per-player", cfg.matches_per_player, "Mean matches per player")->capture_default_str();
  sim->add_option("--max-matches-per-player", cfg.max_matches_per_player, "Feasibility cap per player")
      ->capture_default_str();
  sim->add_option("--team-size", cfg.team_size, "Players per team")->capture_default_str();
  sim->add_option("--party-probability", cfg.party_probability, "Chance a free slot starts a party")
      ->capture_default_str();
  sim->add_option("--max-party-size", cfg.max_party_size, "Largest party")->capture_default_str();
  sim->add_option("--draw-probability", cfg.draw_probability, "Chance a match is drawn")->capture_default_str();
  sim->add_option("--win-tilt", cfg.win_toxicity_tilt, "Logit tilt of winning towards the less toxic team")
      ->capture_default_str();
  auto* beta_opt = sim->add_option("--beta", beta, "Reflection coefficient; in engagement mode, all four effects")
                       ->capture_default_str();
  sim->add_option("--beta-engagement", beta_engagement,
                  "Engagement effects: opponents|loss teammates|loss opponents|win teammates|win")
      ->expected(4);
  sim->add_option("--mean-alpha-y", cfg.mean_alpha_y, "Mean player baseline gap (hours)")->capture_default_str();
  sim->add_option("--sigma-alpha-y", cfg.sigma_alpha_y, "Spread of player baseline gaps")->capture_default_str();
  sim->add_option("--sigma-eps", cfg.sigma_eps, "Idiosyncratic gap noise")->capture_default_str();
  sim->add_option("--sigma-shock", cfg.sigma_match_shock, "Match shock scale")->capture_default_str();
  sim->add_option("--shock-loading", cfg.shock_toxicity_loading, "Logit toxicity shift per unit shock")
      ->capture_default_str();
  sim->add_option("--toxicity-rate", cfg.toxicity_base_rate, "Base toxicity rate")->capture_default_str();
  sim->add_option("--sigma-alpha-x", cfg.sigma_alpha_x, "Spread of persistent toxicity propensity")
      ->capture_default_str();
  sim->add_option("--weight-opponents", cfg.weight_opponents, "Adjacency weight on opponents")
      ->capture_default_str();
  sim->add_option("--weight-teammates", cfg.weight_teammates, "Adjacency weight on teammates")
      ->capture_default_str();
  sim->add_option("--sigma-reflection-eps", cfg.sigma_reflection_eps, "Reflection-system noise")
      ->capture_default_str();
  sim_exposure.add(sim);
  sim->add_option("-o,--out", sim_out, "Panel CSV to write")->required();
  sim->add_option("--truth", sim_truth, "Truth JSON (default <out>.truth.json)");
  sim->add_option("--manifest", sim_manifest, "Manifest JSON (default <out>.manifest.json)");

  // describe
  CLI::App* desc = app.add_subcommand("describe", "Exposure probabilities by context and result");
  AnalysisFlags desc_flags;
  desc_flags.add(desc);
  std::string desc_format = "text", desc_out, desc_manifest;
  desc->add_option("--format", desc_format, "text | json | csv")->capture_default_str();
  desc->add_option("-o,--out", desc_out, "Output file (default stdout)");
  desc->add_option("--manifest", desc_manifest, "Manifest JSON (default <out>.manifest.json)");

  // estimate
  CLI::App* est = app.add_subcommand("estimate", "Within-player OLS and leave-one-out 2SLS");
  AnalysisFlags est_flags;
  est_flags.add(est);
  std::string vcov = "hc1", outcome = "both", est_out, est_table, est_instruments, est_manifest;
  bool continuous = false, no_interaction = false;
  est->add_option("--vcov", vcov, "classical | hc1 | cluster-player")->capture_default_str();
  est->add_option("--outcome", outcome, "time_to_next_match | used_toxic | both")->capture_default_str();
  est->add_flag("--continuous", continuous, "Use the 'latent' column instead of used_toxic");
  est->add_flag("--no-interaction", no_interaction, "Drop the win interaction terms");
  est->add_option("-o,--out", est_out, "Result JSON");
  est->add_option("--table", est_table, "Text table path (default stdout, 'none' to skip)");
  est->add_option("--instruments", est_instruments, "Also write the instrument columns to this CSV");
  est->add_option("--manifest", est_manifest, "Manifest JSON (default <out>.manifest.json)");

  // report
  CLI::App* rep = app.add_subcommand("report", "Render tables, marginal effects and priority rankings");
  std::string rep_input, rep_format = "text", rep_method = "tsls", rep_out;
  bool rep_effects = false, rep_ranking = false;
  rep->add_option("-i,--input", rep_input, "Result JSON written by 'estimate'")->required();
  rep->add_option("--format", rep_format, "text | json | csv")->capture_default_str();
  rep->add_option("--method", rep_method, "ols | tsls | both")->capture_default_str();
  rep->add_flag("--effects", rep_effects, "Marginal effects by result with 95% intervals");
  rep->add_flag("--ranking", rep_ranking, "Priority ranking of context x result cells");
  rep->add_option("-o,--out", rep_out, "Output file (default stdout)");

  for (CLI::App* sub : {sim, desc, est, rep}) sub->allow_config_extras(false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitParse;
  }

  try {
    if (*sim) {
      cfg.exposure = sim_exposure.model();
      return cmd_simulate(*sim, cfg, sim_mode, beta, beta_opt->count() > 0, beta_engagement, sim_out, sim_truth,
                          sim_manifest);
    }
    if (*desc) return cmd_describe(*desc, desc_flags, desc_format, desc_out, desc_manifest);
    if (*est) {
      return cmd_estimate(*est, est_flags, vcov, outcome, continuous, no_interaction, est_out, est_table,
                          est_instruments, est_manifest);
    }
    if (*rep) return cmd_report(rep_input, rep_format, rep_method, rep_effects, rep_ranking, rep_out);
  } catch (const peeriv::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUnexpected;
  }
  return kExitUnexpected;
}
