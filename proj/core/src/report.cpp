#include "peeriv/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "peeriv/errors.hpp"

namespace peeriv {

using nlohmann::ordered_json;

namespace {

std::string full_precision(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

double number_from(const ordered_json& j, double if_null = std::numeric_limits<double>::quiet_NaN()) {
  return j.is_null() ? if_null : j.get<double>();
}

// Thousands separators on the integer part, one decimal.
std::string format_f(const FStatistic& f) {
  if (f.capped || std::isinf(f.value)) return "inf";
  if (std::isnan(f.value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", std::abs(f.value));
  std::string s(buf);
  const auto dot = s.find('.');
  std::string int_part = s.substr(0, dot);
  std::string grouped;
  for (std::size_t i = 0; i < int_part.size(); ++i) {
    if (i > 0 && (int_part.size() - i) % 3 == 0) grouped.push_back(',');
    grouped.push_back(int_part[i]);
  }
  return (f.value < 0 ? "-" : "") + grouped + s.substr(dot);
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string pad_right(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}
std::string pad_left(const std::string& s, std::size_t w) {
  return s.size() < w ? std::string(w - s.size(), ' ') + s : s;
}

ordered_json first_stage_json(const FirstStage& fs) {
  ordered_json coef = ordered_json::array();
  for (std::size_t i = 0; i < fs.names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    coef.push_back({{"name", fs.names[i]},
                    {"estimate", number_or_null(fs.coef[k])},
                    {"std_error", number_or_null(fs.se[k])}});
  }
  return {{"endogenous", fs.endogenous},
          {"coefficients", coef},
          {"f",
           {{"value", number_or_null(fs.f.value)},
            {"capped", fs.f.capped},
            {"df_num", fs.f.df_num},
            {"df_den", fs.f.df_den},
            {"p_value", number_or_null(fs.f.p_value)}}},
          {"rss_unrestricted", number_or_null(fs.rss_unrestricted)},
          {"rss_restricted", number_or_null(fs.rss_restricted)}};
}

ordered_json result_json(const EstimationResult& r) {
  ordered_json coef = ordered_json::array();
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    coef.push_back({{"name", r.names[i]},
                    {"estimate", number_or_null(r.beta[k])},
                    {"std_error", number_or_null(r.se[k])},
                    {"t_stat", number_or_null(r.t_stats[k])},
                    {"p_value", number_or_null(r.p_values[k])},
                    {"display", format_coefficient(r.beta[k], r.p_values[k])},
                    {"display_se", format_std_error(r.se[k])}});
  }
  ordered_json vcov = ordered_json::array();
  for (Eigen::Index i = 0; i < r.vcov.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < r.vcov.cols(); ++j) row.push_back(number_or_null(r.vcov(i, j)));
    vcov.push_back(std::move(row));
  }
  ordered_json fs = ordered_json::array();
  for (const auto& f : r.first_stage) fs.push_back(first_stage_json(f));
  return {{"method", r.method},
          {"outcome", r.outcome},
          {"vcov_mode", to_string(r.vcov_mode)},
          {"n_obs", r.n_obs},
          {"n_players", r.n_players},
          {"absorbed_df", r.absorbed_df},
          {"df_resid", number_or_null(r.df_resid)},
          {"rss", number_or_null(r.rss)},
          {"coefficients", coef},
          {"vcov", vcov},
          {"first_stage", fs},
          {"warnings", r.warnings}};
}

std::string column_label(const EstimationResult& r) { return r.method + ":" + r.outcome; }

}  // namespace

std::string_view to_string(TableFormat f) {
  switch (f) {
    case TableFormat::kText: return "text";
    case TableFormat::kJson: return "json";
    case TableFormat::kCsv: return "csv";
  }
  return "text";
}

TableFormat parse_table_format(std::string_view s) {
  if (s == "text") return TableFormat::kText;
  if (s == "json") return TableFormat::kJson;
  if (s == "csv") return TableFormat::kCsv;
  throw ConfigError("unknown format '" + std::string(s) + "' (expected text|json|csv)");
}

std::string_view significance_stars(double p) {
  if (!(p >= 0.0)) return "";
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.1) return "*";
  return "";
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  int decimals = 4;
  if (v != 0.0) {
    const int magnitude = static_cast<int>(std::floor(std::log10(std::abs(v))));
    decimals = std::clamp(4 - magnitude, 0, 4);
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  if (s == "-0" || s.find_first_not_of("-0.") == std::string::npos) {
    if (s.front() == '-') s.erase(0, 1);
  }
  return s;
}

std::string format_coefficient(double beta, double p_value) {
  return format_number(beta) + std::string(significance_stars(p_value));
}

std::string format_std_error(double se) { return "(" + format_number(se) + ")"; }

std::string render_regression_table(const EstimationResult& result, TableFormat format) {
  return render_regression_table(std::span<const EstimationResult>(&result, 1), format);
}

std::string render_regression_table(std::span<const EstimationResult> results, TableFormat format) {
  std::vector<std::string> names;
  for (const auto& r : results) {
    for (const auto& n : r.names) {
      if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
    }
  }

  if (format == TableFormat::kJson) {
    ordered_json j{{"regressors", names}, {"results", ordered_json::array()}};
    for (const auto& r : results) j["results"].push_back(result_json(r));
    return j.dump(2) + "\n";
  }

  if (format == TableFormat::kCsv) {
    std::ostringstream out;
    out << "column,method,outcome,regressor,estimate,std_error,t_stat,p_value,stars\n";
    for (std::size_t c = 0; c < results.size(); ++c) {
      const auto& r = results[c];
      for (std::size_t i = 0; i < r.names.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        out << c + 1 << ',' << csv_field(r.method) << ',' << csv_field(r.outcome) << ',' << csv_field(r.names[i])
            << ',' << full_precision(r.beta[k]) << ',' << full_precision(r.se[k]) << ','
            << full_precision(r.t_stats[k]) << ',' << full_precision(r.p_values[k]) << ','
            << significance_stars(r.p_values[k]) << '\n';
      }
    }
    return out.str();
  }

  // Text: fixed-width, regressors down, results across.
  std::vector<std::vector<std::string>> cells(results.size());
  std::size_t label_w = 12;
  for (const auto& n : names) label_w = std::max(label_w, n.size() + 2);
  std::size_t col_w = 14;
  for (std::size_t c = 0; c < results.size(); ++c) {
    const auto& r = results[c];
    col_w = std::max(col_w, column_label(r).size());
    for (const auto& n : names) {
      const int k = r.index_of(n);
      if (k < 0) {
        cells[c].push_back("");
        cells[c].push_back("");
      } else {
        cells[c].push_back(format_coefficient(r.beta[k], r.p_values[k]));
        cells[c].push_back(format_std_error(r.se[k]));
      }
      col_w = std::max({col_w, cells[c].end()[-2].size(), cells[c].back().size()});
    }
  }
  col_w += 2;
  std::ostringstream out;
  const std::size_t total = label_w + col_w * results.size();
  const std::string rule(total, '=');
  const std::string thin(total, '-');
  out << rule << '\n' << pad_right("", label_w);
  for (const auto& r : results) out << pad_left(column_label(r), col_w);
  out << '\n' << thin << '\n';
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << pad_right(names[i], label_w);
    for (std::size_t c = 0; c < results.size(); ++c) out << pad_left(cells[c][2 * i], col_w);
    out << '\n' << pad_right("", label_w);
    for (std::size_t c = 0; c < results.size(); ++c) out << pad_left(cells[c][2 * i + 1], col_w);
    out << '\n';
  }
  out << thin << '\n';
  auto footer = [&](const std::string& label, auto&& value_of) {
    out << pad_right(label, label_w);
    for (const auto& r : results) out << pad_left(value_of(r), col_w);
    out << '\n';
  };
  footer("Observations", [](const EstimationResult& r) { return std::to_string(r.n_obs); });
  footer("Players", [](const EstimationResult& r) { return std::to_string(r.n_players); });
  footer("Vcov", [](const EstimationResult& r) { return std::string(to_string(r.vcov_mode)); });
  std::vector<std::string> endogenous;
  for (const auto& r : results) {
    for (const auto& fs : r.first_stage) {
      if (std::find(endogenous.begin(), endogenous.end(), fs.endogenous) == endogenous.end())
        endogenous.push_back(fs.endogenous);
    }
  }
  for (const auto& e : endogenous) {
    footer("F " + e, [&](const EstimationResult& r) {
      for (const auto& fs : r.first_stage) {
        if (fs.endogenous == e) return format_f(fs.f);
      }
      return std::string();
    });
  }
  out << rule << '\n' << "Note: *p<0.1; **p<0.05; ***p<0.01\n";
  for (const auto& r : results) {
    for (const auto& w : r.warnings) out << "Warning (" << column_label(r) << "): " << w << '\n';
  }
  return out.str();
}

MarginalEffect point_effect(std::string context, std::string outcome, std::string units, double base,
                            double interaction) {
  MarginalEffect e;
  e.context = std::move(context);
  e.outcome = std::move(outcome);
  e.units = std::move(units);
  e.loss_effect = e.loss_ci_low = e.loss_ci_high = base;
  e.win_effect = e.win_ci_low = e.win_ci_high = base + interaction;
  return e;
}

std::vector<MarginalEffect> marginal_effects(const EstimationResult& r) {
  const std::string units = r.outcome == "time_to_next_match" ? "hours" : "probability";
  std::vector<MarginalEffect> out;
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    const std::string& base = r.names[i];
    if (base == "win" || base == "belongs_to_party" || base.ends_with("_x_win")) continue;
    const int b = static_cast<int>(i);
    const int x = r.index_of(base + "_x_win");
    if (x < 0) throw UsageError("marginal_effects: no interaction column '" + base + "_x_win' in result");
    MarginalEffect e;
    e.context = base;
    e.outcome = r.outcome;
    e.units = units;
    e.loss_effect = r.beta[b];
    e.win_effect = r.beta[b] + r.beta[x];
    e.loss_se = std::sqrt(std::max(0.0, r.vcov(b, b)));
    e.win_se = std::sqrt(std::max(0.0, r.vcov(b, b) + r.vcov(x, x) + 2.0 * r.vcov(b, x)));
    e.loss_ci_low = e.loss_effect - kNormal975 * e.loss_se;
    e.loss_ci_high = e.loss_effect + kNormal975 * e.loss_se;
    e.win_ci_low = e.win_effect - kNormal975 * e.win_se;
    e.win_ci_high = e.win_effect + kNormal975 * e.win_se;
    out.push_back(std::move(e));
  }
  if (out.empty()) throw UsageError("marginal_effects: result has no exposure contexts");
  return out;
}

std::string_view to_string(RankingObjective o) {
  return o == RankingObjective::kEngagement ? "engagement" : "propagation";
}

RankingObjective parse_ranking_objective(std::string_view s) {
  if (s == "engagement" || s == "time_to_next_match") return RankingObjective::kEngagement;
  if (s == "propagation" || s == "used_toxic") return RankingObjective::kPropagation;
  throw ConfigError("unknown ranking objective '" + std::string(s) + "'");
}

std::vector<RankedCell> priority_ranking(std::span<const MarginalEffect> effects, RankingObjective objective) {
  if (effects.empty()) throw UsageError("priority_ranking: no effects");
  const std::string_view units = objective == RankingObjective::kEngagement ? "hours" : "probability";
  std::vector<RankedCell> cells;
  for (std::size_t i = 0; i < effects.size(); ++i) {
    const auto& e = effects[i];
    if (e.units != units) {
      throw UsageError("priority_ranking: effect '" + e.context + "' is in " + e.units + ", objective " +
                       std::string(to_string(objective)) + " needs " + std::string(units));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (effects[j].context == e.context) throw UsageError("priority_ranking: context '" + e.context + "' repeated");
    }
    for (double v : {e.loss_effect, e.loss_ci_low, e.loss_ci_high, e.win_effect, e.win_ci_low, e.win_ci_high}) {
      if (!std::isfinite(v)) throw UsageError("priority_ranking: non-finite value for '" + e.context + "'");
    }
    cells.push_back({0, e.context, "loss", e.loss_effect, e.loss_ci_low, e.loss_ci_high});
    cells.push_back({0, e.context, "win", e.win_effect, e.win_ci_low, e.win_ci_high});
  }
  std::stable_sort(cells.begin(), cells.end(), [](const RankedCell& a, const RankedCell& b) {
    if (a.estimate != b.estimate) return a.estimate > b.estimate;
    return (a.ci_high - a.ci_low) < (b.ci_high - b.ci_low);
  });
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i].rank = i + 1;
  return cells;
}

std::string render_marginal_effects(std::span<const MarginalEffect> effects, TableFormat format) {
  if (format == TableFormat::kJson) {
    ordered_json j = ordered_json::array();
    for (const auto& e : effects) {
      j.push_back({{"context", e.context},
                   {"outcome", e.outcome},
                   {"units", e.units},
                   {"loss", {{"effect", e.loss_effect}, {"std_error", e.loss_se}, {"ci95", {e.loss_ci_low, e.loss_ci_high}}}},
                   {"win", {{"effect", e.win_effect}, {"std_error", e.win_se}, {"ci95", {e.win_ci_low, e.win_ci_high}}}}});
    }
    return j.dump(2) + "\n";
  }
  std::ostringstream out;
  if (format == TableFormat::kCsv) {
    out << "context,result,outcome,units,effect,std_error,ci_low,ci_high\n";
    for (const auto& e : effects) {
      out << csv_field(e.context) << ",loss," << csv_field(e.outcome) << ',' << e.units << ','
          << full_precision(e.loss_effect) << ',' << full_precision(e.loss_se) << ','
          << full_precision(e.loss_ci_low) << ',' << full_precision(e.loss_ci_high) << '\n';
      out << csv_field(e.context) << ",win," << csv_field(e.outcome) << ',' << e.units << ','
          << full_precision(e.win_effect) << ',' << full_precision(e.win_se) << ','
          << full_precision(e.win_ci_low) << ',' << full_precision(e.win_ci_high) << '\n';
    }
    return out.str();
  }
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %-5s %12s %12s %25s\n", "context", "result", "effect", "std.err",
                "95% CI");
  out << line;
  for (const auto& e : effects) {
    for (int w = 0; w < 2; ++w) {
      const bool win = w == 1;
      std::snprintf(line, sizeof line, "%-18s %-5s %12.3f %12.3f   [%9.3f, %9.3f]\n", e.context.c_str(),
                    win ? "win" : "loss", win ? e.win_effect : e.loss_effect, win ? e.win_se : e.loss_se,
                    win ? e.win_ci_low : e.loss_ci_low, win ? e.win_ci_high : e.loss_ci_high);
      out << line;
    }
  }
  if (!effects.empty()) out << "units: " << effects.front().units << '\n';
  return out.str();
}

std::string render_ranking(std::span<const RankedCell> ranking, TableFormat format) {
  if (format == TableFormat::kJson) {
    ordered_json j = ordered_json::array();
    for (const auto& c : ranking) {
      j.push_back({{"rank", c.rank},
                   {"context", c.context},
                   {"result", c.result},
                   {"estimate", c.estimate},
                   {"ci95", {c.ci_low, c.ci_high}}});
    }
    return j.dump(2) + "\n";
  }
  std::ostringstream out;
  if (format == TableFormat::kCsv) {
    out << "rank,context,result,estimate,ci_low,ci_high\n";
    for (const auto& c : ranking) {
      out << c.rank << ',' << csv_field(c.context) << ',' << c.result << ',' << full_precision(c.estimate) << ','
          << full_precision(c.ci_low) << ',' << full_precision(c.ci_high) << '\n';
    }
    return out.str();
  }
  char line[256];
  for (const auto& c : ranking) {
    std::snprintf(line, sizeof line, "%2zu. %-18s %-5s %10.3f   [%9.3f, %9.3f]\n", c.rank, c.context.c_str(),
                  c.result.c_str(), c.estimate, c.ci_low, c.ci_high);
    out << line;
  }
  return out.str();
}

std::string render_exposure_table(const ExposureTable& t, TableFormat format) {
  if (format == TableFormat::kJson) {
    ordered_json cells = ordered_json::array();
    for (const auto& c : t.cells) {
      cells.push_back({{"context", c.context},
                       {"result", to_string(c.outcome)},
                       {"rows", c.rows},
                       {"exposed", c.exposed},
                       {"probability", c.probability},
                       {"std_error", c.std_error}});
    }
    ordered_json j{{"scheme", to_string(t.scheme)},
                   {"cells", cells},
                   {"max_probability", t.max_probability},
                   {"below_one_tenth_percent", t.below_one_tenth_percent},
                   {"warnings", t.warnings}};
    return j.dump(2) + "\n";
  }
  std::ostringstream out;
  if (format == TableFormat::kCsv) {
    out << "context,result,rows,exposed,probability,std_error\n";
    for (const auto& c : t.cells) {
      out << csv_field(c.context) << ',' << to_string(c.outcome) << ',' << c.rows << ',' << c.exposed << ','
          << full_precision(c.probability) << ',' << full_precision(c.std_error) << '\n';
    }
    return out.str();
  }
  char line[256];
  out << "Exposure probabilities (scheme " << to_string(t.scheme) << ")\n";
  std::snprintf(line, sizeof line, "%-18s %-5s %10s %10s %12s %10s\n", "context", "result", "rows", "exposed",
                "probability", "std.err");
  out << line;
  for (const auto& c : t.cells) {
    std::snprintf(line, sizeof line, "%-18s %-5s %10zu %10zu %12.6f %10.6f\n", c.context.c_str(),
                  std::string(to_string(c.outcome)).c_str(), c.rows, c.exposed, c.probability, c.std_error);
    out << line;
  }
  for (const auto& w : t.warnings) out << "Warning: " << w << '\n';
  return out.str();
}

std::string render_attrition(const AttritionReport& a, TableFormat format) {
  if (format == TableFormat::kJson) {
    ordered_json j{{"rows_in", a.rows_in},
                   {"dropped_no_instrument", a.rows_dropped_no_instrument},
                   {"dropped_missing_outcome", a.rows_dropped_missing_outcome},
                   {"dropped_single_match", a.rows_dropped_single_match},
                   {"rows_out", a.rows_out}};
    return j.dump(2) + "\n";
  }
  std::ostringstream out;
  if (format == TableFormat::kCsv) {
    out << "rows_in,dropped_no_instrument,dropped_missing_outcome,dropped_single_match,rows_out\n"
        << a.rows_in << ',' << a.rows_dropped_no_instrument << ',' << a.rows_dropped_missing_outcome << ','
        << a.rows_dropped_single_match << ',' << a.rows_out << '\n';
    return out.str();
  }
  out << "rows in                      " << a.rows_in << '\n'
      << "dropped: no instrument       " << a.rows_dropped_no_instrument << '\n'
      << "dropped: missing outcome     " << a.rows_dropped_missing_outcome << '\n'
      << "dropped: single-match player " << a.rows_dropped_single_match << '\n'
      << "rows out                     " << a.rows_out << '\n';
  return out.str();
}

std::string result_to_json(const EstimationResult& result, int indent) { return result_json(result).dump(indent); }

EstimationResult result_from_json(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("invalid result JSON: ") + e.what());
  }
  try {
    EstimationResult r;
    r.method = j.at("method").get<std::string>();
    r.outcome = j.at("outcome").get<std::string>();
    r.vcov_mode = parse_vcov_mode(j.at("vcov_mode").get<std::string>());
    r.n_obs = j.at("n_obs").get<std::size_t>();
    r.n_players = j.at("n_players").get<std::size_t>();
    r.absorbed_df = j.at("absorbed_df").get<std::size_t>();
    r.df_resid = number_from(j.at("df_resid"));
    r.rss = number_from(j.at("rss"));
    const auto& coef = j.at("coefficients");
    const auto k = static_cast<Eigen::Index>(coef.size());
    r.beta.resize(k);
    r.se.resize(k);
    r.t_stats.resize(k);
    r.p_values.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto& c = coef.at(static_cast<std::size_t>(i));
      r.names.push_back(c.at("name").get<std::string>());
      r.beta[i] = number_from(c.at("estimate"));
      r.se[i] = number_from(c.at("std_error"));
      r.t_stats[i] = number_from(c.at("t_stat"));
      r.p_values[i] = number_from(c.at("p_value"));
    }
    const auto& v = j.at("vcov");
    r.vcov.resize(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) {
        r.vcov(a, b) = number_from(v.at(static_cast<std::size_t>(a)).at(static_cast<std::size_t>(b)));
      }
    }
    for (const auto& f : j.at("first_stage")) {
      FirstStage fs;
      fs.endogenous = f.at("endogenous").get<std::string>();
      const auto& fc = f.at("coefficients");
      fs.coef.resize(static_cast<Eigen::Index>(fc.size()));
      fs.se.resize(static_cast<Eigen::Index>(fc.size()));
      for (std::size_t i = 0; i < fc.size(); ++i) {
        fs.names.push_back(fc[i].at("name").get<std::string>());
        fs.coef[static_cast<Eigen::Index>(i)] = number_from(fc[i].at("estimate"));
        fs.se[static_cast<Eigen::Index>(i)] = number_from(fc[i].at("std_error"));
      }
      const auto& fj = f.at("f");
      fs.f.capped = fj.at("capped").get<bool>();
      fs.f.value = number_from(fj.at("value"), fs.f.capped ? std::numeric_limits<double>::infinity()
                                                           : std::numeric_limits<double>::quiet_NaN());
      fs.f.df_num = fj.at("df_num").get<std::size_t>();
      fs.f.df_den = fj.at("df_den").get<std::size_t>();
      fs.f.p_value = number_from(fj.at("p_value"));
      fs.rss_unrestricted = number_from(f.at("rss_unrestricted"));
      fs.rss_restricted = number_from(f.at("rss_restricted"));
      r.first_stage.push_back(std::move(fs));
    }
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed result JSON: ") + e.what());
  }
}

}  // namespace peeriv
