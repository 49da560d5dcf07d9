#include "peeriv/panel_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "peeriv/errors.hpp"

namespace peeriv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

std::int64_t parse_int(std::string_view s, std::size_t line, std::string_view column) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ValidationError("line " + std::to_string(line) + ": column " + std::string(column) +
                          ": expected integer seconds, got '" + std::string(s) + "'");
  }
  return v;
}

bool parse_bool(std::string_view s, std::size_t line) {
  if (s == "1" || s == "true" || s == "TRUE" || s == "True") return true;
  if (s == "0" || s == "false" || s == "FALSE" || s == "False") return false;
  throw ValidationError("line " + std::to_string(line) + ": column used_toxic: expected 0/1, got '" +
                        std::string(s) + "'");
}

double parse_double(std::string_view s, std::size_t line) {
  std::string tmp(s);
  char* end = nullptr;
  double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size()) {
    throw ValidationError("line " + std::to_string(line) + ": column latent: expected number, got '" + tmp + "'");
  }
  return v;
}

}  // namespace

std::vector<std::string_view> split_fields(std::string_view line, char delimiter) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto next = line.find(delimiter, pos);
    if (next == std::string_view::npos) {
      out.push_back(trim(line.substr(pos)));
      break;
    }
    out.push_back(trim(line.substr(pos, next - pos)));
    pos = next + 1;
  }
  return out;
}

LoadedPanel load_match_rows(std::istream& in, const ColumnSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty input: missing header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  auto header = split_fields(line, schema.delimiter);

  auto find_col = [&](const std::string& name, bool required) -> int {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    if (required) throw SchemaError("missing required column '" + name + "'");
    return -1;
  };
  const int c_match = find_col(schema.match_id, true);
  const int c_player = find_col(schema.player_id, true);
  const int c_team = find_col(schema.team_id, true);
  const int c_party = find_col(schema.party_id, schema.require_party);
  const int c_start = find_col(schema.match_start, true);
  const int c_end = find_col(schema.match_end, true);
  const int c_toxic = find_col(schema.used_toxic, true);
  const int c_result = find_col(schema.result, true);
  const int c_latent = find_col("latent", false);

  PanelBuilder builder(c_party >= 0);
  std::vector<double> latent;
  std::size_t line_no = 1;
  std::vector<std::string_view> f;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    f = split_fields(line, schema.delimiter);
    if (f.size() != header.size()) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(f.size()));
    }
    MatchResult res;
    try {
      res = parse_match_result(f[static_cast<std::size_t>(c_result)]);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
    builder.add(f[static_cast<std::size_t>(c_match)], f[static_cast<std::size_t>(c_player)],
                f[static_cast<std::size_t>(c_team)],
                c_party >= 0 ? f[static_cast<std::size_t>(c_party)] : std::string_view{},
                parse_int(f[static_cast<std::size_t>(c_start)], line_no, schema.match_start),
                parse_int(f[static_cast<std::size_t>(c_end)], line_no, schema.match_end),
                parse_bool(f[static_cast<std::size_t>(c_toxic)], line_no), res, line_no);
    if (c_latent >= 0) latent.push_back(parse_double(f[static_cast<std::size_t>(c_latent)], line_no));
  }

  std::vector<std::uint32_t> row_of_input;
  LoadedPanel out{std::move(builder).build(c_latent >= 0 ? &row_of_input : nullptr), std::nullopt};
  if (c_latent >= 0) {
    std::vector<double> aligned(latent.size());
    for (std::size_t i = 0; i < latent.size(); ++i) aligned[row_of_input[i]] = latent[i];
    out.latent = std::move(aligned);
  }
  return out;
}

LoadedPanel load_match_rows_file(const std::string& path, const ColumnSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open panel file '" + path + "'");
  return load_match_rows(in, schema);
}

void write_match_rows(const MatchPanel& panel, std::ostream& out, std::span<const double> latent,
                      char delimiter) {
  if (!latent.empty() && latent.size() != panel.num_rows()) {
    throw UsageError("latent column length does not match panel rows");
  }
  const char d = delimiter;
  out << "match_id" << d << "player_id" << d << "team_id" << d << "party_id" << d << "match_start" << d
      << "match_end" << d << "used_toxic" << d << "result";
  if (!latent.empty()) out << d << "latent";
  out << '\n';
  std::string buf;
  char num[64];
  for (std::size_t i = 0; i < panel.num_rows(); ++i) {
    const auto& r = panel.row(i);
    buf.clear();
    buf += panel.match_id(r.match);
    buf += d;
    buf += panel.player_id(r.player);
    buf += d;
    buf += panel.team_label(r.team_label);
    buf += d;
    if (r.party != kSolo) buf += panel.party_id(r.party);
    buf += d;
    buf += std::to_string(r.start);
    buf += d;
    buf += std::to_string(r.end);
    buf += d;
    buf += r.toxic ? '1' : '0';
    buf += d;
    buf += to_string(r.result);
    if (!latent.empty()) {
      std::snprintf(num, sizeof num, "%.17g", latent[i]);
      buf += d;
      buf += num;
    }
    buf += '\n';
    out << buf;
  }
  if (!out) throw IoError("write failed while emitting panel rows");
}

void write_match_rows_file(const MatchPanel& panel, const std::string& path, std::span<const double> latent,
                           char delimiter) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_match_rows(panel, out, latent, delimiter);
}

}  // namespace peeriv
