#include "iprop/trajectory.hpp"

#include <charconv>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "iprop/error.hpp"
#include "iprop/text.hpp"

namespace iprop {

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(text::trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

[[noreturn]] void bad_line(std::size_t line, const std::string& why) {
  throw Error(ErrorCode::MalformedContent,
              "trajectory line " + std::to_string(line) + ": " + why, nlohmann::json{{"line", line}});
}

template <typename T>
T parse_number(std::string_view s, std::size_t line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad_line(line, "bad number '" + std::string(s) + "'");
  return v;
}

double parse_score(std::string_view s, std::size_t line) {
  const std::string copy(s);
  char* end = nullptr;
  const double v = std::strtod(copy.c_str(), &end);
  if (copy.empty() || end != copy.c_str() + copy.size()) bad_line(line, "bad score '" + copy + "'");
  if (v < 0.0 || v > 1.0) bad_line(line, "score outside [0,1]");
  return v;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string trajectory_csv(const std::vector<TrajectoryRecord>& records) {
  std::string out(kTrajectoryHeader);
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.iteration) + ',' + std::to_string(r.selected_prompt_id) + ',' +
           fixed4(r.train_subset_f1) + ',' + fixed4(r.validation_f1) + '\n';
  }
  return out;
}

std::vector<TrajectoryRecord> parse_trajectory_csv(std::string_view content) {
  std::vector<TrajectoryRecord> records;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    const auto line = text::trim(content.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kTrajectoryHeader) bad_line(line_no, "expected header '" + std::string(kTrajectoryHeader) + "'");
      header_seen = true;
      continue;
    }
    const auto fields = split_commas(line);
    if (fields.size() != 4) bad_line(line_no, "expected 4 fields");
    TrajectoryRecord r;
    r.iteration = parse_number<std::size_t>(fields[0], line_no);
    r.selected_prompt_id = parse_number<std::size_t>(fields[1], line_no);
    r.train_subset_f1 = parse_score(fields[2], line_no);
    r.validation_f1 = parse_score(fields[3], line_no);
    if (r.iteration != records.size()) bad_line(line_no, "iterations must count up from 0");
    records.push_back(r);
  }
  if (!header_seen) throw Error(ErrorCode::MalformedContent, "trajectory file is empty");
  return records;
}

std::string plot_csv(const std::vector<NamedTrajectory>& series) {
  std::string out(kPlotHeader);
  out += '\n';
  for (const auto& s : series) {
    for (const auto& r : s.records) {
      const auto prefix = csv_field(s.dataset) + ',' + std::to_string(r.iteration) + ',';
      out += prefix + "train," + fixed4(r.train_subset_f1) + '\n';
      out += prefix + "validation," + fixed4(r.validation_f1) + '\n';
    }
  }
  return out;
}

}  // namespace iprop
