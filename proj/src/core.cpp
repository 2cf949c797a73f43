#include "ews/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace ews {

void SeriesFrame::validate() const {
  if (target.empty()) throw ConfigError("series is empty");
  if (timestamps.size() != target.size())
    throw ConfigError("timestamp/target length mismatch");
  for (const auto& col : covariates)
    if (col.size() != target.size())
      throw ConfigError("covariate column length mismatch");
}

void WindowPlan::validate() const {
  if (delta < 10) throw ConfigError("window length delta must be >= 10");
  if (step < 1) throw ConfigError("window step must be >= 1");
  if (max_ar_order < 1) throw ConfigError("max_ar_order must be >= 1");
  if (max_cov_lag < 1) throw ConfigError("max_cov_lag must be >= 1");
  if (delta <= std::max(max_ar_order, max_cov_lag) + 5)
    throw ConfigError(
        "delta must exceed max(max_ar_order, max_cov_lag) + 5 so window fits "
        "have positive degrees of freedom");
}

void DetectorConfig::validate() const {
  if (m < 1) throw ConfigError("number of shifts m must be >= 1");
  if (!(alpha > 0 && alpha < 1)) throw ConfigError("alpha must be in (0,1)");
  if (!(beta > 0 && beta < 1)) throw ConfigError("beta must be in (0,1)");
  if (!calibrate && !(threshold > 0))
    throw ConfigError("fixed threshold must be positive");
}

std::vector<std::pair<int, int>> make_windows(const WindowPlan& plan, int T) {
  if (T < plan.delta + 1)
    throw ConfigError("series shorter than window");
  std::vector<std::pair<int, int>> out;
  for (int t0 = 0; t0 + plan.delta <= T - 1; t0 += plan.step)
    out.emplace_back(t0, t0 + plan.delta);
  return out;
}

std::vector<double> log_returns(std::span<const double> prices) {
  std::vector<double> out;
  if (prices.size() < 2) return out;
  out.reserve(prices.size() - 1);
  for (std::size_t i = 0; i + 1 < prices.size(); ++i) {
    if (!(prices[i] > 0.0) || !(prices[i + 1] > 0.0))
      throw ConfigError("non-positive price");
    out.push_back(std::log(prices[i + 1] / prices[i]));
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    auto b = f.find_first_not_of(" \t");
    auto e = f.find_last_not_of(" \t");
    f = (b == std::string::npos) ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

SeriesFrame read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open input file: " + path, 0);

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty input file", 0);
  auto header = split_csv_line(line);
  if (header.size() < 2)
    throw ParseError("header must have at least timestamp and target", 1);

  SeriesFrame frame;
  frame.covariate_names.assign(header.begin() + 2, header.end());
  frame.covariates.resize(frame.covariate_names.size());

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError("row has wrong number of fields", row);
    // complete-case handling: any missing value drops the row
    bool missing = false;
    for (std::size_t i = 1; i < fields.size(); ++i)
      if (fields[i].empty() || fields[i] == "NA" || fields[i] == "nan")
        missing = true;
    if (missing) continue;

    double y;
    if (!parse_double(fields[1], y))
      throw ParseError("cannot parse target value '" + fields[1] + "'", row);
    std::vector<double> xs(frame.covariates.size());
    for (std::size_t j = 0; j < xs.size(); ++j)
      if (!parse_double(fields[2 + j], xs[j]))
        throw ParseError("cannot parse covariate value '" + fields[2 + j] + "'",
                         row);
    frame.timestamps.push_back(fields[0]);
    frame.target.push_back(y);
    for (std::size_t j = 0; j < xs.size(); ++j)
      frame.covariates[j].push_back(xs[j]);
  }
  if (frame.target.empty()) throw ParseError("no data rows", row);
  frame.validate();
  return frame;
}

void write_series_csv(const SeriesFrame& frame, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "timestamp,target";
  for (const auto& name : frame.covariate_names) out << ',' << name;
  out << '\n';
  for (std::size_t t = 0; t < frame.length(); ++t) {
    out << frame.timestamps[t] << ',' << frame.target[t];
    for (const auto& col : frame.covariates) out << ',' << col[t];
    out << '\n';
  }
}

}  // namespace ews
