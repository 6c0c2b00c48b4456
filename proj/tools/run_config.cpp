#include "run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace rp3::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

double parse_number(std::string_view text, std::string_view what) {
  const std::string t = trim(text);
  double v = 0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size() || !std::isfinite(v))
    throw ConfigError(fmt::format("{}: '{}' is not a finite number", what, text));
  return v;
}

RunConfig::RunConfig(std::string command, std::set<std::string> allowed)
    : command_(std::move(command)), allowed_(std::move(allowed)) {}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  parse_text(ss.str(), path.string());
}

void RunConfig::parse_text(std::string_view text, std::string_view source) {
  std::set<std::string> seen;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(fmt::format("{}:{}: expected key = value", source, line_no));
    const std::string k = trim(std::string_view(line).substr(0, eq));
    const std::string v = trim(std::string_view(line).substr(eq + 1));
    if (k.empty()) throw ConfigError(fmt::format("{}:{}: empty key", source, line_no));
    if (!seen.insert(k).second) throw ConfigError(fmt::format("{}:{}: duplicate key '{}'", source, line_no, k));
    if (!allowed_.count(k))
      throw ConfigError(fmt::format("{}:{}: key '{}' does not apply to '{}'", source, line_no, k, command_));
    values_[k] = v;
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!allowed_.count(key)) throw ConfigError(fmt::format("option '{}' does not apply to '{}'", key, command_));
  values_[key] = value;
}

double RunConfig::number(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(fmt::format("'{}' needs --{}", command_, key));
  return parse_number(it->second, key);
}

double RunConfig::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long RunConfig::integer_or(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  const std::string t = trim(values_.at(key));
  long v = 0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size())
    throw ConfigError(fmt::format("{}: '{}' is not an integer", key, t));
  return v;
}

std::uint64_t RunConfig::seed_or(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string t = trim(values_.at(key));
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size())
    throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, t));
  return v;
}

std::string RunConfig::text_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? values_.at(key) : fallback;
}

std::vector<double> RunConfig::list(const std::string& key) const {
  std::vector<double> out;
  const std::string t = trim(text_or(key, ""));
  if (t.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = t.find(',', start);
    out.push_back(parse_number(std::string_view(t).substr(start, comma - start), key));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string json_number(double v) {
  if (!std::isfinite(v)) return "null";
  return fmt::format("{:.17g}", v);
}

std::string json_string(std::string_view s) {
  std::string out = "\"";
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) out += fmt::format("\\u{:04x}", int(c));
        else out += c;
    }
  }
  return out + "\"";
}

void JsonLine::key(std::string_view k) {
  if (!body_.empty()) body_ += ',';
  body_ += json_string(k);
  body_ += ':';
}

JsonLine& JsonLine::add(std::string_view k, double v) {
  key(k);
  body_ += json_number(v);
  return *this;
}

JsonLine& JsonLine::add(std::string_view k, int v) {
  key(k);
  body_ += std::to_string(v);
  return *this;
}

JsonLine& JsonLine::add(std::string_view k, long v) {
  key(k);
  body_ += std::to_string(v);
  return *this;
}

JsonLine& JsonLine::add(std::string_view k, std::size_t v) {
  key(k);
  body_ += std::to_string(v);
  return *this;
}

JsonLine& JsonLine::add(std::string_view k, bool v) {
  key(k);
  body_ += v ? "true" : "false";
  return *this;
}

JsonLine& JsonLine::add(std::string_view k, std::string_view v) {
  key(k);
  body_ += json_string(v);
  return *this;
}

JsonLine& JsonLine::add(std::string_view k, const std::vector<double>& v) {
  key(k);
  body_ += '[';
  for (std::size_t i = 0; i < v.size(); ++i) body_ += (i ? "," : "") + json_number(v[i]);
  body_ += ']';
  return *this;
}

JsonLine& JsonLine::add(std::string_view k, const std::vector<int>& v) {
  key(k);
  body_ += '[';
  for (std::size_t i = 0; i < v.size(); ++i) body_ += (i ? "," : "") + std::to_string(v[i]);
  body_ += ']';
  return *this;
}

JsonLine& JsonLine::add_null(std::string_view k) {
  key(k);
  body_ += "null";
  return *this;
}

JsonLine& JsonLine::add_object(std::string_view k, const JsonLine& v) {
  key(k);
  body_ += v.str();
  return *this;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open output file " + path.string());
  f << content;
  if (!f) throw Error("write failed for " + path.string());
}

void check_output_path(const std::filesystem::path& path) {
  if (path.empty()) throw ConfigError("--out: empty path");
  const auto parent = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  if (!std::filesystem::is_directory(parent))
    throw ConfigError("--out: directory " + parent.string() + " does not exist");
  if (std::filesystem::is_directory(path)) throw ConfigError("--out: " + path.string() + " is a directory");
}

}  // namespace rp3::cli
