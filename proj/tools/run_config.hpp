#pragma once

// Flat key=value run configuration with command-line overrides, plus the
// small output helpers shared by the rp3 commands.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rp3/errors.hpp"

namespace rp3::cli {

class ConfigError : public Error {
 public:
  using Error::Error;
};

class RunConfig {
 public:
  RunConfig(std::string command, std::set<std::string> allowed);

  const std::string& command() const { return command_; }

  // Lines "key = value"; blank lines and '#' comments are skipped. Unknown
  // keys and repeated keys are errors.
  void load_file(const std::filesystem::path& path);
  void parse_text(std::string_view text, std::string_view source);
  // Later calls win; used for command-line flags over file values.
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  long integer_or(const std::string& key, long fallback) const;
  std::uint64_t seed_or(const std::string& key, std::uint64_t fallback) const;
  std::string text_or(const std::string& key, const std::string& fallback) const;
  // Comma-separated numbers; an empty value is an empty list.
  std::vector<double> list(const std::string& key) const;

 private:
  std::string command_;
  std::set<std::string> allowed_;
  std::map<std::string, std::string> values_;
};

double parse_number(std::string_view text, std::string_view what);

// Ordered one-line JSON object; doubles at 17 significant digits, non-finite
// values as null.
class JsonLine {
 public:
  JsonLine& add(std::string_view key, double v);
  JsonLine& add(std::string_view key, int v);
  JsonLine& add(std::string_view key, long v);
  JsonLine& add(std::string_view key, std::size_t v);
  JsonLine& add(std::string_view key, bool v);
  JsonLine& add(std::string_view key, std::string_view v);
  JsonLine& add(std::string_view key, const char* v) { return add(key, std::string_view(v)); }
  JsonLine& add(std::string_view key, const std::vector<double>& v);
  JsonLine& add(std::string_view key, const std::vector<int>& v);
  JsonLine& add_null(std::string_view key);
  JsonLine& add_object(std::string_view key, const JsonLine& v);
  std::string str() const { return "{" + body_ + "}"; }

 private:
  void key(std::string_view k);
  std::string body_;
};

std::string json_number(double v);
std::string json_string(std::string_view s);

// Commands call this only after all computation succeeded, so a failed run
// leaves no partial output behind.
void write_file(const std::filesystem::path& path, const std::string& content);

// Fails early if the parent directory of an output path is missing.
void check_output_path(const std::filesystem::path& path);

}  // namespace rp3::cli
