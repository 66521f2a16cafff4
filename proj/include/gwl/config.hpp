#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace gwl {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat key = value settings. Every lookup records the value actually used
// (explicit or default), so resolved() is a complete description of a run.
class Config {
 public:
  Config() = default;
  static Config parse(const std::string& text, const std::string& source = "<string>");
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& def);
  double get_double(const std::string& key, double def);
  long get_int(const std::string& key, long def);
  bool get_bool(const std::string& key, bool def);
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& def);
  std::vector<std::string> get_strings(const std::string& key, const std::vector<std::string>& def);

  /// Keys that were set but never read.
  std::vector<std::string> unused() const;
  /// Throws ConfigError naming the first unused key.
  void check_all_used() const;

  const std::map<std::string, std::string>& resolved() const { return resolved_; }
  std::string dump() const;

 private:
  const std::string* raw(const std::string& key);

  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> resolved_;
};

std::string join(const std::vector<double>& xs);
std::string join(const std::vector<std::string>& xs);

}  // namespace gwl
