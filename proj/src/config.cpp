#include "gwl/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace gwl {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("config key '" + key + "': expected a number, got '" + s + "'");
  return v;
}

std::string fmt(double x) {
  std::ostringstream o;
  o.precision(17);
  o << x;
  return o.str();
}

}  // namespace

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + fmt(xs[i]);
  return out;
}

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + xs[i];
  return out;
}

Config Config::parse(const std::string& text, const std::string& source) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    if (c.has(key))
      throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    c.values_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

const std::string* Config::raw(const std::string& key) {
  auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

std::string Config::get_string(const std::string& key, const std::string& def) {
  const std::string* r = raw(key);
  return resolved_[key] = r ? *r : def;
}

double Config::get_double(const std::string& key, double def) {
  const std::string* r = raw(key);
  const double v = r ? to_double(key, *r) : def;
  resolved_[key] = fmt(v);
  return v;
}

long Config::get_int(const std::string& key, long def) {
  const std::string* r = raw(key);
  long v = def;
  if (r) {
    auto [p, ec] = std::from_chars(r->data(), r->data() + r->size(), v);
    if (ec != std::errc() || p != r->data() + r->size())
      throw ConfigError("config key '" + key + "': expected an integer, got '" + *r + "'");
  }
  resolved_[key] = std::to_string(v);
  return v;
}

bool Config::get_bool(const std::string& key, bool def) {
  const std::string* r = raw(key);
  bool v = def;
  if (r) {
    if (*r == "true" || *r == "1" || *r == "yes") v = true;
    else if (*r == "false" || *r == "0" || *r == "no") v = false;
    else throw ConfigError("config key '" + key + "': expected a boolean, got '" + *r + "'");
  }
  resolved_[key] = v ? "true" : "false";
  return v;
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& def) {
  const std::string* r = raw(key);
  std::vector<double> v = def;
  if (r) {
    v.clear();
    for (const std::string& s : split_list(*r)) v.push_back(to_double(key, s));
  }
  resolved_[key] = join(v);
  return v;
}

std::vector<std::string> Config::get_strings(const std::string& key,
                                             const std::vector<std::string>& def) {
  const std::string* r = raw(key);
  std::vector<std::string> v = r ? split_list(*r) : def;
  resolved_[key] = join(v);
  return v;
}

std::vector<std::string> Config::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (!resolved_.count(k)) out.push_back(k);
  return out;
}

void Config::check_all_used() const {
  const auto u = unused();
  if (!u.empty()) throw ConfigError("unknown config key '" + u.front() + "'");
}

std::string Config::dump() const {
  std::string out;
  for (const auto& [k, v] : resolved_) out += k + " = " + v + "\n";
  return out;
}

}  // namespace gwl
