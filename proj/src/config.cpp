#include "config.hpp"

#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace surgnav {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ConfigError,
                  "config line " + std::to_string(lineno) + " has no '=': " + t);
    cfg.entries_.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

bool Config::has(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return true;
  return false;
}

std::string Config::get_string(const std::string& key) const {
  // last write wins, so command-line overrides can simply append
  const std::string* found = nullptr;
  for (const auto& [k, v] : entries_)
    if (k == key) found = &v;
  if (!found) throw Error(ErrorCode::ConfigError, "missing config key: " + key);
  return *found;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double Config::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "config key '" + key + "' is not a number: " + v);
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

int Config::get_int(const std::string& key) const {
  double d = get_double(key);
  int i = static_cast<int>(d);
  if (static_cast<double>(i) != d)
    throw Error(ErrorCode::ConfigError, "config key '" + key + "' is not an integer");
  return i;
}

int Config::get_int(const std::string& key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::vector<std::string> Config::get_all(const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_)
    if (k == key) out.push_back(v);
  return out;
}

void Config::set(const std::string& key, const std::string& value) {
  entries_.emplace_back(key, value);
}

std::vector<std::string> split_fields(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace surgnav
