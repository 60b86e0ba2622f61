#pragma once

#include <map>
#include <string>
#include <vector>

namespace surgnav {

// Plain-text key=value config. Lines starting with '#' and blank lines are
// skipped. Repeated keys accumulate in order (used for phase/event lists).
class Config {
 public:
  Config() = default;

  static Config load(const std::string& path);
  static Config parse(const std::string& text);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;

  // every value bound to the key, in file order
  std::vector<std::string> get_all(const std::string& key) const;

  void set(const std::string& key, const std::string& value);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// split "a,b,c" into trimmed fields
std::vector<std::string> split_fields(const std::string& s, char sep);

}  // namespace surgnav
