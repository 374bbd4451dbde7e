// config.hpp -- flat key/value configuration with TOML-style files.
//
// Files hold `key = value` lines, `#` comments, optional [section] headers
// that prefix the keys that follow ("section.key"). Values are read typed
// on access; every tunable constant in the project is reachable this way
// and CLI flags override file entries.
#ifndef QEROVER_CONFIG_HPP
#define QEROVER_CONFIG_HPP

#include <map>
#include <string>
#include <vector>

namespace qerover {

class Config {
 public:
  Config() = default;

  static Config load(const std::string& path);
  void merge_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& dflt) const;
  double get_double(const std::string& key, double dflt) const;
  std::int64_t get_int(const std::string& key, std::int64_t dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;
  // comma-separated list
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& dflt) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace qerover

#endif  // QEROVER_CONFIG_HPP
