#ifndef UNVEILER_CONFIG_HPP_
#define UNVEILER_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "unveiler/environment.hpp"
#include "unveiler/evalharness.hpp"
#include "unveiler/training.hpp"

namespace unveiler {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ConfigType { kInt, kReal, kBool, kString };

struct ConfigKey {
  const char* name;
  ConfigType type;
  const char* default_value;
  const char* doc;
};

// Flat key = value run configuration. Every key has a default; unknown
// keys and unparsable values are rejected.
class RunConfig {
 public:
  RunConfig();

  static const std::vector<ConfigKey>& keys();

  void set(const std::string& key, const std::string& value);
  // "key=value"
  void set_assignment(const std::string& assignment);
  // '#' comments, blank lines and "key = value" lines
  void load_file(const std::string& path);
  void load_text(const std::string& text);

  const std::string& get(const std::string& key) const;
  double real(const std::string& key) const;
  long integer(const std::string& key) const;
  std::uint64_t unsigned_integer(const std::string& key) const;
  bool flag(const std::string& key) const;

  // every key, sorted, in load_text() syntax
  std::string dump() const;

  RewardConfig reward() const;
  GraspHeuristicConfig grasp() const;
  EnvConfig env() const;
  IlConfig il() const;
  PpoConfig ppo() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace unveiler

#endif  // UNVEILER_CONFIG_HPP_
