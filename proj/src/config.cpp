#include "unveiler/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <sstream>

#include "unveiler/persistence.hpp"

namespace unveiler {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const ConfigKey& lookup(const std::string& key) {
  for (const auto& k : RunConfig::keys()) {
    if (key == k.name) return k;
  }
  throw ConfigError("unknown config key: " + key);
}

bool parse_long(const std::string& s, long& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtol(s.c_str(), &end, 10);
  return errno == 0 && *end == '\0';
}

bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && *end == '\0';
}

void check(const ConfigKey& k, const std::string& v) {
  long l = 0;
  double d = 0.0;
  bool ok = true;
  switch (k.type) {
    case ConfigType::kInt:
      ok = parse_long(v, l);
      break;
    case ConfigType::kReal:
      ok = parse_real(v, d);
      break;
    case ConfigType::kBool:
      ok = v == "true" || v == "false";
      break;
    case ConfigType::kString:
      break;
  }
  if (!ok) throw ConfigError("bad value for " + std::string(k.name) + ": '" + v + "'");
}

}  // namespace

const std::vector<ConfigKey>& RunConfig::keys() {
  static const std::vector<ConfigKey> k = {
      {"seed", ConfigType::kInt, "0", "root seed; every random stream derives from it"},
      {"workers", ConfigType::kInt, "1", "rollout workers (execution is single-threaded)"},
      {"reward.alpha", ConfigType::kReal, "10", "success weight"},
      {"reward.beta", ConfigType::kReal, "0.5", "time-bonus weight"},
      {"reward.horizon", ConfigType::kInt, "15", "episode horizon H"},
      {"reward.gamma", ConfigType::kReal, "0.99", "discount"},
      {"reward.r_step", ConfigType::kReal, "-0.2", "per-step penalty"},
      {"reward.access_bonus", ConfigType::kReal, "2", "target selected while accessible"},
      {"reward.access_penalty", ConfigType::kReal, "-1", "target selected while inaccessible"},
      {"reward.occl_vis_weight", ConfigType::kReal, "2", "per unit of target visibility gained"},
      {"reward.occl_path_weight", ConfigType::kReal, "1", "removal clears an occlusion path"},
      {"grasp.d_min", ConfigType::kReal, "0.01", "sampler lower height band"},
      {"grasp.d_max", ConfigType::kReal, "0.30", "sampler upper height band"},
      {"grasp.d_push", ConfigType::kReal, "0.04", "sampler boundary search radius"},
      {"grasp.center_scale", ConfigType::kReal, "1.05", "sampler scale on p1"},
      {"grasp.max_attempts", ConfigType::kInt, "200", "sampler rejection budget"},
      {"grasp.threshold", ConfigType::kReal, "0.5", "planner acceptance threshold"},
      {"grasp.use_planner", ConfigType::kBool, "true", "false executes sampled grasps only"},
      {"scene.n", ConfigType::kInt, "6", "objects per generated scene"},
      {"scene.occlusion", ConfigType::kString, "full", "partial or full"},
      {"scene.count", ConfigType::kInt, "10", "scenes to generate"},
      {"scene.object_set", ConfigType::kString, "seen", "all, seen or unseen"},
      {"demo.episodes", ConfigType::kInt, "600", "demonstration episodes to run"},
      {"demo.min_objects", ConfigType::kInt, "2", "smallest demonstration scene"},
      {"demo.max_objects", ConfigType::kInt, "9", "largest demonstration scene"},
      {"demo.keep_failed", ConfigType::kBool, "false", "also keep failed episodes"},
      {"demo.features", ConfigType::kString, "full", "full or impoverished observations"},
      {"il.lr", ConfigType::kReal, "0.001", "Adam learning rate"},
      {"il.batch", ConfigType::kInt, "64", "minibatch size"},
      {"il.epochs", ConfigType::kInt, "20", "passes over the dataset"},
      {"ppo.total_steps", ConfigType::kInt, "100000", "transitions to collect"},
      {"ppo.wave_size", ConfigType::kInt, "2048", "transitions per rollout wave"},
      {"ppo.min_objects", ConfigType::kInt, "2", "smallest training scene"},
      {"ppo.max_objects", ConfigType::kInt, "12", "largest training scene"},
      {"ppo.clip", ConfigType::kReal, "0.2", "surrogate clip range"},
      {"ppo.lr", ConfigType::kReal, "0.0003", "Adam learning rate"},
      {"ppo.epochs", ConfigType::kInt, "4", "passes per wave"},
      {"ppo.minibatch", ConfigType::kInt, "256", "minibatch size"},
      {"ppo.value_coef", ConfigType::kReal, "0.5", "value loss weight"},
      {"ppo.entropy_coef", ConfigType::kReal, "0.01", "entropy bonus weight"},
      {"ppo.max_grad_norm", ConfigType::kReal, "0.5", "global gradient norm clip"},
      {"ppo.gae_lambda", ConfigType::kReal, "0.95", "GAE lambda"},
      {"eval.episodes", ConfigType::kInt, "30", "episodes per grid cell"},
      {"eval.grid", ConfigType::kString, "default", "density bins, e.g. 2-6,6-9"},
      {"eval.object_set", ConfigType::kString, "unseen", "object set of evaluation scenes"},
      {"bound.scenes", ConfigType::kInt, "100", "scenes in the bound check"},
      {"bound.min_objects", ConfigType::kInt, "2", "smallest bound-check scene"},
      {"bound.max_objects", ConfigType::kInt, "5", "largest bound-check scene (oracle limit 6)"},
      {"bound.execution", ConfigType::kString, "physics", "physics or idealized"},
  };
  return k;
}

RunConfig::RunConfig() {
  for (const auto& k : keys()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const ConfigKey& k = lookup(key);
  check(k, value);
  values_[key] = value;
}

void RunConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::load_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (!line.empty()) set_assignment(line);
  }
}

void RunConfig::load_file(const std::string& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const PersistenceError& e) {
    throw ConfigError(e.what());
  }
  load_text(text);
}

const std::string& RunConfig::get(const std::string& key) const {
  lookup(key);
  return values_.at(key);
}

double RunConfig::real(const std::string& key) const {
  double d = 0.0;
  if (!parse_real(get(key), d)) throw ConfigError(key + " is not a number");
  return d;
}

long RunConfig::integer(const std::string& key) const {
  long l = 0;
  if (!parse_long(get(key), l)) throw ConfigError(key + " is not an integer");
  return l;
}

std::uint64_t RunConfig::unsigned_integer(const std::string& key) const {
  const std::string& v = get(key);
  errno = 0;
  char* end = nullptr;
  const unsigned long long u = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v[0] == '-' || errno != 0 || *end != '\0') {
    throw ConfigError(key + " is not a non-negative integer");
  }
  return u;
}

bool RunConfig::flag(const std::string& key) const { return get(key) == "true"; }

std::string RunConfig::dump() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
  return os.str();
}

RewardConfig RunConfig::reward() const {
  RewardConfig r;
  r.alpha = real("reward.alpha");
  r.beta = real("reward.beta");
  r.horizon = static_cast<int>(integer("reward.horizon"));
  r.gamma = real("reward.gamma");
  r.r_step = real("reward.r_step");
  r.access_bonus = real("reward.access_bonus");
  r.access_penalty = real("reward.access_penalty");
  r.occl_vis_weight = real("reward.occl_vis_weight");
  r.occl_path_weight = real("reward.occl_path_weight");
  r.validate();
  return r;
}

GraspHeuristicConfig RunConfig::grasp() const {
  GraspHeuristicConfig g;
  g.d_min = real("grasp.d_min");
  g.d_max = real("grasp.d_max");
  g.d_push = real("grasp.d_push");
  g.center_scale = real("grasp.center_scale");
  g.max_attempts = static_cast<int>(integer("grasp.max_attempts"));
  if (!(g.d_min > 0 && g.d_min < g.d_max) || !(g.d_push > 0) || g.max_attempts < 1) {
    throw ConfigError("grasp heuristic config out of range");
  }
  return g;
}

EnvConfig RunConfig::env() const {
  EnvConfig e;
  e.reward = reward();
  e.grasp = grasp();
  e.grasp_threshold = real("grasp.threshold");
  e.use_planner = flag("grasp.use_planner");
  return e;
}

IlConfig RunConfig::il() const {
  IlConfig c;
  c.lr = real("il.lr");
  c.batch = static_cast<int>(integer("il.batch"));
  c.epochs = static_cast<int>(integer("il.epochs"));
  if (c.batch < 1 || c.epochs < 0 || !(c.lr > 0)) throw ConfigError("IL config out of range");
  return c;
}

PpoConfig RunConfig::ppo() const {
  PpoConfig c;
  c.clip = real("ppo.clip");
  c.lr = real("ppo.lr");
  c.epochs = static_cast<int>(integer("ppo.epochs"));
  c.minibatch = static_cast<int>(integer("ppo.minibatch"));
  c.value_coef = real("ppo.value_coef");
  c.entropy_coef = real("ppo.entropy_coef");
  c.max_grad_norm = real("ppo.max_grad_norm");
  c.gae_lambda = real("ppo.gae_lambda");
  if (c.minibatch < 1 || c.epochs < 0 || !(c.lr > 0) || !(c.clip > 0)) {
    throw ConfigError("PPO config out of range");
  }
  return c;
}

}  // namespace unveiler
