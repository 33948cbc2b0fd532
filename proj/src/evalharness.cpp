#include "unveiler/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "unveiler/heuristics.hpp"
#include "unveiler/physics.hpp"
#include "unveiler/rng.hpp"

namespace unveiler {

namespace {

constexpr std::pair<PolicyKind, const char*> kPolicyNames[] = {
    {PolicyKind::kRandomValid, "random-valid"}, {PolicyKind::kNearestToTarget, "nearest-to-target"},
    {PolicyKind::kHeuristic, "heuristic"},      {PolicyKind::kIl, "il"},
    {PolicyKind::kPpo, "ppo"},                  {PolicyKind::kMultiShot, "multi-shot"},
    {PolicyKind::kImpoverished, "impoverished"}, {PolicyKind::kOracle, "oracle"},
};

std::size_t argmax_index(const std::vector<double>& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

std::size_t mask_index_of(const std::vector<SegmentMask>& masks, int id) {
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (masks[i].object_id == id) return i;
  }
  throw std::logic_error("object has no mask");
}

// closed-loop choice of one mask index; fills the probabilities for selector policies
std::size_t choose(const Policy& policy, const Environment& env, std::uint64_t seed,
                   StepRecord& rec) {
  const auto& masks = env.masks();
  switch (policy.kind) {
    case PolicyKind::kRandomValid: {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(env.steps())));
      return rng.index(masks.size());
    }
    case PolicyKind::kNearestToTarget: {
      const TargetRef t = env.target_ref();
      if (t.mask_index) return *t.mask_index;
      std::size_t best = 0;
      for (std::size_t i = 1; i < masks.size(); ++i) {
        if (distance(masks[i].centroid, t.position) < distance(masks[best].centroid, t.position)) {
          best = i;
        }
      }
      return best;
    }
    case PolicyKind::kHeuristic:
      return *heuristic_choice(masks, env.target_ref(), env.scene().workspace);
    case PolicyKind::kIl:
    case PolicyKind::kPpo:
    case PolicyKind::kImpoverished:
    case PolicyKind::kMultiShot: {
      const SelectorOutput out = forward(*policy.params, env.observation());
      rec.probabilities = out.probabilities;
      return argmax_index(out.probabilities);
    }
    case PolicyKind::kOracle: {
      const Oracle oracle(env.scene(), env.config().reward);
      const auto best = oracle.optimal_actions(env.steps());
      if (best.empty()) return 0;
      return mask_index_of(masks, best.front());
    }
  }
  throw std::logic_error("unhandled policy kind");
}

void fill_from_result(StepRecord& rec, const StepResult& r) {
  rec.selected_id = r.selected_id;
  rec.action = r.plan.action;
  rec.source = r.plan.source;
  rec.grasped_ids = r.grasped_ids;
  rec.stable = r.stable;
  rec.success = r.success;
  rec.reward = r.reward;
}

StepRecord begin_step(const Environment& env) {
  StepRecord rec;
  rec.masks = static_cast<int>(env.masks().size());
  rec.target_visible = visible_fraction(env.scene(), env.scene().target_id);
  return rec;
}

}  // namespace

const char* to_string(PolicyKind kind) {
  for (const auto& [k, name] : kPolicyNames) {
    if (k == kind) return name;
  }
  return "?";
}

PolicyKind policy_from_string(const std::string& s) {
  for (const auto& [k, name] : kPolicyNames) {
    if (s == name) return k;
  }
  throw std::invalid_argument("unknown policy: " + s);
}

bool Policy::needs_params() const {
  return kind == PolicyKind::kIl || kind == PolicyKind::kPpo || kind == PolicyKind::kMultiShot ||
         kind == PolicyKind::kImpoverished;
}

double EpisodeRecord::total_reward() const {
  double s = 0.0;
  for (const auto& st : steps) s += st.reward;
  return s;
}

double EpisodeRecord::discounted_return(double gamma) const {
  double s = 0.0;
  double g = 1.0;
  for (const auto& st : steps) {
    s += g * st.reward;
    g *= gamma;
  }
  return s;
}

EpisodeRecord run_episode(const Policy& policy, const Scene& scene, EnvConfig env_config,
                          std::uint64_t seed) {
  if (policy.needs_params() && policy.params == nullptr) {
    throw std::invalid_argument(std::string("policy needs parameters: ") + to_string(policy.kind));
  }
  env_config.features = policy.features();
  EpisodeRecord rec;
  rec.policy = to_string(policy.kind);
  rec.seed = seed;
  rec.initial = scene;
  Environment env(scene, env_config, derive_seed(seed, "env"));
  const std::uint64_t policy_seed = derive_seed(seed, "policy");

  if (policy.kind == PolicyKind::kMultiShot) {
    if (env.done()) return rec;
    StepRecord first = begin_step(env);
    const SelectorOutput out = forward(*policy.params, env.observation());
    std::vector<std::size_t> ranking(out.probabilities.size());
    for (std::size_t i = 0; i < ranking.size(); ++i) ranking[i] = i;
    std::stable_sort(ranking.begin(), ranking.end(), [&](std::size_t a, std::size_t b) {
      return out.probabilities[a] > out.probabilities[b];
    });
    const std::vector<SegmentMask> masks = env.masks();
    const Heightmap hm = env.heightmap();
    for (std::size_t k = 0; k < ranking.size() && !env.done(); ++k) {
      StepRecord step = k == 0 ? first : begin_step(env);
      if (k == 0) step.probabilities = out.probabilities;
      step.index = ranking[k];
      const StepResult r = env.step_with(*masks[ranking[k]].object_id, masks[ranking[k]], hm);
      fill_from_result(step, r);
      rec.steps.push_back(std::move(step));
    }
    rec.success = env.succeeded();
    return rec;
  }

  while (!env.done()) {
    StepRecord step = begin_step(env);
    step.index = choose(policy, env, policy_seed, step);
    fill_from_result(step, env.step(step.index));
    rec.steps.push_back(std::move(step));
  }
  rec.success = env.succeeded();
  return rec;
}

// ---------------------------------------------------------------------------

std::string DensityBin::label() const { return std::to_string(lo) + "-" + std::to_string(hi); }

EvalGrid parse_grid(const std::string& spec) {
  EvalGrid g;
  if (spec == "default" || spec.empty()) return g;
  g.bins.clear();
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) throw std::invalid_argument("bad density bin: " + item);
    DensityBin b;
    try {
      b.lo = std::stoi(item.substr(0, dash));
      b.hi = std::stoi(item.substr(dash + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad density bin: " + item);
    }
    if (b.lo < kMinSceneObjects || b.hi > kMaxSceneObjects || b.lo > b.hi) {
      throw std::invalid_argument("density bin out of range: " + item);
    }
    g.bins.push_back(b);
  }
  if (g.bins.empty()) throw std::invalid_argument("empty grid spec");
  return g;
}

const MetricsRow* MetricsTable::find(const std::string& bin, Occlusion occ,
                                     const std::string& policy) const {
  for (const auto& r : rows) {
    if (r.density_bin == bin && r.occlusion == occ && r.policy == policy) return &r;
  }
  return nullptr;
}

std::string MetricsTable::to_csv() const {
  std::ostringstream os;
  os << kMetricsHeader << '\n';
  char buf[64];
  for (const auto& r : rows) {
    os << r.density_bin << ',' << to_string(r.occlusion) << ',' << r.policy << ',';
    std::snprintf(buf, sizeof buf, "%.4f,%.4f,", r.completion_pct, r.mean_steps);
    os << buf << r.episodes << '\n';
  }
  return os.str();
}

MetricsRow summarize(const std::vector<EpisodeRecord>& episodes, const std::string& bin,
                     Occlusion occ, const std::string& policy) {
  MetricsRow row{bin, occ, policy, 0.0, 0.0, static_cast<int>(episodes.size())};
  if (episodes.empty()) return row;
  int wins = 0;
  long steps = 0;
  for (const auto& e : episodes) {
    wins += e.success ? 1 : 0;
    steps += e.step_count();
  }
  row.completion_pct = 100.0 * wins / static_cast<double>(episodes.size());
  row.mean_steps = static_cast<double>(steps) / static_cast<double>(episodes.size());
  return row;
}

std::optional<SceneDraw> grid_scene(const EvalGrid& grid, std::size_t bin, std::size_t occ,
                                    int episode, std::uint64_t seed) {
  const std::uint64_t cell = derive_seed(derive_seed(seed, "eval-grid"),
                                         static_cast<std::uint64_t>(bin * 16 + occ));
  const std::uint64_t es = derive_seed(cell, static_cast<std::uint64_t>(episode));
  SceneGridConfig g{grid.bins[bin].lo, grid.bins[bin].hi, {grid.occlusions[occ]}, grid.object_set};
  return draw_scene_params(g, es);
}

EvalResult evaluate(const Policy& policy, const EvalGrid& grid, const EnvConfig& env,
                    std::uint64_t seed) {
  EvalResult out;
  for (std::size_t b = 0; b < grid.bins.size(); ++b) {
    for (std::size_t o = 0; o < grid.occlusions.size(); ++o) {
      std::vector<EpisodeRecord> cell;
      for (int e = 0; e < grid.episodes; ++e) {
        const SceneDraw draw = *grid_scene(grid, b, o, e, seed);
        Scene scene;
        try {
          scene = generate_scene(draw.n_objects, draw.occlusion, draw.scene_seed, grid.object_set);
        } catch (const GenerationError&) {
          continue;
        }
        EpisodeRecord rec = run_episode(policy, scene, env, derive_seed(draw.scene_seed, "episode"));
        rec.draw = draw;
        cell.push_back(std::move(rec));
      }
      out.table.rows.push_back(
          summarize(cell, grid.bins[b].label(), grid.occlusions[o], to_string(policy.kind)));
      for (auto& r : cell) out.episodes.push_back(std::move(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// oracle

Oracle::Oracle(const Scene& scene, const RewardConfig& reward, int max_n) : reward_(reward) {
  if (static_cast<int>(scene.objects.size()) > max_n) {
    throw OracleError("oracle limited to " + std::to_string(max_n) + " objects, scene has " +
                      std::to_string(scene.objects.size()));
  }
  for (const auto& o : scene.objects) {
    if (o.id != scene.target_id) ids_.push_back(o.id);
  }
  auto bit_of = [&](int id) {
    return static_cast<std::uint32_t>(1u << (std::find(ids_.begin(), ids_.end(), id) - ids_.begin()));
  };

  // enumerate reachable removal sets breadth first
  std::unordered_map<std::uint32_t, std::size_t> index;
  std::deque<std::uint32_t> queue{0};
  index[0] = 0;
  states_.push_back({0, {}});
  std::vector<std::pair<std::size_t, int>> parent{{0, -1}};  // BFS tree for the sequence
  std::vector<int> depth{0};
  int retrieve_state = -1;
  while (!queue.empty()) {
    const std::uint32_t removed = queue.front();
    queue.pop_front();
    const std::size_t s = index.at(removed);
    Scene cur = scene;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (removed & (1u << i)) cur = remove_object(cur, ids_[i]);
    }
    relayer(cur);
    std::vector<Edge> edges;
    for (const auto& m : segment(cur)) {
      const int id = *m.object_id;
      const auto next_scene = idealized_removal(cur, id);
      const bool retrieves = id == scene.target_id && next_scene.has_value();
      const std::uint32_t next =
          next_scene && id != scene.target_id ? removed | bit_of(id) : removed;
      const Scene& after = next_scene && !retrieves ? *next_scene : cur;
      const double r = compute_reward(cur, after, id, 0, false, reward_);
      edges.push_back({id, next, retrieves, r});
      if (retrieves && retrieve_state < 0) {
        retrieve_state = static_cast<int>(s);
        min_steps_ = depth[s] + 1;
      }
      if (!index.contains(next)) {
        index[next] = states_.size();
        states_.push_back({next, {}});
        parent.push_back({s, id});
        depth.push_back(depth[s] + 1);
        queue.push_back(next);
      }
    }
    states_[s].edges = std::move(edges);
  }
  index_ = std::move(index);
  if (retrieve_state >= 0) {
    std::vector<int> seq{scene.target_id};
    for (std::size_t s = static_cast<std::size_t>(retrieve_state); s != 0; s = parent[s].first) {
      seq.push_back(parent[s].second);
    }
    sequence_.assign(seq.rbegin(), seq.rend());
  }

  // backward induction over t; every Q at t reads values at t + 1
  const int H = reward_.horizon;
  values_.assign(states_.size(), std::vector<double>(static_cast<std::size_t>(H) + 1, 0.0));
  for (int t = H - 1; t >= 0; --t) {
    for (std::size_t s = 0; s < states_.size(); ++s) {
      double best = 0.0;
      bool any = false;
      for (const auto& e : states_[s].edges) {
        const double q = q_value(s, e, t);
        if (!any || q > best) best = q;
        any = true;
      }
      values_[s][t] = any ? best : 0.0;
    }
  }
}

std::size_t Oracle::state_index(std::uint32_t removed) const { return index_.at(removed); }

double Oracle::q_value(std::size_t s, const Edge& e, int t) const {
  (void)s;
  const int H = reward_.horizon;
  if (e.retrieves) {
    return e.reward + reward_.alpha * (1.0 + reward_.beta * static_cast<double>(H - t) / H);
  }
  return e.reward + reward_.gamma * values_[state_index(e.next)][t + 1];
}

double Oracle::value_at(std::size_t s, int t) const {
  if (t < 0 || t > reward_.horizon) throw std::out_of_range("oracle step out of range");
  return values_[s][t];
}

std::vector<int> Oracle::best_at(std::size_t s, int t, double tol) const {
  std::vector<int> out;
  if (t >= reward_.horizon) return out;
  const double v = values_[s][t];
  for (const auto& e : states_[s].edges) {
    if (q_value(s, e, t) >= v - tol) out.push_back(e.object_id);
  }
  return out;
}

double Oracle::max_regret() const {
  double worst = 0.0;
  for (std::size_t s = 0; s < states_.size(); ++s) {
    for (int t = 0; t < reward_.horizon; ++t) {
      for (const auto& e : states_[s].edges) {
        worst = std::max(worst, values_[s][t] - q_value(s, e, t));
      }
    }
  }
  return worst;
}

OracleSummary optimal_removal_bruteforce(const Scene& scene, const RewardConfig& reward,
                                         int max_n) {
  const Oracle o(scene, reward, max_n);
  return {o.min_steps(), o.optimal_sequence(), o.value(0), o.state_count()};
}

// ---------------------------------------------------------------------------

BoundReport bound_check(const Policy& policy, const BoundConfig& config, std::uint64_t seed) {
  if (policy.kind == PolicyKind::kMultiShot) {
    throw std::invalid_argument("bound check needs a closed-loop policy");
  }
  if (policy.needs_params() && policy.params == nullptr) {
    throw std::invalid_argument("policy needs parameters");
  }
  const RewardConfig& rc = config.env.reward;
  const double scale = max_success_reward(rc);
  BoundReport rep;
  rep.policy = to_string(policy.kind);
  rep.horizon = rc.horizon;
  double gap_sum = 0.0;
  EnvConfig env_config = config.env;
  env_config.features = policy.features();

  for (std::uint64_t attempt = 0; rep.scenes < config.scenes; ++attempt) {
    if (attempt > static_cast<std::uint64_t>(config.scenes) * 10 + 100) {
      throw std::runtime_error("bound check could not generate enough scenes");
    }
    const std::uint64_t es = derive_seed(derive_seed(seed, "bound"), attempt);
    const SceneDraw draw = draw_scene_params(config.grid, derive_seed(es, "draw"));
    Scene scene;
    try {
      scene = generate_scene(draw.n_objects, draw.occlusion, draw.scene_seed, config.grid.object_set);
    } catch (const GenerationError&) {
      continue;
    }
    const Oracle root(scene, rc);
    rep.delta = std::max(rep.delta, root.max_regret() / scale);

    Environment env(scene, env_config, derive_seed(es, "env"));
    const std::uint64_t policy_seed = derive_seed(es, "policy");
    std::vector<double> rewards;
    while (!env.done()) {
      StepRecord rec;
      const std::size_t idx = choose(policy, env, policy_seed, rec);
      const int id = *env.masks()[idx].object_id;
      const Oracle here(env.scene(), rc);
      const auto best = here.optimal_actions(env.steps());
      const bool optimal = std::find(best.begin(), best.end(), id) != best.end();
      const bool ideal = idealized_removal(env.scene(), id).has_value();
      const StepResult r = env.step(idx);
      ++rep.decisions;
      if (optimal) {
        ++rep.optimal_decisions;
        if (r.success != ideal) ++rep.exec_failures;
      }
      rewards.push_back(r.reward);
    }
    // folded backward, the same order as the oracle's recursion
    double ret = 0.0;
    for (auto it = rewards.rbegin(); it != rewards.rend(); ++it) ret = *it + rc.gamma * ret;
    gap_sum += (root.value(0) - ret) / scale;
    ++rep.scenes;
  }
  rep.epsilon_sre =
      rep.decisions > 0 ? 1.0 - static_cast<double>(rep.optimal_decisions) / rep.decisions : 0.0;
  rep.epsilon_exec = rep.optimal_decisions > 0
                         ? static_cast<double>(rep.exec_failures) / rep.optimal_decisions
                         : 0.0;
  rep.gap = rep.scenes > 0 ? gap_sum / rep.scenes : 0.0;
  rep.bound = rep.horizon * rep.delta * rep.epsilon_sre + rep.epsilon_exec;
  rep.holds = rep.gap <= rep.bound + 1e-9;
  return rep;
}

}  // namespace unveiler
