#include "unveiler/cli.hpp"

#include <cstdio>
#include <deque>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "unveiler/config.hpp"
#include "unveiler/evalharness.hpp"
#include "unveiler/grasp_planner.hpp"
#include "unveiler/persistence.hpp"
#include "unveiler/physics.hpp"
#include "unveiler/render.hpp"
#include "unveiler/rng.hpp"
#include "unveiler/training.hpp"

namespace unveiler::cli {

namespace {

namespace fs = std::filesystem;

// bad invocation discovered after parsing (missing input file, bad combination)
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flags shared by every subcommand plus flag -> config key bindings.
struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::deque<std::string> storage;
  std::vector<std::pair<CLI::Option*, std::string>> bound;

  void attach(CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--set", sets, "override one config key, key=value (repeatable)");
    bind(sub, "--seed", "seed", "root seed");
    bind(sub, "--workers", "workers", "rollout workers; 1 is the deterministic path");
  }

  void bind(CLI::App* sub, const std::string& flag, const std::string& key, const std::string& doc) {
    storage.emplace_back();
    bound.push_back({sub->add_option(flag, storage.back(), doc + " [" + key + "]"), key});
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& s : sets) cfg.set_assignment(s);
    for (const auto& [opt, key] : bound) {
      if (opt->count() > 0) cfg.set(key, opt->as<std::string>());
    }
    return cfg;
  }
};

void write_sidecar(const std::string& out_path, const RunConfig& cfg) {
  write_text(out_path + ".config", cfg.dump());
}

ObjectSet object_set(const RunConfig& cfg, const std::string& key) {
  try {
    return object_set_from_string(cfg.get(key));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

FeatureMode feature_mode(const std::string& s) {
  if (s == "full") return FeatureMode::kFull;
  if (s == "impoverished") return FeatureMode::kImpoverished;
  throw ConfigError("unknown feature mode: " + s);
}

ExecutionMode execution_mode(const std::string& s) {
  if (s == "physics") return ExecutionMode::kPhysics;
  if (s == "idealized") return ExecutionMode::kIdealized;
  throw ConfigError("unknown execution mode: " + s);
}

std::uint64_t root_seed(const RunConfig& cfg) { return cfg.unsigned_integer("seed"); }

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw UsageError(what + " not found: " + path);
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::string out;
};

void run_gen(const RunConfig& cfg, const GenArgs& a) {
  const int n = static_cast<int>(cfg.integer("scene.n"));
  const Occlusion occ = occlusion_from_string(cfg.get("scene.occlusion"));
  const ObjectSet set = object_set(cfg, "scene.object_set");
  const std::uint64_t stream = derive_seed(root_seed(cfg), "scene");
  std::vector<Scene> scenes;
  for (long i = 0; i < cfg.integer("scene.count"); ++i) {
    scenes.push_back(generate_scene(n, occ, derive_seed(stream, static_cast<std::uint64_t>(i)), set));
  }
  write_scenes(a.out, scenes);
  write_sidecar(a.out, cfg);
  std::cout << "wrote " << scenes.size() << " scenes to " << a.out << '\n';
}

struct DemoArgs {
  std::string out;
};

DemoConfig demo_config(const RunConfig& cfg) {
  DemoConfig d;
  d.episodes = static_cast<int>(cfg.integer("demo.episodes"));
  d.grid.min_objects = static_cast<int>(cfg.integer("demo.min_objects"));
  d.grid.max_objects = static_cast<int>(cfg.integer("demo.max_objects"));
  d.grid.object_set = object_set(cfg, "scene.object_set");
  d.keep_failed = cfg.flag("demo.keep_failed");
  d.env = cfg.env();
  d.env.features = feature_mode(cfg.get("demo.features"));
  return d;
}

void run_demo(const RunConfig& cfg, const DemoArgs& a) {
  const DemoDataset data = collect_demonstrations(demo_config(cfg), derive_seed(root_seed(cfg), "demo"));
  write_demos(a.out, data);
  write_sidecar(a.out, cfg);
  std::cout << "kept " << data.episodes.size() << " of " << data.requested << " episodes, "
            << data.pairs.size() << " pairs -> " << a.out << '\n';
}

struct TrainIlArgs {
  std::string demos;
  std::string out;
  std::string log;
};

void run_train_il(const RunConfig& cfg, const TrainIlArgs& a) {
  require_file(a.demos, "demonstration file");
  const DemoDataset data = read_demos(a.demos);
  if (data.pairs.empty()) throw UsageError("demonstration file holds no pairs: " + a.demos);
  const IlResult r = train_il(data, cfg.il(), derive_seed(root_seed(cfg), "il"));
  save_checkpoint(a.out, r.params);
  write_sidecar(a.out, cfg);
  std::ostringstream log;
  log << "epoch,loss\n";
  for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) log << e + 1 << ',' << fmt(r.epoch_loss[e]) << '\n';
  write_text(a.log.empty() ? a.out + ".loss.csv" : a.log, log.str());
  std::cout << "trained on " << data.pairs.size() << " pairs, final loss "
            << (r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back()) << " -> " << a.out << '\n';
}

struct TrainPpoArgs {
  std::string init;
  std::string out;
  std::string metrics;
  std::string checkpoint_dir;
};

void run_train_ppo(const RunConfig& cfg, const TrainPpoArgs& a) {
  SelectorParameters init;
  if (!a.init.empty()) {
    require_file(a.init, "initial checkpoint");
    init = load_checkpoint(a.init);
  } else {
    init = init_params(derive_seed(root_seed(cfg), "ppo-init"));
  }
  PpoTrainConfig tc;
  tc.total_steps = cfg.integer("ppo.total_steps");
  tc.wave_size = static_cast<int>(cfg.integer("ppo.wave_size"));
  tc.grid.min_objects = static_cast<int>(cfg.integer("ppo.min_objects"));
  tc.grid.max_objects = static_cast<int>(cfg.integer("ppo.max_objects"));
  tc.grid.object_set = object_set(cfg, "scene.object_set");
  tc.env = cfg.env();
  tc.ppo = cfg.ppo();
  if (tc.wave_size < 1) throw ConfigError("ppo.wave_size must be positive");

  if (!a.checkpoint_dir.empty()) fs::create_directories(a.checkpoint_dir);
  std::ostringstream metrics;
  metrics << "step,loss,return,entropy,completion,episodes\n";
  int wave = 0;
  const PpoResult r = train_ppo(
      init, tc, derive_seed(root_seed(cfg), "ppo"),
      [&](const WaveMetrics& m, const SelectorParameters& p) {
        metrics << m.steps << ',' << fmt(m.loss) << ',' << fmt(m.mean_return) << ','
                << fmt(m.entropy) << ',' << fmt(m.completion) << ',' << m.episodes << '\n';
        if (!a.checkpoint_dir.empty()) {
          char name[32];
          std::snprintf(name, sizeof name, "wave_%04d.json", wave);
          save_checkpoint((fs::path(a.checkpoint_dir) / name).string(), p);
        }
        ++wave;
      });
  save_checkpoint(a.out, r.params);
  write_sidecar(a.out, cfg);
  write_text(a.metrics.empty() ? a.out + ".metrics.csv" : a.metrics, metrics.str());
  std::cout << "ppo: " << r.waves.size() << " waves -> " << a.out << '\n';
}

struct EvalArgs {
  std::string policy = "heuristic";
  std::string params;
  std::string out = "metrics.csv";
  std::string episodes_out;
};

Policy make_policy(const std::string& name, const std::string& params_path,
                   std::unique_ptr<SelectorParameters>& holder) {
  Policy p;
  try {
    p.kind = policy_from_string(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (p.needs_params()) {
    if (params_path.empty()) throw UsageError(std::string("policy ") + name + " needs --params");
    require_file(params_path, "parameter checkpoint");
    holder = std::make_unique<SelectorParameters>(load_checkpoint(params_path));
    p.params = holder.get();
  }
  return p;
}

void run_eval(const RunConfig& cfg, const EvalArgs& a) {
  std::unique_ptr<SelectorParameters> holder;
  const Policy policy = make_policy(a.policy, a.params, holder);
  EvalGrid grid;
  try {
    grid = parse_grid(cfg.get("eval.grid"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  grid.episodes = static_cast<int>(cfg.integer("eval.episodes"));
  grid.object_set = object_set(cfg, "eval.object_set");
  const EvalResult r = evaluate(policy, grid, cfg.env(), derive_seed(root_seed(cfg), "eval"));
  write_text(a.out, r.table.to_csv());
  write_sidecar(a.out, cfg);
  if (!a.episodes_out.empty()) write_episodes(a.episodes_out, r.episodes);
  std::cout << r.table.to_csv();
}

struct OracleArgs {
  std::vector<std::string> policies{"heuristic"};
  std::string params;
  std::string out = "bound.jsonl";
};

void run_oracle(const RunConfig& cfg, const OracleArgs& a) {
  BoundConfig bc;
  bc.scenes = static_cast<int>(cfg.integer("bound.scenes"));
  bc.grid.min_objects = static_cast<int>(cfg.integer("bound.min_objects"));
  bc.grid.max_objects = static_cast<int>(cfg.integer("bound.max_objects"));
  bc.grid.object_set = object_set(cfg, "scene.object_set");
  if (bc.grid.max_objects > kOracleMaxObjects) {
    throw ConfigError("bound.max_objects exceeds the oracle limit of 6");
  }
  bc.env = cfg.env();
  bc.env.execution = execution_mode(cfg.get("bound.execution"));
  std::vector<BoundReport> reports;
  for (const auto& name : a.policies) {
    std::unique_ptr<SelectorParameters> holder;
    const Policy p = make_policy(name, a.params, holder);
    if (p.kind == PolicyKind::kMultiShot) throw UsageError("multi-shot is open loop; no bound check");
    reports.push_back(bound_check(p, bc, derive_seed(root_seed(cfg), "bound")));
    std::cout << bound_report_to_line(reports.back()) << '\n';
  }
  write_bound_reports(a.out, reports);
  write_sidecar(a.out, cfg);
}

struct RenderArgs {
  std::string scenes;
  int index = 0;
  std::string out = "scene.svg";
  std::string params;
  std::string maps_prefix;
  int object = -1;
};

void run_render(const RunConfig& cfg, const RenderArgs& a) {
  Scene scene;
  if (!a.scenes.empty()) {
    require_file(a.scenes, "scene file");
    const auto all = read_scenes(a.scenes);
    if (a.index < 0 || a.index >= static_cast<int>(all.size())) {
      throw UsageError("--index outside the scene file");
    }
    scene = all[static_cast<std::size_t>(a.index)];
  } else {
    scene = generate_scene(static_cast<int>(cfg.integer("scene.n")),
                           occlusion_from_string(cfg.get("scene.occlusion")),
                           derive_seed(derive_seed(root_seed(cfg), "scene"), std::uint64_t{0}),
                           object_set(cfg, "scene.object_set"));
  }
  SceneOverlay overlay;
  const auto masks = segment(scene);
  if (!a.params.empty()) {
    require_file(a.params, "parameter checkpoint");
    const SelectorParameters params = load_checkpoint(a.params);
    if (!masks.empty()) {
      const SelectorOutput out = forward(params, featurize(scene, masks, 0, cfg.reward().horizon));
      for (std::size_t i = 0; i < masks.size(); ++i) overlay.probabilities[*masks[i].object_id] = out.probabilities[i];
    }
  }
  render_scene(scene, a.out, overlay);
  if (!a.maps_prefix.empty()) {
    const int id = a.object >= 0 ? a.object : scene.target_id;
    scene.object(id);
    const SegmentMask mask = object_mask(scene, id);
    if (mask.cells.empty()) throw UsageError("object " + std::to_string(id) + " is not visible");
    write_grasp_maps(grasp_quality_maps(render_heightmap(scene), mask), a.maps_prefix);
  }
  std::cout << "rendered " << scene.objects.size() << " objects -> " << a.out << '\n';
}

struct ReplayArgs {
  std::string episodes;
  int index = 0;
  std::string out_dir = "replay";
};

void run_replay(const RunConfig&, const ReplayArgs& a) {
  require_file(a.episodes, "episode file");
  const auto all = read_episodes(a.episodes);
  if (a.index < 0 || a.index >= static_cast<int>(all.size())) {
    throw UsageError("--index outside the episode file");
  }
  const EpisodeRecord& ep = all[static_cast<std::size_t>(a.index)];
  fs::create_directories(a.out_dir);
  Scene scene = ep.initial;
  char name[32];
  for (std::size_t k = 0; k < ep.steps.size(); ++k) {
    const StepRecord& st = ep.steps[k];
    SceneOverlay overlay;
    overlay.selected_id = st.selected_id;
    const auto masks = segment(scene);
    for (std::size_t i = 0; i < st.probabilities.size() && i < masks.size(); ++i) {
      overlay.probabilities[*masks[i].object_id] = st.probabilities[i];
    }
    std::ostringstream cap;
    cap << "step " << k << "  object " << st.selected_id << "  reward " << fmt(st.reward)
        << (st.success ? "  grasped" : "");
    overlay.caption = cap.str();
    std::snprintf(name, sizeof name, "step_%03zu.svg", k);
    render_scene(scene, (fs::path(a.out_dir) / name).string(), overlay);
    if (st.source != PlanSource::kNone && scene.find(st.selected_id) != nullptr) {
      scene = execute_push_grasp(scene, st.action, st.selected_id).new_scene;
    }
  }
  SceneOverlay last;
  last.caption = ep.success ? "target retrieved" : "target not retrieved";
  std::snprintf(name, sizeof name, "step_%03zu.svg", ep.steps.size());
  if (scene.find(scene.target_id) == nullptr) scene.target_id = -1;
  render_scene(scene, (fs::path(a.out_dir) / name).string(), last);
  std::cout << "replayed " << ep.steps.size() << " steps -> " << a.out_dir << '\n';
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"unveiler: occluded-target retrieval planning on a layered tabletop"};
  app.require_subcommand(1);
  app.name("unveiler");

  std::deque<Common> commons;
  std::function<void()> action;
  auto sub = [&](const std::string& name, const std::string& doc) {
    CLI::App* s = app.add_subcommand(name, doc);
    commons.emplace_back();
    commons.back().attach(s);
    return std::make_pair(s, &commons.back());
  };

  GenArgs gen;
  {
    auto [s, c] = sub("gen", "generate scenes into a JSON-lines file");
    c->bind(s, "--n", "scene.n", "objects per scene");
    c->bind(s, "--occlusion", "scene.occlusion", "partial or full");
    c->bind(s, "--count", "scene.count", "number of scenes");
    c->bind(s, "--object-set", "scene.object_set", "all, seen or unseen");
    s->add_option("--out", gen.out, "output file")->required();
    s->callback([&, c = c] { action = [&, c] { run_gen(c->resolve(), gen); }; });
  }
  DemoArgs demo;
  {
    auto [s, c] = sub("demo", "collect heuristic demonstrations");
    c->bind(s, "--episodes", "demo.episodes", "episodes to run");
    c->bind(s, "--min-objects", "demo.min_objects", "smallest scene");
    c->bind(s, "--max-objects", "demo.max_objects", "largest scene");
    c->bind(s, "--keep-failed", "demo.keep_failed", "true keeps failed episodes");
    c->bind(s, "--features", "demo.features", "full or impoverished");
    s->add_option("--out", demo.out, "output file")->required();
    s->callback([&, c = c] { action = [&, c] { run_demo(c->resolve(), demo); }; });
  }
  TrainIlArgs il;
  {
    auto [s, c] = sub("train-il", "behavior cloning on demonstrations");
    s->add_option("--demos", il.demos, "demonstration file")->required();
    s->add_option("--out", il.out, "checkpoint to write")->required();
    s->add_option("--log", il.log, "per-epoch loss CSV (default <out>.loss.csv)");
    c->bind(s, "--epochs", "il.epochs", "passes over the data");
    c->bind(s, "--lr", "il.lr", "learning rate");
    c->bind(s, "--batch", "il.batch", "minibatch size");
    s->callback([&, c = c] { action = [&, c] { run_train_il(c->resolve(), il); }; });
  }
  TrainPpoArgs ppo;
  {
    auto [s, c] = sub("train-ppo", "PPO fine-tuning");
    s->add_option("--init", ppo.init, "starting checkpoint (default: fresh init)");
    s->add_option("--out", ppo.out, "final checkpoint")->required();
    s->add_option("--metrics", ppo.metrics, "per-wave CSV (default <out>.metrics.csv)");
    s->add_option("--checkpoint-dir", ppo.checkpoint_dir, "write a checkpoint after every wave");
    c->bind(s, "--steps", "ppo.total_steps", "transitions to collect");
    s->callback([&, c = c] { action = [&, c] { run_train_ppo(c->resolve(), ppo); }; });
  }
  EvalArgs ev;
  {
    auto [s, c] = sub("eval", "evaluate a policy on the density x occlusion grid");
    s->add_option("--policy", ev.policy, "random-valid, nearest-to-target, heuristic, il, ppo, "
                                         "multi-shot, impoverished");
    s->add_option("--params", ev.params, "checkpoint for selector policies");
    s->add_option("--out", ev.out, "metrics CSV");
    s->add_option("--episodes-out", ev.episodes_out, "episode records (JSON lines)");
    c->bind(s, "--grid", "eval.grid", "'default' or bins like 2-6,6-9");
    c->bind(s, "--episodes", "eval.episodes", "episodes per cell");
    s->callback([&, c = c] { action = [&, c] { run_eval(c->resolve(), ev); }; });
  }
  OracleArgs orc;
  {
    auto [s, c] = sub("oracle", "error-bound check against the brute-force oracle");
    s->add_option("--policy", orc.policies, "policies to check (repeatable)")->delimiter(',');
    s->add_option("--params", orc.params, "checkpoint for selector policies");
    s->add_option("--out", orc.out, "bound reports (JSON lines)");
    c->bind(s, "--scenes", "bound.scenes", "number of scenes");
    c->bind(s, "--execution", "bound.execution", "physics or idealized");
    s->callback([&, c = c] { action = [&, c] { run_oracle(c->resolve(), orc); }; });
  }
  RenderArgs rend;
  {
    auto [s, c] = sub("render", "render a scene (SVG) and optionally its grasp maps (PGM)");
    s->add_option("--scenes", rend.scenes, "scene file; default generates from scene.* keys");
    s->add_option("--index", rend.index, "line of the scene file");
    s->add_option("--out", rend.out, "SVG path");
    s->add_option("--params", rend.params, "checkpoint; labels objects with probabilities");
    s->add_option("--maps", rend.maps_prefix, "prefix for 16 grasp-map PGMs");
    s->add_option("--object", rend.object, "object for --maps (default target)");
    c->bind(s, "--n", "scene.n", "objects when generating");
    c->bind(s, "--occlusion", "scene.occlusion", "occlusion when generating");
    s->callback([&, c = c] { action = [&, c] { run_render(c->resolve(), rend); }; });
  }
  ReplayArgs rep;
  {
    auto [s, c] = sub("replay", "render an episode record step by step");
    s->add_option("--episodes", rep.episodes, "episode file")->required();
    s->add_option("--index", rep.index, "line of the episode file");
    s->add_option("--out-dir", rep.out_dir, "directory for step_NNN.svg");
    s->callback([&, c = c] { action = [&, c] { run_replay(c->resolve(), rep); }; });
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  auto usage = [&](const std::string& reason) {
    std::cerr << "error: " << reason << '\n';
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  };
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return usage(e.what());
  }
  try {
    if (action) action();
  } catch (const UsageError& e) {
    return usage(e.what());
  } catch (const ConfigError& e) {
    return usage(e.what());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args);
}

}  // namespace unveiler::cli
