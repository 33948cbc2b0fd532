#include "unveiler/persistence.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace unveiler {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PersistenceError("cannot write " + path);
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PersistenceError("cannot read " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

json parse(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw PersistenceError("malformed " + what + ": " + e.what());
  }
}

json scene_json(const Scene& s) {
  json objs = json::array();
  for (const auto& o : s.objects) {
    objs.push_back({{"id", o.id}, {"x", o.center.x}, {"y", o.center.y}, {"radius", o.radius},
                    {"height", o.height}, {"layer", o.layer}});
  }
  return {{"seed", s.seed},
          {"rng_state", s.rng_state},
          {"workspace",
           {{"side_length", s.workspace.side_length},
            {"grid_resolution", s.workspace.grid_resolution}}},
          {"target_id", s.target_id},
          {"objects", objs}};
}

Scene scene_from_json(const json& j) {
  try {
    Scene s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.rng_state = j.at("rng_state").get<std::uint64_t>();
    s.workspace.side_length = j.at("workspace").at("side_length").get<double>();
    s.workspace.grid_resolution = j.at("workspace").at("grid_resolution").get<int>();
    s.target_id = j.at("target_id").get<int>();
    for (const auto& o : j.at("objects")) {
      s.objects.push_back({o.at("id").get<int>(),
                           {o.at("x").get<double>(), o.at("y").get<double>()},
                           o.at("radius").get<double>(),
                           o.at("height").get<double>(),
                           o.at("layer").get<int>()});
    }
    std::sort(s.objects.begin(), s.objects.end(),
              [](const ObjectInstance& a, const ObjectInstance& b) { return a.id < b.id; });
    if (const std::string why = validate(s); !why.empty()) {
      throw PersistenceError("invalid scene: " + why);
    }
    return s;
  } catch (const json::exception& e) {
    throw PersistenceError(std::string("bad scene record: ") + e.what());
  }
}

template <std::size_t N>
json array_json(const std::array<double, N>& a) {
  return json(std::vector<double>(a.begin(), a.end()));
}

template <std::size_t N>
std::array<double, N> array_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != N) throw PersistenceError("feature vector has the wrong length");
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

json observation_json(const Observation& o) {
  json tokens = json::array();
  for (const auto& t : o.tokens) tokens.push_back(array_json(t));
  return {{"tokens", tokens},
          {"target", array_json(o.target)},
          {"scene", array_json(o.scene)},
          {"valid", std::vector<int>(o.valid.begin(), o.valid.end())}};
}

Observation observation_from(const json& j) {
  Observation o;
  for (const auto& t : j.at("tokens")) o.tokens.push_back(array_from<kTokenFeatures>(t));
  o.target = array_from<kTokenFeatures>(j.at("target"));
  o.scene = array_from<kSceneFeatures>(j.at("scene"));
  for (int v : j.at("valid").get<std::vector<int>>()) o.valid.push_back(static_cast<std::uint8_t>(v != 0));
  if (o.valid.size() != o.tokens.size()) throw PersistenceError("valid mask length mismatch");
  return o;
}

json draw_json(const SceneDraw& d) {
  return {{"n_objects", d.n_objects},
          {"occlusion", to_string(d.occlusion)},
          {"scene_seed", d.scene_seed}};
}

SceneDraw draw_from(const json& j) {
  return {j.at("n_objects").get<int>(), occlusion_from_string(j.at("occlusion").get<std::string>()),
          j.at("scene_seed").get<std::uint64_t>()};
}

json action_json(const PushGraspAction& a) {
  return {{"x", a.position.x}, {"y", a.position.y}, {"theta_bin", a.theta_bin},
          {"aperture", a.aperture}};
}

PushGraspAction action_from(const json& j) {
  return {{j.at("x").get<double>(), j.at("y").get<double>()}, j.at("theta_bin").get<int>(),
          j.at("aperture").get<double>()};
}

const char* source_name(PlanSource s) {
  switch (s) {
    case PlanSource::kPlanner:
      return "planner";
    case PlanSource::kSampler:
      return "sampler";
    case PlanSource::kNone:
      break;
  }
  return "none";
}

PlanSource source_from(const std::string& s) {
  if (s == "planner") return PlanSource::kPlanner;
  if (s == "sampler") return PlanSource::kSampler;
  if (s == "none") return PlanSource::kNone;
  throw PersistenceError("unknown plan source " + s);
}

}  // namespace

std::string scene_to_line(const Scene& scene) { return scene_json(scene).dump(); }

Scene scene_from_line(const std::string& line) { return scene_from_json(parse(line, "scene")); }

void write_scenes(const std::string& path, const std::vector<Scene>& scenes) {
  auto out = open_out(path);
  for (const auto& s : scenes) out << scene_to_line(s) << '\n';
}

std::vector<Scene> read_scenes(const std::string& path) {
  std::vector<Scene> out;
  for (const auto& line : read_lines(path)) out.push_back(scene_from_line(line));
  return out;
}

void write_demos(const std::string& path, const DemoDataset& data) {
  auto out = open_out(path);
  json eps = json::array();
  for (const auto& e : data.episodes) {
    eps.push_back({{"draw", draw_json(e.draw)}, {"success", e.success}, {"steps", e.steps}});
  }
  out << json{{"kind", "demo-header"},
              {"requested", data.requested},
              {"generation_failures", data.generation_failures},
              {"pairs", data.pairs.size()},
              {"episodes", eps}}
             .dump()
      << '\n';
  for (const auto& p : data.pairs) {
    json j = observation_json(p.observation);
    j["kind"] = "pair";
    j["episode"] = p.episode;
    j["label"] = p.label;
    out << j.dump() << '\n';
  }
}

DemoDataset read_demos(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw PersistenceError("empty demo file " + path);
  DemoDataset d;
  try {
    const json head = parse(lines[0], "demo header");
    if (head.at("kind") != "demo-header") throw PersistenceError("missing demo header");
    d.requested = head.at("requested").get<int>();
    d.generation_failures = head.at("generation_failures").get<int>();
    for (const auto& e : head.at("episodes")) {
      d.episodes.push_back(
          {draw_from(e.at("draw")), e.at("success").get<bool>(), e.at("steps").get<int>()});
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const json j = parse(lines[i], "demo pair");
      DemoPair p{observation_from(j), j.at("label").get<std::size_t>(), j.at("episode").get<int>()};
      if (p.label >= p.observation.tokens.size()) throw PersistenceError("demo label out of range");
      d.pairs.push_back(std::move(p));
    }
    if (d.pairs.size() != head.at("pairs").get<std::size_t>()) {
      throw PersistenceError("demo file truncated");
    }
  } catch (const json::exception& e) {
    throw PersistenceError(std::string("bad demo record: ") + e.what());
  }
  return d;
}

void write_episodes(const std::string& path, const std::vector<EpisodeRecord>& episodes) {
  auto out = open_out(path);
  for (const auto& e : episodes) {
    json steps = json::array();
    for (const auto& s : e.steps) {
      steps.push_back({{"index", s.index},
                       {"selected_id", s.selected_id},
                       {"masks", s.masks},
                       {"target_visible", s.target_visible},
                       {"action", action_json(s.action)},
                       {"source", source_name(s.source)},
                       {"grasped_ids", s.grasped_ids},
                       {"stable", s.stable},
                       {"success", s.success},
                       {"reward", s.reward},
                       {"probabilities", s.probabilities}});
    }
    out << json{{"policy", e.policy},
                {"seed", e.seed},
                {"draw", draw_json(e.draw)},
                {"success", e.success},
                {"step_count", e.step_count()},
                {"scene", scene_json(e.initial)},
                {"steps", steps}}
               .dump()
        << '\n';
  }
}

std::vector<EpisodeRecord> read_episodes(const std::string& path) {
  std::vector<EpisodeRecord> out;
  for (const auto& line : read_lines(path)) {
    const json j = parse(line, "episode");
    try {
      EpisodeRecord e;
      e.policy = j.at("policy").get<std::string>();
      e.seed = j.at("seed").get<std::uint64_t>();
      e.draw = draw_from(j.at("draw"));
      e.success = j.at("success").get<bool>();
      e.initial = scene_from_json(j.at("scene"));
      for (const auto& s : j.at("steps")) {
        StepRecord r;
        r.index = s.at("index").get<std::size_t>();
        r.selected_id = s.at("selected_id").get<int>();
        r.masks = s.at("masks").get<int>();
        r.target_visible = s.at("target_visible").get<double>();
        r.action = action_from(s.at("action"));
        r.source = source_from(s.at("source").get<std::string>());
        r.grasped_ids = s.at("grasped_ids").get<std::vector<int>>();
        r.stable = s.at("stable").get<bool>();
        r.success = s.at("success").get<bool>();
        r.reward = s.at("reward").get<double>();
        r.probabilities = s.at("probabilities").get<std::vector<double>>();
        e.steps.push_back(std::move(r));
      }
      out.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw PersistenceError(std::string("bad episode record: ") + ex.what());
    }
  }
  return out;
}

std::string bound_report_to_line(const BoundReport& r) {
  return json{{"policy", r.policy},
              {"scenes", r.scenes},
              {"horizon", r.horizon},
              {"epsilon_sre", r.epsilon_sre},
              {"epsilon_exec", r.epsilon_exec},
              {"delta", r.delta},
              {"gap", r.gap},
              {"bound", r.bound},
              {"holds", r.holds},
              {"decisions", r.decisions},
              {"optimal_decisions", r.optimal_decisions},
              {"exec_failures", r.exec_failures}}
      .dump();
}

void write_bound_reports(const std::string& path, const std::vector<BoundReport>& reports) {
  auto out = open_out(path);
  for (const auto& r : reports) out << bound_report_to_line(r) << '\n';
}

void save_checkpoint(const std::string& path, const SelectorParameters& params) {
  json blocks = json::array();
  for (const auto& e : parameter_layout()) {
    const auto* p = params.values.data() + e.offset;
    blocks.push_back({{"name", e.name},
                      {"rows", e.rows},
                      {"cols", e.cols},
                      {"data", std::vector<double>(p, p + e.size())}});
  }
  auto out = open_out(path);
  out << json{{"format", "unveiler-selector"}, {"version", kCheckpointVersion}, {"blocks", blocks}}
             .dump()
      << '\n';
}

SelectorParameters load_checkpoint(const std::string& path) {
  const json j = parse(read_text(path), "checkpoint");
  try {
    if (j.at("format") != "unveiler-selector") throw PersistenceError("not a selector checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw PersistenceError("unsupported checkpoint version");
    }
    const auto& layout = parameter_layout();
    const auto& blocks = j.at("blocks");
    if (blocks.size() != layout.size()) throw PersistenceError("checkpoint block count mismatch");
    SelectorParameters p;
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const auto& b = blocks[i];
      const auto& e = layout[i];
      if (b.at("name") != e.name || b.at("rows").get<int>() != e.rows ||
          b.at("cols").get<int>() != e.cols) {
        throw PersistenceError("checkpoint shape mismatch at block " + e.name);
      }
      const auto data = b.at("data").get<std::vector<double>>();
      if (data.size() != e.size()) throw PersistenceError("checkpoint data size mismatch at " + e.name);
      std::copy(data.begin(), data.end(), p.values.begin() + static_cast<std::ptrdiff_t>(e.offset));
    }
    return p;
  } catch (const json::exception& e) {
    throw PersistenceError(std::string("bad checkpoint: ") + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PersistenceError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace unveiler
