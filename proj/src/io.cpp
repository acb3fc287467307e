#include "arpo/io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace arpo {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void line_error(int line, const std::string& what) {
  throw InputError("line " + std::to_string(line) + ": " + what);
}

void require_record_keys(const json& obj, int line) {
  static const std::vector<std::string> allowed = {
      "prompt_id", "domain", "task_kind", "response", "ground_truth", "kl", "ratio"};
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      line_error(line, "unknown record key '" + key + "'");
    }
  }
}

std::string get_record_string(const json& obj, const char* key, int line) {
  if (!obj.contains(key)) line_error(line, std::string("missing key '") + key + "'");
  if (!obj[key].is_string()) line_error(line, std::string("key '") + key + "' must be a string");
  return obj[key].get<std::string>();
}

char parse_letter(const json& v, int line, const char* where) {
  if (!v.is_string() || v.get<std::string>().size() != 1) {
    line_error(line, std::string(where) + " must be a single-letter string");
  }
  return v.get<std::string>()[0];
}

// The ground_truth object must carry exactly the tag its kind expects.
GroundTruth ground_truth_from_json(const json& gt, TaskKind kind, int line) {
  if (!gt.is_object()) line_error(line, "ground_truth must be an object");
  const auto expect_only = [&](const char* tag) {
    for (const auto& [key, value] : gt.items()) {
      (void)value;
      if (key != tag) {
        line_error(line, "ground_truth for " + std::string(to_string(kind)) +
                             " allows only '" + tag + "', got '" + key + "'");
      }
    }
    if (!gt.contains(tag)) {
      line_error(line, "ground_truth for " + std::string(to_string(kind)) +
                           " requires '" + tag + "'");
    }
  };
  try {
    switch (kind) {
      case TaskKind::SingleChoice: {
        expect_only("choice");
        return GroundTruth::choice(parse_letter(gt["choice"], line, "'choice'"));
      }
      case TaskKind::MultiChoice: {
        expect_only("choices");
        if (!gt["choices"].is_array()) line_error(line, "'choices' must be an array");
        LetterSet set;
        for (const auto& v : gt["choices"]) set.insert(parse_letter(v, line, "'choices' entry"));
        return GroundTruth::choices(std::move(set));
      }
      case TaskKind::Counting: {
        expect_only("count");
        if (!gt["count"].is_number_integer()) line_error(line, "'count' must be an integer");
        return GroundTruth::count(gt["count"].get<long long>());
      }
      case TaskKind::BBox:
      case TaskKind::Boundary: {
        expect_only("box");
        if (!gt["box"].is_array() || gt["box"].size() != 4) {
          line_error(line, "'box' must be an array of 4 numbers");
        }
        std::array<double, 4> a{};
        for (std::size_t i = 0; i < 4; ++i) {
          if (!gt["box"][i].is_number()) line_error(line, "'box' must be an array of 4 numbers");
          a[i] = gt["box"][i].get<double>();
        }
        return GroundTruth::box(Box2D::from_array(a));
      }
      case TaskKind::OpenEnded: {
        expect_only("text");
        if (!gt["text"].is_string()) line_error(line, "'text' must be a string");
        return GroundTruth::text(gt["text"].get<std::string>());
      }
      case TaskKind::OrdinalShortAnswer: {
        expect_only("ordinal");
        const json& o = gt["ordinal"];
        if (!o.is_object()) line_error(line, "'ordinal' must be an object");
        for (const auto& [key, value] : o.items()) {
          (void)value;
          if (key != "index" && key != "scale") {
            line_error(line, "unknown 'ordinal' key '" + key + "'");
          }
        }
        if (!o.contains("index") || !o["index"].is_number_integer() ||
            !o.contains("scale") || !o["scale"].is_number_integer()) {
          line_error(line, "'ordinal' requires integer 'index' and 'scale'");
        }
        return GroundTruth::ordinal(o["index"].get<long long>(), o["scale"].get<int>());
      }
      case TaskKind::TripletShortAnswer: {
        expect_only("triplets");
        if (!gt["triplets"].is_array()) line_error(line, "'triplets' must be an array");
        TripletSet set;
        for (const auto& v : gt["triplets"]) {
          if (!v.is_array() || v.size() != 3 || !v[0].is_string() ||
              !v[1].is_string() || !v[2].is_string()) {
            line_error(line, "'triplets' entries must be [entity, attribute, value]");
          }
          set.insert(Triplet{v[0].get<std::string>(), v[1].get<std::string>(),
                             v[2].get<std::string>()});
        }
        return GroundTruth::triplets(std::move(set));
      }
    }
  } catch (const std::invalid_argument& e) {
    line_error(line, e.what());
  }
  line_error(line, "unhandled task kind");
}

void check_config_keys(const json& obj, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end()) {
      throw ConfigError("unknown config key '" + key + "' in " + where);
    }
  }
}

const json& section(const json& j, const char* name) {
  const json& s = j[name];
  if (!s.is_object()) throw ConfigError(std::string("config section '") + name + "' must be an object");
  return s;
}

double get_number(const json& obj, const char* key, const std::string& where) {
  if (!obj[key].is_number()) {
    throw ConfigError("config key '" + where + "." + key + "' must be a number");
  }
  return obj[key].get<double>();
}

long long get_integer(const json& obj, const char* key, const std::string& where) {
  if (!obj[key].is_number_integer()) {
    throw ConfigError("config key '" + where + "." + key + "' must be an integer");
  }
  return obj[key].get<long long>();
}

bool get_boolean(const json& obj, const char* key, const std::string& where) {
  if (!obj[key].is_boolean()) {
    throw ConfigError("config key '" + where + "." + key + "' must be a boolean");
  }
  return obj[key].get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
  if (!obj[key].is_string()) {
    throw ConfigError("config key '" + where + "." + key + "' must be a string");
  }
  return obj[key].get<std::string>();
}

BBoxRewardVariant variant_from_string(const std::string& s, const std::string& where) {
  if (s == "plain") return BBoxRewardVariant::Plain;
  if (s == "bonus") return BBoxRewardVariant::Bonus;
  throw ConfigError("config key '" + where + "' must be \"plain\" or \"bonus\"");
}

void overlay_pipeline(const json& p, PipelineConfig& cfg) {
  check_config_keys(p, {"grpo_eps", "skip_threshold", "temperature_floor",
                        "use_domain_temperature", "use_cluster_temperature",
                        "curriculum_enabled", "curriculum", "dampening_enabled",
                        "dampening", "renorm_per_domain", "kmeans"},
                    "pipeline");
  if (p.contains("grpo_eps")) cfg.grpo_eps = get_number(p, "grpo_eps", "pipeline");
  if (p.contains("skip_threshold")) cfg.skip_threshold = get_number(p, "skip_threshold", "pipeline");
  if (p.contains("temperature_floor")) cfg.temperature_floor = get_number(p, "temperature_floor", "pipeline");
  if (p.contains("use_domain_temperature")) cfg.use_domain_temperature = get_boolean(p, "use_domain_temperature", "pipeline");
  if (p.contains("use_cluster_temperature")) cfg.use_cluster_temperature = get_boolean(p, "use_cluster_temperature", "pipeline");
  if (p.contains("curriculum_enabled")) cfg.curriculum_enabled = get_boolean(p, "curriculum_enabled", "pipeline");
  if (p.contains("curriculum")) {
    const json& c = p["curriculum"];
    if (!c.is_object()) throw ConfigError("config key 'pipeline.curriculum' must be an object");
    check_config_keys(c, {"total_steps", "exponent"}, "pipeline.curriculum");
    if (c.contains("total_steps")) cfg.curriculum.total_steps = get_integer(c, "total_steps", "pipeline.curriculum");
    if (c.contains("exponent")) cfg.curriculum.exponent = get_number(c, "exponent", "pipeline.curriculum");
  }
  if (p.contains("dampening_enabled")) cfg.dampening_enabled = get_boolean(p, "dampening_enabled", "pipeline");
  if (p.contains("renorm_per_domain")) cfg.renorm_per_domain = get_boolean(p, "renorm_per_domain", "pipeline");
  if (p.contains("dampening")) {
    const json& d = p["dampening"];
    if (!d.is_object()) throw ConfigError("config key 'pipeline.dampening' must be an object");
    check_config_keys(d, {"percentile", "floor"}, "pipeline.dampening");
    if (d.contains("percentile")) cfg.dampening.percentile = get_number(d, "percentile", "pipeline.dampening");
    if (d.contains("floor")) cfg.dampening.floor = get_number(d, "floor", "pipeline.dampening");
  }
  if (p.contains("kmeans")) {
    const json& k = p["kmeans"];
    if (!k.is_object()) throw ConfigError("config key 'pipeline.kmeans' must be an object");
    check_config_keys(k, {"k", "seed", "max_iter", "tol", "restarts"}, "pipeline.kmeans");
    if (k.contains("k")) cfg.kmeans.k = static_cast<int>(get_integer(k, "k", "pipeline.kmeans"));
    if (k.contains("seed")) cfg.kmeans.seed = static_cast<std::uint64_t>(get_integer(k, "seed", "pipeline.kmeans"));
    if (k.contains("max_iter")) cfg.kmeans.max_iter = static_cast<int>(get_integer(k, "max_iter", "pipeline.kmeans"));
    if (k.contains("tol")) cfg.kmeans.tol = get_number(k, "tol", "pipeline.kmeans");
    if (k.contains("restarts")) cfg.kmeans.restarts = static_cast<int>(get_integer(k, "restarts", "pipeline.kmeans"));
  }
}

}  // namespace

std::vector<RolloutRecord> parse_rollout_jsonl(std::istream& in) {
  std::vector<RolloutRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      line_error(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) line_error(line_no, "record must be a JSON object");
    require_record_keys(obj, line_no);

    RolloutRecord rec;
    rec.line = line_no;
    rec.prompt_id = get_record_string(obj, "prompt_id", line_no);
    const std::string domain_s = get_record_string(obj, "domain", line_no);
    const auto domain = domain_from_string(domain_s);
    if (!domain) line_error(line_no, "unknown domain '" + domain_s + "'");
    rec.domain = *domain;
    const std::string kind_s = get_record_string(obj, "task_kind", line_no);
    const auto kind = task_kind_from_string(kind_s);
    if (!kind) line_error(line_no, "unknown task_kind '" + kind_s + "'");
    rec.kind = *kind;
    rec.response = get_record_string(obj, "response", line_no);
    if (!obj.contains("ground_truth")) line_error(line_no, "missing key 'ground_truth'");
    rec.ground_truth = ground_truth_from_json(obj["ground_truth"], rec.kind, line_no);
    if (obj.contains("kl")) {
      if (!obj["kl"].is_number()) line_error(line_no, "key 'kl' must be a number");
      rec.kl = obj["kl"].get<double>();
    }
    if (obj.contains("ratio")) {
      if (!obj["ratio"].is_number()) line_error(line_no, "key 'ratio' must be a number");
      rec.ratio = obj["ratio"].get<double>();
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<RolloutRecord> load_rollout_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file: " + path);
  return parse_rollout_jsonl(in);
}

std::vector<RolloutGroup> group_rollouts(const std::vector<RolloutRecord>& records,
                                         const RewardWeights& weights,
                                         const RewardConfig& reward_cfg) {
  std::vector<RolloutGroup> groups;
  std::vector<std::string> seen;
  for (const RolloutRecord& rec : records) {
    if (groups.empty() || groups.back().prompt_id != rec.prompt_id) {
      if (std::find(seen.begin(), seen.end(), rec.prompt_id) != seen.end()) {
        throw InputError("prompt '" + rec.prompt_id + "': records are not contiguous");
      }
      seen.push_back(rec.prompt_id);
      RolloutGroup g;
      g.prompt_id = rec.prompt_id;
      g.domain = rec.domain;
      groups.push_back(std::move(g));
    }
    RolloutGroup& g = groups.back();
    if (g.domain != rec.domain) {
      throw InputError("prompt '" + rec.prompt_id + "': inconsistent domain within group");
    }
    const RewardBreakdown b =
        score_rollout(rec.response, *rec.ground_truth, rec.kind, weights, reward_cfg);
    g.rewards.push_back(b.total);
    g.kl.push_back(std::max(rec.kl, 0.0));
  }
  for (const RolloutGroup& g : groups) {
    if (g.rewards.size() < 2) {
      throw InputError("prompt '" + g.prompt_id + "': group size must be >= 2");
    }
    if (g.rewards.size() != groups.front().rewards.size()) {
      throw InputError("prompt '" + g.prompt_id + "': ragged group size " +
                       std::to_string(g.rewards.size()) + " (expected " +
                       std::to_string(groups.front().rewards.size()) + ")");
    }
  }
  return groups;
}

AppConfig default_config() {
  AppConfig cfg;
  cfg.pipeline.curriculum.total_steps = cfg.train.total_steps;
  // The library default step size saturates every strategy on the bundled
  // environment; this rate keeps the strategies distinguishable there.
  cfg.train.learning_rate = 0.003;
  cfg.train.pipeline = cfg.pipeline;
  cfg.env.counts = {
      {CognitiveDomain::ObjectUnderstanding, 70},
      {CognitiveDomain::SceneUnderstanding, 15},
      {CognitiveDomain::SpatialPerception, 8},
      {CognitiveDomain::SceneReasoning, 7},
  };
  cfg.strategies = {Strategy::GRPO, Strategy::ARPO};
  cfg.seeds = {1, 2, 3, 4, 5};
  return cfg;
}

AppConfig parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  check_config_keys(j, {"pipeline", "train", "env", "weights", "reward", "strategies", "seeds"},
                    "the top level");

  AppConfig cfg = default_config();
  bool curriculum_steps_set = false;

  if (j.contains("pipeline")) {
    const json& p = section(j, "pipeline");
    overlay_pipeline(p, cfg.pipeline);
    curriculum_steps_set =
        p.contains("curriculum") && p["curriculum"].is_object() &&
        p["curriculum"].contains("total_steps");
  }
  if (j.contains("train")) {
    const json& t = section(j, "train");
    check_config_keys(t, {"group_size", "clip_eps", "beta", "sample_temperature",
                          "learning_rate", "total_steps", "seed", "strategy"},
                      "train");
    if (t.contains("group_size")) cfg.train.group_size = static_cast<int>(get_integer(t, "group_size", "train"));
    if (t.contains("clip_eps")) cfg.train.clip_eps = get_number(t, "clip_eps", "train");
    if (t.contains("beta")) cfg.train.beta = get_number(t, "beta", "train");
    if (t.contains("sample_temperature")) cfg.train.sample_temperature = get_number(t, "sample_temperature", "train");
    if (t.contains("learning_rate")) cfg.train.learning_rate = get_number(t, "learning_rate", "train");
    if (t.contains("total_steps")) cfg.train.total_steps = get_integer(t, "total_steps", "train");
    if (t.contains("seed")) cfg.train.seed = static_cast<std::uint64_t>(get_integer(t, "seed", "train"));
    if (t.contains("strategy")) {
      const std::string s = get_string(t, "strategy", "train");
      const auto strategy = strategy_from_string(s);
      if (!strategy) throw ConfigError("config key 'train.strategy': unknown strategy '" + s + "'");
      cfg.train.strategy = *strategy;
    }
  }
  if (j.contains("env")) {
    const json& e = section(j, "env");
    check_config_keys(e, {"counts", "action_count", "deceptive_fraction",
                          "hard_domain", "deceptive_logit", "seed"},
                      "env");
    if (e.contains("counts")) {
      if (!e["counts"].is_object()) throw ConfigError("config key 'env.counts' must be an object");
      cfg.env.counts.clear();
      for (const auto& [key, value] : e["counts"].items()) {
        const auto domain = domain_from_string(key);
        if (!domain) throw ConfigError("config key 'env.counts': unknown domain '" + key + "'");
        if (!value.is_number_integer()) {
          throw ConfigError("config key 'env.counts." + key + "' must be an integer");
        }
        cfg.env.counts[*domain] = value.get<int>();
      }
    }
    if (e.contains("action_count")) cfg.env.action_count = static_cast<int>(get_integer(e, "action_count", "env"));
    if (e.contains("deceptive_fraction")) cfg.env.deceptive_fraction = get_number(e, "deceptive_fraction", "env");
    if (e.contains("hard_domain")) {
      const std::string s = get_string(e, "hard_domain", "env");
      const auto domain = domain_from_string(s);
      if (!domain) throw ConfigError("config key 'env.hard_domain': unknown domain '" + s + "'");
      cfg.env.hard_domain = *domain;
    }
    if (e.contains("deceptive_logit")) cfg.env.deceptive_logit = get_number(e, "deceptive_logit", "env");
    if (e.contains("seed")) cfg.env.seed = static_cast<std::uint64_t>(get_integer(e, "seed", "env"));
  }
  if (j.contains("weights")) {
    const json& w = section(j, "weights");
    check_config_keys(w, {"task", "spatial", "fmt"}, "weights");
    if (w.contains("task")) cfg.weights.task = get_number(w, "task", "weights");
    if (w.contains("spatial")) cfg.weights.spatial = get_number(w, "spatial", "weights");
    if (w.contains("fmt")) cfg.weights.fmt = get_number(w, "fmt", "weights");
  }
  if (j.contains("reward")) {
    const json& r = section(j, "reward");
    check_config_keys(r, {"bbox_variant", "boundary_variant"}, "reward");
    if (r.contains("bbox_variant")) {
      cfg.reward.bbox_variant = variant_from_string(get_string(r, "bbox_variant", "reward"), "reward.bbox_variant");
    }
    if (r.contains("boundary_variant")) {
      cfg.reward.boundary_variant = variant_from_string(get_string(r, "boundary_variant", "reward"), "reward.boundary_variant");
    }
  }
  if (j.contains("strategies")) {
    if (!j["strategies"].is_array()) throw ConfigError("config key 'strategies' must be an array");
    cfg.strategies.clear();
    for (const auto& v : j["strategies"]) {
      if (!v.is_string()) throw ConfigError("config key 'strategies' entries must be strings");
      const auto strategy = strategy_from_string(v.get<std::string>());
      if (!strategy) {
        throw ConfigError("config key 'strategies': unknown strategy '" + v.get<std::string>() + "'");
      }
      cfg.strategies.push_back(*strategy);
    }
  }
  if (j.contains("seeds")) {
    if (!j["seeds"].is_array()) throw ConfigError("config key 'seeds' must be an array");
    cfg.seeds.clear();
    for (const auto& v : j["seeds"]) {
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError("config key 'seeds' entries must be non-negative integers");
      }
      cfg.seeds.push_back(static_cast<std::uint64_t>(v.get<long long>()));
    }
  }

  if (!curriculum_steps_set) cfg.pipeline.curriculum.total_steps = cfg.train.total_steps;
  cfg.train.pipeline = cfg.pipeline;
  return cfg;
}

AppConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_json(buf.str());
}

std::string config_to_json(const AppConfig& cfg) {
  json j;
  j["pipeline"] = {
      {"grpo_eps", cfg.pipeline.grpo_eps},
      {"skip_threshold", cfg.pipeline.skip_threshold},
      {"temperature_floor", cfg.pipeline.temperature_floor},
      {"use_domain_temperature", cfg.pipeline.use_domain_temperature},
      {"use_cluster_temperature", cfg.pipeline.use_cluster_temperature},
      {"curriculum_enabled", cfg.pipeline.curriculum_enabled},
      {"curriculum",
       {{"total_steps", cfg.pipeline.curriculum.total_steps},
        {"exponent", cfg.pipeline.curriculum.exponent}}},
      {"dampening_enabled", cfg.pipeline.dampening_enabled},
      {"dampening",
       {{"percentile", cfg.pipeline.dampening.percentile},
        {"floor", cfg.pipeline.dampening.floor}}},
      {"renorm_per_domain", cfg.pipeline.renorm_per_domain},
      {"kmeans",
       {{"k", cfg.pipeline.kmeans.k},
        {"seed", cfg.pipeline.kmeans.seed},
        {"max_iter", cfg.pipeline.kmeans.max_iter},
        {"tol", cfg.pipeline.kmeans.tol},
        {"restarts", cfg.pipeline.kmeans.restarts}}},
  };
  j["train"] = {
      {"group_size", cfg.train.group_size},
      {"clip_eps", cfg.train.clip_eps},
      {"beta", cfg.train.beta},
      {"sample_temperature", cfg.train.sample_temperature},
      {"learning_rate", cfg.train.learning_rate},
      {"total_steps", cfg.train.total_steps},
      {"seed", cfg.train.seed},
      {"strategy", to_string(cfg.train.strategy)},
  };
  json counts = json::object();
  for (const auto& [domain, count] : cfg.env.counts) {
    counts[to_string(domain)] = count;
  }
  j["env"] = {
      {"counts", counts},
      {"action_count", cfg.env.action_count},
      {"deceptive_fraction", cfg.env.deceptive_fraction},
      {"hard_domain", to_string(cfg.env.hard_domain)},
      {"deceptive_logit", cfg.env.deceptive_logit},
      {"seed", cfg.env.seed},
  };
  j["weights"] = {
      {"task", cfg.weights.task},
      {"spatial", cfg.weights.spatial},
      {"fmt", cfg.weights.fmt},
  };
  j["reward"] = {
      {"bbox_variant", cfg.reward.bbox_variant == BBoxRewardVariant::Bonus ? "bonus" : "plain"},
      {"boundary_variant", cfg.reward.boundary_variant == BBoxRewardVariant::Bonus ? "bonus" : "plain"},
  };
  json strategies = json::array();
  for (Strategy s : cfg.strategies) strategies.push_back(to_string(s));
  j["strategies"] = strategies;
  j["seeds"] = cfg.seeds;
  return j.dump(2);
}

std::string breakdown_to_jsonl_line(const RolloutRecord& rec, const RewardBreakdown& b) {
  json j;
  j["prompt_id"] = rec.prompt_id;
  j["domain"] = to_string(rec.domain);
  j["task_kind"] = to_string(rec.kind);
  j["task"] = b.task;
  j["spatial"] = b.spatial;
  j["fmt"] = b.fmt;
  j["total"] = b.total;
  return j.dump();
}

std::string advantage_record_to_jsonl_line(const AdvantageRecord& rec) {
  json j;
  j["prompt_id"] = rec.prompt_id;
  j["domain"] = to_string(rec.domain);
  j["index"] = rec.index;
  j["reward"] = rec.reward;
  j["a_grpo"] = rec.a_grpo;
  j["s_scaled"] = rec.s_scaled;
  j["m"] = rec.m;
  j["a_final"] = rec.a_final;
  return j.dump();
}

std::string skip_report_to_json(const SkipReport& report) {
  json j;
  j["groups_in"] = report.groups_in;
  j["groups_retained"] = report.groups_retained;
  j["skipped_prompt_ids"] = report.skipped_prompt_ids;
  return j.dump();
}

std::string metrics_to_csv(const RunMetrics& metrics) {
  std::string out = "step,domain,mean_reward,mean_abs_advantage,skipped\n";
  for (const StepMetrics& sm : metrics.steps) {
    for (std::size_t d = 0; d < kNumDomains; ++d) {
      if (sm.group_count[d] == 0) continue;
      out += std::to_string(sm.step);
      out += ',';
      out += to_string(static_cast<CognitiveDomain>(d));
      out += ',';
      out += fmt_double(sm.mean_reward[d]);
      out += ',';
      out += fmt_double(sm.mean_abs_advantage[d]);
      out += ',';
      out += std::to_string(sm.groups_skipped);
      out += '\n';
    }
  }
  return out;
}

std::string run_summary_to_json(Strategy strategy, std::uint64_t seed,
                                const RunMetrics& metrics) {
  json accuracy = json::object();
  json counts = json::object();
  for (std::size_t d = 0; d < kNumDomains; ++d) {
    if (metrics.domain_task_count[d] == 0) continue;
    const auto name = to_string(static_cast<CognitiveDomain>(d));
    accuracy[name] = metrics.final_accuracy[d];
    counts[name] = metrics.domain_task_count[d];
  }
  json j;
  j["tool_version"] = kToolVersion;
  j["strategy"] = to_string(strategy);
  j["seed"] = seed;
  j["steps"] = metrics.steps.size();
  j["final_accuracy"] = accuracy;
  j["domain_task_count"] = counts;
  j["final_mean_kl"] = metrics.final_mean_kl;
  return j.dump(2);
}

std::string comparison_to_json(const ComparisonReport& report) {
  json strategies = json::array();
  for (Strategy s : report.strategies) strategies.push_back(to_string(s));
  json cells = json::array();
  for (const StrategySeedResult& cell : report.cells) {
    json accuracy = json::object();
    for (std::size_t d = 0; d < kNumDomains; ++d) {
      accuracy[to_string(static_cast<CognitiveDomain>(d))] = cell.final_accuracy[d];
    }
    cells.push_back({{"strategy", to_string(cell.strategy)},
                     {"seed", cell.seed},
                     {"final_accuracy", accuracy}});
  }
  json minority_mean = json::object();
  for (std::size_t i = 0; i < report.strategies.size(); ++i) {
    minority_mean[to_string(report.strategies[i])] = report.minority_mean[i];
  }
  json wins = json::object();
  for (std::size_t i = 0; i < report.strategies.size(); ++i) {
    for (std::size_t k = 0; k < report.strategies.size(); ++k) {
      if (i == k) continue;
      wins[std::string(to_string(report.strategies[i])) + ">=" +
           to_string(report.strategies[k])] = report.minority_wins[i][k];
    }
  }
  json j;
  j["tool_version"] = kToolVersion;
  j["strategies"] = strategies;
  j["seeds"] = report.seeds;
  j["minority_domain"] = to_string(report.minority_domain);
  j["minority_mean_accuracy"] = minority_mean;
  j["minority_wins"] = wins;
  j["cells"] = cells;
  return j.dump(2);
}

void atomic_write_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write file: " + tmp.string());
    out << content;
    if (!out) throw InputError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw InputError("cannot rename " + tmp.string() + " to " + path);
}

}  // namespace arpo
