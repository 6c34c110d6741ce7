#include "step/harness/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace step::harness {

using train::ConfigError;

namespace {

enum class Kind { kString, kNumber, kCount, kBool, kSeeds };

struct Field {
  Kind kind;
  std::function<void(RunConfig&, const Json&)> set;
  std::function<Json(const RunConfig&)> get;
};

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::kString:
      return "a string";
    case Kind::kNumber:
      return "a number";
    case Kind::kCount:
      return "a non-negative integer";
    case Kind::kBool:
      return "true or false";
    case Kind::kSeeds:
      return "a non-negative integer, a list of them or a seed range string";
  }
  return "";
}

bool matches(Kind k, const Json& v) {
  switch (k) {
    case Kind::kString:
      return v.is_string();
    case Kind::kNumber:
      return v.is_number();
    case Kind::kCount:
      return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
    case Kind::kBool:
      return v.is_boolean();
    case Kind::kSeeds:
      if (v.is_string() || matches(Kind::kCount, v)) return true;
      if (!v.is_array() || v.empty()) return false;
      for (const Json& s : v) {
        if (!matches(Kind::kCount, s)) return false;
      }
      return true;
  }
  return false;
}

#define STEP_FIELD(section, key, kind, member)                                                    \
  {                                                                                               \
    section "." key, Field {                                                                      \
      kind, [](RunConfig& c, const Json& v) { v.get_to(c.member); }, [](const RunConfig& c) { \
        return Json(c.member);                                                                    \
      }                                                                                           \
    }                                                                                             \
  }

const std::map<std::string, Field>& schema() {
  static const std::map<std::string, Field> fields = {
      STEP_FIELD("run", "name", Kind::kString, name),
      STEP_FIELD("run", "out_dir", Kind::kString, out_dir),
      {"run.seeds", Field{Kind::kSeeds,
                          [](RunConfig& c, const Json& v) {
                            if (v.is_string()) {
                              c.seeds = parse_seed_list(v.get<std::string>());
                            } else if (v.is_array()) {
                              c.seeds = v.get<std::vector<std::uint64_t>>();
                            } else {
                              c.seeds = {v.get<std::uint64_t>()};
                            }
                          },
                          [](const RunConfig& c) { return Json(c.seeds); }}},
      STEP_FIELD("env", "id", Kind::kString, train.env.id),
      STEP_FIELD("env", "game", Kind::kString, train.env.game),
      STEP_FIELD("env", "game_file", Kind::kString, train.env.game_file),
      STEP_FIELD("env", "k", Kind::kNumber, train.env.k),
      STEP_FIELD("env", "horizon", Kind::kCount, train.env.horizon),
      STEP_FIELD("env", "gamma", Kind::kNumber, train.env.gamma),
      STEP_FIELD("env", "num_agents", Kind::kCount, train.env.num_agents),
      {"train.algorithm",
       Field{Kind::kString,
             [](RunConfig& c, const Json& v) { c.train.algorithm = train::parse_algorithm(v.get<std::string>()); },
             [](const RunConfig& c) { return Json(train::to_string(c.train.algorithm)); }}},
      STEP_FIELD("train", "max_agents", Kind::kCount, train.max_agents),
      STEP_FIELD("train", "gae_lambda", Kind::kNumber, train.gae_lambda),
      STEP_FIELD("train", "clip", Kind::kNumber, train.clip),
      STEP_FIELD("train", "value_clip", Kind::kNumber, train.value_clip),
      STEP_FIELD("train", "entropy_coef", Kind::kNumber, train.entropy_coef),
      STEP_FIELD("train", "beta", Kind::kNumber, train.beta),
      STEP_FIELD("train", "actor_lr", Kind::kNumber, train.actor_lr),
      STEP_FIELD("train", "critic_lr", Kind::kNumber, train.critic_lr),
      STEP_FIELD("train", "max_grad_norm", Kind::kNumber, train.max_grad_norm),
      STEP_FIELD("train", "reward_scale", Kind::kNumber, train.reward_scale),
      STEP_FIELD("train", "freeze_embeddings", Kind::kBool, train.freeze_embeddings),
      STEP_FIELD("train", "epochs", Kind::kCount, train.epochs),
      STEP_FIELD("train", "minibatch", Kind::kCount, train.minibatch),
      STEP_FIELD("train", "rollout", Kind::kCount, train.rollout),
      STEP_FIELD("train", "total_steps", Kind::kCount, train.total_steps),
      STEP_FIELD("train", "eval_interval", Kind::kCount, train.eval_interval),
      STEP_FIELD("train", "eval_episodes", Kind::kCount, train.eval_episodes),
      STEP_FIELD("train", "critic_hidden", Kind::kCount, train.critic_hidden),
  };
  return fields;
}

#undef STEP_FIELD

std::uint64_t parse_u64(std::string_view s, const std::string& whole) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty()) {
    throw ConfigError("invalid seed list '" + whole + "'");
  }
  return v;
}

Json penalty(double k) {
  return {{"run", {{"name", "penalty_k" + std::to_string(static_cast<long>(k))}, {"seeds", "0-19"}}},
          {"env", {{"id", "matrix"}, {"game", "penalty"}, {"k", k}}},
          {"train", {{"rollout", 250}, {"total_steps", 10000}, {"beta", 1.0}}}};
}

Json particle(std::size_t n) {
  return {{"run", {{"name", "particle_n" + std::to_string(n)}, {"seeds", "0-19"}}},
          {"env", {{"id", "particle"}, {"num_agents", n}}},
          {"train", {{"reward_scale", 0.1}, {"total_steps", 60000}, {"eval_interval", 5000}, {"beta", 1.0}}}};
}

}  // namespace

RunConfig parse_run_config(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object with run/env/train sections");
  RunConfig config;
  const auto& fields = schema();
  for (const auto& [section, body] : doc.items()) {
    if (section != "run" && section != "env" && section != "train") {
      throw ConfigError("unknown section '" + section + "' (expected run, env or train)");
    }
    if (!body.is_object()) throw ConfigError("section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      const std::string dotted = section + "." + key;
      const auto it = fields.find(dotted);
      if (it == fields.end()) throw ConfigError("unknown key '" + dotted + "'");
      if (!matches(it->second.kind, value)) {
        throw ConfigError("key '" + dotted + "' must be " + kind_name(it->second.kind) + ", got " + value.dump());
      }
      it->second.set(config, value);
    }
  }
  if (config.seeds.empty()) throw ConfigError("key 'run.seeds' must list at least one seed");
  config.train.validate();
  try {
    env::make_env(config.train.env);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("env: ") + e.what());
  }
  return config;
}

Json to_json(const RunConfig& config) {
  Json doc = Json::object();
  for (const auto& [dotted, field] : schema()) {
    const auto dot = dotted.find('.');
    doc[dotted.substr(0, dot)][dotted.substr(dot + 1)] = field.get(config);
  }
  return doc;
}

Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override '" + assignment + "' must look like section.key=value");
  }
  const std::string dotted = assignment.substr(0, eq);
  if (!schema().count(dotted)) throw ConfigError("unknown key '" + dotted + "'");
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  doc[dotted.substr(0, dot)][dotted.substr(dot + 1, eq - dot - 1)] = std::move(value);
}

std::vector<std::string> preset_names() {
  return {"penalty_k0", "penalty_k-25", "penalty_k-50", "penalty_k-75", "penalty_k-100", "mixing",
          "mixing_central", "merge", "particle_n2", "particle_n3", "particle_n4", "particle_n6"};
}

Json preset_document(const std::string& name) {
  for (double k : {0.0, -25.0, -50.0, -75.0, -100.0}) {
    if (name == "penalty_k" + std::to_string(static_cast<long>(k))) return penalty(k);
  }
  if (name == "mixing" || name == "mixing_central") {
    Json doc = {{"run", {{"name", name}, {"seeds", "0-19"}}},
                {"env", {{"id", "matrix"}, {"game", "mixing"}}},
                {"train", {{"rollout", 250}, {"total_steps", 10000}, {"beta", 1.0}}}};
    if (name == "mixing_central") doc["train"]["algorithm"] = "central-critic";
    return doc;
  }
  if (name == "merge") {
    return {{"run", {{"name", "merge"}, {"seeds", "0-19"}}},
            {"env", {{"id", "merge"}}},
            {"train", {{"total_steps", 10000}, {"eval_interval", 1000}, {"beta", 1.0}}}};
  }
  for (std::size_t n : {2, 3, 4, 6}) {
    if (name == "particle_n" + std::to_string(n)) return particle(n);
  }
  throw ConfigError("unknown preset '" + name + "'");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream parts(text);
  std::string part;
  while (std::getline(parts, part, ',')) {
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      seeds.push_back(parse_u64(part, text));
      continue;
    }
    const std::uint64_t lo = parse_u64(std::string_view(part).substr(0, dash), text);
    const std::uint64_t hi = parse_u64(std::string_view(part).substr(dash + 1), text);
    if (hi < lo || hi - lo > 100000) throw ConfigError("invalid seed range '" + part + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

std::string config_hash(const RunConfig& config) {
  Json doc = to_json(config);
  doc["run"].erase("seeds");
  doc["run"].erase("out_dir");
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace step::harness
