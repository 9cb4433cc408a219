/*
 * Copyright 2026 The drfl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "drfl/cli/config_io.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <vector>

#include "drfl/errors.hpp"

namespace drfl::cli {

using nlohmann::json;
using orchestrator::ClassProfile;

namespace {

constexpr std::array<const char*, orchestrator::kDeviceClassCount> kClassKeys{"small", "medium",
                                                                             "large"};

class Section {
 public:
  Section(const json* obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (obj_ != nullptr && !obj_->is_object()) {
      throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
    }
  }

  std::string key(const char* name) const { return path_.empty() ? name : path_ + "." + name; }

  const json* find(const char* name) {
    seen_.insert(name);
    if (obj_ == nullptr) return nullptr;
    auto it = obj_->find(name);
    return it == obj_->end() ? nullptr : &*it;
  }

  Section child(const char* name) { return Section(find(name), key(name)); }

  void get(const char* name, double& out) {
    if (const json* v = find(name)) {
      if (!v->is_number()) throw ConfigError(key(name), "must be a number");
      out = v->get<double>();
    }
  }

  void get(const char* name, std::size_t& out) {
    if (const json* v = find(name)) {
      if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() &&
                                      v->get<std::int64_t>() < 0)) {
        throw ConfigError(key(name), "must be a non-negative integer");
      }
      out = v->get<std::size_t>();
    }
  }

  void get(const char* name, bool& out) {
    if (const json* v = find(name)) {
      if (!v->is_boolean()) throw ConfigError(key(name), "must be true or false");
      out = v->get<bool>();
    }
  }

  void get(const char* name, std::string& out) {
    if (const json* v = find(name)) {
      if (!v->is_string()) throw ConfigError(key(name), "must be a string");
      out = v->get<std::string>();
    }
  }

  void get(const char* name, std::optional<double>& out) {
    if (const json* v = find(name)) {
      if (v->is_null()) {
        out.reset();
      } else if (v->is_number()) {
        out = v->get<double>();
      } else {
        throw ConfigError(key(name), "must be a number or null");
      }
    }
  }

  void finish() const {
    if (obj_ == nullptr) return;
    for (const auto& [k, v] : obj_->items()) {
      if (!seen_.count(k)) throw ConfigError(key(k.c_str()), "unknown key");
    }
  }

 private:
  const json* obj_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename E>
void get_enum(Section& s, const char* name, E& out, std::optional<E> (*parse)(std::string_view),
              const char* choices) {
  std::string text;
  const bool present = s.find(name) != nullptr;
  if (!present) return;
  s.get(name, text);
  const auto v = parse(text);
  if (!v) throw ConfigError(s.key(name), std::string("must be one of ") + choices);
  out = *v;
}

std::optional<marl::MixerKind> parse_mixer(std::string_view s) {
  if (s == "qmix") return marl::MixerKind::kQmix;
  if (s == "vdn") return marl::MixerKind::kVdn;
  return std::nullopt;
}

void read_class_profile(Section s, ClassProfile& p) {
  s.get("compute", p.compute);
  s.get("bandwidth", p.bandwidth);
  s.get("p_train", p.p_train);
  s.get("p_com", p.p_com);
  s.get("p_idle", p.p_idle);
  s.finish();
}

json class_profile_json(const ClassProfile& p) {
  return {{"compute", p.compute}, {"bandwidth", p.bandwidth}, {"p_train", p.p_train},
          {"p_com", p.p_com},     {"p_idle", p.p_idle}};
}

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, json>>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else {
    out.emplace_back(prefix, j);
  }
}

}  // namespace

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig c;
  Section root(&doc, "");

  {
    Section d = root.child("devices");
    d.get("battery_j", c.devices.battery_j);
    Section counts = d.child("counts");
    for (std::size_t k = 0; k < kClassKeys.size(); ++k) counts.get(kClassKeys[k], c.devices.counts[k]);
    counts.finish();
    for (std::size_t k = 0; k < kClassKeys.size(); ++k) {
      read_class_profile(d.child(kClassKeys[k]), c.devices.classes[k]);
    }
    d.get("idle_energy", c.devices.idle_energy);
    get_enum(d, "depth_cost_multiplier", c.devices.depth_cost, &orchestrator::parse_depth_cost,
             "\"param_fraction\", \"unit\"");
    d.finish();
  }
  {
    Section m = root.child("model");
    m.get("depth", c.model.depth);
    m.get("block_width", c.model.block_width);
    m.get("bottleneck_width", c.model.bottleneck_width);
    m.finish();
  }
  {
    Section d = root.child("data");
    d.get("classes", c.data.classes);
    d.get("samples", c.data.samples);
    d.get("feature_width", c.data.feature_width);
    d.get("radius", c.data.radius);
    d.get("alpha", c.data.alpha);
    d.get("validation_fraction", c.data.validation_fraction);
    d.get("import_path", c.data.import_path);
    d.finish();
  }
  {
    Section s = root.child("scheduler");
    get_enum(s, "kind", c.scheduler.kind, &orchestrator::parse_scheduler,
             "\"dr-fl\", \"greedy\", \"random\", \"static\"");
    s.get("participation", c.scheduler.participation);
    Section depths = s.child("static_depths");
    for (std::size_t k = 0; k < kClassKeys.size(); ++k) {
      depths.get(kClassKeys[k], c.scheduler.static_depths[k]);
    }
    depths.finish();
    s.finish();
  }
  {
    Section m = root.child("marl");
    marl::LearnerConfig& l = c.marl.learner;
    get_enum(m, "mixer", l.mixer, &parse_mixer, "\"qmix\", \"vdn\"");
    m.get("hidden", l.hidden);
    m.get("mixing_embed", l.mixing_embed);
    m.get("gamma", l.gamma);
    m.get("lr", l.lr);
    m.get("replay_capacity", l.replay_capacity);
    m.get("batch_episodes", l.batch_episodes);
    m.get("window", l.window);
    m.get("target_period", l.target_period);
    m.get("eps_start", l.eps_start);
    m.get("eps_end", l.eps_end);
    m.get("eps_decay_steps", l.eps_decay_steps);
    m.get("grad_clip", l.grad_clip);
    m.get("warmup_episodes", c.marl.warmup_episodes);
    m.get("episodes", c.marl.episodes);
    m.get("reward_scale", c.marl.reward_scale);
    Section w = m.child("reward_weights");
    w.get("w1", c.marl.reward.w1);
    w.get("w2", c.marl.reward.w2);
    w.get("w3", c.marl.reward.w3);
    w.finish();
    m.finish();
  }
  {
    Section r = root.child("run");
    std::size_t seed = c.run.seed;
    r.get("seed", seed);
    c.run.seed = seed;
    r.get("max_rounds", c.run.max_rounds);
    r.get("energy_budget_j", c.run.energy_budget_j);
    r.get("local_epochs", c.run.train.epochs);
    r.get("batch_size", c.run.train.batch_size);
    r.get("lr", c.run.train.lr);
    r.get("patience", c.run.patience);
    r.finish();
  }
  root.finish();
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  json counts, depths;
  for (std::size_t k = 0; k < kClassKeys.size(); ++k) {
    counts[kClassKeys[k]] = c.devices.counts[k];
    depths[kClassKeys[k]] = c.scheduler.static_depths[k];
  }
  j["devices"] = {{"battery_j", c.devices.battery_j},
                  {"counts", counts},
                  {"idle_energy", c.devices.idle_energy},
                  {"depth_cost_multiplier", orchestrator::to_string(c.devices.depth_cost)}};
  for (std::size_t k = 0; k < kClassKeys.size(); ++k) {
    j["devices"][kClassKeys[k]] = class_profile_json(c.devices.classes[k]);
  }
  j["model"] = {{"depth", c.model.depth},
                {"block_width", c.model.block_width},
                {"bottleneck_width", c.model.bottleneck_width}};
  j["data"] = {{"classes", c.data.classes},
               {"samples", c.data.samples},
               {"feature_width", c.data.feature_width},
               {"radius", c.data.radius},
               {"alpha", c.data.alpha},
               {"validation_fraction", c.data.validation_fraction},
               {"import_path", c.data.import_path}};
  j["scheduler"] = {{"kind", orchestrator::to_string(c.scheduler.kind)},
                    {"participation", c.scheduler.participation},
                    {"static_depths", depths}};
  const marl::LearnerConfig& l = c.marl.learner;
  j["marl"] = {{"mixer", marl::to_string(l.mixer)},
               {"hidden", l.hidden},
               {"mixing_embed", l.mixing_embed},
               {"gamma", l.gamma},
               {"lr", l.lr},
               {"replay_capacity", l.replay_capacity},
               {"batch_episodes", l.batch_episodes},
               {"window", l.window},
               {"target_period", l.target_period},
               {"eps_start", l.eps_start},
               {"eps_end", l.eps_end},
               {"eps_decay_steps", l.eps_decay_steps},
               {"grad_clip", l.grad_clip},
               {"warmup_episodes", c.marl.warmup_episodes},
               {"episodes", c.marl.episodes},
               {"reward_scale", c.marl.reward_scale},
               {"reward_weights",
                {{"w1", c.marl.reward.w1}, {"w2", c.marl.reward.w2}, {"w3", c.marl.reward.w3}}}};
  j["run"] = {{"seed", c.run.seed},
              {"max_rounds", c.run.max_rounds},
              {"energy_budget_j", c.run.energy_budget_j ? json(*c.run.energy_budget_j) : json(nullptr)},
              {"local_epochs", c.run.train.epochs},
              {"batch_size", c.run.train.batch_size},
              {"lr", c.run.train.lr},
              {"patience", c.run.patience}};
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read " + path);
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", path + ": " + e.what());
  }
  return config_from_json(doc);
}

namespace {

const std::vector<std::pair<std::string, std::string>>& descriptions() {
  static const std::vector<std::pair<std::string, std::string>> d = {
      {"devices.battery_j", "battery capacity of every device, joules"},
      {"devices.counts.small", "number of small-class devices"},
      {"devices.counts.medium", "number of medium-class devices"},
      {"devices.counts.large", "number of large-class devices"},
      {"devices.idle_energy", "charge participants p_idle while waiting for the slowest device"},
      {"devices.depth_cost_multiplier",
       "training-time scaling by depth: \"param_fraction\" (params(m)/params(M)) or \"unit\""},
      {"devices.*.compute", "training throughput C, samples per second"},
      {"devices.*.bandwidth", "uplink rate V_net, bytes per second"},
      {"devices.*.p_train", "power while training, watts"},
      {"devices.*.p_com", "power while transmitting, watts"},
      {"devices.*.p_idle", "power while idle inside a round, watts"},
      {"model.depth", "number of backbone blocks and exit heads M"},
      {"model.block_width", "width of every backbone block"},
      {"model.bottleneck_width", "width of the exit-head bottleneck"},
      {"data.classes", "number of classes"},
      {"data.samples", "synthetic dataset size"},
      {"data.feature_width", "input width"},
      {"data.radius", "distance of the synthetic class means from the origin"},
      {"data.alpha", "Dirichlet concentration; smaller is more skewed"},
      {"data.validation_fraction", "share of the data held out for server validation"},
      {"data.import_path", "matrix file to load instead of synthesizing (empty: synthetic)"},
      {"scheduler.kind", "\"dr-fl\", \"greedy\", \"random\" or \"static\""},
      {"scheduler.participation", "share of devices trained per round"},
      {"scheduler.static_depths.*", "depth assigned by the static scheduler to that class"},
      {"marl.mixer", "\"qmix\" (monotone mixing network) or \"vdn\" (plain sum)"},
      {"marl.hidden", "agent MLP and GRU width"},
      {"marl.mixing_embed", "mixing network embedding width"},
      {"marl.gamma", "discount factor"},
      {"marl.lr", "Adam learning rate for the agents and mixer"},
      {"marl.replay_capacity", "episodes kept in replay"},
      {"marl.batch_episodes", "episodes per train step"},
      {"marl.window", "train on random windows of this many rounds (0: whole episodes)"},
      {"marl.target_period", "train steps between target-network syncs"},
      {"marl.eps_start", "initial exploration rate"},
      {"marl.eps_end", "final exploration rate"},
      {"marl.eps_decay_steps", "train steps over which exploration decays linearly"},
      {"marl.grad_clip", "global gradient-norm clip (0: off)"},
      {"marl.warmup_episodes", "replay episodes collected before training starts"},
      {"marl.episodes", "training episodes before the evaluation episode"},
      {"marl.reward_scale", "multiplier applied to rewards stored for learning"},
      {"marl.reward_weights.w1", "weight of the validation accuracy gain"},
      {"marl.reward_weights.w2", "weight of the energy spent, per joule"},
      {"marl.reward_weights.w3", "weight of the round wall time, per second"},
      {"run.seed", "global seed; every random stream derives from it"},
      {"run.max_rounds", "round limit per episode"},
      {"run.energy_budget_j", "total energy budget of an episode, joules (null: unlimited)"},
      {"run.local_epochs", "local epochs per round"},
      {"run.batch_size", "local mini-batch size"},
      {"run.lr", "local SGD learning rate"},
      {"run.patience", "stop after this many rounds without accuracy gain above 1e-4 (0: off)"},
  };
  return d;
}

std::string wildcard(const std::string& key) {
  // devices.small.compute -> devices.*.compute, scheduler.static_depths.large -> ...*
  for (const char* c : kClassKeys) {
    const std::string token = std::string(".") + c;
    const auto pos = key.find(token);
    if (pos == std::string::npos) continue;
    const auto end = pos + token.size();
    if (end == key.size() || key[end] == '.') {
      if (key.rfind("devices.counts.", 0) == 0) return key;
      return key.substr(0, pos) + ".*" + key.substr(end);
    }
  }
  return key;
}

}  // namespace

json config_schema() {
  std::vector<std::pair<std::string, json>> flat;
  flatten(config_to_json(ExperimentConfig{}), "", flat);
  json out = json::object();
  for (const auto& [key, value] : flat) {
    std::string text;
    const std::string pattern = wildcard(key);
    for (const auto& [k, d] : descriptions()) {
      if (k == key || k == pattern) text = d;
    }
    out[key] = {{"default", value}, {"description", text}};
  }
  return out;
}

json with_value(const json& doc, std::string_view dotted, const json& value) {
  json resolved = config_to_json(config_from_json(doc));
  json* node = &resolved;
  std::string path(dotted);
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (!node->is_object() || !node->contains(part)) throw ConfigError(path, "unknown parameter");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object()) throw ConfigError(path, "not a scalar parameter");
  *node = value;
  return resolved;
}

}  // namespace drfl::cli
