// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/harness/settings.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "mra/common/errors.hpp"

namespace mra::harness {

using learner::OptimizerKind;
using taskforge::Family;

FamilyHypers reference_hypers(Family f) {
  FamilyHypers h;
  switch (f) {
    case Family::kArbitraryVisuomotorMapping:
      h.entropy_cost = 0.0052;
      h.rec_image_cost = 30.0;
      break;
    case Family::kContinuousRecognition:
      h.hidden = 1024;
      h.rec_image_cost = 1.5;
      break;
    case Family::kChangeDetection:
      h.rec_image_cost = 3.0;
      break;
    case Family::kWhatThenWhere:
      h.hidden = 1024;
      h.baseline_cost = 2.0;
      h.batch_size = 32;
      h.unroll = 100;
      h.cpc_weight = 30.0;
      break;
    case Family::kVisibleGoalMaze:
      h.entropy_cost = 0.0052;
      h.cpc_weight = 5.0;
      break;
    case Family::kTransitiveInference:
      h.hidden = 1024;
      h.entropy_cost = 0.003;
      h.unroll = 200;
      h.learning_rate = 1e-4;
      h.cpc_steps = 50;
      h.cpc_weight = 20.0;
      break;
    default:
      // Spot the Difference and the remaining navigation families.
      h.hidden = 1024;
      h.entropy_cost = 0.003;
      h.unroll = 200;
      h.discount = f == Family::kSpotDiffPassive ? 0.999 : 0.99;
      h.optimizer = OptimizerKind::kRmsProp;
      h.learning_rate = 1e-4;
      h.cpc_steps = 50;
      h.cpc_weight = 20.0;
      break;
  }
  return h;
}

RunSettings desk_settings(Family f, const AblationConfig& cfg, std::uint64_t seed) {
  const FamilyHypers h = reference_hypers(f);
  RunSettings s;
  s.family = f;
  s.config = cfg;
  s.seed = seed;
  s.agent.ctrl.hidden = 64;
  s.agent.ctrl.embed = 32;
  s.agent.ctrl.encoder_hidden = 64;
  s.agent.mem = epmem::default_memory_config(taskforge::is_spot_diff(f) || taskforge::is_navigation(f));
  s.agent.cpc.steps = std::min<std::size_t>(h.cpc_steps, 10);
  s.agent.cpc.weight = h.cpc_weight;
  s.agent.rec.c_image = h.rec_image_cost;
  s.agent.rec_decoder_hidden = 64;
  s.learner.vtrace.gamma = h.discount;
  s.learner.baseline_cost = h.baseline_cost;
  s.learner.entropy_cost = h.entropy_cost;
  s.learner.optimizer.kind = h.optimizer;
  s.learner.optimizer.learning_rate = h.optimizer == OptimizerKind::kAdam ? 2e-3 : 1e-3;
  s.batch_size = 2;
  s.unroll = std::min<std::size_t>(h.unroll, 50);
  if (f == Family::kArbitraryVisuomotorMapping || f == Family::kContinuousRecognition) s.task.trials_override = 10;
  finalize_settings(s);
  return s;
}

void finalize_settings(RunSettings& s) {
  s.agent.ctrl.core = s.config.core;
  s.agent.ctrl.mem = s.config.mem;
  s.agent.aux = s.config.aux;
  s.agent.jumpy = s.config.jumpy;
  auto probe = taskforge::make_task(s.family, taskforge::Level::kTrainSmall, 0, s.task);
  s.agent.ctrl.obs = probe->observation_spec();
  s.agent.ctrl.num_actions = probe->num_actions();
}

namespace {

struct KeyDef {
  std::string key;
  std::string doc;
  std::function<std::string(const RunSettings&)> get;
  std::function<void(RunSettings&, const std::string&)> set;
};

template <typename V>
V parse_number(const std::string& key, const std::string& text) {
  V v{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ContractError("settings: bad value '" + text + "' for " + key);
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ContractError("settings: bad boolean '" + text + "' for " + key);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <typename Field>
KeyDef size_key(std::string key, std::string doc, Field field) {
  return {key, std::move(doc), [field](const RunSettings& s) { return std::to_string(field(const_cast<RunSettings&>(s))); },
          [field, key](RunSettings& s, const std::string& v) {
            field(s) = parse_number<std::remove_reference_t<decltype(field(s))>>(key, v);
          }};
}

template <typename Field>
KeyDef real_key(std::string key, std::string doc, Field field) {
  return {key, std::move(doc), [field](const RunSettings& s) { return fmt(field(const_cast<RunSettings&>(s))); },
          [field, key](RunSettings& s, const std::string& v) {
            field(s) = static_cast<std::remove_reference_t<decltype(field(s))>>(parse_number<double>(key, v));
          }};
}

template <typename Field>
KeyDef bool_key(std::string key, std::string doc, Field field) {
  return {key, std::move(doc), [field](const RunSettings& s) { return field(const_cast<RunSettings&>(s)) ? "true" : "false"; },
          [field, key](RunSettings& s, const std::string& v) { field(s) = parse_bool(key, v); }};
}

const std::vector<KeyDef>& key_defs() {
  static const std::vector<KeyDef> defs = {
      {"run.family", "task family name (see `tasks list`)",
       [](const RunSettings& s) { return taskforge::family_name(s.family); },
       [](RunSettings& s, const std::string& v) { s.family = taskforge::parse_family(v); }},
      {"run.config", "ablation name, e.g. LSTM+MEM+CPC or MRA", [](const RunSettings& s) { return s.config.name(); },
       [](RunSettings& s, const std::string& v) { s.config = parse_ablation(v); }},
      size_key("run.seed", "seed for parameters, actors and environments", [](RunSettings& s) -> auto& { return s.seed; }),
      size_key("run.budget", "environment frames consumed by training", [](RunSettings& s) -> auto& { return s.budget; }),
      size_key("run.actor_threads", "actor threads; 0 interleaves actors and learner deterministically",
               [](RunSettings& s) -> auto& { return s.actor_threads; }),
      size_key("run.checkpoint_interval", "frames between checkpoints; 0 keeps only the final one",
               [](RunSettings& s) -> auto& { return s.checkpoint_interval; }),
      {"task.trials_override", "trial count for trial-count families; 0 keeps the table",
       [](const RunSettings& s) { return std::to_string(s.task.trials_override); },
       [](RunSettings& s, const std::string& v) { s.task.trials_override = parse_number<int>("task.trials_override", v); }},
      bool_key("task.tiny", "two-item stimulus pools and fixed placement", [](RunSettings& s) -> auto& { return s.task.tiny; }),
      size_key("task.codebook_seed", "seed of the stimulus code permutation",
               [](RunSettings& s) -> auto& { return s.task.codebook_seed; }),
      real_key("task.step_cap_factor", "episode step cap as a multiple of the oracle's steps",
               [](RunSettings& s) -> auto& { return s.task.step_cap_factor; }),
      size_key("controller.hidden", "core width", [](RunSettings& s) -> auto& { return s.agent.ctrl.hidden; }),
      size_key("controller.embed", "observation embedding width", [](RunSettings& s) -> auto& { return s.agent.ctrl.embed; }),
      size_key("controller.encoder_hidden", "hidden width of the vector encoder",
               [](RunSettings& s) -> auto& { return s.agent.ctrl.encoder_hidden; }),
      size_key("controller.conv_channels", "channels of the grid encoder",
               [](RunSettings& s) -> auto& { return s.agent.ctrl.conv_channels; }),
      real_key("controller.forget_bias", "initial LSTM forget-gate bias",
               [](RunSettings& s) -> auto& { return s.agent.ctrl.forget_bias; }),
      size_key("memory.capacity", "slots in the episodic buffer", [](RunSettings& s) -> auto& { return s.agent.mem.capacity; }),
      size_key("memory.neighbors", "K nearest neighbours per read", [](RunSettings& s) -> auto& { return s.agent.mem.neighbors; }),
      size_key("memory.key_size", "key and query width", [](RunSettings& s) -> auto& { return s.agent.mem.key_size; }),
      real_key("memory.epsilon", "distance offset of the read weights", [](RunSettings& s) -> auto& { return s.agent.mem.epsilon; }),
      size_key("learner.batch_size", "trajectories per update", [](RunSettings& s) -> auto& { return s.batch_size; }),
      size_key("learner.unroll", "steps per trajectory", [](RunSettings& s) -> auto& { return s.unroll; }),
      real_key("learner.discount", "discount factor", [](RunSettings& s) -> auto& { return s.learner.vtrace.gamma; }),
      real_key("learner.rho_bar", "V-trace importance clip for the targets",
               [](RunSettings& s) -> auto& { return s.learner.vtrace.rho_bar; }),
      real_key("learner.c_bar", "V-trace trace clip", [](RunSettings& s) -> auto& { return s.learner.vtrace.c_bar; }),
      real_key("learner.baseline_cost", "weight of the value loss", [](RunSettings& s) -> auto& { return s.learner.baseline_cost; }),
      real_key("learner.entropy_cost", "weight of the entropy bonus", [](RunSettings& s) -> auto& { return s.learner.entropy_cost; }),
      {"learner.optimizer", "adam or rmsprop",
       [](const RunSettings& s) { return std::string(s.learner.optimizer.kind == OptimizerKind::kAdam ? "adam" : "rmsprop"); },
       [](RunSettings& s, const std::string& v) {
         if (v == "adam") {
           s.learner.optimizer.kind = OptimizerKind::kAdam;
         } else if (v == "rmsprop") {
           s.learner.optimizer.kind = OptimizerKind::kRmsProp;
         } else {
           throw ContractError("settings: unknown optimizer '" + v + "'");
         }
       }},
      real_key("learner.learning_rate", "step size", [](RunSettings& s) -> auto& { return s.learner.optimizer.learning_rate; }),
      real_key("learner.adam_beta1", "Adam first-moment decay", [](RunSettings& s) -> auto& { return s.learner.optimizer.adam_beta1; }),
      real_key("learner.adam_beta2", "Adam second-moment decay", [](RunSettings& s) -> auto& { return s.learner.optimizer.adam_beta2; }),
      real_key("learner.adam_epsilon", "Adam epsilon", [](RunSettings& s) -> auto& { return s.learner.optimizer.adam_epsilon; }),
      real_key("learner.rms_epsilon", "RMSProp epsilon", [](RunSettings& s) -> auto& { return s.learner.optimizer.rms_epsilon; }),
      real_key("learner.rms_momentum", "RMSProp momentum", [](RunSettings& s) -> auto& { return s.learner.optimizer.rms_momentum; }),
      real_key("learner.rms_decay", "RMSProp decay", [](RunSettings& s) -> auto& { return s.learner.optimizer.rms_decay; }),
      real_key("learner.clip_norm", "global gradient-norm clip; 0 disables",
               [](RunSettings& s) -> auto& { return s.learner.optimizer.clip_norm; }),
      bool_key("learner.check_finite", "check every tape value for NaN/Inf",
               [](RunSettings& s) -> auto& { return s.learner.check_finite; }),
      size_key("cpc.steps", "prediction horizon", [](RunSettings& s) -> auto& { return s.agent.cpc.steps; }),
      real_key("cpc.weight", "loss weight", [](RunSettings& s) -> auto& { return s.agent.cpc.weight; }),
      real_key("rec.c_image", "observation reconstruction cost", [](RunSettings& s) -> auto& { return s.agent.rec.c_image; }),
      real_key("rec.c_action", "previous-action reconstruction cost", [](RunSettings& s) -> auto& { return s.agent.rec.c_action; }),
      real_key("rec.c_reward", "previous-reward reconstruction cost", [](RunSettings& s) -> auto& { return s.agent.rec.c_reward; }),
      size_key("rec.decoder_hidden", "hidden width of the observation decoder",
               [](RunSettings& s) -> auto& { return s.agent.rec_decoder_hidden; }),
      size_key("eval.interval", "frames between frozen-parameter evaluations",
               [](RunSettings& s) -> auto& { return s.eval_interval; }),
      size_key("eval.episodes", "greedy episodes per level per evaluation",
               [](RunSettings& s) -> auto& { return s.eval_episodes; }),
      size_key("eval.baseline_episodes", "episodes for the random and oracle baselines",
               [](RunSettings& s) -> auto& { return s.baseline_episodes; }),
      real_key("eval.ewma_alpha", "per-episode smoothing constant; 0 uses the family default",
               [](RunSettings& s) -> auto& { return s.ewma_alpha; }),
      size_key("eval.window", "rolling window over evaluation points", [](RunSettings& s) -> auto& { return s.window; }),
  };
  return defs;
}

const KeyDef& find_key(const std::string& key) {
  for (const KeyDef& d : key_defs()) {
    if (d.key == key) return d;
  }
  throw ContractError("settings: unknown key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& settings_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys = [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const KeyDef& d : key_defs()) out.emplace_back(d.key, d.doc);
    return out;
  }();
  return keys;
}

KeyValues parse_key_values(const std::string& text) {
  static const std::set<std::string> sections = {"run", "task", "controller", "memory", "learner", "cpc", "rec", "eval"};
  KeyValues kv;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "settings line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ContractError(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.count(section)) throw ContractError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ContractError(where + "expected key = value");
    if (section.empty()) throw ContractError(where + "key outside a section");
    const std::string key = section + "." + trim(line.substr(0, eq));
    find_key(key);
    if (kv.count(key)) throw ContractError(where + "duplicate key " + key);
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

void apply_key_values(RunSettings& s, const KeyValues& kv) {
  for (const auto& [key, value] : kv) find_key(key).set(s, value);
  finalize_settings(s);
}

KeyValues to_key_values(const RunSettings& s) {
  KeyValues kv;
  for (const KeyDef& d : key_defs()) kv[d.key] = d.get(s);
  return kv;
}

std::string format_settings(const RunSettings& s) {
  std::ostringstream os;
  std::string section;
  for (const KeyDef& d : key_defs()) {
    const std::string sec = d.key.substr(0, d.key.find('.'));
    if (sec != section) {
      if (!section.empty()) os << '\n';
      os << '[' << sec << "]\n";
      section = sec;
    }
    os << d.key.substr(sec.size() + 1) << " = " << d.get(s) << "  # " << d.doc << '\n';
  }
  return os.str();
}

RunSettings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("settings: cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const KeyValues kv = parse_key_values(buf.str());
  auto get = [&](const std::string& k, const std::string& fallback) {
    auto it = kv.find(k);
    return it == kv.end() ? fallback : it->second;
  };
  RunSettings s = desk_settings(taskforge::parse_family(get("run.family", "avm")), parse_ablation(get("run.config", "MRA")),
                                parse_number<std::uint64_t>("run.seed", get("run.seed", "0")));
  apply_key_values(s, kv);
  return s;
}

}  // namespace mra::harness
