// Copyright 2026 The LayerLock Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "layerlock/experiment/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "layerlock/numcore/hash.hpp"

namespace layerlock::experiment {
namespace {

using nlohmann::json;

// nlohmann stores literals parsed from text as unsigned but values assigned
// from C++ ints as signed; both are fine when non-negative.
bool non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

[[noreturn]] void fail(const std::string& msg) { throw CliError(ErrorKind::kConfig, msg); }

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(where() + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  void size(const char* key, std::size_t& out) { u64_into(key, out); }
  void u64(const char* key, std::uint64_t& out) { u64_into(key, out); }

  void real(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) fail(where(key) + " must be a number");
      out = v->get<double>();
    }
  }

  void boolean(const char* key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) fail(where(key) + " must be true or false");
      out = v->get<bool>();
    }
  }

  void string(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) fail(where(key) + " must be a string");
      out = v->get<std::string>();
    }
  }

  template <class T>
  void u64_list(const char* key, std::vector<T>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) fail(where(key) + " must be an array");
      out.clear();
      for (const json& e : *v) {
        if (!non_negative_integer(e)) fail(where(key) + " entries must be non-negative integers");
        out.push_back(static_cast<T>(e.get<std::uint64_t>()));
      }
    }
  }

  void real_list(const char* key, std::vector<double>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) fail(where(key) + " must be an array");
      out.clear();
      for (const json& e : *v) {
        if (!e.is_number()) fail(where(key) + " entries must be numbers");
        out.push_back(e.get<double>());
      }
    }
  }

  const json* take(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail("unknown key " + where(it.key()));
    }
  }

 private:
  template <class T>
  void u64_into(const char* key, T& out) {
    if (const json* v = take(key)) {
      if (!non_negative_integer(*v)) fail(where(key) + " must be a non-negative integer");
      out = static_cast<T>(v->get<std::uint64_t>());
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_adam(Reader& r, autodiff::AdamConfig& a) {
  r.real("lr", a.lr);
  r.real("beta1", a.beta1);
  r.real("beta2", a.beta2);
  r.real("eps", a.eps);
  r.real("weight_decay", a.weight_decay);
  r.real("min_lr_fraction", a.min_lr_fraction);
  std::string sched = a.schedule == autodiff::Schedule::kCosine ? "cosine" : "constant";
  r.string("schedule", sched);
  if (sched == "cosine") {
    a.schedule = autodiff::Schedule::kCosine;
  } else if (sched == "constant") {
    a.schedule = autodiff::Schedule::kConstant;
  } else {
    fail(r.where("schedule") + " must be \"cosine\" or \"constant\"");
  }
  if (!(a.lr > 0.0)) fail(r.where("lr") + " must be positive");
}

json adam_json(const autodiff::AdamConfig& a) {
  return {{"lr", a.lr},
          {"beta1", a.beta1},
          {"beta2", a.beta2},
          {"eps", a.eps},
          {"weight_decay", a.weight_decay},
          {"min_lr_fraction", a.min_lr_fraction},
          {"schedule", a.schedule == autodiff::Schedule::kCosine ? "cosine" : "constant"}};
}

const char* granularity_name(toymodel::Granularity g) {
  return g == toymodel::Granularity::kLayer ? "layer" : "block";
}

}  // namespace

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kCheckpoint: return "checkpoint";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kRuntime: return "runtime";
  }
  return "runtime";
}

int CliError::exit_code() const {
  return kind_ == ErrorKind::kUsage || kind_ == ErrorKind::kConfig ? 1 : 2;
}

nlohmann::json strategy_to_json(const harness::DeploymentStrategy& s) {
  json j = {{"kind", harness::strategy_name(s.kind)}};
  switch (s.kind) {
    case harness::StrategyKind::kSolid:
      if (s.solid_layers > 0) j["layers"] = s.solid_layers;
      break;
    case harness::StrategyKind::kSapDp:
      j["noise_scale"] = s.noise_scale;
      [[fallthrough]];
    case harness::StrategyKind::kSap:
      if (s.open_k) j["open_k"] = *s.open_k;
      break;
    case harness::StrategyKind::kCustom:
      j["secured"] = s.custom->to_json();
      break;
    default:
      break;
  }
  return j;
}

harness::DeploymentStrategy strategy_from_json(const nlohmann::json& j) {
  json obj = j.is_string() ? json{{"kind", j}} : j;
  Reader r(obj, "strategies[]");
  std::string name;
  r.string("kind", name);
  const auto kind = harness::parse_strategy(name);
  if (!kind) fail("strategies[]: unknown kind \"" + name + "\"");
  harness::DeploymentStrategy s;
  switch (*kind) {
    case harness::StrategyKind::kSolid: {
      std::size_t l = 0;  // 0: pick l* from the DD curve
      r.size("layers", l);
      s = harness::DeploymentStrategy::solid(l);
      break;
    }
    case harness::StrategyKind::kDarkneTZ:
      s = harness::DeploymentStrategy::darknetz();
      break;
    case harness::StrategyKind::kSap:
    case harness::StrategyKind::kSapDp: {
      std::optional<std::size_t> open_k;
      if (r.has("open_k")) {
        std::size_t k = 0;
        r.size("open_k", k);
        open_k = k;
      }
      double noise = harness::kSapDpNoise;
      if (*kind == harness::StrategyKind::kSapDp) r.real("noise_scale", noise);
      if (noise < 0.0) fail("strategies[]: noise_scale must be non-negative");
      s = *kind == harness::StrategyKind::kSap ? harness::DeploymentStrategy::sap(open_k)
                                               : harness::DeploymentStrategy::sap_dp(noise, open_k);
      break;
    }
    case harness::StrategyKind::kFullySecured:
      s = harness::DeploymentStrategy::fully_secured();
      break;
    case harness::StrategyKind::kCustom: {
      const json* set = r.take("secured");
      if (!set) fail("strategies[]: custom needs \"secured\"");
      try {
        s = harness::DeploymentStrategy::of(toymodel::SecuredSet::from_json(*set));
      } catch (const std::exception& e) {
        fail(std::string("strategies[].secured: ") + e.what());
      }
      break;
    }
  }
  r.finish();
  return s;
}

bool ExperimentConfig::has(const std::string& section) const {
  return std::find(sections.begin(), sections.end(), section) != sections.end();
}

void ExperimentConfig::require(const std::vector<std::string>& needed) const {
  for (const std::string& s : needed) {
    if (!has(s)) fail("missing config key \"" + s + "\"");
  }
}

std::vector<taskgen::TaskSpec> ExperimentConfig::task_specs() const {
  return harness::default_specs(model.vocab, model.seq_len, tasks.modulus, tasks.markov_seed,
                                tasks.markov_peak);
}

harness::Suite ExperimentConfig::suite() const {
  return harness::make_suite(task_specs(), tasks.eval_seed, tasks.eval_count);
}

harness::VictimConfig ExperimentConfig::victim_config() const {
  harness::VictimConfig vc;
  vc.seed = seed;
  vc.steps = victim.steps;
  vc.batch = victim.batch;
  vc.adam = victim.adam;
  vc.log_every = victim.log_every;
  return vc;
}

nlohmann::json ExperimentConfig::to_json(bool include_output_dir) const {
  json strategies_j = json::array();
  for (const auto& s : strategies) strategies_j.push_back(strategy_to_json(s));
  const auto& t = theory;
  json j = {
      {"seed", seed},
      {"model",
       {{"vocab", model.vocab},
        {"d_model", model.d_model},
        {"layers", model.layers},
        {"seq_len", model.seq_len},
        {"mlp_mult", model.mlp_mult},
        {"norm_eps", model.norm_eps}}},
      {"tasks",
       {{"modulus", tasks.modulus},
        {"markov_seed", tasks.markov_seed},
        {"markov_peak", tasks.markov_peak},
        {"eval_seed", tasks.eval_seed},
        {"eval_count", tasks.eval_count}}},
      {"victim",
       {{"checkpoint", victim.checkpoint},
        {"steps", victim.steps},
        {"batch", victim.batch},
        {"log_every", victim.log_every},
        {"adam", adam_json(victim.adam)}}},
      {"attack",
       {{"kind", harness::attack_name(attack.kind)},
        {"queries", attack.queries},
        {"epochs", attack.epochs},
        {"batch", attack.batch},
        {"seeds", attack.seeds},
        {"hard_labels", attack.hard_labels},
        {"adam", adam_json(attack.adam)}}},
      {"strategies", strategies_j},
      {"dd", {{"seeds", dd.seeds}, {"epsilon", dd.epsilon}}},
      {"customize",
       {{"transition_seed", customize.task.transition_seed},
        {"markov_peak", customize.task.markov_peak},
        {"train_count", customize.train_count},
        {"eval_count", customize.eval_count},
        {"epochs", customize.fit.epochs},
        {"batch", customize.fit.batch},
        {"seed", customize.seed},
        {"adam", adam_json(customize.fit.adam)}}},
      {"sweep",
       {{"window", sweep.window},
        {"sizes", sweep.sizes},
        {"granularity", granularity_name(sweep.granularity)},
        {"kind", sweep.kind}}},
      {"theory",
       {{"n", t.n},
        {"d", t.d},
        {"d_q", t.d_q},
        {"norm_budget", t.norm_budget},
        {"layers", t.layers},
        {"alphas", t.alphas},
        {"seed_count", t.seed_count},
        {"tol", t.deep.tol},
        {"max_layers", t.deep.max_layers},
        {"mode", t.deep.mode == theory::DepthMode::kCycle ? "cycle" : "resample"},
        {"beta",
         {{"restarts", t.beta.restarts},
          {"ascent_steps", t.beta.ascent_steps},
          {"fd_step", t.beta.fd_step},
          {"budgets", t.beta_budgets}}},
        {"adversarial",
         {{"norm_budget", t.adversarial_budget},
          {"replacements", t.adversarial_replacements}}}}},
  };
  if (include_output_dir) j["output_dir"] = output_dir;
  return j;
}

std::string ExperimentConfig::hash() const {
  return hex64(fnv1a64(to_json(false).dump()));
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig c;
  Reader top(j, "");
  for (auto it = j.begin(); it != j.end(); ++it) c.sections.push_back(it.key());
  top.u64("seed", c.seed);
  top.string("output_dir", c.output_dir);

  if (const json* m = top.take("model")) {
    Reader r(*m, "model");
    r.size("vocab", c.model.vocab);
    r.size("d_model", c.model.d_model);
    r.size("layers", c.model.layers);
    r.size("seq_len", c.model.seq_len);
    r.size("mlp_mult", c.model.mlp_mult);
    r.real("norm_eps", c.model.norm_eps);
    r.finish();
  }
  try {
    c.model.validate();
  } catch (const std::exception& e) {
    fail(std::string("model: ") + e.what());
  }

  if (const json* t = top.take("tasks")) {
    Reader r(*t, "tasks");
    r.size("modulus", c.tasks.modulus);
    r.u64("markov_seed", c.tasks.markov_seed);
    r.real("markov_peak", c.tasks.markov_peak);
    r.u64("eval_seed", c.tasks.eval_seed);
    r.size("eval_count", c.tasks.eval_count);
    r.finish();
  }
  try {
    for (const auto& s : c.task_specs()) s.validate();
  } catch (const std::exception& e) {
    fail(std::string("tasks: ") + e.what());
  }
  if (c.tasks.eval_count == 0) fail("tasks.eval_count must be positive");

  if (const json* v = top.take("victim")) {
    Reader r(*v, "victim");
    r.string("checkpoint", c.victim.checkpoint);
    r.size("steps", c.victim.steps);
    r.size("batch", c.victim.batch);
    r.size("log_every", c.victim.log_every);
    if (const json* a = r.take("adam")) {
      Reader ar(*a, "victim.adam");
      read_adam(ar, c.victim.adam);
      ar.finish();
    }
    r.finish();
  }

  if (const json* a = top.take("attack")) {
    Reader r(*a, "attack");
    std::string kind = harness::attack_name(c.attack.kind);
    r.string("kind", kind);
    const auto k = harness::parse_attack(kind);
    if (!k) fail("attack.kind must be ft-all, ft-closed or sem");
    c.attack.kind = *k;
    r.size("queries", c.attack.queries);
    r.size("epochs", c.attack.epochs);
    r.size("batch", c.attack.batch);
    r.u64_list("seeds", c.attack.seeds);
    r.boolean("hard_labels", c.attack.hard_labels);
    if (const json* ad = r.take("adam")) {
      Reader ar(*ad, "attack.adam");
      read_adam(ar, c.attack.adam);
      ar.finish();
    }
    r.finish();
    if (c.attack.seeds.empty()) fail("attack.seeds must not be empty");
  }

  if (const json* s = top.take("strategies")) {
    if (!s->is_array()) fail("strategies must be an array");
    for (const json& e : *s) c.strategies.push_back(strategy_from_json(e));
  } else {
    c.strategies = {harness::DeploymentStrategy::solid(0), harness::DeploymentStrategy::sap_dp(),
                    harness::DeploymentStrategy::fully_secured(),
                    harness::DeploymentStrategy::darknetz()};
  }

  if (const json* d = top.take("dd")) {
    Reader r(*d, "dd");
    r.u64_list("seeds", c.dd.seeds);
    r.real("epsilon", c.dd.epsilon);
    r.finish();
    if (c.dd.seeds.empty()) fail("dd.seeds must not be empty");
    if (!(c.dd.epsilon >= 0.0 && c.dd.epsilon <= 1.0)) fail("dd.epsilon must lie in [0, 1]");
  }

  c.customize.task = harness::downstream_spec(c.model.vocab, c.model.seq_len);
  c.customize.seed = c.seed;
  if (const json* cu = top.take("customize")) {
    Reader r(*cu, "customize");
    r.u64("transition_seed", c.customize.task.transition_seed);
    r.real("markov_peak", c.customize.task.markov_peak);
    r.size("train_count", c.customize.train_count);
    r.size("eval_count", c.customize.eval_count);
    r.size("epochs", c.customize.fit.epochs);
    r.size("batch", c.customize.fit.batch);
    r.u64("seed", c.customize.seed);
    if (const json* ad = r.take("adam")) {
      Reader ar(*ad, "customize.adam");
      read_adam(ar, c.customize.fit.adam);
      ar.finish();
    }
    r.finish();
  }

  if (const json* sw = top.take("sweep")) {
    Reader r(*sw, "sweep");
    r.size("window", c.sweep.window);
    r.u64_list("sizes", c.sweep.sizes);
    std::string g = granularity_name(c.sweep.granularity);
    r.string("granularity", g);
    if (g == "layer") {
      c.sweep.granularity = toymodel::Granularity::kLayer;
    } else if (g == "block") {
      c.sweep.granularity = toymodel::Granularity::kBlock;
    } else {
      fail("sweep.granularity must be \"layer\" or \"block\"");
    }
    r.string("kind", c.sweep.kind);
    if (c.sweep.kind != "placement" && c.sweep.kind != "size") {
      fail("sweep.kind must be \"placement\" or \"size\"");
    }
    r.finish();
  }

  if (const json* th = top.take("theory")) {
    auto& t = c.theory;
    Reader r(*th, "theory");
    r.size("n", t.n);
    r.size("d", t.d);
    r.size("d_q", t.d_q);
    r.real("norm_budget", t.norm_budget);
    r.size("layers", t.layers);
    r.real_list("alphas", t.alphas);
    r.size("seed_count", t.seed_count);
    r.real("tol", t.deep.tol);
    r.size("max_layers", t.deep.max_layers);
    std::string mode = t.deep.mode == theory::DepthMode::kCycle ? "cycle" : "resample";
    r.string("mode", mode);
    if (mode == "cycle") {
      t.deep.mode = theory::DepthMode::kCycle;
    } else if (mode == "resample") {
      t.deep.mode = theory::DepthMode::kResample;
    } else {
      fail("theory.mode must be \"cycle\" or \"resample\"");
    }
    if (const json* b = r.take("beta")) {
      Reader br(*b, "theory.beta");
      br.size("restarts", t.beta.restarts);
      br.size("ascent_steps", t.beta.ascent_steps);
      br.real("fd_step", t.beta.fd_step);
      br.real_list("budgets", t.beta_budgets);
      br.finish();
    }
    if (const json* a = r.take("adversarial")) {
      Reader ar(*a, "theory.adversarial");
      ar.real("norm_budget", t.adversarial_budget);
      ar.size("replacements", t.adversarial_replacements);
      ar.finish();
    }
    r.finish();
    if (t.n == 0 || t.d == 0 || t.d_q == 0 || t.layers == 0) {
      fail("theory: n, d, d_q and layers must be positive");
    }
    if (t.norm_budget < 0.0 || t.adversarial_budget < 0.0) {
      fail("theory: norm budgets must be non-negative");
    }
    for (double a : t.alphas) {
      if (!(a > 0.0 && a < 1.0)) fail("theory.alphas entries must lie in (0, 1)");
    }
  }
  top.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CliError(ErrorKind::kIo, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

}  // namespace layerlock::experiment
