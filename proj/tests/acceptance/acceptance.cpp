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

// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance --prepare --work DIR     train the toy victim into DIR
//   acceptance [--only N] --work DIR    run criterion N (default: all)
//   acceptance --victim PATH            use an existing toy checkpoint
//
// Exit status is 0 only when every criterion that ran passed.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gradcheck.hpp"
#include "layerlock/experiment/commands.hpp"
#include "layerlock/experiment/config.hpp"
#include "layerlock/experiment/report.hpp"
#include "layerlock/harness/attack.hpp"
#include "layerlock/harness/dd.hpp"
#include "layerlock/numcore/hash.hpp"
#include "layerlock/numcore/linalg.hpp"
#include "layerlock/numcore/sampling.hpp"
#include "layerlock/taskgen/tasks.hpp"
#include "layerlock/theory/attention_layer.hpp"
#include "layerlock/theory/collapse.hpp"
#include "layerlock/theory/contraction.hpp"
#include "layerlock/toymodel/checkpoint.hpp"
#include "oracles.hpp"

namespace {

using namespace layerlock;
using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Env {
  fs::path work;
  std::optional<fs::path> victim;

  fs::path victim_path() const { return victim ? *victim : work / "train-victim" / "victim.sold"; }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v, int precision = 3) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

experiment::ExperimentConfig toy_config() {
  return experiment::load_config(fs::path(LAYERLOCK_SOURCE_DIR) / "configs" / "toy.json");
}

experiment::ExperimentConfig theory_config() {
  return experiment::load_config(fs::path(LAYERLOCK_SOURCE_DIR) / "configs" / "theory.json");
}

void run(const std::string& command, const experiment::ExperimentConfig& cfg, const fs::path& out,
         std::size_t jobs = 1, std::optional<fs::path> input = std::nullopt) {
  experiment::RunOptions opt;
  opt.out_dir = out;
  opt.jobs = jobs;
  opt.input = std::move(input);
  opt.log = &std::cerr;
  experiment::run_command(command, cfg, opt);
}

toymodel::DecoderParams load_toy_victim(const Env& env) {
  if (!fs::exists(env.victim_path())) {
    throw std::runtime_error("no toy victim at " + env.victim_path().string() +
                             "; run with --prepare first");
  }
  return toymodel::load_checkpoint(env.victim_path()).params;
}

// ---------------------------------------------------------------------------

Verdict criterion1(const Env&) {
  const auto t0 = Clock::now();
  constexpr std::size_t n = 8, d = 16, d_q = 4, layers = 32, seeds = 100;
  theory::DeepOptions deep;
  deep.max_layers = 4096;
  deep.mode = theory::DepthMode::kCycle;
  std::size_t collapsed = 0;
  double worst_dev = 0.0, worst_sigma = 0.0;
  std::size_t deepest = 0;
  for (std::uint64_t s = 1; s <= seeds; ++s) {
    Rng rng(s, 0x737461636bULL);
    const auto stack = theory::TheoryStack::random(layers, n, d, d_q, 0.1, rng);
    const Matrix x0 = normal_sample(n, d, rng);
    Rng swap(s, 0x73776170ULL);
    const theory::SecuredLayer secured{1, theory::AttnParams::xavier(d, d_q, swap)};
    const auto r = theory::deep_normalized_output(x0, stack, secured, deep);
    worst_dev = std::max(worst_dev, r.max_deviation());
    worst_sigma = std::max(worst_sigma, r.sigma_ratio);
    deepest = std::max(deepest, r.iterations_used);
    collapsed += r.max_deviation() < 1e-6 && r.sigma_ratio < 1e-6;
  }
  const double secs = seconds_since(t0);
  return {collapsed == seeds && secs < 120.0,
          std::to_string(collapsed) + "/100 collapsed; worst deviation " + num(worst_dev) +
              ", worst sigma2/sigma1 " + num(worst_sigma) + ", deepest " +
              std::to_string(deepest) + " layers; " + num(secs) + "s"};
}

Verdict criterion2(const Env& env) {
  const auto t0 = Clock::now();
  auto cfg = theory_config();
  cfg.theory.adversarial_budget = 2.0;
  cfg.theory.adversarial_replacements = 20;
  const fs::path out = env.work / "c2";
  run("theory-adversarial", cfg, out);
  const json j = read_json(out / "theory-adversarial" / "theory_adversarial.json");
  std::size_t dev_ok = 0, sigma_ok = 0, both = 0;
  double min_dev = 1e300, max_sigma = 0.0;
  for (const auto& r : j["runs"]) {
    const double dev = r["min_deviation"].get<double>();
    const double sigma = r["sigma_ratio"].get<double>();
    min_dev = std::min(min_dev, dev);
    max_sigma = std::max(max_sigma, sigma);
    dev_ok += dev >= 1.0;
    sigma_ok += sigma >= 0.1;
    both += dev >= 1.0 && sigma >= 0.1;
  }
  const std::size_t runs = j["runs"].size();
  const double secs = seconds_since(t0);
  return {runs == 20 && both == 20 && secs < 60.0,
          "deviation >= 1.0 in " + std::to_string(dev_ok) + "/" + std::to_string(runs) +
              " (min " + num(min_dev, 12) + "); sigma2/sigma1 >= 0.1 in " +
              std::to_string(sigma_ok) + "/" + std::to_string(runs) + " (max " + num(max_sigma) +
              "; X* has identical columns so it is rank one at every depth); " + num(secs) + "s"};
}

Verdict criterion3(const Env&) {
  const auto t0 = Clock::now();
  constexpr std::size_t n = 8, d = 16, d_q = 4, layers = 32;
  constexpr double budget = 1.0;
  Rng brng(1, 0x62657461ULL);
  const double beta = theory::estimate_beta(n, d, d_q, budget, brng).value;
  const double a_star = theory::alpha_star(beta);
  const double top = a_star - 0.05;
  if (!(top > 0.0)) return {false, "alpha* - 0.05 = " + num(top) + " leaves no grid"};
  std::vector<double> alphas;
  for (int k = 1; k <= 8; ++k) alphas.push_back(top * k / 8.0);
  std::size_t violations = 0, runs = 0;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    Rng rng(s, 0x737461636bULL);
    const auto stack = theory::TheoryStack::random(layers, n, d, d_q, budget, rng);
    const Matrix x0 = normal_sample(n, d, rng);
    theory::DeepOptions deep;
    deep.max_layers = 4096;
    const auto sweep = theory::transition_sweep(stack, x0, alphas, {s}, deep);
    for (const auto& r : sweep.runs) {
      ++runs;
      violations += !r.collapsed;
    }
  }
  const double secs = seconds_since(t0);
  return {runs == 80 && violations == 0 && secs < 300.0,
          "D=" + num(budget) + " beta=" + num(beta, 6) + " alpha*=" + num(a_star, 6) +
              "; alphas up to " + num(top, 4) + ", " + std::to_string(violations) +
              " violations in " + std::to_string(runs) + " runs; " + num(secs) + "s"};
}

Verdict criterion4(const Env&) {
  Rng rng(4);
  double err_a = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix x = normal_sample(1, 16, rng);
    const auto p = theory::AttnParams::xavier(16, 4, rng);
    const Matrix y = theory::phi_layer(x, p);
    for (std::size_t j = 0; j < 16; ++j) {
      err_a = std::max(err_a, std::abs(y(0, j) - 2.0 * x(0, j)) / std::abs(2.0 * x(0, j)));
    }
  }
  double err_b = 0.0;
  std::size_t probed = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix x = normal_sample(8, 16, rng);
    const theory::AttnParams uniform{Matrix(16, 4), Matrix(16, 4)};
    const auto probe = theory::doubling_ratio_probe(x, uniform);
    for (std::size_t p = 0; p < probe.ratio.size(); ++p) {
      if (probe.skipped[p]) continue;
      err_b = std::max(err_b, std::abs(probe.ratio[p] - 2.0));
      ++probed;
    }
  }
  double err_c = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix x = normal_sample(8, 16, rng);
    const auto p = theory::AttnParams::random_bounded(16, 4, 0.1, rng);
    const Matrix y = theory::phi_layer(x, p);
    for (double c : {1e-3, 3.7, 1e3}) {
      Matrix cx = x;
      for (double& v : cx.data()) v *= c;
      Matrix cy = y;
      for (double& v : cy.data()) v *= c;
      err_c = std::max(err_c, oracle::rel_err(theory::phi_layer(cx, p), cy));
    }
  }
  Rng irng(44);
  const bool lib_d = theory::technical_inequality_check(10000, irng);
  Rng orng(45);
  std::size_t bad_d = 0;
  for (int i = 0; i < 10000; ++i) {
    const double x = orng.uniform_open();
    bad_d += !(std::sqrt(1.0 - 1.0 / std::sqrt(1.0 + x * x)) <= x);
  }
  const bool pass = err_a <= 1e-12 && probed > 0 && err_b <= 1e-12 && err_c < 1e-12 && lib_d &&
                    bad_d == 0;
  return {pass, "(a) rel err " + num(err_a) + "; (b) |ratio-2| " + num(err_b) + " over " +
                    std::to_string(probed) + " columns; (c) rel err " + num(err_c) +
                    "; (d) library check " + (lib_d ? "holds" : "fails") + ", " +
                    std::to_string(bad_d) + " direct violations in 10^4"};
}

Verdict criterion5(const Env&) {
  const auto t0 = Clock::now();
  const toymodel::DecoderConfig cfg{.vocab = 16, .d_model = 32, .layers = 6, .seq_len = 8};
  double worst_prim = 0.0, worst_dec = 0.0;
  std::string worst_name;
  std::size_t cases = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (const auto& c : oracle::primitive_gradient_errors(seed)) {
      ++cases;
      if (c.rel_err > worst_prim) {
        worst_prim = c.rel_err;
        worst_name = c.name;
      }
    }
    for (const auto& c : oracle::decoder_gradient_errors(seed, cfg)) {
      ++cases;
      worst_dec = std::max(worst_dec, c.rel_err);
    }
  }
  const double secs = seconds_since(t0);
  return {worst_prim < 1e-5 && worst_dec < 1e-5 && secs < 60.0,
          std::to_string(cases) + " checks; worst primitive " + num(worst_prim) + " (" +
              worst_name + "), worst decoder tensor " + num(worst_dec) + "; " + num(secs) + "s"};
}

Verdict criterion6(const Env& env) {
  const auto victim = load_toy_victim(env);
  const auto cfg = toy_config();
  const auto suite = cfg.suite();
  auto attack = cfg.attack;
  attack.queries = 512;
  attack.epochs = 1;
  const std::size_t L = victim.config.layers;
  std::vector<std::string> failures;

  const auto empty = harness::run_attack(
      victim, suite, harness::DeploymentStrategy::of(toymodel::SecuredSet::none(L)), attack);
  double worst_r = 0.0;
  for (const auto& b : empty.benchmarks) {
    if (b.excluded) failures.push_back("R(empty) excluded " + b.name);
    worst_r = std::max(worst_r, std::abs(b.ratio - 1.0));
  }
  if (worst_r > 1e-9) failures.push_back("R(empty) off by " + num(worst_r));

  auto full = harness::run_attack(victim, suite, harness::DeploymentStrategy::fully_secured(), attack);
  harness::attach_delta(full, full);
  if (!full.delta_adr || *full.delta_adr != 0.0) failures.push_back("dADR(fully-secured) != 0");

  auto closed = attack;
  closed.kind = harness::AttackKind::kFtClosed;
  std::size_t compared = 0;
  for (const auto& set : {toymodel::SecuredSet::prefix(2, L), toymodel::SecuredSet::of_layers({L}, L)}) {
    const auto mask = set.mask(victim);
    for (std::uint64_t seed : attack.seeds) {
      const auto replica = harness::distill_replica(victim, suite, set, 0.0, closed, seed);
      for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) continue;
        ++compared;
        if (!bit_equal(replica.tensors[i], victim.tensors[i])) {
          failures.push_back("ft-closed moved " + victim.name(i));
        }
      }
    }
  }

  auto strip = [](json j) {
    for (const char* k : {"kind", "strategy", "noise_scale"}) j.erase(k);
    return j.dump();
  };
  const auto sap = harness::run_attack(victim, suite, harness::DeploymentStrategy::sap(), attack);
  const auto sap_dp0 =
      harness::run_attack(victim, suite, harness::DeploymentStrategy::sap_dp(0.0), attack);
  const bool same = strip(sap.to_json()) == strip(sap_dp0.to_json());
  if (!same) failures.push_back("SAP-DP(0) report differs from SAP");

  std::string detail = "max |R(empty)-1| " + num(worst_r) + "; dADR(full) " +
                       (full.delta_adr ? num(*full.delta_adr) : "unset") + "; " +
                       std::to_string(compared) + " open tensors unchanged under ft-closed; " +
                       "SAP-DP(0) " + (same ? "==" : "!=") + " SAP (ADR " + num(sap.adr, 6) + ")";
  for (const auto& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

Verdict criterion7(const Env&) {
  Rng mrng(7);
  const auto model = toymodel::DecoderParams::xavier(
      {.vocab = 16, .d_model = 8, .layers = 1, .seq_len = 16}, mrng);
  taskgen::TaskSpec spec;
  spec.kind = taskgen::TaskKind::kMarkov;
  spec.seq_len = 16;
  spec.transition_seed = 11;
  Rng drng(8);
  const auto inputs = taskgen::generate(spec, 4000, drng);
  Rng noise(9);
  const auto noisy = taskgen::query_victim(model, inputs, harness::kSapDpNoise, std::nullopt, noise);
  const Matrix clean = toymodel::logits(model, inputs.all());
  const auto a = noisy.soft_labels->data();
  const auto b = clean.data();
  long double sum = 0.0L, sq = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double e = static_cast<long double>(a[i]) - b[i];
    sum += e;
    sq += e * e;
  }
  const double count = static_cast<double>(a.size());
  const double mean = static_cast<double>(sum / count);
  const double var = static_cast<double>(sq / count) - mean * mean;
  const double want = 2.0 * harness::kSapDpNoise * harness::kSapDpNoise;
  const double rel = std::abs(var - want) / want;
  return {a.size() >= 1000000 && rel <= 0.02,
          std::to_string(a.size()) + " entries at b=" + num(harness::kSapDpNoise) +
              ": variance " + num(var, 6) + " vs " + num(want) + " (" + num(100 * rel, 3) +
              "% off), mean " + num(mean, 3)};
}

Verdict criterion8(const Env& env) {
  const auto t0 = Clock::now();
  auto cfg = toy_config();
  if (env.victim) cfg.victim.checkpoint = env.victim->string();
  load_toy_victim(env);
  run("attack", cfg, env.work);
  const double attack_secs = seconds_since(t0);
  run("report", cfg, env.work, 1, env.work / "attack");
  const json j = read_json(env.work / "attack" / "attack.json");
  const std::string md = slurp(env.work / "report" / "report.md");
  double victim_secs = 0.0;
  if (std::ifstream in(env.work / "victim_seconds.txt"); in) in >> victim_secs;
  const double secs = attack_secs + victim_secs;

  std::ostringstream detail;
  for (const auto& r : j["reports"]) {
    detail << r["strategy"].get<std::string>() << " " << r["secured_label"].get<std::string>()
           << " ADR " << std::fixed << std::setprecision(1) << 100.0 * r["adr"].get<double>()
           << "%; ";
  }
  detail << "victim accuracy " << std::setprecision(1)
         << 100.0 * j["victim"]["mixture_accuracy"].get<double>() << "%; ";
  const bool ordered = j["checks"]["all_passed"].get<bool>();
  const std::string flag = j["checks"]["flag"].get<std::string>();
  // A violated ordering must be flagged with the small-model caveat.
  const bool flagged = ordered || (md.find("DEVIATION") != std::string::npos &&
                                   md.find("-0.33") != std::string::npos);
  detail << std::setprecision(0) << secs << "s (victim " << victim_secs << "s)";
  if (!ordered) detail << "; " << flag;
  if (!flagged) detail << "; report lacks the deviation flag";
  return {ordered && flagged && secs < 1800.0, detail.str()};
}

Verdict criterion9(const Env& env) {
  const auto victim = load_toy_victim(env);
  auto cfg = toy_config();
  cfg.victim.checkpoint = env.victim_path().string();
  run("solid-select", cfg, env.work / "c9a");
  run("solid-select", cfg, env.work / "c9b", 2);
  const auto a = slurp(env.work / "c9a" / "solid-select" / "solid_select.csv");
  const auto b = slurp(env.work / "c9b" / "solid-select" / "solid_select.csv");
  const json ja = read_json(env.work / "c9a" / "solid-select" / "solid_select.json");
  const json jb = read_json(env.work / "c9b" / "solid-select" / "solid_select.json");
  const bool identical = a == b && ja == jb;

  // Rule, restated: smallest l with DD(1..l) >= (1 - eps) DD(all).
  const json& dd = ja.at("dd");
  const double eps = dd.at("epsilon").get<double>();
  const double full = dd.at("dd_full").get<double>();
  std::optional<std::size_t> want;
  for (const auto& e : dd.at("curve")) {
    if (e.at("dd").get<double>() >= (1.0 - eps) * full) {
      want = e.at("prefix").get<std::size_t>();
      break;
    }
  }
  const json& sel = ja.at("selected");
  const std::optional<std::size_t> got =
      sel.is_null() ? std::nullopt : std::optional(sel.get<std::size_t>());
  const bool rule = got == want && dd.at("curve").size() == victim.config.layers;

  const auto eval = cfg.suite().combined_eval();
  const double oracle_loss =
      oracle::cross_entropy(toymodel::logits(victim, eval.all()), eval.targets);
  const double dd_empty = dd.at("dd_empty").get<double>();
  const double gap = std::abs(dd_empty - oracle_loss);

  return {identical && rule && gap <= 1e-12,
          std::string("re-runs ") + (identical ? "identical" : "differ") + "; selected " +
              (got ? std::to_string(*got) : "none") + ", rule says " +
              (want ? std::to_string(*want) : "none") + " (eps " + num(eps) + ", DD(all) " +
              num(full, 6) + "); |DD(empty) - oracle loss| " + num(gap)};
}

json mini_config() {
  return json::parse(R"({
    "seed": 5,
    "model": {"vocab": 16, "d_model": 8, "layers": 3, "seq_len": 8, "mlp_mult": 2},
    "tasks": {"eval_count": 40},
    "victim": {"steps": 20, "batch": 16, "log_every": 5},
    "attack": {"kind": "ft-all", "queries": 64, "epochs": 1, "batch": 16, "seeds": [20, 42]},
    "strategies": ["solid", "sap-dp", "fully-secured", "darknetz"],
    "dd": {"seeds": [20, 42], "epsilon": 0.05},
    "customize": {"train_count": 32, "eval_count": 20, "epochs": 1, "batch": 16},
    "sweep": {"window": 1, "sizes": [1, 2, 3], "granularity": "layer", "kind": "size"},
    "theory": {"n": 4, "d": 6, "d_q": 2, "layers": 8, "alphas": [0.25, 0.5], "seed_count": 2,
               "max_layers": 512,
               "beta": {"restarts": 2, "ascent_steps": 10, "budgets": [0.5]},
               "adversarial": {"norm_budget": 2.0, "replacements": 2}}
  })");
}

Verdict criterion10(const Env& env) {
  const auto cfg = experiment::parse_config(mini_config());
  std::map<std::string, std::uint64_t> first;
  std::vector<std::string> diffs;
  std::size_t files = 0;
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path out = env.work / ("c10_" + std::to_string(pass));
    fs::remove_all(out);
    for (const auto& cmd : experiment::command_names()) {
      std::optional<fs::path> input;
      if (cmd == "report") input = out / "attack";
      run(cmd, cfg, out, pass + 1, input);
    }
    for (const auto& e : fs::recursive_directory_iterator(out)) {
      if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
      const std::string key = fs::relative(e.path(), out).string();
      const std::uint64_t h = fnv1a64(slurp(e.path()));
      if (pass == 0) {
        first[key] = h;
      } else {
        ++files;
        auto it = first.find(key);
        if (it == first.end() || it->second != h) diffs.push_back(key);
      }
    }
  }
  if (files != first.size()) diffs.push_back("file sets differ");
  std::string detail = std::to_string(experiment::command_names().size()) + " subcommands, " +
                       std::to_string(files) + " CSVs compared by FNV-1a";
  for (const auto& d : diffs) detail += "; differs: " + d;
  return {diffs.empty() && files > 0, detail};
}

int prepare(const Env& env) {
  const auto t0 = Clock::now();
  auto cfg = toy_config();
  run("train-victim", cfg, env.work);
  const double secs = seconds_since(t0);
  std::ofstream(env.work / "victim_seconds.txt") << secs << '\n';
  const json v = read_json(env.work / "train-victim" / "victim.json");
  std::cout << "toy victim trained in " << num(secs) << "s, mixture accuracy "
            << num(100.0 * v["mixture_accuracy"].get<double>()) << "%\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Env env;
  env.work = fs::current_path() / "acceptance_work";
  std::optional<int> only;
  bool do_prepare = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    auto value = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::cerr << a << " needs a value\n";
        std::exit(2);
      }
      return argv[++i];
    };
    if (a == "--only") {
      only = std::stoi(value());
    } else if (a == "--work") {
      env.work = value();
    } else if (a == "--victim") {
      env.victim = fs::path(value());
    } else if (a == "--prepare") {
      do_prepare = true;
    } else {
      std::cerr << "unknown argument " << a << '\n';
      return 2;
    }
  }
  fs::create_directories(env.work);
  if (do_prepare) {
    try {
      return prepare(env);
    } catch (const std::exception& e) {
      std::cout << "prepare: FAIL " << e.what() << '\n';
      return 1;
    }
  }

  const std::vector<std::function<Verdict(const Env&)>> criteria{
      criterion1, criterion2, criterion3, criterion4, criterion5,
      criterion6, criterion7, criterion8, criterion9, criterion10};
  bool all = true;
  for (int n = 1; n <= static_cast<int>(criteria.size()); ++n) {
    if (only && *only != n) continue;
    Verdict v;
    try {
      v = criteria[n - 1](env);
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    std::cout << "criterion " << n << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail
              << std::endl;
    all &= v.pass;
  }
  return all ? 0 : 1;
}
