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

#include "layerlock/experiment/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "layerlock/experiment/report.hpp"
#include "layerlock/harness/customize.hpp"
#include "layerlock/harness/dd.hpp"
#include "layerlock/harness/sweeps.hpp"
#include "layerlock/numcore/format.hpp"
#include "layerlock/numcore/hash.hpp"
#include "layerlock/numcore/parallel.hpp"
#include "layerlock/numcore/sampling.hpp"
#include "layerlock/numcore/stats.hpp"
#include "layerlock/toymodel/checkpoint.hpp"

namespace layerlock::experiment {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kTheoryStackStream = 0x737461636bULL;  // "stack"
constexpr std::uint64_t kBetaStream = 0x62657461ULL;           // "beta"
constexpr std::uint64_t kAdversaryStream = 0x616476ULL;        // "adv"
constexpr std::uint64_t kSwapStream = 0x73776170ULL;           // "swap"

struct Context {
  const ExperimentConfig& cfg;
  const RunOptions& opt;
  std::string command;

  std::ostream& log() const { return opt.log ? *opt.log : std::cerr; }
  fs::path dir() const { return opt.out_dir / command; }

  void echo(const std::string& csv_text, const json& j) const {
    if (!opt.out) return;
    if (opt.format == Format::kCsv) {
      *opt.out << csv_text;
    } else {
      *opt.out << j.dump(2) << '\n';
    }
  }
};

std::string csv_bool(bool b) { return b ? "true" : "false"; }

std::string csv_real(double v) { return format_real(v); }

fs::path victim_path(const Context& ctx) {
  if (!ctx.cfg.victim.checkpoint.empty()) return ctx.cfg.victim.checkpoint;
  return ctx.opt.out_dir / "train-victim" / "victim.sold";
}

toymodel::DecoderParams load_victim(const Context& ctx) {
  const fs::path path = victim_path(ctx);
  if (!fs::exists(path)) {
    throw CliError(ErrorKind::kCheckpoint,
                   "victim checkpoint not found at " + path.string() + "; run train-victim first");
  }
  toymodel::Checkpoint ck;
  try {
    ck = toymodel::load_checkpoint(path);
  } catch (const toymodel::CheckpointError& e) {
    throw CliError(ErrorKind::kCheckpoint, std::string(e.what()) + " (" + path.string() + ")");
  }
  if (!(ck.params.config == ctx.cfg.model)) {
    throw CliError(ErrorKind::kCheckpoint,
                   "checkpoint model dims differ from the config (" + path.string() + ")");
  }
  return std::move(ck.params);
}

json seeds_json(const std::vector<std::uint64_t>& seeds) { return json(seeds); }

// Replaces SOLID entries without a fixed depth by the selected prefix.
struct ResolvedStrategies {
  std::vector<harness::DeploymentStrategy> list;
  std::optional<harness::DDReport> dd;
  std::optional<harness::SolidChoice> solid;
};

ResolvedStrategies resolve_strategies(const Context& ctx, const toymodel::DecoderParams& victim,
                                      const harness::Suite& suite) {
  ResolvedStrategies out;
  for (const auto& s : ctx.cfg.strategies) {
    if (s.kind == harness::StrategyKind::kSolid && s.solid_layers == 0) {
      if (!out.dd) {
        ctx.log() << "selecting SOLID depth from the DD curve\n";
        out.dd = harness::compute_dd(victim, suite.combined_eval(), ctx.cfg.dd, {}, ctx.opt.jobs);
        out.solid = harness::solid_select(*out.dd, victim.config.layers);
      }
      if (out.solid->prefix) {
        out.list.push_back(harness::DeploymentStrategy::solid(*out.solid->prefix));
      } else {
        out.list.push_back(harness::DeploymentStrategy::solid(victim.config.layers));
      }
    } else {
      out.list.push_back(s);
    }
  }
  return out;
}

json solid_json(const harness::SolidChoice& c) {
  json j = {{"secured", c.secured.describe()}, {"fallback", c.fallback}, {"warning", c.warning}};
  j["selected"] = c.prefix ? json(*c.prefix) : json();
  return j;
}

json victim_summary(const toymodel::DecoderParams& victim, const harness::Suite& suite) {
  json bench = json::array();
  double total = 0.0;
  for (const auto& b : suite.benchmarks) {
    const auto r = harness::evaluate(victim, b.eval);
    total += r.accuracy;
    bench.push_back({{"name", b.name}, {"accuracy", r.accuracy}, {"loss", r.loss}});
  }
  const auto mix = harness::evaluate(victim, suite.combined_eval());
  return {{"benchmarks", bench},
          {"mean_task_accuracy", total / static_cast<double>(suite.benchmarks.size())},
          {"mixture_accuracy", mix.accuracy},
          {"mixture_loss", mix.loss}};
}

// ---- theory -------------------------------------------------------------

std::vector<std::uint64_t> theory_seeds(const ExperimentConfig& cfg) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < cfg.theory.seed_count; ++i) seeds.push_back(cfg.seed + i);
  return seeds;
}

void cmd_theory_sweep(const Context& ctx) {
  const auto& t = ctx.cfg.theory;
  Rng rng(ctx.cfg.seed, kTheoryStackStream);
  const auto stack = theory::TheoryStack::random(t.layers, t.n, t.d, t.d_q, t.norm_budget, rng);
  const Matrix x0 = normal_sample(t.n, t.d, rng);
  const auto seeds = theory_seeds(ctx.cfg);
  theory::DeepOptions deep = t.deep;
  deep.resample_seed = ctx.cfg.seed;
  const auto sweep = theory::transition_sweep(stack, x0, t.alphas, seeds, deep, nullptr,
                                              ctx.opt.jobs);

  ArtifactWriter w(ctx.dir(), ctx.command, ctx.cfg.hash());
  std::ostringstream csv;
  csv << "alpha,seed,max_deviation,sigma_ratio,collapsed\n";
  json runs = json::array();
  for (const auto& r : sweep.runs) {
    csv << csv_real(r.alpha) << ',' << r.seed << ',' << csv_real(r.max_deviation) << ','
        << csv_real(r.sigma_ratio) << ',' << csv_bool(r.collapsed) << '\n';
    runs.push_back({{"alpha", r.alpha},
                    {"seed", r.seed},
                    {"secured_layer", r.secured_layer},
                    {"realized_fraction", r.realized_fraction},
                    {"max_deviation", r.max_deviation},
                    {"mean_deviation", r.mean_deviation},
                    {"sigma_ratio", r.sigma_ratio},
                    {"iterations", r.iterations},
                    {"converged", r.converged},
                    {"collapsed", r.collapsed}});
  }
  json summary = json::array();
  for (const auto& s : sweep.summary) {
    summary.push_back({{"alpha", s.alpha},
                       {"secured_layer", s.secured_layer},
                       {"realized_fraction", s.realized_fraction},
                       {"mean_deviation", s.mean_deviation},
                       {"collapse_count", s.collapse_count},
                       {"runs", s.runs}});
  }
  const json j = {{"summary", summary}, {"runs", runs}};
  w.csv("theory_sweep.csv", csv.str());
  w.json("theory_sweep.json", j);
  w.finish(ctx.cfg.to_json(), seeds_json(seeds));
  ctx.echo(w.csv_preamble() + csv.str(), j);
}

void cmd_theory_beta(const Context& ctx) {
  const auto& t = ctx.cfg.theory;
  const Rng base(ctx.cfg.seed, kBetaStream);
  const auto estimates = parallel_map(t.beta_budgets.size(), ctx.opt.jobs, [&](std::size_t i) {
    Rng rng = base.split(i);
    return theory::estimate_beta(t.n, t.d, t.d_q, t.beta_budgets[i], rng, t.beta);
  });
  ArtifactWriter w(ctx.dir(), ctx.command, ctx.cfg.hash());
  std::ostringstream csv;
  csv << "norm_budget,beta,alpha_star\n";
  json rows = json::array();
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double beta = estimates[i].value;
    const double a = theory::alpha_star(beta);
    csv << csv_real(t.beta_budgets[i]) << ',' << csv_real(beta) << ',' << csv_real(a) << '\n';
    rows.push_back({{"norm_budget", t.beta_budgets[i]}, {"beta", beta}, {"alpha_star", a}});
  }
  const json j = {{"estimates", rows},
                  {"restarts", t.beta.restarts},
                  {"ascent_steps", t.beta.ascent_steps}};
  w.csv("theory_beta.csv", csv.str());
  w.json("theory_beta.json", j);
  w.finish(ctx.cfg.to_json(), seeds_json({ctx.cfg.seed}));
  ctx.echo(w.csv_preamble() + csv.str(), j);
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

void cmd_theory_adversarial(const Context& ctx) {
  const auto& t = ctx.cfg.theory;
  Rng rng(ctx.cfg.seed, kAdversaryStream);
  const auto adv = theory::adversarial_construction(t.n, t.d, t.d_q, t.adversarial_budget, rng);
  const auto stack = theory::adversarial_stack(adv, t.layers, t.adversarial_budget);
  std::vector<std::uint64_t> seeds;
  for (std::size_t r = 0; r < t.adversarial_replacements; ++r) seeds.push_back(ctx.cfg.seed + r);
  const auto reports = parallel_map(seeds.size(), ctx.opt.jobs, [&](std::size_t i) {
    Rng rr(seeds[i], kSwapStream);
    theory::SecuredLayer secured{t.layers, theory::AttnParams::xavier(t.d, t.d_q, rr)};
    return theory::deep_normalized_output(adv.x, stack, secured, t.deep);
  });

  ArtifactWriter w(ctx.dir(), ctx.command, ctx.cfg.hash());
  std::ostringstream csv;
  csv << "replacement,seed,min_deviation,max_deviation,sigma_ratio,collapsed\n";
  json runs = json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    csv << i << ',' << seeds[i] << ',' << csv_real(r.min_deviation()) << ','
        << csv_real(r.max_deviation()) << ',' << csv_real(r.sigma_ratio) << ','
        << csv_bool(r.collapsed()) << '\n';
    runs.push_back({{"seed", seeds[i]},
                    {"min_deviation", r.min_deviation()},
                    {"max_deviation", r.max_deviation()},
                    {"sigma_ratio", r.sigma_ratio},
                    {"iterations", r.iterations_used},
                    {"collapsed", r.collapsed()}});
  }
  const json j = {{"norm_budget", t.adversarial_budget},
                  {"layers", t.layers},
                  {"secured_layer", t.layers},
                  {"pair", {adv.pair_first, adv.pair_second}},
                  {"gain", adv.gain},
                  {"key", matrix_json(adv.params.key)},
                  {"query", matrix_json(adv.params.query)},
                  {"x", matrix_json(adv.x)},
                  {"runs", runs}};
  w.csv("theory_adversarial.csv", csv.str());
  w.json("theory_adversarial.json", j);
  w.finish(ctx.cfg.to_json(), seeds_json(seeds));
  ctx.echo(w.csv_preamble() + csv.str(), j);
}

// ---- model --------------------------------------------------------------

void cmd_train_victim(const Context& ctx) {
  const auto suite = ctx.cfg.suite();
  harness::TrainLog tlog;
  const auto vc = ctx.cfg.victim_config();
  auto params = harness::train_victim(ctx.cfg.model, ctx.cfg.task_specs(), suite.eval_hashes, vc,
                                      &tlog, [&](std::size_t step, double loss) {
                                        ctx.log() << "step " << step << " loss "
                                                  << format_real(loss, 6) << '\n';
                                      });
  const json summary = victim_summary(params, suite);

  ArtifactWriter w(ctx.dir(), ctx.command, ctx.cfg.hash());
  toymodel::Checkpoint ck{params, {{"config_hash", ctx.cfg.hash()},
                                   {"seed", vc.seed},
                                   {"steps", vc.steps},
                                   {"mixture_accuracy", summary["mixture_accuracy"]}}};
  const auto bytes = toymodel::encode_checkpoint(ck);
  w.binary("victim.sold", bytes);
  if (ctx.cfg.victim.checkpoint.size()) {
    fs::path target = ctx.cfg.victim.checkpoint;
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    toymodel::save_checkpoint(ck, target);
  }
  std::ostringstream csv;
  csv << "step,loss\n";
  for (const auto& [step, loss] : tlog.losses) csv << step << ',' << csv_real(loss) << '\n';
  std::ostringstream acc;
  acc << "benchmark,accuracy,loss\n";
  for (const auto& b : summary["benchmarks"]) {
    acc << b["name"].get<std::string>() << ',' << csv_real(b["accuracy"]) << ','
        << csv_real(b["loss"]) << '\n';
  }
  w.csv("train_log.csv", csv.str());
  w.csv("victim_eval.csv", acc.str());
  w.json("victim.json", summary);
  w.finish(ctx.cfg.to_json(), seeds_json({vc.seed}));
  ctx.echo(w.csv_preamble() + acc.str(), summary);
}

std::string dd_csv(const harness::DDReport& dd) {
  std::ostringstream csv;
  csv << "prefix,dd";
  for (auto s : dd.seeds) csv << ",seed_" << s;
  csv << '\n';
  csv << 0 << ',' << csv_real(dd.dd_empty);
  for (std::size_t i = 0; i < dd.seeds.size(); ++i) csv << ',' << csv_real(dd.dd_empty);
  csv << '\n';
  for (const auto& e : dd.curve) {
    csv << e.prefix << ',' << csv_real(e.mean);
    for (double v : e.per_seed) csv << ',' << csv_real(v);
    csv << '\n';
  }
  return csv.str();
}

void cmd_dd(const Context& ctx) {
  const auto victim = load_victim(ctx);
  const auto suite = ctx.cfg.suite();
  const auto dd = harness::compute_dd(victim, suite.combined_eval(), ctx.cfg.dd, {}, ctx.opt.jobs);
  ArtifactWriter w(ctx.dir(), ctx.command, ctx.cfg.hash());
  const std::string csv = dd_csv(dd);
  const json j = dd.to_json();
  w.csv("dd.csv", csv);
  w.json("dd.json", j);
  w.finish(ctx.cfg.to_json(), seeds_json(dd.seeds));
  ctx.echo(w.csv_preamble() + csv, j);
}

void cmd_solid_select(const Context& ctx) {
  const auto victim = load_victim(ctx);
  const auto suite = ctx.cfg.suite();
  const auto dd = harness::compute_dd(victim, suite.combined_eval(), ctx.cfg.dd, {}, ctx.opt.jobs);
  const auto choice = harness::solid_select(dd, victim.config.layers);
  if (choice.fallback) ctx.log() << "warning: " << choice.warning << '\n';
  std::ostringstream csv;
  csv << "prefix,dd,threshold,qualifies,selected\n";
  for (const auto& e : dd.curve) {
    csv << e.prefix << ',' << csv_real(e.mean) << ',' << csv_real(dd.threshold()) << ','
        << csv_bool(e.mean >= dd.threshold()) << ','
        << csv_bool(choice.prefix && *choice.prefix == e.prefix) << '\n';
  }
  json j = solid_json(choice);
  j["dd"] = dd.to_json();
  ArtifactWriter w(ctx.dir(), ctx.command, ctx.cfg.hash());
  w.csv("solid_select.csv", csv.str());
  w.json("solid_select.json", j);
  w.finish(ctx.cfg.to_json(), seeds_json(dd.seeds));
  ctx.echo(w.csv_preamble() + csv.str(), j);
}

void cmd_attack(const Context& ctx) {
  const auto victim = load_victim(ctx);
  const auto suite = ctx.cfg.suite();
  const auto resolved = resolve_strategies(ctx, victim, suite);
  const json vsum = victim_summary(victim, suite);

  // The fully secured run doubles as the delta baseline.
  std::optional<harness::DistillReport> baseline;
  std::vector<harness::DistillReport> reports(resolved.list.size());
  for (std::size_t i = 0; i < resolved.list.size(); ++i) {
    if (resolved.list[i].kind != harness::StrategyKind::kFullySecured) continue;
    ctx.log() << "attacking " << resolved.list[i].label() << '\n';
    reports[i] = harness::run_attack(victim, suite, resolved.list[i], ctx.cfg.attack, ctx.opt.jobs);
    if (!baseline) baseline = reports[i];
  }
  if (!baseline) {
    ctx.log() << "attacking fully-secured (baseline)\n";
    baseline = harness::run_attack(victim, suite, harness::DeploymentStrategy::fully_secured(),
                                   ctx.cfg.attack, ctx.opt.jobs);
  }
  for (std::size_t i = 0; i < resolved.list.size(); ++i) {
    if (resolved.list[i].kind != harness::StrategyKind::kFullySecured) {
      ctx.log() << "attacking " << resolved.list[i].label() << '\n';
      reports[i] =
          harness::run_attack(victim, suite, resolved.list[i], ctx.cfg.attack, ctx.opt.jobs);
    }
    harness::attach_delta(reports[i], *baseline);
  }

  std::string csv = harness::csv_header() + "\n";
  json reports_j = json::array();
  std::vector<json> for_checks;
  for (const auto& r : reports) {
    csv += harness::csv_rows(r);
    reports_j.push_back(r.to_json());
    for_checks.push_back(r.to_json());
  }
  const auto checks = check_ordering(for_checks, vsum["mixture_accuracy"].get<double>());
  if (!checks.all_passed()) ctx.log() << checks.flag() << '\n';
  json j = {{"reports", reports_j}, {"victim", vsum}, {"checks", checks.to_json()}};
  j["solid"] = resolved.solid ? solid_json(*resolved.solid) : json();
  ArtifactWriter w(ctx.dir(), ctx.command, ctx.cfg.hash());
  w.csv("attack.csv", csv);
  w.json("attack.json", j);
  w.finish(ctx.cfg.to_json(), seeds_json(ctx.cfg.attack.seeds));
  ctx.echo(w.csv_preamble() + csv, j);
}

void cmd_customize(const Context& ctx) {
  const auto victim = load_victim(ctx);
  const auto suite = ctx.cfg.suite();
  const auto resolved = resolve_strategies(ctx, victim, suite);
  const std::size_t num_layers = victim.config.layers;

  std::vector<std::pair<std::string, toymodel::SecuredSet>> runs;
  runs.emplace_back("fully-open", toymodel::SecuredSet::none(num_layers));
  for (const auto& s : resolved.list) runs.emplace_back(s.label(), s.secured_set(num_layers));
  const auto results = parallel_map(runs.size(), ctx.opt.jobs, [&](std::size_t i) {
    return harness::customize(victim, runs[i].second, ctx.cfg.customize, ctx.cfg.task_specs());
  });

  std::ostringstream csv;
  csv << "strategy,secured,frozen_accuracy,accuracy,trained,trainable_scalars\n";
  json rows = json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = results[i];
    csv << runs[i].first << ",\"" << r.secured << "\"," << csv_real(r.frozen_accuracy) << ','
        << csv_real(r.accuracy) << ',' << csv_bool(r.trained) << ',' << r.trainable_scalars
        << '\n';
    json rj = r.to_json();
    rj["strategy"] = runs[i].first;
    rows.push_back(rj);
  }
  json j = {{"task", ctx.cfg.customize.task.name()},
            {"transition_seed", ctx.cfg.customize.task.transition_seed},
            {"results", rows}};
  ArtifactWriter w(ctx.dir(), ctx.command, ctx.cfg.hash());
  w.csv("customize.csv", csv.str());
  w.json("customize.json", j);
  w.finish(ctx.cfg.to_json(), seeds_json({ctx.cfg.customize.seed}));
  ctx.echo(w.csv_preamble() + csv.str(), j);
}

harness::SweepConfig sweep_config(const ExperimentConfig& cfg, bool with_custom) {
  harness::SweepConfig sc;
  sc.attack = cfg.attack;
  sc.dd_seeds = cfg.dd.seeds;
  if (with_custom) sc.customize = cfg.customize;
  return sc;
}

std::vector<std::size_t> sweep_sizes(const ExperimentConfig& cfg) {
  if (!cfg.sweep.sizes.empty()) return cfg.sweep.sizes;
  const std::size_t max = cfg.sweep.granularity == toymodel::Granularity::kLayer
                              ? cfg.model.layers
                              : cfg.model.layers * harness::matrix_blocks_per_layer();
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s <= max; ++s) out.push_back(s);
  return out;
}

harness::SweepTable run_sweep(const Context& ctx, const std::string& kind) {
  const auto victim = load_victim(ctx);
  const auto suite = ctx.cfg.suite();
  if (kind == "placement") {
    return harness::sweep_placement(victim, suite, ctx.cfg.sweep.window,
                                    sweep_config(ctx.cfg, false), ctx.opt.jobs);
  }
  return harness::sweep_size(victim, suite, sweep_sizes(ctx.cfg), ctx.cfg.sweep.granularity,
                             sweep_config(ctx.cfg, true), ctx.opt.jobs);
}

void write_sweep(const Context& ctx, const harness::SweepTable& table, const std::string& stem) {
  ArtifactWriter w(ctx.dir(), ctx.command, ctx.cfg.hash());
  const std::string csv = table.csv();
  const json j = table.to_json();
  w.csv(stem + ".csv", csv);
  w.json(stem + ".json", j);
  w.finish(ctx.cfg.to_json(), seeds_json(ctx.cfg.attack.seeds));
  ctx.echo(w.csv_preamble() + csv, j);
}

void cmd_sweep_placement(const Context& ctx) {
  write_sweep(ctx, run_sweep(ctx, "placement"), "sweep_placement");
}

void cmd_sweep_size(const Context& ctx) { write_sweep(ctx, run_sweep(ctx, "size"), "sweep_size"); }

void cmd_correlate(const Context& ctx) {
  std::vector<std::string> benchmarks;
  std::vector<double> dd, adr;
  std::vector<std::vector<double>> ratios;
  json source;
  if (ctx.opt.input) {
    auto cols = read_sweep_csv(*ctx.opt.input);
    benchmarks = std::move(cols.benchmarks);
    dd = std::move(cols.dd);
    adr = std::move(cols.adr);
    ratios = std::move(cols.ratios);
    source = {{"input", ctx.opt.input->filename().string()}, {"input_hash", cols.config_hash}};
  } else {
    const auto table = run_sweep(ctx, ctx.cfg.sweep.kind);
    benchmarks = table.benchmarks;
    ratios.resize(benchmarks.size());
    for (const auto& r : table.rows) {
      dd.push_back(r.dd);
      adr.push_back(r.report.adr);
      for (std::size_t b = 0; b < benchmarks.size(); ++b) {
        const auto& s = r.report.benchmarks.at(b);
        ratios[b].push_back(s.excluded ? std::nan("") : s.ratio);
      }
    }
    source = {{"sweep", ctx.cfg.sweep.kind}};
  }
  std::vector<harness::Correlation> corr;
  try {
    corr = harness::dd_dr_correlation(benchmarks, dd, adr, ratios);
  } catch (const std::invalid_argument& e) {
    throw CliError(ErrorKind::kRuntime, e.what());
  }
  std::ostringstream csv;
  csv << "group,pairs,pearson,spearman,defined\n";
  json rows = json::array();
  for (const auto& c : corr) {
    csv << c.group << ',' << c.pairs << ',' << csv_real(c.pearson) << ',' << csv_real(c.spearman)
        << ',' << csv_bool(c.defined) << '\n';
    json cj = {{"group", c.group}, {"pairs", c.pairs}, {"defined", c.defined}, {"note", c.note}};
    cj["pearson"] = c.defined ? json(c.pearson) : json();
    cj["spearman"] = c.defined ? json(c.spearman) : json();
    rows.push_back(cj);
  }
  const json j = {{"source", source}, {"correlations", rows}, {"caveat", kSmallModelCaveat}};
  ArtifactWriter w(ctx.dir(), ctx.command, ctx.cfg.hash());
  w.csv("correlation.csv", csv.str());
  w.json("correlation.json", j);
  w.finish(ctx.cfg.to_json(), seeds_json(ctx.cfg.dd.seeds));
  ctx.echo(w.csv_preamble() + csv.str(), j);
}

void cmd_report(const Context& ctx) {
  const fs::path input = ctx.opt.input ? *ctx.opt.input : ctx.opt.out_dir / "attack";
  if (!fs::is_directory(input)) {
    throw CliError(ErrorKind::kIo, "report input " + input.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(input)) {
    if (e.is_regular_file() && e.path().extension() == ".json" &&
        e.path().filename() != "run_manifest.json") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::string hash;
  std::vector<json> reports;
  std::optional<json> checks;
  std::optional<double> victim_acc;
  for (const auto& f : files) {
    std::ifstream in(f);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw CliError(ErrorKind::kIo, "cannot parse " + f.string() + ": " + e.what());
    }
    if (j.value("command", "") != "attack") continue;
    const std::string h = j.value("config_hash", "");
    if (!hash.empty() && h != hash) {
      throw CliError(ErrorKind::kRuntime,
                     "refusing to mix config hashes " + hash + " and " + h + " in one report");
    }
    hash = h;
    for (const auto& r : j["reports"]) reports.push_back(r);
    if (j.contains("victim")) victim_acc = j["victim"]["mixture_accuracy"].get<double>();
  }
  if (reports.empty()) {
    throw CliError(ErrorKind::kRuntime, "no attack results under " + input.string());
  }
  const auto oc = check_ordering(reports, victim_acc);
  std::ostringstream md;
  md << "# Distillation ratios (%)\n\n";
  md << "config_hash " << hash << "\n\n";
  md << markdown_table(reports) << '\n';
  md << "## Checks\n\n";
  for (const auto& c : oc.checks) {
    md << "- " << (c.passed ? "PASS" : "FAIL") << ": " << c.name << " (" << c.detail << ")\n";
  }
  if (!oc.all_passed()) md << "\n" << oc.flag() << '\n';

  ArtifactWriter w(ctx.dir(), ctx.command, hash);
  w.text("report.md", md.str());
  w.finish(json::object(), json::array(), {{"input", input.filename().string()}});
  if (ctx.opt.out) {
    if (ctx.opt.format == Format::kCsv) {
      *ctx.opt.out << md.str();
    } else {
      *ctx.opt.out << json{{"config_hash", hash}, {"checks", oc.to_json()}}.dump(2) << '\n';
    }
  }
}

struct CommandEntry {
  const char* name;
  void (*fn)(const Context&);
  std::vector<std::string> sections;
};

const std::vector<CommandEntry>& registry() {
  static const std::vector<CommandEntry> r = {
      {"theory-sweep", cmd_theory_sweep, {"theory"}},
      {"theory-adversarial", cmd_theory_adversarial, {"theory"}},
      {"theory-beta", cmd_theory_beta, {"theory"}},
      {"train-victim", cmd_train_victim, {"model", "victim"}},
      {"dd", cmd_dd, {"model"}},
      {"solid-select", cmd_solid_select, {"model"}},
      {"attack", cmd_attack, {"model", "attack"}},
      {"customize", cmd_customize, {"model", "customize"}},
      {"sweep-placement", cmd_sweep_placement, {"model", "attack", "sweep"}},
      {"sweep-size", cmd_sweep_size, {"model", "attack", "sweep"}},
      {"correlate", cmd_correlate, {"sweep"}},
      {"report", cmd_report, {}},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& e : registry()) v.push_back(e.name);
    return v;
  }();
  return names;
}

bool takes_input(const std::string& command) {
  return command == "correlate" || command == "report";
}

void run_command(const std::string& command, const ExperimentConfig& config,
                 const RunOptions& options) {
  for (const auto& e : registry()) {
    if (command != e.name) continue;
    config.require(e.sections);
    if (options.input && !takes_input(command)) {
      throw CliError(ErrorKind::kUsage, "--input is not accepted by " + command);
    }
    if (options.jobs == 0) throw CliError(ErrorKind::kUsage, "--jobs must be at least 1");
    const Context ctx{config, options, command};
    try {
      e.fn(ctx);
    } catch (const CliError&) {
      throw;
    } catch (const toymodel::CheckpointError& err) {
      throw CliError(ErrorKind::kCheckpoint, err.what());
    } catch (const fs::filesystem_error& err) {
      throw CliError(ErrorKind::kIo, err.what());
    } catch (const std::exception& err) {
      throw CliError(ErrorKind::kRuntime, err.what());
    }
    return;
  }
  throw CliError(ErrorKind::kUsage, "unknown command " + command);
}

// ---- artifacts ----------------------------------------------------------

ArtifactWriter::ArtifactWriter(fs::path dir, std::string command, std::string config_hash)
    : dir_(std::move(dir)), command_(std::move(command)), hash_(std::move(config_hash)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw CliError(ErrorKind::kIo, "cannot create " + dir_.string() + ": " + ec.message());
}

std::string ArtifactWriter::csv_preamble() const {
  return "# layerlock " + command_ + " config_hash=" + hash_ + "\n";
}

void ArtifactWriter::record(const std::string& name, const std::string& bytes) {
  const fs::path path = dir_ / name;
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CliError(ErrorKind::kIo, "cannot write " + path.string());
  files_.emplace_back(name, hex64(fnv1a64(bytes)));
}

void ArtifactWriter::csv(const std::string& name, const std::string& body) {
  record(name, csv_preamble() + body);
}

void ArtifactWriter::json(const std::string& name, nlohmann::json body) {
  body["command"] = command_;
  body["config_hash"] = hash_;
  record(name, body.dump(2) + "\n");
}

void ArtifactWriter::text(const std::string& name, const std::string& body) {
  record(name, body);
}

void ArtifactWriter::binary(const std::string& name, const std::vector<unsigned char>& bytes) {
  record(name, std::string(bytes.begin(), bytes.end()));
}

void ArtifactWriter::finish(const nlohmann::json& config, const nlohmann::json& seeds,
                            const nlohmann::json& extra) {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& [name, h] : files_) files.push_back({{"name", name}, {"fnv1a64", h}});
  nlohmann::json m = {{"command", command_},
                      {"config_hash", hash_},
                      {"seeds", seeds},
                      {"versions",
                       {{"layerlock", kVersion},
                        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                        {"compiler", __VERSION__}}},
                      {"files", files},
                      {"config", config}};
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  const std::string bytes = m.dump(2) + "\n";
  std::ofstream out(dir_ / "run_manifest.json", std::ios::binary);
  out << bytes;
  if (!out) throw CliError(ErrorKind::kIo, "cannot write run_manifest.json");
}

SweepColumns read_sweep_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw CliError(ErrorKind::kIo, "cannot open " + path.string());
  SweepColumns out;
  std::string line;
  std::getline(in, line);
  const auto pos = line.find("config_hash=");
  if (line.rfind("# layerlock sweep-", 0) != 0 || pos == std::string::npos) {
    throw CliError(ErrorKind::kIo, path.string() + " is not a sweep CSV");
  }
  out.config_hash = line.substr(pos + 12);
  auto split = [](const std::string& s) {
    // Fields never contain commas except the quoted secured label.
    std::vector<std::string> f;
    std::string cur;
    bool quoted = false;
    for (char c : s) {
      if (c == '"') {
        quoted = !quoted;
      } else if (c == ',' && !quoted) {
        f.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    f.push_back(cur);
    return f;
  };
  std::getline(in, line);
  const auto header = split(line);
  std::size_t dd_col = header.size(), adr_col = header.size();
  std::vector<std::size_t> ratio_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "dd") dd_col = i;
    if (header[i] == "adr") adr_col = i;
    if (header[i].rfind("ratio_", 0) == 0) {
      ratio_cols.push_back(i);
      out.benchmarks.push_back(header[i].substr(6));
    }
  }
  if (dd_col == header.size() || adr_col == header.size()) {
    throw CliError(ErrorKind::kIo, path.string() + " lacks dd/adr columns");
  }
  out.ratios.resize(ratio_cols.size());
  auto number = [&](const std::string& s) {
    if (s == "nan") return std::nan("");
    try {
      return std::stod(s);
    } catch (const std::exception&) {
      throw CliError(ErrorKind::kIo, "bad number \"" + s + "\" in " + path.string());
    }
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size()) throw CliError(ErrorKind::kIo, "ragged row in " + path.string());
    out.dd.push_back(number(f[dd_col]));
    out.adr.push_back(number(f[adr_col]));
    for (std::size_t b = 0; b < ratio_cols.size(); ++b) out.ratios[b].push_back(number(f[ratio_cols[b]]));
  }
  return out;
}

}  // namespace layerlock::experiment
