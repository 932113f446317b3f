#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pea/pea.hpp"

namespace {

using namespace pea;

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, const std::string& out,
            const std::string& format, bool strict) {
  auto cfg = load_config(config);
  RunOptions o;
  o.seed = seed;
  o.strict = strict;
  auto r = run_scenario(cfg, o);
  const auto& s = r.summary;
  std::string dir = out.empty() ? (cfg.out_dir.empty() ? "out/" + cfg.name : cfg.out_dir) : out;
  write_outputs(cfg, r, dir, format);
  std::printf("%s: N=%zu max_bound_margin=%.3e worst_theta=%zu log_slack=%.3e regret/N=%.4f violations=%zu%s%s\n",
              s.name.c_str(), s.N, s.max_bound_margin, s.worst_theta, s.cumulative_log_slack, s.regret_per_step,
              s.violations, s.error.empty() ? "" : " error=", s.error.c_str());
  for (const auto& [label, p] : s.continuity)
    if (p.suspect) std::printf("warning: %s looks discontinuous (ratio %.3e over %d probes)\n", label.c_str(), p.worst_ratio, p.pairs);
  std::printf("audits %s, expected %s -> %s\n", s.audits_ok ? "pass" : "fail", s.expect.c_str(),
              s.expectation_met ? "OK" : "MISMATCH");
  return s.expectation_met ? 0 : 1;
}

int cmd_verify(const std::string& traj, const std::string& meta, bool strict) {
  auto records = read_jsonl(traj);
  auto k = read_meta_constants(meta);
  auto v = verify_trajectory(records, k, strict);
  for (std::size_t t = 0; t < v.bounds.size(); ++t) {
    const auto& b = v.bounds[t];
    std::printf("%-24s margin=%.3e step=%zu %s%s\n", k[t].label.c_str(), b.worst_margin, b.worst_step,
                b.ok ? "ok" : "FAIL", b.consistent ? "" : " (inconsistent cumulative fields)");
  }
  std::printf("potential non-increase: worst=%.3e step=%zu %s\n", v.monotone.worst_increase, v.monotone.worst_step,
              v.monotone.ok ? "ok" : "FAIL");
  return v.ok ? 0 : 1;
}

struct Suite {
  int failures = 0;
  void line(bool ok, const std::string& what) {
    std::printf("[%s] %s\n", ok ? "ok" : "FAIL", what.c_str());
    if (!ok) ++failures;
  }
};

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << x;
  return os.str();
}

int cmd_check(const std::string& suite, int samples) {
  Suite s;
  auto want = [&](const char* name) { return suite == "all" || suite == name; };
  if (want("properness")) {
    for (auto [name, m] : {std::pair{"log", 2}, {"log", 3}, {"brier", 3}, {"hellinger", 3}}) {
      auto r = check_proper(canonical_proper_loss(builtin_game(name, m), 1.0), m == 2 ? 50 : 30);
      s.line(r.max_violation <= 1e-9 && r.strictness,
             std::string("proper ") + name + " m=" + std::to_string(m) + " violation " + fmt(r.max_violation));
    }
    auto raw = check_proper(raw_hellinger_loss(2), 50);
    s.line(raw.max_violation > 0, "raw Hellinger loss is not proper, violation " + fmt(raw.max_violation));
  }
  if (want("mixability")) {
    auto row = [&](const char* name, double eta, bool expect) {
      auto r = check_mixability(builtin_game(name, 2), eta, samples, 1e-6);
      s.line(r.mixable == expect, std::string(name) + " eta=" + fmt(eta) + (expect ? " mixable" : " not mixable") +
                                      ", worst gap " + fmt(r.worst_gap));
    };
    row("log", 1.0, true);
    row("log", 1.3, false);
    row("square", 2.0, true);
    row("square", 2.5, false);
    row("absolute", 1.0, false);
  }
  if (want("supermartingale")) {
    auto row = [&](const char* name, double eta, bool expect) {
      Game g = builtin_game(name, 2);
      auto r = supermartingale_property_check(canonical_proper_loss(g, eta), 1.0, eta, g, samples);
      bool ok = expect ? r.max_excess <= 1e-9 : r.max_excess > 1e-4;
      s.line(ok, std::string(name) + " eta=" + fmt(eta) + " max E q - 1 = " + fmt(r.max_excess));
    };
    for (double eta : {0.25, 0.5, 1.0}) row("log", eta, true);
    for (double eta : {0.5, 1.0, 2.0}) row("square", eta, true);
    row("log", 1.3, false);
    row("square", 2.5, false);
  }
  if (want("exp-convexity")) {
    for (const char* name : {"brier", "kl"}) {
      auto r = check_relative_exp_convexity(simplex_game(name, 3), 1.0, 1.0, samples);
      s.line(r.holds, std::string(name) + " relative exp-convexity, worst " + fmt(r.worst_violation));
    }
    auto r = check_relative_exp_convexity(simplex_game("absolute", 2), 1.0, 1.0, samples);
    s.line(!r.holds, "absolute extension violates relative exp-convexity, worst " + fmt(r.worst_violation));
  }
  if (want("equivalence")) {
    // same advice and outcomes through both algorithms; binary games asserted, m = 3 only reported
    auto gap = [&](const char* name, std::size_t m, double eta) {
      Game g = builtin_game(name, m);
      Rng rng(17);
      auto aa = aa_init(g, 1.0, eta, Distribution::uniform(3));
      auto dfa = dfa_init(canonical_proper_loss(g, eta), 1.0, eta, Distribution::uniform(3));
      DfaOptions o;
      o.selection = BinarySelection::admissible_midpoint;
      double worst = 0;
      for (int n = 0; n < 200; ++n) {
        std::vector<LossVector> adv;
        for (int t = 0; t < 3; ++t) {
          auto p = rng.dirichlet(m);
          adv.push_back(g.prediction(g.domain == DomainKind::simplex ? p : Decision{p[1]}));
        }
        std::size_t omega = rng.below(m);
        auto pa = aa_predict(aa, adv);
        auto pd = dfa_predict(dfa, adv, o);
        for (std::size_t k = 0; k < pa.decision.size(); ++k)
          worst = std::max(worst, std::abs(pa.decision[k] - pd.decision[k]));
        aa = aa_update(aa, adv, pa.decision, omega);
        dfa = dfa_update(dfa, adv, pd, omega);
      }
      return worst;
    };
    for (auto [name, eta] : {std::pair{"log", 1.0}, {"square", 2.0}}) {
      double w = gap(name, 2, eta);
      s.line(w <= 1e-6, std::string("AA and DFA agree on ") + name + ", max decision gap " + fmt(w));
    }
    for (const char* name : {"log", "brier"})
      std::printf("[info] %s m=3: max AA/DFA decision gap %s\n", name, fmt(gap(name, 3, 1.0)).c_str());
  }
  std::printf("%d failure(s)\n", s.failures);
  return s.failures ? 1 : 0;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
  return v;
}

int cmd_sweep(const std::string& config, const std::string& param, const std::string& values, const std::string& out) {
  auto base = load_config(config);
  std::ostringstream csv;
  csv << "param,value,step,regret,bound\n";
  bool all_ok = true;
  for (double v : parse_list(values)) {
    auto cfg = base;
    if (param == "eta") {
      cfg.eta = v;
    } else if (param == "K") {
      const auto k = static_cast<std::size_t>(v);
      if (k < 1) throw ConfigError("K must be positive");
      std::vector<ExpertSpec> e;
      for (std::size_t i = 0; i < k; ++i) e.push_back(base.experts[i % base.experts.size()]);
      cfg.experts = e;
      cfg.prior.clear();
    } else {
      throw ConfigError("sweep parameter must be eta or K");
    }
    auto r = run_scenario(cfg);
    all_ok = all_ok && r.summary.audits_ok;
    const std::size_t every = std::max<std::size_t>(1, r.records.size() / 50);
    for (const auto& rec : r.records) {
      if (rec.step % every && rec.step != r.records.size()) continue;
      // regret against the best expert so far and the bound that applies to it
      std::size_t best = 0;
      for (std::size_t t = 1; t < rec.expert_cumulative.size(); ++t)
        if (rec.expert_cumulative[t] < rec.expert_cumulative[best]) best = t;
      const auto& k = r.summary.constants[best];
      double learner = rec.learner_cumulative[rec.learner_cumulative.size() == 1 ? 0 : best];
      double regret = learner - k.c * rec.expert_cumulative[best];
      double bound = (k.c / k.eta) * (std::log(1 / k.prior) + rec.cumulative_log_slack);
      csv << param << "," << csv_number(v) << "," << rec.step << "," << csv_number(regret) << "," << csv_number(bound)
          << "\n";
    }
  }
  if (out.empty())
    std::cout << csv.str();
  else
    write_file(out, csv.str());
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prediction with expert advice: aggregating and defensive forecasting"};
  app.require_subcommand(1);

  std::string config, out, format = "jsonl", traj, meta, suite = "all", param, values;
  std::optional<std::uint64_t> seed;
  bool strict = false;
  int samples = 10000;

  auto* run = app.add_subcommand("run", "execute a scenario");
  run->add_option("--config", config, "scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--out", out, "output directory");
  run->add_option("--format", format, "jsonl writes the trajectory; csv writes only the summary")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  run->add_flag("--strict", strict, "audit bounds without slack allowance");

  auto* verify = app.add_subcommand("verify", "re-audit a trajectory file");
  verify->add_option("--trajectory", traj)->required()->check(CLI::ExistingFile);
  verify->add_option("--meta", meta, "meta.json written next to the trajectory")->required()->check(CLI::ExistingFile);
  verify->add_flag("--strict", strict);

  auto* check = app.add_subcommand("check", "run property suites");
  check->add_option("--suite", suite)->check(CLI::IsMember({"all", "properness", "mixability", "supermartingale",
                                                             "exp-convexity", "equivalence"}));
  check->add_option("--samples", samples)->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "grid over eta or K, CSV of regret vs bound");
  sweep->add_option("--config", config)->required()->check(CLI::ExistingFile);
  sweep->add_option("--param", param)->required()->check(CLI::IsMember({"eta", "K"}));
  sweep->add_option("--values", values, "comma-separated")->required();
  sweep->add_option("--out", out, "CSV path (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config, seed, out, format, strict);
    if (*verify) return cmd_verify(traj, meta, strict);
    if (*check) return cmd_check(suite, samples);
    if (*sweep) return cmd_sweep(config, param, values, out);
  } catch (const pea::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
