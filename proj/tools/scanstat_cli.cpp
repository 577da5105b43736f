#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>

#include "scanstat/cli.hpp"

using scanstat::RunConfig;

namespace {

void add_common(CLI::App* sub, RunConfig& cfg, std::string& config_path) {
  sub->add_option("--config", config_path, "JSON config file (flags override it)");
  sub->add_option("--seed", cfg.seed, "master seed");
  sub->add_option("--workers", cfg.workers, "worker threads (0 = hardware)");
  sub->add_option("--reps", cfg.reps, "Monte Carlo replicates");
  sub->add_option("--out", cfg.out_path, "output file path");
  sub->add_option("--format", cfg.format, "json | csv");
  sub->add_option("--kernel", cfg.kernel_json,
                  R"(kernel spec, e.g. {"shape":"ball","r":1.0,"d":2})");
  sub->add_option("--law", cfg.law_json,
                  R"(mark law spec, e.g. {"law":"degenerate","eta":1.0})");
  sub->add_option("--c", cfg.c, "threshold per unit rate (c > max(0, mean*vol(B)))");
  sub->add_option("--chat", cfg.c_hat, "threshold via M(theta_c) = chat (> 1)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moving-sum tail probabilities for marked Poisson and Gaussian fields"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;

  auto* approx = app.add_subcommand("approx", "tail-probability approximation");
  add_common(approx, cfg, config_path);
  approx->add_option("--lambda", cfg.lambda, "Poisson rate");
  approx->add_option("--domain-volume", cfg.domain_volume, "volume of the scan domain D");
  approx->add_option("--domain-box", cfg.domain_box, "domain D = prod [0, b_k]");
  approx->add_option("--k-route", cfg.k_route, "local | occupation | rectangle | ball | omega");
  approx->add_option("--variant", cfg.variant, "linear | saturating");
  approx->add_option("--m-list", cfg.m_list, "box sizes for the local route");

  auto* oracle = app.add_subcommand("oracle", "brute-force field scan estimate of p");
  add_common(oracle, cfg, config_path);
  oracle->add_option("--lambda", cfg.lambda, "Poisson rate");
  oracle->add_option("--domain-box", cfg.domain_box, "domain D = prod [0, b_k]");
  oracle->add_option("--method", cfg.method, "exact | grid");
  oracle->add_option("--grid-h", cfg.grid_h, "grid step for the grid method");
  oracle->add_option("--dump", cfg.dump_path, "CSV dump of per-replicate suprema");

  auto* kconst = app.add_subcommand("k-const", "asymptotic constant K by a chosen route");
  add_common(kconst, cfg, config_path);
  kconst->add_option("--k-route", cfg.k_route, "local | occupation | rectangle | ball | omega");
  kconst->add_option("--m-list", cfg.m_list, "box sizes for the local route");
  kconst->add_option("--levels", cfg.levels, "walk levels for the rectangle route");

  auto* nu = app.add_subcommand("nu", "overshoot constant of the ladder walk");
  add_common(nu, cfg, config_path);
  nu->add_option("--levels", cfg.levels, "boundary levels (increasing)");

  auto* omega = app.add_subcommand("omega", "mean inverse volume of the limit set");
  add_common(omega, cfg, config_path);

  auto* gauss = app.add_subcommand("gauss", "Gaussian-field constant and bound");
  add_common(gauss, cfg, config_path);
  gauss->add_option("--alpha", cfg.alpha, "local covariance exponent in (0,2]");
  gauss->add_option("--d", cfg.gauss_dim, "dimension");
  gauss->add_option("--route", cfg.gauss_route, "pickands | clump | thm3 | bound");
  gauss->add_option("--xi", cfg.xi, "slab width for the thm3 route");
  gauss->add_option("--m-list", cfg.m_list, "box sizes for the pickands route");
  gauss->add_option("--grid-h", cfg.grid_h, "grid step override");

  auto* table1 = app.add_subcommand("table1", "normalized-constant table report");
  add_common(table1, cfg, config_path);
  table1->add_option("--rows", cfg.rows, "comma list of I, lower, II");
  table1->add_option("--chat-list", cfg.chat_list, "c_hat values");
  cfg.format = "json";

  CLI11_PARSE(app, argc, argv);

  CLI::App* active = app.get_subcommands().front();
  cfg.subcommand = active->get_name();
  if (cfg.subcommand == "table1" && active->count("--format") == 0) cfg.format = "csv";

  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) {
      std::cerr << "validation error: cannot open config file " << config_path << "\n";
      return 2;
    }
    nlohmann::json j;
    try {
      f >> j;
    } catch (const std::exception& e) {
      std::cerr << "validation error: bad config file: " << e.what() << "\n";
      return 2;
    }
    // file supplies values only for flags not set on the command line
    RunConfig from_file = scanstat::config_from_json(j, cfg);
    RunConfig merged = from_file;
    merged.subcommand = cfg.subcommand;
    auto keep = [&](const char* flag, auto member) {
      if (active->count(flag) > 0) merged.*member = cfg.*member;
    };
    keep("--seed", &RunConfig::seed);
    keep("--workers", &RunConfig::workers);
    keep("--reps", &RunConfig::reps);
    keep("--out", &RunConfig::out_path);
    keep("--format", &RunConfig::format);
    keep("--kernel", &RunConfig::kernel_json);
    keep("--law", &RunConfig::law_json);
    keep("--c", &RunConfig::c);
    keep("--chat", &RunConfig::c_hat);
    cfg = merged;
  }

  return scanstat::run(cfg, std::cout, std::cerr);
}
