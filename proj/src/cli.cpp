#include "scanstat/cli.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "scanstat/constants.hpp"
#include "scanstat/gauss.hpp"
#include "scanstat/local_field.hpp"
#include "scanstat/mc_oracle.hpp"
#include "scanstat/overshoot.hpp"
#include "scanstat/tail_approx.hpp"

namespace scanstat {

using nlohmann::json;

Kernel parse_kernel(const json& spec) {
  if (!spec.is_object() || !spec.contains("shape"))
    throw std::invalid_argument("kernel spec: expected an object with a \"shape\" field");
  std::string shape = spec.at("shape");
  if (shape == "ball") return Kernel::ball(spec.at("r").get<double>(), spec.at("d").get<int>());
  if (shape == "box") return Kernel::box(spec.at("b").get<std::vector<double>>());
  if (shape == "cylinder")
    return Kernel::cylinder(spec.at("r").get<double>(), spec.at("h").get<double>());
  throw std::invalid_argument("kernel spec: unknown shape \"" + shape + "\"");
}

MarkLaw parse_mark_law(const json& spec) {
  if (!spec.is_object() || !spec.contains("law"))
    throw std::invalid_argument("mark spec: expected an object with a \"law\" field");
  std::string law = spec.at("law");
  if (law == "degenerate") return MarkLaw::degenerate(spec.at("eta").get<double>());
  if (law == "gaussian")
    return MarkLaw::gaussian(spec.at("mean").get<double>(), spec.at("sd").get<double>());
  if (law == "lattice") {
    std::vector<std::pair<double, double>> atoms;
    for (const auto& a : spec.at("atoms"))
      atoms.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
    return MarkLaw::lattice(spec.at("eta").get<double>(), std::move(atoms));
  }
  throw std::invalid_argument("mark spec: unknown law \"" + law + "\"");
}

double threshold_for_mgf_value(const MarkLaw& law, double kernel_volume, double c_hat) {
  if (!(c_hat > 1.0))
    throw std::invalid_argument("c_hat parametrization requires M(theta_c) = c_hat > 1");
  // M is convex with M(0) = 1, so M(theta) = c_hat has a unique root theta > 0
  double lo = 0.0, hi = 1.0;
  while (law.mgf(hi).m < c_hat) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw std::runtime_error("threshold_for_mgf_value: no root");
  }
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (law.mgf(mid).m < c_hat ? lo : hi) = mid;
  }
  double theta = 0.5 * (lo + hi);
  return kernel_volume * law.mgf(theta).m1;
}

namespace {

json kernel_json_of(const RunConfig& cfg) {
  if (cfg.kernel_json.empty()) throw std::invalid_argument("missing kernel spec");
  return json::parse(cfg.kernel_json);
}

json law_json_of(const RunConfig& cfg) {
  if (cfg.law_json.empty()) throw std::invalid_argument("missing mark-law spec");
  return json::parse(cfg.law_json);
}

double resolve_threshold(const RunConfig& cfg, const MarkLaw& law, double volume) {
  if (cfg.c > 0.0) return cfg.c;
  if (cfg.c_hat > 0.0) return threshold_for_mgf_value(law, volume, cfg.c_hat);
  throw std::invalid_argument("missing threshold: give --c or --chat");
}

double resolve_domain_volume(const RunConfig& cfg, int dim) {
  if (cfg.domain_volume > 0.0) return cfg.domain_volume;
  if (!cfg.domain_box.empty()) {
    if (static_cast<int>(cfg.domain_box.size()) != dim)
      throw std::invalid_argument("domain box dimension mismatch");
    double v = 1.0;
    for (double b : cfg.domain_box) v *= b;
    return v;
  }
  throw std::invalid_argument("missing domain: give --domain-volume or --domain-box");
}

json config_echo(const RunConfig& c) {
  json j;
  j["subcommand"] = c.subcommand;
  if (!c.kernel_json.empty()) j["kernel"] = json::parse(c.kernel_json);
  if (!c.law_json.empty()) j["law"] = json::parse(c.law_json);
  if (c.c > 0.0) j["c"] = c.c;
  if (c.c_hat > 0.0) j["chat"] = c.c_hat;
  if (c.lambda > 0.0) j["lambda"] = c.lambda;
  if (c.domain_volume > 0.0) j["domain_volume"] = c.domain_volume;
  if (!c.domain_box.empty()) j["domain_box"] = c.domain_box;
  j["reps"] = c.reps;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["format"] = c.format;
  j["k_route"] = c.k_route;
  j["variant"] = c.variant;
  j["method"] = c.method;
  if (!c.m_list.empty()) j["m_list"] = c.m_list;
  if (!c.levels.empty()) j["levels"] = c.levels;
  if (c.subcommand == "gauss") {
    j["alpha"] = c.alpha;
    j["d"] = c.gauss_dim;
    j["route"] = c.gauss_route;
    j["xi"] = c.xi;
  }
  if (c.subcommand == "table1") {
    j["rows"] = c.rows;
    j["chat_list"] = c.chat_list;
  }
  return j;
}

json k_to_json(const KEstimate& k) {
  json j;
  j["value"] = k.value;
  j["se"] = k.se;
  j["route"] = route_name(k.route);
  j["reps"] = k.reps;
  json d;
  d["extrapolation_residual"] = k.diag.extrapolation_residual;
  d["truncated"] = k.diag.truncated;
  d["diagnostic_failure"] = k.diag.diagnostic_failure;
  if (!k.diag.m_values.empty()) {
    d["m_values"] = k.diag.m_values;
    d["km_over_md"] = k.diag.km_over_md;
    d["km_se"] = k.diag.km_se;
  }
  d["notes"] = k.diag.notes;
  j["diagnostics"] = d;
  return j;
}

json mc_to_json(const McEstimate& e) {
  return json{{"value", e.value}, {"se", e.se}, {"reps", e.reps}, {"notes", e.notes}};
}

struct TableRow {
  std::string row;
  double c_hat;
  double entry;
  double entry_se;
  double k;
  double k_se;
  std::string notes;
};

std::string csv_of_table(const std::vector<TableRow>& rows) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "row,c_hat,entry,entry_se,K,K_se,notes\n";
  for (const auto& r : rows)
    os << r.row << "," << r.c_hat << "," << r.entry << "," << r.entry_se << "," << r.k << ","
       << r.k_se << "," << r.notes << "\n";
  return os.str();
}

KEstimate compute_k(const RunConfig& cfg, const Kernel& kernel, const MarkLaw& law, double c,
                    std::uint64_t reps) {
  const std::string& route = cfg.k_route;
  if (route == "local") {
    std::vector<double> m = cfg.m_list.empty() ? std::vector<double>{4, 8, 16} : cfg.m_list;
    return k_local_sup(kernel, law, c, m, reps, cfg.seed, cfg.workers);
  }
  if (route == "occupation") return k_occupation(kernel, law, c, reps, cfg.seed, cfg.workers);
  if (route == "rectangle") {
    if (kernel.shape() != Kernel::Shape::box)
      throw std::invalid_argument("rectangle route requires a box kernel");
    TiltSolution tilt = solve_tilt(law, kernel, c);
    WalkSpec spec = make_walk_spec(law, tilt);
    NuEstimate nu = overshoot_constant(spec, cfg.levels, reps, cfg.seed, cfg.workers);
    return k_rectangle(law, c, kernel.box_edges(), nu.est);
  }
  if (route == "ball") {
    if (kernel.shape() != Kernel::Shape::ball || !law.is_degenerate())
      throw std::invalid_argument(
          "ball route (closed-form lower bound) requires a ball kernel and degenerate marks");
    TiltSolution tilt = solve_tilt(law, kernel, c);
    KEstimate k;
    k.value = k_ball_lower_bound(kernel.dim(), tilt.m) *
              std::pow(law.degenerate_value(), 1.0);
    k.route = KRoute::ball_closed_form;
    k.diag.notes.push_back("closed-form lower bound used as a conservative constant");
    return k;
  }
  if (route == "omega")
    return k_omega_bound(kernel, law, c, reps, cfg.seed, cfg.workers);
  throw std::invalid_argument("unknown K route \"" + route + "\"");
}

int emit(const RunConfig& cfg, const json& result, std::ostream& out, int status) {
  json envelope;
  envelope["config"] = config_echo(cfg);
  envelope["result"] = result;
  envelope["seed"] = cfg.seed;
  envelope["version"] = kVersion;
  std::string text = envelope.dump(2) + "\n";
  out << text;
  if (!cfg.out_path.empty()) {
    std::ofstream f(cfg.out_path);
    f << text;
  }
  return status;
}

int emit_csv(const RunConfig& cfg, const std::string& csv, std::ostream& out, int status) {
  out << csv;
  if (!cfg.out_path.empty()) {
    std::ofstream f(cfg.out_path);
    f << csv;
  }
  return status;
}

int run_approx(const RunConfig& cfg, std::ostream& out) {
  Kernel kernel = parse_kernel(kernel_json_of(cfg));
  MarkLaw law = parse_mark_law(law_json_of(cfg));
  double c = resolve_threshold(cfg, law, kernel.volume());
  if (!(cfg.lambda > 0.0)) throw std::invalid_argument("approx: requires --lambda > 0");
  double dvol = resolve_domain_volume(cfg, kernel.dim());
  TiltSolution tilt = solve_tilt(law, kernel, c);
  KEstimate k = compute_k(cfg, kernel, law, c, cfg.reps);
  TailVariant variant =
      cfg.variant == "linear" ? TailVariant::linear : TailVariant::saturating;
  TailApprox approx = approx_tail(tilt, kernel, cfg.lambda, dvol, k, variant);

  json r;
  r["p"] = approx.p;
  r["variant"] = cfg.variant;
  r["components"] = json{{"prefactor", approx.components.prefactor},
                         {"exp_term", approx.components.exp_term},
                         {"lambda_power", approx.components.lambda_power},
                         {"domain_volume", approx.components.domain_volume},
                         {"K", approx.components.k_value},
                         {"x_lambda", approx.components.x_lambda},
                         {"log_linear", approx.components.log_linear}};
  r["tilt"] = json{{"theta_c", tilt.theta_c}, {"rate", tilt.rate},  {"M", tilt.m},
                   {"M1", tilt.m1},           {"M2", tilt.m2},      {"chi", tilt.chi},
                   {"tilted_mean", tilt.tilted_mean}};
  r["K"] = k_to_json(k);
  r["linear_above_0.1"] = approx.large_linear_flag;
  return emit(cfg, r, out, k.diag.diagnostic_failure ? 1 : 0);
}

int run_oracle(const RunConfig& cfg, std::ostream& out) {
  Kernel kernel = parse_kernel(kernel_json_of(cfg));
  MarkLaw law = parse_mark_law(law_json_of(cfg));
  double c = resolve_threshold(cfg, law, kernel.volume());
  if (!(cfg.lambda > 0.0)) throw std::invalid_argument("oracle: requires --lambda > 0");
  if (cfg.domain_box.empty())
    throw std::invalid_argument("oracle: requires --domain-box");
  BoxDomain domain;
  domain.dim = kernel.dim();
  for (int k = 0; k < domain.dim; ++k) domain.hi[k] = cfg.domain_box[k];
  ScanMethod method = cfg.method == "grid" ? ScanMethod::grid : ScanMethod::exact_box_sweep;
  std::vector<double> sups;
  McEstimate e = estimate_tail_probability(cfg.lambda, domain, kernel, law, c, cfg.reps,
                                           cfg.seed, cfg.workers, method, cfg.grid_h,
                                           cfg.dump_path.empty() ? nullptr : &sups);
  if (!cfg.dump_path.empty()) {
    std::ofstream f(cfg.dump_path);
    f << std::setprecision(12) << "replicate,sup,exceed\n";
    double threshold = cfg.lambda * c;
    double tol = 1e-9 * std::max(1.0, std::abs(threshold));
    for (std::size_t i = 0; i < sups.size(); ++i)
      f << i << "," << sups[i] << "," << (sups[i] >= threshold - tol ? 1 : 0) << "\n";
  }
  json r;
  r["p_hat"] = e.value;
  r["half_width_95"] = e.se;
  r["threshold"] = cfg.lambda * c;
  r["reps"] = e.reps;
  r["method"] = cfg.method;
  return emit(cfg, r, out, 0);
}

int run_kconst(const RunConfig& cfg, std::ostream& out) {
  Kernel kernel = parse_kernel(kernel_json_of(cfg));
  MarkLaw law = parse_mark_law(law_json_of(cfg));
  double c = resolve_threshold(cfg, law, kernel.volume());
  KEstimate k = compute_k(cfg, kernel, law, c, cfg.reps);
  json r;
  r["K"] = k_to_json(k);
  r["c"] = c;
  TiltSolution tilt = solve_tilt(law, kernel, c);
  r["theta_c"] = tilt.theta_c;
  r["M"] = tilt.m;
  r["chi"] = tilt.chi;
  return emit(cfg, r, out, k.diag.diagnostic_failure ? 1 : 0);
}

int run_nu(const RunConfig& cfg, std::ostream& out) {
  Kernel kernel = parse_kernel(kernel_json_of(cfg));
  MarkLaw law = parse_mark_law(law_json_of(cfg));
  double c = resolve_threshold(cfg, law, kernel.volume());
  TiltSolution tilt = solve_tilt(law, kernel, c);
  WalkSpec spec = make_walk_spec(law, tilt);
  NuEstimate nu = overshoot_constant(spec, cfg.levels, cfg.reps, cfg.seed, cfg.workers);
  json r;
  r["nu"] = mc_to_json(nu.est);
  r["levels"] = nu.levels;
  r["level_values"] = nu.level_value;
  r["level_ses"] = nu.level_se;
  r["stable"] = nu.stable;
  return emit(cfg, r, out, nu.stable ? 0 : 1);
}

int run_omega(const RunConfig& cfg, std::ostream& out) {
  Kernel kernel = parse_kernel(kernel_json_of(cfg));
  McEstimate inv = omega_inverse_volume(kernel, cfg.reps, cfg.seed, cfg.workers);
  json r;
  r["inverse_volume_mean"] = mc_to_json(inv);
  if (!cfg.law_json.empty() && (cfg.c > 0.0 || cfg.c_hat > 0.0)) {
    MarkLaw law = parse_mark_law(law_json_of(cfg));
    double c = resolve_threshold(cfg, law, kernel.volume());
    TiltSolution tilt = solve_tilt(law, kernel, c);
    r["k_upper_bound"] = k_to_json(k_omega_bound_from(inv, law, tilt, kernel.dim()));
  }
  return emit(cfg, r, out, 0);
}

int run_gauss(const RunConfig& cfg, std::ostream& out) {
  const double alpha = cfg.alpha;
  const int d = cfg.gauss_dim;
  json r;
  int status = 0;
  if (cfg.gauss_route == "bound") {
    r["ktilde_lower_bound"] = ktilde_lower_bound(alpha, d);
  } else if (cfg.gauss_route == "pickands") {
    std::vector<double> m = cfg.m_list;
    double h;
    if (d == 1) {
      if (m.empty()) m = {0.75, 1.0, 1.5, 2.0};
      h = 1.0 / 64;
    } else {
      if (m.empty()) m = {0.5, 0.75, 1.0, 1.25};
      h = 1.0 / 16;
    }
    if (cfg.grid_h > 0.0) h = cfg.grid_h;
    McEstimate e = ktilde_pickands(alpha, d, m, h, cfg.reps, cfg.seed, cfg.workers);
    r["ktilde"] = mc_to_json(e);
  } else if (cfg.gauss_route == "clump") {
    McEstimate e =
        ktilde_clump(alpha, d, cfg.reps, GaussRegion::standard(d), cfg.seed, cfg.workers);
    r["ktilde"] = mc_to_json(e);
  } else if (cfg.gauss_route == "thm3") {
    McEstimate e = ktilde_thm3(alpha, d, cfg.xi, 8, cfg.reps, GaussRegion::standard(d),
                               cfg.seed, cfg.workers);
    for (const auto& n : e.notes)
      if (n.find("instability") != std::string::npos) status = 1;
    r["ktilde"] = mc_to_json(e);
  } else {
    throw std::invalid_argument("unknown gauss route \"" + cfg.gauss_route + "\"");
  }
  r["alpha"] = alpha;
  r["d"] = d;
  return emit(cfg, r, out, status);
}

int run_table1(const RunConfig& cfg, std::ostream& out) {
  std::vector<TableRow> rows;
  std::vector<std::string> wanted;
  {
    std::stringstream ss(cfg.rows);
    std::string item;
    while (std::getline(ss, item, ',')) wanted.push_back(item);
  }
  Kernel ball = Kernel::ball(1.0, 2);
  const double vol = ball.volume();
  for (const std::string& row : wanted) {
    for (double chat : cfg.chat_list) {
      TableRow tr;
      tr.row = row;
      tr.c_hat = chat;
      if (row == "lower") {
        tr.k = k_ball_lower_bound(2, chat);
        tr.k_se = 0.0;
        tr.entry = tr.k / ((1.0 + chat) * (1.0 + chat));
        tr.entry_se = 0.0;
        tr.notes = "closed form";
      } else if (row == "I") {
        MarkLaw law = MarkLaw::degenerate(1.0);
        double c = threshold_for_mgf_value(law, vol, chat);
        KEstimate k = k_occupation(ball, law, c, cfg.reps, cfg.seed, cfg.workers);
        tr.k = k.value;
        tr.k_se = k.se;
        tr.entry = k.value / ((1.0 + chat) * (1.0 + chat));
        tr.entry_se = k.se / ((1.0 + chat) * (1.0 + chat));
        tr.notes = k.diag.truncated ? "region truncated" : "";
      } else if (row == "II") {
        MarkLaw law = MarkLaw::gaussian(0.0, 1.0);
        double c = threshold_for_mgf_value(law, vol, chat);
        TiltSolution tilt = solve_tilt(law, ball, c);
        KEstimate k = k_occupation(ball, law, c, cfg.reps, cfg.seed, cfg.workers);
        double scale = tilt.theta_c / ((1.0 + tilt.m) * (1.0 + tilt.m));
        tr.k = k.value;
        tr.k_se = k.se;
        tr.entry = k.value * scale;
        tr.entry_se = k.se * scale;
        tr.notes = k.diag.truncated ? "region truncated" : "";
      } else {
        throw std::invalid_argument("table1: unknown row \"" + row + "\" (use I, lower, II)");
      }
      rows.push_back(tr);
    }
  }
  if (cfg.format == "json") {
    json r = json::array();
    for (const auto& tr : rows)
      r.push_back(json{{"row", tr.row},
                       {"c_hat", tr.c_hat},
                       {"entry", tr.entry},
                       {"entry_se", tr.entry_se},
                       {"K", tr.k},
                       {"K_se", tr.k_se},
                       {"notes", tr.notes}});
    return emit(cfg, r, out, 0);
  }
  return emit_csv(cfg, csv_of_table(rows), out, 0);
}

}  // namespace

RunConfig config_from_json(const json& j, RunConfig c) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("subcommand", c.subcommand);
  if (j.contains("kernel")) c.kernel_json = j.at("kernel").dump();
  if (j.contains("law")) c.law_json = j.at("law").dump();
  get("c", c.c);
  get("chat", c.c_hat);
  get("lambda", c.lambda);
  get("domain_volume", c.domain_volume);
  get("domain_box", c.domain_box);
  get("reps", c.reps);
  get("seed", c.seed);
  get("workers", c.workers);
  get("out", c.out_path);
  get("format", c.format);
  get("k_route", c.k_route);
  get("variant", c.variant);
  get("method", c.method);
  get("grid_h", c.grid_h);
  get("m_list", c.m_list);
  get("levels", c.levels);
  get("alpha", c.alpha);
  get("d", c.gauss_dim);
  get("route", c.gauss_route);
  get("xi", c.xi);
  get("rows", c.rows);
  get("chat_list", c.chat_list);
  return c;
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (cfg.subcommand == "approx") return run_approx(cfg, out);
    if (cfg.subcommand == "oracle") return run_oracle(cfg, out);
    if (cfg.subcommand == "k-const") return run_kconst(cfg, out);
    if (cfg.subcommand == "nu") return run_nu(cfg, out);
    if (cfg.subcommand == "omega") return run_omega(cfg, out);
    if (cfg.subcommand == "gauss") return run_gauss(cfg, out);
    if (cfg.subcommand == "table1") return run_table1(cfg, out);
    err << "validation error: unknown subcommand \"" << cfg.subcommand << "\"\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    err << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace scanstat
