#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "scanstat/geometry.hpp"
#include "scanstat/marks.hpp"

namespace scanstat {

inline constexpr const char* kVersion = "scanstat 0.1.0";

// JSON grammars:
//   kernel: {"shape":"ball","r":1.0,"d":2} | {"shape":"box","b":[1.0,1.0]}
//         | {"shape":"cylinder","r":1.0,"h":1.0}
//   marks:  {"law":"degenerate","eta":1.0} | {"law":"gaussian","mean":0.0,"sd":1.0}
//         | {"law":"lattice","eta":1.0,"atoms":[[-1,0.5],[1,0.5]]}
Kernel parse_kernel(const nlohmann::json& spec);
MarkLaw parse_mark_law(const nlohmann::json& spec);

// threshold with M(theta_c) = c_hat: solves M(theta) = c_hat on theta > 0 and
// returns vol(B) * M'(theta)
double threshold_for_mgf_value(const MarkLaw& law, double kernel_volume, double c_hat);

struct RunConfig {
  std::string subcommand;
  std::string kernel_json;  // raw JSON text of the kernel spec
  std::string law_json;
  double c = 0.0;
  double c_hat = 0.0;  // alternative threshold parametrization, M(theta_c) = c_hat
  double lambda = 0.0;
  double domain_volume = 0.0;
  std::vector<double> domain_box;  // D = prod [0, box_k]
  std::uint64_t reps = 100000;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out_path;
  std::string format = "json";  // json | csv
  std::string k_route = "occupation";  // local | occupation | rectangle | ball | omega
  std::string variant = "saturating";  // linear | saturating
  std::string method = "exact";        // oracle scan: exact | grid
  double grid_h = 0.0;
  std::vector<double> m_list;
  std::vector<double> levels;
  std::string dump_path;
  // gauss
  double alpha = 2.0;
  int gauss_dim = 2;
  std::string gauss_route = "pickands";  // pickands | clump | thm3 | bound
  double xi = 0.1;
  // table1
  std::string rows = "I,lower,II";
  std::vector<double> chat_list = {2.0, 4.0, 10.0};
};

// Applies the values of a JSON config file, then returns the merged config
// (explicitly set flags are applied afterwards by the CLI front end).
RunConfig config_from_json(const nlohmann::json& j, RunConfig base);

// Dispatches a validated config.  Exit status: 0 ok, 1 runtime or diagnostic
// failure, 2 validation error.  The primary artifact (JSON or CSV) is written
// to `out` and to config.out_path when set.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace scanstat
