#pragma once

// Run configuration shared by all subcommands: model choice, stage list, grid
// schedule, tolerances, kernel/distribution targets, output location, seed.

#include "spectral/kernelprop.hpp"
#include "spectral/measure.hpp"
#include "spectral/models.hpp"
#include "spectral/types.hpp"
#include "scenarios.hpp"
#include "toml_lite.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cli {

using Real = double;
using C = spectral::Complex<Real>;

struct RunConfig {
  // [model]
  std::string model_kind = "diag3";
  long shift_L = 5;
  std::vector<Real> b_values;         // exp_selfadjoint
  Real sadj_scale = Real(1);
  C scale_q{1, 0};                    // scaled_unitary multiplier

  // [run]
  std::vector<int> N_list;
  int max_level = 3;
  std::vector<Real> eps_list;
  std::string out = "out";
  std::uint64_t seed = 1;
  bool quick = false;

  // [tolerance] — free-form overrides, looked up with defaults at use sites.
  std::map<std::string, Real> tol;

  // [kernel]
  std::string kernel_name;
  C kernel_c{1, 0};
  std::vector<std::pair<C, C>> kernel_targets;

  // [dirac]
  std::vector<C> dirac_points;
  std::string g_name = "identity";
  bool dual_convention = false;

  Real tolerance(const std::string& key, Real fallback) const {
    auto it = tol.find(key);
    return it == tol.end() ? fallback : it->second;
  }
};

namespace detail {

inline C parse_point(const std::string& s, const std::string& what) {
  std::size_t comma = s.find(',');
  if (comma == std::string::npos)
    throw spectral::Error(spectral::ErrorKind::invalid_argument,
                          what + ": expected \"re,im\", got \"" + s + "\"");
  return C(tomllite::parse_real(s.substr(0, comma), what),
           tomllite::parse_real(s.substr(comma + 1), what));
}

}  // namespace detail

inline RunConfig load_config(const std::string& path) {
  const tomllite::Table t = tomllite::parse_file(path);
  RunConfig cfg;

  cfg.model_kind = tomllite::get_string(t, "model", "kind", cfg.model_kind);
  cfg.shift_L = static_cast<long>(tomllite::parse_int(
      tomllite::get_string(t, "model", "L", std::to_string(cfg.shift_L)), "[model] L"));
  for (const auto& s : tomllite::get_list(t, "model", "b"))
    cfg.b_values.push_back(tomllite::parse_real(s, "[model] b"));
  cfg.sadj_scale = tomllite::parse_real(tomllite::get_string(t, "model", "scale", "1"), "[model] scale");
  cfg.scale_q = C(tomllite::parse_real(tomllite::get_string(t, "model", "q_re", "1"), "[model] q_re"),
                  tomllite::parse_real(tomllite::get_string(t, "model", "q_im", "0"), "[model] q_im"));

  for (const auto& s : tomllite::get_list(t, "run", "N"))
    cfg.N_list.push_back(static_cast<int>(tomllite::parse_int(s, "[run] N")));
  if (!std::is_sorted(cfg.N_list.begin(), cfg.N_list.end()))
    throw spectral::Error(spectral::ErrorKind::invalid_argument, "[run] N must be sorted ascending");
  cfg.max_level = static_cast<int>(
      tomllite::parse_int(tomllite::get_string(t, "run", "max_level", "3"), "[run] max_level"));
  if (cfg.max_level < 0 || cfg.max_level > 8)
    throw spectral::Error(spectral::ErrorKind::invalid_argument, "[run] max_level must be in 0..8");
  for (const auto& s : tomllite::get_list(t, "run", "eps"))
    cfg.eps_list.push_back(tomllite::parse_real(s, "[run] eps"));
  cfg.out = tomllite::get_string(t, "run", "out", cfg.out);
  cfg.seed = tomllite::parse_u64(tomllite::get_string(t, "run", "seed", "1"), "[run] seed");

  if (t.count("tolerance"))
    for (const auto& kv : t.at("tolerance")) {
      if (kv.second.kind != tomllite::Value::Kind::string)
        throw spectral::Error(spectral::ErrorKind::invalid_argument,
                              "[tolerance] values must be decimal strings");
      cfg.tol[kv.first] = tomllite::parse_real(kv.second.str, "[tolerance] " + kv.first);
    }

  cfg.kernel_name = tomllite::get_string(t, "kernel", "name", "");
  cfg.kernel_c = C(tomllite::parse_real(tomllite::get_string(t, "kernel", "c_re", "1"), "[kernel] c_re"),
                   tomllite::parse_real(tomllite::get_string(t, "kernel", "c_im", "0"), "[kernel] c_im"));
  for (const auto& s : tomllite::get_list(t, "kernel", "targets")) {
    // "a_re,a_im;b_re,b_im"
    std::size_t semi = s.find(';');
    if (semi == std::string::npos)
      throw spectral::Error(spectral::ErrorKind::invalid_argument,
                            "[kernel] targets entries must look like \"a_re,a_im;b_re,b_im\"");
    cfg.kernel_targets.emplace_back(detail::parse_point(s.substr(0, semi), "[kernel] targets"),
                                    detail::parse_point(s.substr(semi + 1), "[kernel] targets"));
  }

  for (const auto& s : tomllite::get_list(t, "dirac", "points"))
    cfg.dirac_points.push_back(detail::parse_point(s, "[dirac] points"));
  cfg.g_name = tomllite::get_string(t, "dirac", "g", cfg.g_name);
  cfg.dual_convention = tomllite::get_bool(t, "dirac", "dual_convention", false);

  return cfg;
}

inline spectral::OperatorModel<Real> make_model(const RunConfig& cfg) {
  using namespace spectral;
  if (cfg.model_kind == "diag3") return scenarios::diag3<Real>();
  if (cfg.model_kind == "bilateral_shift") return make_bilateral_shift<Real>(cfg.shift_L);
  if (cfg.model_kind == "exp_selfadjoint") {
    if (cfg.b_values.empty())
      throw Error(ErrorKind::invalid_argument, "exp_selfadjoint needs [model] b");
    return make_exp_selfadjoint<Real>(cfg.b_values, cfg.sadj_scale);
  }
  if (cfg.model_kind == "sadj3") return scenarios::sadj3<Real>();
  if (cfg.model_kind == "scaled_diag3") return scenarios::scaled_diag3<Real>(cfg.scale_q);
  throw Error(ErrorKind::unsupported_model, "unknown model kind: " + cfg.model_kind);
}

// Grid family for a model, steering cut lines away from any analytically
// known atoms.
inline std::vector<spectral::BoxGrid<Real>> make_grids(const spectral::OperatorModel<Real>& model,
                                                       int max_level) {
  std::vector<Real> lines;
  if (model.reference_spectral_measure) {
    for (const auto& pm : *model.reference_spectral_measure) {
      lines.push_back(pm.first.real());
      lines.push_back(pm.first.imag());
    }
  }
  return spectral::grid_family<Real>(Real(model.M), max_level, lines);
}

}  // namespace cli
