#pragma once

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "designers.hpp"
#include "obstruction.hpp"
#include "version.hpp"

namespace guidecloak {

using ordered_json = nlohmann::ordered_json;

// Worker cap for parallel sections, GUIDECLOAK_THREADS overrides the hardware count.
inline unsigned thread_budget() {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("GUIDECLOAK_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1)
      throw ConfigError("GUIDECLOAK_THREADS must be a positive integer");
    n = (unsigned)v;
  }
  return n;
}

struct DesignOptions {
  Vec2 y{0.0, 0.0};
  bool y_set = false;
  int m = 0;
  std::string variant = "four";
  double capacity = 1.0;
  double tol = 1e-12;
  int max_iter = 100;
  double node_floor = 1e-6;
  double grad_floor = 1e-9;
  double clearance_rel = 0.02;
  double gap_tol_rel = 1e-8;
  int grid_size = 0;
  double svd_floor = 1e-3;
  double d_min = 0.0;
  int max_attempts = 200;
};

struct SweepOptions {
  std::vector<double> epsilons{0.02, 0.01, 0.005, 0.0025};
};

struct BoundOptions {
  int count = 20;
};

struct ExperimentConfig {
  CrossSection cs{1.0, 1.0};
  double k2 = 0.0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  int sign_sigma = -1;
  std::vector<Fly> flies;
  ModeBasisOptions modes;
  GreenParams green;
  DesignOptions design;
  SweepOptions sweep;
  BoundOptions bound;
  ordered_json resolved;  // defaults filled in, echoed into every report

  FlyConfig fly_config() const {
    FlyConfig fc;
    fc.flies = flies;
    fc.epsilon = epsilon;
    fc.sign_sigma = sign_sigma;
    return fc;
  }
};

namespace detail {

// Strict object reader with path-qualified error messages.
class JsonScope {
 public:
  JsonScope(const ordered_json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  void check_known(std::initializer_list<const char*> keys) const {
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      bool ok = false;
      for (const char* k : keys)
        if (it.key() == k) { ok = true; break; }
      if (!ok) throw ConfigError(path_ + "." + it.key() + ": unknown key");
    }
  }

  bool has(const char* key) const { return j_->contains(key); }

  template <typename T>
  T require(const char* key) const {
    if (!j_->contains(key)) throw ConfigError(path_ + "." + key + ": required");
    return get_as<T>(key);
  }

  template <typename T>
  T get(const char* key, T fallback) const {
    if (!j_->contains(key)) return fallback;
    return get_as<T>(key);
  }

  const ordered_json& raw(const char* key) const { return (*j_)[key]; }
  const std::string& path() const { return path_; }

 private:
  template <typename T>
  T get_as(const char* key) const {
    try {
      return (*j_)[key].get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  const ordered_json* j_;
  std::string path_;
};

inline ordered_json complex_json(cdouble v) {
  return ordered_json{{"re", v.real()}, {"im", v.imag()}};
}

inline ordered_json matrix_json(const Eigen::MatrixXcd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_json(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

inline std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Least-squares slope of log|v| against log(eps).
inline double loglog_slope(const std::vector<double>& eps, const std::vector<double>& v) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(v[i] > 0.0)) continue;
    const double x = std::log(eps[i]), y = std::log(v[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++n;
  }
  if (n < 2) return 0.0;
  const double denom = n * sxx - sx * sx;
  return denom == 0.0 ? 0.0 : (n * sxy - sx * sy) / denom;
}

inline ordered_json design_report_json(const DesignReport& rep, double epsilon) {
  ordered_json j;
  j["converged"] = rep.converged;
  j["iterations"] = rep.iterations;
  j["contraction_max"] = rep.contraction_max;
  j["kappa"] = rep.kappa;
  j["tau"] = rep.tau;
  j["kappa_norm"] = rep.kappa_norm;
  j["c0"] = rep.c0;
  j["residual_abs"] = rep.residual_abs;
  j["first_order_abs"] = rep.first_order_abs;
  j["epsilon"] = epsilon;
  j["step_norms"] = rep.step_norms;
  ordered_json flies = ordered_json::array();
  for (const auto& f : rep.config.flies)
    flies.push_back(ordered_json{{"y", {f.center.y1, f.center.y2}},
                                 {"z", f.center.z},
                                 {"capacity", f.capacity}});
  j["flies"] = flies;
  return j;
}

}  // namespace detail

inline ExperimentConfig parse_config(const ordered_json& j) {
  detail::JsonScope root(j, "config");
  root.check_known({"schema_version", "cross_section", "k2", "epsilon", "seed", "sign_sigma",
                    "flies", "modes", "green", "design", "sweep", "bound"});
  const int schema = root.require<int>("schema_version");
  if (schema != config_schema_version)
    throw ConfigError("config.schema_version: expected " +
                      std::to_string(config_schema_version) + ", got " + std::to_string(schema));

  detail::JsonScope cs_scope(root.raw("cross_section"), "config.cross_section");
  cs_scope.check_known({"a", "b"});
  ExperimentConfig cfg{CrossSection(cs_scope.require<double>("a"), cs_scope.require<double>("b"))};
  cfg.k2 = root.require<double>("k2");
  cfg.epsilon = root.get<double>("epsilon", 0.0);
  cfg.seed = root.get<std::uint64_t>("seed", 0);
  cfg.sign_sigma = root.get<int>("sign_sigma", -1);

  if (root.has("flies")) {
    const auto& arr = root.raw("flies");
    if (!arr.is_array()) throw ConfigError("config.flies: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "config.flies[" + std::to_string(i) + "]";
      detail::JsonScope fj(arr[i], path);
      fj.check_known({"y", "z", "shape"});
      const auto y = fj.require<std::vector<double>>("y");
      if (y.size() != 2) throw ConfigError(path + ".y: expected two coordinates");
      Fly fly;
      fly.center = {y[0], y[1], fj.require<double>("z")};
      detail::JsonScope sj(fj.raw("shape"), path + ".shape");
      sj.check_known({"type", "radius", "value"});
      const auto type = sj.require<std::string>("type");
      if (type == "sphere")
        fly.capacity = capacity_sphere(sj.require<double>("radius"));
      else if (type == "capacity")
        fly.capacity = sj.require<double>("value");
      else
        throw ConfigError(path + ".shape.type: must be \"sphere\" or \"capacity\"");
      cfg.flies.push_back(fly);
    }
  }

  if (root.has("modes")) {
    detail::JsonScope s(root.raw("modes"), "config.modes");
    s.check_known({"j_max", "lambda_cutoff_factor", "spectral_gap_tol_rel"});
    cfg.modes.j_max = s.get<int>("j_max", cfg.modes.j_max);
    cfg.modes.lambda_cutoff_factor =
        s.get<double>("lambda_cutoff_factor", cfg.modes.lambda_cutoff_factor);
    cfg.modes.spectral_gap_tol_rel =
        s.get<double>("spectral_gap_tol_rel", cfg.modes.spectral_gap_tol_rel);
  }
  if (root.has("green")) {
    detail::JsonScope s(root.raw("green"), "config.green");
    s.check_known({"mode_cutoff", "reg_offsets", "max_terms", "cache_resolution_rel"});
    cfg.green.mode_cutoff = s.get<double>("mode_cutoff", cfg.green.mode_cutoff);
    cfg.green.reg_offsets = s.get<std::vector<double>>("reg_offsets", cfg.green.reg_offsets);
    cfg.green.max_terms = s.get<double>("max_terms", cfg.green.max_terms);
    cfg.green.cache_resolution_rel =
        s.get<double>("cache_resolution_rel", cfg.green.cache_resolution_rel);
  }
  if (root.has("design")) {
    detail::JsonScope s(root.raw("design"), "config.design");
    s.check_known({"y", "m", "variant", "capacity", "tol", "max_iter", "node_floor",
                   "grad_floor", "clearance_rel", "gap_tol_rel", "grid_size", "svd_floor",
                   "d_min", "max_attempts"});
    if (s.has("y")) {
      const auto y = s.require<std::vector<double>>("y");
      if (y.size() != 2) throw ConfigError("config.design.y: expected two coordinates");
      cfg.design.y = {y[0], y[1]};
      cfg.design.y_set = true;
    }
    cfg.design.m = s.get<int>("m", cfg.design.m);
    cfg.design.variant = s.get<std::string>("variant", cfg.design.variant);
    if (cfg.design.variant != "four" && cfg.design.variant != "three")
      throw ConfigError("config.design.variant: must be \"four\" or \"three\"");
    cfg.design.capacity = s.get<double>("capacity", cfg.design.capacity);
    cfg.design.tol = s.get<double>("tol", cfg.design.tol);
    cfg.design.max_iter = s.get<int>("max_iter", cfg.design.max_iter);
    cfg.design.node_floor = s.get<double>("node_floor", cfg.design.node_floor);
    cfg.design.grad_floor = s.get<double>("grad_floor", cfg.design.grad_floor);
    cfg.design.clearance_rel = s.get<double>("clearance_rel", cfg.design.clearance_rel);
    cfg.design.gap_tol_rel = s.get<double>("gap_tol_rel", cfg.design.gap_tol_rel);
    cfg.design.grid_size = s.get<int>("grid_size", cfg.design.grid_size);
    cfg.design.svd_floor = s.get<double>("svd_floor", cfg.design.svd_floor);
    cfg.design.d_min = s.get<double>("d_min", cfg.design.d_min);
    cfg.design.max_attempts = s.get<int>("max_attempts", cfg.design.max_attempts);
  }
  if (root.has("sweep")) {
    detail::JsonScope s(root.raw("sweep"), "config.sweep");
    s.check_known({"epsilons"});
    cfg.sweep.epsilons = s.get<std::vector<double>>("epsilons", cfg.sweep.epsilons);
    if (cfg.sweep.epsilons.empty()) throw ConfigError("config.sweep.epsilons: must be non-empty");
  }
  if (root.has("bound")) {
    detail::JsonScope s(root.raw("bound"), "config.bound");
    s.check_known({"count"});
    cfg.bound.count = s.get<int>("count", cfg.bound.count);
  }

  // Echo with defaults resolved.
  ordered_json e;
  e["schema_version"] = config_schema_version;
  e["cross_section"] = {{"a", cfg.cs.a()}, {"b", cfg.cs.b()}};
  e["k2"] = cfg.k2;
  e["epsilon"] = cfg.epsilon;
  e["seed"] = cfg.seed;
  e["sign_sigma"] = cfg.sign_sigma;
  e["flies"] = ordered_json::array();
  for (const auto& f : cfg.flies)
    e["flies"].push_back(
        ordered_json{{"y", {f.center.y1, f.center.y2}},
                     {"z", f.center.z},
                     {"shape", {{"type", "capacity"}, {"value", f.capacity}}}});
  e["modes"] = {{"j_max", cfg.modes.j_max},
                {"lambda_cutoff_factor", cfg.modes.lambda_cutoff_factor},
                {"spectral_gap_tol_rel", cfg.modes.spectral_gap_tol_rel}};
  e["green"] = {{"mode_cutoff", cfg.green.mode_cutoff},
                {"reg_offsets", cfg.green.reg_offsets},
                {"max_terms", cfg.green.max_terms},
                {"cache_resolution_rel", cfg.green.cache_resolution_rel}};
  e["design"] = ordered_json::object();
  if (cfg.design.y_set) e["design"]["y"] = {cfg.design.y.y1, cfg.design.y.y2};
  e["design"].update({{"m", cfg.design.m},
                 {"variant", cfg.design.variant},
                 {"capacity", cfg.design.capacity},
                 {"tol", cfg.design.tol},
                 {"max_iter", cfg.design.max_iter},
                 {"node_floor", cfg.design.node_floor},
                 {"grad_floor", cfg.design.grad_floor},
                 {"clearance_rel", cfg.design.clearance_rel},
                 {"gap_tol_rel", cfg.design.gap_tol_rel},
                 {"grid_size", cfg.design.grid_size},
                 {"svd_floor", cfg.design.svd_floor},
                 {"d_min", cfg.design.d_min},
                 {"max_attempts", cfg.design.max_attempts}});
  e["sweep"] = {{"epsilons", cfg.sweep.epsilons}};
  e["bound"] = {{"count", cfg.bound.count}};
  cfg.resolved = e;
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError("config parse failure in " + path + ": " + ex.what());
  }
  return parse_config(j);
}

struct RunReport {
  ordered_json doc;
  std::string csv;  // populated by `sweep`
};

namespace detail {

inline ordered_json run_modes(const ExperimentConfig& cfg) {
  const ModeBasis basis(cfg.cs, cfg.k2, cfg.modes);
  ordered_json out;
  out["n_modes"] = basis.size();
  out["n_propagating"] = basis.n_propagating();
  ordered_json table = ordered_json::array();
  for (int j = 0; j < basis.size(); ++j) {
    const auto& ep = basis.eigenpair(j);
    const cdouble beta = basis.beta(j);
    table.push_back(ordered_json{{"j", j},
                                 {"p", ep.p},
                                 {"q", ep.q},
                                 {"lambda", ep.lambda},
                                 {"beta", complex_json(beta)},
                                 {"propagating", j < basis.n_propagating()}});
  }
  out["modes"] = table;
  return out;
}

inline ordered_json scatter_outputs(const FlyConfig& fc, const ModeBasis& basis,
                                    const GreenEvaluator& green) {
  const FoldySystem sys(fc, basis, green);
  const ScatterReport rep = scattering_matrix(sys);
  ordered_json out;
  out["n_propagating"] = basis.n_propagating();
  out["s_minus"] = matrix_json(rep.s_minus);
  out["s_plus"] = matrix_json(rep.s_plus);
  out["transmission"] = matrix_json(rep.transmission());
  out["unitarity_residual"] = rep.unitarity_residual;
  out["reciprocity_residual"] = rep.reciprocity_residual;
  out["energy_residual"] = rep.energy_residual;
  out["sigma_min"] = sys.sigma_min();
  out["trust_region"] = fc.trust_region(std::sqrt(basis.k2()));
  if (!fc.flies.empty()) {
    const auto s1 = s1_coefficients(fc, basis);
    out["s1_minus"] = matrix_json(s1.s_minus);
    out["s1_plus"] = matrix_json(s1.s_plus);
    out["s2_minus"] = matrix_json(s2_minus(fc, basis, green));
  }
  return out;
}

inline ordered_json run_scatter(const ExperimentConfig& cfg) {
  FlyConfig fc = cfg.fly_config();
  if (fc.flies.empty() && !(fc.epsilon > 0.0)) fc.epsilon = 1.0;  // eps is moot with no flies
  fc.validate(cfg.cs, cfg.design.clearance_rel);
  const ModeBasis basis(cfg.cs, cfg.k2, cfg.modes);
  const GreenEvaluator green(basis, cfg.green);
  return scatter_outputs(fc, basis, green);
}

inline FixedPointOptions fixed_point_options(const ExperimentConfig& cfg) {
  FixedPointOptions opt;
  opt.tol = cfg.design.tol;
  opt.max_iter = cfg.design.max_iter;
  opt.capacity = cfg.design.capacity;
  opt.clearance_rel = cfg.design.clearance_rel;
  return opt;
}

inline ordered_json run_design_position(const ExperimentConfig& cfg) {
  if (!(cfg.epsilon > 0.0)) throw ConfigError("config.epsilon: required for design commands");
  const ModeBasis basis(cfg.cs, cfg.k2, cfg.modes);
  const GreenEvaluator green(basis, cfg.green);
  const Vec2 y = cfg.design.y_set ? cfg.design.y : Vec2{0.3 * cfg.cs.a(), 0.3 * cfg.cs.b()};
  const auto sc = choose_positions_monomodal(basis, cfg.design.m, y, cfg.design.clearance_rel,
                                             cfg.design.grad_floor);
  const auto rep =
      solve_position_fixed_point(basis, green, sc, cfg.epsilon, fixed_point_options(cfg));
  ordered_json out = design_report_json(rep, cfg.epsilon);
  out["scaffold"] = {{"y", {sc.y.y1, sc.y.y2}},
                     {"m", sc.m},
                     {"z2", sc.m2.z},
                     {"beta1", sc.beta1}};
  out["trust_region"] = rep.config.trust_region(std::sqrt(cfg.k2));
  return out;
}

inline ordered_json run_design_size(const ExperimentConfig& cfg) {
  if (!(cfg.epsilon > 0.0)) throw ConfigError("config.epsilon: required for design commands");
  const ModeBasis basis(cfg.cs, cfg.k2, cfg.modes);
  const GreenEvaluator green(basis, cfg.green);
  const Vec2 y =
      cfg.design.y_set ? cfg.design.y : multimodal_transverse_point(basis, cfg.design.clearance_rel);
  const SizeVariant variant =
      cfg.design.variant == "three" ? SizeVariant::three : SizeVariant::four;
  const auto sc = choose_positions_size_design(basis, cfg.design.m, y, variant,
                                               cfg.design.clearance_rel, cfg.design.node_floor);
  const auto rep =
      solve_size_fixed_point(basis, green, sc, cfg.epsilon, fixed_point_options(cfg));
  ordered_json out = design_report_json(rep, cfg.epsilon);
  ordered_json zs = ordered_json::array();
  for (const auto& c : sc.centers) zs.push_back(c.z);
  out["scaffold"] = {{"y", {sc.y.y1, sc.y.y2}},
                     {"m", sc.m},
                     {"variant", cfg.design.variant},
                     {"z", zs},
                     {"beta1", sc.beta1}};
  out["trust_region"] = rep.config.trust_region(std::sqrt(cfg.k2));
  return out;
}

inline ordered_json run_design_multi(const ExperimentConfig& cfg) {
  if (!(cfg.epsilon > 0.0)) throw ConfigError("config.epsilon: required for design commands");
  const ModeBasis basis(cfg.cs, cfg.k2, cfg.modes);
  const GreenEvaluator green(basis, cfg.green);
  const Vec2 y =
      cfg.design.y_set ? cfg.design.y : multimodal_transverse_point(basis, cfg.design.clearance_rel);

  PlacementSearchOptions popt;
  popt.grid_size = cfg.design.grid_size;
  popt.svd_floor = cfg.design.svd_floor;
  popt.max_attempts = cfg.design.max_attempts;
  popt.seed = cfg.seed;
  // Keep placed flies clear of the disjointness bound for scaled obstacles.
  popt.d_min = cfg.design.d_min;
  const auto gam = compute_gammas(basis, cfg.design.gap_tol_rel);
  const double floor_gap = 2.5 * cfg.epsilon * cfg.design.capacity;
  popt.d_min = std::max(popt.d_min > 0.0 ? popt.d_min : default_min_gap(gam.gammas), floor_gap);

  const auto plan = plan_multimodal(basis, y, popt, cfg.design.gap_tol_rel,
                                    cfg.design.node_floor);
  const auto rep =
      solve_multimodal_fixed_point(basis, green, plan, cfg.epsilon, fixed_point_options(cfg));

  ordered_json out = design_report_json(rep, cfg.epsilon);
  ordered_json pairs = ordered_json::array();
  for (const auto& [j, jp] : plan.gamma_set.pairs) pairs.push_back({j, jp});
  double phasor_max = 0.0;
  for (double g : plan.gamma_set.gammas) {
    cdouble sum = 0.0;
    for (double z : plan.z_all) sum += std::exp(cdouble(0.0, g * z));
    phasor_max = std::max(phasor_max, std::abs(sum));
  }
  out["scaffold"] = {{"y", {plan.y.y1, plan.y.y2}},
                     {"gammas", plan.gamma_set.gammas},
                     {"pairs", pairs},
                     {"sigma_min", plan.tuned.sigma_min},
                     {"z_tuned", plan.tuned.z},
                     {"n_flies", plan.n_flies},
                     {"phasor_sum_max", phasor_max},
                     {"d_min", popt.d_min}};
  out["trust_region"] = rep.config.trust_region(std::sqrt(cfg.k2));
  return out;
}

inline ordered_json run_sweep(const ExperimentConfig& cfg, std::string& csv_out) {
  if (cfg.flies.empty()) throw ConfigError("config.flies: required for sweep");
  const ModeBasis basis(cfg.cs, cfg.k2, cfg.modes);
  const GreenEvaluator green(basis, cfg.green);

  FlyConfig base = cfg.fly_config();
  base.epsilon = cfg.sweep.epsilons.front();
  base.validate(cfg.cs, cfg.design.clearance_rel);
  const Eigen::MatrixXcd s1 = s1_coefficients(base, basis).s_minus;
  const Eigen::MatrixXcd s2 = s2_minus(base, basis, green);

  struct Row {
    double eps, v0, v1, v2, energy;
  };
  const auto& eps_list = cfg.sweep.epsilons;
  std::vector<Row> rows(eps_list.size());
  auto compute_row = [&](std::size_t i) {
    FlyConfig fc = cfg.fly_config();
    fc.epsilon = eps_list[i];
    fc.validate(cfg.cs, cfg.design.clearance_rel);
    const ScatterReport rep = scattering_matrix(fc, basis, green);
    const double e = fc.epsilon;
    rows[i] = {e, rep.s_minus.cwiseAbs().maxCoeff(),
               (rep.s_minus - e * s1).cwiseAbs().maxCoeff(),
               (rep.s_minus - e * s1 - e * e * s2).cwiseAbs().maxCoeff(),
               rep.energy_residual};
  };

  const unsigned workers = std::min<unsigned>(thread_budget(), (unsigned)eps_list.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < eps_list.size(); ++i) compute_row(i);
  } else {
    // Interaction matrices are tiny here; points are independent and the
    // Green cache is shared behind its lock.
    std::vector<std::future<void>> futs;
    std::atomic<std::size_t> next{0};
    for (unsigned w = 0; w < workers; ++w)
      futs.push_back(std::async(std::launch::async, [&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= eps_list.size()) return;
          compute_row(i);
        }
      }));
    for (auto& f : futs) f.get();
  }

  static const char* header =
      "epsilon,|s_minus|,|s_minus − eps·s1|,"
      "|s_minus − eps·s1 − eps2·s2|,energy_residual";
  std::string csv = std::string(header) + "\n";
  ordered_json table = ordered_json::array();
  std::vector<double> eps_v, v0, v1, v2;
  for (const auto& r : rows) {
    csv += format_g17(r.eps) + "," + format_g17(r.v0) + "," + format_g17(r.v1) + "," +
           format_g17(r.v2) + "," + format_g17(r.energy) + "\n";
    table.push_back(ordered_json{{"epsilon", r.eps},
                                 {"s_minus_abs", r.v0},
                                 {"minus_first_abs", r.v1},
                                 {"minus_second_abs", r.v2},
                                 {"energy_residual", r.energy}});
    eps_v.push_back(r.eps);
    v0.push_back(r.v0);
    v1.push_back(r.v1);
    v2.push_back(r.v2);
  }
  csv_out = csv;

  ordered_json out;
  out["rows"] = table;
  out["slopes"] = {{"s_minus", loglog_slope(eps_v, v0)},
                   {"minus_first", loglog_slope(eps_v, v1)},
                   {"minus_second", loglog_slope(eps_v, v2)}};
  out["csv"] = csv;
  return out;
}

inline ordered_json run_bound(const ExperimentConfig& cfg) {
  FlyConfig fc = cfg.fly_config();
  fc.validate(cfg.cs, cfg.design.clearance_rel);
  const ModeBasis basis(cfg.cs, cfg.k2, cfg.modes);
  const double half = slab_half_length(fc);
  const TransmissionBound tb = transmission_bound(basis, half);
  const auto spectrum = mixed_spectrum(basis, half, cfg.bound.count);

  ordered_json out;
  out["half_length"] = half;
  out["mu1"] = tb.mu1;
  out["no_blocking"] = tb.no_blocking;
  out["mixed_spectrum"] = spectrum;
  out["mixed_spectrum_min_matches_mu1"] = std::abs(spectrum.front() - tb.mu1) <= 1e-12 * tb.mu1;
  if (basis.n_propagating() == 1) {
    const GreenEvaluator green(basis, cfg.green);
    const ScatterReport rep = scattering_matrix(fc, basis, green);
    const TransmissionDeviation td = transmission_deviation(rep, fc, basis);
    out["transmission_deviation"] = {{"abs_t_minus_1", td.abs_t_minus_1},
                                     {"im_s_plus", td.im_s_plus},
                                     {"energy_residual", td.energy_residual},
                                     {"c_first_order", td.c_first_order},
                                     {"floor", td.floor},
                                     {"above_floor", td.above_floor}};
  }
  return out;
}

}  // namespace detail

inline RunReport run(const std::string& command, const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RunReport rep;
  ordered_json out;
  if (command == "modes")
    out = detail::run_modes(cfg);
  else if (command == "scatter")
    out = detail::run_scatter(cfg);
  else if (command == "design-position")
    out = detail::run_design_position(cfg);
  else if (command == "design-size")
    out = detail::run_design_size(cfg);
  else if (command == "design-multi")
    out = detail::run_design_multi(cfg);
  else if (command == "sweep")
    out = detail::run_sweep(cfg, rep.csv);
  else if (command == "bound")
    out = detail::run_bound(cfg);
  else
    throw ConfigError("unknown command: " + command);

  const double total_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.doc["schema_version"] = config_schema_version;
  rep.doc["command"] = command;
  rep.doc["inputs"] = cfg.resolved;
  rep.doc["outputs"] = out;
  rep.doc["provenance"] = {{"version", version_string},
                           {"seed", cfg.seed},
                           {"timings", {{"total_s", total_s}}}};
  return rep;
}

}  // namespace guidecloak
