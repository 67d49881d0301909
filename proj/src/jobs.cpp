#include "slitflow/jobs.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <initializer_list>
#include <vector>

#include "slitflow/coupling.hpp"
#include "slitflow/io.hpp"

namespace slitflow {

namespace {

using nlohmann::json;

void require_keys(const json& cfg, std::initializer_list<const char*> allowed) {
  if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& item : cfg.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        known = true;
        break;
      }
    if (!known) throw ConfigError("unknown config key: " + item.key());
  }
}

double num_or(const json& cfg, const char* key, double fallback) {
  if (!cfg.contains(key)) return fallback;
  if (!cfg.at(key).is_number()) throw ConfigError(std::string(key) + " must be a number");
  return cfg.at(key).get<double>();
}

double num_req(const json& cfg, const char* key) {
  if (!cfg.contains(key)) throw ConfigError(std::string("missing config key: ") + key);
  if (!cfg.at(key).is_number()) throw ConfigError(std::string(key) + " must be a number");
  return cfg.at(key).get<double>();
}

std::size_t count_req(const json& cfg, const char* key) {
  double v = num_req(cfg, key);
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e9)
    throw ConfigError(std::string(key) + " must be a positive integer");
  return static_cast<std::size_t>(v);
}

std::string name_or(const json& cfg, const char* key, const char* fallback) {
  if (!cfg.contains(key)) return fallback;
  if (!cfg.at(key).is_string()) throw ConfigError(std::string(key) + " must be a string");
  return cfg.at(key).get<std::string>();
}

cplx point_from(const json& v, const char* what) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(std::string(what) + " must be a [re, im] pair");
  return {v[0].get<double>(), v[1].get<double>()};
}

std::vector<cplx> points_req(const json& cfg, const char* key) {
  if (!cfg.contains(key) || !cfg.at(key).is_array() || cfg.at(key).empty())
    throw ConfigError(std::string(key) + " must be a non-empty array of [re, im] pairs");
  std::vector<cplx> out;
  for (const json& v : cfg.at(key)) out.push_back(point_from(v, key));
  return out;
}

std::vector<double> grid_from(const json& cfg, const char* key,
                              std::vector<double> fallback) {
  if (!cfg.contains(key)) return fallback;
  const json& v = cfg.at(key);
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array() || v.empty()) throw ConfigError(std::string(key) + " must be a number or array");
  std::vector<double> out;
  for (const json& x : v) {
    if (!x.is_number()) throw ConfigError(std::string(key) + " entries must be numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

bool drift_family(Family f) {
  return f == Family::ChordalDrift || f == Family::DipolarDrift || f == Family::RadialDrift;
}

// either {"family", "kappa", "nu"/"xi"} or raw {"delta": [4], "sigma": [3]};
// raw pairs are classified so the matching boundary data can be found
SlitFieldPair pair_from(const json& cfg) {
  bool raw = cfg.contains("delta") || cfg.contains("sigma");
  if (raw == cfg.contains("family"))
    throw ConfigError("give either a family name or raw delta/sigma coefficients");
  if (raw) {
    if (!cfg.contains("delta") || !cfg.contains("sigma"))
      throw ConfigError("raw pairs need both delta and sigma");
    const json& dj = cfg.at("delta");
    const json& sj = cfg.at("sigma");
    if (!dj.is_array() || dj.size() != 4)
      throw ConfigError("delta must have 4 coefficients [1/z, 1, z, z^2]");
    if (!sj.is_array() || sj.size() != 3)
      throw ConfigError("sigma must have 3 coefficients [1, z, z^2]");
    std::array<double, 4> d{};
    std::array<double, 3> s{};
    for (int i = 0; i < 4; ++i) d[i] = dj[i].get<double>();
    for (int i = 0; i < 3; ++i) s[i] = sj[i].get<double>();
    SlitFieldPair p = make_pair_raw(d, s);
    Classification cl = classify(p);
    p.family = cl.family;
    p.kappa = cl.kappa;
    p.nu = cl.nu;
    p.xi = cl.xi;
    return p;
  }
  double kappa = num_req(cfg, "kappa");
  if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
  Family f = family_from_name(cfg.at("family").get<std::string>());
  if (f == Family::General)
    throw ConfigError("pick a table family or give raw coefficients");
  double nu = num_or(cfg, "nu", 0.0);
  double xi = num_or(cfg, "xi", 0.0);
  if (drift_family(f) && xi != 0.0)
    throw ConfigError("xi does not apply to a drift family");
  return make_family_pair(f, kappa, drift_family(f) ? nu : xi);
}

// matched boundary data: the drift rows carry the pair's nu, the time-change
// rows match at nu = 0; an explicit "nu" key detunes eta for the other rows
PrePreSchwarzian eta_for(const SlitFieldPair& pair, const CovarianceKernel& kernel,
                         const json& cfg) {
  double fallback = drift_family(pair.family) ? pair.nu : 0.0;
  return make_eta(eta_family_for(kernel.kind, pair.family), pair.kappa,
                  num_or(cfg, "nu", fallback));
}

json classification_json(const Classification& cl) {
  return {{"family", family_name(cl.family)},
          {"kappa", cl.kappa},
          {"nu", cl.nu},
          {"xi", cl.xi}};
}

json stat_json(const McStat& s) {
  json pt = s.points.size() == 1 ? to_json(s.points[0])
                                 : json{to_json(s.points[0]), to_json(s.points[1])};
  return {{"observable", mc_observable_name(s.observable)},
          {"point", pt},
          {"t", s.t},
          {"N", s.n},
          {"base", s.base},
          {"mean", s.mean},
          {"stderr", s.std_err},
          {"z", s.z_score},
          {"kill_fraction", s.kill_fraction},
          {"kill_warning", s.kill_warning}};
}

std::string join_out(const std::string& out_dir, const std::string& rel) {
  std::filesystem::path p(rel);
  if (p.is_absolute()) return rel;
  return (std::filesystem::path(out_dir) / p).string();
}

McObservable observable_from(const std::string& s) {
  if (s == "m1_eta") return McObservable::M1Eta;
  if (s == "m2_two_point") return McObservable::M2TwoPoint;
  throw ConfigError("unknown observable name: " + s);
}

DrivingPath driving_from(const json& cfg, double kappa, double t_max,
                         std::uint64_t seed) {
  if (!cfg.contains("driving") || (cfg.at("driving").is_string() &&
                                   cfg.at("driving").get<std::string>() == "brownian"))
    return make_brownian_driving(kappa, seed);
  const json& d = cfg.at("driving");
  if (d.is_string() && d.get<std::string>() == "zero")
    return make_deterministic_driving({0.0, t_max}, {0.0, 0.0}, kappa);
  if (d.is_object()) {
    require_keys(d, {"times", "values"});
    std::vector<double> times, values;
    for (const json& x : d.at("times")) times.push_back(x.get<double>());
    for (const json& x : d.at("values")) values.push_back(x.get<double>());
    return make_deterministic_driving(times, values, kappa);
  }
  throw ConfigError("driving must be \"brownian\", \"zero\", or {times, values}");
}

// ---- check ----------------------------------------------------------------

json run_scan(const json& cfg, std::uint64_t seed, int threads, bool dry_run) {
  require_keys(cfg, {"scan", "kernel", "seed"});
  const json& sc = cfg.at("scan");
  require_keys(sc, {"family", "kappa", "nu", "xi"});
  if (!sc.contains("family")) throw ConfigError("scan needs a family");
  Family f = family_from_name(sc.at("family").get<std::string>());
  if (f == Family::General) throw ConfigError("scan needs a table family");
  auto kappas = grid_from(sc, "kappa", {4.0});
  auto nus = grid_from(sc, "nu", {0.0});
  auto xis = grid_from(sc, "xi", {0.0});
  auto kernel = make_kernel(kernel_from_name(name_or(cfg, "kernel", "dirichlet")));

  std::vector<ScanSpec> grid;
  for (double k : kappas) {
    if (!(k > 0.0)) throw ConfigError("kappa must be positive");
    for (double nu : nus)
      for (double xi : xis) grid.push_back({f, k, nu, xi});
  }
  json report = {{"command", "check"},
                 {"mode", "scan"},
                 {"kernel", kernel_name(kernel.kind)},
                 {"family", family_name(f)},
                 {"cells", json::array()},
                 {"seed", seed},
                 {"verdict", "pass"}};
  if (dry_run) {
    report["dry_run"] = true;
    report["plan"] = {{"n_cells", grid.size()}};
    return report;
  }
  for (const ScanVerdict& v : scan_selection(grid, kernel, threads)) {
    report["cells"].push_back({{"family", family_name(v.spec.family)},
                               {"kappa", v.spec.kappa},
                               {"nu", v.spec.nu},
                               {"xi", v.spec.xi},
                               {"pass", v.pass},
                               {"r1", v.r1},
                               {"r2", v.r2},
                               {"r3", v.r3},
                               {"note", v.note}});
  }
  return report;
}

json run_check(const json& cfg, std::uint64_t seed, int threads, bool dry_run) {
  if (cfg.contains("scan")) return run_scan(cfg, seed, threads, dry_run);
  require_keys(cfg, {"family", "delta", "sigma", "kappa", "nu", "xi", "kernel",
                     "n_points", "route", "fd_step", "mc", "seed"});
  SlitFieldPair pair = pair_from(cfg);
  auto kernel = make_kernel(kernel_from_name(name_or(cfg, "kernel", "dirichlet")));
  PrePreSchwarzian eta = eta_for(pair, kernel, cfg);

  double npts = num_or(cfg, "n_points", 200.0);
  if (!(npts >= 4 && npts <= 100000) || npts != std::floor(npts))
    throw ConfigError("n_points must be an integer in [4, 100000]");
  std::string route = name_or(cfg, "route", "analytic");
  if (route != "analytic" && route != "flow_fd")
    throw ConfigError("route must be analytic or flow_fd");

  json problem = {{"family", family_name(pair.family)}, {"kappa", pair.kappa},
                  {"nu", pair.nu},                      {"xi", pair.xi},
                  {"kernel", kernel_name(kernel.kind)},
                  {"n_points", static_cast<std::size_t>(npts)},
                  {"route", route}};
  json report = {{"command", "check"}, {"problem", problem}, {"seed", seed}};
  if (dry_run) {
    report["dry_run"] = true;
    report["plan"] = {{"eta", eta_family_name(eta.family)}, {"n_points", npts}};
    return report;
  }

  CouplingProblem p = make_problem(pair, kernel, eta, static_cast<std::size_t>(npts));
  if (route == "flow_fd") p.route = Route::FlowFD;
  if (cfg.contains("fd_step")) p.fd_step = num_req(cfg, "fd_step");
  CouplingReport rep = residual_system(p, threads);
  bool pass = rep.pass;

  report["residuals"] = {
      {"r1", rep.r1_max},
      {"r2", rep.r2_max},
      {"r3", rep.r3_max},
      {"skipped", rep.skipped},
      {"argmax",
       {{"r1", to_json(rep.argmax1)},
        {"r2", json{to_json(rep.argmax2.first), to_json(rep.argmax2.second)}},
        {"r3", json{to_json(rep.argmax3.first), to_json(rep.argmax3.second)}}}}};
  report["tolerance"] = rep.tolerance;
  report["mc"] = json::array();

  if (cfg.contains("mc")) {
    const json& mc = cfg.at("mc");
    require_keys(mc, {"observable", "points", "t", "dt", "n_paths"});
    McObservable obs = observable_from(name_or(mc, "observable", "m1_eta"));
    auto stats = mc_martingale(pair, eta, obs, points_req(mc, "points"),
                               num_req(mc, "t"), count_req(mc, "n_paths"),
                               num_req(mc, "dt"), seed, threads, &kernel);
    for (const McStat& s : stats) {
      report["mc"].push_back(stat_json(s));
      pass = pass && s.z_score < tol::mc_sigmas;
    }
  }
  report["verdict"] = pass ? "pass" : "fail";
  return report;
}

// ---- mc -------------------------------------------------------------------

json run_mc(const json& cfg, std::uint64_t seed, int threads, bool dry_run) {
  require_keys(cfg, {"family", "delta", "sigma", "kappa", "nu", "xi", "observable",
                     "points", "t", "dt", "n_paths", "kernel", "seed"});
  SlitFieldPair pair = pair_from(cfg);
  auto kernel = make_kernel(kernel_from_name(name_or(cfg, "kernel", "dirichlet")));
  PrePreSchwarzian eta = eta_for(pair, kernel, cfg);
  McObservable obs = observable_from(name_or(cfg, "observable", "m1_eta"));
  auto points = points_req(cfg, "points");
  double t = num_req(cfg, "t");
  double dt = num_req(cfg, "dt");
  std::size_t n_paths = count_req(cfg, "n_paths");

  json report = {{"command", "mc"},
                 {"observable", mc_observable_name(obs)},
                 {"seed", seed},
                 {"mc", json::array()}};
  if (dry_run) {
    report["dry_run"] = true;
    report["plan"] = {{"n_paths", n_paths}, {"t", t}, {"dt", dt},
                      {"n_points", points.size()}};
    return report;
  }
  bool pass = true;
  for (const McStat& s :
       mc_martingale(pair, eta, obs, points, t, n_paths, dt, seed, threads, &kernel)) {
    report["mc"].push_back(stat_json(s));
    pass = pass && s.z_score < tol::mc_sigmas;
  }
  report["verdict"] = pass ? "pass" : "fail";
  return report;
}

// ---- simulate ---------------------------------------------------------------

json run_simulate(const json& cfg, std::uint64_t seed, const std::string& out_dir,
                  bool dry_run) {
  require_keys(cfg, {"family", "delta", "sigma", "kappa", "nu", "xi", "chart",
                     "points", "t_max", "dt", "n_paths", "engine", "driving",
                     "trace", "out_csv", "out_svg", "seed"});
  SlitFieldPair pair = pair_from(cfg);
  Chart chart = chart_from_name(name_or(cfg, "chart", "halfplane"));
  std::vector<cplx> points = cfg.contains("points") ? points_req(cfg, "points")
                                                    : std::vector<cplx>{I};
  double t_max = num_req(cfg, "t_max");
  double dt = num_req(cfg, "dt");
  if (!(t_max > 0.0)) throw ConfigError("t_max must be positive");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  std::size_t n_paths = cfg.contains("n_paths") ? count_req(cfg, "n_paths") : 1;
  std::string engine_name = name_or(cfg, "engine", "ito");
  if (engine_name != "ito" && engine_name != "strat")
    throw ConfigError("engine must be ito or strat");
  Engine engine = engine_name == "ito" ? Engine::Ito : Engine::Strat;
  DrivingPath driving = driving_from(cfg, pair.kappa, t_max, seed);
  if (driving.kind == DrivingKind::Deterministic && n_paths != 1)
    throw ConfigError("deterministic driving describes a single path");

  std::string csv_path = join_out(out_dir, name_or(cfg, "out_csv", "trajectories.csv"));
  std::string svg_path = join_out(out_dir, name_or(cfg, "out_svg", "trace.svg"));
  bool want_trace = cfg.contains("trace");
  std::vector<double> t_grid;
  double eps = 1e-4;
  if (want_trace) {
    const json& tr = cfg.at("trace");
    require_keys(tr, {"t_grid", "eps"});
    if (!tr.contains("t_grid") || !tr.at("t_grid").is_array() || tr.at("t_grid").empty())
      throw ConfigError("trace needs a non-empty t_grid array");
    for (const json& x : tr.at("t_grid")) t_grid.push_back(x.get<double>());
    eps = num_or(tr, "eps", 1e-4);
  }

  json report = {{"command", "simulate"}, {"csv", csv_path},
                 {"n_paths", n_paths},    {"n_points", points.size()},
                 {"t_max", t_max},        {"seed", seed}};
  if (want_trace) report["svg"] = svg_path;
  if (dry_run) {
    report["dry_run"] = true;
    report["plan"] = {{"engine", engine_name},
                      {"chart", chart_name(chart)},
                      {"n_records", (std::size_t)std::llround(t_max / dt) + 1}};
    report["summary"] = "dry run: config valid";
    return report;
  }

  std::vector<LoewnerRun> runs;
  runs.reserve(n_paths);
  for (std::size_t pid = 0; pid < n_paths; ++pid)
    runs.push_back(run(pair, chart, points, t_max, dt, driving, pid, {}, engine));
  write_text_atomic(csv_path, trajectory_csv(runs));

  std::string summary = "simulate: " + std::to_string(n_paths) + " path(s) x " +
                        std::to_string(points.size()) + " point(s), wrote " + csv_path;
  if (want_trace) {
    std::vector<std::vector<cplx>> traces;
    for (std::size_t pid = 0; pid < n_paths; ++pid)
      traces.push_back(trace(pair, t_grid, driving, eps, pid, dt));
    write_text_atomic(svg_path, trace_svg(traces));
    summary += " and " + svg_path;
  }
  report["summary"] = summary;
  return report;
}

// ---- sample-gff -------------------------------------------------------------

json run_sample_gff(const json& cfg, std::uint64_t seed, int threads,
                    const std::string& out_dir, bool dry_run) {
  require_keys(cfg, {"kernel", "chart", "bumps", "eta", "n_samples", "out_csv", "seed"});
  auto kernel = make_kernel(kernel_from_name(name_or(cfg, "kernel", "dirichlet")));
  ObservableSet obs;
  obs.chart = cfg.contains("chart") ? chart_from_name(cfg.at("chart").get<std::string>())
                                    : kernel.natural;
  if (!cfg.contains("bumps") || !cfg.at("bumps").is_array() || cfg.at("bumps").empty())
    throw ConfigError("bumps must be a non-empty array");
  for (const json& b : cfg.at("bumps")) {
    require_keys(b, {"center", "radius", "weight"});
    Bump bump;
    bump.center = point_from(b.at("center"), "bump center");
    bump.radius = num_req(b, "radius");
    bump.weight = num_or(b, "weight", 1.0);
    if (!(bump.radius > 0.0)) throw ConfigError("bump radius must be positive");
    obs.bumps.push_back(bump);
  }
  PrePreSchwarzian eta;
  bool with_eta = cfg.contains("eta") && !cfg.at("eta").is_null();
  if (with_eta) {
    const json& e = cfg.at("eta");
    require_keys(e, {"family", "kappa", "nu"});
    if (!e.contains("family")) throw ConfigError("eta needs a family");
    double kappa = num_req(e, "kappa");
    if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
    eta = make_eta(eta_family_from_name(e.at("family").get<std::string>()), kappa,
                   num_or(e, "nu", 0.0));
  }
  std::size_t n_samples = count_req(cfg, "n_samples");
  std::string csv_path = join_out(out_dir, name_or(cfg, "out_csv", "ensemble.csv"));

  json report = {{"command", "sample-gff"},
                 {"kernel", kernel_name(kernel.kind)},
                 {"csv", csv_path},
                 {"n_samples", n_samples},
                 {"seed", seed}};
  if (dry_run) {
    report["dry_run"] = true;
    report["plan"] = {{"n_bumps", obs.bumps.size()},
                      {"chart", chart_name(obs.chart)},
                      {"with_eta", with_eta}};
    return report;
  }

  GffEnsemble ens = gff_sample(obs, kernel, with_eta ? &eta : nullptr, n_samples, seed,
                               threads);
  write_text_atomic(csv_path, ensemble_csv(ens));

  std::size_t m = obs.bumps.size();
  std::vector<double> smean(m, 0.0);
  for (const auto& row : ens.samples)
    for (std::size_t j = 0; j < m; ++j) smean[j] += row[j];
  for (double& v : smean) v /= static_cast<double>(n_samples);
  std::vector<std::vector<double>> scov(m, std::vector<double>(m, 0.0));
  for (const auto& row : ens.samples)
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b)
        scov[a][b] += (row[a] - smean[a]) * (row[b] - smean[b]);
  if (n_samples > 1)
    for (auto& r : scov)
      for (double& v : r) v /= static_cast<double>(n_samples - 1);

  report["quad_error"] = ens.pairing.quad_error;
  report["jitter"] = ens.jitter;
  report["mean"] = ens.pairing.mean;
  report["cov"] = ens.pairing.cov;
  report["sample_mean"] = smean;
  report["sample_cov"] = scov;
  return report;
}

// ---- classify ---------------------------------------------------------------

json run_classify(const json& cfg, std::uint64_t seed) {
  require_keys(cfg, {"delta", "sigma", "seed"});
  if (!cfg.contains("delta") || !cfg.contains("sigma"))
    throw ConfigError("classify needs delta and sigma coefficient arrays");
  json shim = {{"delta", cfg.at("delta")}, {"sigma", cfg.at("sigma")}};
  SlitFieldPair p = pair_from(shim);
  Classification cl = classify(p);
  json report = classification_json(cl);
  report["command"] = "classify";
  report["seed"] = seed;
  return report;
}

}  // namespace

json run_job(const std::string& kind, const json& config,
             std::optional<std::uint64_t> seed_flag, int threads,
             const std::string& out_dir, bool dry_run) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  std::uint64_t seed = 0;
  if (config.contains("seed")) {
    if (!config.at("seed").is_number_unsigned())
      throw ConfigError("seed must be a non-negative integer");
    seed = config.at("seed").get<std::uint64_t>();
  }
  if (seed_flag) seed = *seed_flag;  // flags win

  if (kind == "classify") return run_classify(config, seed);
  if (kind == "check") return run_check(config, seed, threads, dry_run);
  if (kind == "mc") return run_mc(config, seed, threads, dry_run);
  if (kind == "simulate") return run_simulate(config, seed, out_dir, dry_run);
  if (kind == "sample-gff") return run_sample_gff(config, seed, threads, out_dir, dry_run);
  throw ConfigError("unknown job kind: " + kind);
}

}  // namespace slitflow
