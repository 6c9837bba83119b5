#pragma once

// Batch command-line front end. run_cli() is the whole program; main() only
// forwards to it so the tests can drive it in-process.
//
// Exit codes: 0 success, 1 internal or (with --strict) statistical failure,
// 2 usage error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "webflow/discreteweb.hpp"
#include "webflow/fullweb.hpp"
#include "webflow/pathspace_json.hpp"
#include "webflow/stats.hpp"
#include "webflow/stochflow.hpp"

namespace webflow::cli {

inline constexpr const char* kToolName = "webflow";
inline constexpr const char* kVersion = "1.0.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline LatticeWindow parse_window(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw UsageError("window must look like WIDTHxHEIGHT");
  auto num = [&](const std::string& part) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(part, &used);
    } catch (const std::exception&) {
      throw UsageError("bad window '" + s + "'");
    }
    if (used != part.size()) throw UsageError("bad window '" + s + "'");
    return v;
  };
  const long long w = num(s.substr(0, x));
  const long long h = num(s.substr(x + 1));
  if (w <= 0 || h <= 0) throw UsageError("window '" + s + "' is empty");
  return LatticeWindow::centered(w, h);
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw UsageError("bad number '" + item + "' in list");
    }
    if (used != item.size()) throw UsageError("bad number '" + item + "' in list");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

inline std::string json_scalar_to_arg(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (const auto& e : v) s += (s.empty() ? "" : ",") + json_scalar_to_arg(e);
    return s;
  }
  return v.dump();
}

/// Turns a JSON config file into flags placed before the user's own, so the
/// user's flags win (options keep their last value).
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a path");
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  Json cfg;
  try {
    in >> cfg;
  } catch (const std::exception& e) {
    throw UsageError(std::string("config file is not valid JSON: ") + e.what());
  }
  if (!cfg.is_object()) throw UsageError("config file must hold a JSON object");
  std::vector<std::string> injected;
  for (const auto& [key, value] : cfg.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back("--" + key);
      continue;
    }
    injected.push_back("--" + key);
    injected.push_back(json_scalar_to_arg(value));
  }
  std::size_t pos = 0;
  while (pos < args.size() && !args[pos].empty() && args[pos][0] != '-') ++pos;
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(pos), injected.begin(), injected.end());
  return args;
}

/// Resolved option values of an app and its parsed subcommands.
inline void echo_options(const CLI::App* app, Json& out) {
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "out" || name == "threads" || name == "config" ||
        name == "version")
      continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
      if (opt->get_items_expected_max() == 0) value = "true";
    } else {
      value = opt->get_default_str();
      if (opt->get_items_expected_max() == 0 && value.empty()) value = "false";
    }
    out[name] = value;
  }
  for (const CLI::App* sub : app->get_subcommands()) {
    Json inner = Json::object();
    echo_options(sub, inner);
    out[sub->get_name()] = inner;
  }
}

struct Context {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out_path;
  bool strict = false;
  Json config;
  std::ostream* out = nullptr;
};

inline void emit(const Context& ctx, const std::string& text) {
  if (ctx.out_path.empty()) {
    *ctx.out << text;
    return;
  }
  std::ofstream f(ctx.out_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + ctx.out_path + "'");
  f << text;
}

inline Json artifact_header(const Context& ctx, const std::string& command) {
  Json j;
  j["tool"] = kToolName;
  j["version"] = kVersion;
  j["command"] = command;
  j["config"] = ctx.config;
  return j;
}

inline std::string csv_header(const Context& ctx, const std::string& command) {
  return std::string("# ") + kToolName + " " + kVersion + " " + command + "\n# config " + ctx.config.dump() + "\n";
}

inline std::string fmt(double v, const char* spec = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace detail

/// Runs the tool; argv[0] is the program name.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  using namespace detail;
  CLI::App app{"Discrete and stochastic-flow approximations of coalescing Brownian webs", kToolName};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  Context ctx;
  ctx.out = &out;
  app.add_option("--seed", ctx.seed, "Base seed (env WEBFLOW_SEED)")->envname("WEBFLOW_SEED");
  app.add_option("--threads", ctx.threads, "Worker threads, 0 = all cores (results do not depend on it)");
  std::string config_path;  // consumed by expand_config before parsing
  app.add_option("--config", config_path, "JSON object of flag values; explicit flags take precedence");
  app.add_option("--out", ctx.out_path, "Write the artifact here instead of stdout");
  app.add_flag("--strict", ctx.strict, "Exit 1 when a check or statistical test fails");

  // web
  auto* web = app.add_subcommand("web", "Sample a double web and trace forward/dual paths");
  std::string window = "256x256";
  std::size_t n_paths = 16;
  double delta = 0.0;
  web->add_option("--window", window, "Lattice window WIDTHxHEIGHT");
  web->add_option("--paths", n_paths, "Number of forward and of dual paths");
  web->add_option("--delta", delta, "Rescaling; 0 = 1/sqrt(HEIGHT)");

  // fullweb
  auto* fullweb = app.add_subcommand("fullweb", "Full web constructions");
  fullweb->require_subcommand(1);
  auto* fw_build = fullweb->add_subcommand("build", "Build a full web on a grid of seed points");
  std::string construction = "skeleton";
  std::size_t grid = 16;
  std::string fw_window = "64x64";
  double fw_delta = 0.05;
  bool full_plane = false;
  fw_build->add_option("--construction", construction, "skeleton | splice");
  fw_build->add_option("--grid", grid, "Seed grid is GRID x GRID");
  fw_build->add_option("--window", fw_window, "Lattice window WIDTHxHEIGHT");
  fw_build->add_option("--delta", fw_delta, "Rescaling");
  fw_build->add_flag("--full-plane", full_plane, "Treat the window as the whole plane (adds the trivial paths)");

  auto* fw_eq = fullweb->add_subcommand("equivalence", "Distance between the two constructions");
  double eq_delta = 0.05;
  std::string eq_field = "random";
  std::size_t eq_instances = 1;
  EquivalenceGeometry geom;
  fw_eq->add_option("--delta", eq_delta, "Rescaling");
  fw_eq->add_option("--field", eq_field, "random | up (all arrows +1)");
  fw_eq->add_option("--instances", eq_instances, "Number of random fields");
  fw_eq->add_option("--half-width", geom.half_width, "Mesh half-width at the top row (lattice units)");
  fw_eq->add_option("--height", geom.height, "Mesh height (lattice rows)");

  auto* fw_cls = fullweb->add_subcommand("classify", "Estimate point types at random sites");
  std::string cls_window = "512x512";
  std::size_t cls_points = 1000;
  double cls_eps = 8.0;
  fw_cls->add_option("--window", cls_window, "Lattice window WIDTHxHEIGHT");
  fw_cls->add_option("--points", cls_points, "Number of sites");
  fw_cls->add_option("--eps", cls_eps, "Observation scale in lattice units");

  // flow
  auto* flow = app.add_subcommand("flow", "Stochastic flow n-point motions");
  flow->require_subcommand(1);
  CovarianceSpec spec;
  std::string kernel = "gaussian";
  auto add_kernel = [&](CLI::App* sc) {
    sc->add_option("--kernel", kernel, "gaussian | cauchy");
    sc->add_option("--sigma", spec.sigma, "Kernel scale");
    sc->add_option("--b0", spec.b0, "B(0)");
  };
  auto* fl_sim = flow->add_subcommand("simulate", "Simulate n-point motions");
  auto* fl_res = flow->add_subcommand("rescale", "Simulate at scale delta and rescale");
  std::size_t n_points = 2;
  double spacing = 1.0, horizon = 1.0, step_h = 0.0, fl_delta = 0.1;
  std::size_t fl_replicas = 1, stride = 1;
  std::string format = "csv";
  for (auto* sc : {fl_sim, fl_res}) {
    sc->add_option("--points", n_points, "Number of points");
    sc->add_option("--spacing", spacing, "Initial spacing");
    sc->add_option("--T", horizon, "Time horizon");
    sc->add_option("--step", step_h, "Euler step; 0 = automatic");
    sc->add_option("--replicas", fl_replicas, "Replicas");
    sc->add_option("--stride", stride, "Store every STRIDE-th step");
    sc->add_option("--format", format, "csv | json");
    add_kernel(sc);
  }
  fl_res->add_option("--delta", fl_delta, "Rescaling");

  auto* fl_gap = flow->add_subcommand("gap", "Rescaled two-point gap law against the coalescing oracle");
  double gap_d = 1.0, gap_t = 1.0, gap_delta = 0.05, gap_thr = 0.0;
  std::size_t gap_replicas = 10000;
  fl_gap->add_option("--d", gap_d, "Initial distance");
  fl_gap->add_option("--t", gap_t, "Observation time");
  fl_gap->add_option("--delta", gap_delta, "Rescaling");
  fl_gap->add_option("--step", step_h, "Euler step (unrescaled); 0 = automatic");
  fl_gap->add_option("--replicas", gap_replicas, "Replicas");
  fl_gap->add_option("--coalescence-threshold", gap_thr, "Gaps below this count as coalesced; 0 = delta");
  add_kernel(fl_gap);

  // stats
  auto* stats = app.add_subcommand("stats", "Oracles and statistical experiments");
  stats->require_subcommand(1);
  auto* st_surv = stats->add_subcommand("survival", "Survival probability of a coalescing pair");
  double st_d = 1.0, st_t = 1.0;
  st_surv->add_option("--d", st_d, "Initial distance");
  st_surv->add_option("--t", st_t, "Time");
  auto* st_dens = stats->add_subcommand("density", "Density of distinct paths");
  double dens_t = 0.25, dens_delta = 0.05;
  std::size_t dens_replicas = 1;
  std::int64_t dens_half_width = 100000;
  bool dens_sim = false;
  st_dens->add_option("--t", dens_t, "Time");
  st_dens->add_flag("--simulate", dens_sim, "Also estimate it from the lattice web");
  st_dens->add_option("--delta", dens_delta, "Rescaling for --simulate");
  st_dens->add_option("--replicas", dens_replicas, "Fields for --simulate");
  st_dens->add_option("--half-width", dens_half_width, "Counting band half-width (lattice units)");
  auto* st_curve = stats->add_subcommand("curve", "Convergence curve of a named experiment");
  std::string experiment = "walk_gap", deltas_s = "0.2,0.1,0.05";
  std::size_t curve_replicas = 1000;
  ExperimentOptions eopt;
  st_curve->add_option("--experiment", experiment, "walk_gap | flow_gap | equivalence | density");
  st_curve->add_option("--deltas", deltas_s, "Decreasing comma-separated deltas");
  st_curve->add_option("--replicas", curve_replicas, "Replicas per delta");
  st_curve->add_option("--d", eopt.d, "Gap experiments: initial distance");
  st_curve->add_option("--t", eopt.t, "Gap experiments: time");
  st_curve->add_option("--density-t", eopt.density_t, "Density experiment: time");
  st_curve->add_option("--density-half-width", eopt.density_half_width, "Density experiment: band half-width");
  add_kernel(st_curve);
  auto* st_types = stats->add_subcommand("types", "Frequency of generic point types");
  st_types->add_option("--window", cls_window, "Lattice window WIDTHxHEIGHT");
  st_types->add_option("--points", cls_points, "Number of sites");
  st_types->add_option("--eps", cls_eps, "Observation scale in lattice units");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    echo_options(&app, ctx.config);
    spec.kernel = kernel_from_name(kernel);
    eopt.spec = spec;
    eopt.threads = ctx.threads;
    eopt.h = step_h;
    int status = 0;

    if (web->parsed()) {
      const LatticeWindow lw = parse_window(window);
      if (n_paths == 0) throw UsageError("--paths must be positive");
      const double d = delta > 0 ? delta : 1.0 / std::sqrt(static_cast<double>(lw.height()));
      const ArrowField field(lw, ctx.seed);
      CounterRng rng(ctx.seed, 1);
      const auto fs = random_sites(lw, n_paths, true, rng);
      const auto bs = random_sites(lw, n_paths, false, rng);
      const DoubleWebSample dw = sample_double_web(field, fs, bs);
      const auto scan = scan_crossings(dw);
      const Window w = rescaled_window(lw, d);
      PathSet<ForwardSemipath> fwd(w, {});
      PathSet<BackwardSemipath> dual(w, {});
      Json truncated = Json::object();
      truncated["forward"] = Json::array();
      truncated["dual"] = Json::array();
      for (const auto& p : dw.forward_paths) {
        fwd.members.push_back(to_forward_semipath(p, d, w));
        truncated["forward"].push_back(p.truncated());
      }
      for (const auto& p : dw.dual_paths) {
        dual.members.push_back(to_backward_semipath(p, d, w));
        truncated["dual"].push_back(p.truncated());
      }
      Json doc = artifact_header(ctx, "web");
      doc["delta"] = d;
      doc["forward"] = to_json(fwd);
      doc["dual"] = to_json(dual);
      doc["truncated"] = truncated;
      doc["crossing_scan"] = {{"pairs_checked", scan.pairs_checked}, {"crossings", scan.crossings}};
      emit(ctx, doc.dump(1) + "\n");
      if (ctx.strict && scan.crossings > 0) status = 1;
    } else if (fw_build->parsed()) {
      if (construction != "skeleton" && construction != "splice")
        throw UsageError("unknown construction '" + construction + "'");
      if (grid == 0) throw UsageError("--grid must be positive");
      if (!(fw_delta > 0)) throw UsageError("--delta must be positive");
      const LatticeWindow lw = parse_window(fw_window);
      const DoubleWebSample dw{ArrowField(lw, ctx.seed), {}, {}};
      std::vector<SpaceTimePoint> D;
      const double gx = static_cast<double>(lw.width()) / static_cast<double>(grid);
      const double gt = static_cast<double>(lw.height()) / static_cast<double>(grid);
      for (std::size_t j = 0; j < grid; ++j)
        for (std::size_t i = 0; i < grid; ++i)
          D.push_back({(static_cast<double>(lw.x_lo) + (static_cast<double>(i) + 0.5) * gx) * fw_delta,
                       (static_cast<double>(lw.t_lo) + (static_cast<double>(j) + 0.5) * gt) * fw_delta * fw_delta});
      const double pitch = std::min(gx * fw_delta, gt * fw_delta * fw_delta);
      const FullWebSample fw = construction == "skeleton"
                                   ? build_skeleton(dw, D, fw_delta, pitch, full_plane)
                                   : build_splice_enumeration(dw, D, fw_delta, pitch, full_plane, ctx.threads);
      const std::size_t crossings = count_crossings(fw.paths);
      Json doc = artifact_header(ctx, "fullweb build");
      const Json body = to_json(fw);
      for (const auto& [k, v] : body.items()) doc[k] = v;
      doc["crossings"] = crossings;
      emit(ctx, doc.dump(1) + "\n");
      if (ctx.strict && crossings > 0) status = 1;
    } else if (fw_eq->parsed()) {
      if (eq_field != "random" && eq_field != "up") throw UsageError("unknown field '" + eq_field + "'");
      if (!(eq_delta > 0) || eq_instances == 0 || geom.half_width < 0 || geom.height < 1)
        throw UsageError("bad equivalence parameters");
      std::string text = csv_header(ctx, "fullweb equivalence") + "instance,seed,delta,distance,threshold\n";
      std::vector<double> dist(eq_instances);
      std::vector<std::uint64_t> seeds(eq_instances);
      parallel_for(eq_instances, ctx.threads, [&](std::size_t i) {
        seeds[i] = substream_seed(ctx.seed, i);
        if (eq_field == "random") {
          dist[i] = equivalence_instance(eq_delta, seeds[i], geom);
        } else {
          const std::int64_t xr = geom.half_width + 2 * geom.height + 4;
          const DoubleWebSample dw{
              ArrowField::deterministic({-xr, xr, 0, geom.height}, [](std::int64_t, std::int64_t) { return 1; }),
              {},
              {}};
          const auto mesh = light_cone_mesh(geom.half_width, 0, geom.height, eq_delta);
          dist[i] = verify_construction_equivalence(dw, mesh, mesh, eq_delta);
        }
      });
      for (std::size_t i = 0; i < eq_instances; ++i) {
        text += std::to_string(i) + "," + std::to_string(seeds[i]) + "," + fmt(eq_delta) + "," + fmt(dist[i]) + "," +
                fmt(2 * eq_delta) + "\n";
        if (ctx.strict && dist[i] > 2 * eq_delta) status = 1;
      }
      emit(ctx, text);
    } else if (fw_cls->parsed() || st_types->parsed()) {
      const LatticeWindow lw = parse_window(cls_window);
      if (cls_points == 0 || !(cls_eps > 0)) throw UsageError("bad classification parameters");
      const ArrowField field(lw, ctx.seed);
      CounterRng rng(ctx.seed, 2);
      const auto sites = classifiable_sites(lw, cls_eps, cls_points, rng);
      std::vector<PointType> types(sites.size());
      parallel_for(sites.size(), ctx.threads, [&](std::size_t i) {
        types[i] = classify_point(field, {static_cast<double>(sites[i].x), static_cast<double>(sites[i].t)}, cls_eps);
      });
      const StatReport rep = type_frequency_report(types, ctx.seed);
      Json doc = artifact_header(ctx, fw_cls->parsed() ? "fullweb classify" : "stats types");
      std::map<std::string, std::size_t> counts;
      for (const auto& t : types) ++counts["(" + std::to_string(t.m_in) + "," + std::to_string(t.m_out) + ")"];
      doc["type_counts"] = counts;
      doc["report"] = to_json(rep);
      emit(ctx, doc.dump(1) + "\n");
      if (ctx.strict && !rep.pass) status = 1;
    } else if (fl_sim->parsed() || fl_res->parsed()) {
      if (n_points == 0) throw UsageError("--points must be positive");
      if (fl_replicas == 0 || stride == 0 || !(spacing > 0) || !(horizon > 0))
        throw UsageError("bad simulation parameters");
      if (format != "csv" && format != "json") throw UsageError("unknown format '" + format + "'");
      const double scale = fl_res->parsed() ? fl_delta : 1.0;
      if (!(scale > 0)) throw UsageError("--delta must be positive");
      std::vector<double> init(n_points);
      for (std::size_t i = 0; i < n_points; ++i) init[i] = static_cast<double>(i) * spacing / scale;
      FlowTrajectorySet traj =
          simulate(spec, init, horizon / (scale * scale), step_h, ctx.seed, fl_replicas, ctx.threads, stride);
      if (fl_res->parsed()) traj = rescale_flow(std::move(traj), scale);
      const std::string cmd = fl_res->parsed() ? "flow rescale" : "flow simulate";
      if (format == "csv") {
        std::ostringstream os;
        os << csv_header(ctx, cmd);
        os << "# h " << fmt(traj.config.h) << " violations " << traj.counters.violations << " steps "
           << traj.counters.steps << "\n";
        write_csv(traj, os);
        emit(ctx, os.str());
      } else {
        Json doc = artifact_header(ctx, cmd);
        doc["h"] = traj.config.h;
        doc["delta"] = traj.config.delta;
        doc["violations"] = traj.counters.violations;
        doc["steps"] = traj.counters.steps;
        doc["paths"] = to_json(to_path_set(traj));
        emit(ctx, doc.dump(1) + "\n");
      }
      if (ctx.strict && traj.violation_rate() > AutoStepOptions{}.threshold) status = 1;
    } else if (fl_gap->parsed()) {
      if (!(gap_d > 0) || !(gap_t > 0) || !(gap_delta > 0) || gap_replicas == 0)
        throw UsageError("bad gap parameters");
      GapOptions go;
      go.threads = ctx.threads;
      go.coalescence_threshold = gap_thr;
      GapDiagnostics diag;
      const auto emp = two_point_gap_sample(spec, 0.0, gap_d, gap_t, gap_delta, step_h, ctx.seed, gap_replicas, go, &diag);
      const double ks = ks_statistic(emp, [&](double y) { return coalescing_gap_cdf(gap_d, gap_t, y); });
      Json rc;
      rc["oracle"] = "coalescing_gap_cdf";
      rc["h"] = diag.h;
      rc["violations"] = diag.counters.violations;
      rc["steps"] = diag.counters.steps;
      rc["coalescence_threshold"] = diag.coalescence_threshold;
      const StatReport rep = StatReport::make("flow_gap_ks", ks, ks_threshold(gap_replicas) +
                                                                     flow_gap_bias_allowance(gap_delta),
                                              gap_replicas, ctx.seed, rc);
      Json doc = artifact_header(ctx, "flow gap");
      doc["distribution"] = to_json(emp);
      doc["report"] = to_json(rep);
      emit(ctx, doc.dump(1) + "\n");
      if (ctx.strict && !rep.pass) status = 1;
    } else if (st_surv->parsed()) {
      if (!(st_d >= 0) || !(st_t >= 0)) throw UsageError("--d and --t must be nonnegative");
      const double v = coalescing_survival(st_d, st_t);
      out << fmt(v, "%.6f") << "\n";
      if (!ctx.out_path.empty()) {
        Json doc = artifact_header(ctx, "stats survival");
        doc["value"] = v;
        emit(ctx, doc.dump(1) + "\n");
      }
    } else if (st_dens->parsed()) {
      if (!(dens_t > 0)) throw UsageError("--t must be positive");
      Json doc = artifact_header(ctx, "stats density");
      const double oracle = coalescing_density(dens_t);
      doc["oracle"] = oracle;
      if (dens_sim) {
        if (!(dens_delta > 0) || dens_replicas == 0 || dens_half_width <= 0) throw UsageError("bad density parameters");
        const double est = walk_density(dens_t, dens_delta, dens_half_width, ctx.seed, dens_replicas, ctx.threads);
        const StatReport rep =
            StatReport::make("density_relative_error", std::abs(est / oracle - 1.0), 0.03, dens_replicas, ctx.seed);
        doc["estimate"] = est;
        doc["report"] = to_json(rep);
        if (ctx.strict && !rep.pass) status = 1;
      }
      emit(ctx, doc.dump(1) + "\n");
    } else if (st_curve->parsed()) {
      if (experiment != "walk_gap" && experiment != "flow_gap" && experiment != "equivalence" &&
          experiment != "density")
        throw UsageError("unknown experiment '" + experiment + "'");
      if (curve_replicas == 0) throw UsageError("--replicas must be positive");
      const auto deltas = parse_list(deltas_s);
      for (std::size_t i = 0; i < deltas.size(); ++i)
        if (!(deltas[i] > 0) || (i > 0 && !(deltas[i] < deltas[i - 1])))
          throw UsageError("--deltas must be positive and decreasing");
      const auto rows = convergence_curve(deltas, experiment, curve_replicas, ctx.seed, eopt);
      std::ostringstream os;
      os << csv_header(ctx, "stats curve");
      write_curve_csv(rows, os);
      emit(ctx, os.str());
      for (const auto& r : rows)
        if (ctx.strict && r.statistic > r.threshold) status = 1;
    }
    return status;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace webflow::cli
