#pragma once

// Coalescing Brownian motion reference laws and the statistics used to
// compare sampled webs and flows with them. All laws are for unit-diffusion
// pairs, so the gap diffuses with coefficient 2.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "webflow/discreteweb.hpp"
#include "webflow/empirical.hpp"
#include "webflow/fullweb.hpp"
#include "webflow/parallel.hpp"
#include "webflow/pathspace_json.hpp"
#include "webflow/stochflow.hpp"

namespace webflow {

namespace detail {

inline void check_law_args(double d, double t) {
  if (!(d >= 0) || !(t >= 0)) throw std::invalid_argument("coalescing law: need d >= 0 and t >= 0");
}

/// Standard normal CDF.
inline double norm_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace detail

/// P(two coalescing unit-diffusion Brownian motions started d apart have not
/// met by time t).
inline double coalescing_survival(double d, double t) {
  detail::check_law_args(d, t);
  if (t == 0) return d > 0 ? 1.0 : 0.0;
  // written as 1 - atom so that survival + atom == 1 holds exactly
  return 1.0 - std::erfc(d / (2.0 * std::sqrt(t)));
}

/// Density on (0, inf) of the gap at time t (the absolutely continuous part).
inline double coalescing_gap_density(double d, double t, double y) {
  detail::check_law_args(d, t);
  if (!(y > 0) || t == 0) return 0.0;
  const double s = std::sqrt(2.0 * t);
  const double c = 1.0 / (s * std::sqrt(2.0 * std::numbers::pi));
  const double a = (y - d) / s, b = (y + d) / s;
  return c * (std::exp(-0.5 * a * a) - std::exp(-0.5 * b * b));
}

/// CDF of the gap at time t: an atom of mass 1 - survival at 0 plus the
/// image-method density.
inline double coalescing_gap_cdf(double d, double t, double y) {
  detail::check_law_args(d, t);
  if (y < 0) return 0.0;
  if (t == 0) return y >= d ? 1.0 : 0.0;
  const double atom = std::erfc(d / (2.0 * std::sqrt(t)));
  if (y == 0) return atom;
  if (std::isinf(y)) return 1.0;
  const double s = std::sqrt(2.0 * t);
  const double cont = (detail::norm_cdf((y - d) / s) - detail::norm_cdf(-d / s)) -
                      (detail::norm_cdf((y + d) / s) - detail::norm_cdf(d / s));
  return std::min(1.0, atom + cont);
}

/// Expected number of distinct paths per unit length at time t for the web
/// started from every point of the line at time 0.
inline double coalescing_density(double t) {
  if (!(t > 0)) throw std::invalid_argument("coalescing_density: t must be positive");
  return 1.0 / std::sqrt(std::numbers::pi * t);
}

/// sup |F_emp - F| over all jump points of the empirical law, comparing both
/// one-sided limits. `cdf` must be right-continuous.
inline double ks_statistic(const EmpiricalDistribution& emp, const std::function<double(double)>& cdf) {
  if (emp.empty()) throw std::invalid_argument("ks_statistic: empty distribution");
  const double n = static_cast<double>(emp.replica_count());
  const auto& s = emp.samples();
  double worst = 0.0;
  std::size_t below = 0;  // count of the sample strictly below the current value
  bool atom_done = emp.atom_at_zero() == 0;
  auto visit = [&](double v, std::size_t mult) {
    const double f_left = cdf(std::nextafter(v, -std::numeric_limits<double>::infinity()));
    const double f = cdf(v);
    worst = std::max(worst, std::abs(static_cast<double>(below) / n - f_left));
    below += mult;
    worst = std::max(worst, std::abs(static_cast<double>(below) / n - f));
  };
  std::size_t i = 0;
  while (i < s.size() || !atom_done) {
    double v;
    std::size_t mult = 0;
    if (!atom_done && (i == s.size() || s[i] >= 0.0)) {
      v = 0.0;
      mult = emp.atom_at_zero();
      atom_done = true;
    } else {
      v = s[i];
    }
    while (i < s.size() && s[i] == v) {
      ++mult;
      ++i;
    }
    visit(v, mult);
  }
  return worst;
}

struct StatReport {
  std::string test_name;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::size_t replica_count = 0;
  std::uint64_t seed = 0;
  Json config = Json::object();

  static StatReport make(std::string name, double statistic, double threshold, std::size_t replicas,
                         std::uint64_t seed, Json config = Json::object()) {
    return {std::move(name), statistic, threshold, statistic <= threshold, replicas, seed, std::move(config)};
  }
};

inline Json to_json(const StatReport& r) {
  Json j;
  j["test_name"] = r.test_name;
  j["statistic"] = r.statistic;
  j["threshold"] = r.threshold;
  j["pass"] = r.pass;
  j["replica_count"] = r.replica_count;
  j["seed"] = r.seed;
  j["config"] = r.config;
  return j;
}

inline Json to_json(const EmpiricalDistribution& e) {
  Json j;
  j["replica_count"] = e.replica_count();
  j["atom_at_zero"] = e.atom_at_zero();
  j["samples"] = e.samples();
  return j;
}

/// Share of points of generic type (one outgoing path, at most one incoming
/// strand). The statistic is the share of other types; pass at <= 1%.
inline StatReport type_frequency_report(const std::vector<PointType>& samples, std::uint64_t seed = 0) {
  if (samples.empty()) throw std::invalid_argument("type_frequency_report: no samples");
  std::size_t generic = 0;
  for (const auto& p : samples)
    if (p.m_out == 1 && p.m_in <= 1) ++generic;
  const auto n = static_cast<double>(samples.size());
  Json cfg;
  cfg["generic_fraction"] = static_cast<double>(generic) / n;
  return StatReport::make("type_frequency", static_cast<double>(samples.size() - generic) / n, 0.01, samples.size(),
                          seed, cfg);
}

/// Rescaled gap law of two walkers of the lattice web started `d` apart,
/// observed at time t. The lattice separation is the even integer nearest
/// d / delta; `effective_d` / `effective_t` report the distance and time
/// actually simulated.
struct WalkGapResult {
  EmpiricalDistribution gaps;
  double effective_d = 0.0;
  double effective_t = 0.0;
};

inline WalkGapResult walk_gap_sample(double d, double t, double delta, std::uint64_t seed, std::size_t replicas,
                                     unsigned threads = 1) {
  if (!(d > 0) || !(t > 0) || !(delta > 0)) throw std::invalid_argument("walk_gap_sample: need d, t, delta > 0");
  if (replicas == 0) throw std::invalid_argument("walk_gap_sample: replicas must be positive");
  const std::int64_t sep = std::max<std::int64_t>(2, 2 * std::llround(d / (2 * delta)));
  const std::int64_t steps = std::max<std::int64_t>(1, std::llround(t / (delta * delta)));
  const LatticeWindow w{-steps - 2, sep + steps + 2, 0, steps};
  std::vector<std::int64_t> gap(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    const ArrowField field(w, substream_seed(seed, r));
    std::int64_t a = 0, b = sep;
    for (std::int64_t s = 0; s < steps && a != b; ++s) {
      a += field.arrow(a, s);
      b += field.arrow(b, s);
    }
    gap[r] = b - a;
  });
  std::vector<double> kept;
  std::size_t atom = 0;
  for (auto g : gap) {
    if (g == 0) {
      ++atom;
    } else {
      kept.push_back(static_cast<double>(g) * delta);
    }
  }
  return {EmpiricalDistribution(std::move(kept), atom), static_cast<double>(sep) * delta,
          static_cast<double>(steps) * delta * delta};
}

/// Distinct forward paths per unit rescaled length at time t, for the lattice
/// web started from every even site of row 0. Only positions in the central
/// band [-half_width, half_width) are counted; paths from outside its light
/// cone cannot reach it. Returns the mean over replicas.
inline double walk_density(double t, double delta, std::int64_t half_width, std::uint64_t seed, std::size_t replicas,
                           unsigned threads = 1) {
  if (!(t > 0) || !(delta > 0) || half_width <= 0 || replicas == 0)
    throw std::invalid_argument("walk_density: bad arguments");
  const std::int64_t steps = std::max<std::int64_t>(1, std::llround(t / (delta * delta)));
  const std::int64_t reach = half_width + steps + 2;
  std::vector<double> dens(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    const ArrowField field({-reach - steps, reach + steps, 0, steps}, substream_seed(seed, r));
    std::vector<std::int64_t> pos;
    for (std::int64_t x = -reach; x <= reach; ++x)
      if ((x & 1) == 0) pos.push_back(x);
    for (std::int64_t s = 0; s < steps; ++s) {
      for (auto& x : pos) x += field.arrow(x, s);
      pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
    }
    std::size_t count = 0;
    for (auto x : pos)
      if (x >= -half_width && x < half_width) ++count;
    dens[r] = static_cast<double>(count) / (2.0 * static_cast<double>(half_width) * delta);
  });
  double sum = 0.0;
  for (double v : dens) sum += v;
  return sum / static_cast<double>(replicas);
}

struct CurveRow {
  double delta = 0.0;
  double statistic = 0.0;
  double threshold = 0.0;
  std::size_t replicas = 0;
  std::uint64_t seed = 0;
};

struct ExperimentOptions {
  double d = 1.0;
  double t = 1.0;
  /// Observation time of the density experiment.
  double density_t = 0.25;
  /// Lattice half-width of the density counting band.
  std::int64_t density_half_width = 100000;
  CovarianceSpec spec{};
  double h = 0.0;
  unsigned threads = 1;
};

/// KS allowance for discretisation bias. Lattice gaps live on a grid of
/// pitch 2 delta and flow gaps below delta are lumped into the atom, which
/// costs O(delta) in the KS distance in both cases. Observed values at 1e5
/// replicas are about delta / 4 (walk) and delta / 18 (flow).
inline double walk_gap_bias_allowance(double delta) { return delta / 2; }
inline double flow_gap_bias_allowance(double delta) { return delta / 4; }

inline double ks_threshold(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

/// Equivalence-distance instance geometry, in lattice units.
struct EquivalenceGeometry {
  std::int64_t half_width = 6;
  std::int64_t height = 12;
};

/// Skeleton vs splice webs on a light-cone mesh of one random field.
inline double equivalence_instance(double delta, std::uint64_t seed, const EquivalenceGeometry& g = {}) {
  const std::int64_t xr = g.half_width + 2 * g.height + 4;
  const ArrowField field({-xr, xr, 0, g.height}, seed);
  const DoubleWebSample dw{field, {}, {}};
  const auto mesh = light_cone_mesh(g.half_width, 0, g.height, delta);
  return verify_construction_equivalence(dw, mesh, mesh, delta);
}

/// Runs a named experiment at every delta (which must decrease).
/// walk_gap, flow_gap: KS distance to the gap law. equivalence: the largest
/// construction distance over `replicas` fields, threshold 2 delta.
/// density: relative error of the walk density at opts.density_t.
inline std::vector<CurveRow> convergence_curve(const std::vector<double>& deltas, const std::string& experiment,
                                               std::size_t replicas, std::uint64_t seed,
                                               const ExperimentOptions& opts = {}) {
  if (experiment != "walk_gap" && experiment != "flow_gap" && experiment != "equivalence" &&
      experiment != "density")
    throw std::invalid_argument("convergence_curve: unknown experiment '" + experiment + "'");
  if (deltas.empty()) throw std::invalid_argument("convergence_curve: no deltas");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0)) throw std::invalid_argument("convergence_curve: deltas must be positive");
    if (i > 0 && !(deltas[i] < deltas[i - 1])) throw std::invalid_argument("convergence_curve: deltas must decrease");
  }
  if (replicas == 0) throw std::invalid_argument("convergence_curve: replicas must be positive");

  std::vector<CurveRow> rows;
  for (double delta : deltas) {
    CurveRow row{delta, 0.0, 0.0, replicas, seed};
    if (experiment == "walk_gap") {
      const auto res = walk_gap_sample(opts.d, opts.t, delta, seed, replicas, opts.threads);
      const double d = res.effective_d, t = res.effective_t;
      row.statistic = ks_statistic(res.gaps, [&](double y) { return coalescing_gap_cdf(d, t, y); });
      row.threshold = ks_threshold(replicas) + walk_gap_bias_allowance(delta);
    } else if (experiment == "flow_gap") {
      GapOptions go;
      go.threads = opts.threads;
      const auto emp = two_point_gap_sample(opts.spec, 0.0, opts.d, opts.t, delta, opts.h, seed, replicas, go);
      row.statistic = ks_statistic(emp, [&](double y) { return coalescing_gap_cdf(opts.d, opts.t, y); });
      row.threshold = ks_threshold(replicas) + flow_gap_bias_allowance(delta);
    } else if (experiment == "equivalence") {
      std::vector<double> dist(replicas);
      parallel_for(replicas, opts.threads,
                   [&](std::size_t r) { dist[r] = equivalence_instance(delta, substream_seed(seed, r)); });
      row.statistic = *std::max_element(dist.begin(), dist.end());
      row.threshold = 2.0 * delta;
    } else {
      const double est = walk_density(opts.density_t, delta, opts.density_half_width, seed, replicas, opts.threads);
      row.statistic = std::abs(est / coalescing_density(opts.density_t) - 1.0);
      row.threshold = 0.03;
    }
    rows.push_back(row);
  }
  return rows;
}

/// CSV with header delta,statistic,threshold,replicas,seed.
inline void write_curve_csv(const std::vector<CurveRow>& rows, std::ostream& os) {
  os << "delta,statistic,threshold,replicas,seed\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%zu,%llu\n", r.delta, r.statistic, r.threshold, r.replicas,
                  static_cast<unsigned long long>(r.seed));
    os << buf;
  }
}

}  // namespace webflow
