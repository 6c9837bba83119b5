#pragma once

// n-point motions of an isotropic stochastic flow on R with spatial
// covariance kernel B: a diffusion in R^n with generator covariance
// C_ij = B(y_i - y_j). Simulated by Euler-Maruyama with an order projection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "webflow/empirical.hpp"
#include "webflow/parallel.hpp"
#include "webflow/pathspace.hpp"
#include "webflow/pathspace_json.hpp"
#include "webflow/rng.hpp"

namespace webflow {

enum class Kernel { gaussian, cauchy };

inline const char* kernel_name(Kernel k) { return k == Kernel::gaussian ? "gaussian" : "cauchy"; }

inline Kernel kernel_from_name(const std::string& s) {
  if (s == "gaussian") return Kernel::gaussian;
  if (s == "cauchy") return Kernel::cauchy;
  throw std::invalid_argument("unknown kernel '" + s + "'");
}

/// B(x) = b0 exp(-x^2 / (2 sigma^2))  or  b0 / (1 + (x / sigma)^2).
struct CovarianceSpec {
  Kernel kernel = Kernel::gaussian;
  double sigma = 1.0;
  double b0 = 1.0;

  void validate() const {
    if (!(sigma > 0) || !std::isfinite(sigma)) throw std::invalid_argument("covariance: sigma must be positive");
    if (!(b0 > 0) || !std::isfinite(b0)) throw std::invalid_argument("covariance: B(0) must be positive");
  }

  double operator()(double x) const noexcept {
    const double z = x / sigma;
    return kernel == Kernel::gaussian ? b0 * std::exp(-0.5 * z * z) : b0 / (1.0 + z * z);
  }

  /// B(0) - B(x) without cancellation for small x.
  double deficit(double x) const noexcept {
    const double z = x / sigma;
    return kernel == Kernel::gaussian ? -b0 * std::expm1(-0.5 * z * z) : b0 * z * z / (1.0 + z * z);
  }

  friend bool operator==(const CovarianceSpec&, const CovarianceSpec&) = default;
};

inline Eigen::MatrixXd covariance_matrix(const CovarianceSpec& spec, std::span<const double> points) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd C(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(points[static_cast<std::size_t>(i)]))
      throw std::invalid_argument("covariance: non-finite position");
    C(i, i) = spec.b0;
    for (Eigen::Index j = 0; j < i; ++j)
      C(i, j) = C(j, i) = spec(points[static_cast<std::size_t>(i)] - points[static_cast<std::size_t>(j)]);
  }
  return C;
}

/// Eigenvalue floor, relative to B(0).
inline constexpr double kClipRelative = 1e-12;

/// Symmetric square root S (S S^T = C) of a covariance matrix, with
/// eigenvalues clipped from below at floor.
inline Eigen::MatrixXd factor_covariance(const Eigen::MatrixXd& C, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  if (es.info() != Eigen::Success) throw std::runtime_error("covariance factorization failed");
  Eigen::VectorXd root = es.eigenvalues().cwiseMax(floor).cwiseSqrt();
  if (!root.allFinite()) throw std::runtime_error("covariance factorization produced non-finite values");
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

/// Closed form of factor_covariance for two points: C = [[b0, c], [c, b0]]
/// has eigenvectors (1, 1) and (1, -1) with eigenvalues b0 + c and
/// b0 - c; the latter is passed in as `deficit` to avoid cancellation.
struct TwoPointFactor {
  double diag;
  double off;
};

inline TwoPointFactor factor_two_point(double b0, double c, double deficit, double floor) noexcept {
  const double sp = std::sqrt(std::max(b0 + c, floor));
  const double sm = std::sqrt(std::max(deficit, floor));
  return {0.5 * (sp + sm), 0.5 * (sp - sm)};
}

struct FlowState {
  double time = 0.0;
  std::vector<double> points;
};

struct StepCounters {
  std::uint64_t steps = 0;
  std::uint64_t violations = 0;
};

/// One Euler-Maruyama step followed by sorting. Counts a violation when the
/// sort undid an inversion deeper than the noise the eigenvalue floor itself
/// injects (10 standard deviations of it); shallower inversions are ties
/// between numerically coincident points.
inline void step_in_place(FlowState& s, double h, const CovarianceSpec& spec, CounterRng& rng,
                          StepCounters& counters) {
  const double sh = std::sqrt(h);
  const double floor = kClipRelative * spec.b0;
  const double tie = 10.0 * sh * std::sqrt(2.0 * floor);
  auto& y = s.points;
  const std::size_t n = y.size();
  if (n == 1) {
    y[0] += sh * std::sqrt(spec.b0) * rng.normal();
  } else if (n == 2) {
    const double gap = y[1] - y[0];
    const TwoPointFactor f = factor_two_point(spec.b0, spec(gap), spec.deficit(gap), floor);
    const double z0 = rng.normal();
    const double z1 = rng.normal();
    y[0] += sh * (f.diag * z0 + f.off * z1);
    y[1] += sh * (f.off * z0 + f.diag * z1);
  } else if (n > 2) {
    const Eigen::MatrixXd S = factor_covariance(covariance_matrix(spec, y), floor);
    Eigen::VectorXd z(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    const Eigen::VectorXd dy = sh * (S * z);
    for (std::size_t i = 0; i < n; ++i) y[i] += dy(static_cast<Eigen::Index>(i));
  }
  ++counters.steps;
  bool deep = false;
  for (std::size_t i = 1; i < n; ++i) deep |= y[i - 1] - y[i] > tie;
  if (!std::is_sorted(y.begin(), y.end())) std::sort(y.begin(), y.end());
  if (deep) ++counters.violations;
  s.time += h;
}

inline FlowState step(FlowState s, double h, const CovarianceSpec& spec, CounterRng& rng) {
  if (!(h > 0)) throw std::invalid_argument("step: h must be positive");
  StepCounters c;
  step_in_place(s, h, spec, rng, c);
  return s;
}

struct FlowConfig {
  CovarianceSpec spec;
  double h = 0.0;
  std::uint64_t seed = 0;
  double delta = 1.0;
};

/// Positions indexed (replica, point, time) in row-major order.
struct FlowTrajectorySet {
  std::vector<double> times;
  std::size_t replicas = 0;
  std::size_t points = 0;
  std::vector<double> positions;
  FlowConfig config;
  StepCounters counters;

  double at(std::size_t r, std::size_t i, std::size_t k) const {
    return positions[(r * points + i) * times.size() + k];
  }
  double& at(std::size_t r, std::size_t i, std::size_t k) {
    return positions[(r * points + i) * times.size() + k];
  }
  double violation_rate() const noexcept {
    return counters.steps ? static_cast<double>(counters.violations) / static_cast<double>(counters.steps) : 0.0;
  }
};

namespace detail {

inline void check_initial(std::span<const double> initial) {
  if (initial.empty()) throw std::invalid_argument("flow: need at least one point");
  for (std::size_t i = 0; i < initial.size(); ++i) {
    if (!std::isfinite(initial[i])) throw std::invalid_argument("flow: non-finite initial point");
    if (i > 0 && !(initial[i] > initial[i - 1])) throw std::invalid_argument("flow: initial points must increase");
  }
}

/// Number of steps of a uniform grid on [0, T] with step close to h.
inline std::uint64_t step_count(double T, double h) {
  if (!(T > 0) || !(h > 0) || h > T * (1 + 1e-12)) throw std::invalid_argument("flow: need 0 < h <= T");
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(T / h - 1e-9)));
}

inline constexpr std::uint64_t kPilotStream = 0x5049'4C4F'5400'0000ULL;

}  // namespace detail

struct AutoStepOptions {
  double threshold = 1e-3;
  std::size_t pilot_replicas = 256;
  int max_halvings = 16;
};

/// Default step 1e-3 T, halved until the order-violation rate of a pilot
/// run (its own substreams) is at most the threshold.
inline double choose_step(const CovarianceSpec& spec, std::span<const double> initial, double T,
                          std::uint64_t seed, const AutoStepOptions& opt = {}) {
  detail::check_initial(initial);
  double h = 1e-3 * T;
  if (initial.size() < 2) return h;
  for (int k = 0; k <= opt.max_halvings; ++k) {
    const std::uint64_t n = detail::step_count(T, h);
    const double hh = T / static_cast<double>(n);
    StepCounters c;
    for (std::size_t r = 0; r < opt.pilot_replicas; ++r) {
      CounterRng rng(seed ^ detail::kPilotStream, r);
      FlowState s{0.0, std::vector<double>(initial.begin(), initial.end())};
      for (std::uint64_t j = 0; j < n; ++j) step_in_place(s, hh, spec, rng, c);
    }
    if (static_cast<double>(c.violations) <= opt.threshold * static_cast<double>(c.steps)) return h;
    h *= 0.5;
  }
  return h;
}

/// Runs `replicas` independent n-point motions on [0, T]. h <= 0 selects the
/// step automatically. Every `stride`-th grid time (and the last) is stored.
inline FlowTrajectorySet simulate(const CovarianceSpec& spec, std::span<const double> initial, double T, double h,
                                  std::uint64_t seed, std::size_t replicas, unsigned threads = 1,
                                  std::size_t stride = 1) {
  spec.validate();
  detail::check_initial(initial);
  if (replicas == 0) throw std::invalid_argument("simulate: replicas must be positive");
  if (stride == 0) throw std::invalid_argument("simulate: stride must be positive");
  if (!(h > 0)) h = choose_step(spec, initial, T, seed);
  const std::uint64_t n = detail::step_count(T, h);
  const double hh = T / static_cast<double>(n);

  FlowTrajectorySet out;
  std::vector<std::uint64_t> keep;
  for (std::uint64_t j = 0; j <= n; j += stride) keep.push_back(j);
  if (keep.back() != n) keep.push_back(n);
  for (auto j : keep) out.times.push_back(j == n ? T : static_cast<double>(j) * hh);
  out.replicas = replicas;
  out.points = initial.size();
  out.positions.assign(replicas * out.points * out.times.size(), 0.0);
  out.config = {spec, hh, seed, 1.0};

  std::vector<StepCounters> counters(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    CounterRng rng(seed, r);
    FlowState s{0.0, std::vector<double>(initial.begin(), initial.end())};
    std::size_t next = 0;
    for (std::uint64_t j = 0;; ++j) {
      if (keep[next] == j) {
        for (std::size_t i = 0; i < out.points; ++i) out.at(r, i, next) = s.points[i];
        if (++next == keep.size()) break;
      }
      step_in_place(s, hh, spec, rng, counters[r]);
    }
  });
  for (const auto& c : counters) {
    out.counters.steps += c.steps;
    out.counters.violations += c.violations;
  }
  return out;
}

/// Diffusive rescaling x -> delta x, t -> delta^2 t of an unrescaled run.
inline FlowTrajectorySet rescale_flow(FlowTrajectorySet traj, double delta) {
  if (!(delta > 0)) throw std::invalid_argument("rescale_flow: delta must be positive");
  if (traj.config.delta != 1.0) throw std::invalid_argument("rescale_flow: trajectories are already rescaled");
  for (double& t : traj.times) t *= delta * delta;
  for (double& x : traj.positions) x *= delta;
  traj.config.delta = delta;
  return traj;
}

struct GapOptions {
  /// Rescaled gaps below this are counted as coalesced; <= 0 means delta.
  double coalescence_threshold = 0.0;
  unsigned threads = 1;
};

struct GapDiagnostics {
  double h = 0.0;
  StepCounters counters;
  double coalescence_threshold = 0.0;
};

/// Law of the rescaled gap |xi(x2) - xi(x1)| at rescaled time t. Only final
/// positions are kept.
inline EmpiricalDistribution two_point_gap_sample(const CovarianceSpec& spec, double x1, double x2, double t,
                                                  double delta, double h, std::uint64_t seed, std::size_t replicas,
                                                  const GapOptions& opt = {}, GapDiagnostics* diag = nullptr) {
  spec.validate();
  if (!(delta > 0) || !(t > 0)) throw std::invalid_argument("gap sample: need delta > 0 and t > 0");
  if (replicas == 0) throw std::invalid_argument("gap sample: replicas must be positive");
  if (x2 < x1) throw std::invalid_argument("gap sample: need x1 <= x2");
  const double thr = opt.coalescence_threshold > 0 ? opt.coalescence_threshold : delta;
  if (diag) diag->coalescence_threshold = thr;
  if (x1 == x2) return EmpiricalDistribution({}, replicas);

  const double T = t / (delta * delta);
  const double y0[2] = {x1 / delta, x2 / delta};
  if (!(h > 0)) h = choose_step(spec, y0, T, seed);
  const std::uint64_t n = detail::step_count(T, h);
  const double hh = T / static_cast<double>(n);

  std::vector<double> gaps(replicas);
  std::vector<StepCounters> counters(replicas);
  parallel_for(replicas, opt.threads, [&](std::size_t r) {
    CounterRng rng(seed, r);
    FlowState s{0.0, {y0[0], y0[1]}};
    for (std::uint64_t j = 0; j < n; ++j) step_in_place(s, hh, spec, rng, counters[r]);
    gaps[r] = delta * (s.points[1] - s.points[0]);
  });
  std::vector<double> kept;
  std::size_t atom = 0;
  for (double g : gaps) {
    if (g < thr) {
      ++atom;
    } else {
      kept.push_back(g);
    }
  }
  if (diag) {
    diag->h = hh;
    diag->counters = {};
    for (const auto& c : counters) {
      diag->counters.steps += c.steps;
      diag->counters.violations += c.violations;
    }
  }
  return EmpiricalDistribution(std::move(kept), atom);
}

/// CSV with header replica,point_index,time,position.
inline void write_csv(const FlowTrajectorySet& traj, std::ostream& os) {
  os << "replica,point_index,time,position\n";
  char buf[96];
  for (std::size_t r = 0; r < traj.replicas; ++r)
    for (std::size_t i = 0; i < traj.points; ++i)
      for (std::size_t k = 0; k < traj.times.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g\n", r, i, traj.times[k], traj.at(r, i, k));
        os << buf;
      }
}

/// Every (replica, point) trajectory as a forward semipath from the first
/// stored time.
inline PathSet<ForwardSemipath> to_path_set(const FlowTrajectorySet& traj) {
  if (traj.times.size() < 1 || traj.positions.empty()) throw std::invalid_argument("to_path_set: empty trajectories");
  const auto [mn, mx] = std::minmax_element(traj.positions.begin(), traj.positions.end());
  const Window w{traj.times.front(), traj.times.back(), *mn, *mx};
  std::vector<ForwardSemipath> paths;
  for (std::size_t r = 0; r < traj.replicas; ++r)
    for (std::size_t i = 0; i < traj.points; ++i) {
      std::vector<Knot> knots;
      for (std::size_t k = 0; k < traj.times.size(); ++k) knots.push_back({traj.times[k], traj.at(r, i, k)});
      paths.emplace_back(traj.times.front(), std::move(knots), w);
    }
  return PathSet<ForwardSemipath>(w, std::move(paths));
}

}  // namespace webflow
