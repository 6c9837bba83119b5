#pragma once

// Reference computations used by the tests. Each one is written
// independently of the library code it checks: different algorithm, and
// std::mt19937_64 instead of the library's counter-based generator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "webflow/pathspace.hpp"

namespace oracle {

/// Piecewise-linear evaluation in long double, constant beyond the ends.
inline long double pl_value(const std::vector<webflow::Knot>& k, long double t) {
  if (t <= k.front().t) return k.front().x;
  if (t >= k.back().t) return k.back().x;
  for (std::size_t i = 1; i < k.size(); ++i) {
    if (t <= k[i].t) {
      const long double a = k[i - 1].t, b = k[i].t;
      return k[i - 1].x + (t - a) / (b - a) * (static_cast<long double>(k[i].x) - k[i - 1].x);
    }
  }
  return k.back().x;
}

inline long double phi_ld(long double x, long double t) {
  const long double th = std::isinf(static_cast<double>(x)) ? (x > 0 ? 1.0L : -1.0L) : std::tanh(x);
  return th / (1.0L + std::fabs(t));
}

/// Dense grid search for sup_t |Phi(a(t), t) - Phi(b(t), t)| over [lo, hi].
inline double dense_sup_distance(const std::vector<webflow::Knot>& a, const std::vector<webflow::Knot>& b,
                                 int samples = 200000) {
  const long double lo = std::min(a.front().t, b.front().t);
  const long double hi = std::max(a.back().t, b.back().t);
  long double best = 0;
  for (int i = 0; i <= samples; ++i) {
    const long double t = lo + (hi - lo) * i / samples;
    const long double xa = pl_value(a, t), xb = pl_value(b, t);
    if (xa == xb) continue;
    best = std::max(best, std::fabs(phi_ld(xa, t) - phi_ld(xb, t)));
  }
  // include t = 0 exactly when it lies inside
  if (lo < 0 && hi > 0) {
    const long double xa = pl_value(a, 0), xb = pl_value(b, 0);
    if (xa != xb) best = std::max(best, std::fabs(phi_ld(xa, 0) - phi_ld(xb, 0)));
  }
  return static_cast<double>(best);
}

/// Hausdorff distance by the textbook double loop.
template <class P, class D>
double brute_hausdorff(const std::vector<P>& A, const std::vector<P>& B, D dist) {
  auto directed = [&](const std::vector<P>& X, const std::vector<P>& Y) {
    double sup = 0;
    for (const auto& x : X) {
      double inf = INFINITY;
      for (const auto& y : Y) inf = std::min(inf, dist(x, y));
      sup = std::max(sup, inf);
    }
    return sup;
  };
  return std::max(directed(A, B), directed(B, A));
}

/// Law of the first meeting time of two lattice walkers started 2k apart,
/// by iterating the transition matrix of their difference (+-2 w.p. 1/4
/// each, 0 w.p. 1/2, absorbed at 0). Entry n is P(T = n), n = 0..max_n.
inline std::vector<double> first_passage_law(int k, int max_n) {
  const int cap = k + max_n + 2;  // half-gap states 0..cap
  std::vector<double> p(cap + 1, 0.0), q(cap + 1, 0.0);
  p[k] = 1.0;
  std::vector<double> law(max_n + 1, 0.0);
  if (k == 0) {
    law[0] = 1.0;
    return law;
  }
  for (int n = 1; n <= max_n; ++n) {
    std::fill(q.begin(), q.end(), 0.0);
    for (int s = 1; s <= cap; ++s) {
      if (p[s] == 0) continue;
      q[s] += 0.5 * p[s];
      q[s - 1] += 0.25 * p[s];
      if (s + 1 <= cap) q[s + 1] += 0.25 * p[s];
    }
    law[n] = q[0];
    q[0] = 0;
    std::swap(p, q);
  }
  return law;
}

/// Exact-in-law Monte Carlo of a Brownian motion with variance rate `var`
/// started at d > 0 and killed at 0: Gaussian increments on a coarse grid
/// plus the Brownian-bridge crossing probability exp(-2 x y / (var dt))
/// between grid points. Returns (survived, final position) pairs.
struct AbsorbedSample {
  bool survived;
  double position;
};

inline std::vector<AbsorbedSample> absorbed_bm(double d, double t, double var, int replicas, int steps,
                                               std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double dt = t / steps;
  const double sd = std::sqrt(var * dt);
  std::vector<AbsorbedSample> out;
  out.reserve(static_cast<std::size_t>(replicas));
  for (int r = 0; r < replicas; ++r) {
    double x = d;
    bool alive = true;
    for (int s = 0; s < steps && alive; ++s) {
      const double y = x + sd * N(gen);
      if (y <= 0) {
        alive = false;
      } else if (U(gen) < std::exp(-2.0 * x * y / (var * dt))) {
        alive = false;
      }
      x = y;
    }
    out.push_back({alive, alive ? x : 0.0});
  }
  return out;
}

/// Composite Simpson rule on [a, b] with n (even) panels.
template <class F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace oracle
