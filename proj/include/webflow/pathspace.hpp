#pragma once

// Compactified space-time geometry and the path / path-set metrics.
//
// Points of the extended plane map to the square [-1,1]^2 via
//   (x, t) -> (tanh(x) / (1 + |t|), tanh(t)),
// and every distance in this header is a sup-distance in those coordinates.
// Paths are piecewise linear in (t, x) between knots and are only
// represented on a finite time window; suprema are taken over that window.

#include <algorithm>
#include <cmath>
#include <compare>
#include <concepts>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace webflow {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct SpaceTimePoint {
  double x = 0.0;
  double t = 0.0;
  friend bool operator==(const SpaceTimePoint&, const SpaceTimePoint&) = default;
};

struct CompactCoords {
  double u = 0.0;  ///< tanh(x) / (1 + |t|)
  double v = 0.0;  ///< tanh(t)
};

/// Spatial compactified coordinate. tanh(+-inf) = +-1 and 1/(1+inf) = 0 fall
/// out of IEEE arithmetic, so no special cases are needed.
inline double phi(double x, double t) noexcept {
  return std::tanh(x) / (1.0 + std::abs(t));
}

inline CompactCoords compactify(SpaceTimePoint p) noexcept {
  return {phi(p.x, p.t), std::tanh(p.t)};
}

/// Metric on the compactified plane.
inline double rho(SpaceTimePoint a, SpaceTimePoint b) noexcept {
  const CompactCoords ca = compactify(a);
  const CompactCoords cb = compactify(b);
  return std::max(std::abs(ca.u - cb.u), std::abs(ca.v - cb.v));
}

/// Finite window on which paths are represented.
struct Window {
  double t_lo = 0.0;
  double t_hi = 0.0;
  double x_lo = 0.0;
  double x_hi = 0.0;
  /// Set when the window stands in for the whole extended plane; only then do
  /// full webs carry the two trivial paths.
  bool full_plane = false;

  friend bool operator==(const Window&, const Window&) = default;
};

/// Largest possible contribution of times outside the window to any path
/// distance: |Phi| <= 1 / (1 + |t|), so two paths differ by at most twice that.
inline double truncation_bound(const Window& w) noexcept {
  const double edge = std::min(std::abs(w.t_lo), std::abs(w.t_hi));
  return 2.0 / (1.0 + edge);
}

struct Knot {
  double t = 0.0;
  double x = 0.0;
  friend bool operator==(const Knot&, const Knot&) = default;
  friend auto operator<=>(const Knot&, const Knot&) = default;
};

namespace detail {

inline void validate_knots(std::span<const Knot> knots, const char* what) {
  if (knots.empty()) throw std::invalid_argument(std::string(what) + ": no knots");
  const bool infinite = std::isinf(knots.front().x);
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (std::isnan(knots[i].t) || std::isnan(knots[i].x))
      throw std::invalid_argument(std::string(what) + ": NaN knot");
    if (i > 0 && !(knots[i].t > knots[i - 1].t))
      throw std::invalid_argument(std::string(what) +
                                  ": knot times must be strictly increasing");
    // Only the constant +-inf paths may take infinite values.
    if (std::isinf(knots[i].x) != infinite ||
        (infinite && knots[i].x != knots.front().x))
      throw std::invalid_argument(std::string(what) +
                                  ": mixed finite and infinite knot values");
  }
}

/// Piecewise-linear interpolation, constant beyond the end knots.
inline double interpolate(std::span<const Knot> knots, double t) noexcept {
  if (t <= knots.front().t) return knots.front().x;
  if (t >= knots.back().t) return knots.back().x;
  const auto it = std::upper_bound(
      knots.begin(), knots.end(), t,
      [](double v, const Knot& k) { return v < k.t; });
  const Knot& b = *it;
  const Knot& a = *(it - 1);
  if (a.x == b.x) return a.x;
  const double w = (t - a.t) / (b.t - a.t);
  return a.x + w * (b.x - a.x);
}

/// Walks a knot list with monotonically increasing query times.
class KnotCursor {
 public:
  explicit KnotCursor(std::span<const Knot> knots) noexcept : knots_(knots) {}

  double at(double t) noexcept {
    if (t <= knots_.front().t) return knots_.front().x;
    if (t >= knots_.back().t) return knots_.back().x;
    while (knots_[i_ + 1].t < t) ++i_;
    const Knot& a = knots_[i_];
    const Knot& b = knots_[i_ + 1];
    if (t == b.t) return b.x;
    if (a.x == b.x || t == a.t) return a.x;
    const double w = (t - a.t) / (b.t - a.t);
    return a.x + w * (b.x - a.x);
  }

 private:
  std::span<const Knot> knots_;
  std::size_t i_ = 0;
};

}  // namespace detail

enum class TimeDirection { forward, backward };

/// Semipath living on one side of its start time t0. A forward semipath is
/// defined for t >= t0, a backward one for t <= t0; outside the knot range the
/// value is held constant (which for forward semipaths also realises the
/// f(t v t0) convention of the semipath metric).
template <TimeDirection Dir>
class Semipath {
 public:
  static constexpr TimeDirection direction = Dir;

  Semipath(double t0, std::vector<Knot> knots, Window window)
      : t0_(t0), knots_(std::move(knots)), window_(window) {
    detail::validate_knots(knots_, "semipath");
    if constexpr (Dir == TimeDirection::forward) {
      if (knots_.front().t != std::max(t0_, window_.t_lo))
        throw std::invalid_argument("forward semipath: first knot must sit at the start time");
    } else {
      if (knots_.back().t != std::min(t0_, window_.t_hi))
        throw std::invalid_argument("backward semipath: last knot must sit at the start time");
    }
  }

  double t0() const noexcept { return t0_; }
  std::span<const Knot> knots() const noexcept { return knots_; }
  const Window& window() const noexcept { return window_; }

  double value(double t) const noexcept { return detail::interpolate(knots_, t); }
  double start_value() const noexcept {
    return Dir == TimeDirection::forward ? knots_.front().x : knots_.back().x;
  }
  SpaceTimePoint anchor() const noexcept { return {start_value(), t0_}; }

  friend bool operator==(const Semipath&, const Semipath&) = default;

 private:
  double t0_;
  std::vector<Knot> knots_;
  Window window_;
};

using ForwardSemipath = Semipath<TimeDirection::forward>;
using BackwardSemipath = Semipath<TimeDirection::backward>;

enum class Trivial { none, plus_inf, minus_inf };

/// Bi-infinite path: a backward semipath up to the splice time followed by a
/// forward semipath from it.
class FullPath {
 public:
  FullPath(ForwardSemipath forward, BackwardSemipath backward, double splice_t,
           Trivial trivial = Trivial::none)
      : forward_(std::move(forward)),
        backward_(std::move(backward)),
        splice_t_(splice_t),
        trivial_(trivial) {
    if (forward_.t0() != splice_t_ || backward_.t0() != splice_t_)
      throw std::invalid_argument("full path: semipath start times differ from the splice time");
    if (!(forward_.window() == backward_.window()))
      throw std::invalid_argument("full path: semipaths carry different windows");
    if (forward_.value(splice_t_) != backward_.value(splice_t_))
      throw std::invalid_argument("full path: semipaths disagree at the splice time");
    if (trivial_ != Trivial::none) {
      const double v = trivial_ == Trivial::plus_inf ? kInf : -kInf;
      for (auto k : forward_.knots())
        if (k.x != v) throw std::invalid_argument("trivial path must be identically infinite");
      for (auto k : backward_.knots())
        if (k.x != v) throw std::invalid_argument("trivial path must be identically infinite");
    }
    merged_.assign(backward_.knots().begin(), backward_.knots().end());
    auto fk = forward_.knots();
    auto first = fk.begin();
    if (!merged_.empty() && first != fk.end() && first->t <= merged_.back().t) ++first;
    merged_.insert(merged_.end(), first, fk.end());
  }

  /// One of the identically +inf / -inf paths. Every time is a splice time for
  /// these; the window start is used.
  static FullPath trivial(Trivial which, const Window& w) {
    if (which == Trivial::none) throw std::invalid_argument("trivial(): need plus_inf or minus_inf");
    const double v = which == Trivial::plus_inf ? kInf : -kInf;
    ForwardSemipath f(w.t_lo, {{w.t_lo, v}, {w.t_hi, v}}, w);
    BackwardSemipath b(w.t_lo, {{w.t_lo, v}}, w);
    return FullPath(std::move(f), std::move(b), w.t_lo, which);
  }

  const ForwardSemipath& forward() const noexcept { return forward_; }
  const BackwardSemipath& backward() const noexcept { return backward_; }
  double splice_t() const noexcept { return splice_t_; }
  Trivial trivial_flag() const noexcept { return trivial_; }
  const Window& window() const noexcept { return forward_.window(); }

  /// Knots of the whole path, backward part first, splice knot once.
  std::span<const Knot> knots() const noexcept { return merged_; }

  double value(double t) const noexcept {
    return t <= splice_t_ ? backward_.value(t) : forward_.value(t);
  }
  SpaceTimePoint anchor() const noexcept { return {value(splice_t_), splice_t_}; }

  friend bool operator==(const FullPath& a, const FullPath& b) {
    return a.splice_t_ == b.splice_t_ && a.trivial_ == b.trivial_ && a.merged_ == b.merged_;
  }

 private:
  ForwardSemipath forward_;
  BackwardSemipath backward_;
  double splice_t_;
  Trivial trivial_;
  std::vector<Knot> merged_;
};

/// Anything with sorted knots and an anchor point.
template <class P>
concept KnotPath = requires(const P& p) {
  { p.knots() } -> std::convertible_to<std::span<const Knot>>;
  { p.window() } -> std::convertible_to<const Window&>;
  { p.anchor() } -> std::convertible_to<SpaceTimePoint>;
};

inline double eval_path(const FullPath& p, double t) noexcept { return p.value(t); }

struct MetricOptions {
  /// Each interval of the union knot grid is subdivided into this many parts.
  int refinement = 4;
};

namespace detail {

/// sup over the union knot grid (refined, plus t = 0) of |Phi(a(t),t) - Phi(b(t),t)|
/// on [lo, hi]. Returns early with a value > abort_above once that is exceeded.
inline double sup_phi_distance(std::span<const Knot> a, std::span<const Knot> b,
                               int refinement, double abort_above = kInf) {
  const double lo = std::min(a.front().t, b.front().t);
  const double hi = std::max(a.back().t, b.back().t);
  KnotCursor ca(a), cb(b);
  double best = 0.0;
  auto eval = [&](double t) {
    const double xa = ca.at(t);
    const double xb = cb.at(t);
    if (xa == xb) return false;
    const double d = std::abs(phi(xa, t) - phi(xb, t));
    if (d > best) best = d;
    return best > abort_above;
  };
  std::size_t ia = 0, ib = 0;
  double prev = lo;
  if (eval(lo)) return best;
  const bool zero_inside = lo < 0.0 && 0.0 < hi;
  bool zero_done = !zero_inside;
  while (true) {
    while (ia < a.size() && a[ia].t <= prev) ++ia;
    while (ib < b.size() && b[ib].t <= prev) ++ib;
    double next = hi;
    if (ia < a.size()) next = std::min(next, a[ia].t);
    if (ib < b.size()) next = std::min(next, b[ib].t);
    if (!zero_done && next >= 0.0) {
      next = 0.0;
      zero_done = true;
    }
    if (!(next > prev)) break;
    for (int j = 1; j < refinement; ++j) {
      if (eval(prev + (next - prev) * j / refinement)) return best;
    }
    if (eval(next)) return best;
    prev = next;
    if (prev >= hi) break;
  }
  return best;
}

}  // namespace detail

/// Path distance. For semipaths the start-time term |tanh t0 - tanh t0'| is
/// included; full paths have none.
template <KnotPath P>
double path_distance(const P& a, const P& b, const MetricOptions& opts = {},
                     double abort_above = kInf) {
  if (!(a.window() == b.window())) throw std::invalid_argument("path distance: window mismatch");
  if (opts.refinement < 1) throw std::invalid_argument("path distance: refinement must be >= 1");
  double start_term = 0.0;
  if constexpr (!std::is_same_v<P, FullPath>) {
    start_term = std::abs(std::tanh(a.t0()) - std::tanh(b.t0()));
    if (start_term > abort_above) return start_term;
  }
  return std::max(start_term,
                  detail::sup_phi_distance(a.knots(), b.knots(), opts.refinement, abort_above));
}

inline double dF(const FullPath& a, const FullPath& b, const MetricOptions& opts = {}) {
  return path_distance(a, b, opts);
}

/// Finite set of homogeneous paths sharing one window.
template <class P>
struct PathSet {
  Window window;
  std::vector<P> members;

  PathSet() = default;
  PathSet(Window w, std::vector<P> m) : window(w), members(std::move(m)) {
    for (const auto& p : members)
      if (!(p.window() == window)) throw std::invalid_argument("path set: member window mismatch");
  }
  std::size_t size() const noexcept { return members.size(); }
  bool empty() const noexcept { return members.empty(); }
};

/// sup_{a in A} inf_{b in B} d(a, b). Exact; candidates in B are visited in
/// order of anchor proximity so that the early-break rule fires quickly.
template <KnotPath P>
double directed_hausdorff(const std::vector<P>& A, const std::vector<P>& B,
                          const MetricOptions& opts = {}) {
  if (A.empty() || B.empty()) throw std::invalid_argument("hausdorff: empty path set");
  auto key_less = [](SpaceTimePoint p, SpaceTimePoint q) {
    return p.t < q.t || (p.t == q.t && p.x < q.x);
  };
  std::vector<std::size_t> order(B.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<SpaceTimePoint> anchors(B.size());
  for (std::size_t i = 0; i < B.size(); ++i) anchors[i] = B[i].anchor();
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return key_less(anchors[i], anchors[j]); });
  std::vector<SpaceTimePoint> sorted(B.size());
  for (std::size_t i = 0; i < B.size(); ++i) sorted[i] = anchors[order[i]];

  double result = 0.0;
  for (const P& a : A) {
    const auto pos = static_cast<std::ptrdiff_t>(
        std::lower_bound(sorted.begin(), sorted.end(), a.anchor(), key_less) - sorted.begin());
    const auto n = static_cast<std::ptrdiff_t>(B.size());
    double best = kInf;
    std::ptrdiff_t left = pos - 1, right = pos;
    bool take_right = true;
    while (left >= 0 || right < n) {
      std::ptrdiff_t idx;
      if (right < n && (take_right || left < 0)) {
        idx = right++;
      } else {
        idx = left--;
      }
      take_right = !take_right;
      const double d = path_distance(a, B[order[static_cast<std::size_t>(idx)]], opts, best);
      if (d < best) best = d;
      if (best <= result) break;  // cannot raise the running maximum
    }
    result = std::max(result, best);
  }
  return result;
}

/// Hausdorff distance between two finite path sets.
template <KnotPath P>
double hausdorff(const PathSet<P>& A, const PathSet<P>& B, const MetricOptions& opts = {}) {
  if (A.empty() || B.empty()) throw std::invalid_argument("hausdorff: empty path set");
  if (!(A.window == B.window)) throw std::invalid_argument("hausdorff: window mismatch");
  return std::max(directed_hausdorff(A.members, B.members, opts),
                  directed_hausdorff(B.members, A.members, opts));
}

/// Strict crossing test on the common time domain: true iff a - b takes both
/// strictly positive and strictly negative values. Touching never counts.
/// Exact for piecewise-linear paths because the sign can only change at knots.
inline bool crossing_detect(std::span<const Knot> a, std::span<const Knot> b) {
  const double lo = std::max(a.front().t, b.front().t);
  const double hi = std::min(a.back().t, b.back().t);
  if (lo > hi) throw std::invalid_argument("crossing_detect: disjoint time domains");
  detail::KnotCursor ca(a), cb(b);
  bool above = false, below = false;
  auto probe = [&](double t) {
    const double xa = ca.at(t), xb = cb.at(t);
    if (xa > xb) above = true;
    if (xa < xb) below = true;
    return above && below;
  };
  if (probe(lo)) return true;
  std::size_t ia = 0, ib = 0;
  double prev = lo;
  while (prev < hi) {
    while (ia < a.size() && a[ia].t <= prev) ++ia;
    while (ib < b.size() && b[ib].t <= prev) ++ib;
    double next = hi;
    if (ia < a.size()) next = std::min(next, a[ia].t);
    if (ib < b.size()) next = std::min(next, b[ib].t);
    if (probe(next)) return true;
    prev = next;
  }
  return false;
}

template <KnotPath P, KnotPath Q>
bool crossing_detect(const P& a, const Q& b) {
  return crossing_detect(a.knots(), b.knots());
}

/// Joins g (up to t_star) and f (from t_star). The two must meet exactly.
inline FullPath splice(const ForwardSemipath& f, const BackwardSemipath& g, double t_star) {
  if (f.t0() != t_star || g.t0() != t_star)
    throw std::invalid_argument("splice: semipaths do not start at the splice time");
  if (f.value(t_star) != g.value(t_star))
    throw std::invalid_argument("splice: semipaths disagree at the splice time");
  return FullPath(f, g, t_star);
}

}  // namespace webflow
