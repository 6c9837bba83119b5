#pragma once

// Discrete double web on Z^2.
//
// Forward walkers live on the even sublattice (x + t even) and follow one
// i.i.d. fair arrow per site. The dual walkers live on the odd sublattice and
// step down in time; the dual step out of (x, t) is the negation of the
// forward arrow at (x, t - 1), which is the unique choice that does not cut
// through that arrow. Forward paths coalesce, dual paths coalesce, and the
// two families never cross.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "webflow/pathspace.hpp"
#include "webflow/rng.hpp"

namespace webflow {

struct Site {
  std::int64_t x = 0;
  std::int64_t t = 0;
  friend bool operator==(const Site&, const Site&) = default;
  friend auto operator<=>(const Site&, const Site&) = default;
};

constexpr bool is_even_site(Site s) noexcept { return ((s.x + s.t) & 1) == 0; }

/// Inclusive integer box [x_lo, x_hi] x [t_lo, t_hi].
struct LatticeWindow {
  std::int64_t x_lo = 0;
  std::int64_t x_hi = -1;
  std::int64_t t_lo = 0;
  std::int64_t t_hi = -1;

  bool empty() const noexcept { return x_hi < x_lo || t_hi < t_lo; }
  bool contains(std::int64_t x, std::int64_t t) const noexcept {
    return x >= x_lo && x <= x_hi && t >= t_lo && t <= t_hi;
  }
  bool contains(Site s) const noexcept { return contains(s.x, s.t); }
  std::int64_t width() const noexcept { return empty() ? 0 : x_hi - x_lo + 1; }
  std::int64_t height() const noexcept { return empty() ? 0 : t_hi - t_lo + 1; }

  /// A width x height box with x centred on 0 and t starting at 0.
  static LatticeWindow centered(std::int64_t width, std::int64_t height) noexcept {
    return {-(width / 2), width - width / 2 - 1, 0, height - 1};
  }

  friend bool operator==(const LatticeWindow&, const LatticeWindow&) = default;
};

inline double lattice_time(std::int64_t t, double delta) noexcept {
  return static_cast<double>(t) * (delta * delta);
}
inline double lattice_space(std::int64_t x, double delta) noexcept {
  return static_cast<double>(x) * delta;
}

/// The window in diffusively rescaled coordinates.
inline Window rescaled_window(const LatticeWindow& w, double delta) noexcept {
  return {lattice_time(w.t_lo, delta), lattice_time(w.t_hi, delta),
          lattice_space(w.x_lo, delta), lattice_space(w.x_hi, delta)};
}

/// Arrow configuration. The arrow at (x, t) is a pure function of
/// (seed, x, t), so the field is never stored and any site can be queried.
class ArrowField {
 public:
  using Rule = std::function<int(std::int64_t x, std::int64_t t)>;

  ArrowField(LatticeWindow window, std::uint64_t seed) : window_(window), seed_(seed) {
    if (window_.empty()) throw std::invalid_argument("arrow field: empty window");
  }

  /// Field given by an explicit rule instead of the seed (test fixtures).
  static ArrowField deterministic(LatticeWindow window, Rule rule) {
    ArrowField f(window, 0);
    f.rule_ = std::make_shared<const Rule>(std::move(rule));
    return f;
  }

  const LatticeWindow& window() const noexcept { return window_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool is_deterministic() const noexcept { return rule_ != nullptr; }

  /// +1 or -1. Defined at every even site of Z^2; the window only bounds
  /// path tracing.
  int arrow(std::int64_t x, std::int64_t t) const {
    if (rule_) return (*rule_)(x, t) > 0 ? 1 : -1;
    return (site_hash(seed_, x, t) >> 63) ? 1 : -1;
  }

  int arrow_checked(Site s) const {
    if (!window_.contains(s)) throw std::out_of_range("arrow: site outside window");
    if (!is_even_site(s)) throw std::invalid_argument("arrow: odd site carries no forward arrow");
    return arrow(s.x, s.t);
  }

  friend bool operator==(const ArrowField& a, const ArrowField& b) {
    return a.window_ == b.window_ && a.seed_ == b.seed_ && a.rule_ == b.rule_;
  }

 private:
  LatticeWindow window_;
  std::uint64_t seed_;
  std::shared_ptr<const Rule> rule_;
};

inline ArrowField sample_arrow_field(LatticeWindow window, std::uint64_t seed) {
  return ArrowField(window, seed);
}

/// Dual arrows on the odd sublattice, derived from the forward field.
class DualField {
 public:
  explicit DualField(ArrowField field) : field_(std::move(field)) {}

  /// Step (+1 / -1) taken by the dual walker leaving odd site (x, t) towards
  /// row t - 1. Requires t > t_lo.
  int step(std::int64_t x, std::int64_t t) const { return -field_.arrow(x, t - 1); }

  int step_checked(Site s) const {
    if (is_even_site(s)) throw std::invalid_argument("dual step: even site");
    if (!field_.window().contains(s) || s.t <= field_.window().t_lo)
      throw std::out_of_range("dual step: site has no row below it in the window");
    return step(s.x, s.t);
  }

  const ArrowField& field() const noexcept { return field_; }

 private:
  ArrowField field_;
};

inline DualField dual_arrows(const ArrowField& field) { return DualField(field); }

enum class WalkDirection { forward, backward };

/// Nearest-neighbour lattice walk. positions()[k] is the position at time
/// start.t + k (forward) or start.t - k (backward).
class LatticePath {
 public:
  LatticePath(Site start, WalkDirection dir) : start_(start), dir_(dir) {
    positions_.push_back(start.x);
  }
  LatticePath(Site start, WalkDirection dir, std::vector<std::int64_t> positions,
              bool truncated = false)
      : start_(start), dir_(dir), positions_(std::move(positions)), truncated_(truncated) {
    if (positions_.empty() || positions_.front() != start.x)
      throw std::invalid_argument("lattice path: first position must be the start");
    for (std::size_t k = 1; k < positions_.size(); ++k)
      if (std::abs(positions_[k] - positions_[k - 1]) != 1)
        throw std::invalid_argument("lattice path: steps must be +-1");
  }

  static LatticePath from_steps(Site start, WalkDirection dir, const std::vector<int>& steps) {
    std::vector<std::int64_t> pos{start.x};
    for (int s : steps) pos.push_back(pos.back() + s);
    return LatticePath(start, dir, std::move(pos));
  }

  Site start() const noexcept { return start_; }
  WalkDirection direction() const noexcept { return dir_; }
  bool truncated() const noexcept { return truncated_; }
  void mark_truncated() noexcept { truncated_ = true; }
  std::size_t length() const noexcept { return positions_.size() - 1; }
  const std::vector<std::int64_t>& positions() const noexcept { return positions_; }
  void push(std::int64_t x) { positions_.push_back(x); }

  std::vector<int> steps() const {
    std::vector<int> s;
    s.reserve(length());
    for (std::size_t k = 1; k < positions_.size(); ++k)
      s.push_back(static_cast<int>(positions_[k] - positions_[k - 1]));
    return s;
  }

  std::int64_t time_at(std::size_t k) const noexcept {
    return dir_ == WalkDirection::forward ? start_.t + static_cast<std::int64_t>(k)
                                          : start_.t - static_cast<std::int64_t>(k);
  }
  std::int64_t first_time() const noexcept { return std::min(start_.t, time_at(length())); }
  std::int64_t last_time() const noexcept { return std::max(start_.t, time_at(length())); }

  std::optional<std::int64_t> at_time(std::int64_t t) const noexcept {
    const std::int64_t k = dir_ == WalkDirection::forward ? t - start_.t : start_.t - t;
    if (k < 0 || k > static_cast<std::int64_t>(length())) return std::nullopt;
    return positions_[static_cast<std::size_t>(k)];
  }
  Site end() const noexcept { return {positions_.back(), time_at(length())}; }

  friend bool operator==(const LatticePath&, const LatticePath&) = default;

 private:
  Site start_;
  WalkDirection dir_;
  std::vector<std::int64_t> positions_;
  bool truncated_ = false;
};

namespace detail {

inline void require_site(const ArrowField& field, Site s, bool even, const char* what) {
  if (!field.window().contains(s)) throw std::out_of_range(std::string(what) + ": start outside window");
  if (is_even_site(s) != even)
    throw std::invalid_argument(std::string(what) + (even ? ": start must be an even site"
                                                          : ": start must be an odd site"));
}

}  // namespace detail

/// Forward path from an even site up to the top of the window. A path that
/// would leave the window sideways stops there and is flagged as truncated.
inline LatticePath forward_path(const ArrowField& field, Site start) {
  detail::require_site(field, start, true, "forward_path");
  const LatticeWindow& w = field.window();
  LatticePath path(start, WalkDirection::forward);
  std::int64_t x = start.x;
  for (std::int64_t t = start.t; t < w.t_hi; ++t) {
    const std::int64_t nx = x + field.arrow(x, t);
    if (nx < w.x_lo || nx > w.x_hi) {
      path.mark_truncated();
      break;
    }
    x = nx;
    path.push(x);
  }
  return path;
}

/// Dual path from an odd site down to the bottom of the window.
inline LatticePath backward_path(const ArrowField& field, Site start) {
  detail::require_site(field, start, false, "backward_path");
  const LatticeWindow& w = field.window();
  LatticePath path(start, WalkDirection::backward);
  std::int64_t x = start.x;
  for (std::int64_t t = start.t; t > w.t_lo; --t) {
    const std::int64_t nx = x - field.arrow(x, t - 1);
    if (nx < w.x_lo || nx > w.x_hi) {
      path.mark_truncated();
      break;
    }
    x = nx;
    path.push(x);
  }
  return path;
}

/// Strict crossing between two lattice paths on their common time range.
/// Positions are compared at integer times only; between integer times both
/// paths are linear, so this is exact.
inline bool crossing_detect(const LatticePath& a, const LatticePath& b) {
  const std::int64_t lo = std::max(a.first_time(), b.first_time());
  const std::int64_t hi = std::min(a.last_time(), b.last_time());
  if (lo > hi) throw std::invalid_argument("crossing_detect: disjoint time domains");
  bool above = false, below = false;
  for (std::int64_t t = lo; t <= hi; ++t) {
    const std::int64_t d = *a.at_time(t) - *b.at_time(t);
    above |= d > 0;
    below |= d < 0;
    if (above && below) return true;
  }
  return false;
}

/// First time at which the forward paths from (x1, t0) and (x2, t0) meet, or
/// nullopt if they reach the top of the window (or its side) first.
inline std::optional<std::int64_t> coalesce_time(const ArrowField& field, std::int64_t x1,
                                                 std::int64_t x2, std::int64_t t0) {
  detail::require_site(field, {x1, t0}, true, "coalesce_time");
  detail::require_site(field, {x2, t0}, true, "coalesce_time");
  const LatticeWindow& w = field.window();
  for (std::int64_t t = t0;; ++t) {
    if (x1 == x2) return t;
    if (t >= w.t_hi) return std::nullopt;
    x1 += field.arrow(x1, t);
    x2 += field.arrow(x2, t);
    if (x1 < w.x_lo || x1 > w.x_hi || x2 < w.x_lo || x2 > w.x_hi) return std::nullopt;
  }
}

/// A field together with traced forward and dual paths.
struct DoubleWebSample {
  ArrowField field;
  std::vector<LatticePath> forward_paths;
  std::vector<LatticePath> dual_paths;
};

inline DoubleWebSample sample_double_web(const ArrowField& field, const std::vector<Site>& forward_starts,
                                         const std::vector<Site>& dual_starts) {
  DoubleWebSample dw{field, {}, {}};
  dw.forward_paths.reserve(forward_starts.size());
  for (Site s : forward_starts) dw.forward_paths.push_back(forward_path(field, s));
  dw.dual_paths.reserve(dual_starts.size());
  for (Site s : dual_starts) dw.dual_paths.push_back(backward_path(field, s));
  return dw;
}

/// `count` sites of the requested parity drawn uniformly from the window.
inline std::vector<Site> random_sites(const LatticeWindow& w, std::size_t count, bool even,
                                      CounterRng& rng) {
  std::vector<Site> out;
  out.reserve(count);
  const auto width = static_cast<std::uint64_t>(w.width());
  const auto height = static_cast<std::uint64_t>(w.height());
  while (out.size() < count) {
    Site s{w.x_lo + static_cast<std::int64_t>(rng() % width),
           w.t_lo + static_cast<std::int64_t>(rng() % height)};
    if (is_even_site(s) == even) out.push_back(s);
  }
  return out;
}

struct CrossingReport {
  std::size_t pairs_checked = 0;
  std::size_t crossings = 0;
};

/// Full pairwise scan of a double web sample: forward/forward, dual/dual and
/// forward/dual pairs with overlapping time ranges.
inline CrossingReport scan_crossings(const DoubleWebSample& dw) {
  CrossingReport r;
  auto check = [&r](const LatticePath& a, const LatticePath& b) {
    if (std::max(a.first_time(), b.first_time()) > std::min(a.last_time(), b.last_time())) return;
    ++r.pairs_checked;
    if (crossing_detect(a, b)) ++r.crossings;
  };
  const auto& F = dw.forward_paths;
  const auto& B = dw.dual_paths;
  for (std::size_t i = 0; i < F.size(); ++i)
    for (std::size_t j = i + 1; j < F.size(); ++j) check(F[i], F[j]);
  for (std::size_t i = 0; i < B.size(); ++i)
    for (std::size_t j = i + 1; j < B.size(); ++j) check(B[i], B[j]);
  for (const auto& f : F)
    for (const auto& b : B) check(f, b);
  return r;
}

namespace detail {

constexpr std::uint64_t pack_site(std::int64_t x, std::int64_t t) noexcept {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) |
         static_cast<std::uint32_t>(t);
}

}  // namespace detail

/// Coalescing/reflecting dual walk. The walk proposes its own noise steps;
/// a step that would cut through a forward obstacle segment is replaced by
/// the opposite step, and once the walk lands on a prior backward path it
/// follows that path from then on.
inline LatticePath cr_reflect(const LatticePath& noise, const std::vector<LatticePath>& obstacles,
                              const std::vector<LatticePath>& prior) {
  if (noise.direction() != WalkDirection::backward)
    throw std::invalid_argument("cr_reflect: noise must be a backward walk");
  if (is_even_site(noise.start())) throw std::invalid_argument("cr_reflect: noise must start at an odd site");

  // Obstacle segments keyed by their lower end: (e, t-1) -> position at t.
  std::unordered_map<std::uint64_t, std::int64_t> segments;
  for (const auto& ob : obstacles) {
    if (ob.direction() != WalkDirection::forward)
      throw std::invalid_argument("cr_reflect: obstacles must be forward paths");
    if (!is_even_site(ob.start())) throw std::invalid_argument("cr_reflect: obstacle on odd site");
    const auto& pos = ob.positions();
    for (std::size_t k = 0; k + 1 < pos.size(); ++k) {
      const auto key = detail::pack_site(pos[k], ob.time_at(k));
      auto [it, inserted] = segments.emplace(key, pos[k + 1]);
      if (!inserted && it->second != pos[k + 1])
        throw std::invalid_argument("cr_reflect: obstacles disagree at a shared site");
    }
  }
  std::unordered_map<std::uint64_t, std::pair<std::size_t, std::size_t>> prior_index;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (prior[i].direction() != WalkDirection::backward || is_even_site(prior[i].start()))
      throw std::invalid_argument("cr_reflect: prior paths must be backward walks on odd sites");
    const auto& pos = prior[i].positions();
    for (std::size_t k = 0; k < pos.size(); ++k)
      prior_index.emplace(detail::pack_site(pos[k], prior[i].time_at(k)), std::make_pair(i, k));
  }

  auto crosses = [&](std::int64_t from, std::int64_t to, std::int64_t t) {
    for (std::int64_t e = from - 2; e <= from + 2; ++e) {
      auto it = segments.find(detail::pack_site(e, t - 1));
      if (it == segments.end()) continue;
      const std::int64_t top = it->second;
      const std::int64_t s_top = from - top;  // sign at time t
      const std::int64_t s_bot = to - e;      // sign at time t-1
      if ((s_top > 0 && s_bot < 0) || (s_top < 0 && s_bot > 0)) return true;
    }
    return false;
  };

  const std::vector<int> steps = noise.steps();
  LatticePath out(noise.start(), WalkDirection::backward);
  std::int64_t x = noise.start().x;
  std::int64_t t = noise.start().t;
  for (std::size_t k = 0;; ++k) {
    if (auto hit = prior_index.find(detail::pack_site(x, t)); hit != prior_index.end()) {
      const auto& pp = prior[hit->second.first].positions();
      for (std::size_t j = hit->second.second + 1; j < pp.size(); ++j) out.push(pp[j]);
      return out;
    }
    if (k == steps.size()) return out;
    std::int64_t next = x + steps[k];
    if (crosses(x, next, t)) {
      next = x - steps[k];
      // Unreachable with parity-separated lattices: only the forward arrow
      // directly below can be cut, and it cannot block both steps.
      if (crosses(x, next, t)) throw std::logic_error("cr_reflect: both steps blocked");
    }
    x = next;
    --t;
    out.push(x);
  }
}

/// Rebuilds the dual path from `target` out of forward paths alone: at each
/// earlier row, the sites whose forward path ends weakly right of the target
/// (D+) and weakly left of it (D-) are computed, and the path is their
/// interface.
inline LatticePath reconstruct_dual_via_envelope(const ArrowField& field, Site target) {
  detail::require_site(field, target, false, "reconstruct_dual_via_envelope");
  const LatticeWindow& w = field.window();
  if (target.t <= w.t_lo) throw std::invalid_argument("reconstruct_dual_via_envelope: target has no history");
  const std::int64_t reach = 2 * (target.t - w.t_lo) + 2;
  if (target.x - reach < w.x_lo || target.x + reach > w.x_hi)
    throw std::invalid_argument("reconstruct_dual_via_envelope: history leaves the window");

  std::vector<std::int64_t> positions{target.x};
  for (std::int64_t r = target.t - 1; r >= w.t_lo; --r) {
    const std::int64_t span = target.t - r + 1;
    std::int64_t lo = target.x - span;
    if (((lo + r) & 1) != 0) --lo;
    std::optional<std::int64_t> max_minus, min_plus;
    for (std::int64_t x = lo; x <= target.x + span; x += 2) {
      std::int64_t y = x;
      for (std::int64_t t = r; t < target.t; ++t) y += field.arrow(y, t);
      if (y <= target.x) {
        if (min_plus && x > *min_plus) throw std::logic_error("envelope: D- and D+ interleave");
        max_minus = x;
      }
      if (y >= target.x && !min_plus) min_plus = x;
    }
    if (!max_minus || !min_plus || *min_plus != *max_minus + 2)
      throw std::logic_error("envelope: D- and D+ do not meet at a single gap");
    positions.push_back(*max_minus + 1);
  }
  return LatticePath(target, WalkDirection::backward, std::move(positions));
}

/// Knots of a lattice path after x -> delta x, t -> delta^2 t, in increasing time.
inline std::vector<Knot> rescaled_knots(const LatticePath& path, double delta) {
  std::vector<Knot> knots;
  knots.reserve(path.length() + 1);
  const auto& pos = path.positions();
  if (path.direction() == WalkDirection::forward) {
    for (std::size_t k = 0; k < pos.size(); ++k)
      knots.push_back({lattice_time(path.time_at(k), delta), lattice_space(pos[k], delta)});
  } else {
    for (std::size_t k = pos.size(); k-- > 0;)
      knots.push_back({lattice_time(path.time_at(k), delta), lattice_space(pos[k], delta)});
  }
  return knots;
}

inline ForwardSemipath to_forward_semipath(const LatticePath& path, double delta, const Window& window) {
  if (path.direction() != WalkDirection::forward) throw std::invalid_argument("to_forward_semipath: backward path");
  if (!(delta > 0)) throw std::invalid_argument("rescale: delta must be positive");
  return ForwardSemipath(lattice_time(path.start().t, delta), rescaled_knots(path, delta), window);
}

inline BackwardSemipath to_backward_semipath(const LatticePath& path, double delta, const Window& window) {
  if (path.direction() != WalkDirection::backward) throw std::invalid_argument("to_backward_semipath: forward path");
  if (!(delta > 0)) throw std::invalid_argument("rescale: delta must be positive");
  return BackwardSemipath(lattice_time(path.start().t, delta), rescaled_knots(path, delta), window);
}

using RescaledPath = std::variant<ForwardSemipath, BackwardSemipath>;

/// Diffusive rescaling of a lattice path. Without an explicit window the
/// path's own time extent is used.
inline RescaledPath rescale(const LatticePath& path, double delta,
                            std::optional<Window> window = std::nullopt) {
  if (!(delta > 0)) throw std::invalid_argument("rescale: delta must be positive");
  Window w;
  if (window) {
    w = *window;
  } else {
    w.t_lo = lattice_time(path.first_time(), delta);
    w.t_hi = lattice_time(path.last_time(), delta);
    const auto [mn, mx] = std::minmax_element(path.positions().begin(), path.positions().end());
    w.x_lo = lattice_space(*mn, delta);
    w.x_hi = lattice_space(*mx, delta);
  }
  if (path.direction() == WalkDirection::forward) return to_forward_semipath(path, delta, w);
  return to_backward_semipath(path, delta, w);
}

}  // namespace webflow
