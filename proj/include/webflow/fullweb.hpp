#pragma once

// Discrete full webs built from a double web sample.
//
// Skeleton construction: for every seed site p, join the dual path leaving p
// through the odd site directly below it with the forward path from p.
// Splice construction: at every mesh site p, join each admissible backward
// candidate with each forward candidate. On the lattice a site has one
// outgoing arrow and up to two incoming ones; the backward candidates are the
// dual paths squeezed between consecutive incoming arrows, so a site with k
// incoming arrows has k + 1 of them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "webflow/discreteweb.hpp"
#include "webflow/parallel.hpp"
#include "webflow/pathspace.hpp"
#include "webflow/pathspace_json.hpp"

namespace webflow {

/// Numbers of incoming and outgoing path germs at a point.
struct PointType {
  int m_in = 0;
  int m_out = 1;

  PointType() = default;
  PointType(int in, int out) : m_in(in), m_out(out) {
    if (!valid(in, out))
      throw std::invalid_argument("point type (" + std::to_string(in) + "," + std::to_string(out) +
                                  ") is not a double-web type");
  }

  static bool valid(int in, int out) noexcept {
    return (in == 0 && (out == 1 || out == 2 || out == 3)) || (in == 1 && (out == 1 || out == 2)) ||
           (in == 2 && out == 1);
  }

  friend bool operator==(const PointType&, const PointType&) = default;
};

inline std::size_t splice_count(PointType t) {
  if (!PointType::valid(t.m_in, t.m_out)) throw std::invalid_argument("splice_count: invalid point type");
  if (t.m_in == 1 && t.m_out == 2) return 3;
  return static_cast<std::size_t>((t.m_in + 1) * t.m_out);
}

/// Continuations of a path arriving at a point of type t. A path not passing
/// through has a single forward continuation; one that passes through may
/// choose any outgoing path or any backward continuation.
inline std::size_t continuation_count(PointType t, bool passing_through) {
  if (!PointType::valid(t.m_in, t.m_out))
    throw std::invalid_argument("continuation_count: invalid point type");
  if (passing_through) return static_cast<std::size_t>(2 * t.m_out - 1);
  if (t.m_out == 1 || (t.m_in == 1 && t.m_out == 2)) return 1;
  throw std::invalid_argument("continuation_count: this type has no unique forward continuation");
}

/// Candidates at one splice point. `incoming` holds the incoming forward
/// strands (as backward semipaths ending at the point) and `continuation[i]`
/// the index of the forward candidate that strand i follows.
struct SpliceConfig {
  SpaceTimePoint point;
  PointType ptype;
  std::vector<ForwardSemipath> forward_candidates;
  std::vector<BackwardSemipath> backward_candidates;
  std::vector<BackwardSemipath> incoming;
  std::vector<std::size_t> continuation;
};

namespace detail {

inline void validate_config(const SpliceConfig& cfg) {
  const auto& t = cfg.ptype;
  if (!PointType::valid(t.m_in, t.m_out)) throw std::invalid_argument("splice config: invalid point type");
  if (cfg.forward_candidates.size() != static_cast<std::size_t>(t.m_out) ||
      cfg.backward_candidates.size() != static_cast<std::size_t>(t.m_in + 1))
    throw std::invalid_argument("splice config: candidate counts do not match the point type");
  if (t.m_in == 1 && t.m_out == 2 && (cfg.incoming.size() != 1 || cfg.continuation.size() != 1))
    throw std::invalid_argument("splice config: type (1,2) needs its incoming strand and continuation");
  if (cfg.continuation.size() != cfg.incoming.size())
    throw std::invalid_argument("splice config: one continuation per incoming strand");
  for (std::size_t c : cfg.continuation)
    if (c >= cfg.forward_candidates.size())
      throw std::invalid_argument("splice config: continuation index out of range");
  for (const auto& f : cfg.forward_candidates)
    if (f.t0() != cfg.point.t || f.start_value() != cfg.point.x)
      throw std::invalid_argument("splice config: forward candidate does not start at the point");
  for (const auto& b : cfg.backward_candidates)
    if (b.t0() != cfg.point.t || b.start_value() != cfg.point.x)
      throw std::invalid_argument("splice config: backward candidate does not end at the point");
  for (std::size_t i = 0; i < cfg.forward_candidates.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.forward_candidates.size(); ++j)
      if (crossing_detect(cfg.forward_candidates[i], cfg.forward_candidates[j]))
        throw std::invalid_argument("splice config: forward candidates cross");
  for (std::size_t i = 0; i < cfg.backward_candidates.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.backward_candidates.size(); ++j)
      if (crossing_detect(cfg.backward_candidates[i], cfg.backward_candidates[j]))
        throw std::invalid_argument("splice config: backward candidates cross");
}

}  // namespace detail

/// For type (1,2): the (forward, backward) index pair whose splice crosses
/// the path passing straight through the point. nullopt for other types.
inline std::optional<std::pair<std::size_t, std::size_t>> find_excluded_pair(const SpliceConfig& cfg) {
  detail::validate_config(cfg);
  if (!(cfg.ptype.m_in == 1 && cfg.ptype.m_out == 2)) return std::nullopt;
  const FullPath passing =
      splice(cfg.forward_candidates[cfg.continuation[0]], cfg.incoming[0], cfg.point.t);
  std::optional<std::pair<std::size_t, std::size_t>> found;
  for (std::size_t i = 0; i < cfg.forward_candidates.size(); ++i)
    for (std::size_t j = 0; j < cfg.backward_candidates.size(); ++j) {
      const FullPath p = splice(cfg.forward_candidates[i], cfg.backward_candidates[j], cfg.point.t);
      if (crossing_detect(p, passing)) {
        if (found) throw std::invalid_argument("splice config: more than one splice crosses the passing path");
        found = std::make_pair(i, j);
      }
    }
  if (!found) throw std::invalid_argument("splice config: no splice crosses the passing path");
  return found;
}

/// Every admissible splice at the configured point, ordered by (forward,
/// backward) index.
inline std::vector<FullPath> enumerate_splices(const SpliceConfig& cfg) {
  const auto excluded = find_excluded_pair(cfg);
  std::vector<FullPath> out;
  for (std::size_t i = 0; i < cfg.forward_candidates.size(); ++i)
    for (std::size_t j = 0; j < cfg.backward_candidates.size(); ++j) {
      if (excluded && excluded->first == i && excluded->second == j) continue;
      out.push_back(splice(cfg.forward_candidates[i], cfg.backward_candidates[j], cfg.point.t));
    }
  return out;
}

enum class Construction { skeleton, splice_enum };

inline const char* construction_name(Construction c) {
  return c == Construction::skeleton ? "skeleton" : "splice_enum";
}

struct SplicePoint {
  double x = 0.0;
  double t = 0.0;
  PointType ptype;
};

struct FullWebSample {
  PathSet<FullPath> paths;
  Construction construction;
  /// Spacing of the seed grid (D or mesh) in rescaled units.
  double grid_pitch;
  double delta;
  /// Seed points as given, for the skeleton construction.
  std::vector<SpaceTimePoint> D_points;
  std::vector<SplicePoint> splice_points;
  /// Field of the generating double web sample.
  ArrowField source;
};

namespace detail {

/// Lattice site nearest to a rescaled point with x + t even; ties go to the
/// smaller coordinate.
inline Site snap_to_even_site(SpaceTimePoint q, double delta) {
  if (!std::isfinite(q.x) || !std::isfinite(q.t)) throw std::invalid_argument("snap: non-finite point");
  const double tl = q.t / (delta * delta);
  const auto t = static_cast<std::int64_t>(std::ceil(tl - 0.5));
  const std::int64_t parity = t & 1;
  const double u = (q.x / delta - static_cast<double>(parity)) / 2.0;
  const auto x = 2 * static_cast<std::int64_t>(std::ceil(u - 0.5)) + parity;
  return {x, t};
}

/// Knots (increasing time) of the dual path from odd site (x, t); a single
/// knot when the site is outside the window.
inline std::vector<Knot> dual_knots(const ArrowField& field, std::int64_t x, std::int64_t t, double delta) {
  if (!field.window().contains(x, t)) return {{lattice_time(t, delta), lattice_space(x, delta)}};
  return rescaled_knots(backward_path(field, {x, t}), delta);
}

/// Backward semipath ending at even site p whose last step arrives from odd
/// site (via_x, p.t - 1).
inline BackwardSemipath backward_via(const ArrowField& field, Site p, std::int64_t via_x, double delta,
                                     const Window& w) {
  std::vector<Knot> knots;
  if (p.t > field.window().t_lo) knots = dual_knots(field, via_x, p.t - 1, delta);
  knots.push_back({lattice_time(p.t, delta), lattice_space(p.x, delta)});
  return BackwardSemipath(lattice_time(p.t, delta), std::move(knots), w);
}

inline ForwardSemipath forward_from(const ArrowField& field, Site p, double delta, const Window& w) {
  return to_forward_semipath(forward_path(field, p), delta, w);
}

inline Window full_window(const ArrowField& field, double delta, bool full_plane) {
  Window w = rescaled_window(field.window(), delta);
  w.full_plane = full_plane;
  return w;
}

inline bool full_path_less(const FullPath& a, const FullPath& b) {
  if (a.splice_t() != b.splice_t()) return a.splice_t() < b.splice_t();
  if (a.trivial_flag() != b.trivial_flag()) return a.trivial_flag() < b.trivial_flag();
  return std::lexicographical_compare(a.knots().begin(), a.knots().end(), b.knots().begin(), b.knots().end());
}

inline void sort_unique(std::vector<FullPath>& v) {
  std::sort(v.begin(), v.end(), full_path_less);
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

inline std::vector<Site> snap_all(const ArrowField& field, const std::vector<SpaceTimePoint>& pts, double delta,
                                  const char* what) {
  if (!(delta > 0)) throw std::invalid_argument(std::string(what) + ": delta must be positive");
  std::vector<Site> sites;
  sites.reserve(pts.size());
  for (const auto& q : pts) {
    const Site s = snap_to_even_site(q, delta);
    if (!field.window().contains(s)) throw std::invalid_argument(std::string(what) + ": point outside window");
    sites.push_back(s);
  }
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  return sites;
}

inline void add_trivial(std::vector<FullPath>& paths, const Window& w) {
  if (!w.full_plane) return;
  paths.push_back(FullPath::trivial(Trivial::plus_inf, w));
  paths.push_back(FullPath::trivial(Trivial::minus_inf, w));
}

}  // namespace detail

/// Candidates read off the lattice at even site p.
inline SpliceConfig splice_config_at(const ArrowField& field, Site p, double delta, const Window& w) {
  if (!is_even_site(p) || !field.window().contains(p))
    throw std::invalid_argument("splice_config_at: need an even site inside the window");
  const bool has_below = p.t > field.window().t_lo;
  const bool from_left = has_below && field.arrow(p.x - 1, p.t - 1) == 1;
  const bool from_right = has_below && field.arrow(p.x + 1, p.t - 1) == -1;
  const double tp = lattice_time(p.t, delta);
  const double xp = lattice_space(p.x, delta);

  SpliceConfig cfg;
  cfg.point = {xp, tp};
  cfg.ptype = PointType((from_left ? 1 : 0) + (from_right ? 1 : 0), 1);
  cfg.forward_candidates.push_back(detail::forward_from(field, p, delta, w));
  auto strand = [&](std::int64_t from_x) {
    return BackwardSemipath(tp, {{lattice_time(p.t - 1, delta), lattice_space(from_x, delta)}, {tp, xp}}, w);
  };
  if (from_left) {
    cfg.backward_candidates.push_back(detail::backward_via(field, p, p.x - 2, delta, w));
    cfg.incoming.push_back(strand(p.x - 1));
    cfg.continuation.push_back(0);
  }
  cfg.backward_candidates.push_back(detail::backward_via(field, p, p.x, delta, w));
  if (from_right) {
    cfg.backward_candidates.push_back(detail::backward_via(field, p, p.x + 2, delta, w));
    cfg.incoming.push_back(strand(p.x + 1));
    cfg.continuation.push_back(0);
  }
  return cfg;
}

/// Skeleton full web: one path per distinct snapped seed site.
inline FullWebSample build_skeleton(const DoubleWebSample& dw, const std::vector<SpaceTimePoint>& D, double delta,
                                    double grid_pitch = 0.0, bool full_plane = false) {
  if (D.empty()) throw std::invalid_argument("build_skeleton: empty seed set");
  const ArrowField& field = dw.field;
  const Window w = detail::full_window(field, delta, full_plane);
  const auto sites = detail::snap_all(field, D, delta, "build_skeleton");
  FullWebSample fw{{}, Construction::skeleton, grid_pitch > 0 ? grid_pitch : delta, delta, D, {}, field};
  std::vector<FullPath> paths;
  paths.reserve(sites.size() + 2);
  for (const Site& p : sites) {
    const double tp = lattice_time(p.t, delta);
    paths.emplace_back(detail::forward_from(field, p, delta, w), detail::backward_via(field, p, p.x, delta, w), tp);
    const bool has_below = p.t > field.window().t_lo;
    const int k = has_below ? (field.arrow(p.x - 1, p.t - 1) == 1) + (field.arrow(p.x + 1, p.t - 1) == -1) : 0;
    fw.splice_points.push_back({lattice_space(p.x, delta), tp, PointType(k, 1)});
  }
  detail::add_trivial(paths, w);
  detail::sort_unique(paths);
  fw.paths = PathSet<FullPath>(w, std::move(paths));
  return fw;
}

/// Splice-enumeration full web: all admissible splices at every distinct
/// snapped mesh site.
inline FullWebSample build_splice_enumeration(const DoubleWebSample& dw, const std::vector<SpaceTimePoint>& mesh,
                                              double delta, double grid_pitch = 0.0, bool full_plane = false,
                                              unsigned threads = 1) {
  if (mesh.empty()) throw std::invalid_argument("build_splice_enumeration: empty mesh");
  const ArrowField& field = dw.field;
  const Window w = detail::full_window(field, delta, full_plane);
  const auto sites = detail::snap_all(field, mesh, delta, "build_splice_enumeration");
  std::vector<std::vector<FullPath>> per_site(sites.size());
  std::vector<PointType> types(sites.size());
  parallel_for(sites.size(), threads, [&](std::size_t i) {
    const SpliceConfig cfg = splice_config_at(field, sites[i], delta, w);
    types[i] = cfg.ptype;
    per_site[i] = enumerate_splices(cfg);
  });
  FullWebSample fw{{}, Construction::splice_enum, grid_pitch > 0 ? grid_pitch : delta, delta, {}, {}, field};
  std::vector<FullPath> paths;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    fw.splice_points.push_back({lattice_space(sites[i].x, delta), lattice_time(sites[i].t, delta), types[i]});
    for (auto& p : per_site[i]) paths.push_back(std::move(p));
  }
  detail::add_trivial(paths, w);
  detail::sort_unique(paths);
  fw.paths = PathSet<FullPath>(w, std::move(paths));
  return fw;
}

/// Hausdorff distance between the skeleton web on D and the splice web on
/// the mesh, for the same double web.
inline double verify_construction_equivalence(const DoubleWebSample& dw, const std::vector<SpaceTimePoint>& D,
                                              const std::vector<SpaceTimePoint>& mesh, double delta,
                                              const MetricOptions& opts = {}) {
  const auto a = build_skeleton(dw, D, delta);
  const auto b = build_splice_enumeration(dw, mesh, delta);
  return hausdorff(a.paths, b.paths, opts);
}

/// Forward parts of every path of the web cut at each of the given times.
inline PathSet<ForwardSemipath> forward_full(const FullWebSample& fw, const std::vector<double>& cut_times) {
  const Window& w = fw.paths.window;
  for (double t : cut_times)
    if (!(t >= w.t_lo && t <= w.t_hi)) throw std::invalid_argument("forward_full: cut time outside window");
  std::vector<ForwardSemipath> out;
  for (const FullPath& g : fw.paths.members) {
    const auto knots = g.knots();
    for (double t : cut_times) {
      std::vector<Knot> k{{t, g.value(t)}};
      auto it = std::upper_bound(knots.begin(), knots.end(), t, [](double v, const Knot& q) { return v < q.t; });
      k.insert(k.end(), it, knots.end());
      out.emplace_back(t, std::move(k), w);
    }
  }
  auto less = [](const ForwardSemipath& a, const ForwardSemipath& b) {
    if (a.t0() != b.t0()) return a.t0() < b.t0();
    return std::lexicographical_compare(a.knots().begin(), a.knots().end(), b.knots().begin(), b.knots().end());
  };
  std::sort(out.begin(), out.end(), less);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return PathSet<ForwardSemipath>(w, std::move(out));
}

/// Forward web launched from the seed points, as rescaled semipaths.
inline PathSet<ForwardSemipath> forward_web_from(const ArrowField& field, const std::vector<SpaceTimePoint>& D,
                                                 double delta) {
  const Window w = detail::full_window(field, delta, false);
  std::vector<ForwardSemipath> out;
  for (const Site& p : detail::snap_all(field, D, delta, "forward_web_from"))
    out.push_back(detail::forward_from(field, p, delta, w));
  return PathSet<ForwardSemipath>(w, std::move(out));
}

/// Pairs of members that cross strictly. Members truncated at the window
/// sides may have disjoint time domains; such pairs cannot cross.
inline std::size_t count_crossings(const PathSet<FullPath>& set) {
  std::size_t n = 0;
  const auto& m = set.members;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      const auto& a = m[i].knots();
      const auto& b = m[j].knots();
      if (std::max(a.front().t, b.front().t) > std::min(a.back().t, b.back().t)) continue;
      if (crossing_detect(m[i], m[j])) ++n;
    }
  return n;
}

/// Estimates the type of the lattice point nearest p at observation scale
/// eps (lattice units). Outgoing paths are counted by their positions eps^2
/// steps later, positions within 2 lattice units counting once; incoming
/// strands are the forward paths launched 2 eps^2 steps earlier that reach the sites next to p, grouped by
/// the site they occupy one step before, with groups whose median positions
/// eps^2 steps earlier lie within 2 lattice units of each other merged.
inline PointType classify_point(const ArrowField& field, SpaceTimePoint p, double eps = 8.0) {
  if (!(eps > 0)) throw std::invalid_argument("classify_point: eps must be positive");
  const auto x = static_cast<std::int64_t>(std::ceil(p.x - 0.5));
  const auto t = static_cast<std::int64_t>(std::ceil(p.t - 0.5));
  const std::int64_t h = std::max<std::int64_t>(1, std::llround(eps * eps));
  const LatticeWindow& lw = field.window();
  const std::int64_t reach = 2 * h + 3;
  if (t - 2 * h < lw.t_lo || t + h > lw.t_hi || x - reach < lw.x_lo || x + reach > lw.x_hi)
    throw std::invalid_argument("classify_point: neighbourhood outside window");

  std::vector<std::int64_t> near;
  if (((x + t) & 1) == 0) {
    near.push_back(x);
  } else {
    near.push_back(x - 1);
    near.push_back(x + 1);
  }

  std::set<std::int64_t> out_positions;
  for (std::int64_t y : near) {
    for (std::int64_t s = t; s < t + h; ++s) y += field.arrow(y, s);
    out_positions.insert(y);
  }
  int m_out = 0;
  std::int64_t last = 0;
  for (std::int64_t y : out_positions) {
    if (m_out == 0 || y - last > 2) ++m_out;
    last = y;
  }

  // group key: position at t - 1 -> positions at t - h of its members
  std::map<std::int64_t, std::vector<std::int64_t>> groups;
  const std::int64_t t0 = t - 2 * h;
  std::int64_t lo = x - 2 * h - 1;
  if (((lo + t0) & 1) != 0) ++lo;
  for (std::int64_t y0 = lo; y0 <= x + 2 * h + 1; y0 += 2) {
    std::int64_t y = y0, early = y0, before = y0;
    for (std::int64_t s = t0; s < t; ++s) {
      if (s == t - h) early = y;
      if (s == t - 1) before = y;
      y += field.arrow(y, s);
    }
    if (std::find(near.begin(), near.end(), y) != near.end()) groups[before].push_back(early);
  }
  std::vector<double> medians;
  for (auto& [key, v] : groups) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    medians.push_back(n % 2 ? static_cast<double>(v[n / 2]) : 0.5 * static_cast<double>(v[n / 2 - 1] + v[n / 2]));
  }
  int m_in = medians.empty() ? 0 : 1;
  for (std::size_t i = 1; i < medians.size(); ++i)
    if (medians[i] - medians[i - 1] > 2.0) ++m_in;
  if (m_out >= 2) {
    m_in = std::min(m_in, 1);
  } else {
    m_in = std::min(m_in, 2);
  }
  return PointType(m_in, m_out);
}

inline PointType classify_point(const DoubleWebSample& dw, SpaceTimePoint p, double eps = 8.0) {
  return classify_point(dw.field, p, eps);
}

/// `count` uniformly drawn sites of the forward lattice whose classification
/// neighbourhood at scale eps fits inside the window.
inline std::vector<Site> classifiable_sites(const LatticeWindow& w, double eps, std::size_t count, CounterRng& rng) {
  const std::int64_t h = std::max<std::int64_t>(1, std::llround(eps * eps));
  const LatticeWindow inner{w.x_lo + 2 * h + 4, w.x_hi - 2 * h - 4, w.t_lo + 2 * h, w.t_hi - h};
  if (inner.empty() || inner.width() < 2) throw std::invalid_argument("classifiable_sites: window too small for eps");
  return random_sites(inner, count, true, rng);
}

/// Even sites (rescaled) of a lattice box.
inline std::vector<SpaceTimePoint> box_mesh(const LatticeWindow& box, double delta) {
  std::vector<SpaceTimePoint> pts;
  for (std::int64_t t = box.t_lo; t <= box.t_hi; ++t)
    for (std::int64_t x = box.x_lo; x <= box.x_hi; ++x)
      if (((x + t) & 1) == 0) pts.push_back({lattice_space(x, delta), lattice_time(t, delta)});
  return pts;
}

/// Even sites (rescaled) with t_lo <= t <= t_hi and |x| <= half_width + (t_hi - t).
/// The region contains the lattice past of each of its sites, so splices
/// built from it stay inside it.
inline std::vector<SpaceTimePoint> light_cone_mesh(std::int64_t half_width, std::int64_t t_lo, std::int64_t t_hi,
                                                   double delta) {
  std::vector<SpaceTimePoint> pts;
  for (std::int64_t t = t_lo; t <= t_hi; ++t) {
    const std::int64_t r = half_width + (t_hi - t);
    for (std::int64_t x = -r; x <= r; ++x)
      if (((x + t) & 1) == 0) pts.push_back({lattice_space(x, delta), lattice_time(t, delta)});
  }
  return pts;
}

/// Path JSON plus the construction record.
inline Json to_json(const FullWebSample& fw) {
  Json doc = to_json(fw.paths);
  doc["construction"] = construction_name(fw.construction);
  doc["grid_pitch"] = fw.grid_pitch;
  Json sp = Json::array();
  for (const auto& s : fw.splice_points) sp.push_back(Json::array({s.x, s.t, s.ptype.m_in, s.ptype.m_out}));
  doc["splice_points"] = std::move(sp);
  return doc;
}

}  // namespace webflow
