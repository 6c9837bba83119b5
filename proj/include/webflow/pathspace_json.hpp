#pragma once

// JSON form of path sets:
//   {"window": [T_lo, T_hi, X_lo, X_hi],
//    "paths": [{"splice_t": t, "knots_fwd": [[t,x],...], "knots_bwd": [[t,x],...],
//               "trivial": "none|plus|minus"}, ...]}
// Infinite values are written as the strings "inf" / "-inf". Semipath sets
// use splice_t = t0 and leave the unused knot list empty.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "webflow/pathspace.hpp"

namespace webflow {

using Json = nlohmann::ordered_json;

namespace detail {

inline Json encode_real(double v) {
  if (std::isinf(v)) return v > 0 ? Json("inf") : Json("-inf");
  if (std::isnan(v)) throw std::invalid_argument("json: NaN is not representable");
  return Json(v);
}

inline double decode_real(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw std::invalid_argument("json: bad real literal '" + s + "'");
  }
  if (!j.is_number()) throw std::invalid_argument("json: expected a number");
  return j.get<double>();
}

inline Json encode_knots(std::span<const Knot> knots) {
  Json arr = Json::array();
  for (const Knot& k : knots) arr.push_back(Json::array({encode_real(k.t), encode_real(k.x)}));
  return arr;
}

inline std::vector<Knot> decode_knots(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("json: knots must be an array");
  std::vector<Knot> out;
  out.reserve(j.size());
  for (const auto& k : j) {
    if (!k.is_array() || k.size() != 2) throw std::invalid_argument("json: knot must be [t, x]");
    out.push_back({decode_real(k[0]), decode_real(k[1])});
  }
  return out;
}

inline const char* trivial_name(Trivial t) {
  switch (t) {
    case Trivial::plus_inf: return "plus";
    case Trivial::minus_inf: return "minus";
    default: return "none";
  }
}

inline Trivial trivial_from_name(const std::string& s) {
  if (s == "none") return Trivial::none;
  if (s == "plus") return Trivial::plus_inf;
  if (s == "minus") return Trivial::minus_inf;
  throw std::invalid_argument("json: bad trivial tag '" + s + "'");
}

}  // namespace detail

inline Json window_to_json(const Window& w) {
  return Json::array({detail::encode_real(w.t_lo), detail::encode_real(w.t_hi),
                      detail::encode_real(w.x_lo), detail::encode_real(w.x_hi)});
}

inline Window window_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("json: window must be [T_lo,T_hi,X_lo,X_hi]");
  return {detail::decode_real(j[0]), detail::decode_real(j[1]), detail::decode_real(j[2]),
          detail::decode_real(j[3])};
}

inline Json path_to_json(const FullPath& p) {
  Json o;
  o["splice_t"] = detail::encode_real(p.splice_t());
  o["knots_fwd"] = detail::encode_knots(p.forward().knots());
  o["knots_bwd"] = detail::encode_knots(p.backward().knots());
  o["trivial"] = detail::trivial_name(p.trivial_flag());
  return o;
}

inline Json path_to_json(const ForwardSemipath& p) {
  Json o;
  o["splice_t"] = detail::encode_real(p.t0());
  o["knots_fwd"] = detail::encode_knots(p.knots());
  o["knots_bwd"] = Json::array();
  o["trivial"] = "none";
  return o;
}

inline Json path_to_json(const BackwardSemipath& p) {
  Json o;
  o["splice_t"] = detail::encode_real(p.t0());
  o["knots_fwd"] = Json::array();
  o["knots_bwd"] = detail::encode_knots(p.knots());
  o["trivial"] = "none";
  return o;
}

template <class P>
Json to_json(const PathSet<P>& set) {
  Json doc;
  doc["window"] = window_to_json(set.window);
  Json paths = Json::array();
  for (const auto& p : set.members) paths.push_back(path_to_json(p));
  doc["paths"] = std::move(paths);
  return doc;
}

/// The window's full-plane flag is not stored; it is restored from the
/// presence of trivial paths.
inline PathSet<FullPath> full_paths_from_json(const Json& doc) {
  Window w = window_from_json(doc.at("window"));
  for (const auto& p : doc.at("paths"))
    if (p.value("trivial", std::string("none")) != "none") w.full_plane = true;
  std::vector<FullPath> members;
  for (const auto& p : doc.at("paths")) {
    const double ts = detail::decode_real(p.at("splice_t"));
    const Trivial tr = detail::trivial_from_name(p.value("trivial", std::string("none")));
    if (tr != Trivial::none) {
      members.push_back(FullPath::trivial(tr, w));
      continue;
    }
    members.emplace_back(ForwardSemipath(ts, detail::decode_knots(p.at("knots_fwd")), w),
                         BackwardSemipath(ts, detail::decode_knots(p.at("knots_bwd")), w), ts);
  }
  return PathSet<FullPath>(w, std::move(members));
}

inline PathSet<ForwardSemipath> forward_paths_from_json(const Json& doc) {
  const Window w = window_from_json(doc.at("window"));
  std::vector<ForwardSemipath> members;
  for (const auto& p : doc.at("paths"))
    members.emplace_back(detail::decode_real(p.at("splice_t")), detail::decode_knots(p.at("knots_fwd")), w);
  return PathSet<ForwardSemipath>(w, std::move(members));
}

}  // namespace webflow
