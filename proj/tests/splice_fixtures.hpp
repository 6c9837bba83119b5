#pragma once

#include <utility>
#include <vector>

#include "webflow/fullweb.hpp"

namespace fixture {

inline const webflow::Window kSpliceWindow{-1.0, 1.0, -5.0, 5.0};

inline webflow::ForwardSemipath fwd_line(double slope) {
  return webflow::ForwardSemipath(0.0, {{0.0, 0.0}, {1.0, slope}}, kSpliceWindow);
}

/// Backward semipath ending at the origin with value v at t = -1.
inline webflow::BackwardSemipath bwd_line(double v) {
  return webflow::BackwardSemipath(0.0, {{-1.0, v}, {0.0, 0.0}}, kSpliceWindow);
}

inline std::vector<double> spread(int n) {
  if (n == 1) return {0.0};
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(-1.0 + 2.0 * i / (n - 1));
  return v;
}

/// Synthetic configuration of the given type at the origin. Incoming strands
/// sit between consecutive backward candidates; for type (1,2) the incoming
/// strand continues along the upper forward candidate.
inline webflow::SpliceConfig synthetic(int in, int out) {
  webflow::SpliceConfig cfg;
  cfg.point = {0.0, 0.0};
  cfg.ptype = webflow::PointType(in, out);
  for (double s : spread(out)) cfg.forward_candidates.push_back(fwd_line(s));
  const auto b = spread(in + 1);
  for (double v : b) cfg.backward_candidates.push_back(bwd_line(v));
  for (int k = 0; k < in; ++k) {
    cfg.incoming.push_back(bwd_line(0.5 * (b[k] + b[k + 1])));
    cfg.continuation.push_back(static_cast<std::size_t>(out - 1));
  }
  return cfg;
}

inline const std::vector<std::pair<int, int>> kTypes{{0, 1}, {1, 1}, {0, 2}, {1, 2}, {2, 1}, {0, 3}};

}  // namespace fixture
