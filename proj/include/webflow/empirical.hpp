#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace webflow {

/// Sample of a law on [0, inf) that may carry an atom at zero. The atom is
/// kept as a count; `samples` holds everything else, sorted.
class EmpiricalDistribution {
 public:
  EmpiricalDistribution() = default;
  EmpiricalDistribution(std::vector<double> samples, std::size_t atom_at_zero)
      : samples_(std::move(samples)), atom_(atom_at_zero) {
    std::sort(samples_.begin(), samples_.end());
  }

  const std::vector<double>& samples() const noexcept { return samples_; }
  std::size_t atom_at_zero() const noexcept { return atom_; }
  std::size_t replica_count() const noexcept { return samples_.size() + atom_; }
  bool empty() const noexcept { return replica_count() == 0; }

  /// Fraction of the sample <= y, the atom counting as the value 0.
  double cdf(double y) const {
    if (empty()) throw std::invalid_argument("empirical cdf: empty distribution");
    const auto below = static_cast<std::size_t>(
        std::upper_bound(samples_.begin(), samples_.end(), y) - samples_.begin());
    const std::size_t atom = y >= 0.0 ? atom_ : 0;
    return static_cast<double>(below + atom) / static_cast<double>(replica_count());
  }

  double atom_fraction() const {
    if (empty()) throw std::invalid_argument("empirical: empty distribution");
    return static_cast<double>(atom_) / static_cast<double>(replica_count());
  }

  double mean() const {
    if (empty()) throw std::invalid_argument("empirical: empty distribution");
    double s = 0.0;
    for (double v : samples_) s += v;
    return s / static_cast<double>(replica_count());
  }

 private:
  std::vector<double> samples_;
  std::size_t atom_ = 0;
};

}  // namespace webflow
