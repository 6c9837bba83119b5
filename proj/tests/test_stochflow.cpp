#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "webflow/stats.hpp"
#include "webflow/stochflow.hpp"

using namespace webflow;

namespace {

struct Moments {
  double mean = 0, var = 0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  for (double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(v.size() - 1);
  return m;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ma = moments(a), mb = moments(b);
  double c = 0;
  for (std::size_t i = 0; i < a.size(); ++i) c += (a[i] - ma.mean) * (b[i] - mb.mean);
  c /= static_cast<double>(a.size() - 1);
  return c / std::sqrt(ma.var * mb.var);
}

/// Two-sample Kolmogorov-Smirnov distance, atoms at zero included.
double two_sample_ks(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
  std::vector<double> pts{0.0};
  pts.insert(pts.end(), a.samples().begin(), a.samples().end());
  pts.insert(pts.end(), b.samples().begin(), b.samples().end());
  double worst = 0;
  for (double y : pts) worst = std::max(worst, std::abs(a.cdf(y) - b.cdf(y)));
  return worst;
}

}  // namespace

TEST(Covariance, ReferenceMatrices) {
  const CovarianceSpec g;
  const double one[] = {3.0};
  const auto c1 = covariance_matrix(g, one);
  ASSERT_EQ(c1.rows(), 1);
  EXPECT_EQ(c1(0, 0), 1.0);

  const double same[] = {0.5, 0.5};
  const auto c2 = covariance_matrix(g, same);
  EXPECT_TRUE((c2.array() == 1.0).all());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(c2);
  EXPECT_EQ(lu.rank(), 1);

  const double pts[] = {0.0, 1.0};
  const auto c3 = covariance_matrix(g, pts);
  EXPECT_NEAR(c3(0, 1), 0.60653065971263342, 1e-15);
  EXPECT_EQ(c3(0, 1), c3(1, 0));

  const double bad[] = {0.0, NAN};
  EXPECT_THROW(covariance_matrix(g, bad), std::invalid_argument);
}

TEST(Covariance, KernelsAndValidation) {
  const CovarianceSpec c{Kernel::cauchy, 2.0, 3.0};
  EXPECT_DOUBLE_EQ(c(2.0), 1.5);
  EXPECT_DOUBLE_EQ(c.deficit(2.0), 1.5);
  const CovarianceSpec g{Kernel::gaussian, 1.0, 1.0};
  EXPECT_NEAR(g.deficit(1e-9), 0.5e-18, 1e-30);
  EXPECT_THROW((CovarianceSpec{Kernel::gaussian, 0.0, 1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((CovarianceSpec{Kernel::gaussian, 1.0, -1.0}.validate()), std::invalid_argument);
  EXPECT_EQ(kernel_from_name("cauchy"), Kernel::cauchy);
  EXPECT_THROW(kernel_from_name("laplace"), std::invalid_argument);
}

TEST(Factorization, SymmetricRootReproducesMatrix) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> N(0.0, 2.0);
  for (int n = 2; n <= 6; ++n) {
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> x;
      for (int i = 0; i < n; ++i) x.push_back(N(gen));
      std::sort(x.begin(), x.end());
      for (Kernel k : {Kernel::gaussian, Kernel::cauchy}) {
        const CovarianceSpec spec{k, 1.0, 1.0};
        const auto C = covariance_matrix(spec, x);
        const auto S = factor_covariance(C, kClipRelative);
        EXPECT_LE((S * S.transpose() - C).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LE((S - S.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        if (n == 2) {
          const auto f = factor_two_point(1.0, spec(x[1] - x[0]), spec.deficit(x[1] - x[0]), kClipRelative);
          EXPECT_NEAR(f.diag, S(0, 0), 1e-9);
          EXPECT_NEAR(f.off, S(0, 1), 1e-9);
        }
      }
    }
  }
}

TEST(Step, OnePointIncrementVariance) {
  const CovarianceSpec spec{Kernel::gaussian, 1.0, 2.0};
  const double h = 0.01;
  std::vector<double> inc;
  for (std::uint64_t r = 0; r < 100000; ++r) {
    CounterRng rng(5, r);
    inc.push_back(step(FlowState{0.0, {1.0}}, h, spec, rng).points[0] - 1.0);
  }
  EXPECT_NEAR(moments(inc).var / (h * 2.0), 1.0, 0.02);
}

TEST(Step, CoincidentPointsMoveTogether) {
  const CovarianceSpec spec;
  CounterRng rng(6, 0);
  FlowState s{0.0, {0.25, 0.25}};
  for (int k = 0; k < 1000; ++k) s = step(s, 0.01, spec, rng);
  EXPECT_LE(s.points[1] - s.points[0], 1e-5);
  EXPECT_NEAR(s.time, 10.0, 1e-9);
  EXPECT_THROW(step(s, 0.0, spec, rng), std::invalid_argument);
}

TEST(Step, FarPointsAreUncorrelated) {
  const CovarianceSpec spec;
  std::vector<double> a, b;
  for (std::uint64_t r = 0; r < 100000; ++r) {
    CounterRng rng(7, r);
    const auto s = step(FlowState{0.0, {0.0, 100.0}}, 0.01, spec, rng);
    a.push_back(s.points[0]);
    b.push_back(s.points[1] - 100.0);
  }
  EXPECT_LE(std::abs(correlation(a, b)), 0.02);
}

TEST(Step, ManyPointsStayOrdered) {
  const CovarianceSpec spec;
  CounterRng rng(8, 0);
  FlowState s{0.0, {-1.0, -0.2, 0.0, 0.3, 2.0}};
  StepCounters c;
  for (int k = 0; k < 2000; ++k) step_in_place(s, 0.001, spec, rng, c);
  EXPECT_TRUE(std::is_sorted(s.points.begin(), s.points.end()));
  EXPECT_EQ(c.steps, 2000u);
}

TEST(Simulate, OneStepRunEqualsStep) {
  const CovarianceSpec spec;
  const std::vector<double> x0{0.0, 0.5};
  const auto traj = simulate(spec, x0, 0.01, 0.01, 99, 3);
  ASSERT_EQ(traj.times.size(), 2u);
  for (std::size_t r = 0; r < 3; ++r) {
    CounterRng rng(99, r);
    const auto s = step(FlowState{0.0, x0}, 0.01, spec, rng);
    EXPECT_EQ(traj.at(r, 0, 1), s.points[0]);
    EXPECT_EQ(traj.at(r, 1, 1), s.points[1]);
    EXPECT_EQ(traj.at(r, 0, 0), 0.0);
  }
}

TEST(Simulate, DeterministicInSeedAndThreadCount) {
  const CovarianceSpec spec;
  const std::vector<double> x0{0.0, 0.3, 1.0};
  const auto a = simulate(spec, x0, 1.0, 0.01, 4, 16, 1);
  const auto b = simulate(spec, x0, 1.0, 0.01, 4, 16, 4);
  EXPECT_EQ(a.positions, b.positions);
  EXPECT_EQ(a.times, b.times);
  const auto c = simulate(spec, x0, 1.0, 0.01, 5, 16, 1);
  EXPECT_NE(a.positions, c.positions);
}

TEST(Simulate, RejectsBadInputs) {
  const CovarianceSpec spec;
  const std::vector<double> unsorted{1.0, 0.0};
  EXPECT_THROW(simulate(spec, unsorted, 1.0, 0.01, 1, 1), std::invalid_argument);
  const std::vector<double> ok{0.0, 1.0};
  EXPECT_THROW(simulate(spec, ok, 1.0, 2.0, 1, 1), std::invalid_argument);
  EXPECT_THROW(simulate(spec, ok, 1.0, 0.01, 1, 0), std::invalid_argument);
  EXPECT_THROW(simulate(spec, std::vector<double>{}, 1.0, 0.01, 1, 1), std::invalid_argument);
}

TEST(Simulate, ViolationRateAtCloseStart) {
  const CovarianceSpec spec;
  const std::vector<double> x0{0.0, 0.1};
  const auto traj = simulate(spec, x0, 1.0, 1e-3, 10, 500);
  EXPECT_LT(traj.violation_rate(), 1e-3);
}

TEST(Simulate, OrderPreservedAtEveryStoredTime) {
  const CovarianceSpec spec{Kernel::cauchy, 1.0, 1.0};
  const std::vector<double> x0{-0.5, 0.0, 0.05, 0.7};
  const auto traj = simulate(spec, x0, 2.0, 0.0, 11, 200, 1, 10);
  for (std::size_t r = 0; r < traj.replicas; ++r)
    for (std::size_t k = 0; k < traj.times.size(); ++k)
      for (std::size_t i = 1; i < traj.points; ++i) ASSERT_LE(traj.at(r, i - 1, k), traj.at(r, i, k));
  EXPECT_EQ(traj.times.back(), 2.0);
}

TEST(Simulate, StrideKeepsLastTime) {
  const CovarianceSpec spec;
  const std::vector<double> x0{0.0};
  const auto traj = simulate(spec, x0, 1.0, 0.1, 1, 1, 1, 3);
  ASSERT_EQ(traj.times.size(), 5u);
  EXPECT_DOUBLE_EQ(traj.times[3], 0.9);
  EXPECT_EQ(traj.times.back(), 1.0);
}

TEST(Simulate, MarginalIncrementsAreBrownian) {
  const CovarianceSpec spec;
  const std::vector<double> x0{0.0, 0.4};
  const std::size_t reps = 20000;
  const auto traj = simulate(spec, x0, 2.0, 0.01, 12, reps, 1, 100);
  ASSERT_EQ(traj.times.size(), 3u);
  std::vector<double> first, second;
  for (std::size_t r = 0; r < reps; ++r) {
    first.push_back(traj.at(r, 0, 1) - traj.at(r, 0, 0));
    second.push_back(traj.at(r, 0, 2) - traj.at(r, 0, 1));
  }
  EXPECT_LE(std::abs(correlation(first, second)), 3.0 / std::sqrt(static_cast<double>(reps)));
  // 4 sigma of the sample variance at this replica count, about 4%.
  EXPECT_NEAR(moments(first).var, 1.0, 4.0 * std::sqrt(2.0 / reps));
  EXPECT_NEAR(moments(second).var, 1.0, 4.0 * std::sqrt(2.0 / reps));
}

TEST(ChooseStep, MeetsViolationThreshold) {
  const CovarianceSpec spec;
  const double x0[] = {0.0, 1.0};
  const double h = choose_step(spec, x0, 25.0, 3);
  EXPECT_LE(h, 0.025);
  const auto traj = simulate(spec, std::vector<double>{0.0, 1.0}, 25.0, h, 3 ^ detail::kPilotStream, 256);
  EXPECT_LE(traj.violation_rate(), 1e-3);
  const double one[] = {0.0};
  EXPECT_DOUBLE_EQ(choose_step(spec, one, 25.0, 3), 0.025);
}

TEST(RescaleFlow, ReferenceArithmetic) {
  FlowTrajectorySet t;
  t.times = {0.0, 8.0};
  t.replicas = 1;
  t.points = 1;
  t.positions = {0.0, 4.0};
  const auto same = rescale_flow(t, 1.0);
  EXPECT_EQ(same.positions, t.positions);
  EXPECT_EQ(same.times, t.times);
  const auto half = rescale_flow(t, 0.5);
  EXPECT_EQ(half.times[1], 2.0);
  EXPECT_EQ(half.at(0, 0, 1), 2.0);
  EXPECT_EQ(half.config.delta, 0.5);
  EXPECT_THROW(rescale_flow(half, 0.5), std::invalid_argument);
  EXPECT_THROW(rescale_flow(t, 0.0), std::invalid_argument);
}

TEST(RescaleFlow, OnePointVarianceScalesWithTime) {
  const CovarianceSpec spec;
  const double delta = 0.1, t = 0.5;
  const std::vector<double> x0{0.0};
  const auto traj = rescale_flow(simulate(spec, x0, t / (delta * delta), 0.5, 13, 100000), delta);
  std::vector<double> end;
  for (std::size_t r = 0; r < traj.replicas; ++r) end.push_back(traj.at(r, 0, traj.times.size() - 1));
  EXPECT_NEAR(traj.times.back(), t, 1e-12);
  EXPECT_NEAR(moments(end).var / t, 1.0, 0.02);
}

TEST(GapSample, CoincidentStartIsPointMass) {
  const auto e = two_point_gap_sample(CovarianceSpec{}, 0.3, 0.3, 1.0, 0.1, 0.0, 1, 50);
  EXPECT_EQ(e.atom_at_zero(), 50u);
  EXPECT_EQ(e.cdf(0.0), 1.0);
}

TEST(GapSample, ShortTimeKeepsInitialGap) {
  const double delta = 0.1, h = 0.01;
  const auto e = two_point_gap_sample(CovarianceSpec{}, 0.0, 1.0, h * delta * delta, delta, h, 2, 1000);
  EXPECT_EQ(e.atom_at_zero(), 0u);
  // one Euler step; far apart the gap increment has variance 2 h (unrescaled)
  const double sd = delta * std::sqrt(2 * h);
  for (double g : e.samples()) EXPECT_NEAR(g, 1.0, 6 * sd);
  std::vector<double> v(e.samples().begin(), e.samples().end());
  EXPECT_NEAR(std::sqrt(moments(v).var) / sd, 1.0, 0.1);
}

TEST(GapSample, AtomMatchesMeetingProbability) {
  GapDiagnostics diag;
  const double delta = 0.05;
  const auto e = two_point_gap_sample(CovarianceSpec{}, 0.0, 1.0, 1.0, delta, 0.0, 14, 10000, {}, &diag);
  EXPECT_NEAR(e.atom_fraction(), 1.0 - std::erf(0.5), 0.02);
  EXPECT_EQ(diag.coalescence_threshold, delta);
  EXPECT_LE(static_cast<double>(diag.counters.violations), 1e-3 * static_cast<double>(diag.counters.steps));
}

TEST(GapSample, TranslationInvariant) {
  const double delta = 0.2;
  const auto a = two_point_gap_sample(CovarianceSpec{}, 0.0, 1.0, 1.0, delta, 0.1, 15, 100000);
  const auto b = two_point_gap_sample(CovarianceSpec{}, 3.0, 4.0, 1.0, delta, 0.1, 16, 100000);
  EXPECT_LE(two_sample_ks(a, b), 0.02);
}

TEST(GapSample, RejectsBadInputs) {
  EXPECT_THROW(two_point_gap_sample(CovarianceSpec{}, 1.0, 0.0, 1.0, 0.1, 0.0, 1, 10), std::invalid_argument);
  EXPECT_THROW(two_point_gap_sample(CovarianceSpec{}, 0.0, 1.0, 1.0, 0.0, 0.0, 1, 10), std::invalid_argument);
  EXPECT_THROW(two_point_gap_sample(CovarianceSpec{}, 0.0, 1.0, 1.0, 0.1, 0.0, 1, 0), std::invalid_argument);
}

TEST(FlowExport, CsvAndPathSet) {
  const std::vector<double> x0{0.0, 1.0};
  const auto traj = simulate(CovarianceSpec{}, x0, 0.02, 0.01, 1, 2);
  std::ostringstream os;
  write_csv(traj, os);
  const auto text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "replica,point_index,time,position");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 2 * 2 * 3);
  const auto ps = to_path_set(traj);
  ASSERT_EQ(ps.size(), 4u);
  EXPECT_EQ(ps.members[3].value(0.02), traj.at(1, 1, 2));
}
