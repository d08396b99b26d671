#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "tnn/pricing.hpp"
#include "tnn/sde.hpp"

using namespace tnn;
using sde::HestonParams;

TEST(Increments, ZeroCorrelationCopiesIndependentDraw) {
  const auto inc = sde::correlated_increments(0.0, 0.01, 20, 10, 5);
  EXPECT_EQ(inc.dWv, inc.dZ);
}

TEST(Increments, UnitCorrelationCopiesSpotDraw) {
  const auto inc = sde::correlated_increments(1.0, 0.01, 20, 10, 5);
  EXPECT_EQ(inc.dWv, inc.dWx);
  const auto neg = sde::correlated_increments(-1.0, 0.01, 20, 10, 5);
  EXPECT_EQ(neg.dWv, -1.0 * neg.dWx);
}

TEST(Increments, SampleCorrelationAndVariance) {
  const double dt = 0.02;
  const auto inc = sde::correlated_increments(-0.5, dt, 20000, 10, 8);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < inc.dWx.size(); ++i) {
    sxy += inc.dWx[i] * inc.dWv[i];
    sxx += inc.dWx[i] * inc.dWx[i];
    syy += inc.dWv[i] * inc.dWv[i];
  }
  EXPECT_NEAR(sxy / std::sqrt(sxx * syy), -0.5, 0.01);
  EXPECT_NEAR(sxx / inc.dWx.size() / dt, 1.0, 0.01);
  EXPECT_NEAR(syy / inc.dWv.size() / dt, 1.0, 0.01);
}

TEST(Increments, RejectsInvalidCorrelation) {
  EXPECT_THROW(sde::correlated_increments(1.5, 0.01, 2, 2, 1), InvalidArgument);
  HestonParams p;
  p.rho = -1.01;
  EXPECT_THROW(sde::simulate_heston(p, 10, 10, 1), InvalidArgument);
}

TEST(Increments, PathWindowsAreConsistent) {
  const auto all = sde::correlated_increments(0.3, 0.01, 10, 4, 9);
  const auto tail = sde::correlated_increments(0.3, 0.01, 4, 4, 9, 6);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t n = 0; n < 4; ++n) EXPECT_EQ(tail.dWx(j, n), all.dWx(j + 6, n));
}

TEST(Heston, VanishingVolOfVolFreezesVarianceAtTheta) {
  HestonParams p;
  p.eta = 1e-30;
  p.v0 = p.theta;
  const auto ps = sde::simulate_heston(p, 50, 200, 3);
  for (double v : ps.v.data()) EXPECT_EQ(v, p.theta);
}

TEST(Heston, NegativeVarianceStepIsPureDrift) {
  HestonParams p;
  p.rate = 0.03;
  p.v0 = 0.01;
  const double dt = 0.01;
  // first step drives v below zero, second step starts from v < 0
  const double dwx = -1.0;
  const Matrix dWx = Matrix::from_rows({{dwx, 0.7}});
  const Matrix dZ = Matrix::from_rows({{-1.0, 0.4}});
  Matrix x, v;
  sde::replay_heston(p, dWx, dZ, dt, x, v);
  ASSERT_LT(v(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(x(0, 2), x(0, 1) + p.rate * dt);
  EXPECT_DOUBLE_EQ(v(0, 2), v(0, 1) + p.kappa * p.theta * dt);
}

TEST(Heston, InitialStateAndGrid) {
  HestonParams p;
  p.spot = 1.3;
  const auto ps = sde::simulate_heston(p, 20, 5, 1);
  EXPECT_EQ(ps.times.size(), 21u);
  EXPECT_EQ(ps.times.front(), 0.0);
  EXPECT_DOUBLE_EQ(ps.times.back(), p.maturity);
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_EQ(ps.x(j, 0), std::log(1.3));
    EXPECT_EQ(ps.v(j, 0), p.v0);
  }
  EXPECT_TRUE(ps.x.all_finite());
  EXPECT_TRUE(ps.v.all_finite());
}

TEST(Heston, ReplayIsBitIdentical) {
  const HestonParams p;
  const auto a = sde::simulate_heston(p, 30, 50, 4);
  const auto b = sde::simulate_heston(p, 30, 50, 4);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.v, b.v);
  Matrix x, v;
  sde::replay_heston(p, a.dWx, a.dZ, a.dt, x, v);
  EXPECT_EQ(x, a.x);
  EXPECT_EQ(v, a.v);
  const auto terminal = sde::simulate_heston_terminal(p, 30, 50, 4);
  for (std::size_t j = 0; j < 50; ++j) EXPECT_EQ(terminal[j], a.x(j, 30));
}

TEST(Heston, WindowedPathsMatchFullSimulation) {
  const HestonParams p;
  const auto all = sde::simulate_heston(p, 10, 40, 2);
  const auto part = sde::simulate_heston(p, 10, 10, 2, 30);
  for (std::size_t j = 0; j < 10; ++j)
    for (std::size_t n = 0; n <= 10; ++n) EXPECT_EQ(part.x(j, n), all.x(j + 30, n));
}

TEST(Heston, DiscountedSpotIsMartingale) {
  for (double rate : {0.0, 0.05}) {
    HestonParams p;
    p.rate = rate;
    const auto xt = sde::simulate_heston_terminal(p, 500, 100000, 17);
    std::vector<double> s(xt.size());
    for (std::size_t j = 0; j < xt.size(); ++j) s[j] = std::exp(xt[j] - rate * p.maturity);
    const auto est = oracle::mc_mean(s);
    EXPECT_NEAR(est.mean, p.spot, 3 * est.std_err) << "r=" << rate;
  }
}

TEST(Heston, CsvLayout) {
  const auto ps = sde::simulate_heston(HestonParams{}, 2, 3, 1, 5);
  std::ostringstream os;
  sde::write_paths_csv(os, ps);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "path_id,step,t,X,v");
  std::size_t rows = 0;
  std::getline(is, line);
  EXPECT_EQ(line.rfind("5,0,0,", 0), 0u);
  ++rows;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 9u);
}

TEST(Gbm, ZeroVolatilityIsDeterministic) {
  auto p = sde::GbmBasketParams::symmetric(3, 100.0, 0.0);
  const auto bp = sde::simulate_gbm_basket(p, 9, 4, 1);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t n = 0; n <= 9; ++n)
      for (std::size_t k = 0; k < 3; ++k)
        EXPECT_NEAR(bp.at(j, n, k), 100.0 * std::exp((p.rate - p.dividend) * bp.times[n]), 1e-10);
}

TEST(Gbm, TerminalCallMatchesBlackScholes) {
  const auto p = sde::GbmBasketParams::symmetric(2);
  const auto bp = sde::simulate_gbm_basket(p, 9, 200000, 3);
  for (std::size_t k = 0; k < 2; ++k) {
    std::vector<double> pay(bp.paths);
    for (std::size_t j = 0; j < bp.paths; ++j)
      pay[j] = std::exp(-p.rate * p.maturity) * std::max(bp.at(j, 9, k) - 100.0, 0.0);
    const auto est = oracle::mc_mean(pay);
    const double bs = pricing::black_scholes(100, 100, p.rate, p.dividend, 0.2, p.maturity, pricing::OptionKind::Call);
    EXPECT_NEAR(est.mean, bs, 3 * est.std_err) << "asset " << k;
  }
}

TEST(Gbm, AssetsAreIndependent) {
  const auto bp = sde::simulate_gbm_basket(sde::GbmBasketParams::symmetric(2), 1, 50000, 4);
  std::vector<double> a(bp.paths), b(bp.paths);
  for (std::size_t j = 0; j < bp.paths; ++j) {
    a[j] = std::log(bp.at(j, 1, 0));
    b[j] = std::log(bp.at(j, 1, 1));
  }
  const double ma = oracle::mc_mean(a).mean, mb = oracle::mc_mean(b).mean;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t j = 0; j < bp.paths; ++j) {
    sab += (a[j] - ma) * (b[j] - mb);
    saa += (a[j] - ma) * (a[j] - ma);
    sbb += (b[j] - mb) * (b[j] - mb);
  }
  EXPECT_NEAR(sab / std::sqrt(saa * sbb), 0.0, 0.02);
}

TEST(Gbm, ReproducibleAndValidated) {
  const auto p = sde::GbmBasketParams::symmetric(5);
  EXPECT_EQ(sde::simulate_gbm_basket(p, 9, 10, 2).prices, sde::simulate_gbm_basket(p, 9, 10, 2).prices);
  EXPECT_NE(sde::simulate_gbm_basket(p, 9, 10, 2).prices, sde::simulate_gbm_basket(p, 9, 10, 3).prices);
  auto bad = p;
  bad.vol.pop_back();
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = p;
  bad.spot[0] = -1.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}
