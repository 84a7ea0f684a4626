#include "doctest.h"
#include "voldisc/fracdiff.hpp"

#include <cmath>

using namespace voldisc;

namespace {

GridSequence<double> scalar_grid(long horizon, double (*f)(long)) {
  auto g = GridSequence<double>::zeros(static_cast<int>(horizon), 1, 1);
  for (long v = 0; v <= horizon; ++v) g.at(v)(0, 0) = f(v);
  return g;
}

BiSequence<double> geometric_bi(double rho, long lo, long hi) {
  auto u = BiSequence<double>::zeros(lo, hi, 1, 1);
  for (long v = lo; v <= hi; ++v) u.at(v)(0, 0) = std::pow(rho, static_cast<double>(-v));
  // |u(lo - s)| = rho^{-lo} * rho^s
  u.decay = Decay::geometric(rho, std::pow(rho, static_cast<double>(-lo)));
  return u;
}

}  // namespace

TEST_CASE("integer forward differences of polynomials are exact") {
  auto u = scalar_grid(20, [](long v) { return static_cast<double>(v * v); });
  auto d1 = forward_diff(u, 1);
  for (long v = 0; v <= d1.horizon(); ++v) CHECK(d1.at(v)(0, 0) == 2.0 * v + 1.0);
  auto d2 = forward_diff(u, 2);
  for (long v = 0; v <= d2.horizon(); ++v) CHECK(d2.at(v)(0, 0) == 2.0);
  auto d3 = forward_diff(u, 3);
  for (long v = 0; v <= d3.horizon(); ++v) CHECK(d3.at(v)(0, 0) == 0.0);
  CHECK(d1.horizon() == 19);
  CHECK_THROWS_AS(forward_diff(u, -1), argument_error);
}

TEST_CASE("order-one fractional sum is the running total") {
  auto ones = scalar_grid(30, [](long) { return 1.0; });
  auto s = frac_sum(ones, 1.0);
  for (long v = 0; v <= 30; ++v)
    CHECK(s.at(v)(0, 0) == doctest::Approx(v + 1.0).epsilon(1e-14));
  CHECK_THROWS_AS(frac_sum(ones, 0.0), argument_error);
  CHECK_THROWS_AS(frac_sum(ones, -0.3), argument_error);
}

TEST_CASE("fractional sums compose along orders") {
  auto u = scalar_grid(40, [](long v) { return std::cos(0.3 * static_cast<double>(v)); });
  auto a = frac_sum(frac_sum(u, 0.4), 0.8);
  auto b = frac_sum(u, 1.2);
  for (long v = 0; v <= 40; ++v)
    CHECK(std::abs(a.at(v)(0, 0) - b.at(v)(0, 0)) <= 1e-12);
}

TEST_CASE("fractional difference inverts the fractional sum up to the index shift") {
  // Delta^alpha (Delta^{-alpha} u)(v) = u(v + m): the m-fold forward difference
  // of the order-m running sum reads one step ahead per difference order.
  auto u = scalar_grid(50, [](long v) { return std::sin(0.2 * static_cast<double>(v)) + 0.5; });
  for (double alpha : {0.3, 1.0, 1.4}) {
    auto a = FracOrder::of(alpha);
    auto round = rl_frac_diff(frac_sum(u, alpha), a);
    for (long v = 0; v <= round.horizon(); ++v)
      CHECK(std::abs(round.at(v)(0, 0) - u.at(v + a.m)(0, 0)) <= 1e-11);
  }
}

TEST_CASE("FracOrder validates and classifies") {
  CHECK_THROWS_AS(FracOrder::of(0.0), argument_error);
  CHECK_THROWS_AS(FracOrder::of(-1.0), argument_error);
  CHECK(FracOrder::of(0.5).m == 1);
  CHECK(FracOrder::of(1.0).m == 1);
  CHECK(FracOrder::of(1.0).integer());
  CHECK(FracOrder::of(1.4).m == 2);
  CHECK_FALSE(FracOrder::of(1.4).integer());
}

TEST_CASE("Weyl fractional sum of a growing exponential has the closed form") {
  // (k^beta smoothed against rho^{-v})(v) = rho^{-v} (1 - rho)^{-beta}
  const double rho = 0.6, beta = 0.7;
  auto u = geometric_bi(rho, -80, 40);
  auto r = weyl_frac_sum(u, beta);
  const double factor = std::pow(1.0 - rho, -beta);
  for (long v = 0; v <= 30; ++v) {
    double exact = std::pow(rho, static_cast<double>(-v)) * factor;
    CHECK(std::abs(r.seq.at(v)(0, 0) - exact) <= 1e-9 * std::abs(exact) + r.tail_bound);
  }
  CHECK(r.tail_bound < 1e-8);  // 80 stored decades of decay make the cut cheap
  CHECK_THROWS_AS(weyl_frac_sum(u, 1.0), argument_error);
  CHECK_THROWS_AS(weyl_frac_sum(u, 0.0), argument_error);
}

TEST_CASE("Weyl fractional sum refuses constants, the full difference annihilates them") {
  Mat<double> c(1, 1);
  c << 3.25;
  auto u = BiSequence<double>::constant_value(c, -10, 10);
  CHECK_THROWS_AS(weyl_frac_sum(u, 0.5), certificate_error);
  auto d = weyl_frac_diff(u, FracOrder::of(0.5));
  CHECK(d.tail_bound == 0.0);
  REQUIRE(d.seq.decay.has_value());
  CHECK(d.seq.decay->kind == Decay::Kind::Zero);
  for (long v = d.seq.lo; v <= d.seq.hi(); ++v) CHECK(d.seq.at(v)(0, 0) == 0.0);
}

TEST_CASE("Weyl fractional difference of a growing exponential has the closed form") {
  // Delta_W^alpha rho^{-v} = rho^{-v} (1 - rho)^alpha rho^{-m}
  const double rho = 0.6;
  for (double alpha : {0.4, 0.5, 1.3}) {
    auto a = FracOrder::of(alpha);
    auto u = geometric_bi(rho, -90, 40);
    auto d = weyl_frac_diff(u, a);
    const double factor = std::pow(1.0 - rho, alpha) * std::pow(rho, static_cast<double>(-a.m));
    for (long v = 0; v <= 25; ++v) {
      double exact = std::pow(rho, static_cast<double>(-v)) * factor;
      CHECK(std::abs(d.seq.at(v)(0, 0) - exact) <= 1e-9 * std::abs(exact) + 4.0 * d.tail_bound);
    }
  }
}

TEST_CASE("Weyl difference commutes with index shifts on the overlap") {
  auto u = geometric_bi(0.55, -70, 30);
  auto a = FracOrder::of(0.5);
  auto direct = weyl_frac_diff(u, a);
  auto shifted_in = weyl_frac_diff(u.shifted(4), a);
  // shifting the input by s shifts the output by s: compare on the overlap
  for (long v = 5; v <= 20; ++v)
    CHECK(shifted_in.seq.at(v + 4)(0, 0) == doctest::Approx(direct.seq.at(v)(0, 0)).epsilon(1e-13));
}

TEST_CASE("evaluation through the composite kernel matches the operator route") {
  auto u = geometric_bi(0.5, -60, 25);
  auto a = FracOrder::of(0.5);
  auto d = weyl_frac_diff(u, a);
  auto kern = KernelSpec<double>::weyl_frac(a.alpha);
  auto sh = u.shifted(-a.m);
  for (long v = 0; v <= 15; ++v) {
    double tail = 0.0;
    auto val = weyl_conv_at(kern, sh, v, &tail);
    CHECK(val(0, 0) == doctest::Approx(d.seq.at(v)(0, 0)).epsilon(1e-13));
  }
}

TEST_CASE("smoothing and differencing commute within the certified bound") {
  auto u = geometric_bi(0.5, -80, 30);
  auto rep = weyl_commutation_defect(u, FracOrder::of(0.5));
  CHECK(rep.defect <= rep.certificate + 1e-13);
  CHECK(rep.window_hi > rep.window_lo);
  // constants and integer orders commute exactly
  Mat<double> c(1, 1);
  c << 2.0;
  auto k = BiSequence<double>::constant_value(c, -5, 5);
  CHECK(weyl_commutation_defect(k, FracOrder::of(0.7)).defect == 0.0);
  CHECK(weyl_commutation_defect(u, FracOrder::of(1.0)).defect == 0.0);
}

TEST_CASE("refusals: missing decay declarations and short windows") {
  auto u = BiSequence<double>::zeros(-10, 10, 1, 1);
  for (long v = -10; v <= 10; ++v) u.at(v)(0, 0) = 1.0 / (1.0 + std::abs(static_cast<double>(v)));
  CHECK_FALSE(u.decay.has_value());
  CHECK_THROWS_AS(weyl_frac_diff(u, FracOrder::of(0.5)), certificate_error);
  auto tiny = BiSequence<double>::zeros(0, 0, 1, 1);
  CHECK_THROWS_AS(weyl_frac_diff(tiny, FracOrder::of(0.5)), argument_error);
}

TEST_CASE("antidifference reconstructs and honors its anchors") {
  auto u = scalar_grid(25, [](long v) { return std::cos(0.4 * static_cast<double>(v)); });
  for (int m : {1, 2, 3}) {
    std::vector<Mat<double>> anchors;
    for (int i = 0; i < m; ++i) anchors.push_back(scalar_mat(0.3 * i - 0.1));
    auto h = antidifference(u, m, anchors);
    for (int i = 0; i < m; ++i)
      CHECK(h.at(i)(0, 0) == doctest::Approx(0.3 * i - 0.1).epsilon(1e-12));
    auto back = forward_diff(h, m);
    for (long v = 0; v <= back.horizon(); ++v)
      CHECK(back.at(v)(0, 0) == doctest::Approx(u.at(v)(0, 0)).epsilon(1e-10));
  }
  std::vector<Mat<double>> wrong(2, scalar_mat(0.0));
  CHECK_THROWS_AS(antidifference(u, 1, wrong), argument_error);
}
