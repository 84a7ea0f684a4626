#include "doctest.h"
#include "voldisc/linop.hpp"

using namespace voldisc;

TEST_CASE("checked inversion flags singular pencils") {
  Mat<double> ok(2, 2);
  ok << 2, 1, 0, 3;
  Mat<double> inv = invert_checked(ok, "test");
  CHECK(frobenius_norm(Mat<double>(ok * inv - Mat<double>::Identity(2, 2))) <= 1e-14);

  Mat<double> sing(2, 2);
  sing << 1, 2, 2, 4;
  CHECK_THROWS_AS(invert_checked(sing, "test"), singular_error);
}

TEST_CASE("injectivity report via extreme singular values") {
  Mat<double> full(3, 3);
  full << 4, 0, 0, 0, 2, 0, 0, 0, 1e-3;
  auto r = injectivity_check(full);
  CHECK(r.injective);
  CHECK(r.sigma_min == doctest::Approx(1e-3));
  CHECK(r.sigma_max == doctest::Approx(4.0));

  Mat<double> deficient(3, 3);
  deficient << 1, 2, 3, 2, 4, 6, 0, 0, 1;
  auto rd = injectivity_check(deficient);
  CHECK_FALSE(rd.injective);

  Mat<double> wide(2, 3);
  wide << 1, 0, 0, 0, 1, 0;
  CHECK_FALSE(injectivity_check(wide).injective);
}

TEST_CASE("commutator defects") {
  Mat<double> d1 = Mat<double>::Identity(2, 2) * 2.0;
  Mat<double> d2(2, 2);
  d2 << 1, 0, 0, 5;
  CHECK(commutator_defect(d1, d2) == 0.0);

  Mat<double> n(2, 2);
  n << 0, 1, 0, 0;
  CHECK(commutator_defect(n, d2) > 1.0);
  std::vector<Mat<double>> commuting = {d1, d2};
  std::vector<Mat<double>> mixed = {d1, d2, n};
  CHECK(max_commutator_defect(commuting) == 0.0);
  CHECK(max_commutator_defect(mixed) > 1.0);
}

TEST_CASE("condition estimate") {
  Mat<double> m(2, 2);
  m << 1, 0, 0, 1e-8;
  CHECK(condition_estimate(m) == doctest::Approx(1e8).epsilon(1e-6));
}
