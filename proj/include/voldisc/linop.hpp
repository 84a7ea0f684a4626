#pragma once

// Dense linear-operator helpers: checked inversion, commutator defects,
// injectivity margins.  Everything is desk-scale dense algebra on Mat<S>.

#include "voldisc/core.hpp"

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace voldisc {

// Inverse via full-pivot LU; refuses (with rank information) when the matrix
// is numerically singular rather than returning garbage.
template <class S>
Mat<S> invert_checked(const Mat<S>& M, const std::string& what) {
  if (M.rows() != M.cols()) throw shape_error(what + ": matrix is not square");
  Eigen::FullPivLU<Mat<S>> lu(M);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible())
    throw singular_error(what + ": matrix is numerically singular (rank " +
                         std::to_string(lu.rank()) + " of " + std::to_string(M.rows()) + ")");
  return lu.inverse();
}

// Frobenius norm of AB - BA; zero iff the pair commutes.
template <class S>
double commutator_defect(const Mat<S>& A, const Mat<S>& B) {
  return frobenius_norm(Mat<S>(mul(A, B) - mul(B, A)));
}

// Maximum pairwise commutator defect over a family of operators.
template <class S>
double max_commutator_defect(const std::vector<Mat<S>>& ops) {
  double d = 0.0;
  for (std::size_t i = 0; i < ops.size(); ++i)
    for (std::size_t j = i + 1; j < ops.size(); ++j)
      d = std::max(d, commutator_defect(ops[i], ops[j]));
  return d;
}

struct InjectivityReport {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  bool injective = false;
};

// Smallest/largest singular values; injective when the relative smallest
// singular value clears 1e-12.
template <class S>
InjectivityReport injectivity_check(const Mat<S>& M) {
  InjectivityReport r;
  if (M.rows() == 0 || M.cols() == 0) throw shape_error("injectivity_check: empty matrix");
  Eigen::JacobiSVD<Mat<S>> svd(M);
  r.sigma_max = svd.singularValues()(0);
  r.sigma_min = svd.singularValues()(svd.singularValues().size() - 1);
  if (M.rows() < M.cols()) r.sigma_min = 0.0;  // wide matrices always have kernel
  r.injective = r.sigma_min > 1e-12 * std::max(1.0, r.sigma_max);
  return r;
}

// Condition number estimate from the extreme singular values.
template <class S>
double condition_estimate(const Mat<S>& M) {
  Eigen::JacobiSVD<Mat<S>> svd(M);
  double smin = svd.singularValues()(svd.singularValues().size() - 1);
  double smax = svd.singularValues()(0);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

}  // namespace voldisc
