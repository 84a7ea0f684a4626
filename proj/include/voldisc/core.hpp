#pragma once

// Shared scalar/matrix plumbing for the voldisc library.
//
// All element data lives in dense Eigen matrices.  A "scalar" element is a
// 1x1 matrix, a vector element is dx1, an operator element is dxd; mixed
// products broadcast 1x1 factors.  Sequences of plain scalars (kernels)
// use std::vector<S> instead.

#include <Eigen/Dense>

#include <complex>
#include <cstdlib>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace voldisc {

using Real = double;
using Cplx = std::complex<double>;

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <class S>
inline constexpr bool is_complex_v = false;
template <class T>
inline constexpr bool is_complex_v<std::complex<T>> = true;

// --- error taxonomy ---------------------------------------------------------

// Base for everything this library throws on purpose.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Incompatible element shapes or window/horizon mismatches.
struct shape_error : error {
  using error::error;
};

// Argument outside the mathematical domain of an operation.
struct argument_error : error {
  using error::error;
};

// A pencil or operator required to be invertible is numerically singular.
struct singular_error : error {
  using error::error;
};

// A truncation/tail certificate cannot be produced from the declared data.
struct certificate_error : error {
  using error::error;
};

// A stated precondition of an operation does not hold.
struct precondition_error : error {
  using error::error;
};

// Seed data for a shifted recursion is inconsistent.
struct seed_error : error {
  using error::error;
};

// Quadrature or series evaluation failed to converge to tolerance.
struct convergence_error : error {
  using error::error;
};

// Scenario text could not be parsed or validated.
struct parse_error : error {
  using error::error;
};

// --- numeric helpers --------------------------------------------------------

inline double abs_of(double x) { return std::abs(x); }
inline double abs_of(const Cplx& x) { return std::abs(x); }

template <class S>
double frobenius_norm(const Mat<S>& m) {
  return m.norm();
}

// Largest singular value; the operator norm induced by the vector 2-norm.
template <class S>
double spectral_norm(const Mat<S>& m) {
  if (m.rows() == 1 && m.cols() == 1) return abs_of(m(0, 0));
  Eigen::JacobiSVD<Mat<S>> svd(m);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

// Product with 1x1 broadcast: a 1x1 factor acts as a scalar on the other side.
template <class S>
Mat<S> mul(const Mat<S>& a, const Mat<S>& b) {
  if (a.rows() == 1 && a.cols() == 1) return (a(0, 0) * b.array()).matrix();
  if (b.rows() == 1 && b.cols() == 1) return (b(0, 0) * a.array()).matrix();
  if (a.cols() != b.rows())
    throw shape_error("element product: " + std::to_string(a.rows()) + "x" +
                      std::to_string(a.cols()) + " times " + std::to_string(b.rows()) + "x" +
                      std::to_string(b.cols()));
  return a * b;
}

template <class S>
Mat<S> scalar_mat(S v) {
  Mat<S> m(1, 1);
  m(0, 0) = v;
  return m;
}

template <class S>
Mat<S> zero_like(const Mat<S>& m) {
  return Mat<S>::Zero(m.rows(), m.cols());
}

// Result shape of mul(a, b) without computing it.
template <class S>
std::pair<Eigen::Index, Eigen::Index> mul_shape(const Mat<S>& a, const Mat<S>& b) {
  if (a.rows() == 1 && a.cols() == 1) return {b.rows(), b.cols()};
  if (b.rows() == 1 && b.cols() == 1) return {a.rows(), a.cols()};
  if (a.cols() != b.rows()) throw shape_error("element product shape mismatch");
  return {a.rows(), b.cols()};
}

// Compensated accumulator; keeps long convolution/quadrature sums at
// O(eps) error independent of term count.
class KahanSum {
 public:
  void add(double x) {
    double y = x - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

// Runs fn(i) for i in [0, n); honors VOLDISC_THREADS (default 1).
// Work items must write to disjoint slots so results do not depend on the
// thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  std::size_t threads = 1;
  if (const char* env = std::getenv("VOLDISC_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v > 1) threads = static_cast<std::size_t>(v);
  }
  threads = std::min<std::size_t>(threads, std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, n ? n : 1);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      for (std::size_t i = t; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// 17 significant digits: round-trips any double exactly through text.
inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", x);
  return buf;
}

template <class S>
std::string format_scalar(S x) {
  if constexpr (is_complex_v<S>) {
    return format_real(x.real()) + "," + format_real(x.imag());
  } else {
    return format_real(x);
  }
}

}  // namespace voldisc
