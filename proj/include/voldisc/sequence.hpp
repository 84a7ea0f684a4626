#pragma once

// Sequence containers.
//
// GridSequence<S>: elements on 0..horizon (solution families, forcing data).
// BiSequence<S>:   elements on a window [lo, hi] of the integers, plus an
//                  explicit declaration of how the sequence behaves below the
//                  window.  Every doubly-infinite sum in the library is
//                  truncated at the window edge and certified against that
//                  declaration; without one, operations that need the left
//                  tail refuse instead of silently truncating.

#include "voldisc/core.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace voldisc {

template <class S>
struct GridSequence {
  std::vector<Mat<S>> values;

  GridSequence() = default;
  explicit GridSequence(std::vector<Mat<S>> v) : values(std::move(v)) {}

  static GridSequence zeros(int horizon, Eigen::Index rows, Eigen::Index cols) {
    GridSequence s;
    s.values.assign(static_cast<std::size_t>(horizon) + 1, Mat<S>::Zero(rows, cols));
    return s;
  }

  int horizon() const { return static_cast<int>(values.size()) - 1; }
  bool empty() const { return values.empty(); }
  Eigen::Index rows() const { return values.empty() ? 0 : values.front().rows(); }
  Eigen::Index cols() const { return values.empty() ? 0 : values.front().cols(); }

  const Mat<S>& at(int v) const {
    if (v < 0 || v > horizon()) throw shape_error("grid sequence index out of range");
    return values[static_cast<std::size_t>(v)];
  }
  Mat<S>& at(int v) {
    if (v < 0 || v > horizon()) throw shape_error("grid sequence index out of range");
    return values[static_cast<std::size_t>(v)];
  }

  double max_norm() const {
    double m = 0;
    for (const auto& x : values) m = std::max(m, frobenius_norm(x));
    return m;
  }
};

// Behavior of a BiSequence below its stored window.
struct Decay {
  enum class Kind {
    Zero,       // identically zero below the window (exact)
    Geometric,  // ||u(lo - s)|| <= bound * rate^s for s >= 1
    Algebraic,  // ||u(lo - s)|| <= bound * (1 + s)^(-exponent) for s >= 1
  };

  Kind kind = Kind::Zero;
  double rate = 0.0;      // geometric rate in (0, 1)
  double exponent = 0.0;  // algebraic exponent > 1
  double bound = 0.0;

  static Decay zero() { return Decay{}; }
  static Decay geometric(double rate, double bound) {
    if (!(rate > 0.0 && rate < 1.0)) throw argument_error("geometric decay rate must be in (0,1)");
    if (!(bound >= 0.0)) throw argument_error("decay bound must be nonnegative");
    Decay d;
    d.kind = Kind::Geometric;
    d.rate = rate;
    d.bound = bound;
    return d;
  }
  static Decay algebraic(double exponent, double bound) {
    if (!(exponent > 1.0)) throw argument_error("algebraic decay exponent must exceed 1");
    if (!(bound >= 0.0)) throw argument_error("decay bound must be nonnegative");
    Decay d;
    d.kind = Kind::Algebraic;
    d.exponent = exponent;
    d.bound = bound;
    return d;
  }

  // Upper bound for ||u(lo - s)||, s >= 1.
  double value_bound(long s) const {
    switch (kind) {
      case Kind::Zero:
        return 0.0;
      case Kind::Geometric:
        return bound * std::pow(rate, static_cast<double>(s));
      case Kind::Algebraic:
        return bound * std::pow(1.0 + static_cast<double>(s), -exponent);
    }
    return 0.0;
  }
};

template <class S>
struct BiSequence {
  std::vector<Mat<S>> values;
  long lo = 0;  // index of values.front()
  std::optional<Decay> decay;
  bool constant = false;  // declared constant on all of Z (no decay, exact algebra)

  BiSequence() = default;

  static BiSequence zeros(long lo, long hi, Eigen::Index rows, Eigen::Index cols) {
    if (hi < lo) throw shape_error("window upper edge below lower edge");
    BiSequence s;
    s.lo = lo;
    s.values.assign(static_cast<std::size_t>(hi - lo) + 1, Mat<S>::Zero(rows, cols));
    return s;
  }

  // The sequence equal to x at every integer.  Carries no decay declaration;
  // operators that know the exact constant identity handle it analytically.
  static BiSequence constant_value(const Mat<S>& x, long lo, long hi) {
    if (hi < lo) throw shape_error("window upper edge below lower edge");
    BiSequence s;
    s.lo = lo;
    s.values.assign(static_cast<std::size_t>(hi - lo) + 1, x);
    s.constant = true;
    return s;
  }

  long hi() const { return lo + static_cast<long>(values.size()) - 1; }
  bool empty() const { return values.empty(); }
  Eigen::Index rows() const { return values.empty() ? 0 : values.front().rows(); }
  Eigen::Index cols() const { return values.empty() ? 0 : values.front().cols(); }

  bool contains(long v) const { return v >= lo && v <= hi(); }

  const Mat<S>& at(long v) const {
    if (!contains(v)) throw shape_error("window index out of range");
    return values[static_cast<std::size_t>(v - lo)];
  }
  Mat<S>& at(long v) {
    if (!contains(v)) throw shape_error("window index out of range");
    return values[static_cast<std::size_t>(v - lo)];
  }

  // Relabels indices by +offset; the stored data is unchanged, so any
  // computation over the shifted sequence sums exactly the same terms.
  BiSequence shifted(long offset) const {
    BiSequence s = *this;
    s.lo += offset;
    return s;
  }

  // Drops the last n stored values (used when an operation consumes lookahead).
  BiSequence truncated_right(long n) const {
    if (n < 0 || static_cast<std::size_t>(n) >= values.size())
      throw shape_error("cannot truncate window to emptiness");
    BiSequence s = *this;
    s.values.resize(values.size() - static_cast<std::size_t>(n));
    return s;
  }

  double max_norm() const {
    double m = 0;
    for (const auto& x : values) m = std::max(m, frobenius_norm(x));
    return m;
  }

  // Bound for ||u(v)|| at any integer v, using stored data inside the window,
  // the decay declaration below it, and refusing above it.
  double norm_bound_at(long v) const {
    if (contains(v)) return frobenius_norm(at(v));
    if (constant) return values.empty() ? 0.0 : frobenius_norm(values.front());
    if (v > hi()) throw certificate_error("no bound available above the stored window");
    if (!decay) throw certificate_error("no decay declared below the stored window");
    return decay->value_bound(lo - v);
  }
};

// Restriction of a grid sequence to a window placed at offset >= 0,
// with exact zero extension to the left.
template <class S>
BiSequence<S> to_bisequence(const GridSequence<S>& g, long lo_pad = 0) {
  BiSequence<S> b;
  b.lo = -lo_pad;
  b.decay = Decay::zero();
  b.values.reserve(g.values.size() + static_cast<std::size_t>(lo_pad));
  for (long i = 0; i < lo_pad; ++i) b.values.push_back(Mat<S>::Zero(g.rows(), g.cols()));
  for (const auto& m : g.values) b.values.push_back(m);
  return b;
}

}  // namespace voldisc
