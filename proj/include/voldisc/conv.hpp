#pragma once

// Convolutions.
//
// conv0 is the one-sided (causal) convolution (a * b)(k) = sum_{j=0}^{k} a(k-j) b(j).
//
// weyl_conv is the one-sided smoothing of a doubly-infinite sequence,
// (a o u)(v) = sum_{l <= v} a(v-l) u(l).  The infinite lower limit is truncated
// at the stored window and the neglected part is *bounded*, never guessed: the
// kernel must produce a tail bound compatible with the sequence's declared
// left decay, otherwise the computation refuses.

#include "voldisc/core.hpp"
#include "voldisc/kernels.hpp"
#include "voldisc/sequence.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace voldisc {

template <class S>
std::vector<S> conv0(const std::vector<S>& a, const std::vector<S>& b) {
  if (a.empty() || b.empty()) throw argument_error("conv0: empty operand");
  std::size_t n = std::min(a.size(), b.size());
  std::vector<S> out(n, S(0));
  for (std::size_t k = 0; k < n; ++k) {
    S acc(0);
    for (std::size_t j = 0; j <= k; ++j) acc += a[k - j] * b[j];
    out[k] = acc;
  }
  return out;
}

template <class S>
S conv0_at(const std::vector<S>& a, const std::vector<S>& b, long k) {
  if (k < 0) throw argument_error("conv0_at: negative index");
  S acc(0);
  for (long j = 0; j <= k; ++j) {
    std::size_t ia = static_cast<std::size_t>(k - j), ib = static_cast<std::size_t>(j);
    if (ia < a.size() && ib < b.size()) acc += a[ia] * b[ib];
  }
  return acc;
}

// scalar kernel against a matrix-valued grid sequence
template <class S>
GridSequence<S> conv0(const std::vector<S>& a, const GridSequence<S>& u) {
  if (u.horizon() < 0) throw argument_error("conv0: empty sequence");
  long n = std::min<long>(static_cast<long>(a.size()) - 1, u.horizon());
  GridSequence<S> out = GridSequence<S>::zeros(n, u.rows(), u.cols());
  for (long k = 0; k <= n; ++k) {
    Mat<S> acc = Mat<S>::Zero(u.rows(), u.cols());
    for (long j = 0; j <= k; ++j) acc += a[static_cast<std::size_t>(k - j)] * u.at(j);
    out.values[static_cast<std::size_t>(k)] = acc;
  }
  return out;
}

// matrix-valued kernel against matrix- or vector-valued sequence
template <class S>
GridSequence<S> conv0(const GridSequence<S>& a, const GridSequence<S>& b) {
  long n = std::min(a.horizon(), b.horizon());
  if (n < 0) throw argument_error("conv0: empty operand");
  auto shape = mul_shape(a.at(0), b.at(0));
  GridSequence<S> out = GridSequence<S>::zeros(n, shape.first, shape.second);
  for (long k = 0; k <= n; ++k) {
    Mat<S> acc = Mat<S>::Zero(shape.first, shape.second);
    for (long j = 0; j <= k; ++j) acc += mul(a.at(k - j), b.at(j));
    out.values[static_cast<std::size_t>(k)] = acc;
  }
  return out;
}

namespace detail {

// Bound on sum_{s>=1} |a(J+s)| * ||u(lo-s)|| from the kernel's tail machinery
// and the sequence's declared decay.  J = v - lo.
template <class S>
double weyl_tail_bound(const KernelSpec<S>& a, const Decay& d, long J) {
  switch (d.kind) {
    case Decay::Kind::Zero:
      return 0.0;
    case Decay::Kind::Geometric: {
      auto t = a.geometric_tail(J, d.rate);
      if (!t)
        throw certificate_error(
            "weyl_conv: kernel tail does not converge against the declared geometric decay (" +
            a.describe() + ", rate " + std::to_string(d.rate) + ")");
      return d.bound * *t;
    }
    case Decay::Kind::Algebraic: {
      auto t = a.algebraic_tail(J, d.exponent);
      if (!t)
        throw certificate_error(
            "weyl_conv: kernel tail does not converge against the declared algebraic decay (" +
            a.describe() + ")");
      return d.bound * *t;
    }
  }
  throw argument_error("weyl_conv: unknown decay kind");
}

}  // namespace detail

// Single value of (a o u)(v) with a certified truncation bound written to
// *tail_out (if non-null).  Requires v <= u.hi(); refuses without a decay
// declaration on u.
template <class S>
Mat<S> weyl_conv_at(const KernelSpec<S>& a, const BiSequence<S>& u, long v,
                    double* tail_out = nullptr) {
  if (v > u.hi())
    throw certificate_error("weyl_conv: evaluation index " + std::to_string(v) +
                            " exceeds the stored window (hi = " + std::to_string(u.hi()) + ")");
  if (!u.decay)
    throw certificate_error(
        "weyl_conv: sequence carries no left-decay declaration; cannot bound the truncated tail");
  long J = v - u.lo;
  Mat<S> acc = Mat<S>::Zero(u.rows(), u.cols());
  for (long l = u.lo; l <= v; ++l) acc += a.eval(v - l) * u.at(l);
  double tail;
  if (J < 0) {
    // the whole sum lies below the window; a(w) with w = v-l < ... still >= 0
    // only for l <= v, all below lo: bound sum_{s > -J-1 ... } via s = lo - l
    if (u.decay->kind == Decay::Kind::Zero) {
      tail = 0.0;
    } else {
      throw certificate_error(
          "weyl_conv: evaluation index lies entirely below the stored window; only an exact-zero "
          "left extension supports this");
    }
  } else {
    tail = detail::weyl_tail_bound(a, *u.decay, J);
  }
  if (tail_out) *tail_out = tail;
  return acc;
}

template <class S>
struct WeylResult {
  BiSequence<S> seq;
  double tail_bound = 0.0;  // max over computed indices of the neglected-part bound
};

// (a o u) on the window [lo_out, hi_out], hi_out <= u.hi().
template <class S>
WeylResult<S> weyl_conv(const KernelSpec<S>& a, const BiSequence<S>& u, long lo_out, long hi_out) {
  if (lo_out > hi_out) throw argument_error("weyl_conv: empty output window");
  WeylResult<S> r;
  r.seq = BiSequence<S>::zeros(lo_out, hi_out, u.rows(), u.cols());
  for (long v = lo_out; v <= hi_out; ++v) {
    double t = 0.0;
    r.seq.values[static_cast<std::size_t>(v - lo_out)] = weyl_conv_at(a, u, v, &t);
    r.tail_bound = std::max(r.tail_bound, t);
  }
  // propagate a left-decay declaration for the output where it is justified
  if (u.decay) {
    if (u.decay->kind == Decay::Kind::Zero && lo_out <= u.lo) {
      // below u.lo the input vanishes exactly and so does the convolution
      r.seq.decay = Decay::zero();
    } else if (u.decay->kind == Decay::Kind::Geometric) {
      // ||(a o u)(lo_out - s)|| <= M rho^(lo_out - u.lo + s) * sum_w |a(w)| rho^w
      auto t0 = a.geometric_tail(0, u.decay->rate);
      if (t0) {
        double front = abs_of(a.eval(0)) + *t0;
        double offset = std::pow(u.decay->rate, static_cast<double>(lo_out - u.lo));
        r.seq.decay = Decay::geometric(u.decay->rate, u.decay->bound * front * offset);
      }
    }
  }
  return r;
}

// Pointwise damping u(v) -> e^(-rate (v - shift)) u(v) with the decay
// declaration transformed (or dropped when no longer certifiable).
template <class S>
BiSequence<S> exp_weight(const BiSequence<S>& u, double rate, double shift = 0.0) {
  BiSequence<S> w = u;
  if (rate != 0.0) w.constant = false;
  for (long v = u.lo; v <= u.hi(); ++v)
    w.values[static_cast<std::size_t>(v - u.lo)] =
        u.at(v) * S(std::exp(-rate * (static_cast<double>(v) - shift)));
  w.decay.reset();
  if (u.decay) {
    double at_lo = std::exp(-rate * (static_cast<double>(u.lo) - shift));
    switch (u.decay->kind) {
      case Decay::Kind::Zero:
        w.decay = Decay::zero();
        break;
      case Decay::Kind::Geometric: {
        double r2 = u.decay->rate * std::exp(rate);
        if (r2 < 1.0) w.decay = Decay::geometric(r2, u.decay->bound * at_lo);
        break;
      }
      case Decay::Kind::Algebraic:
        if (rate <= 0.0)
          w.decay = Decay::algebraic(u.decay->exponent, u.decay->bound * at_lo);
        break;
    }
  }
  return w;
}

template <class S>
GridSequence<S> exp_weight(const GridSequence<S>& u, double rate, double shift = 0.0) {
  GridSequence<S> w = u;
  for (long v = 0; v <= u.horizon(); ++v)
    w.values[static_cast<std::size_t>(v)] =
        u.at(v) * S(std::exp(-rate * (static_cast<double>(v) - shift)));
  return w;
}

}  // namespace voldisc
