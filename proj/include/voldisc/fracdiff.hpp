#pragma once

// Discrete fractional calculus on grid and doubly-infinite sequences:
// forward differences, fractional sums, Riemann-Liouville differences
// (Delta^m after a fractional sum), and Weyl differences (one-sided smoothing
// over all l <= v, truncation-certified through the sequence's declared
// decay).  Windows shrink explicitly: each operator returns its valid range.

#include "voldisc/conv.hpp"
#include "voldisc/core.hpp"
#include "voldisc/kernels.hpp"
#include "voldisc/sequence.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

namespace voldisc {

struct FracOrder {
  double alpha = 1.0;
  int m = 1;  // ceil(alpha)

  static FracOrder of(double alpha) {
    if (!(alpha > 0)) throw argument_error("FracOrder: order must be > 0");
    FracOrder f;
    f.alpha = alpha;
    f.m = static_cast<int>(std::ceil(alpha));
    return f;
  }

  bool integer() const { return alpha == static_cast<double>(m); }
};

namespace detail {

inline std::vector<double> binomial_row(int m) {
  std::vector<double> b(static_cast<std::size_t>(m) + 1);
  b[0] = 1.0;
  for (int j = 1; j <= m; ++j) b[static_cast<std::size_t>(j)] =
      b[static_cast<std::size_t>(j - 1)] * (m - j + 1) / static_cast<double>(j);
  return b;
}

}  // namespace detail

// (Delta^m u)(v) = sum_j (-1)^(m-j) binom(m,j) u(v+j); horizon shrinks by m.
template <class S>
GridSequence<S> forward_diff(const GridSequence<S>& u, int m) {
  if (m < 0) throw argument_error("forward_diff: order must be >= 0");
  if (u.horizon() < m) throw argument_error("forward_diff: horizon shorter than the order");
  if (m == 0) return u;
  auto b = detail::binomial_row(m);
  GridSequence<S> out = GridSequence<S>::zeros(u.horizon() - m, u.rows(), u.cols());
  for (long v = 0; v <= out.horizon(); ++v) {
    Mat<S> acc = Mat<S>::Zero(u.rows(), u.cols());
    for (int j = 0; j <= m; ++j) {
      double sign = ((m - j) % 2 == 0) ? 1.0 : -1.0;
      acc += sign * b[static_cast<std::size_t>(j)] * u.at(v + j);
    }
    out.values[static_cast<std::size_t>(v)] = acc;
  }
  return out;
}

// Window version.  A zero left extension is differenced exactly, so the
// window extends m steps to the left; other declared decays are transformed
// into a sound (if coarser) declaration on the result.
template <class S>
BiSequence<S> forward_diff(const BiSequence<S>& u, int m) {
  if (m < 0) throw argument_error("forward_diff: order must be >= 0");
  if (m == 0) return u;
  if (static_cast<long>(u.values.size()) <= m)
    throw argument_error("forward_diff: window shorter than the order");
  auto b = detail::binomial_row(m);

  if (u.constant) {
    BiSequence<S> out = BiSequence<S>::zeros(u.lo, u.hi() - m, u.rows(), u.cols());
    out.constant = true;
    out.decay = Decay::zero();
    return out;
  }

  bool zero_ext = u.decay && u.decay->kind == Decay::Kind::Zero;
  long lo_out = zero_ext ? u.lo - m : u.lo;
  BiSequence<S> out = BiSequence<S>::zeros(lo_out, u.hi() - m, u.rows(), u.cols());
  for (long v = lo_out; v <= out.hi(); ++v) {
    Mat<S> acc = Mat<S>::Zero(u.rows(), u.cols());
    for (int j = 0; j <= m; ++j) {
      long idx = v + j;
      if (!u.contains(idx)) continue;  // exact zero below the window
      double sign = ((m - j) % 2 == 0) ? 1.0 : -1.0;
      acc += sign * b[static_cast<std::size_t>(j)] * u.at(idx);
    }
    out.values[static_cast<std::size_t>(v - lo_out)] = acc;
  }

  if (zero_ext) {
    out.decay = Decay::zero();
  } else if (u.decay) {
    // ||out(lo_out - s)|| <= sum_j binom(m,j) * bound_u(lo_out - s + j)
    auto bound_at_s = [&](long s) {
      double acc = 0.0;
      for (int j = 0; j <= m; ++j) acc += b[static_cast<std::size_t>(j)] *
                                          u.norm_bound_at(lo_out - s + j);
      return acc;
    };
    if (u.decay->kind == Decay::Kind::Geometric) {
      double rho = u.decay->rate;
      double M2 = u.decay->bound * std::pow(1.0 + 1.0 / rho, static_cast<double>(m));
      for (long s = 1; s <= m; ++s)
        M2 = std::max(M2, bound_at_s(s) / std::pow(rho, static_cast<double>(s)));
      out.decay = Decay::geometric(rho, M2);
    } else if (u.decay->kind == Decay::Kind::Algebraic) {
      double p = u.decay->exponent;
      double M2 = u.decay->bound * std::pow(2.0, static_cast<double>(m)) *
                  std::pow(static_cast<double>(m) + 1.0, p);
      for (long s = 1; s <= m; ++s)
        M2 = std::max(M2, bound_at_s(s) * std::pow(1.0 + static_cast<double>(s), p));
      out.decay = Decay::algebraic(p, M2);
    }
  }
  return out;
}

// Fractional sum (Delta^(-alpha) u)(v) = sum_{j<=v} k^alpha(v-j) u(j).
template <class S>
GridSequence<S> frac_sum(const GridSequence<S>& u, double alpha) {
  if (!(alpha > 0)) throw argument_error("frac_sum: order must be > 0");
  std::vector<S> kv(static_cast<std::size_t>(u.horizon()) + 1);
  for (long v = 0; v <= u.horizon(); ++v)
    kv[static_cast<std::size_t>(v)] = S(cesaro_kernel(alpha, v));
  return conv0(kv, u);
}

// Riemann-Liouville difference: Delta^m applied to the order-(m-alpha) sum.
template <class S>
GridSequence<S> rl_frac_diff(const GridSequence<S>& u, const FracOrder& a) {
  if (u.horizon() < a.m) throw argument_error("rl_frac_diff: horizon shorter than ceil(alpha)");
  if (a.integer()) return forward_diff(u, a.m);
  return forward_diff(frac_sum(u, static_cast<double>(a.m) - a.alpha), a.m);
}

template <class S>
struct WeylResultSeq {
  BiSequence<S> seq;
  double tail_bound = 0.0;
};

// Weyl fractional sum (Delta_W^(-beta) u)(v) = sum_{l<=v} k^beta(v-l) u(l),
// beta in (0, 1); refuses constants (the sum genuinely diverges there -- the
// full Weyl difference handles constants exactly instead).
template <class S>
WeylResultSeq<S> weyl_frac_sum(const BiSequence<S>& u, double beta) {
  if (!(beta > 0) || beta >= 1.0)
    throw argument_error("weyl_frac_sum: order must lie in (0, 1)");
  if (u.constant)
    throw certificate_error(
        "weyl_frac_sum: the fractional sum of a constant diverges; use the composite Weyl "
        "difference, which evaluates constants exactly");
  auto r = weyl_conv(KernelSpec<S>::cesaro(beta), u, u.lo, u.hi());
  return {std::move(r.seq), r.tail_bound};
}

// Weyl fractional difference of order alpha: the one-sided smoothing against
// the alternating-binomial Cesaro combination, read off at v + m.  Constants
// are annihilated exactly; everything else requires a decay declaration.
template <class S>
WeylResultSeq<S> weyl_frac_diff(const BiSequence<S>& u, const FracOrder& a) {
  if (static_cast<long>(u.values.size()) <= a.m)
    throw argument_error("weyl_frac_diff: window shorter than ceil(alpha)");
  if (u.constant) {
    BiSequence<S> out = BiSequence<S>::zeros(u.lo, u.hi() - a.m, u.rows(), u.cols());
    out.constant = true;
    out.decay = Decay::zero();
    return {std::move(out), 0.0};
  }
  if (a.integer()) return {forward_diff(u, a.m), 0.0};
  if (!u.decay)
    throw certificate_error(
        "weyl_frac_diff: no decay declared; the doubly-infinite sum cannot be truncation-"
        "certified (summability hypothesis unverifiable)");
  bool zero_ext = u.decay->kind == Decay::Kind::Zero;
  long lo_out = zero_ext ? u.lo - a.m : u.lo;
  auto shifted = u.shifted(-a.m);  // evaluation index v reads data up to v + m
  auto r = weyl_conv(KernelSpec<S>::weyl_frac(a.alpha), shifted, lo_out, u.hi() - a.m);
  return {std::move(r.seq), r.tail_bound};
}

struct CommutationReport {
  double defect = 0.0;       // max difference of the two evaluation orders
  double certificate = 0.0;  // sum of the two routes' truncation bounds
  long window_lo = 0, window_hi = 0;
};

// Defect of Delta^m (Delta_W^(-(m-alpha)) u) against Delta_W^(-(m-alpha)) (Delta^m u)
// on the common window; sound only up to the combined truncation bounds.
template <class S>
CommutationReport weyl_commutation_defect(const BiSequence<S>& u, const FracOrder& a) {
  CommutationReport rep;
  if (u.constant) {
    rep.window_lo = u.lo;
    rep.window_hi = u.hi() - a.m;
    return rep;  // both orders vanish exactly
  }
  if (a.integer()) {
    rep.window_lo = u.lo;
    rep.window_hi = u.hi() - a.m;
    return rep;  // both orders are the same finite sum
  }
  double beta = static_cast<double>(a.m) - a.alpha;
  auto sum_first = weyl_frac_sum(u, beta);
  BiSequence<S> route_a = forward_diff(sum_first.seq, a.m);
  BiSequence<S> diff_first = forward_diff(u, a.m);
  auto route_b = weyl_frac_sum(diff_first, beta);

  rep.window_lo = std::max(route_a.lo, route_b.seq.lo);
  rep.window_hi = std::min(route_a.hi(), route_b.seq.hi());
  if (rep.window_lo > rep.window_hi)
    throw argument_error("weyl_commutation_defect: empty common window");
  for (long v = rep.window_lo; v <= rep.window_hi; ++v)
    rep.defect = std::max(rep.defect, frobenius_norm(Mat<S>(route_a.at(v) - route_b.seq.at(v))));
  // route A smooths first and differences after; the m-fold difference blows
  // the per-index truncation bound up by at most the binomial mass 2^m
  rep.certificate = sum_first.tail_bound * std::pow(2.0, a.m) + route_b.tail_bound;
  return rep;
}

// h with Delta^m h = u: m-fold exclusive cumulative sums from the left window
// edge, plus the polynomial of degree < m pinned by the anchor values
// h(edge), ..., h(edge + m - 1).
template <class S>
GridSequence<S> antidifference(const GridSequence<S>& u, int m,
                               const std::vector<Mat<S>>& anchors) {
  if (m < 0) throw argument_error("antidifference: order must be >= 0");
  if (m == 0) return u;
  if (static_cast<int>(anchors.size()) != m)
    throw argument_error("antidifference: need exactly m anchor values");
  if (u.horizon() + 1 < m) throw argument_error("antidifference: window too short");

  GridSequence<S> h = u;
  for (int r = 0; r < m; ++r) {
    GridSequence<S> c = GridSequence<S>::zeros(h.horizon(), h.rows(), h.cols());
    Mat<S> acc = Mat<S>::Zero(h.rows(), h.cols());
    for (long v = 0; v <= h.horizon(); ++v) {
      c.values[static_cast<std::size_t>(v)] = acc;  // exclusive: sum_{j < v}
      acc += h.at(v);
    }
    h = std::move(c);
  }

  // Vandermonde in x = v: coefficients c_r with sum_r c_r x^r matching the
  // anchor corrections at x = 0..m-1.
  Eigen::MatrixXd V(m, m);
  for (int i = 0; i < m; ++i)
    for (int r = 0; r < m; ++r) V(i, r) = std::pow(static_cast<double>(i), r);
  Eigen::MatrixXd Vinv = V.inverse();
  std::vector<Mat<S>> coeff(static_cast<std::size_t>(m), Mat<S>::Zero(u.rows(), u.cols()));
  for (int r = 0; r < m; ++r)
    for (int i = 0; i < m; ++i)
      coeff[static_cast<std::size_t>(r)] +=
          Vinv(r, i) * Mat<S>(anchors[static_cast<std::size_t>(i)] - h.at(i));
  for (long v = 0; v <= h.horizon(); ++v) {
    double x = static_cast<double>(v);
    Mat<S> p = Mat<S>::Zero(u.rows(), u.cols());
    for (int r = m - 1; r >= 0; --r) p = Mat<S>(x * p + coeff[static_cast<std::size_t>(r)]);
    h.values[static_cast<std::size_t>(v)] += p;
  }
  return h;
}

template <class S>
BiSequence<S> antidifference(const BiSequence<S>& u, int m, const std::vector<Mat<S>>& anchors) {
  GridSequence<S> g;
  g.values = u.values;
  GridSequence<S> h = antidifference(g, m, anchors);
  BiSequence<S> out;
  out.values = std::move(h.values);
  out.lo = u.lo;
  return out;
}

}  // namespace voldisc
