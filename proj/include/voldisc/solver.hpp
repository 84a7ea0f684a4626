#pragma once
// Solution construction by Weyl convolution against an existence family:
// lag-correction terms, exponential weighting, residual verification of the
// satisfied identities, and the N0 Cauchy-problem solution forms.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "voldisc/conv.hpp"
#include "voldisc/core.hpp"
#include "voldisc/fracdiff.hpp"
#include "voldisc/kernels.hpp"
#include "voldisc/resolvent.hpp"
#include "voldisc/sequence.hpp"

namespace voldisc {

// Per-index identity residuals with the certified truncation tails kept
// separate: a check passes when every residual is below tol plus its tail.
struct SolutionResidualReport {
  long lo = 0;
  std::vector<double> residual;
  std::vector<double> tail;
  double max_residual = 0.0;
  double max_tail = 0.0;
  double tol = 0.0;
  bool pass = false;

  void finish(double tolerance) {
    tol = tolerance;
    max_residual = 0.0;
    max_tail = 0.0;
    pass = true;
    for (std::size_t i = 0; i < residual.size(); ++i) {
      max_residual = std::max(max_residual, residual[i]);
      max_tail = std::max(max_tail, tail[i]);
      if (residual[i] > tolerance + tail[i]) pass = false;
    }
  }
};

namespace detail {

// Mass of sum_v ||S(v)|| beyond the stored horizon, from a certificate.
inline double family_remainder(const std::vector<double>& norm_partial,
                               const SummabilityCertificate& cert) {
  double partial = norm_partial.empty() ? 0.0 : norm_partial.back();
  return std::max(0.0, cert.total_bound - partial);
}

}  // namespace detail

// Single value of (S o f)(v) = sum_{l <= v} S(v-l) f(l) for a matrix family
// stored on [0, horizon], with a certified bound on everything omitted: the
// below-window part of f (through its decay declaration) and the family mass
// beyond the horizon (through the summability certificate).
template <class S>
Mat<S> family_weyl_conv_at(const ExistenceFamily<S>& family, const SummabilityCertificate& cert,
                           const BiSequence<S>& f, long v, double* tail_out = nullptr) {
  long H = family.horizon();
  double rem = detail::family_remainder(family.norm_partial, cert);
  auto snorm = [&](long j) {
    return family.norm_partial[static_cast<std::size_t>(j)] -
           (j > 0 ? family.norm_partial[static_cast<std::size_t>(j - 1)] : 0.0);
  };

  if (f.constant) {
    const Mat<S>& x = f.values.front();
    Mat<S> acc = Mat<S>::Zero(family.S_seq.rows(), x.cols());
    for (long j = 0; j <= H; ++j) acc += family.S_seq.at(j) * x;
    if (tail_out) *tail_out = rem * frobenius_norm(x);
    return acc;
  }
  if (v > f.hi())
    throw certificate_error("family convolution: forcing values are needed up to index " +
                            std::to_string(v));
  if (!f.decay)
    throw certificate_error("family convolution: forcing carries no decay declaration");

  long J = v - f.lo;
  Mat<S> acc = Mat<S>::Zero(family.S_seq.rows(), f.cols());
  long jtop = std::min(J, H);
  for (long j = 0; j <= jtop; ++j) acc += family.S_seq.at(j) * f.at(v - j);

  double tail = 0.0;
  if (J > H) {
    // family values beyond the horizon hit stored forcing entries
    double fmax = 0.0;
    for (long j = H + 1; j <= J; ++j) fmax = std::max(fmax, frobenius_norm(f.at(v - j)));
    tail += rem * fmax;
  }
  if (f.decay->kind != Decay::Kind::Zero) {
    long s_first = std::max<long>(1, -J);
    for (long s = s_first; J + s <= H; ++s) tail += snorm(J + s) * f.decay->value_bound(s);
    long s_rem = std::max(s_first, H - J + 1);
    tail += rem * f.decay->value_bound(s_rem);
  }
  if (tail_out) *tail_out = tail;
  return acc;
}

// u(v) = sum_{l <= v} S(v-l) f(l) on [lo, hi].  Requires a summability
// certificate; per-v truncation tails are written to *tails when requested.
template <class S>
BiSequence<S> weyl_solution(const ExistenceFamily<S>& family, const SummabilityCertificate& cert,
                            const BiSequence<S>& f, long lo, long hi,
                            std::vector<double>* tails = nullptr) {
  if (!cert.certified)
    throw certificate_error(
        "weyl_solution: the family carries no summability certificate (margin " +
        format_real(cert.margin) + "); refusing the doubly-infinite sum");
  if (hi < lo) throw argument_error("weyl_solution: empty output window");
  BiSequence<S> u;
  u.lo = lo;
  u.values.reserve(static_cast<std::size_t>(hi - lo) + 1);
  if (tails) tails->clear();
  for (long v = lo; v <= hi; ++v) {
    double t = 0.0;
    u.values.push_back(family_weyl_conv_at(family, cert, f, v, &t));
    if (tails) tails->push_back(t);
  }
  if (f.constant) {
    u.constant = true;
  } else if (f.decay && lo <= f.lo) {
    switch (f.decay->kind) {
      case Decay::Kind::Zero:
        u.decay = Decay::zero();
        break;
      case Decay::Kind::Geometric:
        u.decay = Decay::geometric(
            f.decay->rate, cert.total_bound * f.decay->bound *
                               std::pow(f.decay->rate, static_cast<double>(f.lo - lo)));
        break;
      case Decay::Kind::Algebraic:
        u.decay = Decay::algebraic(f.decay->exponent, cert.total_bound * f.decay->bound);
        break;
    }
  }
  return u;
}

// The finite lag-correction sums, in their literal (positive) form:
//   sum_i A_i sum_{l=v+1}^{v+v_i} (a_i *0 S)(v+v_i-l) f(l).
// Identically zero when all lags vanish.  The additive term appearing in the
// satisfied identity is the negative of this.
template <class S>
BiSequence<S> correction_g(const ProblemSpec<S>& spec, const ExistenceFamily<S>& family,
                           const BiSequence<S>& f, long lo, long hi) {
  spec.validate();
  if (hi < lo) throw argument_error("correction_g: empty output window");
  long vmax = spec.v_max();
  Eigen::Index fcols = f.values.empty() ? spec.C.cols() : f.cols();
  BiSequence<S> g = BiSequence<S>::zeros(lo, hi, spec.dim(), fcols);
  if (vmax == 0) {
    g.decay = Decay::zero();
    return g;  // empty sums, exactly zero
  }
  if (!f.constant && f.hi() < hi + vmax)
    throw argument_error("correction_g: forcing window must extend v_max past the output window");
  auto f_at = [&](long l) -> const Mat<S>& {
    return f.constant ? f.values.front() : f.at(l);
  };
  for (long i = 0; i < spec.n(); ++i) {
    long vi = spec.lags[static_cast<std::size_t>(i)];
    if (vi == 0) continue;
    const auto& ai = spec.kernels[static_cast<std::size_t>(i)];
    const Mat<S>& Ai = spec.As[static_cast<std::size_t>(i)];
    // prefix convolutions (a_i *0 S)(r) for r < v_i
    std::vector<Mat<S>> conv(static_cast<std::size_t>(vi));
    for (long r = 0; r < vi; ++r) {
      Mat<S> acc = Mat<S>::Zero(spec.dim(), spec.dim());
      for (long j = 0; j <= r; ++j) acc += ai.eval(r - j) * family.S_seq.at(j);
      conv[static_cast<std::size_t>(r)] = acc;
    }
    for (long v = lo; v <= hi; ++v)
      for (long l = v + 1; l <= v + vi; ++l)
        g.values[static_cast<std::size_t>(v - lo)] +=
            Ai * conv[static_cast<std::size_t>(v + vi - l)] * f_at(l);
  }
  if (f.constant)
    g.constant = true;
  else if (f.decay && f.decay->kind == Decay::Kind::Zero && lo + vmax <= f.lo)
    g.decay = Decay::zero();
  return g;
}

// f composed with a fixed matrix on the left; decay bound scales accordingly.
template <class S>
BiSequence<S> apply_matrix(const Mat<S>& m, const BiSequence<S>& f) {
  BiSequence<S> out = f;
  for (auto& x : out.values) x = m * x;
  if (out.decay && out.decay->kind != Decay::Kind::Zero) out.decay->bound *= spectral_norm(m);
  return out;
}

// Residuals of  B u(v) = sum_i A_i (a_i o u)(v + v_i) + (k o Cf)(v) + g(v)
// over [lo, hi].  g is the additive correction term of the identity.
template <class S>
SolutionResidualReport verify_multiterm(const ProblemSpec<S>& spec, const BiSequence<S>& f,
                                        const BiSequence<S>& u, const BiSequence<S>& g, long lo,
                                        long hi, double tol) {
  spec.validate();
  if (!spec.autonomous())
    throw argument_error("verify_multiterm: requires an autonomous left side");
  SolutionResidualReport rep;
  rep.lo = lo;
  BiSequence<S> cf = apply_matrix(spec.C, f);
  const Mat<S>& B = spec.Bs[0];
  for (long v = lo; v <= hi; ++v) {
    double tails = 0.0, t = 0.0;
    Mat<S> r = B * u.at(v);
    r -= weyl_conv_at(spec.k, cf, v, &t);
    tails += t;
    for (long i = 0; i < spec.n(); ++i) {
      const Mat<S>& Ai = spec.As[static_cast<std::size_t>(i)];
      r -= Ai * weyl_conv_at(spec.kernels[static_cast<std::size_t>(i)], u,
                             v + spec.lags[static_cast<std::size_t>(i)], &t);
      tails += spectral_norm(Ai) * t;
    }
    r -= g.constant ? g.values.front() : g.at(v);
    rep.residual.push_back(frobenius_norm(r));
    rep.tail.push_back(tails);
  }
  rep.finish(tol);
  return rep;
}

// Zero-lag form B u(v) = (k o Cf)(v) + sum_i A_i (a_i o u)(v).
template <class S>
SolutionResidualReport verify_nonscalar_solution(const ProblemSpec<S>& spec,
                                                 const BiSequence<S>& f, const BiSequence<S>& u,
                                                 long lo, long hi, double tol) {
  if (spec.v_max() != 0)
    throw precondition_error("verify_nonscalar_solution: requires all lags zero");
  Eigen::Index fcols = f.values.empty() ? spec.C.cols() : f.cols();
  BiSequence<S> g = BiSequence<S>::zeros(lo, hi, spec.dim(), fcols);
  g.decay = Decay::zero();
  return verify_multiterm(spec, f, u, g, lo, hi, tol);
}

// Everything a constructed solution carries: values, correction, the weight
// used (if any), the weighted copies, residuals and construction tails.
template <class S>
struct SolutionBundle {
  BiSequence<S> u;   // solution values
  BiSequence<S> g;   // additive correction in the satisfied identity
  std::optional<double> weight;
  BiSequence<S> u_weighted;  // e^{-omega v} u(v) when weighted
  BiSequence<S> g_weighted;
  SolutionResidualReport residual_report;
  std::vector<double> construction_tails;
};

// Build u on [lo, hi] by Weyl convolution, assemble the correction term on
// the interior [lo, hi - v_max], and verify the identity there.
template <class S>
SolutionBundle<S> solve_bundle(const ProblemSpec<S>& spec, const ExistenceFamily<S>& family,
                               const SummabilityCertificate& cert, const BiSequence<S>& f,
                               long lo, long hi, double tol) {
  long vtop = hi - spec.v_max();
  if (vtop < lo) throw argument_error("solve_bundle: window too short for the lag depth");
  SolutionBundle<S> b;
  b.u = weyl_solution(family, cert, f, lo, hi, &b.construction_tails);
  b.g = correction_g(spec, family, f, lo, vtop);
  for (auto& m : b.g.values) m = -m;
  b.residual_report = verify_multiterm(spec, f, b.u, b.g, lo, vtop, tol);
  return b;
}

// Problem data with every sequence exponentially re-weighted: kernels
// e^{-omega w} a_i(w), matrices e^{omega v_i} A_i, kernel e^{-omega v} k(v).
template <class S>
ProblemSpec<S> weighted_problem(const ProblemSpec<S>& spec, double omega) {
  ProblemSpec<S> w = spec;
  for (auto& kk : w.kernels) kk = kk.exp_weighted(omega);
  w.k = w.k.exp_weighted(omega);
  for (std::size_t i = 0; i < w.As.size(); ++i)
    w.As[i] = Mat<S>(spec.As[i] *
                     S(std::exp(omega * static_cast<double>(spec.lags[i]))));
  return w;
}

// The family for the weighted problem: S_omega(v) = e^{-omega v} S(v).
template <class S>
ExistenceFamily<S> weighted_family(const ProblemSpec<S>& weighted_spec,
                                   const ExistenceFamily<S>& family, double omega) {
  ExistenceFamily<S> wf;
  long H = family.horizon();
  wf.S_seq.values.reserve(static_cast<std::size_t>(H) + 1);
  for (long v = 0; v <= H; ++v)
    wf.S_seq.values.push_back(
        Mat<S>(family.S_seq.at(v) * S(std::exp(-omega * static_cast<double>(v)))));
  detail::fill_AiS(weighted_spec, wf);
  detail::fill_norm_partial(wf);
  wf.construction_residual = family.construction_residual;
  return wf;
}

// Last-decade growth-rate estimate of ||S(v)||: the smallest weight making
// e^{-omega v} S(v) geometrically summable is about ln of the per-step ratio.
template <class S>
double minimal_weight_estimate(const ExistenceFamily<S>& family) {
  long V = family.horizon();
  long D = std::max<long>(1, V / 10);
  if (V <= D) return 0.0;
  double tv = frobenius_norm(family.S_seq.at(V));
  double tp = frobenius_norm(family.S_seq.at(V - D));
  if (!(tv > 0.0) || !(tp > 0.0)) return 0.0;
  return std::max(0.0, std::log(std::pow(tv / tp, 1.0 / static_cast<double>(D))));
}

// Weighted summability certificate for a Poisson-discretized family whose
// continuous source satisfies ||reg(t)|| <= M e^{rate t} (values T(t) =
// t^sigma reg(t)).  Then ||S(v)|| <= M |w|^v Gamma(v+sigma+1) / (v! (a-rate)^{v+sigma+1})
// and, writing x = |w| e^{-weight} / (a - rate),
//   sum_v e^{-weight v} ||S(v)|| <= M Gamma(sigma+1) (a-rate)^{-(sigma+1)} (1-x)^{-(sigma+1)}.
// Certified iff x < 1, i.e. weight > ln(|w| / (a - rate)).
inline SummabilityCertificate poisson_growth_certificate(double M, double rate, double a,
                                                         double omega_transform, double sigma,
                                                         double weight) {
  if (!(a > rate)) throw argument_error("poisson_growth_certificate: requires a > rate");
  if (!(sigma > -1.0)) throw argument_error("poisson_growth_certificate: requires sigma > -1");
  if (!(M >= 0.0)) throw argument_error("poisson_growth_certificate: negative bound");
  SummabilityCertificate cert;
  cert.criterion = SummabilityCertificate::Criterion::growth;
  double x = std::abs(omega_transform) * std::exp(-weight) / (a - rate);
  cert.margin = 1.0 - x;
  if (x < 1.0) {
    cert.total_bound = M * std::exp(std::lgamma(sigma + 1.0)) *
                       std::pow(a - rate, -(sigma + 1.0)) * std::pow(1.0 - x, -(sigma + 1.0));
    cert.certified = true;
  } else {
    cert.total_bound = std::numeric_limits<double>::infinity();
  }
  return cert;
}

// Smallest weight for which the growth-based certificate above certifies.
inline double poisson_minimal_weight(double omega_transform, double a, double rate) {
  if (!(a > rate)) throw argument_error("poisson_minimal_weight: requires a > rate");
  return std::max(0.0, std::log(std::abs(omega_transform) / (a - rate)));
}

// Construct the solution through the exponentially weighted problem: solve
// with kernels/matrices/forcing re-weighted by omega (where the certificate
// lives), then map the values back by e^{omega v}.  The verified residual
// report is the weighted-form identity; the physical identity is the same
// report rescaled by e^{omega v} per index.
template <class S>
SolutionBundle<S> exp_weighted_solution(const ProblemSpec<S>& spec,
                                        const ExistenceFamily<S>& family, const BiSequence<S>& f,
                                        double omega, const SummabilityCertificate& weighted_cert,
                                        long lo, long hi, double tol) {
  if (!(omega >= 0.0)) throw argument_error("exp_weighted_solution: weight must be >= 0");
  if (!weighted_cert.certified)
    throw certificate_error(
        "exp_weighted_solution: weighted summability not certified (margin " +
        format_real(weighted_cert.margin) + "); minimal passing weight is about " +
        format_real(minimal_weight_estimate(family)) + " from the family growth rate");
  if (omega == 0.0) {
    SolutionBundle<S> b = solve_bundle(spec, family, weighted_cert, f, lo, hi, tol);
    b.weight = 0.0;
    b.u_weighted = b.u;
    b.g_weighted = b.g;
    return b;
  }
  ProblemSpec<S> wspec = weighted_problem(spec, omega);
  ExistenceFamily<S> wfam = weighted_family(wspec, family, omega);
  BiSequence<S> wf = exp_weight(f, omega);
  SolutionBundle<S> b = solve_bundle(wspec, wfam, weighted_cert, wf, lo, hi, tol);
  SolutionBundle<S> out;
  out.weight = omega;
  out.u_weighted = b.u;
  out.g_weighted = b.g;
  out.u = exp_weight(b.u, -omega);
  out.g = exp_weight(b.g, -omega);
  out.residual_report = b.residual_report;
  out.construction_tails = std::move(b.construction_tails);
  return out;
}

// Weyl fractional-difference form of the identity.  Two kernel conventions:
//  - composite difference kernels (WeylFrac / Delta): the plain identity is
//    already the Weyl form,
//      B u(v) = sum_i A_i (D^{alpha_i}_W u)(v + v_i - m_i) + (k o Cf)(v) + g(v);
//  - plain Cesaro kernels a_i = k^{m - alpha_i} with a common order m
//    (pass cesaro_alphas/cesaro_m): applying the forward difference of order
//    m to the identity yields
//      D^m(B u)(v) = sum_i A_i (D^{alpha_i}_W u)(v + v_i + m - m_i)
//                     + D^m[(k o Cf) + g](v).
template <class S>
SolutionResidualReport verify_weyl_multiterm(const ProblemSpec<S>& spec, const BiSequence<S>& f,
                                             const BiSequence<S>& u, const BiSequence<S>& g,
                                             long lo, long hi, double tol,
                                             const std::vector<double>* cesaro_alphas = nullptr,
                                             int cesaro_m = 0) {
  spec.validate();
  if (!spec.autonomous())
    throw argument_error("verify_weyl_multiterm: requires an autonomous left side");
  SolutionResidualReport rep;
  rep.lo = lo;
  const Mat<S>& B = spec.Bs[0];
  BiSequence<S> cf = apply_matrix(spec.C, f);

  if (cesaro_alphas == nullptr) {
    // composite-difference route: read alpha_i, m_i off the kernels
    std::vector<WeylResultSeq<S>> dw(static_cast<std::size_t>(spec.n()));
    std::vector<long> mshift(static_cast<std::size_t>(spec.n()), 0);
    for (long i = 0; i < spec.n(); ++i) {
      const auto& ker = spec.kernels[static_cast<std::size_t>(i)];
      if (ker.kind == KernelKind::WeylFrac) {
        dw[static_cast<std::size_t>(i)] = weyl_frac_diff(u, FracOrder::of(ker.alpha));
        mshift[static_cast<std::size_t>(i)] = ker.m;
      } else if (ker.kind == KernelKind::Delta) {
        dw[static_cast<std::size_t>(i)] = WeylResultSeq<S>{u, 0.0};
        mshift[static_cast<std::size_t>(i)] = 0;
      } else {
        throw argument_error(
            "verify_weyl_multiterm: kernel a_" + std::to_string(i + 1) +
            " is neither a composite Weyl difference kernel nor a point mass; pass the "
            "plain-kernel orders instead");
      }
      if (abs_of(ker.scale - S(1)) > 0)
        throw argument_error("verify_weyl_multiterm: scaled kernels are not supported here");
      if (ker.weighted())
        throw argument_error(
            "verify_weyl_multiterm: kernel a_" + std::to_string(i + 1) +
            " carries an exponential weight, so it no longer represents a plain difference "
            "operator; verify the unweighted form instead");
    }
    for (long v = lo; v <= hi; ++v) {
      double tails = 0.0, t = 0.0;
      Mat<S> r = B * u.at(v);
      r -= weyl_conv_at(spec.k, cf, v, &t);
      tails += t;
      for (long i = 0; i < spec.n(); ++i) {
        const Mat<S>& Ai = spec.As[static_cast<std::size_t>(i)];
        long idx = v + spec.lags[static_cast<std::size_t>(i)] - mshift[static_cast<std::size_t>(i)];
        r -= Ai * dw[static_cast<std::size_t>(i)].seq.at(idx);
        tails += spectral_norm(Ai) * dw[static_cast<std::size_t>(i)].tail_bound;
      }
      r -= g.constant ? g.values.front() : g.at(v);
      rep.residual.push_back(frobenius_norm(r));
      rep.tail.push_back(tails);
    }
    rep.finish(tol);
    return rep;
  }

  // plain-kernel route
  if (static_cast<long>(cesaro_alphas->size()) != spec.n())
    throw argument_error("verify_weyl_multiterm: one fractional order per term is required");
  if (cesaro_m <= 0) throw argument_error("verify_weyl_multiterm: difference order must be >= 1");
  for (long i = 0; i < spec.n(); ++i) {
    double alpha_i = (*cesaro_alphas)[static_cast<std::size_t>(i)];
    const auto& ker = spec.kernels[static_cast<std::size_t>(i)];
    double beta = static_cast<double>(cesaro_m) - alpha_i;
    bool ok = (beta == 0.0) ? (ker.kind == KernelKind::Delta)
                            : (ker.kind == KernelKind::Cesaro &&
                               std::abs(ker.alpha - beta) <= 1e-12);
    if (!ok || abs_of(ker.scale - S(1)) > 0 || ker.weighted())
      throw argument_error("verify_weyl_multiterm: kernel a_" + std::to_string(i + 1) +
                           " does not match the declared order");
  }
  BiSequence<S> bu = apply_matrix(B, u);
  BiSequence<S> dbu = forward_diff(bu, cesaro_m);
  std::vector<WeylResultSeq<S>> dw(static_cast<std::size_t>(spec.n()));
  std::vector<long> mshift(static_cast<std::size_t>(spec.n()), 0);
  for (long i = 0; i < spec.n(); ++i) {
    double alpha_i = (*cesaro_alphas)[static_cast<std::size_t>(i)];
    FracOrder ord = FracOrder::of(alpha_i);
    dw[static_cast<std::size_t>(i)] = weyl_frac_diff(u, ord);
    mshift[static_cast<std::size_t>(i)] = ord.m;
  }
  auto bins = detail::binomial_row(cesaro_m);
  for (long v = lo; v <= hi; ++v) {
    double tails = 0.0;
    Mat<S> r = dbu.at(v);
    // D^m applied to the forcing-plus-correction block, with tails carried
    // through the binomial weights
    for (int j = 0; j <= cesaro_m; ++j) {
      double sign = ((cesaro_m - j) % 2 == 0) ? 1.0 : -1.0;
      double w = bins[static_cast<std::size_t>(j)];
      double t = 0.0;
      Mat<S> block = weyl_conv_at(spec.k, cf, v + j, &t);
      block += g.constant ? g.values.front() : g.at(v + j);
      r -= S(sign * w) * block;
      tails += w * t;
    }
    for (long i = 0; i < spec.n(); ++i) {
      const Mat<S>& Ai = spec.As[static_cast<std::size_t>(i)];
      long idx = v + spec.lags[static_cast<std::size_t>(i)] + cesaro_m -
                 mshift[static_cast<std::size_t>(i)];
      r -= Ai * dw[static_cast<std::size_t>(i)].seq.at(idx);
      tails += spectral_norm(Ai) * dw[static_cast<std::size_t>(i)].tail_bound;
    }
    rep.residual.push_back(frobenius_norm(r));
    rep.tail.push_back(tails);
  }
  rep.finish(tol);
  return rep;
}

// y(v) = sum_i c_i u(v + h_i) and the residual of the identity it satisfies,
//   B y(v) = sum_j A_j (a_j o y)(v) + sum_i c_i (k o Cf)(v + h_i),
// for zero-lag problems.
template <class S>
struct ShiftCombination {
  BiSequence<S> y;
  SolutionResidualReport report;
};

template <class S>
ShiftCombination<S> shift_combination(const ProblemSpec<S>& spec, const BiSequence<S>& f,
                                      const BiSequence<S>& u, const std::vector<S>& coeffs,
                                      const std::vector<long>& shifts, long lo, long hi,
                                      double tol) {
  spec.validate();
  if (spec.v_max() != 0)
    throw precondition_error("shift_combination: requires all lags zero");
  if (coeffs.empty() || coeffs.size() != shifts.size())
    throw argument_error("shift_combination: one coefficient per shift is required");
  for (long h : shifts)
    if (h < 0) throw argument_error("shift_combination: shifts must be >= 0");
  long hmax = *std::max_element(shifts.begin(), shifts.end());
  if (u.hi() < hi + hmax)
    throw argument_error("shift_combination: u window too short for the largest shift");

  ShiftCombination<S> out;
  BiSequence<S>& y = out.y;
  bool zero_ext = u.decay && u.decay->kind == Decay::Kind::Zero;
  long ylo = zero_ext ? std::min(lo, u.lo - hmax) : std::max(lo, u.lo);
  y = BiSequence<S>::zeros(ylo, hi, u.rows(), u.cols());
  for (long v = ylo; v <= hi; ++v) {
    Mat<S> acc = Mat<S>::Zero(u.rows(), u.cols());
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      long idx = v + shifts[i];
      if (u.contains(idx))
        acc += coeffs[i] * u.at(idx);
      else if (!zero_ext)
        throw argument_error("shift_combination: u window too short below");
    }
    y.values[static_cast<std::size_t>(v - ylo)] = acc;
  }
  if (zero_ext) {
    y.decay = Decay::zero();
  } else if (u.decay && u.decay->kind == Decay::Kind::Geometric && ylo <= u.lo) {
    double rho = u.decay->rate;
    double asym = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i)
      asym += abs_of(coeffs[i]) * std::pow(rho, -static_cast<double>(shifts[i]));
    double bnd = asym * u.decay->bound * std::pow(rho, static_cast<double>(u.lo - ylo));
    for (long s = 1; s <= hmax + 1; ++s) {
      double bs = 0.0;
      for (std::size_t i = 0; i < coeffs.size(); ++i)
        bs += abs_of(coeffs[i]) * u.norm_bound_at(ylo - s + shifts[i]);
      bnd = std::max(bnd, bs / std::pow(rho, static_cast<double>(s)));
    }
    y.decay = Decay::geometric(rho, bnd);
  }

  BiSequence<S> cf = apply_matrix(spec.C, f);
  const Mat<S>& B = spec.Bs[0];
  SolutionResidualReport& rep = out.report;
  rep.lo = lo;
  for (long v = lo; v <= hi; ++v) {
    double tails = 0.0, t = 0.0;
    Mat<S> r = B * y.at(v);
    for (long j = 0; j < spec.n(); ++j) {
      const Mat<S>& Aj = spec.As[static_cast<std::size_t>(j)];
      r -= Aj * weyl_conv_at(spec.kernels[static_cast<std::size_t>(j)], y, v, &t);
      tails += spectral_norm(Aj) * t;
    }
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      r -= coeffs[i] * weyl_conv_at(spec.k, cf, v + shifts[i], &t);
      tails += abs_of(coeffs[i]) * t;
    }
    rep.residual.push_back(frobenius_norm(r));
    rep.tail.push_back(tails);
  }
  rep.finish(tol);
  return out;
}

// Cauchy-problem solution on N0 from scalar forcing (g(v)): u(v) = (g *0 S)(v) x,
// which solves  B u(v) = f(v) + sum_i A_i (a_i *0 u)(v)  with f(v) = (k *0 g)(v) C x.
// The companion "operators inside the convolution" form is checked as well;
// both residuals are reported, with the classification per tolerance.
template <class S>
struct ConvolutionSolution {
  GridSequence<S> u;
  GridSequence<S> f;
  double mild_residual = 0.0;
  double strong_residual = 0.0;
  bool mild = false;
  bool strong = false;
};

template <class S>
ConvolutionSolution<S> convolution_solution(const ProblemSpec<S>& spec, const ExistenceFamily<S>& family,
                              const std::vector<S>& g, const Mat<S>& x, double tol) {
  spec.validate();
  if (spec.v_max() != 0) throw precondition_error("convolution_solution: requires all lags zero");
  if (g.empty()) throw argument_error("convolution_solution: empty forcing");
  if (x.rows() != spec.dim()) throw shape_error("convolution_solution: vector dimension mismatch");
  long V = std::min<long>(family.horizon(), static_cast<long>(g.size()) - 1);

  ConvolutionSolution<S> out;
  auto kv = spec.k.materialize(V);
  Mat<S> Cx = spec.C * x;
  out.u.values.reserve(static_cast<std::size_t>(V) + 1);
  out.f.values.reserve(static_cast<std::size_t>(V) + 1);
  for (long v = 0; v <= V; ++v) {
    Mat<S> gs = Mat<S>::Zero(spec.dim(), x.cols());
    S kg = S(0);
    for (long j = 0; j <= v; ++j) {
      gs += family.S_seq.at(v - j) * (g[static_cast<std::size_t>(j)] * x);
      kg += kv[static_cast<std::size_t>(v - j)] * g[static_cast<std::size_t>(j)];
    }
    out.u.values.push_back(std::move(gs));
    out.f.values.push_back(Mat<S>(kg * Cx));
  }

  auto a = detail::materialize_kernels(spec, V);
  for (long v = 0; v <= V; ++v) {
    Mat<S> mild_r = spec.B_at(v) * out.u.at(v) - out.f.at(v);
    Mat<S> strong_r = mild_r;
    for (long i = 0; i < spec.n(); ++i) {
      const Mat<S>& Ai = spec.As[static_cast<std::size_t>(i)];
      Mat<S> conv = Mat<S>::Zero(spec.dim(), x.cols());
      for (long j = 0; j <= v; ++j)
        conv += a[static_cast<std::size_t>(i)][static_cast<std::size_t>(v - j)] * out.u.at(j);
      mild_r -= Ai * conv;
      Mat<S> conv_in = Mat<S>::Zero(spec.dim(), x.cols());
      for (long j = 0; j <= v; ++j)
        conv_in += a[static_cast<std::size_t>(i)][static_cast<std::size_t>(v - j)] *
                   Mat<S>(Ai * out.u.at(j));
      strong_r -= conv_in;
    }
    out.mild_residual = std::max(out.mild_residual, frobenius_norm(mild_r));
    out.strong_residual = std::max(out.strong_residual, frobenius_norm(strong_r));
  }
  out.mild = out.mild_residual <= tol;
  out.strong = out.strong_residual <= tol;
  return out;
}

// Split u = H + Q where H(v) = sum_{l <= v} S(v-l) h(l) x for a p-periodic
// (bi-infinite) scalar sequence h, and Q = u - H on N0.  H is exactly
// p-periodic; the computed defect reflects rounding plus the truncation tail.
template <class S>
struct APDecomposition {
  BiSequence<S> H;
  GridSequence<S> Q;
  double periodicity_defect = 0.0;
  double h_tail_bound = 0.0;  // truncation tail of the H values
  double q_sup_tail = 0.0;    // sup ||Q(v)|| over v >= tail_start
  double q_fitted_rate = 0.0;
  bool q_fit_valid = false;
};

template <class S>
APDecomposition<S> ap_decomposition(const ExistenceFamily<S>& family,
                                    const SummabilityCertificate& cert, const GridSequence<S>& u,
                                    const std::vector<S>& h_period, const Mat<S>& x,
                                    long tail_start) {
  if (!cert.certified)
    throw certificate_error("ap_decomposition: no summability certificate for the family");
  if (h_period.empty()) throw argument_error("ap_decomposition: empty period block");
  long p = static_cast<long>(h_period.size());
  long V = u.horizon();
  long H = family.horizon();
  double rem = detail::family_remainder(family.norm_partial, cert);
  double hmax = 0.0;
  for (const S& hv : h_period) hmax = std::max(hmax, abs_of(hv));

  APDecomposition<S> out;
  out.h_tail_bound = rem * hmax * frobenius_norm(x);
  out.H.lo = 0;
  out.H.values.reserve(static_cast<std::size_t>(V) + 1);
  auto h_at = [&](long idx) {
    long r = idx % p;
    if (r < 0) r += p;
    return h_period[static_cast<std::size_t>(r)];
  };
  for (long v = 0; v <= V; ++v) {
    Mat<S> acc = Mat<S>::Zero(family.S_seq.rows(), x.cols());
    for (long j = 0; j <= H; ++j) acc += family.S_seq.at(j) * (h_at(v - j) * x);
    out.H.values.push_back(std::move(acc));
  }
  for (long v = 0; v + p <= V; ++v)
    out.periodicity_defect = std::max(
        out.periodicity_defect, frobenius_norm(Mat<S>(out.H.at(v + p) - out.H.at(v))));

  out.Q.values.reserve(static_cast<std::size_t>(V) + 1);
  for (long v = 0; v <= V; ++v) out.Q.values.push_back(Mat<S>(u.at(v) - out.H.at(v)));
  for (long v = std::max<long>(0, tail_start); v <= V; ++v)
    out.q_sup_tail = std::max(out.q_sup_tail, frobenius_norm(out.Q.at(v)));

  long D = std::max<long>(1, V / 10);
  if (V > D) {
    double qv = frobenius_norm(out.Q.at(V));
    double qp = frobenius_norm(out.Q.at(V - D));
    if (qv > 0.0 && qp > 0.0) {
      double rho = std::pow(qv / qp, 1.0 / static_cast<double>(D));
      out.q_fitted_rate = rho;
      out.q_fit_valid = rho < 1.0;
    } else if (qv == 0.0) {
      out.q_fitted_rate = 0.0;
      out.q_fit_valid = true;
    }
  }
  return out;
}

}  // namespace voldisc
