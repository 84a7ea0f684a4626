#pragma once

// Poisson-type transform of a continuous family T into a discrete family,
//
//   S_aw(v) = integral_0^inf e^(-a t) (w t)^v / v!  T(t) dt,    v = 0, 1, ...
//
// and the companion transforms of the scalar kernel and of running primitives.
// Continuous inputs carry an explicit growth certificate ||T(t)|| <= M e^(rate t)
// (on the regularized part when a power singularity t^sigma is declared), and
// every transform value comes with an error estimate held below the requested
// tolerance by refinement -- otherwise the transform refuses.

#include "voldisc/conv.hpp"
#include "voldisc/core.hpp"
#include "voldisc/quadrature.hpp"
#include "voldisc/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

namespace voldisc {

struct QuadratureSpec {
  enum class Scheme {
    laguerre,   // generalized Gauss-Laguerre in s = a t (smooth evaluators)
    composite,  // composite Gauss-Legendre in tau = sqrt(t) around the peak
                // (handles half-power nonsmoothness; also used for primitives)
  };
  Scheme scheme = Scheme::laguerre;
  int nodes = 48;
  double target_tol = 1e-10;
  double cutoff = 0.0;  // sampled-grid integration horizon override (0 = grid end)

  void validate() const {
    if (nodes < 8) throw argument_error("QuadratureSpec: need at least 8 nodes");
    if (!(target_tol > 0)) throw argument_error("QuadratureSpec: tolerance must be > 0");
  }
};

template <class S>
struct ContinuousFamily {
  enum class Kind { semigroup, ml_resolvent, sampled };
  Kind kind = Kind::semigroup;

  // T(t) = t^singular_power * regularized(t); singular_power in (-1, 0].
  std::function<Mat<S>(double)> regularized;
  double singular_power = 0.0;

  // growth certificate on the regularized part: ||regularized(t)|| <= M e^(rate t)
  double growth_bound = 1.0;
  double growth_rate = 0.0;

  long rows = 1, cols = 1;
  bool parallel_safe = true;

  // sampled-grid payload (kind == sampled): strictly increasing times from 0
  std::vector<double> grid_t;
  std::vector<Mat<S>> grid_values;

  Mat<S> reg_at(double t) const { return regularized(t); }

  Mat<S> full_at(double t) const {
    if (singular_power == 0.0) return regularized(t);
    if (t <= 0.0) throw argument_error("ContinuousFamily: singular family evaluated at t <= 0");
    return std::pow(t, singular_power) * regularized(t);
  }

  // Checks the declared bound on a sample grid; refuses on violation.
  void verify_growth(double t_hi = 40.0, int samples = 80) const {
    for (int i = 0; i <= samples; ++i) {
      double t = t_hi * static_cast<double>(i) / static_cast<double>(samples);
      double lhs = frobenius_norm(reg_at(t)) * std::exp(-growth_rate * t);
      if (lhs > growth_bound * (1.0 + 1e-6))
        throw precondition_error(
            "ContinuousFamily: declared growth bound violated at t = " + std::to_string(t) +
            " (" + std::to_string(lhs) + " > " + std::to_string(growth_bound) + ")");
    }
  }

  static ContinuousFamily analytic(Kind kind, std::function<Mat<S>(double)> reg, double sigma,
                                   double M, double rate, long rows, long cols,
                                   bool check_growth = true) {
    if (sigma <= -1.0 || sigma > 0.0)
      throw argument_error("ContinuousFamily: singular power must lie in (-1, 0]");
    ContinuousFamily f;
    f.kind = kind;
    f.regularized = std::move(reg);
    f.singular_power = sigma;
    f.growth_bound = M;
    f.growth_rate = rate;
    f.rows = rows;
    f.cols = cols;
    if (check_growth) f.verify_growth();
    return f;
  }

  // Piecewise-linear family from samples (t_0 = 0 required, sigma = 0).
  static ContinuousFamily sampled_grid(std::vector<double> ts, std::vector<Mat<S>> values,
                                       double M, double rate) {
    if (ts.size() != values.size() || ts.size() < 2)
      throw argument_error("ContinuousFamily: sampled grid needs matching t/value lists, size >= 2");
    if (ts.front() != 0.0) throw argument_error("ContinuousFamily: sampled grid must start at t = 0");
    for (std::size_t i = 1; i < ts.size(); ++i)
      if (!(ts[i] > ts[i - 1])) throw argument_error("ContinuousFamily: sample times must increase");
    ContinuousFamily f;
    f.kind = Kind::sampled;
    f.singular_power = 0.0;
    f.growth_bound = M;
    f.growth_rate = rate;
    f.rows = values[0].rows();
    f.cols = values[0].cols();
    f.grid_t = std::move(ts);
    f.grid_values = std::move(values);
    f.regularized = [g = f.grid_t, v = f.grid_values](double t) -> Mat<S> {
      if (t <= g.front()) return v.front();
      if (t >= g.back()) return v.back();
      auto it = std::upper_bound(g.begin(), g.end(), t);
      std::size_t i = static_cast<std::size_t>(it - g.begin());
      double w = (t - g[i - 1]) / (g[i] - g[i - 1]);
      return Mat<S>((1.0 - w) * v[i - 1] + w * v[i]);
    };
    for (std::size_t i = 0; i < f.grid_t.size(); ++i) {
      double lhs = frobenius_norm(f.grid_values[i]) * std::exp(-rate * f.grid_t[i]);
      if (lhs > M * (1.0 + 1e-6))
        throw precondition_error("ContinuousFamily: sampled values violate the declared growth");
    }
    return f;
  }
};

namespace detail {

// log of the transform prefactor w^v / v! times the mass that the reduced
// integral is scaled by; sign returned separately (w may be negative).
struct LogScale {
  double log = 0.0;
  double sign = 1.0;
};

inline LogScale omega_prefactor(double omega, long v) {
  LogScale s;
  s.sign = (omega < 0.0 && (v % 2 != 0)) ? -1.0 : 1.0;
  s.log = static_cast<double>(v) * std::log(std::abs(omega)) -
          std::lgamma(static_cast<double>(v) + 1.0);
  return s;
}

// Generalized-Laguerre evaluation of J(v) = int e^(-a t) t^(v+sigma) reg(t) dt,
// returned as scaled_sum * exp(log_scale).
template <class S>
Mat<S> laguerre_reduced(const ContinuousFamily<S>& T, double a, long v, int n,
                        double* log_scale) {
  double nu = static_cast<double>(v) + T.singular_power;
  LaguerreRule rule = gauss_laguerre_generalized(n, nu);
  Mat<S> acc = Mat<S>::Zero(T.rows, T.cols);
  for (std::size_t j = 0; j < rule.nodes.size(); ++j)
    acc += rule.normweights[j] * T.reg_at(rule.nodes[j] / a);
  *log_scale = rule.log_mass - (nu + 1.0) * std::log(a);
  return acc;
}

// Composite Gauss-Legendre in tau = sqrt(t):
//   J(v) = 2 int_0^inf e^(-a tau^2) tau^(2(v+sigma)+1) reg(tau^2) dtau,
// panels placed around the peak using the effective damping a - rate, the
// integrand held in units of its peak value.  *tail_bound receives the
// certified bound on the neglected far tail (same scaled units).
template <class S>
Mat<S> sqrt_composite_reduced(const ContinuousFamily<S>& T, double a, long v, int nodes_per_panel,
                              double* log_scale, double* tail_bound) {
  double nu = static_cast<double>(v) + T.singular_power;
  double a_eff = a - std::max(0.0, T.growth_rate);
  double p = 2.0 * nu + 1.0;  // tau exponent
  double tau_star = std::sqrt(std::max(p, 1.0) / (2.0 * a_eff));
  double width = 1.0 / (2.0 * std::sqrt(a_eff));
  double lo = std::max(0.0, tau_star - 8.0 * width);
  double hi = tau_star + 10.0 * width;
  // log of the peak magnitude of e^(-a_eff tau^2) tau^p
  double log_peak = (p > 0.0) ? (-a_eff * tau_star * tau_star + p * std::log(tau_star)) : 0.0;

  int panels = static_cast<int>(std::ceil((hi - lo) / width));
  std::vector<double> edges(static_cast<std::size_t>(panels) + 1);
  for (int i = 0; i <= panels; ++i)
    edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / panels;
  QuadRule rule = composite_on_panels(gauss_legendre(nodes_per_panel), edges);

  Mat<S> acc = Mat<S>::Zero(T.rows, T.cols);
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
    double tau = rule.nodes[j];
    if (tau <= 0.0) continue;
    double lg = -a * tau * tau + p * std::log(tau) - log_peak;
    if (lg < -745.0) continue;
    acc += (2.0 * rule.weights[j] * std::exp(lg)) * T.reg_at(tau * tau);
  }
  *log_scale = log_peak;
  // decreasing tail beyond hi: integrand <= M e^(-a_eff tau^2) tau^p, bounded
  // by the value at hi times a geometric-decay integral
  double t_hi = hi * hi;
  double denom = a_eff - nu / t_hi;
  double log_tail = -a_eff * t_hi + nu * std::log(t_hi) - log_peak;
  *tail_bound = (denom > 0.0 && log_tail > -700.0)
                    ? T.growth_bound * std::exp(log_tail) / denom
                    : (log_tail <= -700.0 ? 0.0 : std::numeric_limits<double>::infinity());
  return acc;
}

// Trapezoid on the stored sample grid (kind == sampled), scaled by the peak of
// e^(-a t) t^v; *tail_bound covers [grid end, inf) via the growth certificate.
template <class S>
Mat<S> sampled_reduced(const ContinuousFamily<S>& T, double a, long v, int stride,
                       double* log_scale, double* tail_bound) {
  double nu = static_cast<double>(v);
  double t_peak = std::max(nu / a, T.grid_t[1]);
  double log_peak = -a * t_peak + (nu > 0 ? nu * std::log(t_peak) : 0.0);
  auto logw = [&](double t) {
    if (nu > 0 && t <= 0.0) return -745.0;  // t^nu vanishes at the left endpoint
    return -a * t + (nu > 0 ? nu * std::log(t) : 0.0) - log_peak;
  };

  Mat<S> acc = Mat<S>::Zero(T.rows, T.cols);
  std::size_t last = T.grid_t.size() - 1;
  std::size_t prev = 0;
  while (prev < last) {
    std::size_t cur = std::min(prev + static_cast<std::size_t>(stride), last);
    double h = T.grid_t[cur] - T.grid_t[prev];
    double w0 = std::exp(std::max(logw(T.grid_t[prev]), -745.0));
    double w1 = std::exp(std::max(logw(T.grid_t[cur]), -745.0));
    acc += (0.5 * h) * (w0 * T.grid_values[prev] + w1 * T.grid_values[cur]);
    prev = cur;
  }
  *log_scale = log_peak;
  double Tend = T.grid_t.back();
  double a_eff = a - T.growth_rate;
  double denom = a_eff - nu / Tend;
  if (denom <= 0.0)
    throw convergence_error(
        "poisson transform: sampled grid too short to certify the tail for v = " +
        std::to_string(v) + " (need t beyond " + std::to_string(nu / a_eff) + ")");
  *tail_bound = T.growth_bound * std::exp(-a_eff * Tend + nu * std::log(Tend) - log_peak) / denom;
  return acc;
}

}  // namespace detail

// One transform value S_aw(v) with certified refinement: the scheme is refined
// (node doubling) until the embedded error estimate plus any certified tail
// bound drops below q.target_tol; refuses if that never happens.
template <class S>
Mat<S> poisson_value(const ContinuousFamily<S>& T, double a, double omega, long v,
                     const QuadratureSpec& q, double* err_out = nullptr) {
  q.validate();
  if (!(a > 0)) throw argument_error("poisson transform: damping a must be > 0");
  if (omega == 0.0) throw argument_error("poisson transform: omega must be nonzero");
  if (v < 0) throw argument_error("poisson transform: v must be >= 0");
  if (!(a > T.growth_rate + 1e-9))
    throw convergence_error("poisson transform: damping a = " + std::to_string(a) +
                            " does not exceed the declared growth rate " +
                            std::to_string(T.growth_rate));
  detail::LogScale pre = detail::omega_prefactor(omega, v);

  auto assemble = [&](const Mat<S>& reduced, double log_scale) {
    return Mat<S>(pre.sign * std::exp(pre.log + log_scale) * reduced);
  };

  const int max_refine = 6;
  if (T.kind == ContinuousFamily<S>::Kind::sampled) {
    // fixed data: compare full grid against stride-2 as the error estimate
    double ls1 = 0, ls2 = 0, tb1 = 0, tb2 = 0;
    Mat<S> full = detail::sampled_reduced(T, a, v, 1, &ls1, &tb1);
    Mat<S> half = detail::sampled_reduced(T, a, v, 2, &ls2, &tb2);
    double est = frobenius_norm(Mat<S>(assemble(full, ls1) - assemble(half, ls2))) / 3.0 +
                 std::exp(pre.log + ls1) * tb1;
    if (est > q.target_tol)
      throw convergence_error("poisson transform: sampled grid resolution gives error estimate " +
                              std::to_string(est) + " above tolerance");
    if (err_out) *err_out = est;
    return assemble(full, ls1);
  }

  bool laguerre = (q.scheme == QuadratureSpec::Scheme::laguerre);
  int n = q.nodes;
  Mat<S> best;
  double best_err = std::numeric_limits<double>::infinity();
  for (int r = 0; r < max_refine; ++r) {
    double ls1 = 0, ls2 = 0, tb1 = 0, tb2 = 0;
    Mat<S> coarse, fine;
    if (laguerre) {
      coarse = detail::laguerre_reduced(T, a, v, n, &ls1);
      fine = detail::laguerre_reduced(T, a, v, 2 * n, &ls2);
    } else {
      coarse = detail::sqrt_composite_reduced(T, a, v, n, &ls1, &tb1);
      fine = detail::sqrt_composite_reduced(T, a, v, 2 * n, &ls2, &tb2);
    }
    Mat<S> vc = assemble(coarse, ls1);
    Mat<S> vf = assemble(fine, ls2);
    double est = frobenius_norm(Mat<S>(vc - vf)) + std::exp(pre.log + ls2) * tb2;
    if (est < best_err) {
      best = vf;
      best_err = est;
    }
    if (est <= q.target_tol) {
      if (err_out) *err_out = est;
      return vf;
    }
    n *= 2;
    if (laguerre && 2 * n > 1024) break;
    if (!laguerre && 2 * n > 256) break;
  }
  throw convergence_error("poisson transform: error estimate " + std::to_string(best_err) +
                          " did not reach tolerance " + std::to_string(q.target_tol) +
                          " after refinement (v = " + std::to_string(v) + ")");
}

// Transform of a scalar kernel.  The growth of the callable is probed on a
// geometric grid to reject a damping below the observed growth.
inline double poisson_scalar(const std::function<double(double)>& k, double a, double omega,
                             long v, const QuadratureSpec& q, double* err_out = nullptr) {
  double t_probe = (static_cast<double>(v) + 40.0) / std::max(a, 1e-6);
  double m = 0.0, rate_est = 0.0;
  double prev_t = 0.0, prev_val = std::abs(k(0.0));
  for (int i = 1; i <= 16; ++i) {
    double t = t_probe * static_cast<double>(i) / 16.0;
    double val = std::abs(k(t));
    m = std::max(m, val * 1.0);
    if (val > 0 && prev_val > 0 && val > prev_val)
      rate_est = std::max(rate_est, std::log(val / prev_val) / (t - prev_t));
    prev_t = t;
    prev_val = val;
  }
  if (rate_est >= a * (1.0 - 1e-9))
    throw convergence_error("poisson_scalar: integrand grows at rate >= the damping a");
  ContinuousFamily<double> fam;
  fam.kind = ContinuousFamily<double>::Kind::semigroup;
  fam.regularized = [&k](double t) {
    Mat<double> m1(1, 1);
    m1(0, 0) = k(t);
    return m1;
  };
  fam.growth_bound = std::max(m, 1.0);
  fam.growth_rate = std::max(rate_est, 0.0);
  fam.rows = fam.cols = 1;
  return poisson_value(fam, a, omega, v, q, err_out)(0, 0);
}

// All transform values S_aw(0..v_max); per-v transforms run in parallel when
// the evaluator declares itself safe.  *err_out receives the max estimate.
template <class S>
GridSequence<S> poisson_family(const ContinuousFamily<S>& T, double a, double omega, long v_max,
                               const QuadratureSpec& q, double* err_out = nullptr) {
  if (v_max < 0) throw argument_error("poisson_family: v_max must be >= 0");
  GridSequence<S> out = GridSequence<S>::zeros(v_max, T.rows, T.cols);
  std::vector<double> errs(static_cast<std::size_t>(v_max) + 1, 0.0);
  std::exception_ptr eptr;
  std::mutex eptr_mutex;
  auto body = [&](std::size_t vi) {
    try {
      out.values[vi] = poisson_value(T, a, omega, static_cast<long>(vi), q, &errs[vi]);
    } catch (...) {
      std::lock_guard<std::mutex> lock(eptr_mutex);
      if (!eptr) eptr = std::current_exception();
    }
  };
  if (T.parallel_safe)
    parallel_for(static_cast<std::size_t>(v_max) + 1, body);
  else
    for (std::size_t vi = 0; vi <= static_cast<std::size_t>(v_max); ++vi) body(vi);
  if (eptr) std::rethrow_exception(eptr);
  if (err_out) {
    *err_out = 0.0;
    for (double e : errs) *err_out = std::max(*err_out, e);
  }
  return out;
}

// Residual of the transformed second resolvent equation,
//   B S_aw(v) = k_aw(v) C + (S_aw *0 A_aw)(v),
// which is the identity the transform provably satisfies.
template <class S>
double verify_transformed_family(const GridSequence<S>& S_aw, const std::vector<S>& k_aw,
                   const GridSequence<S>& A_aw, const Mat<S>& B, const Mat<S>& C) {
  long V = std::min<long>(std::min(S_aw.horizon(), A_aw.horizon()),
                          static_cast<long>(k_aw.size()) - 1);
  if (V < 0) throw argument_error("verify_transformed_family: empty inputs");
  double res = 0.0;
  for (long v = 0; v <= V; ++v) {
    Mat<S> lhs = B * S_aw.at(v);
    Mat<S> rhs = k_aw[static_cast<std::size_t>(v)] * C;
    for (long j = 0; j <= v; ++j) rhs += S_aw.at(v - j) * A_aw.at(j);
    res = std::max(res, frobenius_norm(Mat<S>(lhs - rhs)));
  }
  return res;
}

// Check-only partial-integration form of the same identity (v >= 1), routed
// through the primitive transform:
//   B S_aw(v) = k_aw(v) C + a (A_aw *0 U_aw)(v) - w (A_aw *0 U_aw)(v-1).
template <class S>
double partial_integration_check(const GridSequence<S>& S_aw, const std::vector<S>& k_aw,
                                 const GridSequence<S>& A_aw, const GridSequence<S>& U_aw,
                                 const Mat<S>& B, const Mat<S>& C, double a, double omega) {
  long V = std::min({static_cast<long>(S_aw.horizon()), static_cast<long>(A_aw.horizon()),
                     static_cast<long>(U_aw.horizon()), static_cast<long>(k_aw.size()) - 1});
  if (V < 1) throw argument_error("partial_integration_check: needs v >= 1");
  double res = 0.0;
  for (long v = 1; v <= V; ++v) {
    Mat<S> lhs = B * S_aw.at(v);
    Mat<S> rhs = k_aw[static_cast<std::size_t>(v)] * C;
    Mat<S> cu_v = Mat<S>::Zero(S_aw.rows(), S_aw.cols());
    Mat<S> cu_p = Mat<S>::Zero(S_aw.rows(), S_aw.cols());
    for (long j = 0; j <= v; ++j) cu_v += A_aw.at(v - j) * U_aw.at(j);
    for (long j = 0; j <= v - 1; ++j) cu_p += A_aw.at(v - 1 - j) * U_aw.at(j);
    rhs += a * cu_v - omega * cu_p;
    res = std::max(res, frobenius_norm(Mat<S>(lhs - rhs)));
  }
  return res;
}

template <class S>
struct PrimitiveTransforms {
  GridSequence<S> U;       // transform of U(t) = int_0^t T(s) ds
  std::vector<S> Theta;    // transform of Theta(t) = int_0^t k(s) ds
  double max_error = 0.0;
};

namespace detail {

// growth data for a running primitive: ||int_0^t T|| picks up at most a factor
// t^(sigma+1)/(sigma+1) over M e^(rate t), absorbed into a slightly larger
// exponential rate with an adjusted constant.
template <class F>
double prim_rate(const F& f) {
  return std::max(f.growth_rate, 0.0) + 0.05;
}

template <class F>
double prim_bound(const F& f) {
  double best = 1e-300;
  double rp = prim_rate(f);
  for (int i = 1; i <= 400; ++i) {
    double t = 0.1 * i;
    double env = f.growth_bound * std::exp(f.growth_rate * t) *
                 std::pow(t, f.singular_power + 1.0) / (f.singular_power + 1.0);
    best = std::max(best, env * std::exp(-rp * t));
  }
  return best * 1.05;
}

// int_0^t s^sigma reg(s) ds via tau = sqrt(s) composite Gauss-Legendre.
template <class S>
Mat<S> running_primitive(const ContinuousFamily<S>& T, double t, int nodes) {
  Mat<S> acc = Mat<S>::Zero(T.rows, T.cols);
  if (t <= 0.0) return acc;
  double hi = std::sqrt(t);
  int panels = std::max(2, static_cast<int>(std::ceil(hi * 2.0)));
  std::vector<double> edges(static_cast<std::size_t>(panels) + 1);
  for (int i = 0; i <= panels; ++i) edges[static_cast<std::size_t>(i)] = hi * i / panels;
  QuadRule rule = composite_on_panels(gauss_legendre(nodes), edges);
  double p = 2.0 * T.singular_power + 1.0;
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
    double tau = rule.nodes[j];
    if (tau <= 0.0) continue;
    acc += (2.0 * rule.weights[j] * std::pow(tau, p)) * T.reg_at(tau * tau);
  }
  return acc;
}

}  // namespace detail

// Transforms of the running primitives of T and of the scalar kernel k.  For
// sampled families the primitive is a cumulative trapezoid on the sample grid;
// analytic families integrate the evaluator directly.
template <class S>
PrimitiveTransforms<S> poisson_primitive(const ContinuousFamily<S>& T,
                                         const ContinuousFamily<double>& kfam, double a,
                                         double omega, long v_max, const QuadratureSpec& q) {
  q.validate();
  PrimitiveTransforms<S> out;

  auto make_primitive_family = [&](const auto& F) {
    using Scal = typename std::decay_t<decltype(F.grid_values)>::value_type::Scalar;
    ContinuousFamily<Scal> U;
    U.kind = F.kind;
    U.singular_power = 0.0;
    U.rows = F.rows;
    U.cols = F.cols;
    U.parallel_safe = F.parallel_safe;
    if (F.kind == ContinuousFamily<Scal>::Kind::sampled) {
      std::vector<Mat<Scal>> cum(F.grid_values.size(), Mat<Scal>::Zero(F.rows, F.cols));
      for (std::size_t i = 1; i < F.grid_t.size(); ++i) {
        double h = F.grid_t[i] - F.grid_t[i - 1];
        cum[i] = cum[i - 1] + Mat<Scal>(0.5 * h * (F.grid_values[i] + F.grid_values[i - 1]));
      }
      return ContinuousFamily<Scal>::sampled_grid(F.grid_t, std::move(cum),
                                                  detail::prim_bound(F), detail::prim_rate(F));
    }
    U.regularized = [&F, nodes = q.nodes](double t) {
      return detail::running_primitive(F, t, nodes);
    };
    U.growth_bound = detail::prim_bound(F);
    U.growth_rate = detail::prim_rate(F);
    U.verify_growth();
    return U;
  };

  ContinuousFamily<S> Ufam = make_primitive_family(T);
  ContinuousFamily<double> Thfam = make_primitive_family(kfam);

  double e1 = 0, e2 = 0;
  out.U = poisson_family(Ufam, a, omega, v_max, q, &e1);
  GridSequence<double> th = poisson_family(Thfam, a, omega, v_max, q, &e2);
  out.Theta.resize(static_cast<std::size_t>(v_max) + 1);
  for (long v = 0; v <= v_max; ++v) out.Theta[static_cast<std::size_t>(v)] = S(th.at(v)(0, 0));
  out.max_error = std::max(e1, e2);
  return out;
}

}  // namespace voldisc
