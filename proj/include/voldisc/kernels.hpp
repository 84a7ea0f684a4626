#pragma once

// Scalar kernel sequences and their tail certificates.
//
// Kernels are complex- or real-valued sequences a : {0,1,2,...} -> S used as
// convolution weights.  Besides point evaluation, every kernel kind knows how
// to bound its own tails:
//
//   abs_tail(J)            >= sum_{s > J} |a(s)|        (when finite)
//   geometric_tail(J, rho) >= sum_{s >= 1} |a(J+s)| rho^s
//   algebraic_tail(J, p)   >= sum_{s >= 1} |a(J+s)| (1+s)^(-p)
//
// These bounds are what make doubly-infinite convolution truncations
// certifiable rather than merely plausible.

#include "voldisc/core.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace voldisc {

// Gamma(v + alpha) / (Gamma(alpha) v!), the standard fractional-sum weight;
// alpha = 0 degenerates to the unit pulse at v = 0 by convention.
inline double cesaro_kernel(double alpha, long v) {
  if (alpha < 0) throw argument_error("cesaro_kernel: order must be >= 0");
  if (v < 0) return 0.0;
  if (alpha == 0.0) return v == 0 ? 1.0 : 0.0;
  double va = static_cast<double>(v);
  return std::exp(std::lgamma(va + alpha) - std::lgamma(alpha) - std::lgamma(va + 1.0));
}

// t^(alpha-1) / Gamma(alpha) for t > 0.  At t = 0 the convention 0^z = 0
// (z > 0) gives 0 for alpha > 1 and 1 for alpha = 1; smaller alpha diverges.
inline double continuous_g(double alpha, double t) {
  if (alpha <= 0) throw argument_error("continuous_g: order must be > 0");
  if (t < 0) throw argument_error("continuous_g: negative time");
  if (t == 0.0) {
    if (alpha > 1.0) return 0.0;
    if (alpha == 1.0) return 1.0;
    throw argument_error("continuous_g: t = 0 diverges for order < 1");
  }
  return std::pow(t, alpha - 1.0) / std::tgamma(alpha);
}

namespace detail {

// Bound for sum_{s >= 1} (1+s)^(-p), p > 1: first term plus integral tail.
inline double zeta_tail(double p) {
  return std::pow(2.0, -p) + std::pow(2.0, 1.0 - p) / (p - 1.0);
}

// r-th forward difference of the Cesaro kernel of order beta at x >= 0.
inline double cesaro_forward_diff(double beta, int r, long x) {
  double acc = 0.0;
  double binom = 1.0;
  for (int j = 0; j <= r; ++j) {
    double sign = ((r - j) % 2 == 0) ? 1.0 : -1.0;
    acc += sign * binom * cesaro_kernel(beta, x + j);
    binom = binom * (r - j) / (j + 1.0);
  }
  return acc;
}

}  // namespace detail

enum class KernelKind {
  Delta,           // unit pulse at v = 0
  Cesaro,          // cesaro_kernel(alpha, v)
  Geometric,       // ratio^v
  Explicit,        // finitely supported list of values
  WeylFrac,        // alternating binomial combination of Cesaro weights whose
                   // one-sided smoothing realizes the Weyl fractional difference
  FracForcing,     // forcing sequence produced when a Caputo-type continuous
                   // family is pushed to the integer grid: see frac_forcing_value
  FracForcingSum,  // initial-value variant: sum of FracForcing terms over orders
};

namespace detail {

// scale-free |value| and sign of the FracForcing sequence
//   (-1)^(v+m+1) / (v+m)! * prod_{i=1..v+m} (alpha - shift - i).
inline double frac_forcing_value(double alpha, int m, double shift, long v) {
  long n = v + m;
  double logmag = -std::lgamma(static_cast<double>(n) + 1.0);
  double sign = ((n + 1) % 2 == 0) ? 1.0 : -1.0;
  for (long i = 1; i <= n; ++i) {
    double f = alpha - shift - static_cast<double>(i);
    if (f == 0.0) return 0.0;
    logmag += std::log(std::abs(f));
    if (f < 0) sign = -sign;
  }
  return sign * std::exp(logmag);
}

}  // namespace detail

template <class S>
struct KernelSpec {
  KernelKind kind = KernelKind::Delta;
  S scale = S(1);

  double alpha = 0.0;          // Cesaro / WeylFrac / FracForcing order
  int m = 0;                   // integer ceiling order for WeylFrac / FracForcing
  S ratio = S(0);              // Geometric ratio
  std::vector<S> values;       // Explicit support
  std::vector<double> alphas;  // FracForcingSum orders
  int deriv_index = 0;         // FracForcingSum: which initial value it weights
  std::optional<double> shared_alpha;  // FracForcingSum: single order for all terms

  // Exponential damping e^(-weight_rate * (v - weight_shift)) applied on top.
  double weight_rate = 0.0;
  double weight_shift = 0.0;

  static KernelSpec delta() { return KernelSpec{}; }

  static KernelSpec cesaro(double alpha) {
    if (alpha < 0) throw argument_error("cesaro kernel: order must be >= 0");
    KernelSpec k;
    if (alpha == 0.0) return k;  // delta by convention
    k.kind = KernelKind::Cesaro;
    k.alpha = alpha;
    return k;
  }

  static KernelSpec geometric(S scale, S ratio) {
    KernelSpec k;
    k.kind = KernelKind::Geometric;
    k.scale = scale;
    k.ratio = ratio;
    return k;
  }

  static KernelSpec explicit_values(std::vector<S> vals) {
    if (vals.empty()) throw argument_error("explicit kernel: needs at least one value");
    KernelSpec k;
    k.kind = KernelKind::Explicit;
    k.values = std::move(vals);
    return k;
  }

  // a(w) = sum_{j=0..m} (-1)^(m-j) binom(m,j) cesaro_kernel(m-alpha, w+j-m).
  // One-sided convolution against this kernel, read off at index v+m, equals
  // the order-alpha Weyl difference at v.
  static KernelSpec weyl_frac(double alpha) {
    if (alpha <= 0) throw argument_error("weyl difference kernel: order must be > 0");
    KernelSpec k;
    k.kind = KernelKind::WeylFrac;
    k.alpha = alpha;
    k.m = static_cast<int>(std::ceil(alpha));
    return k;
  }

  bool weighted() const { return weight_rate != 0.0; }

  double weight_at(long v) const {
    return weighted() ? std::exp(-weight_rate * (static_cast<double>(v) - weight_shift)) : 1.0;
  }

  // Returns a copy damped by e^(-rate * (v - shift)).
  KernelSpec exp_weighted(double rate, double shift = 0.0) const {
    KernelSpec k = *this;
    if (rate == 0.0) return k;
    if (k.weighted()) {
      // compose: e^(-r1(v-s1)) e^(-r2(v-s2)) = e^(-(r1+r2)(v - s')) with
      // s' = (r1 s1 + r2 s2) / (r1 + r2)
      double r = k.weight_rate + rate;
      if (r == 0.0) {
        k.weight_rate = 0.0;
        k.weight_shift = 0.0;
      } else {
        k.weight_shift = (k.weight_rate * k.weight_shift + rate * shift) / r;
        k.weight_rate = r;
      }
    } else {
      k.weight_rate = rate;
      k.weight_shift = shift;
    }
    return k;
  }

  S eval(long v) const {
    if (v < 0) return S(0);
    S base;
    switch (kind) {
      case KernelKind::Delta:
        base = (v == 0) ? S(1) : S(0);
        break;
      case KernelKind::Cesaro:
        base = S(cesaro_kernel(alpha, v));
        break;
      case KernelKind::Geometric:
        base = S(1);
        for (long i = 0; i < v; ++i) base *= ratio;
        break;
      case KernelKind::Explicit:
        base = (static_cast<std::size_t>(v) < values.size()) ? values[static_cast<std::size_t>(v)]
                                                             : S(0);
        break;
      case KernelKind::WeylFrac: {
        double beta = m - alpha;
        if (beta == 0.0) {
          // pure integer difference: finitely supported alternating binomials
          if (v > m) return S(0);
          double binom = 1.0;
          for (long j = 0; j < v; ++j) binom = binom * (m - j) / (j + 1.0);
          base = S(((v % 2 == 0) ? 1.0 : -1.0) * binom);
        } else {
          double acc = 0.0;
          double binom = 1.0;
          for (int j = 0; j <= m; ++j) {
            double sign = ((m - j) % 2 == 0) ? 1.0 : -1.0;
            acc += sign * binom * cesaro_kernel(beta, v + j - m);
            binom = binom * (m - j) / (j + 1.0);
          }
          base = S(acc);
        }
        break;
      }
      case KernelKind::FracForcing:
        base = S(detail::frac_forcing_value(alpha, m, 0.0, v));
        break;
      case KernelKind::FracForcingSum: {
        double acc = 0.0;
        for (double aj : alphas) {
          int mj = static_cast<int>(std::ceil(aj));
          if (mj - 1 < deriv_index) continue;
          double a_eff = shared_alpha.value_or(aj);
          acc += detail::frac_forcing_value(a_eff, mj, static_cast<double>(deriv_index), v);
        }
        base = S(acc);
        break;
      }
      default:
        throw argument_error("unknown kernel kind");
    }
    return scale * base * S(weight_at(v));
  }

  std::vector<S> materialize(long horizon) const {
    if (horizon < 0) throw argument_error("kernel horizon must be >= 0");
    std::vector<S> out(static_cast<std::size_t>(horizon) + 1);
    for (long v = 0; v <= horizon; ++v) out[static_cast<std::size_t>(v)] = eval(v);
    return out;
  }

  S value_at_zero() const { return eval(0); }

  // --- tail bounds -----------------------------------------------------------
  //
  // All bounds first reduce the exponential weight: with g = e^(-weight_rate),
  //   sum |a_w(J+s)| rho^s = e^(-rate (J - shift)) sum |a(J+s)| (rho g)^s,
  // so only the unweighted kinds need per-kind formulas.

  std::optional<double> abs_tail(long J) const {
    if (J < 0) throw argument_error("tail index must be >= 0");
    if (weighted()) {
      if (weight_rate < 0) return std::nullopt;
      auto t = base_geometric_tail(J, std::exp(-weight_rate));
      if (!t) return std::nullopt;
      return std::exp(-weight_rate * (static_cast<double>(J) - weight_shift)) * *t;
    }
    return base_abs_tail(J);
  }

  std::optional<double> geometric_tail(long J, double rho) const {
    if (J < 0) throw argument_error("tail index must be >= 0");
    if (!(rho > 0)) throw argument_error("tail rate must be > 0");
    double g = weighted() ? std::exp(-weight_rate) : 1.0;
    auto t = base_geometric_tail(J, rho * g);
    if (!t) return std::nullopt;
    double pre = weighted() ? std::exp(-weight_rate * (static_cast<double>(J) - weight_shift)) : 1.0;
    return pre * *t;
  }

  std::optional<double> algebraic_tail(long J, double p) const {
    if (!(p > 1)) throw argument_error("algebraic tail exponent must exceed 1");
    // (1+s)^(-p) <= 2^(-p) for s >= 1; combine with a decreasing-magnitude or
    // summable bound.
    if (auto t = abs_tail(J)) return std::pow(2.0, -p) * *t;
    // non-summable but decreasing magnitude: |a(J+s)| <= |a(J+1)|
    if (magnitude_nonincreasing()) return abs_of(eval(J + 1)) * detail::zeta_tail(p);
    return std::nullopt;
  }

  bool summable() const { return abs_tail(0).has_value(); }

  std::string describe() const;

 private:
  bool magnitude_nonincreasing() const {
    switch (kind) {
      case KernelKind::Delta:
        return true;
      case KernelKind::Cesaro:
        return alpha <= 1.0;
      case KernelKind::Geometric:
        return abs_of(ratio) <= 1.0;
      case KernelKind::FracForcing:
      case KernelKind::FracForcingSum:
        return true;  // ratio of consecutive magnitudes is (n+1-alpha')/(n+1) < 1
      default:
        return false;
    }
  }

  std::optional<double> base_abs_tail(long J) const {
    switch (kind) {
      case KernelKind::Delta:
        return 0.0;
      case KernelKind::Cesaro:
        return std::nullopt;  // sum_{v<=V} grows like V^alpha
      case KernelKind::Geometric: {
        double r = abs_of(ratio);
        if (r >= 1.0) return std::nullopt;
        return abs_of(scale) * std::pow(r, static_cast<double>(J) + 1.0) / (1.0 - r);
      }
      case KernelKind::Explicit: {
        double acc = 0.0;
        for (std::size_t i = static_cast<std::size_t>(J) + 1; i < values.size(); ++i)
          acc += abs_of(values[i]);
        return abs_of(scale) * acc;
      }
      case KernelKind::WeylFrac: {
        double beta = m - alpha;
        if (beta == 0.0) {
          double acc = 0.0;
          for (long w = J + 1; w <= m; ++w) acc += abs_of(eval(w)) / abs_of(scale);
          return abs_of(scale) * acc;
        }
        // interior terms (w >= m) are m-th differences of a completely
        // monotone sequence with one fixed sign, so their absolute sum
        // telescopes exactly to a single (m-1)-th difference
        double acc = 0.0;
        long w = J + 1;
        for (; w < m; ++w) acc += abs_of(eval(w)) / abs_of(scale);
        acc += std::abs(detail::cesaro_forward_diff(beta, m - 1, w - m));
        return abs_of(scale) * acc;
      }
      case KernelKind::FracForcing:
      case KernelKind::FracForcingSum: {
        // exact tail of Gamma(n+1-a)/Gamma(n+1) terms when a > 1, else divergent
        double acc = 0.0;
        bool ok = true;
        auto term_tail = [&](double a_eff, int mj, double shift) {
          double a = a_eff - shift;
          if (a <= 1.0) {
            ok = false;
            return 0.0;
          }
          long n = J + 1 + mj;  // first index past the tail cut
          double lg = std::lgamma(static_cast<double>(n) + 1.0 - a) -
                      std::lgamma(static_cast<double>(n));
          return std::exp(lg) / ((a - 1.0) * std::abs(std::tgamma(1.0 - a)));
        };
        if (kind == KernelKind::FracForcing) {
          acc = term_tail(alpha, m, 0.0);
        } else {
          for (double aj : alphas) {
            int mj = static_cast<int>(std::ceil(aj));
            if (mj - 1 < deriv_index) continue;
            acc += term_tail(shared_alpha.value_or(aj), mj, static_cast<double>(deriv_index));
          }
        }
        if (!ok) return std::nullopt;
        return abs_of(scale) * acc;
      }
      default:
        return std::nullopt;
    }
  }

  std::optional<double> base_geometric_tail(long J, double rho) const {
    if (rho <= 0) return 0.0;
    switch (kind) {
      case KernelKind::Delta:
        return 0.0;
      case KernelKind::Cesaro: {
        // magnitude ratio k(w+1)/k(w) = (w+alpha)/(w+1) <= q for w > J
        double q = std::max(1.0, (static_cast<double>(J) + 1.0 + alpha) / (static_cast<double>(J) + 2.0));
        if (q * rho >= 1.0) return std::nullopt;
        return abs_of(scale) * cesaro_kernel(alpha, J + 1) * rho / (1.0 - q * rho);
      }
      case KernelKind::Geometric: {
        double r = abs_of(ratio);
        if (r * rho >= 1.0) return std::nullopt;
        return abs_of(scale) * std::pow(r, static_cast<double>(J) + 1.0) * rho / (1.0 - r * rho);
      }
      case KernelKind::Explicit: {
        double acc = 0.0;
        for (std::size_t i = static_cast<std::size_t>(J) + 1; i < values.size(); ++i)
          acc += abs_of(values[i]) * std::pow(rho, static_cast<double>(i) - static_cast<double>(J));
        return abs_of(scale) * acc;
      }
      case KernelKind::WeylFrac:
      case KernelKind::FracForcing:
      case KernelKind::FracForcingSum: {
        if (rho <= 1.0) {
          if (auto t = base_abs_tail(J)) return std::min(rho, 1.0) * *t;
          if (magnitude_nonincreasing() && rho < 1.0)
            return abs_of(eval(J + 1)) * rho / (1.0 - rho);
          return std::nullopt;
        }
        return std::nullopt;
      }
      default:
        return std::nullopt;
    }
  }
};

template <class S>
std::string KernelSpec<S>::describe() const {
  std::string s;
  switch (kind) {
    case KernelKind::Delta:
      s = "delta";
      break;
    case KernelKind::Cesaro:
      s = "cesaro:" + std::to_string(alpha);
      break;
    case KernelKind::Geometric:
      s = "geometric";
      break;
    case KernelKind::Explicit:
      s = "explicit[" + std::to_string(values.size()) + "]";
      break;
    case KernelKind::WeylFrac:
      s = "weylfrac:" + std::to_string(alpha);
      break;
    case KernelKind::FracForcing:
      s = "fracforcing:" + std::to_string(alpha);
      break;
    case KernelKind::FracForcingSum:
      s = "fracforcing-sum";
      break;
  }
  if (weighted()) s += "@damped";
  return s;
}

}  // namespace voldisc
