#pragma once

// Discrete existence / resolvent / uniqueness families for non-scalar
// Volterra difference equations
//
//   B S(v) x = k(v) C x + sum_{i=1}^{n} A_i (a_i *0 S)(v + v_i) x,   v >= 0.
//
// With all lags v_i = 0 the family is produced by an explicit recursion behind
// the pencil inverse (B - sum_i a_i(0) A_i)^(-1).  With v_max > 0 the identity
// at step v determines S(v + v_max) from earlier values, so construction needs
// a seed S(0..v_max) constrained only by the identity at v = 0; seeds are
// genuinely non-unique and caller-supplied (a minimum-norm helper is provided).

#include "voldisc/conv.hpp"
#include "voldisc/core.hpp"
#include "voldisc/kernels.hpp"
#include "voldisc/linop.hpp"
#include "voldisc/sequence.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace voldisc {

template <class S>
struct ProblemSpec {
  std::vector<Mat<S>> Bs;            // size 1 = autonomous B, else B(v) per step
  Mat<S> C;
  std::vector<Mat<S>> As;            // A_1 .. A_n
  std::vector<KernelSpec<S>> kernels;  // a_1 .. a_n
  std::vector<long> lags;            // v_1 .. v_n, all >= 0
  KernelSpec<S> k;
  GridSequence<S> f;                 // optional forcing (empty = none)
  std::vector<int> noncommuting;     // indices i whose A_i is not in the commuting set

  long n() const { return static_cast<long>(As.size()); }
  long dim() const { return C.rows(); }
  bool autonomous() const { return Bs.size() == 1; }

  const Mat<S>& B_at(long v) const {
    if (autonomous()) return Bs[0];
    if (v < 0 || static_cast<std::size_t>(v) >= Bs.size())
      throw argument_error("ProblemSpec: B(v) list too short for step " + std::to_string(v));
    return Bs[static_cast<std::size_t>(v)];
  }

  long v_max() const {
    long m = 0;
    for (long l : lags) m = std::max(m, l);
    return m;
  }

  // indices whose lag attains v_max
  std::vector<long> max_lag_set() const {
    std::vector<long> M;
    long vm = v_max();
    for (long i = 0; i < n(); ++i)
      if (lags[static_cast<std::size_t>(i)] == vm) M.push_back(i);
    return M;
  }

  bool fully_commuting() const { return noncommuting.empty(); }

  void validate() const {
    if (As.empty()) throw argument_error("ProblemSpec: needs at least one operator term");
    if (As.size() != kernels.size() || As.size() != lags.size())
      throw argument_error("ProblemSpec: operator / kernel / lag lists differ in length");
    if (Bs.empty()) throw argument_error("ProblemSpec: missing B");
    long d = dim();
    for (const auto& B : Bs)
      if (B.rows() != d || B.cols() != d) throw shape_error("ProblemSpec: B dimension mismatch");
    for (const auto& A : As)
      if (A.rows() != d || A.cols() != d) throw shape_error("ProblemSpec: A_i dimension mismatch");
    for (long l : lags)
      if (l < 0) throw argument_error("ProblemSpec: lags must be >= 0");
    for (long i : max_lag_set())
      if (abs_of(kernels[static_cast<std::size_t>(i)].eval(0)) == 0.0)
        throw argument_error("ProblemSpec: kernel a_" + std::to_string(i + 1) +
                             " must not vanish at 0 (its lag attains the maximum)");
  }

  // sum_i a_i(0) A_i over a subset of indices
  Mat<S> weighted_A_sum_at_zero(const std::vector<long>& idx) const {
    Mat<S> E = Mat<S>::Zero(dim(), dim());
    for (long i : idx) E += kernels[static_cast<std::size_t>(i)].eval(0) * As[static_cast<std::size_t>(i)];
    return E;
  }

  std::vector<long> all_indices() const {
    std::vector<long> idx(static_cast<std::size_t>(n()));
    for (long i = 0; i < n(); ++i) idx[static_cast<std::size_t>(i)] = i;
    return idx;
  }
};

template <class S>
struct ExistenceFamily {
  GridSequence<S> S_seq;                    // S(0..V)
  std::vector<GridSequence<S>> AiS;         // A_i S(v) per term
  double construction_residual = 0.0;       // max defining-identity residual at build time
  std::vector<double> norm_partial;         // cumulative sum_{j<=v} ||S(j)||

  long horizon() const { return S_seq.horizon(); }
};

struct ResidualReport {
  std::vector<double> per_index;
  double max_residual = 0.0;
  bool pass = false;
  double tol = 0.0;
};

namespace detail {

template <class S>
std::vector<std::vector<S>> materialize_kernels(const ProblemSpec<S>& spec, long horizon) {
  std::vector<std::vector<S>> a;
  a.reserve(spec.kernels.size());
  for (const auto& ker : spec.kernels) a.push_back(ker.materialize(horizon));
  return a;
}

template <class S>
void fill_norm_partial(ExistenceFamily<S>& fam) {
  fam.norm_partial.resize(static_cast<std::size_t>(fam.horizon()) + 1);
  double acc = 0.0;
  for (long v = 0; v <= fam.horizon(); ++v) {
    acc += frobenius_norm(fam.S_seq.at(v));
    fam.norm_partial[static_cast<std::size_t>(v)] = acc;
  }
}

template <class S>
void fill_AiS(const ProblemSpec<S>& spec, ExistenceFamily<S>& fam) {
  fam.AiS.clear();
  fam.AiS.reserve(static_cast<std::size_t>(spec.n()));
  for (long i = 0; i < spec.n(); ++i) {
    GridSequence<S> g = GridSequence<S>::zeros(fam.horizon(), spec.dim(), spec.dim());
    for (long v = 0; v <= fam.horizon(); ++v)
      g.values[static_cast<std::size_t>(v)] = spec.As[static_cast<std::size_t>(i)] * fam.S_seq.at(v);
    fam.AiS.push_back(std::move(g));
  }
}

}  // namespace detail

// Residual report for the defining identity over all v with v + v_max inside
// the family horizon.  Refuses a kernel k that vanishes identically.
namespace detail {

// Per-index residuals of the defining identity; shared by the public verifier
// and the construction routines (which must also verify k == 0 problems).
template <class S>
std::vector<double> existence_residuals(const ProblemSpec<S>& spec,
                                        const ExistenceFamily<S>& family) {
  long vmax = spec.v_max();
  long V = family.horizon() - vmax;
  if (V < 0)
    throw argument_error("verify_existence: family horizon shorter than the maximum lag");
  auto kvals = spec.k.materialize(family.horizon());
  auto a = detail::materialize_kernels(spec, family.horizon());
  std::vector<double> per_index(static_cast<std::size_t>(V) + 1, 0.0);
  parallel_for(static_cast<std::size_t>(V) + 1, [&](std::size_t vi) {
    long v = static_cast<long>(vi);
    Mat<S> lhs = spec.B_at(v) * family.S_seq.at(v);
    Mat<S> rhs = kvals[static_cast<std::size_t>(v)] * spec.C;
    for (long i = 0; i < spec.n(); ++i) {
      long end = v + spec.lags[static_cast<std::size_t>(i)];
      Mat<S> conv = Mat<S>::Zero(spec.dim(), spec.dim());
      for (long j = 0; j <= end; ++j)
        conv += a[static_cast<std::size_t>(i)][static_cast<std::size_t>(end - j)] *
                family.S_seq.at(j);
      rhs += spec.As[static_cast<std::size_t>(i)] * conv;
    }
    per_index[vi] = frobenius_norm(Mat<S>(lhs - rhs));
  });
  return per_index;
}

template <class S>
double max_existence_residual(const ProblemSpec<S>& spec, const ExistenceFamily<S>& family) {
  double m = 0.0;
  for (double r : existence_residuals(spec, family)) m = std::max(m, r);
  return m;
}

}  // namespace detail

template <class S>
ResidualReport verify_existence(const ProblemSpec<S>& spec, const ExistenceFamily<S>& family,
                                double tol) {
  spec.validate();
  auto kvals = spec.k.materialize(family.horizon());
  bool k_nonzero = false;
  for (const auto& kv : kvals) k_nonzero = k_nonzero || (abs_of(kv) != 0.0);
  if (!k_nonzero)
    throw precondition_error("verify_existence: k vanishes identically on the horizon");

  ResidualReport rep;
  rep.tol = tol;
  rep.per_index = detail::existence_residuals(spec, family);
  for (double r : rep.per_index) rep.max_residual = std::max(rep.max_residual, r);
  rep.pass = rep.max_residual <= tol;
  return rep;
}

// Family construction for the zero-lag case: S(0) = k(0) P C with
// P = (B - sum_i a_i(0) A_i)^(-1), then per step
//   S(v) = P [ k(v) C + sum_i A_i sum_{j<v} a_i(v-j) S(j) ].
template <class S>
ExistenceFamily<S> build_family(const ProblemSpec<S>& spec, long V, double tol = 1e-10) {
  spec.validate();
  if (!spec.autonomous())
    throw argument_error("build_family: construction requires an autonomous B");
  if (spec.v_max() != 0)
    throw argument_error("build_family: all lags must be zero (use build_family_shifted)");
  if (V < 0) throw argument_error("build_family: horizon must be >= 0");
  if (abs_of(spec.k.eval(0)) == 0.0)
    throw precondition_error("build_family: k(0) = 0 leaves S(0) undetermined by the recursion");

  long d = spec.dim();
  Mat<S> P = invert_checked(Mat<S>(spec.Bs[0] - spec.weighted_A_sum_at_zero(spec.all_indices())),
                            "build_family: pencil B - sum a_i(0) A_i");
  auto a = detail::materialize_kernels(spec, V);
  auto kvals = spec.k.materialize(V);

  ExistenceFamily<S> fam;
  fam.S_seq = GridSequence<S>::zeros(V, d, d);
  fam.S_seq.values[0] = kvals[0] * (P * spec.C);
  for (long v = 1; v <= V; ++v) {
    Mat<S> rhs = kvals[static_cast<std::size_t>(v)] * spec.C;
    for (long i = 0; i < spec.n(); ++i) {
      Mat<S> conv = Mat<S>::Zero(d, d);
      for (long j = 0; j < v; ++j)
        conv += a[static_cast<std::size_t>(i)][static_cast<std::size_t>(v - j)] *
                fam.S_seq.at(j);
      rhs += spec.As[static_cast<std::size_t>(i)] * conv;
    }
    fam.S_seq.values[static_cast<std::size_t>(v)] = P * rhs;
  }
  detail::fill_AiS(spec, fam);
  detail::fill_norm_partial(fam);
  fam.construction_residual = detail::max_existence_residual(spec, fam);
  if (fam.construction_residual > tol)
    throw convergence_error("build_family: construction residual " +
                            std::to_string(fam.construction_residual) + " exceeds " +
                            std::to_string(tol));
  return fam;
}

// Residual of the seed constraint: the defining identity at v = 0,
//   B S(0) = k(0) C + sum_i A_i (a_i *0 S)(v_i),
// which is the only condition the seed S(0..v_max) must satisfy.
template <class S>
double seed_constraint_residual(const ProblemSpec<S>& spec, const GridSequence<S>& seed) {
  long vmax = spec.v_max();
  if (seed.horizon() < vmax)
    throw argument_error("seed must cover 0..v_max");
  Mat<S> lhs = spec.B_at(0) * seed.at(0);
  Mat<S> rhs = spec.k.eval(0) * spec.C;
  for (long i = 0; i < spec.n(); ++i) {
    long vi = spec.lags[static_cast<std::size_t>(i)];
    Mat<S> conv = Mat<S>::Zero(spec.dim(), spec.dim());
    for (long j = 0; j <= vi; ++j)
      conv += spec.kernels[static_cast<std::size_t>(i)].eval(vi - j) * seed.at(j);
    rhs += spec.As[static_cast<std::size_t>(i)] * conv;
  }
  return frobenius_norm(Mat<S>(lhs - rhs));
}

// Family construction for v_max > 0: the identity at step v is solved for
// S(v + v_max) behind E = sum_{i in M} a_i(0) A_i, where M is the set of
// maximal-lag indices; terms with smaller lag contribute only known values.
template <class S>
ExistenceFamily<S> build_family_shifted(const ProblemSpec<S>& spec, const GridSequence<S>& seed,
                                        long V, double seed_tol = 1e-8, double tol = 1e-10) {
  spec.validate();
  if (!spec.autonomous())
    throw argument_error("build_family_shifted: construction requires an autonomous B");
  long vmax = spec.v_max();
  if (vmax == 0)
    throw argument_error("build_family_shifted: no positive lag present (use build_family)");
  if (seed.horizon() != vmax)
    throw argument_error("build_family_shifted: seed must have horizon exactly v_max");
  if (V < vmax) throw argument_error("build_family_shifted: horizon must cover the seed");
  double seed_res = seed_constraint_residual(spec, seed);
  if (seed_res > seed_tol)
    throw seed_error("build_family_shifted: seed violates the step-0 identity (residual " +
                     std::to_string(seed_res) + ", tolerance " + std::to_string(seed_tol) + ")");

  long d = spec.dim();
  auto M = spec.max_lag_set();
  Mat<S> Einv = invert_checked(spec.weighted_A_sum_at_zero(M),
                               "build_family_shifted: sum_{i in M} a_i(0) A_i");
  auto a = detail::materialize_kernels(spec, V);
  auto kvals = spec.k.materialize(V);

  ExistenceFamily<S> fam;
  fam.S_seq = GridSequence<S>::zeros(V, d, d);
  for (long j = 0; j <= vmax; ++j) fam.S_seq.values[static_cast<std::size_t>(j)] = seed.at(j);

  for (long v = 1; v + vmax <= V; ++v) {
    // identity at v, solved for S(v + vmax)
    Mat<S> rhs = spec.B_at(v) * fam.S_seq.at(v) - kvals[static_cast<std::size_t>(v)] * spec.C;
    for (long i = 0; i < spec.n(); ++i) {
      long vi = spec.lags[static_cast<std::size_t>(i)];
      long end = v + vi;
      long upto = (vi == vmax) ? end - 1 : end;  // maximal-lag terms exclude the unknown
      Mat<S> conv = Mat<S>::Zero(d, d);
      for (long j = 0; j <= upto; ++j)
        conv += a[static_cast<std::size_t>(i)][static_cast<std::size_t>(end - j)] *
                fam.S_seq.at(j);
      rhs -= spec.As[static_cast<std::size_t>(i)] * conv;
    }
    fam.S_seq.values[static_cast<std::size_t>(v + vmax)] = Einv * rhs;
  }
  detail::fill_AiS(spec, fam);
  detail::fill_norm_partial(fam);
  fam.construction_residual = detail::max_existence_residual(spec, fam);
  if (fam.construction_residual > tol)
    throw convergence_error("build_family_shifted: construction residual " +
                            std::to_string(fam.construction_residual) + " exceeds " +
                            std::to_string(tol));
  return fam;
}

// Minimum-Frobenius-norm seed for the shifted construction: the step-0
// identity is one d x d linear constraint on the (v_max+1) unknown matrices,
// solved column-by-column in least-norm form.
template <class S>
GridSequence<S> min_norm_seed(const ProblemSpec<S>& spec) {
  spec.validate();
  long vmax = spec.v_max();
  long d = spec.dim();
  // T_j = [j == 0] B - sum_{i : v_i >= j} a_i(v_i - j) A_i, constraint
  // sum_j T_j S(j) = k(0) C.
  Mat<S> T = Mat<S>::Zero(d, d * (vmax + 1));
  for (long j = 0; j <= vmax; ++j) {
    Mat<S> Tj = (j == 0) ? Mat<S>(spec.B_at(0)) : Mat<S>(Mat<S>::Zero(d, d));
    for (long i = 0; i < spec.n(); ++i)
      if (spec.lags[static_cast<std::size_t>(i)] >= j)
        Tj -= spec.kernels[static_cast<std::size_t>(i)].eval(
                  spec.lags[static_cast<std::size_t>(i)] - j) *
              spec.As[static_cast<std::size_t>(i)];
    T.block(0, j * d, d, d) = Tj;
  }
  Mat<S> rhs = spec.k.eval(0) * spec.C;
  Eigen::CompleteOrthogonalDecomposition<Mat<S>> cod(T);
  Mat<S> X = cod.solve(rhs);  // least-squares, minimum-norm: d(vmax+1) x d
  double defect = frobenius_norm(Mat<S>(T * X - rhs));
  if (defect > 1e-8 * std::max(1.0, frobenius_norm(rhs)))
    throw seed_error("min_norm_seed: step-0 identity is inconsistent (defect " +
                     std::to_string(defect) + ")");
  GridSequence<S> seed = GridSequence<S>::zeros(vmax, d, d);
  for (long j = 0; j <= vmax; ++j)
    seed.values[static_cast<std::size_t>(j)] = X.block(j * d, 0, d, d);
  return seed;
}

// Matrix-valued kernel A(v) = sum_i a_i(v) A_i on 0..horizon.
template <class S>
GridSequence<S> matrix_kernel(const ProblemSpec<S>& spec, long horizon) {
  GridSequence<S> A = GridSequence<S>::zeros(horizon, spec.dim(), spec.dim());
  for (long v = 0; v <= horizon; ++v) {
    Mat<S> acc = Mat<S>::Zero(spec.dim(), spec.dim());
    for (long i = 0; i < spec.n(); ++i)
      acc += spec.kernels[static_cast<std::size_t>(i)].eval(v) * spec.As[static_cast<std::size_t>(i)];
    A.values[static_cast<std::size_t>(v)] = acc;
  }
  return A;
}

struct ResolventEqResiduals {
  double first = 0.0;   // B(v) S(v) - k(v) C - (A *0 S)(v)
  double second = 0.0;  // B(v) S(v) - k(v) C - (S *0 A)(v)
};

template <class S>
ResolventEqResiduals verify_resolvent_eqs(const std::vector<Mat<S>>& Bs, const GridSequence<S>& Sf,
                                          const GridSequence<S>& A, const KernelSpec<S>& k,
                                          const Mat<S>& C) {
  long V = std::min(Sf.horizon(), A.horizon());
  if (V < 0) throw argument_error("verify_resolvent_eqs: empty sequences");
  if (Sf.rows() != C.rows() || A.rows() != C.rows())
    throw shape_error("verify_resolvent_eqs: dimension mismatch");
  ResolventEqResiduals r;
  for (long v = 0; v <= V; ++v) {
    const Mat<S>& B = (Bs.size() == 1) ? Bs[0] : Bs.at(static_cast<std::size_t>(v));
    Mat<S> base = B * Sf.at(v) - k.eval(v) * C;
    Mat<S> c1 = Mat<S>::Zero(C.rows(), C.cols());
    Mat<S> c2 = Mat<S>::Zero(C.rows(), C.cols());
    for (long j = 0; j <= v; ++j) {
      c1 += A.at(v - j) * Sf.at(j);
      c2 += Sf.at(v - j) * A.at(j);
    }
    r.first = std::max(r.first, frobenius_norm(Mat<S>(base - c1)));
    r.second = std::max(r.second, frobenius_norm(Mat<S>(base - c2)));
  }
  return r;
}

// Residual of W(v) B(v) = k(v) C + sum_{j=0}^{v} W(v-j) A(j).
template <class S>
double verify_uniqueness_family(const std::vector<Mat<S>>& Bs, const GridSequence<S>& W,
                                const GridSequence<S>& A, const KernelSpec<S>& k,
                                const Mat<S>& C) {
  long V = std::min(W.horizon(), A.horizon());
  if (V < 0) throw argument_error("verify_uniqueness_family: empty sequences");
  double res = 0.0;
  for (long v = 0; v <= V; ++v) {
    const Mat<S>& B = (Bs.size() == 1) ? Bs[0] : Bs.at(static_cast<std::size_t>(v));
    Mat<S> lhs = W.at(v) * B;
    Mat<S> rhs = k.eval(v) * C;
    for (long j = 0; j <= v; ++j) rhs += W.at(v - j) * A.at(j);
    res = std::max(res, frobenius_norm(Mat<S>(lhs - rhs)));
  }
  return res;
}

// Max over v <= V of ||(k C *0 u)(v) - (W *0 f)(v)||: the convolution identity
// behind the at-most-one-solution argument (autonomous B).
template <class S>
double convolution_uniqueness_identity(const GridSequence<S>& W, const GridSequence<S>& f,
                                       const KernelSpec<S>& k, const Mat<S>& C,
                                       const GridSequence<S>& u, long V) {
  if (V > std::min({W.horizon(), f.horizon(), u.horizon()}))
    throw argument_error("convolution_uniqueness_identity: horizon exceeds stored data");
  double defect = 0.0;
  for (long v = 0; v <= V; ++v) {
    Mat<S> lhs = Mat<S>::Zero(C.rows(), u.cols());
    for (long j = 0; j <= v; ++j) lhs += k.eval(v - j) * mul(C, u.at(j));
    Mat<S> rhs = Mat<S>::Zero(W.rows(), f.cols());
    for (long j = 0; j <= v; ++j) rhs += mul(W.at(v - j), f.at(j));
    defect = std::max(defect, frobenius_norm(Mat<S>(lhs - rhs)));
  }
  return defect;
}

struct SummabilityCertificate {
  enum class Criterion { general, commuting, growth, none };
  Criterion criterion = Criterion::none;
  double margin = 0.0;           // 1 - sum_i tail_i * ||pencil-inverse composed with A_i||
  double total_bound = 0.0;      // rigorous bound on sum_v ||S(v)|| (inf when k not summable)
  double partial_sum = 0.0;      // sum_{v <= V} ||S(v)|| from the family
  std::vector<double> partial_sums_AiS;  // per-i sum_{v <= V} ||A_i (a_i *0 S)(v)||
  double extrapolated_tail = 0.0;  // heuristic geometric extrapolation of the remainder
  bool tail_heuristic_valid = false;
  bool certified = false;        // margin > 0 and total bound finite
};

// Strict smallness criterion for summability of the family, plus partial sums
// and a (clearly-labelled) heuristic tail extrapolation.  Refuses when some
// a_i has no finite absolute tail.
template <class S>
SummabilityCertificate summability_check(const ProblemSpec<S>& spec,
                                         const ExistenceFamily<S>& family) {
  spec.validate();
  if (!spec.autonomous())
    throw argument_error("summability_check: requires an autonomous B");
  long vmax = spec.v_max();

  // Per-kernel absolute tails; refuse when a kernel is not summable.
  std::vector<double> tail0(static_cast<std::size_t>(spec.n()), 0.0);
  for (long i = 0; i < spec.n(); ++i) {
    auto tail = spec.kernels[static_cast<std::size_t>(i)].abs_tail(0);
    if (!tail)
      throw certificate_error("summability_check: kernel a_" + std::to_string(i + 1) + " (" +
                              spec.kernels[static_cast<std::size_t>(i)].describe() +
                              ") is not absolutely summable");
    tail0[static_cast<std::size_t>(i)] = *tail;
  }

  SummabilityCertificate cert;
  auto ktail = spec.k.abs_tail(0);
  double ksum = ktail ? (*ktail + abs_of(spec.k.eval(0))) : std::numeric_limits<double>::infinity();

  if (vmax == 0) {
    // zero lags: S(v) = P [k(v) C + sum_i A_i sum_{j<v} a_i(v-j) S(j)], so
    // summing norms gives (1 - theta) * sum ||S|| <= ||PC|| * sum |k|.
    Mat<S> P =
        invert_checked(Mat<S>(spec.Bs[0] - spec.weighted_A_sum_at_zero(spec.all_indices())),
                       "summability_check: pencil B - sum a_i(0) A_i");
    double theta_general = 0.0, theta_commuting = 0.0;
    for (long i = 0; i < spec.n(); ++i) {
      theta_general +=
          tail0[static_cast<std::size_t>(i)] *
          spectral_norm(Mat<S>(P * spec.As[static_cast<std::size_t>(i)]));
      theta_commuting +=
          tail0[static_cast<std::size_t>(i)] *
          spectral_norm(Mat<S>(spec.As[static_cast<std::size_t>(i)] * P));
    }
    double theta;
    if (spec.fully_commuting() && theta_commuting < theta_general) {
      cert.criterion = SummabilityCertificate::Criterion::commuting;
      theta = theta_commuting;
    } else {
      cert.criterion = SummabilityCertificate::Criterion::general;
      theta = theta_general;
    }
    cert.margin = 1.0 - theta;
    double pc = spectral_norm(Mat<S>(P * spec.C));
    cert.total_bound = (cert.margin > 0.0 && std::isfinite(ksum))
                           ? pc * ksum / cert.margin
                           : std::numeric_limits<double>::infinity();
  } else {
    // positive lags: isolate E S(v + v_max) with E = sum_{i in M} a_i(0) A_i
    // in the defining identity.  Summing norms over v >= 0,
    //   sum_{w >= v_max} ||S(w)|| <= theta sum ||S|| + ||E^{-1}C||_F sum|k|,
    // so sum ||S|| <= (seed + ||E^{-1}C||_F sum|k|) / (1 - theta) with the
    // seed block sum_{w < v_max} ||S(w)|| taken from the family values.
    auto M = spec.max_lag_set();
    Mat<S> E = spec.weighted_A_sum_at_zero(M);
    Mat<S> Einv = invert_checked(E, "summability_check: operator sum_{i in M} a_i(0) A_i");
    std::vector<bool> in_M(static_cast<std::size_t>(spec.n()), false);
    for (long i : M) in_M[static_cast<std::size_t>(i)] = true;
    double theta = spectral_norm(Mat<S>(Einv * spec.Bs[0]));
    for (long i = 0; i < spec.n(); ++i) {
      double asum = tail0[static_cast<std::size_t>(i)] +
                    (in_M[static_cast<std::size_t>(i)]
                         ? 0.0
                         : abs_of(spec.kernels[static_cast<std::size_t>(i)].eval(0)));
      theta += asum * spectral_norm(Mat<S>(Einv * spec.As[static_cast<std::size_t>(i)]));
    }
    cert.criterion = SummabilityCertificate::Criterion::general;
    cert.margin = 1.0 - theta;
    double seed = 0.0;
    for (long w = 0; w < vmax && w <= family.horizon(); ++w)
      seed += frobenius_norm(family.S_seq.at(w));
    double ec = frobenius_norm(Mat<S>(Einv * spec.C));
    cert.total_bound = (cert.margin > 0.0 && std::isfinite(ksum))
                           ? (seed + ec * ksum) / cert.margin
                           : std::numeric_limits<double>::infinity();
  }
  cert.certified = cert.margin > 0.0 && std::isfinite(cert.total_bound);

  long V = family.horizon();
  cert.partial_sum = family.norm_partial.empty() ? 0.0 : family.norm_partial.back();
  auto a = detail::materialize_kernels(spec, V);
  for (long i = 0; i < spec.n(); ++i) {
    double acc = 0.0;
    for (long v = 0; v <= V; ++v) {
      Mat<S> conv = Mat<S>::Zero(spec.dim(), spec.dim());
      for (long j = 0; j <= v; ++j)
        conv += a[static_cast<std::size_t>(i)][static_cast<std::size_t>(v - j)] *
                family.S_seq.at(j);
      acc += frobenius_norm(Mat<S>(spec.As[static_cast<std::size_t>(i)] * conv));
    }
    cert.partial_sums_AiS.push_back(acc);
  }

  // heuristic: estimate a geometric rate from the last decade of ||S(v)||
  long D = std::max<long>(1, V / 10);
  if (V > D) {
    double tv = frobenius_norm(family.S_seq.at(V));
    double tp = frobenius_norm(family.S_seq.at(V - D));
    if (tv > 0.0 && tp > 0.0) {
      double rho = std::pow(tv / tp, 1.0 / static_cast<double>(D));
      if (rho < 1.0) {
        cert.extrapolated_tail = tv * rho / (1.0 - rho);
        cert.tail_heuristic_valid = true;
      }
    } else if (tv == 0.0) {
      cert.extrapolated_tail = 0.0;
      cert.tail_heuristic_valid = true;
    }
  }
  return cert;
}

struct UniquenessVerdict {
  bool unique = false;
  std::optional<long> failing_index;
  double min_margin = 0.0;  // smallest sigma_min(B(v) - A(0)) seen
};

// Nonautonomous uniqueness mechanism: u is pinned down step by step as soon
// as every B(v) - A(0) is injective, A(0) being the matrix kernel at 0.
template <class S>
UniquenessVerdict nonautonomous_uniqueness(const std::vector<Mat<S>>& Bs, const Mat<S>& A0) {
  if (Bs.empty()) throw argument_error("nonautonomous_uniqueness: empty B list");
  UniquenessVerdict v;
  v.unique = true;
  v.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < Bs.size(); ++i) {
    auto rep = injectivity_check(Mat<S>(Bs[i] - A0));
    v.min_margin = std::min(v.min_margin, rep.sigma_min);
    if (!rep.injective) {
      v.unique = false;
      if (!v.failing_index) v.failing_index = static_cast<long>(i);
    }
  }
  return v;
}

// Kernel-shift closure: if S is a family for kernel k, then (g *0 S) is a
// family for kernel (k *0 g).  Returns the transformed family values and the
// transformed kernel as an explicit finite list on the same horizon.
template <class S>
std::pair<GridSequence<S>, std::vector<S>> convolve_family(const ExistenceFamily<S>& family,
                                                           const KernelSpec<S>& k,
                                                           const KernelSpec<S>& g) {
  long V = family.horizon();
  auto gv = g.materialize(V);
  GridSequence<S> Sg = conv0(gv, family.S_seq);
  std::vector<S> kg = conv0(k.materialize(V), gv);
  return {std::move(Sg), std::move(kg)};
}

}  // namespace voldisc
