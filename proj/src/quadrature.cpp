#include "voldisc/quadrature.hpp"

#include "voldisc/core.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace voldisc {

namespace {

// Nodes are eigenvalues of the Jacobi matrix; each weight is mass times the
// squared first component of the corresponding unit eigenvector.
void golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag,
                  std::vector<double>& nodes, std::vector<double>& w0sq) {
  const int n = static_cast<int>(diag.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) J(i, i) = diag(i);
  for (int i = 0; i + 1 < n; ++i) {
    J(i, i + 1) = offdiag(i);
    J(i + 1, i) = offdiag(i);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  if (es.info() != Eigen::Success)
    throw convergence_error("quadrature: Jacobi matrix eigensolve failed");
  nodes.resize(static_cast<std::size_t>(n));
  w0sq.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    nodes[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    double q0 = es.eigenvectors()(0, i);
    w0sq[static_cast<std::size_t>(i)] = q0 * q0;
  }
}

}  // namespace

LaguerreRule gauss_laguerre_generalized(int n, double nu) {
  if (n < 1) throw argument_error("gauss_laguerre_generalized: need at least one node");
  if (nu <= -1.0) throw argument_error("gauss_laguerre_generalized: parameter must exceed -1");
  Eigen::VectorXd diag(n), off(std::max(0, n - 1));
  for (int i = 0; i < n; ++i) diag(i) = 2.0 * i + nu + 1.0;
  for (int i = 1; i < n; ++i) off(i - 1) = std::sqrt(i * (i + nu));
  LaguerreRule r;
  golub_welsch(diag, off, r.nodes, r.normweights);  // w0sq already sums to 1
  r.log_mass = std::lgamma(nu + 1.0);
  return r;
}

QuadRule gauss_legendre(int n) {
  if (n < 1) throw argument_error("gauss_legendre: need at least one node");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n), off(std::max(0, n - 1));
  for (int i = 1; i < n; ++i) {
    double ii = static_cast<double>(i);
    off(i - 1) = ii / std::sqrt(4.0 * ii * ii - 1.0);
  }
  QuadRule r;
  std::vector<double> w0sq;
  golub_welsch(diag, off, r.nodes, w0sq);
  r.weights.resize(w0sq.size());
  for (std::size_t i = 0; i < w0sq.size(); ++i) r.weights[i] = 2.0 * w0sq[i];
  return r;
}

QuadRule composite_on_panels(const QuadRule& base, const std::vector<double>& edges) {
  if (edges.size() < 2) throw argument_error("composite_on_panels: need at least one panel");
  QuadRule out;
  out.nodes.reserve(base.nodes.size() * (edges.size() - 1));
  out.weights.reserve(out.nodes.capacity());
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    double lo = edges[p], hi = edges[p + 1];
    if (!(hi > lo)) throw argument_error("composite_on_panels: edges must increase");
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
      out.nodes.push_back(mid + half * base.nodes[i]);
      out.weights.push_back(half * base.weights[i]);
    }
  }
  return out;
}

}  // namespace voldisc
