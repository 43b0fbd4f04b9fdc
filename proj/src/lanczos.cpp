#include "bqd/lanczos.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bqd/error.h"

namespace bqd {

namespace {

constexpr double kBreakdown = 1e-13;

// Classical Gram-Schmidt, applied twice.
void reorthogonalize(const Eigen::MatrixXcd& basis, int count, Eigen::VectorXcd& w) {
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXcd proj = basis.leftCols(count).adjoint() * w;
    w.noalias() -= basis.leftCols(count) * proj;
  }
}

Eigen::MatrixXd tridiagonal(const std::vector<double>& alpha, const std::vector<double>& beta, int m) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    t(i, i) = alpha[i];
    if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
  }
  return t;
}

} // namespace

EigenPair lanczos_ground_state(const LinearOperator& op, const Eigen::VectorXcd& start, const LanczosOptions& options) {
  const Eigen::Index n = start.size();
  if (n == 0) throw DomainError("Lanczos needs a non-empty start vector");
  const double start_norm = start.norm();
  if (!(start_norm > 0.0)) throw DomainError("Lanczos start vector must be non-zero");

  const int m_max = static_cast<int>(std::min<Eigen::Index>(options.krylov_dim, n));
  Eigen::MatrixXcd basis(n, m_max);
  Eigen::VectorXcd x = start / start_norm;
  Eigen::VectorXcd w(n);
  EigenPair result;

  for (int restart = 0; restart <= options.max_restarts; ++restart) {
    std::vector<double> alpha;
    std::vector<double> beta;
    basis.col(0) = x;
    int m = 0;
    for (int j = 0; j < m_max; ++j) {
      op(basis.col(j), w);
      ++result.matvecs;
      alpha.push_back(basis.col(j).dot(w).real());
      ++m;
      reorthogonalize(basis, j + 1, w);
      const double b = w.norm();
      if (j + 1 == m_max || b < kBreakdown) break;
      beta.push_back(b);
      basis.col(j + 1) = w / b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tridiagonal(alpha, beta, m));
    const Eigen::VectorXd s = es.eigenvectors().col(0);
    x = basis.leftCols(m) * s.cast<std::complex<double>>();
    x.normalize();

    op(x, w);
    ++result.matvecs;
    const double theta = x.dot(w).real();
    const double res = (w - theta * x).norm();
    result.value = theta;
    result.residual = res;
    if (res < options.tolerance) {
      result.vector = x;
      return result;
    }
  }
  throw ConvergenceError("Lanczos ground state did not converge: residual " + std::to_string(result.residual));
}

KrylovStepInfo KrylovExponential::apply(const LinearOperator& op, Eigen::VectorXcd& v, double dt) const {
  KrylovStepInfo info;
  const Eigen::Index n = v.size();
  const double vnorm = v.norm();
  if (vnorm == 0.0) {
    info.converged = true;
    return info;
  }
  const int m_max = static_cast<int>(std::min<Eigen::Index>(max_dim_, n));
  Eigen::MatrixXcd basis(n, m_max);
  basis.col(0) = v / vnorm;
  Eigen::VectorXcd w(n);
  std::vector<double> alpha;
  std::vector<double> beta;

  for (int j = 0; j < m_max; ++j) {
    op(basis.col(j), w);
    alpha.push_back(basis.col(j).dot(w).real());
    reorthogonalize(basis, j + 1, w);
    const double b = w.norm();
    const int m = j + 1;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tridiagonal(alpha, beta, m));
    const Eigen::MatrixXd& q = es.eigenvectors();
    Eigen::VectorXcd phase(m);
    for (int k = 0; k < m; ++k) phase(k) = std::polar(q(0, k), -es.eigenvalues()(k) * dt);
    const Eigen::VectorXcd c = q.cast<std::complex<double>>() * phase;

    const bool invariant = b < kBreakdown * std::max(1.0, std::abs(alpha.back()));
    const double estimate = invariant ? 0.0 : b * std::abs(c(m - 1));
    info.dimension = m;
    info.error_estimate = estimate;
    if (invariant || estimate < tol_) {
      v = vnorm * (basis.leftCols(m) * c);
      info.converged = true;
      return info;
    }
    if (j + 1 < m_max) {
      beta.push_back(b);
      basis.col(j + 1) = w / b;
    }
  }
  return info;
}

} // namespace bqd
