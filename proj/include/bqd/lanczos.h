#pragma once

#include <functional>

#include <Eigen/Dense>

namespace bqd {

/// Action y = H x of a Hermitian operator on flat coefficient vectors.
using LinearOperator = std::function<void(const Eigen::VectorXcd& in, Eigen::VectorXcd& out)>;

struct LanczosOptions {
  /// Target for ||H v - E v|| of the returned (unit) vector.
  double tolerance = 1e-9;
  int krylov_dim = 60;
  int max_restarts = 400;
};

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXcd vector;
  double residual = 0.0;
  int matvecs = 0;
};

/// Lowest eigenpair by explicitly restarted Lanczos with full reorthogonalization.
/// The start vector fixes the symmetry sector; the iteration never leaves it except through roundoff.
EigenPair lanczos_ground_state(const LinearOperator& op, const Eigen::VectorXcd& start,
                               const LanczosOptions& options = {});

struct KrylovStepInfo {
  bool converged = false;
  int dimension = 0;
  double error_estimate = 0.0;
};

/// v <- exp(-i H dt) v in a Lanczos subspace, growing the subspace until the standard a-posteriori
/// estimate beta_m |[exp(-i T dt) e_1]_m| falls below the tolerance.
class KrylovExponential {
public:
  explicit KrylovExponential(int max_dimension = 40, double tolerance = 1e-12)
      : max_dim_(max_dimension), tol_(tolerance) {}

  /// On failure (no convergence within max_dimension) v is left unchanged.
  KrylovStepInfo apply(const LinearOperator& op, Eigen::VectorXcd& v, double dt) const;

  int max_dimension() const { return max_dim_; }
  double tolerance() const { return tol_; }

private:
  int max_dim_;
  double tol_;
};

} // namespace bqd
