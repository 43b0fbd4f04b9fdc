#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bqd/grid.h"

namespace bqd {

struct DampedParams {
  double lambda = 0.05;
  double omega_eff = 0.3;
  double phase = 0.0;
};

/// Known inputs of the damped model: drive amplitude A, drive frequency, x0 = <X_I(0)>.
/// The initial velocity is u0 = A omega_d and the force amplitude F0 = A omega_eff^2.
struct DampedDrive {
  double amplitude = 20.0;
  double omega_d = 1.0;
  double x0 = 0.0;
};

/// e^{-lambda t/2} [x0 cos w0 t + (u0 + lambda x0/2)/w0 sin w0 t] + F0 sin(omega_d t + phase)/D,
/// w0 = sqrt(omega_eff^2 - lambda^2/4), D = (omega_eff^2 - omega_d^2)^2 + omega_d^2 lambda^2,
/// or sqrt of that when `textbook` is set. Throws DomainError unless omega_eff > lambda/2.
double damped_trajectory(const DampedParams& params, const DampedDrive& drive, double t, bool textbook = false);
Eigen::VectorXd damped_trajectory(const DampedParams& params, const DampedDrive& drive, const Eigen::VectorXd& t,
                                  bool textbook = false);

struct FitOptions {
  DampedParams initial;
  bool textbook = false;
  /// Samples with t < skip are ignored; a negative value means one drive period.
  double skip = -1.0;
  int max_iterations = 200;
};

struct FitResult {
  DampedParams params;
  /// sqrt(sum of squared residuals) over the fitted window.
  double residual_norm = 0.0;
  /// sigma^2 (J^T J)^-1 in the order (lambda, omega_eff, phase).
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  /// Smallest over largest singular value of the Jacobian at the solution.
  double conditioning = 0.0;
  bool rank_deficient = false;
  int iterations = 0;
  std::size_t samples = 0;
};

/// Gauss-Newton with step halving on (lambda, omega_eff, phase). x0 is taken from the drive argument.
/// Throws ConvergenceError if the iteration cap is hit before the step stalls.
FitResult fit_damped(const Eigen::VectorXd& t, const Eigen::VectorXd& x, const DampedDrive& drive,
                     const FitOptions& options = {});

/// |S_ref - S_other| / S_ref on aligned time grids; points with S_ref below `floor` are masked.
struct ConvergenceDelta {
  Eigen::VectorXd values;
  std::vector<bool> valid;
  double max = 0.0;
};

ConvergenceDelta convergence_delta(const Eigen::VectorXd& reference, const Eigen::VectorXd& other,
                                   double floor = 1e-6);

/// Half-width of the region where density exceeds threshold * max, edges located by linear interpolation.
double tf_radius(const Eigen::VectorXd& density, const Eigen::VectorXd& nodes, double threshold = 1e-2);

/// Trapezoidal time average.
double time_average(const Eigen::VectorXd& t, const Eigen::VectorXd& values);

} // namespace bqd
