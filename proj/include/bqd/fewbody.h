#pragma once

#include <functional>
#include <vector>

#include "bqd/model.h"

namespace bqd {

/// Two particles of one species in the (possibly shaken) trap with a contact interaction.
struct FewBodyParams {
  GridSpec grid{-50.0, 50.0, 255};
  double mass = 1.0;
  double omega = 0.3;
  double g = 0.4;
  DrivingProtocol driving;
  /// Adds a static 1/2 M w^2 x^2 on top of the shaken trap (literal two-term form).
  bool double_trap = false;
  /// Symmetrize under exchange; off for two distinguishable particles of equal mass.
  bool bosonic = true;

  void validate() const;
  /// One-body potential felt by each particle at time t.
  Eigen::VectorXd potential(double t) const;
};

/// Impurity pair of a mixture model on an n-point version of its grid (bath ignored).
FewBodyParams fewbody_params(const MixtureModel& model, std::size_t n = 255);

/// psi(x1_j, x2_k) on the n x n grid with sum |psi|^2 dx^2 = 1.
struct TwoBodyState {
  Eigen::MatrixXcd psi;
  double dx = 1.0;
  double time = 0.0;
  bool bosonic = true;

  /// sum |psi|^2 dx^2
  double norm() const { return psi.squaredNorm() * dx * dx; }
  /// max |psi - psi^T|
  double symmetry_error() const { return (psi - psi.transpose()).cwiseAbs().maxCoeff(); }
};

struct FewBodyGroundStateInfo {
  double energy = 0.0;
  double residual = 0.0;
  int matvecs = 0;
};

/// Lowest exchange-symmetric eigenstate of T1 + T2 + V(x1) + V(x2) + (g/dx) delta_jk at t = 0.
TwoBodyState fb_ground_state(const FewBodyParams& params, double tolerance = 1e-9,
                             FewBodyGroundStateInfo* info = nullptr);

/// <H(t)>
double fb_energy(const TwoBodyState& state, const FewBodyParams& params, double t);

/// Reduced one-body density n(x_j), integrating to 2.
Eigen::VectorXd fb_density(const TwoBodyState& state);

/// Per-particle mean position.
double fb_mean_position(const TwoBodyState& state, const FewBodyParams& params);

/// Strang splitting on the 2D grid: half potential kick at the step midpoint, exact kinetic factor
/// in the product sine basis, half kick. Exchange symmetry is restored after every step.
class FewBodyStepper {
public:
  FewBodyStepper(const FewBodyParams& params, double dt);
  void step(TwoBodyState& state) const;

private:
  FewBodyParams params_;
  double dt_;
  SineTransform2D dst_;
  Eigen::MatrixXcd kinetic_phase_;
};

using FBObserver = std::function<void(const TwoBodyState&)>;

/// Same sampling contract as mf_propagate. Throws ConvergenceError if a step changes the norm by more than 1e-10.
void fb_propagate(TwoBodyState& state, const FewBodyParams& params, double t1, double dt, int stride,
                  const FBObserver& observer);

} // namespace bqd
