#pragma once

#include <functional>
#include <vector>

#include "bqd/model.h"

namespace bqd {

/// Product-state (Gross-Pitaevskii) fields. Each field satisfies sum |psi_j|^2 dx = 1;
/// the species density is N_sigma |psi|^2.
struct MFState {
  Eigen::VectorXcd bath;
  Eigen::VectorXcd impurity;
  double time = 0.0;

  const Eigen::VectorXcd& field(Species s) const { return s == Species::bath ? bath : impurity; }
  Eigen::VectorXcd& field(Species s) { return s == Species::bath ? bath : impurity; }
};

struct MFGroundStateOptions {
  /// Largest preconditioned residual per unit imaginary time accepted as converged.
  double tolerance = 1e-10;
  int max_iterations = 500000;
  /// Shift alpha of the kinetic preconditioner (alpha + T)^-1.
  double preconditioner_shift = 1.0;
  /// Project both fields onto even parity every iteration (symmetric grids only). In the immiscible regime the
  /// unconstrained flow can settle in a lower, one-sided state; the even solution is the parity-symmetric one.
  bool even_parity = true;
};

struct MFGroundStateInfo {
  int iterations = 0;
  double chemical_potential_bath = 0.0;
  double chemical_potential_impurity = 0.0;
  double residual = 0.0;
};

/// Stationary point of the coupled mean-field equations with the drive off.
/// Uses kinetically preconditioned normalized gradient flow, whose fixed points are exact
/// solutions of the discretized stationarity condition. Throws ConvergenceError at the cap.
MFState mf_ground_state(const MixtureModel& model, const MFGroundStateOptions& options = {},
                        MFGroundStateInfo* info = nullptr);

/// Normalized harmonic-oscillator ground state of one species on the model grid.
Eigen::VectorXcd oscillator_ground_field(const MixtureModel& model, Species s);

/// Mean-field nonlinear potential felt by species s (trap excluded).
Eigen::VectorXd mf_interaction_potential(const MFState& state, const MixtureModel& model, Species s);

/// Max-norm of (H_eff - mu) psi over both species, with mu the per-species expectation.
double mf_stationarity_residual(const MFState& state, const MixtureModel& model);

/// Strang splitting stepper: half kick (trap at the step midpoint plus mean field),
/// exact kinetic propagation in the sine basis, half kick.
class MeanFieldStepper {
public:
  MeanFieldStepper(const MixtureModel& model, double dt);

  /// Advances state by dt. Throws ConvergenceError if a per-step norm drift exceeds 1e-10.
  void step(MFState& state) const;
  double dt() const { return dt_; }

private:
  void kick(MFState& state, double t_mid, double fraction) const;

  MixtureModel model_;
  double dt_;
  SineTransform dst_;
  Eigen::VectorXcd kinetic_phase_bath_;
  Eigen::VectorXcd kinetic_phase_impurity_;
};

using MFObserver = std::function<void(const MFState&)>;

/// Propagates from state.time (= t0) to t1 with a fixed step. The observer sees the initial state and
/// every `stride`-th step, plus the final state.
void mf_propagate(MFState& state, const MixtureModel& model, double t1, double dt, int stride,
                  const MFObserver& observer);

/// Convenience overload collecting the sampled states.
std::vector<MFState> mf_propagate(const MFState& initial, const MixtureModel& model, double t0, double t1, double dt,
                                  int stride = 1);

struct MFEnergyTerms {
  double kinetic_bath = 0.0;
  double potential_bath = 0.0;
  double interaction_bath = 0.0;
  double kinetic_impurity = 0.0;
  double potential_impurity = 0.0;
  double interaction_impurity = 0.0;
  double interaction_bi = 0.0;

  double total() const {
    return kinetic_bath + potential_bath + interaction_bath + kinetic_impurity + potential_impurity +
           interaction_impurity + interaction_bi;
  }
};

/// Mean-field energy functional split by operator; intraspecies pairs carry N(N-1)/2.
MFEnergyTerms mf_energy_terms(const MFState& state, const MixtureModel& model, double t);

/// Number of steps used to cover [t0, t1] with nominal step dt; the actual step is (t1-t0)/steps.
int step_count(double t0, double t1, double dt);

} // namespace bqd
