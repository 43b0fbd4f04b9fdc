#pragma once

#include <string_view>

#include "bqd/grid.h"

namespace bqd {

enum class Species { bath, impurity };

std::string_view to_string(Species s);

/// Parameters of one bosonic component.
struct SpeciesParams {
  Species label = Species::bath;
  int count = 1;
  double mass = 1.0;
  double omega = 0.3;
  double g_intra = 0.0;

  void validate() const;
};

enum class DriveMode { none, pulse, continuous };

std::string_view to_string(DriveMode m);

/// Trap shaking a(t) = A sin(omega_d t), applied to the impurity species only.
struct DrivingProtocol {
  double amplitude = 20.0;
  double omega_d = 0.0;
  DriveMode mode = DriveMode::none;
  int n_periods = 2;

  void validate() const;
  /// True while the trap is being shaken at time t.
  bool active(double t) const;
  /// Trap-centre displacement a(t); zero whenever the drive is inactive.
  double displacement(double t) const;
};

/// End of the shaking window for pulse mode: 2 pi n_periods / omega_d.
double pulse_end(const DrivingProtocol& protocol);

struct MixtureModel {
  SpeciesParams bath{Species::bath, 100, 1.0, 0.3, 0.5};
  SpeciesParams impurity{Species::impurity, 2, 1.0, 0.3, 0.4};
  double g_bi = 0.2;
  GridSpec grid;
  DrivingProtocol driving;

  void validate() const;
  const SpeciesParams& species(Species s) const { return s == Species::bath ? bath : impurity; }
  SpeciesParams& species(Species s) { return s == Species::bath ? bath : impurity; }
  /// Same model with the drive switched off.
  MixtureModel undriven() const;
};

/// Trap-centre displacement felt by species s at time t.
double trap_center(const MixtureModel& model, Species s, double t);

/// External potential 1/2 M w^2 (x - a(t))^2 for the impurity, 1/2 M w^2 x^2 for the bath.
double trap_potential(const MixtureModel& model, Species s, double x, double t);

/// Trap potential sampled on the model grid.
Eigen::VectorXd trap_potential_on_grid(const MixtureModel& model, Species s, double t);

/// |zeta(1/2)|.
inline constexpr double kZetaHalf = 1.4603545088095868;

/// Effective 1D contact coupling 2 hbar^2 a_s / (mu a_perp^2) / (1 - |zeta(1/2)| a_s / (sqrt2 a_perp)).
/// Throws DomainError at the confinement-induced resonance.
double olshanii_g1d(double a_s, double a_perp, double reduced_mass, double hbar = 1.0);

enum class Miscibility { miscible, immiscible };

std::string_view to_string(Miscibility m);

/// Miscible iff g_bi^2 < g_bb g_ii; the boundary counts as immiscible.
Miscibility miscibility_check(double g_bb, double g_ii, double g_bi);

} // namespace bqd
