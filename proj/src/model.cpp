#include "bqd/model.h"

#include <cmath>
#include <numbers>

#include "bqd/error.h"

namespace bqd {

std::string_view to_string(Species s) { return s == Species::bath ? "bath" : "impurity"; }

std::string_view to_string(DriveMode m) {
  switch (m) {
  case DriveMode::none: return "none";
  case DriveMode::pulse: return "pulse";
  case DriveMode::continuous: return "continuous";
  }
  return "none";
}

std::string_view to_string(Miscibility m) { return m == Miscibility::miscible ? "miscible" : "immiscible"; }

void SpeciesParams::validate() const {
  const auto name = std::string(to_string(label));
  if (count < 1) throw DomainError(name + ": particle count must be >= 1");
  if (!(mass > 0.0)) throw DomainError(name + ": mass must be positive");
  if (!(omega >= 0.0)) throw DomainError(name + ": trap frequency must be non-negative");
  if (!std::isfinite(g_intra)) throw DomainError(name + ": coupling must be finite");
}

void DrivingProtocol::validate() const {
  if (!(amplitude >= 0.0)) throw DomainError("driving amplitude must be non-negative");
  if (mode != DriveMode::none && !(omega_d > 0.0)) throw DomainError("driving frequency must be positive");
  if (mode == DriveMode::pulse && n_periods < 1) throw DomainError("pulse needs at least one period");
}

bool DrivingProtocol::active(double t) const {
  switch (mode) {
  case DriveMode::none: return false;
  case DriveMode::continuous: return true;
  case DriveMode::pulse: return t < pulse_end(*this);
  }
  return false;
}

double DrivingProtocol::displacement(double t) const {
  return active(t) ? amplitude * std::sin(omega_d * t) : 0.0;
}

double pulse_end(const DrivingProtocol& protocol) {
  if (protocol.mode != DriveMode::pulse) throw DomainError("pulse end is only defined for pulse driving");
  return 2.0 * std::numbers::pi * static_cast<double>(protocol.n_periods) / protocol.omega_d;
}

void MixtureModel::validate() const {
  grid.validate();
  bath.validate();
  impurity.validate();
  driving.validate();
  if (!std::isfinite(g_bi)) throw DomainError("interspecies coupling must be finite");
}

MixtureModel MixtureModel::undriven() const {
  MixtureModel m = *this;
  m.driving.mode = DriveMode::none;
  return m;
}

double trap_center(const MixtureModel& model, Species s, double t) {
  return s == Species::impurity ? model.driving.displacement(t) : 0.0;
}

double trap_potential(const MixtureModel& model, Species s, double x, double t) {
  const SpeciesParams& p = model.species(s);
  const double d = x - trap_center(model, s, t);
  return 0.5 * p.mass * p.omega * p.omega * d * d;
}

Eigen::VectorXd trap_potential_on_grid(const MixtureModel& model, Species s, double t) {
  const SpeciesParams& p = model.species(s);
  const double a = trap_center(model, s, t);
  const double k = 0.5 * p.mass * p.omega * p.omega;
  Eigen::VectorXd v(static_cast<Eigen::Index>(model.grid.n));
  for (std::size_t i = 0; i < model.grid.n; ++i) {
    const double d = model.grid.node(i) - a;
    v(static_cast<Eigen::Index>(i)) = k * d * d;
  }
  return v;
}

double olshanii_g1d(double a_s, double a_perp, double reduced_mass, double hbar) {
  if (!(a_perp > 0.0)) throw DomainError("transverse length must be positive");
  if (!(reduced_mass > 0.0)) throw DomainError("reduced mass must be positive");
  const double denom = 1.0 - kZetaHalf * a_s / (std::numbers::sqrt2 * a_perp);
  if (std::abs(denom) < 1e-12) throw DomainError("confinement-induced resonance: effective coupling diverges");
  return 2.0 * hbar * hbar * a_s / (reduced_mass * a_perp * a_perp) / denom;
}

Miscibility miscibility_check(double g_bb, double g_ii, double g_bi) {
  if (g_bb < 0.0 || g_ii < 0.0) throw DomainError("miscibility check needs non-negative intraspecies couplings");
  return g_bi * g_bi < g_bb * g_ii ? Miscibility::miscible : Miscibility::immiscible;
}

} // namespace bqd
