#include "bqd/meanfield.h"

#include <algorithm>
#include <cmath>

#include "bqd/error.h"

namespace bqd {

namespace {

constexpr double kNormDriftLimit = 1e-10;

double field_norm2(const Eigen::VectorXcd& psi, double dx) { return psi.squaredNorm() * dx; }

void normalize(Eigen::VectorXcd& psi, double dx) { psi /= std::sqrt(field_norm2(psi, dx)); }

Eigen::VectorXcd apply_kinetic(const SineTransform& dst, const Eigen::VectorXd& eps, const Eigen::VectorXcd& psi) {
  Eigen::VectorXcd c = psi;
  dst.apply(c);
  c.array() *= eps.array();
  dst.apply(c);
  return c;
}

Species other(Species s) { return s == Species::bath ? Species::impurity : Species::bath; }

} // namespace

int step_count(double t0, double t1, double dt) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  if (t1 < t0) throw DomainError("end time precedes start time");
  const double steps = std::ceil((t1 - t0) / dt - 1e-9);
  return std::max(0, static_cast<int>(steps));
}

Eigen::VectorXcd oscillator_ground_field(const MixtureModel& model, Species s) {
  const SpeciesParams& p = model.species(s);
  const GridSpec& g = model.grid;
  Eigen::VectorXcd psi(static_cast<Eigen::Index>(g.n));
  if (p.omega > 0.0) {
    const double inv_len2 = p.mass * p.omega;
    for (std::size_t i = 0; i < g.n; ++i) {
      const double x = g.node(i);
      psi(static_cast<Eigen::Index>(i)) = std::exp(-0.5 * inv_len2 * x * x);
    }
  } else {
    const double k = 3.14159265358979323846 / g.length();
    for (std::size_t i = 0; i < g.n; ++i) psi(static_cast<Eigen::Index>(i)) = std::sin(k * (g.node(i) - g.x_min));
  }
  normalize(psi, g.spacing());
  return psi;
}

Eigen::VectorXd mf_interaction_potential(const MFState& state, const MixtureModel& model, Species s) {
  const SpeciesParams& self = model.species(s);
  const SpeciesParams& partner = model.species(other(s));
  const Eigen::VectorXd rho_self = state.field(s).cwiseAbs2();
  const Eigen::VectorXd rho_other = state.field(other(s)).cwiseAbs2();
  return self.g_intra * static_cast<double>(self.count - 1) * rho_self +
         model.g_bi * static_cast<double>(partner.count) * rho_other;
}

double mf_stationarity_residual(const MFState& state, const MixtureModel& model) {
  const double dx = model.grid.spacing();
  SineTransform dst(model.grid.n);
  double worst = 0.0;
  for (Species s : {Species::bath, Species::impurity}) {
    const Eigen::VectorXcd& psi = state.field(s);
    const Eigen::VectorXd u = trap_potential_on_grid(model.undriven(), s, 0.0) + mf_interaction_potential(state, model, s);
    Eigen::VectorXcd hpsi = apply_kinetic(dst, kinetic_spectrum(model.grid, model.species(s).mass), psi);
    hpsi.array() += u.array() * psi.array();
    const double mu = psi.dot(hpsi).real() * dx / field_norm2(psi, dx);
    worst = std::max(worst, (hpsi - mu * psi).cwiseAbs().maxCoeff());
  }
  return worst;
}

MFState mf_ground_state(const MixtureModel& model_in, const MFGroundStateOptions& options, MFGroundStateInfo* info) {
  model_in.validate();
  const MixtureModel model = model_in.undriven();
  const double dx = model.grid.spacing();
  const double alpha = options.preconditioner_shift;
  if (!(alpha > 0.0)) throw DomainError("preconditioner shift must be positive");

  SineTransform dst(model.grid.n);
  const Species both[2] = {Species::bath, Species::impurity};
  Eigen::VectorXd eps[2];
  Eigen::VectorXd trap[2];
  Eigen::VectorXd precond[2];
  for (int k = 0; k < 2; ++k) {
    eps[k] = kinetic_spectrum(model.grid, model.species(both[k]).mass);
    trap[k] = trap_potential_on_grid(model, both[k], 0.0);
    precond[k] = (alpha + eps[k].array()).inverse();
  }

  MFState state;
  state.bath = oscillator_ground_field(model, Species::bath);
  state.impurity = oscillator_ground_field(model, Species::impurity);

  const bool mirror = options.even_parity && std::abs(model.grid.x_min + model.grid.x_max) <= 1e-12 * model.grid.length();
  Eigen::VectorXcd dir[2];
  double mu[2] = {0.0, 0.0};
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    double spread = 1.0;
    for (int k = 0; k < 2; ++k) {
      const Eigen::VectorXcd& psi = state.field(both[k]);
      const Eigen::VectorXd u = trap[k] + mf_interaction_potential(state, model, both[k]);
      Eigen::VectorXcd hpsi = apply_kinetic(dst, eps[k], psi);
      hpsi.array() += u.array() * psi.array();
      mu[k] = psi.dot(hpsi).real() * dx;
      Eigen::VectorXcd r = hpsi - mu[k] * psi;
      dst.apply(r);
      r.array() *= precond[k].array();
      dst.apply(r);
      dir[k] = std::move(r);
      // Bound on the preconditioned operator's spectrum; includes the linearized nonlinearity.
      const SpeciesParams& p = model.species(both[k]);
      const double nonlinear = std::abs(p.g_intra) * static_cast<double>(p.count - 1) * psi.cwiseAbs2().maxCoeff();
      spread = std::max(spread, (u.maxCoeff() + nonlinear - mu[k]) / alpha);
    }
    const double tau = 0.9 / spread;
    double change = 0.0;
    for (int k = 0; k < 2; ++k) {
      Eigen::VectorXcd& psi = state.field(both[k]);
      Eigen::VectorXcd next = psi - tau * dir[k];
      if (mirror) next = 0.5 * (next + next.reverse()).eval();
      normalize(next, dx);
      change = std::max(change, (next - psi).cwiseAbs().maxCoeff());
      psi = std::move(next);
    }
    if (change / tau < options.tolerance) {
      if (info != nullptr) {
        info->iterations = iter;
        info->chemical_potential_bath = mu[0];
        info->chemical_potential_impurity = mu[1];
        info->residual = mf_stationarity_residual(state, model);
      }
      return state;
    }
  }
  throw ConvergenceError("mean-field ground state did not converge within " + std::to_string(options.max_iterations) +
                         " iterations");
}

MeanFieldStepper::MeanFieldStepper(const MixtureModel& model, double dt) : model_(model), dt_(dt), dst_(model.grid.n) {
  model_.validate();
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  const auto phase = [dt](const Eigen::VectorXd& eps) {
    Eigen::VectorXcd out(eps.size());
    for (Eigen::Index k = 0; k < eps.size(); ++k) out(k) = std::polar(1.0, -eps(k) * dt);
    return out;
  };
  kinetic_phase_bath_ = phase(kinetic_spectrum(model.grid, model.bath.mass));
  kinetic_phase_impurity_ = phase(kinetic_spectrum(model.grid, model.impurity.mass));
}

void MeanFieldStepper::kick(MFState& state, double t_mid, double fraction) const {
  const double h = fraction * dt_;
  const Eigen::VectorXd u_bath =
      trap_potential_on_grid(model_, Species::bath, t_mid) + mf_interaction_potential(state, model_, Species::bath);
  const Eigen::VectorXd u_imp = trap_potential_on_grid(model_, Species::impurity, t_mid) +
                                mf_interaction_potential(state, model_, Species::impurity);
  for (Eigen::Index j = 0; j < u_bath.size(); ++j) {
    state.bath(j) *= std::polar(1.0, -u_bath(j) * h);
    state.impurity(j) *= std::polar(1.0, -u_imp(j) * h);
  }
}

void MeanFieldStepper::step(MFState& state) const {
  const double dx = model_.grid.spacing();
  const double before_b = field_norm2(state.bath, dx);
  const double before_i = field_norm2(state.impurity, dx);
  const double t_mid = state.time + 0.5 * dt_;

  kick(state, t_mid, 0.5);
  dst_.apply(state.bath);
  state.bath.array() *= kinetic_phase_bath_.array();
  dst_.apply(state.bath);
  dst_.apply(state.impurity);
  state.impurity.array() *= kinetic_phase_impurity_.array();
  dst_.apply(state.impurity);
  kick(state, t_mid, 0.5);
  state.time += dt_;

  const double drift = std::max(std::abs(field_norm2(state.bath, dx) - before_b),
                                std::abs(field_norm2(state.impurity, dx) - before_i));
  if (drift > kNormDriftLimit)
    throw ConvergenceError("mean-field step rejected: norm drift " + std::to_string(drift) + " exceeds 1e-10");
}

void mf_propagate(MFState& state, const MixtureModel& model, double t1, double dt, int stride,
                  const MFObserver& observer) {
  if (stride < 1) throw DomainError("output stride must be >= 1");
  const double t0 = state.time;
  const int steps = step_count(t0, t1, dt);
  if (observer) observer(state);
  if (steps == 0) return;
  const MeanFieldStepper stepper(model, (t1 - t0) / steps);
  for (int k = 1; k <= steps; ++k) {
    stepper.step(state);
    if (k == steps) state.time = t1;
    if (observer && (k % stride == 0 || k == steps)) observer(state);
  }
}

std::vector<MFState> mf_propagate(const MFState& initial, const MixtureModel& model, double t0, double t1, double dt,
                                  int stride) {
  MFState state = initial;
  state.time = t0;
  std::vector<MFState> out;
  mf_propagate(state, model, t1, dt, stride, [&out](const MFState& s) { out.push_back(s); });
  return out;
}

MFEnergyTerms mf_energy_terms(const MFState& state, const MixtureModel& model, double t) {
  const double dx = model.grid.spacing();
  SineTransform dst(model.grid.n);
  const auto kinetic = [&](Species s) {
    Eigen::VectorXcd c = state.field(s);
    dst.apply(c);
    return kinetic_spectrum(model.grid, model.species(s).mass).dot(c.cwiseAbs2()) * dx;
  };
  const Eigen::VectorXd rho_b = state.bath.cwiseAbs2();
  const Eigen::VectorXd rho_i = state.impurity.cwiseAbs2();
  const double nb = model.bath.count;
  const double ni = model.impurity.count;

  MFEnergyTerms e;
  e.kinetic_bath = nb * kinetic(Species::bath);
  e.potential_bath = nb * trap_potential_on_grid(model, Species::bath, t).dot(rho_b) * dx;
  e.interaction_bath = 0.5 * model.bath.g_intra * nb * (nb - 1.0) * rho_b.squaredNorm() * dx;
  e.kinetic_impurity = ni * kinetic(Species::impurity);
  e.potential_impurity = ni * trap_potential_on_grid(model, Species::impurity, t).dot(rho_i) * dx;
  e.interaction_impurity = 0.5 * model.impurity.g_intra * ni * (ni - 1.0) * rho_i.squaredNorm() * dx;
  e.interaction_bi = model.g_bi * nb * ni * rho_b.dot(rho_i) * dx;
  return e;
}

} // namespace bqd
