#include "bqd/fewbody.h"

#include <cmath>

#include "bqd/error.h"
#include "bqd/lanczos.h"

namespace bqd {

namespace {

constexpr double kNormDriftLimit = 1e-10;

/// V(x1) + V(x2) + (g/dx) delta_12 on the grid.
Eigen::MatrixXd pair_potential(const FewBodyParams& p, double t) {
  const Eigen::VectorXd v = p.potential(t);
  const auto n = v.size();
  Eigen::MatrixXd w = v.replicate(1, n) + v.transpose().replicate(n, 1);
  w.diagonal().array() += p.g / p.grid.spacing();
  return w;
}

Eigen::MatrixXd pair_kinetic(const FewBodyParams& p) {
  const Eigen::VectorXd eps = kinetic_spectrum(p.grid, p.mass);
  const auto n = eps.size();
  return eps.replicate(1, n) + eps.transpose().replicate(n, 1);
}

void symmetrize(Eigen::MatrixXcd& psi) { psi = (0.5 * (psi + psi.transpose())).eval(); }

} // namespace

void FewBodyParams::validate() const {
  grid.validate();
  if (!(mass > 0.0)) throw DomainError("few-body mass must be positive");
  if (!(omega >= 0.0)) throw DomainError("few-body trap frequency must be non-negative");
  driving.validate();
}

Eigen::VectorXd FewBodyParams::potential(double t) const {
  const double k = 0.5 * mass * omega * omega;
  const double a = driving.displacement(t);
  const Eigen::VectorXd x = grid.nodes();
  Eigen::VectorXd v = k * (x.array() - a).square().matrix();
  if (double_trap) v += k * x.array().square().matrix();
  return v;
}

FewBodyParams fewbody_params(const MixtureModel& model, std::size_t n) {
  FewBodyParams p;
  p.grid = GridSpec{model.grid.x_min, model.grid.x_max, n};
  p.mass = model.impurity.mass;
  p.omega = model.impurity.omega;
  p.g = model.impurity.g_intra;
  p.driving = model.driving;
  return p;
}

TwoBodyState fb_ground_state(const FewBodyParams& params, double tolerance, FewBodyGroundStateInfo* info) {
  params.validate();
  const auto n = static_cast<Eigen::Index>(params.grid.n);
  const double dx = params.grid.spacing();
  const Eigen::MatrixXd w = pair_potential(params, 0.0);
  const Eigen::MatrixXd kin = pair_kinetic(params);
  const SineTransform2D dst(params.grid.n);

  const LinearOperator op = [&](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
    Eigen::MatrixXcd c = Eigen::Map<const Eigen::MatrixXcd>(in.data(), n, n);
    dst.apply(c);
    c.array() *= kin.array();
    dst.apply(c);
    c.array() += w.array() * Eigen::Map<const Eigen::MatrixXcd>(in.data(), n, n).array();
    out = Eigen::Map<const Eigen::VectorXcd>(c.data(), c.size());
  };

  const Eigen::VectorXd x = params.grid.nodes();
  const double width = params.omega > 0.0 ? params.mass * params.omega : 1e-3;
  const Eigen::VectorXd g = (-0.5 * width * x.array().square()).exp().matrix();
  Eigen::MatrixXcd start = (g * g.transpose()).cast<cplx>();
  Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(start.data(), start.size());
  v.normalize();

  LanczosOptions opts;
  opts.tolerance = tolerance;
  opts.krylov_dim = 80;
  opts.max_restarts = 2000;
  const EigenPair ep = lanczos_ground_state(op, v, opts);

  TwoBodyState s;
  s.psi = Eigen::Map<const Eigen::MatrixXcd>(ep.vector.data(), n, n);
  if (params.bosonic) symmetrize(s.psi);
  Eigen::Index r = 0, c = 0;
  s.psi.cwiseAbs().maxCoeff(&r, &c);
  s.psi *= std::abs(s.psi(r, c)) / s.psi(r, c);
  s.psi /= s.psi.norm() * dx;
  s.dx = dx;
  s.time = 0.0;
  s.bosonic = params.bosonic;
  if (info) {
    info->energy = ep.value;
    info->residual = ep.residual;
    info->matvecs = ep.matvecs;
  }
  return s;
}

double fb_energy(const TwoBodyState& state, const FewBodyParams& params, double t) {
  const double dx = params.grid.spacing();
  Eigen::MatrixXcd c = state.psi;
  const SineTransform2D dst(params.grid.n);
  dst.apply(c);
  const double kinetic = (pair_kinetic(params).array() * c.cwiseAbs2().array()).sum();
  const double potential = (pair_potential(params, t).array() * state.psi.cwiseAbs2().array()).sum();
  return (kinetic + potential) * dx * dx;
}

Eigen::VectorXd fb_density(const TwoBodyState& state) {
  const double dx = state.dx;
  const Eigen::VectorXd rows = state.psi.cwiseAbs2().rowwise().sum();
  const Eigen::VectorXd cols = state.psi.cwiseAbs2().colwise().sum().transpose();
  return (rows + cols) * dx;
}

double fb_mean_position(const TwoBodyState& state, const FewBodyParams& params) {
  const double dx = params.grid.spacing();
  const Eigen::VectorXd x = params.grid.nodes();
  const Eigen::MatrixXd rho = state.psi.cwiseAbs2();
  return 0.5 * (x.dot(rho.rowwise().sum()) + x.dot(rho.colwise().sum().transpose())) * dx * dx;
}

FewBodyStepper::FewBodyStepper(const FewBodyParams& params, double dt)
    : params_(params), dt_(dt), dst_(params.grid.n) {
  params.validate();
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  const Eigen::MatrixXd kin = pair_kinetic(params);
  kinetic_phase_ = kin.unaryExpr([dt](double e) { return std::polar(1.0, -e * dt); });
}

void FewBodyStepper::step(TwoBodyState& state) const {
  const double dx = params_.grid.spacing();
  if (std::abs(state.dx - dx) > 1e-14 * dx) throw DomainError("state grid differs from the stepper grid");
  const double before = state.psi.squaredNorm() * dx * dx;
  const double t_mid = state.time + 0.5 * dt_;
  // exp(-i (V(x1) + V(x2) + g delta/dx) dt/2) factorizes into two 1D phases and a diagonal correction.
  const Eigen::VectorXd v = params_.potential(t_mid);
  const Eigen::VectorXcd phase = v.unaryExpr([this](double u) { return std::polar(1.0, -0.5 * u * dt_); });
  const cplx contact = std::polar(1.0, -0.5 * dt_ * params_.g / dx);
  const auto kick = [&](Eigen::MatrixXcd& psi) {
    psi = phase.asDiagonal() * psi * phase.asDiagonal();
    psi.diagonal() *= contact;
  };

  kick(state.psi);
  dst_.apply(state.psi);
  state.psi.array() *= kinetic_phase_.array();
  dst_.apply(state.psi);
  kick(state.psi);
  if (state.bosonic) symmetrize(state.psi);
  state.time += dt_;

  const double drift = std::abs(state.psi.squaredNorm() * dx * dx - before);
  if (drift > kNormDriftLimit)
    throw ConvergenceError("few-body step rejected: norm drift " + std::to_string(drift) + " exceeds 1e-10");
}

void fb_propagate(TwoBodyState& state, const FewBodyParams& params, double t1, double dt, int stride,
                  const FBObserver& observer) {
  if (stride < 1) throw DomainError("output stride must be >= 1");
  const double t0 = state.time;
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  if (t1 < t0) throw DomainError("end time precedes start time");
  const int steps = std::max(0, static_cast<int>(std::ceil((t1 - t0) / dt - 1e-9)));
  if (observer) observer(state);
  if (steps == 0) return;
  const FewBodyStepper stepper(params, (t1 - t0) / steps);
  for (int k = 1; k <= steps; ++k) {
    stepper.step(state);
    if (k == steps) state.time = t1;
    if (observer && (k % stride == 0 || k == steps)) observer(state);
  }
}

} // namespace bqd
