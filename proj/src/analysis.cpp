#include "bqd/analysis.h"

#include <cmath>

#include <Eigen/SVD>

#include "bqd/error.h"

namespace bqd {

namespace {

Eigen::Vector3d pack(const DampedParams& p) { return {p.lambda, p.omega_eff, p.phase}; }
DampedParams unpack(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }
bool admissible(const Eigen::Vector3d& v) { return v(1) > 0.5 * v(0) && v(1) > 0.0; }

} // namespace

double damped_trajectory(const DampedParams& p, const DampedDrive& drive, double t, bool textbook) {
  if (!(p.omega_eff > 0.5 * p.lambda) || !(p.omega_eff > 0.0))
    throw DomainError("damped model needs omega_eff > lambda/2");
  const double w0 = std::sqrt(p.omega_eff * p.omega_eff - 0.25 * p.lambda * p.lambda);
  const double u0 = drive.amplitude * drive.omega_d;
  const double f0 = drive.amplitude * p.omega_eff * p.omega_eff;
  const double detune = p.omega_eff * p.omega_eff - drive.omega_d * drive.omega_d;
  double denom = detune * detune + drive.omega_d * drive.omega_d * p.lambda * p.lambda;
  if (textbook) denom = std::sqrt(denom);
  const double transient = std::exp(-0.5 * p.lambda * t) *
                           (drive.x0 * std::cos(w0 * t) + (u0 + 0.5 * p.lambda * drive.x0) / w0 * std::sin(w0 * t));
  return transient + f0 * std::sin(drive.omega_d * t + p.phase) / denom;
}

Eigen::VectorXd damped_trajectory(const DampedParams& params, const DampedDrive& drive, const Eigen::VectorXd& t,
                                  bool textbook) {
  Eigen::VectorXd x(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) x(i) = damped_trajectory(params, drive, t(i), textbook);
  return x;
}

FitResult fit_damped(const Eigen::VectorXd& t, const Eigen::VectorXd& x, const DampedDrive& drive,
                     const FitOptions& options) {
  if (t.size() != x.size()) throw DomainError("fit: time and value series differ in length");
  if (!(drive.omega_d > 0.0)) throw DomainError("fit: drive frequency must be positive");
  const double skip = options.skip < 0.0 ? 2.0 * 3.14159265358979323846 / drive.omega_d : options.skip;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < t.size(); ++i)
    if (t(i) >= skip) keep.push_back(i);
  if (keep.size() < 4) throw DomainError("fit: fewer than four samples after the transient window");
  const auto m = static_cast<Eigen::Index>(keep.size());
  Eigen::VectorXd tw(m), xw(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    tw(k) = t(keep[static_cast<std::size_t>(k)]);
    xw(k) = x(keep[static_cast<std::size_t>(k)]);
  }

  const auto residual = [&](const Eigen::Vector3d& p) {
    return Eigen::VectorXd(damped_trajectory(unpack(p), drive, tw, options.textbook) - xw);
  };
  const auto jacobian = [&](const Eigen::Vector3d& p) {
    Eigen::MatrixXd j(m, 3);
    for (int c = 0; c < 3; ++c) {
      const double h = 1e-6 * std::max(1.0, std::abs(p(c)));
      Eigen::Vector3d hi = p, lo = p;
      hi(c) += h;
      lo(c) -= h;
      // Keep the stencil inside the underdamped region.
      if (!admissible(hi)) hi(c) = p(c);
      if (!admissible(lo)) lo(c) = p(c);
      j.col(c) = (residual(hi) - residual(lo)) / (hi(c) - lo(c));
    }
    return j;
  };

  Eigen::Vector3d p = pack(options.initial);
  if (!admissible(p)) throw DomainError("fit: initial guess violates omega_eff > lambda/2");
  Eigen::VectorXd r = residual(p);
  double cost = r.squaredNorm();
  FitResult out;
  bool stalled = false;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const Eigen::MatrixXd j = jacobian(p);
    const Eigen::Vector3d step = j.colPivHouseholderQr().solve(-r);
    double scale = 1.0;
    bool improved = false;
    Eigen::Vector3d trial;
    Eigen::VectorXd r_trial;
    for (int h = 0; h < 40; ++h, scale *= 0.5) {
      trial = p + scale * step;
      if (!admissible(trial)) continue;
      r_trial = residual(trial);
      if (r_trial.squaredNorm() < cost) {
        improved = true;
        break;
      }
    }
    if (!improved) {
      stalled = true;
      break;
    }
    const double gain = cost - r_trial.squaredNorm();
    const double move = (scale * step).norm();
    p = trial;
    r = r_trial;
    cost = r.squaredNorm();
    if (move <= 1e-13 * (1.0 + p.norm()) || gain <= 1e-15 * cost) {
      stalled = true;
      ++it;
      break;
    }
  }
  if (!stalled) throw ConvergenceError("damped fit did not converge within the iteration cap");

  out.params = unpack(p);
  out.residual_norm = std::sqrt(cost);
  out.iterations = it;
  out.samples = keep.size();
  const Eigen::MatrixXd j = jacobian(p);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
  const Eigen::Vector3d sv = svd.singularValues();
  out.conditioning = sv(0) > 0.0 ? sv(2) / sv(0) : 0.0;
  out.rank_deficient = out.conditioning < 1e-8 ||
                       std::abs(out.params.omega_eff - drive.omega_d) < 1e-3 * drive.omega_d;
  const double dof = std::max<double>(1.0, static_cast<double>(m) - 3.0);
  const Eigen::Matrix3d jtj = j.transpose() * j;
  if (!out.rank_deficient) out.covariance = (cost / dof) * jtj.inverse();
  return out;
}

ConvergenceDelta convergence_delta(const Eigen::VectorXd& reference, const Eigen::VectorXd& other, double floor) {
  if (reference.size() != other.size()) throw DomainError("convergence delta needs aligned series");
  ConvergenceDelta d;
  d.values = Eigen::VectorXd::Zero(reference.size());
  d.valid.assign(static_cast<std::size_t>(reference.size()), false);
  for (Eigen::Index i = 0; i < reference.size(); ++i) {
    if (!(reference(i) >= floor)) continue;
    d.values(i) = std::abs(reference(i) - other(i)) / reference(i);
    d.valid[static_cast<std::size_t>(i)] = true;
    d.max = std::max(d.max, d.values(i));
  }
  return d;
}

double tf_radius(const Eigen::VectorXd& density, const Eigen::VectorXd& nodes, double threshold) {
  if (density.size() != nodes.size() || density.size() < 2) throw DomainError("tf_radius: profile and nodes differ");
  if (!(threshold > 0.0) || !(threshold < 1.0)) throw DomainError("tf_radius: threshold must lie in (0, 1)");
  if (!(density.maxCoeff() > 0.0)) throw DomainError("tf_radius: profile has no positive values");
  const double level = threshold * density.maxCoeff();
  const Eigen::Index n = density.size();
  Eigen::Index lo = 0;
  while (density(lo) <= level) ++lo;
  Eigen::Index hi = n - 1;
  while (density(hi) <= level) --hi;
  const auto crossing = [&](Eigen::Index inside, Eigen::Index outside) {
    const double a = density(inside), b = density(outside);
    return nodes(inside) + (a - level) / (a - b) * (nodes(outside) - nodes(inside));
  };
  const double left = lo > 0 ? crossing(lo, lo - 1) : nodes(0);
  const double right = hi < n - 1 ? crossing(hi, hi + 1) : nodes(n - 1);
  return 0.5 * (right - left);
}

double time_average(const Eigen::VectorXd& t, const Eigen::VectorXd& values) {
  if (t.size() != values.size() || t.size() < 2) throw DomainError("time average needs two or more aligned samples");
  double acc = 0.0;
  for (Eigen::Index i = 1; i < t.size(); ++i) acc += 0.5 * (values(i) + values(i - 1)) * (t(i) - t(i - 1));
  return acc / (t(t.size() - 1) - t(0));
}

} // namespace bqd
