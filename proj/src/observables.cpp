#include "bqd/observables.h"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "bqd/error.h"

namespace bqd {

Eigen::MatrixXcd DensityMatrix1B::dense() const { return factor * core * factor.adjoint(); }

Eigen::VectorXd DensityMatrix1B::density() const {
  // diag(U M U^H)_j = sum_ab U_ja M_ab conj(U_jb)
  const Eigen::MatrixXcd off = core - Eigen::MatrixXcd(core.diagonal().asDiagonal());
  if (off.norm() == 0.0) return factor.cwiseAbs2() * core.diagonal().real();
  const Eigen::MatrixXcd um = factor * core;
  return um.cwiseProduct(factor.conjugate()).rowwise().sum().real();
}

DensityMatrix1B density_matrix(const MFState& state, const MixtureModel& model, Species s) {
  DensityMatrix1B rho;
  rho.species = s;
  rho.count = model.species(s).count;
  rho.dx = model.grid.spacing();
  rho.factor = state.field(s).conjugate();
  rho.core = Eigen::MatrixXcd::Constant(1, 1, rho.count);
  return rho;
}

DensityMatrix1B density_matrix(const CIState& state, const CIHamiltonian& hamiltonian, Species s) {
  DensityMatrix1B rho;
  rho.species = s;
  rho.count = hamiltonian.model().species(s).count;
  rho.dx = hamiltonian.model().grid.spacing();
  rho.factor = hamiltonian.basis().orbitals(s).cast<cplx>();
  rho.core = hamiltonian.orbital_density_matrix(state.coeffs, s);
  return rho;
}

DensityMatrix1B density_matrix(const TwoBodyState& state) {
  DensityMatrix1B rho;
  rho.species = Species::impurity;
  rho.count = 2.0;
  rho.dx = state.dx;
  rho.factor = state.psi.conjugate();
  rho.core = Eigen::MatrixXcd::Identity(state.psi.cols(), state.psi.cols()) * (2.0 * state.dx);
  return rho;
}

Eigen::VectorXd natural_populations(const DensityMatrix1B& rho) {
  if (!(rho.count > 0.0)) throw DomainError("natural populations need a positive particle number");
  // Nonzero spectrum of the kernel rho(x, x') dx equals that of M^1/2 K M^1/2 with K = U^H U dx.
  const Eigen::MatrixXcd k = rho.factor.adjoint() * rho.factor * rho.dx;
  Eigen::MatrixXcd h;
  const Eigen::MatrixXcd off = rho.core - Eigen::MatrixXcd(rho.core.diagonal().asDiagonal());
  if (off.norm() == 0.0) {
    const Eigen::VectorXcd root = rho.core.diagonal().real().cwiseMax(0.0).cwiseSqrt().cast<cplx>();
    h = root.asDiagonal() * k * root.asDiagonal();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ms(rho.core);
    const Eigen::VectorXd mv = ms.eigenvalues().cwiseMax(0.0);
    const Eigen::MatrixXcd root = ms.eigenvectors() * mv.cwiseSqrt().asDiagonal() * ms.eigenvectors().adjoint();
    h = root * k * root;
  }
  h = (0.5 * (h + h.adjoint())).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  Eigen::VectorXd eta = es.eigenvalues().reverse() / rho.count;
  return eta;
}

double fragmentation(const DensityMatrix1B& rho) { return 1.0 - natural_populations(rho)(0); }

CoherenceField coherence_g1(const DensityMatrix1B& rho, double floor) {
  const Eigen::MatrixXcd full = rho.dense();
  const Eigen::VectorXd d = full.diagonal().real();
  const double cut = floor * d.maxCoeff();
  const auto n = d.size();
  CoherenceField g;
  g.values = Eigen::MatrixXcd::Zero(n, n);
  g.valid.setConstant(n, n, false);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(d(k) >= cut) || d(k) <= 0.0) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(d(j) >= cut) || d(j) <= 0.0) continue;
      g.values(j, k) = j == k ? cplx(1.0) : full(j, k) / std::sqrt(d(j) * d(k));
      g.valid(j, k) = true;
    }
  }
  return g;
}

double entropy_of(const Eigen::VectorXd& weights) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (weights(i) > 0.0) s -= weights(i) * std::log(weights(i));
  return s;
}

SchmidtSpectrum schmidt_entropy(const Eigen::MatrixXcd& coeffs) {
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(coeffs);
  SchmidtSpectrum out;
  out.weights = svd.singularValues().array().square().matrix();
  out.entropy = entropy_of(out.weights);
  return out;
}

double mean_position(const DensityMatrix1B& rho, const GridSpec& grid) {
  const Eigen::VectorXd n = rho.density();
  if (static_cast<std::size_t>(n.size()) != grid.n) throw DomainError("density does not match the grid");
  return grid.nodes().dot(n) * rho.dx / rho.count;
}

DensityMatrix2B two_body_density(const CIState& state, const CIHamiltonian& hamiltonian) {
  const int count = hamiltonian.model().impurity.count;
  if (count < 2) throw DomainError("two-body density needs at least two impurities");
  const Eigen::MatrixXd& phi = hamiltonian.basis().impurity;
  DensityMatrix2B rho;
  rho.dx = hamiltonian.model().grid.spacing();
  rho.count = count;
  rho.values = Eigen::MatrixXd::Zero(phi.rows(), phi.rows());
  const Eigen::MatrixXcd phic = phi.cast<cplx>();
  // rho2(x1, x2) = || psi(x2) psi(x1) |Psi> ||^2 = sum_k |sum_rs phi_r(x1) W_k(r,s) phi_s(x2)|^2
  for (const Eigen::MatrixXcd& w : hamiltonian.impurity_pair_amplitudes(state.coeffs)) {
    if (w.cwiseAbs().maxCoeff() == 0.0) continue;
    const Eigen::MatrixXcd f = phic * w * phic.transpose();
    rho.values += f.cwiseAbs2();
  }
  return rho;
}

DensityMatrix2B two_body_density(const TwoBodyState& state) {
  DensityMatrix2B rho;
  rho.dx = state.dx;
  rho.count = 2.0;
  rho.values = 2.0 * state.psi.cwiseAbs2();
  return rho;
}

DensityMatrix2B two_body_density(const MFState& state, const MixtureModel& model) {
  const double n = model.impurity.count;
  if (n < 2) throw DomainError("two-body density needs at least two impurities");
  const Eigen::VectorXd p = state.impurity.cwiseAbs2();
  DensityMatrix2B rho;
  rho.dx = model.grid.spacing();
  rho.count = n;
  rho.values = n * (n - 1.0) * p * p.transpose();
  return rho;
}

CIEnergyParts energy_parts(const MFState& state, const MixtureModel& model, double t) {
  const MFEnergyTerms e = mf_energy_terms(state, model, t);
  CIEnergyParts p;
  p.bath = e.kinetic_bath + e.potential_bath + e.interaction_bath;
  p.impurity = e.kinetic_impurity + e.potential_impurity + e.interaction_impurity;
  p.interspecies = e.interaction_bi;
  return p;
}

EnergyDecomposition energy_decomposition(const CIEnergyParts& parts, double bath_reference) {
  EnergyDecomposition e;
  e.bath_reference = bath_reference;
  e.bath_excess = parts.bath - bath_reference;
  e.impurity = parts.impurity;
  e.interspecies = parts.interspecies;
  return e;
}

void ObservableSeries::append(const ObservableRecord& record) {
  if (!records_.empty() && !(record.time > records_.back().time))
    throw DomainError("observable series times must increase strictly");
  records_.push_back(record);
}

void ObservableSeries::append_snapshot(DensitySnapshot snapshot) {
  if (!snapshots_.empty() && !(snapshot.time > snapshots_.back().time))
    throw DomainError("snapshot times must increase strictly");
  if (!snapshots_.empty() && snapshot.densities.size() != snapshots_.front().densities.size())
    throw DomainError("snapshot species count changed");
  snapshots_.push_back(std::move(snapshot));
}

ObservableRecord observe(const MFState& state, const MixtureModel& model, double bath_reference) {
  ObservableRecord r;
  r.time = state.time;
  const DensityMatrix1B rb = density_matrix(state, model, Species::bath);
  const DensityMatrix1B ri = density_matrix(state, model, Species::impurity);
  r.x_bath = mean_position(rb, model.grid);
  r.x_impurity = mean_position(ri, model.grid);
  const EnergyDecomposition e = energy_decomposition(energy_parts(state, model, state.time), bath_reference);
  r.e_bath = e.bath_excess;
  r.e_impurity = e.impurity;
  r.e_interspecies = e.interspecies;
  // A product of two condensates: no interspecies entanglement, no fragmentation.
  r.entropy = 0.0;
  r.frag_bath = fragmentation(rb);
  r.frag_impurity = fragmentation(ri);
  return r;
}

ObservableRecord observe(const CIState& state, const CIHamiltonian& hamiltonian, double bath_reference) {
  ObservableRecord r;
  r.time = state.time;
  const GridSpec& grid = hamiltonian.model().grid;
  const DensityMatrix1B rb = density_matrix(state, hamiltonian, Species::bath);
  const DensityMatrix1B ri = density_matrix(state, hamiltonian, Species::impurity);
  r.x_bath = mean_position(rb, grid);
  r.x_impurity = mean_position(ri, grid);
  const EnergyDecomposition e =
      energy_decomposition(hamiltonian.energy_parts(state.coeffs, state.time), bath_reference);
  r.e_bath = e.bath_excess;
  r.e_impurity = e.impurity;
  r.e_interspecies = e.interspecies;
  r.entropy = schmidt_entropy(state).entropy;
  r.frag_bath = fragmentation(rb);
  r.frag_impurity = fragmentation(ri);
  return r;
}

ObservableRecord observe(const TwoBodyState& state, const FewBodyParams& params) {
  ObservableRecord r;
  r.time = state.time;
  const DensityMatrix1B ri = density_matrix(state);
  r.x_impurity = fb_mean_position(state, params);
  r.e_impurity = fb_energy(state, params, state.time);
  r.frag_impurity = fragmentation(ri);
  return r;
}

} // namespace bqd
