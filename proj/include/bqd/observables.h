#pragma once

#include <optional>
#include <vector>

#include "bqd/fewbody.h"
#include "bqd/meanfield.h"
#include "bqd/species_ci.h"

namespace bqd {

/// rho(x_j, x_k) = <psi^+(x_j) psi(x_k)> held as factor * core * factor^H, with trace sum_j rho(x_j, x_j) dx = N.
struct DensityMatrix1B {
  Species species = Species::bath;
  double count = 0.0;
  double dx = 1.0;
  Eigen::MatrixXcd factor;
  Eigen::MatrixXcd core;

  Eigen::MatrixXcd dense() const;
  /// Density rho(x_j, x_j).
  Eigen::VectorXd density() const;
  double trace() const { return density().sum() * dx; }
};

DensityMatrix1B density_matrix(const MFState& state, const MixtureModel& model, Species s);
DensityMatrix1B density_matrix(const CIState& state, const CIHamiltonian& hamiltonian, Species s);
/// Impurity pair of the few-body solver.
DensityMatrix1B density_matrix(const TwoBodyState& state);

/// Eigenvalues of rho / N in descending order.
Eigen::VectorXd natural_populations(const DensityMatrix1B& rho);
/// 1 - largest natural population.
double fragmentation(const DensityMatrix1B& rho);

/// Normalized first-order coherence; entries where either density is below floor * max are invalid.
struct CoherenceField {
  Eigen::MatrixXcd values;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> valid;
};

CoherenceField coherence_g1(const DensityMatrix1B& rho, double floor = 1e-6);

struct SchmidtSpectrum {
  /// Squared singular values in descending order.
  Eigen::VectorXd weights;
  double entropy = 0.0;
};

/// Schmidt weights and von Neumann entropy of a coefficient matrix (bath rows, impurity columns).
SchmidtSpectrum schmidt_entropy(const Eigen::MatrixXcd& coeffs);
inline SchmidtSpectrum schmidt_entropy(const CIState& state) { return schmidt_entropy(state.coeffs); }

/// -sum w ln w with 0 ln 0 = 0.
double entropy_of(const Eigen::VectorXd& weights);

/// Per-particle mean position sum_j x_j rho(x_j) dx / N.
double mean_position(const DensityMatrix1B& rho, const GridSpec& grid);

/// Diagonal pair density rho2(x1, x2) with sum rho2 dx^2 = N (N - 1).
struct DensityMatrix2B {
  Eigen::MatrixXd values;
  double dx = 1.0;
  double count = 0.0;

  double integral() const { return values.sum() * dx * dx; }
};

DensityMatrix2B two_body_density(const CIState& state, const CIHamiltonian& hamiltonian);
DensityMatrix2B two_body_density(const TwoBodyState& state);
/// Product-state pair density N (N - 1) |psi(x1)|^2 |psi(x2)|^2 of the impurity field.
DensityMatrix2B two_body_density(const MFState& state, const MixtureModel& model);

/// E_B is the bath energy minus its value at t = 0 (kept in bath_reference), so that
/// bath_excess + bath_reference + impurity + interspecies = <H(t)>.
struct EnergyDecomposition {
  double bath_excess = 0.0;
  double impurity = 0.0;
  double interspecies = 0.0;
  double bath_reference = 0.0;

  double total() const { return bath_excess + bath_reference + impurity + interspecies; }
};

/// Raw <T_B + V_B + H_BB>, <T_I + V_I(t) + H_II>, <H_BI> for each backend.
CIEnergyParts energy_parts(const MFState& state, const MixtureModel& model, double t);
EnergyDecomposition energy_decomposition(const CIEnergyParts& parts, double bath_reference);

/// One row of series.csv; unset fields are written empty.
struct ObservableRecord {
  double time = 0.0;
  std::optional<double> x_bath, x_impurity;
  std::optional<double> e_bath, e_impurity, e_interspecies;
  std::optional<double> entropy;
  std::optional<double> frag_bath, frag_impurity;
};

struct DensitySnapshot {
  double time = 0.0;
  /// One profile per species present (bath first).
  std::vector<Eigen::VectorXd> densities;
};

class ObservableSeries {
public:
  /// Throws DomainError unless the time stamp exceeds the previous one.
  void append(const ObservableRecord& record);
  void append_snapshot(DensitySnapshot snapshot);

  const std::vector<ObservableRecord>& records() const { return records_; }
  const std::vector<DensitySnapshot>& snapshots() const { return snapshots_; }
  std::size_t size() const { return records_.size(); }

private:
  std::vector<ObservableRecord> records_;
  std::vector<DensitySnapshot> snapshots_;
};

/// Per-backend record builders. bath_reference is the t = 0 value of <T_B + V_B + H_BB>.
ObservableRecord observe(const MFState& state, const MixtureModel& model, double bath_reference);
ObservableRecord observe(const CIState& state, const CIHamiltonian& hamiltonian, double bath_reference);
ObservableRecord observe(const TwoBodyState& state, const FewBodyParams& params);

} // namespace bqd
