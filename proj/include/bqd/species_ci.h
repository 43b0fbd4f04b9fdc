#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "bqd/fock.h"
#include "bqd/lanczos.h"
#include "bqd/model.h"

namespace bqd {

/// Fixed single-particle functions per species. Column p holds phi_p(x_j) with sum_j phi_p phi_q dx = delta_pq.
struct OrbitalBasis {
  GridSpec grid;
  Eigen::MatrixXd bath;
  Eigen::MatrixXd impurity;
  /// Static one-body Hamiltonian T + 1/2 M w^2 x^2 projected onto the orbitals.
  Eigen::MatrixXd bath_hamiltonian;
  Eigen::MatrixXd impurity_hamiltonian;

  const Eigen::MatrixXd& orbitals(Species s) const { return s == Species::bath ? bath : impurity; }
  const Eigen::MatrixXd& hamiltonian(Species s) const {
    return s == Species::bath ? bath_hamiltonian : impurity_hamiltonian;
  }
  int size(Species s) const { return static_cast<int>(orbitals(s).cols()); }
  /// Largest |G - 1| entry of the overlap matrix of species s.
  double gram_error(Species s) const;
};

/// Lowest d eigenstates of each species' static single-particle Hamiltonian on the sine-DVR grid.
/// Signs are fixed so the first node where |phi| exceeds 1e-3 max |phi| is positive.
OrbitalBasis trap_orbitals(const MixtureModel& model, int d_bath, int d_impurity);

/// Coefficients C(s_B, s_I) over the product of the two Fock spaces.
struct CIState {
  Eigen::MatrixXcd coeffs;
  double time = 0.0;

  double norm() const { return coeffs.norm(); }
};

struct CIEnergyParts {
  /// <T_B + V_B + H_BB>
  double bath = 0.0;
  /// <T_I + V_I(t) + H_II>
  double impurity = 0.0;
  /// <H_BI>
  double interspecies = 0.0;

  double total() const { return bath + impurity + interspecies; }
};

/// Second-quantized Hamiltonian of the mixture on fixed orbitals. Sectors with Fock dimension up to
/// `explicit_limit` store their two-body contact as a sparse matrix; larger ones apply it by grid quadrature.
class CIHamiltonian {
public:
  CIHamiltonian(const MixtureModel& model, const OrbitalBasis& basis, std::size_t explicit_limit = 2000);
  ~CIHamiltonian();
  CIHamiltonian(const CIHamiltonian&) = delete;
  CIHamiltonian& operator=(const CIHamiltonian&) = delete;

  const MixtureModel& model() const { return model_; }
  const OrbitalBasis& basis() const { return basis_; }
  const FockSpace& space(Species s) const;
  std::size_t dim(Species s) const { return space(s).dim(); }

  /// out = H(t) c.
  void apply(const Eigen::MatrixXcd& c, double t, Eigen::MatrixXcd& out) const;
  /// H(t) acting on column-major flattened coefficients.
  LinearOperator as_operator(double t) const;

  CIEnergyParts energy_parts(const Eigen::MatrixXcd& c, double t) const;

  /// One-body matrix <a_p^+ a_q> of species s in the orbital basis (trace N_s).
  Eigen::MatrixXcd orbital_density_matrix(const Eigen::MatrixXcd& c, Species s) const;
  /// Pair amplitudes A_(r,s) = a_r a_s |psi> for the impurity, returned as a list over r <= s of
  /// (dim_B x dim_I(N-2)) blocks. Empty when N_I < 2.
  std::vector<Eigen::MatrixXcd> impurity_pair_amplitudes(const Eigen::MatrixXcd& c) const;

private:
  struct Sector;
  void add_impurity_side(const Eigen::MatrixXcd& c, double t, Eigen::MatrixXcd& out) const;
  void add_interspecies(const Eigen::MatrixXcd& c, Eigen::MatrixXcd& out) const;

  MixtureModel model_;
  OrbitalBasis basis_;
  std::unique_ptr<Sector> bath_;
  std::unique_ptr<Sector> impurity_;
  Eigen::SparseMatrix<double> impurity_position_;
  /// Interspecies term sum_a O^B_a (.) M_a over unordered bath orbital pairs a.
  std::vector<Eigen::SparseMatrix<double>> bath_pair_ops_;
  std::vector<Eigen::SparseMatrix<double>> impurity_pair_mix_;
};

struct CIGroundStateInfo {
  double energy = 0.0;
  double residual = 0.0;
  int matvecs = 0;
};

/// Lowest eigenvector of the undriven Hamiltonian, started from the configuration with every particle in
/// orbital 0 (an even-parity vector), so accidental degeneracies resolve to the even state.
CIState ci_ground_state(const CIHamiltonian& hamiltonian, double tolerance = 1e-9, CIGroundStateInfo* info = nullptr);

struct CIPropagationOptions {
  int krylov_dimension = 40;
  double krylov_tolerance = 1e-12;
  /// Smallest sub-step tried before giving up with ConvergenceError.
  double dt_floor = 1e-7;
};

using CIObserver = std::function<void(const CIState&)>;

/// Midpoint (second-order Magnus) stepping with Krylov exponentials from state.time to t1.
/// A step whose Krylov space does not converge is split in two halves, recursively down to dt_floor.
/// The observer sees the initial state, every `stride`-th step and the final state.
void ci_propagate(CIState& state, const CIHamiltonian& hamiltonian, double t1, double dt, int stride,
                  const CIObserver& observer, const CIPropagationOptions& options = {});

} // namespace bqd
