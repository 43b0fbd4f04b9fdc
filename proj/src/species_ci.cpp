#include "bqd/species_ci.h"

#include <cmath>
#include <optional>

#include <Eigen/Eigenvalues>

#include "bqd/error.h"

namespace bqd {

double OrbitalBasis::gram_error(Species s) const {
  const Eigen::MatrixXd& phi = orbitals(s);
  const Eigen::MatrixXd gram = phi.transpose() * phi * grid.spacing();
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

namespace {

void trap_eigenstates(const GridSpec& grid, const SpeciesParams& p, int d, Eigen::MatrixXd& orbitals,
                      Eigen::MatrixXd& projected) {
  if (d < 1 || static_cast<std::size_t>(d) > grid.n) throw DomainError("orbital count must be in [1, n]");
  const Eigen::VectorXd x = grid.nodes();
  Eigen::MatrixXd h = dvr_kinetic_matrix(grid, p.mass);
  h.diagonal() += (0.5 * p.mass * p.omega * p.omega) * x.array().square().matrix();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  if (eig.info() != Eigen::Success) throw ConvergenceError("single-particle diagonalization failed");
  const double dx = grid.spacing();
  orbitals = eig.eigenvectors().leftCols(d) / std::sqrt(dx);
  for (int k = 0; k < d; ++k) {
    auto col = orbitals.col(k);
    const double cut = 1e-3 * col.cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < col.size(); ++j)
      if (std::abs(col(j)) > cut) {
        if (col(j) < 0) col *= -1.0;
        break;
      }
  }
  projected = orbitals.transpose() * h * orbitals * dx;
  projected = 0.5 * (projected + projected.transpose()).eval();
}

Eigen::MatrixXd position_matrix(const OrbitalBasis& basis, Species s) {
  const Eigen::MatrixXd& phi = basis.orbitals(s);
  const Eigen::VectorXd x = basis.grid.nodes();
  return phi.transpose() * x.asDiagonal() * phi * basis.grid.spacing();
}

} // namespace

OrbitalBasis trap_orbitals(const MixtureModel& model, int d_bath, int d_impurity) {
  model.validate();
  OrbitalBasis b;
  b.grid = model.grid;
  trap_eigenstates(model.grid, model.bath, d_bath, b.bath, b.bath_hamiltonian);
  trap_eigenstates(model.grid, model.impurity, d_impurity, b.impurity, b.impurity_hamiltonian);
  return b;
}

struct CIHamiltonian::Sector {
  Sector(const SpeciesParams& p, const Eigen::MatrixXd& phi, const Eigen::MatrixXd& h1, double dx,
         std::size_t explicit_limit)
      : space(p.count, static_cast<int>(phi.cols())) {
    const int d = static_cast<int>(phi.cols());
    op = one_body_operator(space, h1);
    if (p.count >= 1) {
      FockSpace m1(p.count - 1, d);
      lower1 = std::make_shared<const AnnihilationMap>(space, m1);
      if (p.count >= 2) {
        FockSpace m2(p.count - 2, d);
        lower2 = std::make_shared<const AnnihilationMap>(m1, m2);
      }
    }
    if (p.count >= 2 && p.g_intra != 0.0) {
      ContactInteraction c(phi, p.g_intra * dx, lower1, lower2);
      if (space.dim() <= explicit_limit)
        op += c.assemble();
      else
        contact.emplace(std::move(c));
    }
  }

  /// out += H_static x, rows of x in this space.
  void apply_rows(const Eigen::Ref<const Eigen::MatrixXcd>& x, Eigen::Ref<Eigen::MatrixXcd> out) const {
    out.noalias() += op * x;
    if (contact) contact->apply_add(x, out);
  }

  FockSpace space;
  std::shared_ptr<const AnnihilationMap> lower1;
  std::shared_ptr<const AnnihilationMap> lower2;
  Eigen::SparseMatrix<double> op;
  std::optional<ContactInteraction> contact;
};

CIHamiltonian::CIHamiltonian(const MixtureModel& model, const OrbitalBasis& basis, std::size_t explicit_limit)
    : model_(model), basis_(basis) {
  model.validate();
  if (!(basis.grid == model.grid)) throw DomainError("orbital basis grid differs from the model grid");
  for (Species s : {Species::bath, Species::impurity}) {
    const auto& phi = basis.orbitals(s);
    const auto& h = basis.hamiltonian(s);
    if (phi.cols() < 1 || static_cast<std::size_t>(phi.rows()) != model.grid.n || h.rows() != phi.cols() ||
        h.cols() != phi.cols())
      throw DomainError(std::string("orbital basis does not match the model for the ") + std::string(to_string(s)));
  }
  const double dx = model.grid.spacing();
  bath_ = std::make_unique<Sector>(model.bath, basis.bath, basis.bath_hamiltonian, dx, explicit_limit);
  impurity_ =
      std::make_unique<Sector>(model.impurity, basis.impurity, basis.impurity_hamiltonian, dx, explicit_limit);
  impurity_position_ = one_body_operator(impurity_->space, position_matrix(basis, Species::impurity));

  if (model.g_bi != 0.0) {
    // rho_sigma(x_j) = sum_{p<=q} phi_p phi_q O_pq with O_pq = a_p^+ a_q + a_q^+ a_p (p<q), n_p (p=q).
    auto pair_products = [](const Eigen::MatrixXd& phi) {
      const int d = static_cast<int>(phi.cols());
      Eigen::MatrixXd prod(phi.rows(), d * (d + 1) / 2);
      int k = 0;
      for (int p = 0; p < d; ++p)
        for (int q = p; q < d; ++q) prod.col(k++) = phi.col(p).cwiseProduct(phi.col(q));
      return prod;
    };
    auto pair_ops = [](const FockSpace& space) {
      const int d = space.modes();
      std::vector<Eigen::SparseMatrix<double>> ops;
      for (int p = 0; p < d; ++p)
        for (int q = p; q < d; ++q) {
          Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
          h(p, q) = 1.0;
          h(q, p) = 1.0;
          if (p == q) h(p, p) = 1.0;
          ops.push_back(one_body_operator(space, h));
        }
      return ops;
    };
    const Eigen::MatrixXd pb = pair_products(basis.bath);
    const Eigen::MatrixXd pi = pair_products(basis.impurity);
    const Eigen::MatrixXd v = model.g_bi * dx * (pb.transpose() * pi);
    bath_pair_ops_ = pair_ops(bath_->space);
    const auto imp_ops = pair_ops(impurity_->space);
    const double drop = 1e-14 * std::max(1.0, v.cwiseAbs().maxCoeff());
    for (Eigen::Index a = 0; a < v.rows(); ++a) {
      Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(impurity_->space.dim()),
                                    static_cast<Eigen::Index>(impurity_->space.dim()));
      for (Eigen::Index b = 0; b < v.cols(); ++b)
        if (std::abs(v(a, b)) > drop) m += v(a, b) * imp_ops[static_cast<std::size_t>(b)];
      impurity_pair_mix_.push_back(std::move(m));
    }
  }
}

CIHamiltonian::~CIHamiltonian() = default;

const FockSpace& CIHamiltonian::space(Species s) const {
  return s == Species::bath ? bath_->space : impurity_->space;
}

void CIHamiltonian::add_impurity_side(const Eigen::MatrixXcd& c, double t, Eigen::MatrixXcd& out) const {
  // Operators are real symmetric, so (H c^T)^T = c H.
  out.noalias() += c * impurity_->op;
  const auto& p = model_.impurity;
  const double a = trap_center(model_, Species::impurity, t);
  if (a != 0.0) {
    const double k = p.mass * p.omega * p.omega;
    out.noalias() += (-k * a) * (c * impurity_position_);
    out += (0.5 * k * a * a * p.count) * c;
  }
  if (impurity_->contact) {
    Eigen::MatrixXcd tmp = Eigen::MatrixXcd::Zero(c.cols(), c.rows());
    impurity_->contact->apply_add(c.transpose(), tmp);
    out += tmp.transpose();
  }
}

void CIHamiltonian::add_interspecies(const Eigen::MatrixXcd& c, Eigen::MatrixXcd& out) const {
  for (std::size_t a = 0; a < bath_pair_ops_.size(); ++a) {
    if (impurity_pair_mix_[a].nonZeros() == 0) continue;
    const Eigen::MatrixXcd right = c * impurity_pair_mix_[a];
    out.noalias() += bath_pair_ops_[a] * right;
  }
}

void CIHamiltonian::apply(const Eigen::MatrixXcd& c, double t, Eigen::MatrixXcd& out) const {
  if (static_cast<std::size_t>(c.rows()) != bath_->space.dim() ||
      static_cast<std::size_t>(c.cols()) != impurity_->space.dim())
    throw DomainError("CI coefficient shape does not match the Fock spaces");
  out = Eigen::MatrixXcd::Zero(c.rows(), c.cols());
  bath_->apply_rows(c, out);
  add_impurity_side(c, t, out);
  add_interspecies(c, out);
}

LinearOperator CIHamiltonian::as_operator(double t) const {
  const auto rows = static_cast<Eigen::Index>(bath_->space.dim());
  const auto cols = static_cast<Eigen::Index>(impurity_->space.dim());
  return [this, t, rows, cols](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
    const Eigen::MatrixXcd c = Eigen::Map<const Eigen::MatrixXcd>(in.data(), rows, cols);
    Eigen::MatrixXcd hc;
    apply(c, t, hc);
    out = Eigen::Map<const Eigen::VectorXcd>(hc.data(), hc.size());
  };
}

CIEnergyParts CIHamiltonian::energy_parts(const Eigen::MatrixXcd& c, double t) const {
  CIEnergyParts e;
  Eigen::MatrixXcd tmp = Eigen::MatrixXcd::Zero(c.rows(), c.cols());
  bath_->apply_rows(c, tmp);
  e.bath = c.cwiseProduct(tmp.conjugate()).sum().real();
  tmp.setZero();
  add_impurity_side(c, t, tmp);
  e.impurity = c.cwiseProduct(tmp.conjugate()).sum().real();
  tmp.setZero();
  add_interspecies(c, tmp);
  e.interspecies = c.cwiseProduct(tmp.conjugate()).sum().real();
  return e;
}

Eigen::MatrixXcd CIHamiltonian::orbital_density_matrix(const Eigen::MatrixXcd& c, Species s) const {
  const Sector& sec = s == Species::bath ? *bath_ : *impurity_;
  const int d = sec.space.modes();
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);
  if (!sec.lower1) return rho;
  const Eigen::MatrixXcd rows = s == Species::bath ? c : Eigen::MatrixXcd(c.transpose());
  std::vector<Eigen::MatrixXcd> lowered;
  lowered.reserve(static_cast<std::size_t>(d));
  for (int q = 0; q < d; ++q) lowered.push_back(annihilate(*sec.lower1, q, rows));
  for (int p = 0; p < d; ++p)
    for (int q = p; q < d; ++q) {
      const cplx v = lowered[static_cast<std::size_t>(p)].cwiseProduct(lowered[static_cast<std::size_t>(q)].conjugate()).sum();
      // <a_p^+ a_q> = <a_p psi | a_q psi>
      rho(p, q) = std::conj(v);
      rho(q, p) = v;
    }
  return rho;
}

std::vector<Eigen::MatrixXcd> CIHamiltonian::impurity_pair_amplitudes(const Eigen::MatrixXcd& c) const {
  std::vector<Eigen::MatrixXcd> w;
  if (!impurity_->lower2) return w;
  const int d = impurity_->space.modes();
  const Eigen::MatrixXcd ct = c.transpose();
  const auto dim2 = static_cast<Eigen::Index>(impurity_->lower2->dim_to());
  const auto dim_b = c.rows();
  w.assign(static_cast<std::size_t>(dim2 * dim_b), Eigen::MatrixXcd::Zero(d, d));
  for (int s = 0; s < d; ++s) {
    const Eigen::MatrixXcd once = annihilate(*impurity_->lower1, s, ct);
    for (int r = s; r < d; ++r) {
      const Eigen::MatrixXcd twice = annihilate(*impurity_->lower2, r, once);
      for (Eigen::Index b = 0; b < dim_b; ++b)
        for (Eigen::Index i = 0; i < dim2; ++i) {
          auto& m = w[static_cast<std::size_t>(i + dim2 * b)];
          m(r, s) = twice(i, b);
          m(s, r) = twice(i, b);
        }
    }
  }
  return w;
}

CIState ci_ground_state(const CIHamiltonian& hamiltonian, double tolerance, CIGroundStateInfo* info) {
  const auto rows = static_cast<Eigen::Index>(hamiltonian.dim(Species::bath));
  const auto cols = static_cast<Eigen::Index>(hamiltonian.dim(Species::impurity));
  Eigen::VectorXcd start = Eigen::VectorXcd::Zero(rows * cols);
  start(0) = 1.0;
  // a(0) = 0 for every protocol, so H(0) is the static Hamiltonian.
  const double t0 = 0.0;
  LanczosOptions opts;
  opts.tolerance = tolerance;
  const EigenPair ep = lanczos_ground_state(hamiltonian.as_operator(t0), start, opts);
  CIState state;
  state.coeffs = Eigen::Map<const Eigen::MatrixXcd>(ep.vector.data(), rows, cols);
  // Fix the global phase so the largest coefficient is real positive.
  Eigen::Index r = 0, c = 0;
  state.coeffs.cwiseAbs().maxCoeff(&r, &c);
  state.coeffs *= std::abs(state.coeffs(r, c)) / state.coeffs(r, c);
  state.time = 0.0;
  if (info) {
    info->energy = ep.value;
    info->residual = ep.residual;
    info->matvecs = ep.matvecs;
  }
  return state;
}

namespace {

void magnus_step(Eigen::VectorXcd& v, const CIHamiltonian& h, double t, double dt, const KrylovExponential& krylov,
                 double floor) {
  const KrylovStepInfo info = krylov.apply(h.as_operator(t + 0.5 * dt), v, dt);
  if (info.converged) return;
  if (0.5 * dt < floor)
    throw ConvergenceError("Krylov exponential did not converge above the time-step floor");
  magnus_step(v, h, t, 0.5 * dt, krylov, floor);
  magnus_step(v, h, t + 0.5 * dt, 0.5 * dt, krylov, floor);
}

} // namespace

void ci_propagate(CIState& state, const CIHamiltonian& hamiltonian, double t1, double dt, int stride,
                  const CIObserver& observer, const CIPropagationOptions& options) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  if (stride < 1) throw DomainError("stride must be >= 1");
  const double t0 = state.time;
  if (t1 < t0) throw DomainError("t1 must not precede the state time");
  const auto rows = state.coeffs.rows();
  const auto cols = state.coeffs.cols();
  if (static_cast<std::size_t>(rows) != hamiltonian.dim(Species::bath) ||
      static_cast<std::size_t>(cols) != hamiltonian.dim(Species::impurity))
    throw DomainError("CI state shape does not match the Hamiltonian");
  const long steps = t1 > t0 ? std::max<long>(1, std::lround(std::ceil((t1 - t0) / dt - 1e-9))) : 0;
  const double h = steps > 0 ? (t1 - t0) / static_cast<double>(steps) : 0.0;
  const KrylovExponential krylov(options.krylov_dimension, options.krylov_tolerance);

  if (observer) observer(state);
  Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(state.coeffs.data(), state.coeffs.size());
  for (long k = 0; k < steps; ++k) {
    const double t = t0 + static_cast<double>(k) * h;
    magnus_step(v, hamiltonian, t, h, krylov, options.dt_floor);
    const bool sample = (k + 1) % stride == 0 || k + 1 == steps;
    if (sample) {
      state.coeffs = Eigen::Map<const Eigen::MatrixXcd>(v.data(), rows, cols);
      state.time = k + 1 == steps ? t1 : t0 + static_cast<double>(k + 1) * h;
      if (observer) observer(state);
    }
  }
  state.coeffs = Eigen::Map<const Eigen::MatrixXcd>(v.data(), rows, cols);
  state.time = steps > 0 ? t1 : t0;
}

} // namespace bqd
