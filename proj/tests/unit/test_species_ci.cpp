#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "bqd/error.h"
#include "bqd/species_ci.h"
#include "oracles.h"

using namespace bqd;

namespace {

MixtureModel mixture(int n_bath, double g_bi = 0.2) {
  MixtureModel m;
  m.grid = GridSpec{-25.0, 25.0, 250};
  m.bath.count = n_bath;
  m.g_bi = g_bi;
  return m;
}

Eigen::MatrixXcd random_coeffs(const CIHamiltonian& h, unsigned seed) {
  std::srand(seed);
  return Eigen::MatrixXcd::Random(static_cast<Eigen::Index>(h.dim(Species::bath)),
                                  static_cast<Eigen::Index>(h.dim(Species::impurity)));
}

cplx inner(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return (a.conjugate().cwiseProduct(b)).sum();
}

double impurity_x(const CIState& s, const CIHamiltonian& h) {
  const Eigen::MatrixXcd rho = h.orbital_density_matrix(s.coeffs, Species::impurity);
  const Eigen::MatrixXd& phi = h.basis().impurity;
  const Eigen::MatrixXd xmat = phi.transpose() * h.model().grid.nodes().asDiagonal() * phi * h.model().grid.spacing();
  return (rho.transpose().cwiseProduct(xmat.cast<cplx>())).sum().real() / h.model().impurity.count;
}

} // namespace

TEST_CASE("Fock space dimensions, order and index bijection") {
  CHECK(fock_dimension(4, 3) == 15);
  CHECK(fock_dimension(2, 6) == 21);
  CHECK(fock_dimension(10, 3) == 66);
  CHECK(fock_dimension(0, 5) == 1);
  CHECK_THROWS_AS(fock_dimension(1000, 1000), DomainError);

  const FockSpace f(4, 3);
  REQUIRE(f.dim() == 15);
  const std::vector<std::uint16_t> first{4, 0, 0}, last{0, 0, 4};
  CHECK(std::equal(first.begin(), first.end(), f.occupation(0).begin()));
  CHECK(std::equal(last.begin(), last.end(), f.occupation(14).begin()));
  std::set<std::vector<std::uint16_t>> seen;
  for (std::size_t i = 0; i < f.dim(); ++i) {
    const auto occ = f.occupation(i);
    std::vector<std::uint16_t> v(occ.begin(), occ.end());
    int total = 0;
    for (auto l : v) total += l;
    CHECK(total == 4);
    CHECK(f.index(occ) == i);
    if (i > 0) {
      const auto prev = f.occupation(i - 1);
      CHECK(std::lexicographical_compare(occ.begin(), occ.end(), prev.begin(), prev.end()));
    }
    seen.insert(v);
  }
  CHECK(seen.size() == 15);
  const std::vector<std::uint16_t> bad{3, 0, 0};
  CHECK_FALSE(f.contains(bad));
  CHECK_THROWS_AS(f.index(bad), DomainError);
}

TEST_CASE("annihilation map matrix elements") {
  const FockSpace from(3, 3), to(2, 3);
  const AnnihilationMap a(from, to);
  for (std::size_t s = 0; s < from.dim(); ++s) {
    const auto occ = from.occupation(s);
    for (int p = 0; p < 3; ++p) {
      if (occ[static_cast<std::size_t>(p)] == 0) {
        CHECK(a.target(p, s) == -1);
        continue;
      }
      std::vector<std::uint16_t> lowered(occ.begin(), occ.end());
      --lowered[static_cast<std::size_t>(p)];
      CHECK(static_cast<std::size_t>(a.target(p, s)) == to.index(lowered));
      CHECK(a.factor(p, s) == doctest::Approx(std::sqrt(static_cast<double>(occ[static_cast<std::size_t>(p)]))));
    }
  }
}

TEST_CASE("trap orbitals are orthonormal oscillator states") {
  const MixtureModel m = mixture(4);
  const OrbitalBasis b = trap_orbitals(m, 3, 6);
  CHECK(b.gram_error(Species::bath) < 1e-10);
  CHECK(b.gram_error(Species::impurity) < 1e-10);
  for (int k = 0; k < 6; ++k) CHECK(b.impurity_hamiltonian(k, k) == doctest::Approx(0.3 * (k + 0.5)).epsilon(1e-8));
  CHECK(std::abs(b.impurity(0, 0)) < 1e-12);
  CHECK(std::abs(b.impurity(b.impurity.rows() - 1, 5)) < 1e-12);
  CHECK(b.impurity(b.impurity.rows() / 2, 0) > 0.0);
}

TEST_CASE("noninteracting Hamiltonian is diagonal in occupations") {
  MixtureModel m = mixture(4, 0.0);
  m.bath.g_intra = m.impurity.g_intra = 0.0;
  const OrbitalBasis b = trap_orbitals(m, 3, 6);
  const CIHamiltonian h(m, b);
  CHECK(h.dim(Species::bath) == 15);
  CHECK(h.dim(Species::impurity) == 21);
  Eigen::MatrixXcd out;
  for (std::size_t i = 0; i < h.dim(Species::bath); i += 4)
    for (std::size_t j = 0; j < h.dim(Species::impurity); j += 5) {
      Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(15, 21);
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
      h.apply(c, 0.0, out);
      double expected = 0.0;
      const auto ob = h.space(Species::bath).occupation(i);
      const auto oi = h.space(Species::impurity).occupation(j);
      for (int k = 0; k < 3; ++k) expected += ob[static_cast<std::size_t>(k)] * b.bath_hamiltonian(k, k);
      for (int k = 0; k < 6; ++k) expected += oi[static_cast<std::size_t>(k)] * b.impurity_hamiltonian(k, k);
      CHECK(std::abs(out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - expected) < 1e-10);
      CHECK((out - expected * c).norm() < 1e-10);
    }
  CIGroundStateInfo info;
  ci_ground_state(h, 1e-10, &info);
  CHECK(info.energy == doctest::Approx(6 * 0.15).epsilon(1e-8));
}

TEST_CASE("Hamiltonian is Hermitian, also while driven") {
  MixtureModel m = mixture(4);
  m.driving = {20.0, 1.15, DriveMode::continuous, 2};
  const OrbitalBasis b = trap_orbitals(m, 3, 6);
  const CIHamiltonian h(m, b);
  for (double t : {0.0, 0.7, 3.1}) {
    const Eigen::MatrixXcd u = random_coeffs(h, 1), v = random_coeffs(h, 2);
    Eigen::MatrixXcd hu, hv;
    h.apply(u, t, hu);
    h.apply(v, t, hv);
    const double scale = hu.norm() * v.norm() + u.norm() * hv.norm();
    CHECK(std::abs(inner(u, hv) - inner(hu, v)) < 1e-12 * scale);
  }
}

TEST_CASE("explicit and matrix-free contact agree") {
  const MixtureModel m = mixture(5);
  const OrbitalBasis b = trap_orbitals(m, 4, 8);
  const CIHamiltonian explicit_h(m, b);
  const CIHamiltonian quadrature_h(m, b, 0);
  const Eigen::MatrixXcd c = random_coeffs(explicit_h, 3);
  Eigen::MatrixXcd a, q;
  explicit_h.apply(c, 0.0, a);
  quadrature_h.apply(c, 0.0, q);
  CHECK((a - q).norm() < 1e-12 * a.norm());
}

TEST_CASE("ground state residual and basis-extension monotonicity") {
  double previous = 1e9;
  for (auto [db, di] : std::vector<std::pair<int, int>>{{2, 4}, {2, 6}, {3, 6}, {3, 8}}) {
    const MixtureModel m = mixture(4);
    const OrbitalBasis b = trap_orbitals(m, db, di);
    const CIHamiltonian h(m, b);
    CIGroundStateInfo info;
    const CIState s = ci_ground_state(h, 1e-10, &info);
    CHECK(info.residual < 1e-10);
    CHECK(std::abs(s.norm() - 1.0) < 1e-12);
    CHECK(h.energy_parts(s.coeffs, 0.0).total() == doctest::Approx(info.energy).epsilon(1e-10));
    CHECK(info.energy <= previous + 1e-12);
    previous = info.energy;
  }
}

TEST_CASE("isolated impurity pair approaches the contact-pair energy from above") {
  MixtureModel m = mixture(1, 0.0);
  m.bath.g_intra = 0.0;
  const double exact = oracle::contact_pair_energy(0.4, 0.3);
  double previous = 1e9;
  for (int d : {4, 8, 12, 16}) {
    const CIHamiltonian h(m, trap_orbitals(m, 1, d));
    const CIState s = ci_ground_state(h);
    const double e = h.energy_parts(s.coeffs, 0.0).impurity;
    CHECK(e < previous);
    CHECK(e > exact);
    previous = e;
  }
  CHECK((previous - exact) / exact < 1e-2);
}

TEST_CASE("static propagation is stationary and unitary") {
  const MixtureModel m = mixture(4);
  const CIHamiltonian h(m, trap_orbitals(m, 3, 6));
  CIState s = ci_ground_state(h);
  const CIEnergyParts e0 = h.energy_parts(s.coeffs, 0.0);
  const Eigen::MatrixXcd rho0 = h.orbital_density_matrix(s.coeffs, Species::impurity);
  double drift = 0.0, norm = 0.0, energy = 0.0;
  ci_propagate(s, h, 10.0, 0.01, 50, [&](const CIState& st) {
    drift = std::max(drift, (h.orbital_density_matrix(st.coeffs, Species::impurity) - rho0).cwiseAbs().maxCoeff());
    norm = std::max(norm, std::abs(st.norm() - 1.0));
    energy = std::max(energy, std::abs(h.energy_parts(st.coeffs, st.time).total() - e0.total()) / std::abs(e0.total()));
  });
  CHECK(s.time == doctest::Approx(10.0));
  CHECK(drift < 1e-6);
  CHECK(norm < 1e-8);
  CHECK(energy < 1e-6);
}

namespace {

double kohn_error(double g_ii, int d) {
  MixtureModel m = mixture(2, 0.0);
  m.impurity.g_intra = g_ii;
  m.driving = {1.0, 1.5, DriveMode::continuous, 2};
  const CIHamiltonian h(m, trap_orbitals(m, 1, d));
  CIState s = ci_ground_state(h);
  double err = 0.0, scale = 0.0;
  ci_propagate(s, h, 10.0, 0.01, 10, [&](const CIState& st) {
    const double x = oracle::driven_oscillator(1.0, 0.3, 1.5, st.time);
    err = std::max(err, std::abs(impurity_x(st, h) - x));
    scale = std::max(scale, std::abs(x));
  });
  return err / scale;
}

} // namespace

TEST_CASE("decoupled impurities follow the classical oscillator") {
  CHECK(kohn_error(0.0, 16) < 1e-4);
  // With a contact interaction the truncated orbital product basis breaks the centre-of-mass separation;
  // the deviation shrinks as orbitals are added.
  const double coarse = kohn_error(0.4, 12), fine = kohn_error(0.4, 24);
  CHECK(fine < coarse);
  CHECK(fine < 5e-3);
}

TEST_CASE("Krylov failure below the step floor raises ConvergenceError") {
  MixtureModel m = mixture(4);
  m.driving = {20.0, 1.5, DriveMode::continuous, 2};
  const CIHamiltonian h(m, trap_orbitals(m, 3, 6));
  CIState s = ci_ground_state(h);
  CIPropagationOptions o;
  o.krylov_dimension = 2;
  o.krylov_tolerance = 1e-14;
  o.dt_floor = 0.5;
  CHECK_THROWS_AS(ci_propagate(s, h, 1.0, 1.0, 1, nullptr, o), ConvergenceError);
}
