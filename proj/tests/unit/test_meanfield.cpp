#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bqd/error.h"
#include "bqd/meanfield.h"
#include "oracles.h"

using namespace bqd;

namespace {

MixtureModel small_model() {
  MixtureModel m;
  m.grid = GridSpec{-25.0, 25.0, 250};
  return m;
}

double field_norm(const Eigen::VectorXcd& f, const GridSpec& g) { return f.squaredNorm() * g.spacing(); }

double mean_x(const Eigen::VectorXcd& f, const GridSpec& g) {
  return (f.cwiseAbs2().array() * g.nodes().array()).sum() * g.spacing();
}

} // namespace

TEST_CASE("noninteracting ground state is the oscillator ground state") {
  MixtureModel m = small_model();
  m.bath.g_intra = m.impurity.g_intra = m.g_bi = 0.0;
  m.bath.count = 5;
  MFGroundStateInfo info;
  const MFState s = mf_ground_state(m, {}, &info);
  CHECK(info.chemical_potential_bath == doctest::Approx(0.15).epsilon(1e-8));
  CHECK(info.chemical_potential_impurity == doctest::Approx(0.15).epsilon(1e-8));
  const MFEnergyTerms e = mf_energy_terms(s, m, 0.0);
  CHECK((e.kinetic_bath + e.potential_bath) / 5.0 == doctest::Approx(0.15).epsilon(1e-8));
  CHECK((e.kinetic_impurity + e.potential_impurity) / 2.0 == doctest::Approx(0.15).epsilon(1e-8));
  const Eigen::VectorXcd g = oscillator_ground_field(m, Species::bath);
  CHECK(std::abs(g.dot(s.bath)) * m.grid.spacing() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("paper couplings: stationary, normalized, miscible overlap") {
  const MixtureModel m = small_model();
  MFGroundStateInfo info;
  const MFState s = mf_ground_state(m, {}, &info);
  CHECK(std::abs(field_norm(s.bath, m.grid) - 1.0) < 1e-12);
  CHECK(std::abs(field_norm(s.impurity, m.grid) - 1.0) < 1e-12);
  CHECK(mf_stationarity_residual(s, m) < 1e-8);
  // Both densities peak at the trap centre.
  Eigen::Index ib, ii;
  s.bath.cwiseAbs2().maxCoeff(&ib);
  s.impurity.cwiseAbs2().maxCoeff(&ii);
  CHECK(std::abs(m.grid.node(static_cast<std::size_t>(ib))) < 0.2);
  CHECK(std::abs(m.grid.node(static_cast<std::size_t>(ii))) < 0.2);
}

TEST_CASE("strong interspecies repulsion splits the impurity density") {
  MixtureModel m = small_model();
  m.g_bi = 1.0;
  const MFState s = mf_ground_state(m);
  const Eigen::VectorXd rho = s.impurity.cwiseAbs2();
  const auto n = rho.size();
  Eigen::Index peak;
  rho.head(n / 2).maxCoeff(&peak);
  const double centre = 0.5 * (rho(n / 2 - 1) + rho(n / 2));
  CHECK(rho(peak) > 2.0 * centre);
  CHECK(std::abs(m.grid.node(static_cast<std::size_t>(peak))) > 5.0);
  CHECK((rho - rho.reverse()).cwiseAbs().maxCoeff() < 1e-12 * rho.maxCoeff());

  // Without the parity projection the flow may break the symmetry, but never ends above the even state.
  MFGroundStateOptions free;
  free.even_parity = false;
  const MFState f = mf_ground_state(m, free);
  CHECK(mf_energy_terms(f, m, 0.0).total() <= mf_energy_terms(s, m, 0.0).total() + 1e-8);
}

TEST_CASE("ground state iteration cap raises ConvergenceError") {
  MFGroundStateOptions o;
  o.max_iterations = 3;
  CHECK_THROWS_AS(mf_ground_state(small_model(), o), ConvergenceError);
}

TEST_CASE("static propagation keeps the ground state stationary and even") {
  const MixtureModel m = small_model();
  MFState s = mf_ground_state(m);
  const Eigen::VectorXd rho_b = s.bath.cwiseAbs2(), rho_i = s.impurity.cwiseAbs2();
  const double e0 = mf_energy_terms(s, m, 0.0).total();
  double worst_density = 0.0, worst_parity = 0.0, worst_norm = 0.0, worst_energy = 0.0;
  mf_propagate(s, m, 50.0, 1e-3, 1000, [&](const MFState& st) {
    worst_density = std::max({worst_density, (st.bath.cwiseAbs2() - rho_b).cwiseAbs().maxCoeff() * 100.0,
                              (st.impurity.cwiseAbs2() - rho_i).cwiseAbs().maxCoeff() * 2.0});
    const Eigen::VectorXd d = st.impurity.cwiseAbs2();
    worst_parity = std::max(worst_parity, (d - d.reverse()).cwiseAbs().maxCoeff());
    worst_norm = std::max({worst_norm, std::abs(field_norm(st.bath, m.grid) - 1.0),
                           std::abs(field_norm(st.impurity, m.grid) - 1.0)});
    worst_energy = std::max(worst_energy, std::abs(mf_energy_terms(st, m, st.time).total() - e0) / std::abs(e0));
  });
  CHECK(s.time == doctest::Approx(50.0));
  CHECK(worst_density < 1e-6);
  CHECK(worst_parity < 1e-8);
  CHECK(worst_norm < 1e-8);
  CHECK(worst_energy < 1e-6);
}

TEST_CASE("decoupled impurities follow the classical driven oscillator") {
  MixtureModel m = small_model();
  m.g_bi = 0.0;
  m.driving = {20.0, 1.5, DriveMode::continuous, 2};
  MFState s = mf_ground_state(m);
  double err = 0.0, scale = 0.0;
  mf_propagate(s, m, 20.0, 1e-3, 100, [&](const MFState& st) {
    const double x = oracle::driven_oscillator(20.0, 0.3, 1.5, st.time);
    err = std::max(err, std::abs(mean_x(st.impurity, m.grid) - x));
    scale = std::max(scale, std::abs(x));
  });
  CHECK(err / scale < 1e-4);
}

TEST_CASE("fast driving keeps the impurities inside a small region") {
  MixtureModel m = small_model();
  m.driving = {20.0, 1.5, DriveMode::continuous, 2};
  MFState s = mf_ground_state(m.undriven());
  double reach = 0.0;
  mf_propagate(s, m, 20.0, 2e-3, 50, [&](const MFState& st) { reach = std::max(reach, std::abs(mean_x(st.impurity, m.grid))); });
  CHECK(reach < 20.0);
  CHECK(reach > 0.5);
}

TEST_CASE("step count covers the interval") {
  CHECK(step_count(0.0, 1.0, 0.1) == 10);
  CHECK(step_count(0.0, 1.0, 0.3) == 4);
  CHECK(step_count(2.0, 2.0, 0.1) == 0);
}
