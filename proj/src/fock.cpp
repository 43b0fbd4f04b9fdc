#include "bqd/fock.h"

#include <cmath>
#include <limits>

#include "bqd/error.h"

namespace bqd {

std::size_t fock_dimension(int particles, int modes) {
  if (particles < 0 || modes < 1) throw DomainError("Fock space needs N >= 0 and d >= 1");
  // binomial(N + d - 1, N) computed incrementally; each partial product is itself a binomial.
  std::size_t result = 1;
  for (int k = 1; k <= particles; ++k) {
    const std::size_t num = static_cast<std::size_t>(modes - 1 + k);
    if (result > std::numeric_limits<std::size_t>::max() / num) throw DomainError("Fock dimension overflows");
    result = result * num / static_cast<std::size_t>(k);
  }
  return result;
}

FockSpace::FockSpace(int particles, int modes) : particles_(particles), modes_(modes) {
  dim_ = fock_dimension(particles, modes);
  if (particles > std::numeric_limits<std::uint16_t>::max()) throw DomainError("too many particles for Fock storage");
  occ_.reserve(dim_ * static_cast<std::size_t>(modes));
  lookup_.reserve(dim_);

  // Descending lexicographic enumeration of compositions of N into d parts.
  std::vector<std::uint16_t> l(static_cast<std::size_t>(modes), 0);
  l[0] = static_cast<std::uint16_t>(particles);
  while (true) {
    lookup_.emplace(key(l), occ_.size() / static_cast<std::size_t>(modes));
    occ_.insert(occ_.end(), l.begin(), l.end());
    // Rightmost occupied mode k before the last one gives a particle to k+1, which also collects
    // everything parked in the last mode (modes between are empty).
    int k = modes - 2;
    while (k >= 0 && l[static_cast<std::size_t>(k)] == 0) --k;
    if (k < 0) break;
    const std::uint16_t tail = l[static_cast<std::size_t>(modes - 1)];
    l[static_cast<std::size_t>(modes - 1)] = 0;
    --l[static_cast<std::size_t>(k)];
    l[static_cast<std::size_t>(k + 1)] = static_cast<std::uint16_t>(tail + 1);
  }
  if (occ_.size() != dim_ * static_cast<std::size_t>(modes)) throw Error("Fock enumeration size mismatch");
}

std::string FockSpace::key(std::span<const std::uint16_t> occupation) {
  return {reinterpret_cast<const char*>(occupation.data()), occupation.size() * sizeof(std::uint16_t)};
}

bool FockSpace::contains(std::span<const std::uint16_t> occupation) const {
  return occupation.size() == static_cast<std::size_t>(modes_) && lookup_.count(key(occupation)) > 0;
}

std::size_t FockSpace::index(std::span<const std::uint16_t> occupation) const {
  if (occupation.size() != static_cast<std::size_t>(modes_)) throw DomainError("occupation length mismatch");
  const auto it = lookup_.find(key(occupation));
  if (it == lookup_.end()) throw DomainError("configuration not in Fock space");
  return it->second;
}

AnnihilationMap::AnnihilationMap(const FockSpace& from, const FockSpace& to)
    : modes_(from.modes()), dim_from_(from.dim()), dim_to_(to.dim()) {
  if (to.modes() != from.modes() || to.particles() + 1 != from.particles())
    throw DomainError("annihilation map needs spaces with N and N-1 particles over the same modes");
  if (dim_to_ > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
    throw DomainError("Fock space too large for annihilation maps");
  target_.assign(static_cast<std::size_t>(modes_) * dim_from_, -1);
  factor_.assign(static_cast<std::size_t>(modes_) * dim_from_, 0.0);
  std::vector<std::uint16_t> l(static_cast<std::size_t>(modes_));
  for (std::size_t s = 0; s < dim_from_; ++s) {
    const auto occ = from.occupation(s);
    for (int p = 0; p < modes_; ++p) {
      const auto lp = occ[static_cast<std::size_t>(p)];
      if (lp == 0) continue;
      std::copy(occ.begin(), occ.end(), l.begin());
      --l[static_cast<std::size_t>(p)];
      const std::size_t idx = static_cast<std::size_t>(p) * dim_from_ + s;
      target_[idx] = static_cast<std::int32_t>(to.index(l));
      factor_[idx] = std::sqrt(static_cast<double>(lp));
    }
  }
}

Eigen::SparseMatrix<double> one_body_operator(const FockSpace& space, const Eigen::MatrixXd& h, double drop) {
  const int d = space.modes();
  if (h.rows() != d || h.cols() != d) throw DomainError("one-body matrix does not match the number of modes");
  const std::size_t dim = space.dim();
  std::vector<Eigen::Triplet<double>> trip;
  if (space.particles() == 0) return Eigen::SparseMatrix<double>(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));

  std::vector<std::uint16_t> l(static_cast<std::size_t>(d));
  for (std::size_t s = 0; s < dim; ++s) {
    const auto occ = space.occupation(s);
    for (int q = 0; q < d; ++q) {
      const auto lq = occ[static_cast<std::size_t>(q)];
      if (lq == 0) continue;
      for (int p = 0; p < d; ++p) {
        const double hpq = h(p, q);
        if (std::abs(hpq) <= drop) continue;
        if (p == q) {
          trip.emplace_back(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s), hpq * lq);
          continue;
        }
        std::copy(occ.begin(), occ.end(), l.begin());
        --l[static_cast<std::size_t>(q)];
        const auto lp = l[static_cast<std::size_t>(p)];
        ++l[static_cast<std::size_t>(p)];
        const std::size_t t = space.index(l);
        trip.emplace_back(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s),
                          hpq * std::sqrt(static_cast<double>(lq) * static_cast<double>(lp + 1)));
      }
    }
  }
  Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

Eigen::MatrixXcd annihilate(const AnnihilationMap& map, int p, const Eigen::Ref<const Eigen::MatrixXcd>& x) {
  if (static_cast<std::size_t>(x.rows()) != map.dim_from()) throw DomainError("annihilate: row count mismatch");
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(map.dim_to()), x.cols());
  for (std::size_t s = 0; s < map.dim_from(); ++s) {
    const auto t = map.target(p, s);
    if (t >= 0) y.row(t) += map.factor(p, s) * x.row(static_cast<Eigen::Index>(s));
  }
  return y;
}

ContactInteraction::ContactInteraction(int particles, const Eigen::MatrixXd& orbitals, double weight)
    : particles_(particles), orbitals_(orbitals), weight_(weight) {
  const int d = static_cast<int>(orbitals.cols());
  FockSpace full(particles, d);
  dim_ = full.dim();
  if (particles >= 2) {
    FockSpace minus1(particles - 1, d);
    FockSpace minus2(particles - 2, d);
    lower1_ = std::make_shared<const AnnihilationMap>(full, minus1);
    lower2_ = std::make_shared<const AnnihilationMap>(minus1, minus2);
  }
}

ContactInteraction::ContactInteraction(const Eigen::MatrixXd& orbitals, double weight,
                                       std::shared_ptr<const AnnihilationMap> lower1,
                                       std::shared_ptr<const AnnihilationMap> lower2)
    : particles_(2), orbitals_(orbitals), weight_(weight), lower1_(std::move(lower1)), lower2_(std::move(lower2)) {
  if (!lower1_ || !lower2_ || lower1_->dim_to() != lower2_->dim_from() || lower1_->modes() != orbitals.cols())
    throw DomainError("contact interaction: inconsistent annihilation maps");
  dim_ = lower1_->dim_from();
}

void ContactInteraction::apply_real(const Eigen::MatrixXd& x, Eigen::MatrixXd& out) const {
  if (particles_ < 2 || weight_ == 0.0) return;
  const AnnihilationMap& a1 = *lower1_;
  const AnnihilationMap& a2 = *lower2_;
  const int d = a1.modes();
  const auto m = x.cols();
  const auto dim1 = static_cast<Eigen::Index>(a1.dim_to());
  const auto dim2 = static_cast<Eigen::Index>(a2.dim_to());

  // y(q, u + dim1 k) = (a_q x)(u, k)
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(d, dim1 * m);
  for (int q = 0; q < d; ++q)
    for (std::size_t s = 0; s < a1.dim_from(); ++s) {
      const auto u = a1.target(q, s);
      if (u < 0) continue;
      const double f = a1.factor(q, s);
      for (Eigen::Index k = 0; k < m; ++k) y(q, u + dim1 * k) += f * x(static_cast<Eigen::Index>(s), k);
    }
  // z_j = psi_j x on the grid
  const Eigen::MatrixXd z = orbitals_ * y;

  // b_j = psi_j z_j, then scale by g dx / 2
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(orbitals_.rows(), dim2 * m);
  for (int p = 0; p < d; ++p)
    for (std::size_t u = 0; u < a2.dim_from(); ++u) {
      const auto v = a2.target(p, u);
      if (v < 0) continue;
      const double f = a2.factor(p, u);
      for (Eigen::Index k = 0; k < m; ++k)
        b.col(v + dim2 * k) += f * orbitals_.col(p).cwiseProduct(z.col(static_cast<Eigen::Index>(u) + dim1 * k));
    }
  b *= 0.5 * weight_;

  // Back up: z' = psi_j^+ b_j, y' = sum_j phi(x_j) z'_j, out += sum_q a_q^+ y'_q
  Eigen::MatrixXd zb = Eigen::MatrixXd::Zero(orbitals_.rows(), dim1 * m);
  for (int p = 0; p < d; ++p)
    for (std::size_t u = 0; u < a2.dim_from(); ++u) {
      const auto v = a2.target(p, u);
      if (v < 0) continue;
      const double f = a2.factor(p, u);
      for (Eigen::Index k = 0; k < m; ++k)
        zb.col(static_cast<Eigen::Index>(u) + dim1 * k) += f * orbitals_.col(p).cwiseProduct(b.col(v + dim2 * k));
    }
  const Eigen::MatrixXd yb = orbitals_.transpose() * zb;
  for (int q = 0; q < d; ++q)
    for (std::size_t s = 0; s < a1.dim_from(); ++s) {
      const auto u = a1.target(q, s);
      if (u < 0) continue;
      const double f = a1.factor(q, s);
      for (Eigen::Index k = 0; k < m; ++k) out(static_cast<Eigen::Index>(s), k) += f * yb(q, u + dim1 * k);
    }
}

void ContactInteraction::apply_add(const Eigen::Ref<const Eigen::MatrixXcd>& x, Eigen::Ref<Eigen::MatrixXcd> out) const {
  if (particles_ < 2 || weight_ == 0.0) return;
  const auto m = x.cols();
  Eigen::MatrixXd xr(x.rows(), 2 * m);
  xr.leftCols(m) = x.real();
  xr.rightCols(m) = x.imag();
  Eigen::MatrixXd yr = Eigen::MatrixXd::Zero(x.rows(), 2 * m);
  apply_real(xr, yr);
  out.real() += yr.leftCols(m);
  out.imag() += yr.rightCols(m);
}

Eigen::SparseMatrix<double> ContactInteraction::assemble() const {
  const auto n = static_cast<Eigen::Index>(dim_);
  Eigen::SparseMatrix<double> result(n, n);
  if (particles_ < 2 || weight_ == 0.0) return result;
  std::vector<Eigen::Triplet<double>> trip;
  constexpr Eigen::Index kBlock = 64;
  for (Eigen::Index c0 = 0; c0 < n; c0 += kBlock) {
    const Eigen::Index nc = std::min(kBlock, n - c0);
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, nc);
    for (Eigen::Index k = 0; k < nc; ++k) e(c0 + k, k) = 1.0;
    Eigen::MatrixXd col = Eigen::MatrixXd::Zero(n, nc);
    apply_real(e, col);
    for (Eigen::Index k = 0; k < nc; ++k)
      for (Eigen::Index r = 0; r < n; ++r)
        if (col(r, k) != 0.0) trip.emplace_back(r, c0 + k, col(r, k));
  }
  result.setFromTriplets(trip.begin(), trip.end());
  // Quadrature roundoff breaks exact symmetry at the 1e-16 level; restore it.
  Eigen::SparseMatrix<double> sym = 0.5 * (result + Eigen::SparseMatrix<double>(result.transpose()));
  sym.prune(1e-15 * std::max(1.0, std::abs(weight_)), 1.0);
  return sym;
}

} // namespace bqd
