#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace bqd {

/// binomial(N + d - 1, d - 1); throws DomainError on overflow.
std::size_t fock_dimension(int particles, int modes);

/// Number-conserving bosonic configurations (l_1..l_d), sum l_i = N, in descending lexicographic
/// order: index 0 is (N, 0, ..., 0).
class FockSpace {
public:
  FockSpace(int particles, int modes);

  int particles() const { return particles_; }
  int modes() const { return modes_; }
  std::size_t dim() const { return dim_; }

  std::span<const std::uint16_t> occupation(std::size_t index) const {
    return {occ_.data() + index * static_cast<std::size_t>(modes_), static_cast<std::size_t>(modes_)};
  }
  /// Inverse of occupation(); throws DomainError for configurations outside the space.
  std::size_t index(std::span<const std::uint16_t> occupation) const;
  bool contains(std::span<const std::uint16_t> occupation) const;

private:
  static std::string key(std::span<const std::uint16_t> occupation);

  int particles_;
  int modes_;
  std::size_t dim_;
  std::vector<std::uint16_t> occ_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

/// Matrix elements of a_p between an N-particle space and the (N-1)-particle space:
/// a_p |s> = factor(p, s) |target(p, s)>, target = -1 when mode p is empty in s.
class AnnihilationMap {
public:
  AnnihilationMap(const FockSpace& from, const FockSpace& to);

  int modes() const { return modes_; }
  std::size_t dim_from() const { return dim_from_; }
  std::size_t dim_to() const { return dim_to_; }
  std::int32_t target(int p, std::size_t s) const { return target_[static_cast<std::size_t>(p) * dim_from_ + s]; }
  double factor(int p, std::size_t s) const { return factor_[static_cast<std::size_t>(p) * dim_from_ + s]; }

private:
  int modes_;
  std::size_t dim_from_;
  std::size_t dim_to_;
  std::vector<std::int32_t> target_;
  std::vector<double> factor_;
};

/// Rows of x index the `from` space; returns a_p x with rows in the `to` space.
Eigen::MatrixXcd annihilate(const AnnihilationMap& map, int p, const Eigen::Ref<const Eigen::MatrixXcd>& x);

/// Second-quantized sum_{pq} h_pq a_p^+ a_q as a sparse matrix on `space`. Entries with
/// |h_pq| <= drop are skipped.
Eigen::SparseMatrix<double> one_body_operator(const FockSpace& space, const Eigen::MatrixXd& h, double drop = 0.0);

/// Contact interaction (g/2) sum_j dx (psi_j^+)^2 (psi_j)^2 with psi_j = sum_p phi_p(x_j) a_p,
/// i.e. two-body integrals W_pqrs = g sum_j dx phi_p phi_q phi_r phi_s evaluated by grid quadrature.
/// Acts on blocks whose rows index the N-particle space.
class ContactInteraction {
public:
  /// `orbitals` holds phi_p(x_j) in column p; `weight` is g*dx.
  ContactInteraction(int particles, const Eigen::MatrixXd& orbitals, double weight);
  /// Reuses existing N -> N-1 and N-1 -> N-2 maps.
  ContactInteraction(const Eigen::MatrixXd& orbitals, double weight, std::shared_ptr<const AnnihilationMap> lower1,
                     std::shared_ptr<const AnnihilationMap> lower2);

  std::size_t dim() const { return dim_; }
  /// out += V x for a complex block x (dim x m).
  void apply_add(const Eigen::Ref<const Eigen::MatrixXcd>& x, Eigen::Ref<Eigen::MatrixXcd> out) const;
  /// Explicit sparse matrix (assembled column-block by column-block).
  Eigen::SparseMatrix<double> assemble() const;

private:
  void apply_real(const Eigen::MatrixXd& x, Eigen::MatrixXd& out) const;

  int particles_;
  std::size_t dim_ = 0;
  Eigen::MatrixXd orbitals_;
  double weight_;
  std::shared_ptr<const AnnihilationMap> lower1_; // N -> N-1
  std::shared_ptr<const AnnihilationMap> lower2_; // N-1 -> N-2
};

} // namespace bqd
