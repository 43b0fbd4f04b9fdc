#pragma once

#include <complex>
#include <cstddef>
#include <memory>

#include <Eigen/Dense>

namespace bqd {

using cplx = std::complex<double>;

/// Sine-DVR grid on (x_min, x_max) with hard walls at both endpoints.
/// Nodes are x_j = x_min + j*dx for j = 1..n, dx = (x_max - x_min)/(n + 1).
struct GridSpec {
  double x_min = -50.0;
  double x_max = 50.0;
  std::size_t n = 500;

  double length() const { return x_max - x_min; }
  double spacing() const { return length() / static_cast<double>(n + 1); }
  /// Zero-based node index i maps to x_{i+1}.
  double node(std::size_t i) const { return x_min + static_cast<double>(i + 1) * spacing(); }
  Eigen::VectorXd nodes() const;
  void validate() const;
};

bool operator==(const GridSpec& a, const GridSpec& b);

/// Eigenvalues (pi k / L)^2 / (2 M), k = 1..n, of the kinetic operator in the sine basis.
Eigen::VectorXd kinetic_spectrum(const GridSpec& grid, double mass);

/// Orthonormal DST-I matrix S_kj = sqrt(2/(n+1)) sin(pi (k+1)(j+1)/(n+1)); S is symmetric and S*S = 1.
Eigen::MatrixXd sine_basis_matrix(std::size_t n);

/// Dense sine-DVR kinetic matrix S diag(eps) S.
Eigen::MatrixXd dvr_kinetic_matrix(const GridSpec& grid, double mass);

/// Orthonormal in-place DST-I on complex vectors of length n (self-inverse).
class SineTransform {
public:
  explicit SineTransform(std::size_t n);
  ~SineTransform();
  SineTransform(const SineTransform&) = delete;
  SineTransform& operator=(const SineTransform&) = delete;

  std::size_t size() const { return n_; }
  void apply(Eigen::Ref<Eigen::VectorXcd> v) const;

private:
  std::size_t n_;
  double scale_;
  void* plan_;
};

/// Orthonormal in-place two-dimensional DST-I on an n x n complex array (column-major).
class SineTransform2D {
public:
  explicit SineTransform2D(std::size_t n);
  ~SineTransform2D();
  SineTransform2D(const SineTransform2D&) = delete;
  SineTransform2D& operator=(const SineTransform2D&) = delete;

  std::size_t size() const { return n_; }
  void apply(Eigen::Ref<Eigen::MatrixXcd> m) const;

private:
  std::size_t n_;
  double scale_;
  void* plan_;
};

} // namespace bqd
