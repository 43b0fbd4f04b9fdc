#include "bqd/grid.h"

#include <cmath>
#include <mutex>
#include <new>
#include <numbers>
#include <vector>

#include <fftw3.h>

#include "bqd/error.h"

namespace bqd {

namespace {

// FFTW's planner is not re-entrant; execution of an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

} // namespace

Eigen::VectorXd GridSpec::nodes() const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i)) = node(i);
  return x;
}

void GridSpec::validate() const {
  if (n < 2) throw DomainError("grid needs at least 2 points");
  if (!(x_min < x_max)) throw DomainError("grid requires x_min < x_max");
  if (!std::isfinite(x_min) || !std::isfinite(x_max)) throw DomainError("grid bounds must be finite");
}

bool operator==(const GridSpec& a, const GridSpec& b) {
  return a.x_min == b.x_min && a.x_max == b.x_max && a.n == b.n;
}

Eigen::VectorXd kinetic_spectrum(const GridSpec& grid, double mass) {
  Eigen::VectorXd eps(static_cast<Eigen::Index>(grid.n));
  const double k0 = std::numbers::pi / grid.length();
  for (std::size_t k = 0; k < grid.n; ++k) {
    const double kk = k0 * static_cast<double>(k + 1);
    eps(static_cast<Eigen::Index>(k)) = kk * kk / (2.0 * mass);
  }
  return eps;
}

Eigen::MatrixXd sine_basis_matrix(std::size_t n) {
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd s(N, N);
  const double norm = std::sqrt(2.0 / static_cast<double>(n + 1));
  const double w = std::numbers::pi / static_cast<double>(n + 1);
  for (Eigen::Index k = 0; k < N; ++k)
    for (Eigen::Index j = 0; j < N; ++j)
      s(k, j) = norm * std::sin(w * static_cast<double>((k + 1) * (j + 1)));
  return s;
}

Eigen::MatrixXd dvr_kinetic_matrix(const GridSpec& grid, double mass) {
  const Eigen::MatrixXd s = sine_basis_matrix(grid.n);
  const Eigen::VectorXd eps = kinetic_spectrum(grid, mass);
  Eigen::MatrixXd t = s * eps.asDiagonal() * s;
  return 0.5 * (t + t.transpose());
}

namespace {

/// fftw_malloc'd scratch; every buffer shares the alignment the plans were made for, so SIMD codelets apply.
class FftwBuffer {
public:
  explicit FftwBuffer(std::size_t count) : data_(fftw_alloc_real(count)) {
    if (data_ == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data_); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  double* data() const { return data_; }

private:
  double* data_;
};

/// Two real DST-I transforms (real and imaginary parts) stored back to back, rank 1 or 2.
void* make_split_plan(int rank, const int* dims, int block) {
  FftwBuffer scratch(2 * static_cast<std::size_t>(block));
  const fftw_r2r_kind kinds[2] = {FFTW_RODFT00, FFTW_RODFT00};
  std::lock_guard lock(planner_mutex());
  fftw_plan plan = fftw_plan_many_r2r(rank, dims, 2, scratch.data(), nullptr, 1, block, scratch.data(), nullptr, 1,
                                      block, kinds, FFTW_ESTIMATE);
  if (plan == nullptr) throw Error("FFTW could not create a DST-I plan");
  return plan;
}

void destroy_plan(void* plan) {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan));
}

void run_split(void* plan, cplx* values, Eigen::Index count, double scale) {
  FftwBuffer buf(2 * static_cast<std::size_t>(count));
  Eigen::Map<Eigen::VectorXcd> v(values, count);
  Eigen::Map<Eigen::VectorXd> re(buf.data(), count);
  Eigen::Map<Eigen::VectorXd> im(buf.data() + count, count);
  re = v.real();
  im = v.imag();
  fftw_execute_r2r(static_cast<fftw_plan>(plan), buf.data(), buf.data());
  v.real() = scale * re;
  v.imag() = scale * im;
}

} // namespace

SineTransform::SineTransform(std::size_t n) : n_(n), scale_(1.0 / std::sqrt(2.0 * static_cast<double>(n + 1))) {
  if (n < 1) throw DomainError("sine transform size must be positive");
  const int len = static_cast<int>(n);
  plan_ = make_split_plan(1, &len, len);
}

SineTransform::~SineTransform() { destroy_plan(plan_); }

void SineTransform::apply(Eigen::Ref<Eigen::VectorXcd> v) const {
  if (static_cast<std::size_t>(v.size()) != n_) throw DomainError("sine transform size mismatch");
  run_split(plan_, v.data(), v.size(), scale_);
}

SineTransform2D::SineTransform2D(std::size_t n) : n_(n), scale_(1.0 / (2.0 * static_cast<double>(n + 1))) {
  if (n < 1) throw DomainError("sine transform size must be positive");
  const int dims[2] = {static_cast<int>(n), static_cast<int>(n)};
  plan_ = make_split_plan(2, dims, dims[0] * dims[1]);
}

SineTransform2D::~SineTransform2D() { destroy_plan(plan_); }

void SineTransform2D::apply(Eigen::Ref<Eigen::MatrixXcd> m) const {
  if (static_cast<std::size_t>(m.rows()) != n_ || static_cast<std::size_t>(m.cols()) != n_)
    throw DomainError("2D sine transform size mismatch");
  // Column-major storage of a square array: transforming the transpose is the same 2D DST.
  if (m.outerStride() != m.rows()) throw DomainError("2D sine transform needs contiguous storage");
  run_split(plan_, m.data(), m.size(), scale_);
}

} // namespace bqd
