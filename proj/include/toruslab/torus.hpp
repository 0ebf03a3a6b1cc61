#pragma once

// Rectangular tori, grid/mode fields, the FFT pair, and the exact free
// Schrodinger propagator.
//
// Storage convention for every field: flat index = ix * Ny + iy (y fastest).
// Grid point ix sits at x = ix * A / Nx. In mode space the same slot holds
// the coefficient of exp(i(2 pi m x / A + 2 pi n y / B)) with
//   m = ix       for ix <  Nx/2,
//   m = ix - Nx  for ix >= Nx/2   (centered band [-Nx/2, Nx/2)),
// and likewise for n. The forward transform divides by Nx*Ny, so
//   u(z) = sum_{m,n} c_{mn} exp(i k_{mn} . z)   and   ||u||^2 = A*B * sum |c|^2.
// One-dimensional tori use Ny = 1 and B = 1.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "toruslab/error.hpp"

namespace toruslab {

using cplx = std::complex<double>;

struct Mode {
  int m = 0;
  int n = 0;
  friend bool operator==(const Mode&, const Mode&) = default;
};

struct RationalRatio {
  long long p = 0;
  long long q = 1;
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex mutex;
  return mutex;
}

// FFTW's planner is not re-entrant; execution through fftw_execute_dft on
// fresh arrays is. Plans are built once per Torus and shared read-only.
class FftPlans {
 public:
  FftPlans(int nx, int ny) {
    const std::size_t total = static_cast<std::size_t>(nx) * ny;
    std::lock_guard lock(fftw_planner_mutex());
    auto* in = fftw_alloc_complex(total);
    auto* out = fftw_alloc_complex(total);
    const unsigned flags = FFTW_ESTIMATE;
    if (ny == 1) {
      forward_ = fftw_plan_dft_1d(nx, in, out, FFTW_FORWARD, flags);
      backward_ = fftw_plan_dft_1d(nx, in, out, FFTW_BACKWARD, flags);
    } else {
      forward_ = fftw_plan_dft_2d(nx, ny, in, out, FFTW_FORWARD, flags);
      backward_ = fftw_plan_dft_2d(nx, ny, in, out, FFTW_BACKWARD, flags);
    }
    fftw_free(in);
    fftw_free(out);
    if (forward_ == nullptr || backward_ == nullptr) {
      throw Error("FFTW failed to create a plan");
    }
  }
  ~FftPlans() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

  // Plans assume fftw_alloc alignment, which enables the SIMD kernels; caller
  // arrays are staged through per-thread aligned buffers.
  void execute(bool forward, const cplx* in, cplx* out, std::size_t n) const {
    thread_local Scratch scratch;
    scratch.reserve(n);
    std::copy(in, in + n, reinterpret_cast<cplx*>(scratch.in));
    fftw_execute_dft(forward ? forward_ : backward_, scratch.in, scratch.out);
    const auto* res = reinterpret_cast<const cplx*>(scratch.out);
    std::copy(res, res + n, out);
  }

 private:
  struct Scratch {
    fftw_complex* in = nullptr;
    fftw_complex* out = nullptr;
    std::size_t capacity = 0;
    void reserve(std::size_t n) {
      if (n <= capacity) return;
      release();
      in = fftw_alloc_complex(n);
      out = fftw_alloc_complex(n);
      if (in == nullptr || out == nullptr) throw Error("FFTW buffer allocation failed");
      capacity = n;
    }
    void release() {
      fftw_free(in);
      fftw_free(out);
      in = out = nullptr;
      capacity = 0;
    }
    ~Scratch() { release(); }
  };

  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

inline std::optional<RationalRatio> detect_rational(double x, double tol = 1e-9,
                                                    long long max_den = 1000) {
  // Continued-fraction convergents of x.
  long long h0 = 1, h1 = 0, k0 = 0, k1 = 1;
  double r = x;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(r);
    if (std::abs(a) > 1e15) break;
    const auto ai = static_cast<long long>(a);
    const long long h2 = ai * h0 + h1;
    const long long k2 = ai * k0 + k1;
    if (k2 > max_den) break;
    h1 = h0;
    h0 = h2;
    k1 = k0;
    k0 = k2;
    if (std::abs(x - static_cast<double>(h0) / static_cast<double>(k0)) <=
        tol * std::max(1.0, std::abs(x))) {
      return RationalRatio{h0, k0};
    }
    const double frac = r - a;
    if (frac == 0.0) break;
    r = 1.0 / frac;
  }
  return std::nullopt;
}

}  // namespace detail

/// Geometry of R/AZ (dim 1) or R^2/(AZ x BZ) (dim 2) together with its grid.
/// Immutable; always held through TorusPtr.
class Torus {
  struct Private {};

 public:
  Torus(Private, int dim, double period_x, double period_y, int nx, int ny)
      : dim_(dim), period_x_(period_x), period_y_(period_y), nx_(nx), ny_(ny) {
    const std::size_t total = size();
    eigenvalues_.resize(total);
    const double kx = 2.0 * std::numbers::pi / period_x_;
    const double ky = 2.0 * std::numbers::pi / period_y_;
    for (std::size_t i = 0; i < total; ++i) {
      const Mode md = mode(i);
      eigenvalues_[i] = (kx * md.m) * (kx * md.m) + (ky * md.n) * (ky * md.n);
    }
    plans_ = std::make_unique<detail::FftPlans>(nx_, ny_);
  }

  static std::shared_ptr<const Torus> make_2d(double period_x, double period_y, int nx,
                                              int ny) {
    if (!(period_x > 0.0) || !(period_y > 0.0) || !std::isfinite(period_x) ||
        !std::isfinite(period_y)) {
      throw DomainError("torus periods must be positive and finite");
    }
    if (nx < 2 || ny < 2 || nx % 2 != 0 || ny % 2 != 0) {
      throw DomainError("grid sizes must be even and at least 2, got " +
                        std::to_string(nx) + "x" + std::to_string(ny));
    }
    return std::make_shared<const Torus>(Private{}, 2, period_x, period_y, nx, ny);
  }

  static std::shared_ptr<const Torus> make_1d(double period, int nx) {
    if (!(period > 0.0) || !std::isfinite(period)) {
      throw DomainError("torus period must be positive and finite");
    }
    if (nx < 2 || nx % 2 != 0) {
      throw DomainError("grid size must be even and at least 2, got " + std::to_string(nx));
    }
    return std::make_shared<const Torus>(Private{}, 1, period, 1.0, nx, 1);
  }

  /// (R / 2 pi Z)^2 with an n x n grid.
  static std::shared_ptr<const Torus> square_2pi(int n) {
    return make_2d(2.0 * std::numbers::pi, 2.0 * std::numbers::pi, n, n);
  }

  int dim() const noexcept { return dim_; }
  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  double period_x() const noexcept { return period_x_; }
  double period_y() const noexcept { return period_y_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(nx_) * ny_; }
  /// Total measure: A*B, or A in one dimension.
  double measure() const noexcept { return dim_ == 1 ? period_x_ : period_x_ * period_y_; }
  double cell_area() const noexcept { return measure() / static_cast<double>(size()); }

  std::size_t index(int ix, int iy) const noexcept {
    return static_cast<std::size_t>(ix) * ny_ + iy;
  }
  double x(std::size_t i) const noexcept {
    return period_x_ * static_cast<double>(i / ny_) / nx_;
  }
  double y(std::size_t i) const noexcept {
    return dim_ == 1 ? 0.0 : period_y_ * static_cast<double>(i % ny_) / ny_;
  }

  Mode mode(std::size_t i) const noexcept {
    const int ix = static_cast<int>(i / ny_);
    const int iy = static_cast<int>(i % ny_);
    return {ix < nx_ / 2 ? ix : ix - nx_, ny_ == 1 ? 0 : (iy < ny_ / 2 ? iy : iy - ny_)};
  }

  /// Flat slot of mode (m, n); nullopt when outside the centered band.
  std::optional<std::size_t> mode_index(Mode md) const noexcept {
    if (md.m < -nx_ / 2 || md.m >= nx_ / 2) return std::nullopt;
    if (ny_ == 1) {
      if (md.n != 0) return std::nullopt;
      return static_cast<std::size_t>(md.m < 0 ? md.m + nx_ : md.m);
    }
    if (md.n < -ny_ / 2 || md.n >= ny_ / 2) return std::nullopt;
    return index(md.m < 0 ? md.m + nx_ : md.m, md.n < 0 ? md.n + ny_ : md.n);
  }

  /// Eigenvalue of -Laplacian for the mode stored at slot i.
  double eigenvalue(std::size_t i) const noexcept { return eigenvalues_[i]; }
  std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }

  /// True for modes on the Nyquist row/column (m = -Nx/2 or n = -Ny/2).
  bool is_nyquist(std::size_t i) const noexcept {
    const Mode md = mode(i);
    return md.m == -nx_ / 2 || (ny_ > 1 && md.n == -ny_ / 2);
  }

  /// B/A as p/q (q <= 1000) when it matches within 1e-9; nullopt otherwise.
  /// 1-D tori report 1/1.
  std::optional<RationalRatio> aspect_ratio() const {
    if (dim_ == 1) return RationalRatio{1, 1};
    return detail::detect_rational(period_y_ / period_x_);
  }

  bool same_geometry(const Torus& other) const noexcept {
    return this == &other || (dim_ == other.dim_ && nx_ == other.nx_ && ny_ == other.ny_ &&
                              period_x_ == other.period_x_ && period_y_ == other.period_y_);
  }

  /// Grid values -> Fourier coefficients (divides by Nx*Ny).
  void forward(std::span<const cplx> grid, std::span<cplx> coeffs) const {
    check_span(grid.size());
    check_span(coeffs.size());
    plans_->execute(true, grid.data(), coeffs.data(), size());
    const double scale = 1.0 / static_cast<double>(size());
    for (auto& c : coeffs) c *= scale;
  }

  /// Fourier coefficients -> grid values.
  void backward(std::span<const cplx> coeffs, std::span<cplx> grid) const {
    check_span(grid.size());
    check_span(coeffs.size());
    plans_->execute(false, coeffs.data(), grid.data(), size());
  }

  std::string describe() const {
    std::string s = "T" + std::to_string(dim_) + "(A=" + std::to_string(period_x_);
    if (dim_ == 2) s += ", B=" + std::to_string(period_y_);
    s += ", grid=" + std::to_string(nx_);
    if (dim_ == 2) s += "x" + std::to_string(ny_);
    return s + ")";
  }

 private:
  void check_span(std::size_t n) const {
    if (n != size()) {
      throw DomainError("buffer of length " + std::to_string(n) + " does not match grid size " +
                        std::to_string(size()));
    }
  }

  int dim_;
  double period_x_;
  double period_y_;
  int nx_;
  int ny_;
  std::vector<double> eigenvalues_;
  std::unique_ptr<detail::FftPlans> plans_;
};

using TorusPtr = std::shared_ptr<const Torus>;

enum class FieldRole { state, weight };

namespace detail {

template <class Derived>
class FieldBase {
 public:
  FieldBase(TorusPtr torus, std::vector<cplx> data) : torus_(std::move(torus)), data_(std::move(data)) {
    if (!torus_) throw DomainError("field requires a geometry");
    if (data_.size() != torus_->size()) {
      throw DomainError("field has " + std::to_string(data_.size()) +
                        " entries but the grid holds " + std::to_string(torus_->size()));
    }
  }
  explicit FieldBase(TorusPtr torus) : FieldBase(torus, std::vector<cplx>(torus ? torus->size() : 0)) {}

  const Torus& torus() const noexcept { return *torus_; }
  const TorusPtr& torus_ptr() const noexcept { return torus_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::span<const cplx> data() const noexcept { return data_; }
  std::span<cplx> data() noexcept { return data_; }
  const cplx& operator[](std::size_t i) const noexcept { return data_[i]; }
  cplx& operator[](std::size_t i) noexcept { return data_[i]; }

  Derived& operator+=(const Derived& other) {
    require_same(other);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return self();
  }
  Derived& operator-=(const Derived& other) {
    require_same(other);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return self();
  }
  Derived& operator*=(cplx s) noexcept {
    for (auto& v : data_) v *= s;
    return self();
  }
  friend Derived operator+(Derived a, const Derived& b) { return a += b; }
  friend Derived operator-(Derived a, const Derived& b) { return a -= b; }
  friend Derived operator*(cplx s, Derived a) { return a *= s; }

  void require_same(const FieldBase& other) const {
    if (!torus_->same_geometry(*other.torus_)) {
      throw DomainError("geometry mismatch: " + torus_->describe() + " vs " +
                        other.torus_->describe());
    }
  }

 private:
  Derived& self() noexcept { return static_cast<Derived&>(*this); }

  TorusPtr torus_;
  std::vector<cplx> data_;
};

}  // namespace detail

/// Complex field sampled on the grid.
class SpatialField : public detail::FieldBase<SpatialField> {
 public:
  SpatialField(TorusPtr torus, std::vector<cplx> values, FieldRole role = FieldRole::state)
      : FieldBase(std::move(torus), std::move(values)), role_(role) {}
  explicit SpatialField(TorusPtr torus, FieldRole role = FieldRole::state)
      : FieldBase(std::move(torus)), role_(role) {}

  static SpatialField constant(TorusPtr torus, cplx value, FieldRole role = FieldRole::state) {
    const std::size_t n = torus->size();
    return SpatialField(std::move(torus), std::vector<cplx>(n, value), role);
  }

  /// Real weight from pointwise values.
  static SpatialField weight(TorusPtr torus, std::span<const double> values) {
    std::vector<cplx> data(values.begin(), values.end());
    return SpatialField(std::move(torus), std::move(data), FieldRole::weight);
  }

  FieldRole role() const noexcept { return role_; }
  std::span<const cplx> values() const noexcept { return data(); }
  std::span<cplx> values() noexcept { return data(); }

  /// L2 norm with the cell-area measure.
  double norm() const noexcept {
    double s = 0.0;
    for (const auto& v : data()) s += std::norm(v);
    return std::sqrt(s * torus().cell_area());
  }

  /// L^p norm, p >= 1.
  double lp_norm(double p) const noexcept {
    double s = 0.0;
    for (const auto& v : data()) s += std::pow(std::abs(v), p);
    return std::pow(s * torus().cell_area(), 1.0 / p);
  }

  double max_abs() const noexcept {
    double m = 0.0;
    for (const auto& v : data()) m = std::max(m, std::abs(v));
    return m;
  }

  bool is_real(double tol = 0.0) const noexcept {
    for (const auto& v : data()) {
      if (std::abs(v.imag()) > tol * std::max(1.0, std::abs(v.real()))) return false;
    }
    return true;
  }

  /// Real parts as a plain vector (for weights).
  std::vector<double> real_values() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = (*this)[i].real();
    return out;
  }

 private:
  FieldRole role_;
};

/// Fourier coefficients in the centered-band layout described above.
class FourierField : public detail::FieldBase<FourierField> {
 public:
  using FieldBase::FieldBase;

  static FourierField single_mode(TorusPtr torus, Mode md, cplx amplitude = 1.0) {
    FourierField f(torus);
    const auto slot = torus->mode_index(md);
    if (!slot) throw DomainError("mode outside the grid band");
    f[*slot] = amplitude;
    return f;
  }

  std::span<const cplx> coefficients() const noexcept { return data(); }
  std::span<cplx> coefficients() noexcept { return data(); }

  /// L2 norm of the represented function: sqrt(A*B * sum |c|^2).
  double norm() const noexcept {
    double s = 0.0;
    for (const auto& c : data()) s += std::norm(c);
    return std::sqrt(s * torus().measure());
  }
};

/// <u, v> = integral of u * conj(v).
inline cplx inner(const SpatialField& u, const SpatialField& v) {
  u.require_same(v);
  cplx s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * std::conj(v[i]);
  return s * u.torus().cell_area();
}

inline cplx inner(const FourierField& u, const FourierField& v) {
  u.require_same(v);
  cplx s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * std::conj(v[i]);
  return s * u.torus().measure();
}

inline FourierField to_fourier(const SpatialField& u) {
  FourierField out(u.torus_ptr());
  u.torus().forward(u.values(), out.coefficients());
  return out;
}

inline SpatialField from_fourier(const FourierField& c, FieldRole role = FieldRole::state) {
  SpatialField out(c.torus_ptr(), role);
  c.torus().backward(c.coefficients(), out.values());
  return out;
}

/// Free Schrodinger evolution exp(i t Laplacian): c_k -> exp(-i t lambda_k) c_k.
inline FourierField propagate(FourierField u, double t) {
  const auto lambda = u.torus().eigenvalues();
  auto c = u.coefficients();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] != cplx{}) c[i] *= std::polar(1.0, -t * lambda[i]);
  }
  return u;
}

inline SpatialField propagate(const SpatialField& u, double t) {
  return from_fourier(propagate(to_fourier(u), t), u.role());
}

/// Pointwise product w*u.
inline SpatialField multiply(const SpatialField& w, const SpatialField& u) {
  w.require_same(u);
  SpatialField out(u.torus_ptr(), u.role());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = w[i] * u[i];
  return out;
}

/// Throws unless `w` is real-valued (tolerance relative to entry size).
inline void require_real_weight(const SpatialField& w, const char* what) {
  if (!w.is_real(1e-12)) {
    throw DomainError(std::string(what) + " must be real-valued");
  }
}

/// Set of modes with lambda <= lambda_max, Nyquist row/column excluded.
/// Indices are ascending flat slots.
class ModeSubspace {
 public:
  ModeSubspace(TorusPtr torus, double lambda_max) : torus_(std::move(torus)), lambda_max_(lambda_max) {
    if (!(lambda_max >= 0.0)) throw DomainError("lambda_max must be nonnegative");
    for (std::size_t i = 0; i < torus_->size(); ++i) {
      if (!torus_->is_nyquist(i) && torus_->eigenvalue(i) <= lambda_max_) indices_.push_back(i);
    }
    if (indices_.empty()) throw DomainError("empty mode subspace");
  }

  const TorusPtr& torus_ptr() const noexcept { return torus_; }
  const Torus& torus() const noexcept { return *torus_; }
  double lambda_max() const noexcept { return lambda_max_; }
  std::size_t dim() const noexcept { return indices_.size(); }
  std::span<const std::size_t> indices() const noexcept { return indices_; }
  /// Largest eigenvalue actually present in the subspace.
  double top_eigenvalue() const noexcept {
    double top = 0.0;
    for (auto i : indices_) top = std::max(top, torus_->eigenvalue(i));
    return top;
  }

  std::vector<cplx> gather(const FourierField& u) const {
    std::vector<cplx> out(indices_.size());
    for (std::size_t k = 0; k < indices_.size(); ++k) out[k] = u[indices_[k]];
    return out;
  }

  FourierField scatter(std::span<const cplx> compact) const {
    if (compact.size() != indices_.size()) throw DomainError("compact vector has wrong length");
    FourierField out(torus_);
    for (std::size_t k = 0; k < indices_.size(); ++k) out[indices_[k]] = compact[k];
    return out;
  }

  /// Zero every coefficient outside the subspace.
  FourierField project(const FourierField& u) const { return scatter(gather(u)); }

  /// Largest coefficient magnitude outside the subspace.
  double leakage(const FourierField& u) const {
    double out = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (k < indices_.size() && indices_[k] == i) {
        ++k;
        continue;
      }
      out = std::max(out, std::abs(u[i]));
    }
    return out;
  }

  /// Throws when u has mass outside the subspace beyond rounding.
  void require_inside(const FourierField& u, const char* what) const {
    double inside = 0.0;
    for (auto i : indices_) inside = std::max(inside, std::abs(u[i]));
    if (leakage(u) > 1e-13 * std::max(inside, 1e-300)) {
      throw DomainError(std::string(what) + " has Fourier support outside the truncated subspace");
    }
  }

 private:
  TorusPtr torus_;
  double lambda_max_;
  std::vector<std::size_t> indices_;
};

/// Complex Gaussian coefficients on the modes with lambda <= lambda_max
/// (Nyquist excluded), scaled to unit L2 norm.
template <class Rng>
FourierField random_band_limited(const TorusPtr& torus, double lambda_max, Rng& rng) {
  const ModeSubspace sub(torus, lambda_max);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<cplx> c(sub.dim());
  for (auto& v : c) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    v = {re, im};
  }
  FourierField f = sub.scatter(c);
  f *= 1.0 / f.norm();
  return f;
}

}  // namespace toruslab
