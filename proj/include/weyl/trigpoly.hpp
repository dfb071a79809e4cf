#pragma once

#include <functional>
#include <map>
#include <vector>

#include "weyl/common.hpp"
#include "weyl/linalg.hpp"

namespace weyl {

// Matrix-valued trigonometric polynomial on the 3-torus, stored as Fourier
// coefficients: F(x) = sum_k coeff(k) exp(i <2 pi k / period, x>).
// Scalars are represented as 1x1 matrices.  Products are exact convolutions,
// derivatives act in coefficient space, so fields built from these stay free
// of discretization error.
class TrigPoly {
 public:
  TrigPoly() = default;
  TrigPoly(int rows, int cols, Torus3 torus = {}) : rows_(rows), cols_(cols), torus_(torus) {}

  static TrigPoly constant(const Mat& value, Torus3 torus = {}) {
    TrigPoly f(value.rows(), value.cols(), torus);
    f.add(Key3{0, 0, 0}, value);
    return f;
  }
  static TrigPoly scalar_constant(cplx value, Torus3 torus = {}) {
    Mat m(1, 1);
    m(0, 0) = value;
    return constant(m, torus);
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const Torus3& torus() const { return torus_; }
  const std::map<Key3, Mat>& coeffs() const { return c_; }
  bool empty_coeffs() const { return c_.empty(); }

  void add(const Key3& k, const Mat& value) {
    if (value.rows() != rows_ || value.cols() != cols_) throw DimensionMismatch("trig poly coefficient shape");
    auto it = c_.find(k);
    if (it == c_.end()) c_.emplace(k, value);
    else it->second += value;
  }

  Mat coeff(const Key3& k) const {
    auto it = c_.find(k);
    if (it != c_.end()) return it->second;
    return Mat(rows_, cols_);
  }

  Mat eval(const VecN& x) const {
    Mat out(rows_, cols_);
    for (const auto& [k, m] : c_) {
      double phase = 0;
      for (int a = 0; a < 3; ++a) phase += torus_.frequency(a, k[static_cast<std::size_t>(a)]) * x[a];
      const cplx w = std::exp(iu * phase);
      for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) out(i, j) += w * m(i, j);
    }
    return out;
  }

  cplx eval_scalar(const VecN& x) const { return eval(x)(0, 0); }

  TrigPoly derivative(int axis) const {
    TrigPoly out(rows_, cols_, torus_);
    for (const auto& [k, m] : c_) {
      const double freq = torus_.frequency(axis, k[static_cast<std::size_t>(axis)]);
      if (freq == 0) continue;
      out.c_.emplace(k, (iu * freq) * m);
    }
    return out;
  }

  TrigPoly& operator+=(const TrigPoly& o) {
    check_compatible(o);
    for (const auto& [k, m] : o.c_) add(k, m);
    return *this;
  }
  TrigPoly& operator-=(const TrigPoly& o) {
    check_compatible(o);
    for (const auto& [k, m] : o.c_) add(k, cplx{-1, 0} * m);
    return *this;
  }
  TrigPoly& operator*=(cplx s) {
    for (auto& [k, m] : c_) m *= s;
    return *this;
  }
  friend TrigPoly operator+(TrigPoly a, const TrigPoly& b) { return a += b; }
  friend TrigPoly operator-(TrigPoly a, const TrigPoly& b) { return a -= b; }
  friend TrigPoly operator*(cplx s, TrigPoly a) { return a *= s; }

  // Pointwise product, computed as a convolution of coefficients; a 1x1
  // factor broadcasts as a scalar field.
  friend TrigPoly operator*(const TrigPoly& a, const TrigPoly& b) {
    if (!(a.torus_ == b.torus_)) throw DimensionMismatch("trig poly period mismatch");
    const bool a_scalar = a.rows_ == 1 && a.cols_ == 1 && b.rows_ != 1;
    const bool b_scalar = b.rows_ == 1 && b.cols_ == 1 && a.cols_ != 1;
    if (!a_scalar && !b_scalar && a.cols_ != b.rows_) throw DimensionMismatch("trig poly product shape");
    const int out_rows = a_scalar ? b.rows_ : a.rows_;
    const int out_cols = b_scalar ? a.cols_ : b.cols_;
    TrigPoly out(out_rows, out_cols, a.torus_);
    for (const auto& [ka, ma] : a.c_)
      for (const auto& [kb, mb] : b.c_) {
        if (a_scalar) out.add(ka + kb, ma(0, 0) * mb);
        else if (b_scalar) out.add(ka + kb, mb(0, 0) * ma);
        else out.add(ka + kb, ma * mb);
      }
    return out;
  }

  // F(x) -> F(x)^* as a field; for a Hermitian-valued field this is the identity.
  TrigPoly adjoint_field() const {
    TrigPoly out(cols_, rows_, torus_);
    for (const auto& [k, m] : c_) out.add(-k, m.adjoint());
    return out;
  }

  // Entrywise real/imaginary part of the field (valid for any shape).
  TrigPoly real_part() const {
    TrigPoly conj = conj_field();
    TrigPoly out = *this;
    out += conj;
    out *= 0.5;
    return out;
  }
  TrigPoly imag_part() const {
    TrigPoly conj = conj_field();
    TrigPoly out = *this;
    out -= conj;
    out *= cplx{0, -0.5};
    return out;
  }

  // conj(F(x)) entrywise as a field.
  TrigPoly conj_field() const {
    TrigPoly out(rows_, cols_, torus_);
    for (const auto& [k, m] : c_) {
      Mat cm(rows_, cols_);
      for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) cm(i, j) = std::conj(m(i, j));
      out.add(-k, cm);
    }
    return out;
  }

  TrigPoly entry(int i, int j) const {
    TrigPoly out(1, 1, torus_);
    for (const auto& [k, m] : c_) {
      if (m(i, j) == cplx{}) continue;
      Mat e(1, 1);
      e(0, 0) = m(i, j);
      out.add(k, e);
    }
    return out;
  }

  TrigPoly transpose_field() const {
    TrigPoly out(cols_, rows_, torus_);
    for (const auto& [k, m] : c_) {
      Mat t(cols_, rows_);
      for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) t(j, i) = m(i, j);
      out.add(k, t);
    }
    return out;
  }

  TrigPoly trace_field() const {
    TrigPoly out(1, 1, torus_);
    for (const auto& [k, m] : c_) {
      Mat t(1, 1);
      t(0, 0) = m.trace();
      out.add(k, t);
    }
    return out;
  }

  void prune(double tol = 1e-15) {
    for (auto it = c_.begin(); it != c_.end();) {
      if (it->second.max_abs() <= tol) it = c_.erase(it);
      else ++it;
    }
  }

  int max_harmonic() const {
    int h = 0;
    for (const auto& [k, m] : c_)
      for (int a = 0; a < 3; ++a) h = std::max(h, std::abs(k[static_cast<std::size_t>(a)]));
    return h;
  }

  double coeff_abs_sum() const {
    double s = 0;
    for (const auto& [k, m] : c_) s += m.max_abs();
    return s;
  }

  double max_coeff_abs_offset() const {  // largest coefficient away from wavevector 0
    double s = 0;
    for (const auto& [k, m] : c_)
      if (k != Key3{0, 0, 0}) s = std::max(s, m.max_abs());
    return s;
  }

  // Largest |coeff(k) - coeff(-k)^*|; zero iff the field is Hermitian-valued.
  double hermitian_field_defect() const {
    double defect = 0;
    for (const auto& [k, m] : c_) defect = std::max(defect, (m - coeff(-k).adjoint()).max_abs());
    return defect;
  }

  // Axes along which any coefficient carries a nonzero harmonic.
  std::array<bool, 3> coupled_axes() const {
    std::array<bool, 3> used{false, false, false};
    for (const auto& [k, m] : c_)
      for (int a = 0; a < 3; ++a)
        if (k[static_cast<std::size_t>(a)] != 0) used[static_cast<std::size_t>(a)] = true;
    return used;
  }

  // Least-squares-free exact fit from samples on a uniform grid, valid when
  // the field is band-limited with max harmonic < grid/2.  Used for the few
  // quantities that are not polynomial (orthonormalized frames, inverse
  // metrics); callers check the reported aliasing residual.  The discrete
  // transform is applied one axis at a time.
  static TrigPoly fit_from_grid(const std::function<Mat(const VecN&)>& f, int rows, int cols, int grid,
                                int keep_harmonics, Torus3 torus = {}) {
    const int n = grid;
    const int h = keep_harmonics;
    const int hs = 2 * h + 1;
    const auto zero = Mat(rows, cols);

    std::vector<Mat> data(static_cast<std::size_t>(n) * n * n, zero);
    for (int i0 = 0; i0 < n; ++i0)
      for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2) {
          VecN x{torus.periods[0] * i0 / n, torus.periods[1] * i1 / n, torus.periods[2] * i2 / n};
          data[(static_cast<std::size_t>(i0) * n + i1) * n + i2] = f(x);
        }

    std::vector<cplx> twiddle(static_cast<std::size_t>(hs) * n);
    for (int k = -h; k <= h; ++k)
      for (int i = 0; i < n; ++i)
        twiddle[static_cast<std::size_t>(k + h) * n + i] = std::exp(iu * (-2 * pi * k * i / static_cast<double>(n))) / static_cast<double>(n);

    // axis 2
    std::vector<Mat> stage2(static_cast<std::size_t>(n) * n * hs, zero);
    for (int i0 = 0; i0 < n; ++i0)
      for (int i1 = 0; i1 < n; ++i1)
        for (int k2 = 0; k2 < hs; ++k2) {
          Mat acc(rows, cols);
          for (int i2 = 0; i2 < n; ++i2)
            acc += twiddle[static_cast<std::size_t>(k2) * n + i2] * data[(static_cast<std::size_t>(i0) * n + i1) * n + i2];
          stage2[(static_cast<std::size_t>(i0) * n + i1) * hs + k2] = acc;
        }
    // axis 1
    std::vector<Mat> stage1(static_cast<std::size_t>(n) * hs * hs, zero);
    for (int i0 = 0; i0 < n; ++i0)
      for (int k1 = 0; k1 < hs; ++k1)
        for (int k2 = 0; k2 < hs; ++k2) {
          Mat acc(rows, cols);
          for (int i1 = 0; i1 < n; ++i1)
            acc += twiddle[static_cast<std::size_t>(k1) * n + i1] * stage2[(static_cast<std::size_t>(i0) * n + i1) * hs + k2];
          stage1[(static_cast<std::size_t>(i0) * hs + k1) * hs + k2] = acc;
        }
    // axis 0 and collection
    TrigPoly out(rows, cols, torus);
    for (int k0 = 0; k0 < hs; ++k0)
      for (int k1 = 0; k1 < hs; ++k1)
        for (int k2 = 0; k2 < hs; ++k2) {
          Mat acc(rows, cols);
          for (int i0 = 0; i0 < n; ++i0)
            acc += twiddle[static_cast<std::size_t>(k0) * n + i0] * stage1[(static_cast<std::size_t>(i0) * hs + k1) * hs + k2];
          if (acc.max_abs() > 1e-14) out.add(Key3{k0 - h, k1 - h, k2 - h}, acc);
        }
    return out;
  }

  // Max pointwise deviation from f on a shifted grid (aliasing check).
  double fit_residual(const std::function<Mat(const VecN&)>& f, int grid) const {
    double res = 0;
    for (int i0 = 0; i0 < grid; ++i0)
      for (int i1 = 0; i1 < grid; ++i1)
        for (int i2 = 0; i2 < grid; ++i2) {
          VecN x{torus_.periods[0] * (i0 + 0.37) / grid, torus_.periods[1] * (i1 + 0.37) / grid,
                 torus_.periods[2] * (i2 + 0.37) / grid};
          res = std::max(res, (eval(x) - f(x)).max_abs());
        }
    return res;
  }

 private:
  void check_compatible(const TrigPoly& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("trig poly shape mismatch");
    if (!(torus_ == o.torus_)) throw DimensionMismatch("trig poly period mismatch");
  }

  int rows_ = 0, cols_ = 0;
  Torus3 torus_;
  std::map<Key3, Mat> c_;
};

// Spinor field on the torus: column of m trig-poly scalar components,
// stored jointly as an (m x 1)-shaped TrigPoly.
inline TrigPoly apply_matrix_field(const TrigPoly& coeff_field, const TrigPoly& spinor) {
  return coeff_field * spinor;
}

}  // namespace weyl
