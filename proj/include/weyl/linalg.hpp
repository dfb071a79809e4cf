#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "weyl/common.hpp"
#include "weyl/errors.hpp"

namespace weyl {

using CVec = std::vector<cplx>;

inline double norm(const CVec& v) {
  double s = 0;
  for (const cplx& z : v) s += std::norm(z);
  return std::sqrt(s);
}

inline cplx inner(const CVec& a, const CVec& b) {
  cplx s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline CVec operator*(cplx s, CVec v) {
  for (auto& z : v) z *= s;
  return v;
}
inline CVec operator*(double s, CVec v) {
  for (auto& z : v) z *= s;
  return v;
}
inline CVec& operator+=(CVec& a, const CVec& b) {
  if (a.empty()) a.assign(b.size(), cplx{});
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}
inline CVec operator+(CVec a, const CVec& b) { return a += b; }
inline CVec operator-(CVec a, const CVec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

// Dense complex matrix, row-major.
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols) {}

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return a_.empty(); }

  cplx& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
  const cplx& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

  Mat& operator+=(const Mat& o) {
    check_same(o);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
  }
  Mat& operator-=(const Mat& o) {
    check_same(o);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
  }
  Mat& operator*=(cplx s) {
    for (auto& z : a_) z *= s;
    return *this;
  }

  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
  friend Mat operator*(cplx s, Mat a) { return a *= s; }
  friend Mat operator*(Mat a, cplx s) { return a *= s; }

  friend Mat operator*(const Mat& a, const Mat& b) {
    if (a.cols_ != b.rows_) throw DimensionMismatch("matrix product shape mismatch");
    Mat c(a.rows_, b.cols_);
    for (int i = 0; i < a.rows_; ++i)
      for (int k = 0; k < a.cols_; ++k) {
        const cplx aik = a(i, k);
        if (aik == cplx{}) continue;
        for (int j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  CVec operator*(const CVec& v) const {
    if (static_cast<int>(v.size()) != cols_) throw DimensionMismatch("matrix-vector shape mismatch");
    CVec out(static_cast<std::size_t>(rows_));
    for (int i = 0; i < rows_; ++i) {
      cplx s = 0;
      for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * v[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(i)] = s;
    }
    return out;
  }

  Mat adjoint() const {
    Mat m(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) m(j, i) = std::conj((*this)(i, j));
    return m;
  }

  cplx trace() const {
    cplx s = 0;
    for (int i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
    return s;
  }

  double max_abs() const {
    double m = 0;
    for (const cplx& z : a_) m = std::max(m, std::abs(z));
    return m;
  }

  double frobenius() const {
    double s = 0;
    for (const cplx& z : a_) s += std::norm(z);
    return std::sqrt(s);
  }

  // Largest |A - A*| entry; zero for an exactly Hermitian matrix.
  double hermitian_defect() const {
    double m = 0;
    for (int i = 0; i < rows_; ++i)
      for (int j = i; j < cols_; ++j) m = std::max(m, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
    return m;
  }

  CVec col(int j) const {
    CVec v(static_cast<std::size_t>(rows_));
    for (int i = 0; i < rows_; ++i) v[static_cast<std::size_t>(i)] = (*this)(i, j);
    return v;
  }

 private:
  void check_same(const Mat& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("matrix shape mismatch");
  }

  int rows_ = 0, cols_ = 0;
  std::vector<cplx> a_;
};

inline Mat outer(const CVec& a, const CVec& b) {
  Mat m(static_cast<int>(a.size()), static_cast<int>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m(static_cast<int>(i), static_cast<int>(j)) = a[i] * std::conj(b[j]);
  return m;
}

inline Mat commutator(const Mat& a, const Mat& b) { return a * b - b * a; }

// Pauli basis s^1, s^2, s^3.
inline Mat pauli(int k) {
  Mat s(2, 2);
  switch (k) {
    case 1: s(0, 1) = 1.0; s(1, 0) = 1.0; break;
    case 2: s(0, 1) = cplx{0, -1}; s(1, 0) = cplx{0, 1}; break;
    case 3: s(0, 0) = 1.0; s(1, 1) = -1.0; break;
    default: throw DimensionMismatch("pauli index out of range");
  }
  return s;
}

struct HermitianEigen {
  std::vector<double> values;  // ascending
  Mat vectors;                 // orthonormal columns, vectors.col(k) <-> values[k]
};

namespace detail {

// Householder reduction of a Hermitian matrix to real symmetric tridiagonal
// form, T = Q^* A Q, accumulating the unitary Q.
inline void tridiagonalize(Mat a, std::vector<double>& d, std::vector<double>& e, Mat& q) {
  const int n = a.rows();
  d.assign(static_cast<std::size_t>(n), 0.0);
  e.assign(static_cast<std::size_t>(n > 0 ? n - 1 : 0), 0.0);
  q = Mat::identity(n);
  if (n == 0) return;

  std::vector<cplx> v(static_cast<std::size_t>(n)), p(static_cast<std::size_t>(n));
  std::vector<cplx> sub(static_cast<std::size_t>(n > 0 ? n - 1 : 0));

  for (int k = 0; k + 2 < n; ++k) {
    const int len = n - k - 1;  // column below the diagonal
    double xnorm2 = 0;
    for (int i = 0; i < len; ++i) xnorm2 += std::norm(a(k + 1 + i, k));
    const double xnorm = std::sqrt(xnorm2);
    if (xnorm == 0) {
      sub[static_cast<std::size_t>(k)] = 0;
      continue;
    }
    const cplx x0 = a(k + 1, k);
    const double ax0 = std::abs(x0);
    const cplx phase = ax0 > 0 ? x0 / ax0 : cplx{1, 0};
    const cplx alpha = -phase * xnorm;

    double vnorm2 = 0;
    for (int i = 0; i < len; ++i) {
      v[static_cast<std::size_t>(i)] = a(k + 1 + i, k);
      if (i == 0) v[0] -= alpha;
      vnorm2 += std::norm(v[static_cast<std::size_t>(i)]);
    }
    sub[static_cast<std::size_t>(k)] = alpha;
    if (vnorm2 == 0) continue;
    const double tau = 2.0 / vnorm2;

    // Rank-2 update of the trailing block: A <- A - v w^* - w v^*
    for (int i = 0; i < len; ++i) {
      cplx s = 0;
      for (int j = 0; j < len; ++j) s += a(k + 1 + i, k + 1 + j) * v[static_cast<std::size_t>(j)];
      p[static_cast<std::size_t>(i)] = tau * s;
    }
    cplx vp = 0;
    for (int i = 0; i < len; ++i) vp += std::conj(v[static_cast<std::size_t>(i)]) * p[static_cast<std::size_t>(i)];
    const cplx kappa = 0.5 * tau * vp;
    for (int i = 0; i < len; ++i) p[static_cast<std::size_t>(i)] -= kappa * v[static_cast<std::size_t>(i)];
    for (int i = 0; i < len; ++i)
      for (int j = 0; j < len; ++j)
        a(k + 1 + i, k + 1 + j) -= v[static_cast<std::size_t>(i)] * std::conj(p[static_cast<std::size_t>(j)]) +
                                   p[static_cast<std::size_t>(i)] * std::conj(v[static_cast<std::size_t>(j)]);

    // Accumulate Q <- Q (I - tau v v^*) acting on columns k+1..n-1.
    for (int r = 0; r < n; ++r) {
      cplx s = 0;
      for (int j = 0; j < len; ++j) s += q(r, k + 1 + j) * v[static_cast<std::size_t>(j)];
      s *= tau;
      for (int j = 0; j < len; ++j) q(r, k + 1 + j) -= s * std::conj(v[static_cast<std::size_t>(j)]);
    }
  }
  if (n >= 2) sub[static_cast<std::size_t>(n - 2)] = a(n - 1, n - 2);

  // Rephase so the subdiagonal becomes real nonnegative: Q <- Q D.
  cplx theta{1, 0};
  for (int k = 0; k + 1 < n; ++k) {
    const cplx t = sub[static_cast<std::size_t>(k)];
    const double at = std::abs(t);
    const cplx step = at > 0 ? t / at : cplx{1, 0};
    theta *= step;  // phase of column k+1
    e[static_cast<std::size_t>(k)] = at;
    for (int r = 0; r < n; ++r) q(r, k + 1) *= theta;
  }
  for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = a(i, i).real();
}

// Implicit-shift QL iteration on a real symmetric tridiagonal matrix,
// rotating the columns of z alongside.
inline void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e, Mat& z) {
  const int n = static_cast<int>(d.size());
  if (n <= 1) return;
  std::vector<double> ee(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i + 1 < n; ++i) ee[static_cast<std::size_t>(i)] = e[static_cast<std::size_t>(i)];

  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::fabs(d[static_cast<std::size_t>(m)]) + std::fabs(d[static_cast<std::size_t>(m + 1)]);
        if (std::fabs(ee[static_cast<std::size_t>(m)]) <= 1e-300 + 2.3e-16 * dd) break;
      }
      if (m != l) {
        if (iter++ == 60) throw ConvergenceFailure("tridiagonal QL did not converge");
        double g = (d[static_cast<std::size_t>(l + 1)] - d[static_cast<std::size_t>(l)]) /
                   (2.0 * ee[static_cast<std::size_t>(l)]);
        double r = std::hypot(g, 1.0);
        g = d[static_cast<std::size_t>(m)] - d[static_cast<std::size_t>(l)] +
            ee[static_cast<std::size_t>(l)] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        bool underflow = false;
        for (int i = m - 1; i >= l; --i) {
          double f = s * ee[static_cast<std::size_t>(i)];
          const double b = c * ee[static_cast<std::size_t>(i)];
          r = std::hypot(f, g);
          ee[static_cast<std::size_t>(i + 1)] = r;
          if (r == 0.0) {
            d[static_cast<std::size_t>(i + 1)] -= p;
            ee[static_cast<std::size_t>(m)] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[static_cast<std::size_t>(i + 1)] - p;
          r = (d[static_cast<std::size_t>(i)] - g) * s + 2.0 * c * b;
          p = s * r;
          d[static_cast<std::size_t>(i + 1)] = g + p;
          g = c * r - b;
          for (int k = 0; k < z.rows(); ++k) {
            const cplx zf = z(k, i + 1);
            z(k, i + 1) = s * z(k, i) + c * zf;
            z(k, i) = c * z(k, i) - s * zf;
          }
        }
        if (underflow) continue;
        d[static_cast<std::size_t>(l)] -= p;
        ee[static_cast<std::size_t>(l)] = g;
        ee[static_cast<std::size_t>(m)] = 0.0;
      }
    } while (m != l);
  }
}

}  // namespace detail

// Full eigen-decomposition of a Hermitian matrix: unitary tridiagonalization
// followed by implicit-shift QL iteration.  Eigenvalues ascending.
inline HermitianEigen hermitian_eigensolve(const Mat& a, double hermitian_tol = 1e-12) {
  if (a.rows() != a.cols()) throw DimensionMismatch("eigensolve requires a square matrix");
  const double scale = std::max(1.0, a.max_abs());
  if (a.hermitian_defect() > hermitian_tol * scale)
    throw NotHermitian("hermitian_eigensolve: matrix is not Hermitian");

  std::vector<double> d, e;
  Mat q;
  detail::tridiagonalize(a, d, e, q);
  detail::tridiagonal_ql(d, e, q);

  const int n = a.rows();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return d[static_cast<std::size_t>(i)] < d[static_cast<std::size_t>(j)]; });

  HermitianEigen out;
  out.values.resize(static_cast<std::size_t>(n));
  out.vectors = Mat(n, n);
  for (int k = 0; k < n; ++k) {
    out.values[static_cast<std::size_t>(k)] = d[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
    for (int r = 0; r < n; ++r) out.vectors(r, k) = q(r, order[static_cast<std::size_t>(k)]);
  }
  return out;
}

// Closed-form eigenvalues of the Hermitian 2x2 matrix [[a, conj(b)], [b, d]].
inline std::array<double, 2> eig2_hermitian(double a, cplx b, double d) {
  const double mid = 0.5 * (a + d);
  const double rad = std::hypot(0.5 * (a - d), std::abs(b));
  return {mid - rad, mid + rad};
}

// Unit eigenvector of [[a, conj(b)], [b, d]] for eigenvalue lam (must be
// simple); gauge fixed by making the largest-modulus component real positive.
inline CVec eig2_vector(double a, cplx b, double d, double lam) {
  CVec v(2);
  // two algebraically equivalent branches; pick the better-conditioned one
  const double r1 = std::hypot(std::abs(b), lam - a);
  const double r2 = std::hypot(lam - d, std::abs(b));
  if (r1 >= r2) {
    v[0] = std::conj(b);
    v[1] = lam - a;
  } else {
    v[0] = lam - d;
    v[1] = b;
  }
  const double nn = norm(v);
  if (nn == 0) {  // diagonal matrix
    if (std::fabs(lam - a) <= std::fabs(lam - d)) v = {1.0, 0.0};
    else v = {0.0, 1.0};
    return v;
  }
  for (auto& z : v) z /= nn;
  const int argmax = std::abs(v[0]) >= std::abs(v[1]) ? 0 : 1;
  const cplx ph = v[static_cast<std::size_t>(argmax)] / std::abs(v[static_cast<std::size_t>(argmax)]);
  for (auto& z : v) z /= ph;
  return v;
}

// Solves the 3x3 real linear system M x = rhs by partial-pivot elimination.
inline std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> m, std::array<double, 3> rhs,
                                    double singular_tol = 1e-13) {
  double scale = 0;
  for (auto& row : m)
    for (double v : row) scale = std::max(scale, std::fabs(v));
  if (scale == 0) throw SingularSystem("zero 3x3 system");
  std::array<int, 3> perm{0, 1, 2};
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::fabs(m[static_cast<std::size_t>(perm[static_cast<std::size_t>(r)])][static_cast<std::size_t>(c)]) >
          std::fabs(m[static_cast<std::size_t>(perm[static_cast<std::size_t>(piv)])][static_cast<std::size_t>(c)]))
        piv = r;
    std::swap(perm[static_cast<std::size_t>(c)], perm[static_cast<std::size_t>(piv)]);
    const double diag = m[static_cast<std::size_t>(perm[static_cast<std::size_t>(c)])][static_cast<std::size_t>(c)];
    if (std::fabs(diag) < singular_tol * scale) throw SingularSystem("singular 3x3 system");
    for (int r = c + 1; r < 3; ++r) {
      auto& row = m[static_cast<std::size_t>(perm[static_cast<std::size_t>(r)])];
      const double f = row[static_cast<std::size_t>(c)] / diag;
      row[static_cast<std::size_t>(c)] = 0;
      for (int j = c + 1; j < 3; ++j)
        row[static_cast<std::size_t>(j)] -=
            f * m[static_cast<std::size_t>(perm[static_cast<std::size_t>(c)])][static_cast<std::size_t>(j)];
      rhs[static_cast<std::size_t>(perm[static_cast<std::size_t>(r)])] -=
          f * rhs[static_cast<std::size_t>(perm[static_cast<std::size_t>(c)])];
    }
  }
  std::array<double, 3> x{};
  for (int c = 2; c >= 0; --c) {
    double s = rhs[static_cast<std::size_t>(perm[static_cast<std::size_t>(c)])];
    for (int j = c + 1; j < 3; ++j)
      s -= m[static_cast<std::size_t>(perm[static_cast<std::size_t>(c)])][static_cast<std::size_t>(j)] *
           x[static_cast<std::size_t>(j)];
    x[static_cast<std::size_t>(c)] =
        s / m[static_cast<std::size_t>(perm[static_cast<std::size_t>(c)])][static_cast<std::size_t>(c)];
  }
  return x;
}

inline double det3(const std::array<std::array<double, 3>, 3>& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

}  // namespace weyl
