#pragma once

// Dense complex linear algebra for desk-scale problems (M up to a few hundred).
//
// Everything is value-semantic: functions take matrices by const reference and
// return new ones. Storage is row-major; vectorization is column-stacking.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bdris/error.hpp"

namespace bdris::linalg {

using cplx = std::complex<double>;

inline constexpr double kEps = std::numeric_limits<double>::epsilon();
inline constexpr cplx kJ{0.0, 1.0};

namespace detail {

inline bool finite(double x) { return std::isfinite(x); }
inline bool finite(const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

inline double abs2(double x) { return x * x; }
inline double abs2(const cplx& z) { return std::norm(z); }

inline double conj_if(double x) { return x; }
inline cplx conj_if(const cplx& z) { return std::conj(z); }

}  // namespace detail

/// Dense rows x cols matrix, row-major.
template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T{}) {}

  /// Takes row-major entries; rejects NaN/Inf.
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("matrix data size " + std::to_string(data_.size()) + " does not match " +
                           std::to_string(rows_) + "x" + std::to_string(cols_));
    }
    if (!all_finite()) throw InvalidInput("matrix entries must be finite");
  }

  Matrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      if (row.size() != cols_) throw DimensionError("ragged matrix initializer");
      data_.insert(data_.end(), row.begin(), row.end());
    }
    if (!all_finite()) throw InvalidInput("matrix entries must be finite");
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }

  static Matrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = T{d[i]};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](const T& x) { return detail::finite(x); });
  }

  /// Columns [first, first + count).
  Matrix columns(std::size_t first, std::size_t count) const {
    if (first + count > cols_) throw DimensionError("column range out of bounds");
    Matrix out(rows_, count);
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = 0; j < count; ++j) out(i, j) = (*this)(i, first + j);
    }
    return out;
  }

  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    if (r0 + nr > rows_ || c0 + nc > cols_) throw DimensionError("block out of bounds");
    Matrix out(nr, nc);
    for (std::size_t i = 0; i < nr; ++i) {
      for (std::size_t j = 0; j < nc; ++j) out(i, j) = (*this)(r0 + i, c0 + j);
    }
    return out;
  }

  std::vector<T> column(std::size_t j) const {
    std::vector<T> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
  }

  void set_column(std::size_t j, std::span<const T> v) {
    if (v.size() != rows_) throw DimensionError("column length mismatch");
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
  }

  Matrix& operator+=(const Matrix& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }

  Matrix& operator-=(const Matrix& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }

  Matrix& operator*=(const T& s) {
    for (auto& x : data_) x *= s;
    return *this;
  }

  bool operator==(const Matrix& o) const = default;

 private:
  void check_same(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionError("matrix shapes differ");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using ComplexMatrix = Matrix<cplx>;
using RealMatrix = Matrix<double>;

template <typename T>
Matrix<T> operator+(Matrix<T> a, const Matrix<T>& b) {
  a += b;
  return a;
}

template <typename T>
Matrix<T> operator-(Matrix<T> a, const Matrix<T>& b) {
  a -= b;
  return a;
}

template <typename T>
Matrix<T> operator*(Matrix<T> a, const T& s) {
  a *= s;
  return a;
}

template <typename T>
Matrix<T> operator*(const T& s, Matrix<T> a) {
  a *= s;
  return a;
}

inline ComplexMatrix operator*(ComplexMatrix a, double s) {
  a *= cplx{s};
  return a;
}

inline ComplexMatrix operator*(double s, ComplexMatrix a) {
  a *= cplx{s};
  return a;
}

template <typename T>
Matrix<T> operator*(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("cannot multiply " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " by " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix<T> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T aik = a(i, k);
      if (aik == T{}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

template <typename T>
std::vector<T> operator*(const Matrix<T>& a, std::span<const T> x) {
  if (a.cols() != x.size()) throw DimensionError("matrix-vector size mismatch");
  std::vector<T> y(a.rows(), T{});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    T acc{};
    for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * x[k];
    y[i] = acc;
  }
  return y;
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
  Matrix<T> t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

template <typename T>
Matrix<T> adjoint(const Matrix<T>& a) {
  Matrix<T> t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = detail::conj_if(a(i, j));
  }
  return t;
}

inline ComplexMatrix conj(const ComplexMatrix& a) {
  ComplexMatrix c = a;
  for (auto& z : c.data()) z = std::conj(z);
  return c;
}

inline RealMatrix real_part(const ComplexMatrix& a) {
  RealMatrix r(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.size(); ++k) r.data()[k] = a.data()[k].real();
  return r;
}

inline RealMatrix imag_part(const ComplexMatrix& a) {
  RealMatrix r(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.size(); ++k) r.data()[k] = a.data()[k].imag();
  return r;
}

inline ComplexMatrix to_complex(const RealMatrix& a) {
  ComplexMatrix c(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.size(); ++k) c.data()[k] = a.data()[k];
  return c;
}

template <typename T>
double frobenius_norm(const Matrix<T>& a) {
  double s = 0.0;
  for (const auto& x : a.data()) s += detail::abs2(x);
  return std::sqrt(s);
}

template <typename T>
double vector_norm(std::span<const T> v) {
  double s = 0.0;
  for (const auto& x : v) s += detail::abs2(x);
  return std::sqrt(s);
}

/// [a, b] side by side.
template <typename T>
Matrix<T> hcat(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows()) throw DimensionError("hcat row mismatch");
  Matrix<T> c(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j);
    for (std::size_t j = 0; j < b.cols(); ++j) c(i, a.cols() + j) = b(i, j);
  }
  return c;
}

/// ||X^H X - I||_F.
template <typename T>
double orthonormality_defect(const Matrix<T>& x) {
  return frobenius_norm(adjoint(x) * x - Matrix<T>::identity(x.cols()));
}

/// ||A - A^T||_F.
template <typename T>
double symmetry_defect(const Matrix<T>& a) {
  if (a.rows() != a.cols()) throw DimensionError("symmetry defect needs a square matrix");
  return frobenius_norm(a - transpose(a));
}

// ---------------------------------------------------------------------------
// Vectorization

/// Column-stacking vec(B).
template <typename T>
std::vector<T> vectorize(const Matrix<T>& m) {
  std::vector<T> v;
  v.reserve(m.size());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    for (std::size_t i = 0; i < m.rows(); ++i) v.push_back(m(i, j));
  }
  return v;
}

/// Inverse of vectorize.
template <typename T>
Matrix<T> unvectorize(std::span<const T> v, std::size_t rows, std::size_t cols) {
  if (v.size() != rows * cols) throw DimensionError("unvectorize size mismatch");
  Matrix<T> m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = v[j * rows + i];
  }
  return m;
}

/// (A ⊗ B)[i*p + k, j*q + l] = a_ij * b_kl, so vec(B X C) = (C^T ⊗ B) vec(X).
template <typename T>
Matrix<T> kron(const Matrix<T>& a, const Matrix<T>& b) {
  const std::size_t p = b.rows();
  const std::size_t q = b.cols();
  Matrix<T> k(a.rows() * p, a.cols() * q);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const T aij = a(i, j);
      for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t c = 0; c < q; ++c) k(i * p + r, j * q + c) = aij * b(r, c);
      }
    }
  }
  return k;
}

// ---------------------------------------------------------------------------
// Orthogonalization

namespace detail {

/// Two passes of modified Gram-Schmidt over the columns of q, in order. Columns that
/// collapse to zero are left as zero; the caller decides what to do with them.
inline void reorthonormalize(ComplexMatrix& q) {
  const std::size_t m = q.rows();
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < q.cols(); ++j) {
      for (std::size_t k = 0; k < j; ++k) {
        cplx dot{};
        for (std::size_t i = 0; i < m; ++i) dot += std::conj(q(i, k)) * q(i, j);
        for (std::size_t i = 0; i < m; ++i) q(i, j) -= dot * q(i, k);
      }
      double nrm = 0.0;
      for (std::size_t i = 0; i < m; ++i) nrm += std::norm(q(i, j));
      nrm = std::sqrt(nrm);
      if (nrm > 0.0) {
        for (std::size_t i = 0; i < m; ++i) q(i, j) /= nrm;
      }
    }
  }
}

}  // namespace detail

/// Householder QR of an m x n complex matrix. Q is the full m x m unitary factor;
/// R is m x n upper triangular with a real nonnegative diagonal.
struct QrResult {
  ComplexMatrix q;
  ComplexMatrix r;
};

inline QrResult householder_qr(const ComplexMatrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  ComplexMatrix r = a;
  ComplexMatrix q = ComplexMatrix::identity(m);
  const std::size_t steps = std::min(m == 0 ? 0 : m - 1, n);
  std::vector<cplx> v(m);
  for (std::size_t k = 0; k < std::min(m, n); ++k) {
    double xnorm = 0.0;
    for (std::size_t i = k; i < m; ++i) xnorm += std::norm(r(i, k));
    xnorm = std::sqrt(xnorm);
    if (k < steps && xnorm > 0.0) {
      const cplx x0 = r(k, k);
      const cplx phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : cplx{1.0};
      const cplx alpha = -phase * xnorm;
      for (std::size_t i = k; i < m; ++i) v[i] = r(i, k);
      v[k] -= alpha;
      double vnorm = 0.0;
      for (std::size_t i = k; i < m; ++i) vnorm += std::norm(v[i]);
      vnorm = std::sqrt(vnorm);
      if (vnorm > 0.0) {
        for (std::size_t i = k; i < m; ++i) v[i] /= vnorm;
        // R <- (I - 2vv^H) R
        for (std::size_t j = k; j < n; ++j) {
          cplx s{};
          for (std::size_t i = k; i < m; ++i) s += std::conj(v[i]) * r(i, j);
          s *= 2.0;
          for (std::size_t i = k; i < m; ++i) r(i, j) -= s * v[i];
        }
        // Q <- Q (I - 2vv^H)
        for (std::size_t i = 0; i < m; ++i) {
          cplx s{};
          for (std::size_t l = k; l < m; ++l) s += q(i, l) * v[l];
          s *= 2.0;
          for (std::size_t l = k; l < m; ++l) q(i, l) -= s * std::conj(v[l]);
        }
      }
    }
    // Make the diagonal real and nonnegative.
    const cplx d = r(k, k);
    if (std::abs(d) > 0.0) {
      const cplx ph = d / std::abs(d);
      for (std::size_t j = k; j < n; ++j) r(k, j) *= std::conj(ph);
      for (std::size_t i = 0; i < m; ++i) q(i, k) *= ph;
    }
    for (std::size_t i = k + 1; i < m; ++i) r(i, k) = 0.0;
  }
  return {std::move(q), std::move(r)};
}

/// Orthonormal basis of the orthogonal complement of span(q), q with orthonormal columns.
inline ComplexMatrix orthonormal_complement(const ComplexMatrix& q) {
  const std::size_t m = q.rows();
  const std::size_t s = q.cols();
  if (s > m) throw DimensionError("frame has more columns than rows");
  if (s == 0) return ComplexMatrix::identity(m);
  if (s == m) return ComplexMatrix(m, 0);
  QrResult qr = householder_qr(q);
  return qr.q.columns(s, m - s);
}

// ---------------------------------------------------------------------------
// Singular value decomposition (one-sided Jacobi)

namespace detail {

/// One-sided Jacobi on a tall matrix (rows >= cols). On return the columns of w are
/// mutually orthogonal and w = a_in * v with v unitary.
inline void one_sided_jacobi(ComplexMatrix& w, ComplexMatrix& v) {
  const std::size_t m = w.rows();
  const std::size_t n = w.cols();
  v = ComplexMatrix::identity(n);
  constexpr int kMaxSweeps = 100;
  const double tol = 2.0 * kEps;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0;
        double beta = 0.0;
        cplx gamma{};
        for (std::size_t i = 0; i < m; ++i) {
          alpha += std::norm(w(i, p));
          beta += std::norm(w(i, q));
          gamma += std::conj(w(i, p)) * w(i, q);
        }
        const double g = std::abs(gamma);
        if (g == 0.0 || g <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * g);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        const cplx unphase = std::conj(gamma) / g;
        for (std::size_t i = 0; i < m; ++i) {
          const cplx x = w(i, p);
          const cplx y = w(i, q) * unphase;
          w(i, p) = c * x - s * y;
          w(i, q) = s * x + c * y;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const cplx x = v(i, p);
          const cplx y = v(i, q) * unphase;
          v(i, p) = c * x - s * y;
          v(i, q) = s * x + c * y;
        }
      }
    }
    if (!rotated) return;
  }
  throw NumericalError("Jacobi SVD did not converge");
}

struct FullJacobi {
  ComplexMatrix left;           // m x n, columns unit norm where sigma > 0, else zero
  std::vector<double> sigma;    // n values, descending
  ComplexMatrix right;          // n x n unitary
};

/// Thin SVD of a tall matrix via one-sided Jacobi, sorted descending.
inline FullJacobi jacobi_thin(const ComplexMatrix& a) {
  ComplexMatrix w = a;
  ComplexMatrix v;
  one_sided_jacobi(w, v);
  const std::size_t n = a.cols();
  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += std::norm(w(i, j));
    norms[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });
  FullJacobi out{ComplexMatrix(a.rows(), n), std::vector<double>(n), ComplexMatrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.sigma[k] = norms[j];
    for (std::size_t i = 0; i < a.rows(); ++i) out.left(i, k) = norms[j] > 0.0 ? w(i, j) / norms[j] : cplx{};
    for (std::size_t i = 0; i < n; ++i) out.right(i, k) = v(i, j);
  }
  return out;
}

inline void require_finite(const ComplexMatrix& a, const char* what) {
  if (!a.all_finite()) throw InvalidInput(std::string(what) + ": non-finite entries");
}

}  // namespace detail

/// Compact SVD: a = left * diag(singular_values) * right^H, keeping only values above
/// the rank threshold.
struct CompactSVD {
  ComplexMatrix left;
  std::vector<double> singular_values;
  ComplexMatrix right;

  std::size_t rank() const noexcept { return singular_values.size(); }
};

/// Default relative rank tolerance: max(m, n) * machine epsilon.
inline double default_rank_tol(std::size_t m, std::size_t n) { return static_cast<double>(std::max(m, n)) * kEps; }

/// Singular values below rank_tol * sigma_max are discarded.
inline CompactSVD compact_svd(const ComplexMatrix& a, std::optional<double> rank_tol = std::nullopt) {
  if (a.empty()) throw InvalidInput("compact_svd: empty matrix");
  detail::require_finite(a, "compact_svd");
  const double tol = rank_tol.value_or(default_rank_tol(a.rows(), a.cols()));
  if (tol < 0.0) throw DomainError("compact_svd: rank tolerance must be nonnegative");

  const bool wide = a.rows() < a.cols();
  detail::FullJacobi j = detail::jacobi_thin(wide ? adjoint(a) : a);
  const double smax = j.sigma.empty() ? 0.0 : j.sigma.front();
  std::size_t k = 0;
  while (k < j.sigma.size() && j.sigma[k] > 0.0 && j.sigma[k] > tol * smax) ++k;

  ComplexMatrix u = j.left.columns(0, k);
  ComplexMatrix v = j.right.columns(0, k);
  detail::reorthonormalize(u);
  CompactSVD out;
  out.singular_values.assign(j.sigma.begin(), j.sigma.begin() + static_cast<std::ptrdiff_t>(k));
  if (wide) {
    out.left = std::move(v);
    out.right = std::move(u);
  } else {
    out.left = std::move(u);
    out.right = std::move(v);
  }
  return out;
}

/// All min(m, n) singular values, descending, zeros included.
inline std::vector<double> singular_values(const ComplexMatrix& a) {
  if (a.empty()) return {};
  detail::require_finite(a, "singular_values");
  const bool wide = a.rows() < a.cols();
  return detail::jacobi_thin(wide ? adjoint(a) : a).sigma;
}

/// Number of singular values above rel_tol * sigma_max.
inline std::size_t numerical_rank(const ComplexMatrix& a, std::optional<double> rel_tol = std::nullopt) {
  const auto s = singular_values(a);
  if (s.empty() || s.front() == 0.0) return 0;
  const double tol = rel_tol.value_or(default_rank_tol(a.rows(), a.cols()));
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [&](double x) { return x > tol * s.front(); }));
}

/// sigma_max / sigma_min of a square matrix (infinity when singular).
inline double condition_number(const ComplexMatrix& a) {
  const auto s = singular_values(a);
  if (s.empty()) return 1.0;
  return s.back() > 0.0 ? s.front() / s.back() : std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Principal angles

struct PrincipalAngleDecomposition {
  ComplexMatrix p_basis;         // r x r unitary (P)
  ComplexMatrix r_basis;         // r x r unitary (R)
  std::vector<double> cosines;   // descending, in [0, 1]
  std::vector<double> angles;    // radians, ascending, in [0, pi/2]
};

inline constexpr double kFrameTol = 1e-8;

inline void require_frame(const ComplexMatrix& q, const char* what) {
  if (q.cols() > q.rows()) throw InvalidFrame(std::string(what) + ": more columns than rows");
  const double defect = orthonormality_defect(q);
  if (!(defect <= kFrameTol)) {
    throw InvalidFrame(std::string(what) + ": columns are not orthonormal (defect " + std::to_string(defect) + ")");
  }
}

/// Principal angles between span(vf1) and span(vg1_conj) from one SVD of
/// Gamma = vf1^H vg1_conj = P diag(cos) R^H. The k-th columns of P and R always come
/// out of the same decomposition, so a phase change of p_k is mirrored in r_k.
inline PrincipalAngleDecomposition principal_angles(const ComplexMatrix& vf1, const ComplexMatrix& vg1_conj) {
  if (vf1.rows() != vg1_conj.rows() || vf1.cols() != vg1_conj.cols()) {
    throw DimensionError("principal_angles: frames must have equal shape");
  }
  require_frame(vf1, "principal_angles");
  require_frame(vg1_conj, "principal_angles");
  const std::size_t r = vf1.cols();

  const ComplexMatrix gamma = adjoint(vf1) * vg1_conj;
  detail::FullJacobi j = detail::jacobi_thin(gamma);

  // Columns with (numerically) zero cosine have no defined left vector; they are
  // completed to a unitary P and paired index-by-index with the matching R column.
  const double zero_tol = static_cast<double>(std::max<std::size_t>(r, 1)) * kEps;
  std::size_t kept = 0;
  while (kept < r && j.sigma[kept] > zero_tol) ++kept;

  ComplexMatrix p = j.left.columns(0, kept);
  detail::reorthonormalize(p);
  if (kept < r) p = hcat(p, orthonormal_complement(p));

  PrincipalAngleDecomposition out;
  out.p_basis = std::move(p);
  out.r_basis = std::move(j.right);
  out.cosines.resize(r);
  out.angles.resize(r);
  for (std::size_t k = 0; k < r; ++k) {
    const double c = k < kept ? std::clamp(j.sigma[k], 0.0, 1.0) : 0.0;
    out.cosines[k] = c;
    out.angles[k] = std::acos(c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Majorization

/// True when x is log-majorized by y (x ≺_log y): sorted descending, every prefix product
/// of x is at most (1 + tol) times that of y and the full products agree within tol.
inline bool log_majorizes(std::span<const double> x, std::span<const double> y, double tol = 1e-9) {
  if (x.size() != y.size()) throw DimensionError("log_majorizes: length mismatch");
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!std::all_of(x.begin(), x.end(), positive) || !std::all_of(y.begin(), y.end(), positive)) {
    throw DomainError("log_majorizes: entries must be positive");
  }
  std::vector<double> xs(x.begin(), x.end());
  std::vector<double> ys(y.begin(), y.end());
  std::sort(xs.begin(), xs.end(), std::greater<>());
  std::sort(ys.begin(), ys.end(), std::greater<>());
  // Prefix sums of logs: stable for long vectors and extreme magnitudes.
  const double slack = std::log1p(tol);
  double lx = 0.0;
  double ly = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    lx += std::log(xs[k]);
    ly += std::log(ys[k]);
    if (k + 1 < xs.size() && lx > ly + slack) return false;
  }
  return std::abs(lx - ly) <= slack;
}

// ---------------------------------------------------------------------------
// Dense solvers

/// Solves a x = b (b may hold several right-hand sides) by LU with partial pivoting.
inline ComplexMatrix solve(const ComplexMatrix& a, const ComplexMatrix& b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.rows() != n) throw DimensionError("solve: shape mismatch");
  ComplexMatrix lu = a;
  ComplexMatrix x = b;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(lu(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu(i, k)) > best) {
        best = std::abs(lu(i, k));
        piv = i;
      }
    }
    if (best == 0.0) throw SingularMap("solve: singular matrix");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      for (std::size_t j = 0; j < x.cols(); ++j) std::swap(x(k, j), x(piv, j));
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const cplx f = lu(i, k) / lu(k, k);
      lu(i, k) = f;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
      for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) -= f * x(k, j);
    }
  }
  for (std::size_t kk = n; kk-- > 0;) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      cplx s = x(kk, j);
      for (std::size_t l = kk + 1; l < n; ++l) s -= lu(kk, l) * x(l, j);
      x(kk, j) = s / lu(kk, kk);
    }
  }
  return x;
}

struct LeastSquaresResult {
  std::vector<double> x;
  double residual_norm = 0.0;  // ||A x - b||_2
  std::size_t rank = 0;
};

/// min ||A x - b||_2 by Householder QR with column pivoting. Rank-deficient systems get
/// the basic solution (free variables set to zero).
inline LeastSquaresResult least_squares(const RealMatrix& a, std::span<const double> b,
                                        std::optional<double> rank_tol = std::nullopt) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (b.size() != m) throw DimensionError("least_squares: rhs length mismatch");
  RealMatrix r = a;
  std::vector<double> qtb(b.begin(), b.end());
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  const double tol = rank_tol.value_or(10.0 * static_cast<double>(std::max(m, n)) * kEps);

  std::vector<double> colnorm(n);
  auto col_norm = [&](std::size_t j, std::size_t from) {
    double s = 0.0;
    for (std::size_t i = from; i < m; ++i) s += r(i, j) * r(i, j);
    return std::sqrt(s);
  };

  std::size_t rank = 0;
  double first = 0.0;
  std::vector<double> v(m);
  const std::size_t steps = std::min(m, n);
  for (std::size_t k = 0; k < steps; ++k) {
    std::size_t piv = k;
    double best = -1.0;
    for (std::size_t j = k; j < n; ++j) {
      colnorm[j] = col_norm(j, k);
      if (colnorm[j] > best) {
        best = colnorm[j];
        piv = j;
      }
    }
    if (k == 0) first = best;
    if (best <= tol * first || best == 0.0) break;
    if (piv != k) {
      for (std::size_t i = 0; i < m; ++i) std::swap(r(i, k), r(i, piv));
      std::swap(perm[k], perm[piv]);
    }
    const double x0 = r(k, k);
    const double alpha = x0 >= 0.0 ? -best : best;
    for (std::size_t i = k; i < m; ++i) v[i] = r(i, k);
    v[k] -= alpha;
    double vn = 0.0;
    for (std::size_t i = k; i < m; ++i) vn += v[i] * v[i];
    vn = std::sqrt(vn);
    if (vn > 0.0) {
      for (std::size_t i = k; i < m; ++i) v[i] /= vn;
      for (std::size_t j = k; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = k; i < m; ++i) s += v[i] * r(i, j);
        for (std::size_t i = k; i < m; ++i) r(i, j) -= 2.0 * s * v[i];
      }
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += v[i] * qtb[i];
      for (std::size_t i = k; i < m; ++i) qtb[i] -= 2.0 * s * v[i];
    }
    ++rank;
  }

  std::vector<double> z(n, 0.0);
  for (std::size_t kk = rank; kk-- > 0;) {
    double s = qtb[kk];
    for (std::size_t l = kk + 1; l < rank; ++l) s -= r(kk, l) * z[l];
    z[kk] = s / r(kk, kk);
  }
  LeastSquaresResult out;
  out.x.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) out.x[perm[k]] = z[k];
  out.rank = rank;
  const auto ax = a * std::span<const double>(out.x);
  double res = 0.0;
  for (std::size_t i = 0; i < m; ++i) res += (ax[i] - b[i]) * (ax[i] - b[i]);
  out.residual_norm = std::sqrt(res);
  return out;
}

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  RealMatrix vectors;          // orthogonal, columns match values
};

/// Cyclic Jacobi eigen-decomposition of a real symmetric matrix.
inline SymmetricEigen symmetric_eigen(const RealMatrix& s) {
  const std::size_t n = s.rows();
  if (s.cols() != n) throw DimensionError("symmetric_eigen: square matrix required");
  RealMatrix a = s;
  RealMatrix v = RealMatrix::identity(n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        total += a(i, j) * a(i, j);
        if (i != j) off += a(i, j) * a(i, j);
      }
    }
    if (off <= kEps * kEps * total || off == 0.0) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
  SymmetricEigen out{std::vector<double>(n), RealMatrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

}  // namespace bdris::linalg
