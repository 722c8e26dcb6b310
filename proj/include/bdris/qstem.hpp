#pragma once

// Circuit realization of a scattering matrix: the Cayley map between real symmetric
// susceptance matrices B and symmetric unitary Theta, and least-squares synthesis of a
// B with q-stem sparsity.
//
// q-stem pattern (0-based): B(i, j) may be nonzero only if i == j, i < q or j < q.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "bdris/designs.hpp"
#include "bdris/error.hpp"
#include "bdris/linalg.hpp"

namespace bdris::qstem {

using designs::ScatteringMatrix;
using designs::StiefelFrame;
using linalg::ComplexMatrix;
using linalg::cplx;
using linalg::RealMatrix;

inline constexpr double kDefaultZ0 = 50.0;

inline bool in_pattern(std::size_t i, std::size_t j, std::size_t q) { return i == j || i < q || j < q; }

/// Number of tunable susceptances of a q-stem network: q(q+1)/2 + (M - q)(q + 1).
inline std::size_t element_count(std::size_t q, std::size_t m) {
  if (q < 1 || q > m) throw DomainError("element_count: need 1 <= q <= M");
  return q * (q + 1) / 2 + (m - q) * (q + 1);
}

/// Real symmetric M x M susceptance matrix, stored as its packed lower triangle so that
/// B = B^T holds exactly.
class SusceptanceMatrix {
 public:
  SusceptanceMatrix() = default;

  SusceptanceMatrix(std::size_t m, std::size_t q, double z0) : m_(m), q_(q), z0_(z0), packed_(m * (m + 1) / 2, 0.0) {
    if (!(z0 > 0.0)) throw DomainError("susceptance: Z0 must be > 0");
    if (q < 1 || q > m) throw DomainError("susceptance: need 1 <= q <= M");
  }

  /// From a dense matrix; asymmetry beyond `tol` (relative) or entries outside the
  /// q-stem pattern are rejected.
  static SusceptanceMatrix from_dense(const RealMatrix& b, std::size_t q, double z0, double tol = 1e-8) {
    if (b.rows() != b.cols()) throw DimensionError("susceptance: matrix must be square");
    SusceptanceMatrix out(b.rows(), q, z0);
    const double scale = std::max(1.0, linalg::frobenius_norm(b));
    for (std::size_t i = 0; i < b.rows(); ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        if (std::abs(b(i, j) - b(j, i)) > tol * scale) throw InvalidInput("susceptance: matrix is not symmetric");
        const double v = 0.5 * (b(i, j) + b(j, i));
        if (!in_pattern(i, j, q) && v != 0.0) throw InvalidInput("susceptance: entry outside the q-stem pattern");
        out.set(i, j, v);
      }
    }
    return out;
  }

  std::size_t m() const noexcept { return m_; }
  std::size_t q() const noexcept { return q_; }
  double z0() const noexcept { return z0_; }

  double at(std::size_t i, std::size_t j) const { return packed_[index(i, j)]; }

  void set(std::size_t i, std::size_t j, double v) {
    if (!in_pattern(i, j, q_) && v != 0.0) throw InvalidInput("susceptance: entry outside the q-stem pattern");
    packed_[index(i, j)] = v;
  }

  RealMatrix dense() const {
    RealMatrix b(m_, m_);
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < m_; ++j) b(i, j) = at(i, j);
    }
    return b;
  }

  /// Entries that are not structurally zero.
  std::size_t nonzeros_in_pattern() const { return element_count(q_, m_); }

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    if (i >= m_ || j >= m_) throw DimensionError("susceptance: index out of range");
    if (i < j) std::swap(i, j);
    return i * (i + 1) / 2 + j;
  }

  std::size_t m_ = 0;
  std::size_t q_ = 1;
  double z0_ = kDefaultZ0;
  std::vector<double> packed_;
};

/// Sparse M^2 x nu 0/1 matrix with R b = vec(B). Parameter order: stem columns
/// j = 0..q-1 with rows i = j..M-1, then the diagonal of the lower-right block.
struct SelectionMatrix {
  std::size_t m = 0;
  std::size_t q = 0;
  std::vector<std::pair<std::size_t, std::size_t>> params;  // (i, j), i >= j
  std::vector<std::vector<std::size_t>> positions;          // vec(B) rows hit by each column

  std::size_t nu() const noexcept { return params.size(); }

  RealMatrix dense() const {
    RealMatrix r(m * m, nu());
    for (std::size_t p = 0; p < nu(); ++p) {
      for (std::size_t row : positions[p]) r(row, p) = 1.0;
    }
    return r;
  }
};

/// `extra_zero_diagonals` removes the last k diagonal entries of the lower-right block
/// (experimental: tests whether r more circuits can be dropped).
inline SelectionMatrix build_selection_matrix(std::size_t q, std::size_t m, std::size_t extra_zero_diagonals = 0) {
  if (q < 1 || q > m) throw DomainError("build_selection_matrix: need 1 <= q <= M");
  if (extra_zero_diagonals > m - q) throw DomainError("build_selection_matrix: too many extra zeros");
  SelectionMatrix sel;
  sel.m = m;
  sel.q = q;
  auto vec_index = [m](std::size_t i, std::size_t j) { return i + j * m; };
  for (std::size_t j = 0; j < q; ++j) {
    for (std::size_t i = j; i < m; ++i) {
      sel.params.emplace_back(i, j);
      if (i == j) {
        sel.positions.push_back({vec_index(i, i)});
      } else {
        sel.positions.push_back({vec_index(i, j), vec_index(j, i)});
      }
    }
  }
  for (std::size_t i = q; i < m - extra_zero_diagonals; ++i) {
    sel.params.emplace_back(i, i);
    sel.positions.push_back({vec_index(i, i)});
  }
  return sel;
}

/// (Re(Q)^T ⊗ I_M) R x = -vec(Im Q), with x = Z0 b.
struct QStemSystem {
  SelectionMatrix selection;
  RealMatrix design_matrix;
  std::vector<double> rhs;
  std::size_t nu = 0;
};

inline QStemSystem build_qstem_system(const StiefelFrame& frame, std::size_t q, std::size_t extra_zero_diagonals = 0) {
  const std::size_t m = frame.m();
  QStemSystem sys;
  sys.selection = build_selection_matrix(q, m, extra_zero_diagonals);
  sys.nu = sys.selection.nu();
  const RealMatrix re_q = linalg::real_part(frame.q());
  const RealMatrix im_q = linalg::imag_part(frame.q());
  sys.design_matrix = linalg::kron(linalg::transpose(re_q), RealMatrix::identity(m)) * sys.selection.dense();
  sys.rhs = linalg::vectorize(im_q);
  for (auto& v : sys.rhs) v = -v;
  return sys;
}

struct QStemResult {
  SusceptanceMatrix b;
  double residual = 0.0;  // ||W x + vec(Im Q)||_2 of the Z0-normalized system
  bool exact = false;     // residual <= tol * ||Im Q||_F
  std::size_t nu = 0;
  std::size_t rank = 0;
};

/// Least-squares q-stem susceptance whose Cayley image maps conj(Q) to Q, i.e. keeps
/// Q Q^T on span(Q). Exact for generic frames once q >= s - 1.
inline QStemResult synthesize_qstem(const StiefelFrame& frame, std::size_t q, double z0 = kDefaultZ0, double tol = 1e-8,
                                    std::size_t extra_zero_diagonals = 0) {
  if (!(z0 > 0.0)) throw DomainError("synthesize_qstem: Z0 must be > 0");
  const QStemSystem sys = build_qstem_system(frame, q, extra_zero_diagonals);
  const linalg::LeastSquaresResult ls = linalg::least_squares(sys.design_matrix, sys.rhs);

  QStemResult out;
  out.b = SusceptanceMatrix(frame.m(), q, z0);
  for (std::size_t p = 0; p < sys.nu; ++p) {
    const auto [i, j] = sys.selection.params[p];
    out.b.set(i, j, ls.x[p] / z0);
  }
  out.residual = ls.residual_norm;
  out.exact = out.residual <= tol * linalg::vector_norm(std::span<const double>(sys.rhs));
  out.nu = sys.nu;
  out.rank = ls.rank;
  return out;
}

inline constexpr double kMaxCayleyCondition = 1e12;

/// Theta = (I + j Z0 B)^{-1} (I - j Z0 B).
inline ScatteringMatrix b_to_theta(const SusceptanceMatrix& b) {
  const std::size_t m = b.m();
  ComplexMatrix jzb(m, m);
  const RealMatrix bd = b.dense();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) jzb(i, j) = linalg::kJ * (b.z0() * bd(i, j));
  }
  const ComplexMatrix eye = ComplexMatrix::identity(m);
  const ComplexMatrix lhs = eye + jzb;
  if (!(linalg::condition_number(lhs) < kMaxCayleyCondition)) throw SingularMap("b_to_theta: I + jZ0B is singular");
  ComplexMatrix theta = linalg::solve(lhs, eye - jzb);
  // Exact symmetry; the solve leaves O(eps) asymmetry.
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const cplx avg = 0.5 * (theta(i, j) + theta(j, i));
      theta(i, j) = avg;
      theta(j, i) = avg;
    }
  }
  return {std::move(theta), m, designs::DesignKind::custom};
}

inline constexpr double kCayleySingularTol = 1e-8;

namespace detail {

inline double distance_to_minus_one(const ComplexMatrix& theta) {
  const auto s = linalg::singular_values(ComplexMatrix::identity(theta.rows()) + theta);
  return s.empty() ? 1.0 : s.back();
}

}  // namespace detail

/// Fully connected B = (1 / (j Z0)) (I + Theta)^{-1} (I - Theta) for symmetric unitary Theta.
inline SusceptanceMatrix theta_to_b(const ComplexMatrix& theta, double z0 = kDefaultZ0) {
  const std::size_t m = theta.rows();
  if (theta.cols() != m) throw DimensionError("theta_to_b: Theta must be square");
  if (!(z0 > 0.0)) throw DomainError("theta_to_b: Z0 must be > 0");
  if (detail::distance_to_minus_one(theta) < kCayleySingularTol) {
    double suggestion = std::numbers::pi / 8.0;
    for (double phi : {std::numbers::pi / 8.0, std::numbers::pi / 4.0, 3.0 * std::numbers::pi / 8.0}) {
      if (detail::distance_to_minus_one(theta * std::polar(1.0, phi)) >= kCayleySingularTol) {
        suggestion = phi;
        break;
      }
    }
    throw CayleySingularity("theta_to_b: Theta has an eigenvalue at -1; rotate it by a global phase", suggestion);
  }
  const ComplexMatrix eye = ComplexMatrix::identity(m);
  const ComplexMatrix x = linalg::solve(eye + theta, eye - theta);  // = j Z0 B
  RealMatrix b(m, m);
  double imag_residual = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const cplx v = x(i, j) / (linalg::kJ * z0);
      b(i, j) = v.real();
      imag_residual += v.imag() * v.imag();
    }
  }
  const double scale = std::max(1.0 / z0, linalg::frobenius_norm(b));
  if (std::sqrt(imag_residual) > 1e-8 * scale) {
    throw InvalidInput("theta_to_b: Theta is not symmetric unitary (B would be complex)");
  }
  return SusceptanceMatrix::from_dense(b, m, z0, 1e-8);
}

struct CayleyRealization {
  SusceptanceMatrix b;
  double applied_phase = 0.0;  // Theta was rotated by e^{j phase} before the map
};

/// theta_to_b, retrying with e^{j phi} Theta for phi in {pi/8, pi/4, 3pi/8} when Theta
/// has an eigenvalue at -1. The global phase leaves |det(F Theta G^H)| unchanged.
inline CayleyRealization theta_to_b_with_fallback(const ComplexMatrix& theta, double z0 = kDefaultZ0) {
  for (double phi : {0.0, std::numbers::pi / 8.0, std::numbers::pi / 4.0, 3.0 * std::numbers::pi / 8.0}) {
    const ComplexMatrix rotated = phi == 0.0 ? theta : theta * std::polar(1.0, phi);
    if (detail::distance_to_minus_one(rotated) >= kCayleySingularTol) return {theta_to_b(rotated, z0), phi};
  }
  throw CayleySingularity("theta_to_b: no fallback phase avoids the eigenvalue at -1", 0.0);
}

/// Q Q^T + Q_perp Q_perp^T: a full-rank symmetric unitary matrix that acts as Q Q^T on
/// span(conj(Q)).
inline ScatteringMatrix complete_to_unitary(const StiefelFrame& frame) {
  const ComplexMatrix& q = frame.q();
  const ComplexMatrix qp = linalg::orthonormal_complement(q);
  ComplexMatrix theta = q * linalg::transpose(q);
  if (qp.cols() > 0) theta += qp * linalg::transpose(qp);
  return {std::move(theta), frame.m(), designs::DesignKind::custom};
}

}  // namespace bdris::qstem
