#pragma once

// Scattering-matrix constructions: the closed-form symmetric max-det surface and the
// baselines it is compared against.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bdris/channel.hpp"
#include "bdris/error.hpp"
#include "bdris/linalg.hpp"
#include "bdris/metrics.hpp"
#include "bdris/rng.hpp"

namespace bdris::designs {

using channel::ChannelSet;
using linalg::ComplexMatrix;
using linalg::cplx;
using linalg::PrincipalAngleDecomposition;

enum class DesignKind { max_det_symmetric, unitary_baseline, rotated, random_symmetric, identity, no_ris, custom };

inline std::string_view to_string(DesignKind k) {
  switch (k) {
    case DesignKind::max_det_symmetric: return "max_det_symmetric";
    case DesignKind::unitary_baseline: return "unitary_baseline";
    case DesignKind::rotated: return "rotated";
    case DesignKind::random_symmetric: return "random_symmetric";
    case DesignKind::identity: return "identity";
    case DesignKind::no_ris: return "no_ris";
    case DesignKind::custom: return "custom";
  }
  return "custom";
}

/// Singular values of a scattering matrix at or below this (relative to 1) count as zero.
inline constexpr double kScatteringRankTol = 1e-9;

struct ScatteringMatrix {
  ComplexMatrix theta;
  std::size_t rank = 0;
  DesignKind kind = DesignKind::custom;
};

inline std::size_t scattering_rank(const ComplexMatrix& theta) {
  const auto s = linalg::singular_values(theta);
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](double x) { return x > kScatteringRankTol; }));
}

inline ScatteringMatrix make_scattering(ComplexMatrix theta, DesignKind kind) {
  if (theta.rows() != theta.cols()) throw DimensionError("scattering matrix must be square");
  const std::size_t rank = scattering_rank(theta);
  return {std::move(theta), rank, kind};
}

struct Feasibility {
  double symmetry_defect = 0.0;     // ||Theta - Theta^T||_F / ||Theta||_F
  double max_singular_value = 0.0;  // passive iff <= 1
  double unitarity_defect = 0.0;    // ||Theta Theta^H - I||_F
};

inline Feasibility feasibility(const ComplexMatrix& theta) {
  Feasibility f;
  const double nrm = linalg::frobenius_norm(theta);
  f.symmetry_defect = nrm > 0.0 ? linalg::symmetry_defect(theta) / nrm : 0.0;
  const auto s = linalg::singular_values(theta);
  f.max_singular_value = s.empty() ? 0.0 : s.front();
  f.unitarity_defect = linalg::frobenius_norm(theta * linalg::adjoint(theta) - ComplexMatrix::identity(theta.rows()));
  return f;
}

/// M x s matrix with orthonormal columns.
class StiefelFrame {
 public:
  StiefelFrame() = default;

  explicit StiefelFrame(ComplexMatrix q, double tol = 1e-10) : q_(std::move(q)) {
    const double defect = linalg::orthonormality_defect(q_);
    if (q_.cols() > q_.rows() || !(defect <= tol)) throw InvalidFrame("Stiefel frame: columns are not orthonormal");
  }

  const ComplexMatrix& q() const noexcept { return q_; }
  std::size_t m() const noexcept { return q_.rows(); }
  std::size_t s() const noexcept { return q_.cols(); }

  /// Q Q^T.
  ComplexMatrix theta() const { return q_ * linalg::transpose(q_); }

 private:
  ComplexMatrix q_;
};

/// Leading right singular subspaces of F and G.
struct SignalSubspaces {
  ComplexMatrix vf1;  // M x k
  ComplexMatrix vg1;  // M x k
  std::vector<double> sigma_f;
  std::vector<double> sigma_g;
};

inline SignalSubspaces signal_subspaces(const ChannelSet& channels) {
  channels.validate();
  const linalg::CompactSVD sf = linalg::compact_svd(channels.f);
  const linalg::CompactSVD sg = linalg::compact_svd(channels.g);
  if (sf.rank() == 0 || sg.rank() == 0 || sf.singular_values.front() == 0.0 || sg.singular_values.front() == 0.0) {
    throw DegenerateChannel("F or G is the zero matrix");
  }
  const std::size_t k = std::min({channels.dof(), sf.rank(), sg.rank()});
  SignalSubspaces out;
  out.vf1 = sf.right.columns(0, k);
  out.vg1 = sg.right.columns(0, k);
  out.sigma_f.assign(sf.singular_values.begin(), sf.singular_values.begin() + static_cast<std::ptrdiff_t>(k));
  out.sigma_g.assign(sg.singular_values.begin(), sg.singular_values.begin() + static_cast<std::ptrdiff_t>(k));
  return out;
}

/// Principal angles with 1 - cos below this are treated as zero: the difference vector
/// u_2 is 0/0 and is dropped.
inline constexpr double kCollinearTol = 1e-12;

struct MaxDetSolution {
  ScatteringMatrix theta;
  StiefelFrame frame;
  PrincipalAngleDecomposition angles;
  SignalSubspaces subspaces;
  std::size_t dropped = 0;  // collinear pairs that contributed u_1 only
};

/// Closed-form symmetric surface attaining max |det(F Theta G^H)|.
///
/// With Gamma = V_F1^H V_G1^* = P diag(cos t_k) R^H and a_k = V_F1 p_k, b_k = V_G1^* r_k:
///   u_1k = (a_k + b_k) / sqrt(2 (1 + cos t_k)),  u_2k = (a_k - b_k) / sqrt(2 (1 - cos t_k)),
///   Theta = sum u_1k u_1k^T - sum u_2k u_2k^T = Q Q^T,  Q = [U_1, -j U_2].
/// Building U from the paired (p_k, r_k) instead of a raw SVD of [V_F1, V_G1^*] pins the
/// relative phase of u_1k and u_2k, which is what makes V_F1^H Theta V_G1 = P R^T unitary.
inline MaxDetSolution solve_maxdet(const ChannelSet& channels) {
  if (channels.dof() < 1) throw InvalidInput("solve_maxdet: need at least one antenna on each side");
  SignalSubspaces sub = signal_subspaces(channels);
  const ComplexMatrix vg1_conj = linalg::conj(sub.vg1);
  PrincipalAngleDecomposition pa = linalg::principal_angles(sub.vf1, vg1_conj);

  const std::size_t m = channels.m();
  const std::size_t r = sub.vf1.cols();
  const ComplexMatrix a = sub.vf1 * pa.p_basis;
  const ComplexMatrix b = vg1_conj * pa.r_basis;

  std::vector<std::vector<cplx>> sum_vectors;
  std::vector<std::vector<cplx>> diff_vectors;
  std::size_t dropped = 0;
  for (std::size_t k = 0; k < r; ++k) {
    const double c = pa.cosines[k];
    const double plus = 1.0 / std::sqrt(2.0 * (1.0 + c));
    std::vector<cplx> u1(m);
    for (std::size_t i = 0; i < m; ++i) u1[i] = (a(i, k) + b(i, k)) * plus;
    sum_vectors.push_back(std::move(u1));
    if (1.0 - c < kCollinearTol) {
      ++dropped;
      continue;
    }
    const double minus = 1.0 / std::sqrt(2.0 * (1.0 - c));
    std::vector<cplx> u2(m);
    for (std::size_t i = 0; i < m; ++i) u2[i] = (a(i, k) - b(i, k)) * minus;
    diff_vectors.push_back(std::move(u2));
  }

  ComplexMatrix q(m, sum_vectors.size() + diff_vectors.size());
  for (std::size_t k = 0; k < sum_vectors.size(); ++k) q.set_column(k, sum_vectors[k]);
  for (std::size_t k = 0; k < diff_vectors.size(); ++k) {
    for (auto& z : diff_vectors[k]) z *= -linalg::kJ;
    q.set_column(sum_vectors.size() + k, diff_vectors[k]);
  }

  StiefelFrame frame(q, 1e-8);
  ComplexMatrix theta = frame.theta();
  MaxDetSolution sol{make_scattering(std::move(theta), DesignKind::max_det_symmetric), std::move(frame), std::move(pa),
                     std::move(sub), dropped};
  return sol;
}

/// Direct transcription of the raw-SVD recipe: U from the compact SVD of [V_F1, V_G1^*],
/// Theta = U blkdiag(I, -I) U^T. The phases of U's columns are whatever the SVD returns,
/// so the result is only optimal when they happen to pair up; check with
/// verify_block_structure. Kept for comparison.
inline ScatteringMatrix solve_maxdet_raw_svd(const ChannelSet& channels) {
  const SignalSubspaces sub = signal_subspaces(channels);
  const std::size_t r = sub.vf1.cols();
  const linalg::CompactSVD sa = linalg::compact_svd(linalg::hcat(sub.vf1, linalg::conj(sub.vg1)));
  ComplexMatrix q = sa.left;
  for (std::size_t k = r; k < q.cols(); ++k) {
    for (std::size_t i = 0; i < q.rows(); ++i) q(i, k) *= -linalg::kJ;
  }
  return make_scattering(q * linalg::transpose(q), DesignKind::max_det_symmetric);
}

struct BlockAlignment {
  ComplexMatrix t_matrix;  // V_F^H Theta V_G
  ComplexMatrix t1;        // leading r x r block
  double off_diag_norm = 0.0;
  double t1_unitarity_defect = 0.0;
  std::optional<double> t1_pr_defect;  // ||T_1 - P R^T||_F when the angles are known
};

namespace detail {

inline BlockAlignment block_structure(const ComplexMatrix& vf1, const ComplexMatrix& vg1, const ComplexMatrix& theta) {
  const std::size_t m = vf1.rows();
  if (theta.rows() != m || theta.cols() != m) throw DimensionError("verify_block_structure: Theta must be M x M");
  const std::size_t r = vf1.cols();
  const ComplexMatrix vf = linalg::hcat(vf1, linalg::orthonormal_complement(vf1));
  const ComplexMatrix vg = linalg::hcat(vg1, linalg::orthonormal_complement(vg1));
  BlockAlignment out;
  out.t_matrix = linalg::adjoint(vf) * theta * vg;
  out.t1 = out.t_matrix.block(0, 0, r, r);
  double off = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if ((i < r) != (j < r)) off += std::norm(out.t_matrix(i, j));
    }
  }
  out.off_diag_norm = std::sqrt(off);
  out.t1_unitarity_defect = linalg::orthonormality_defect(out.t1);
  return out;
}

}  // namespace detail

/// T = V_F^H Theta V_G on completed bases; a max-det surface makes T block diagonal
/// with a unitary leading block.
inline BlockAlignment verify_block_structure(const ChannelSet& channels, const ComplexMatrix& theta) {
  const SignalSubspaces sub = signal_subspaces(channels);
  return detail::block_structure(sub.vf1, sub.vg1, theta);
}

/// Same, using the solver's own bases, and additionally checks T_1 = P R^T.
inline BlockAlignment verify_block_structure(const MaxDetSolution& sol) {
  BlockAlignment out = detail::block_structure(sol.subspaces.vf1, sol.subspaces.vg1, sol.theta.theta);
  const ComplexMatrix pr = sol.angles.p_basis * linalg::transpose(sol.angles.r_basis);
  out.t1_pr_defect = linalg::frobenius_norm(out.t1 - pr);
  return out;
}

/// V_F1 V_G1^H: rank r, not symmetric, aligns the eigenmodes of F and G.
inline ScatteringMatrix unitary_baseline(const ChannelSet& channels) {
  const SignalSubspaces sub = signal_subspaces(channels);
  return make_scattering(sub.vf1 * linalg::adjoint(sub.vg1), DesignKind::unitary_baseline);
}

/// V_F1 U V_G1^H for an r x r unitary U; same |det| as the baseline, different singular values.
inline ScatteringMatrix rotated_family(const ChannelSet& channels, const ComplexMatrix& u_rotation) {
  const SignalSubspaces sub = signal_subspaces(channels);
  const std::size_t r = sub.vf1.cols();
  if (u_rotation.rows() != r || u_rotation.cols() != r) throw DimensionError("rotated_family: rotation must be r x r");
  if (!(linalg::orthonormality_defect(u_rotation) <= 1e-10)) throw InvalidInput("rotated_family: rotation is not unitary");
  return make_scattering(sub.vf1 * u_rotation * linalg::adjoint(sub.vg1), DesignKind::rotated);
}

/// Planar rotation [[cos, -sin], [sin, cos]] embedded in the leading 2 x 2 block of I_r.
inline ComplexMatrix planar_rotation(std::size_t r, double phi) {
  ComplexMatrix u = ComplexMatrix::identity(r);
  if (r >= 2) {
    u(0, 0) = std::cos(phi);
    u(0, 1) = -std::sin(phi);
    u(1, 0) = std::sin(phi);
    u(1, 1) = std::cos(phi);
  }
  return u;
}

/// Haar-distributed n x n unitary from the QR of a seeded Gaussian matrix.
inline ComplexMatrix random_unitary(std::size_t n, std::uint64_t seed) {
  const ComplexMatrix z = channel::gen_rayleigh(n, n, seed);
  return linalg::householder_qr(z).q;
}

/// W W^T with W Haar unitary: symmetric and unitary by construction.
inline ScatteringMatrix random_symmetric_unitary(std::size_t m, std::uint64_t seed) {
  if (m < 1) throw InvalidInput("random_symmetric_unitary: m must be >= 1");
  const ComplexMatrix w = random_unitary(m, seed);
  return make_scattering(w * linalg::transpose(w), DesignKind::random_symmetric);
}

inline ScatteringMatrix identity_surface(std::size_t m) {
  return {ComplexMatrix::identity(m), m, DesignKind::identity};
}

inline ScatteringMatrix no_ris(std::size_t m) { return {ComplexMatrix(m, m), 0, DesignKind::no_ris}; }

struct PhaseCorrection {
  double phi = 0.0;  // radians in [0, 2 pi)
  ScatteringMatrix theta;
  double rate_bits = 0.0;
};

/// Global phase phi maximizing log det(I + rho (H_d + e^{j phi} F Theta G^H)(.)^H):
/// 360-point grid then golden-section refinement to |d phi| < 1e-6.
inline PhaseCorrection phase_correction(const ChannelSet& channels, const ScatteringMatrix& theta_opt, double rho) {
  if (!channels.h_direct) throw InvalidInput("phase_correction: direct link is absent");
  const ComplexMatrix& hd = *channels.h_direct;
  const ComplexMatrix hr = channels.f * theta_opt.theta * linalg::adjoint(channels.g);

  auto rate_at = [&](double phi) {
    ComplexMatrix h = hr * std::polar(1.0, phi);
    h += hd;
    return metrics::achievable_rate(h, rho);
  };

  PhaseCorrection out;
  if (linalg::frobenius_norm(hd) == 0.0) {
    out.phi = 0.0;
    out.theta = theta_opt;
    out.rate_bits = rate_at(0.0);
    return out;
  }

  constexpr int kGrid = 360;
  const double step = 2.0 * std::numbers::pi / kGrid;
  double best_phi = 0.0;
  double best = rate_at(0.0);
  for (int i = 1; i < kGrid; ++i) {
    const double phi = step * i;
    const double v = rate_at(phi);
    if (v > best) {
      best = v;
      best_phi = phi;
    }
  }

  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = best_phi - step;
  double hi = best_phi + step;
  double x1 = hi - golden * (hi - lo);
  double x2 = lo + golden * (hi - lo);
  double f1 = rate_at(x1);
  double f2 = rate_at(x2);
  while (hi - lo > 1e-6) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + golden * (hi - lo);
      f2 = rate_at(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - golden * (hi - lo);
      f1 = rate_at(x1);
    }
  }
  const double refined = 0.5 * (lo + hi);
  const double refined_rate = rate_at(refined);
  if (refined_rate > best) {
    best = refined_rate;
    best_phi = refined;
  }
  best_phi = std::fmod(best_phi, 2.0 * std::numbers::pi);
  if (best_phi < 0.0) best_phi += 2.0 * std::numbers::pi;

  out.phi = best_phi;
  out.theta = theta_opt;
  out.theta.theta *= std::polar(1.0, best_phi);
  out.rate_bits = best;
  return out;
}

/// Factor a symmetric Theta whose nonzero singular values are all 1 as Q Q^T with Q
/// orthonormal (a Takagi factorization). Used when only Theta is at hand.
inline StiefelFrame takagi_frame(const ComplexMatrix& theta, double tol = 1e-8) {
  if (theta.rows() != theta.cols()) throw DimensionError("takagi_frame: Theta must be square");
  if (linalg::symmetry_defect(theta) > tol * std::max(1.0, linalg::frobenius_norm(theta))) {
    throw InvalidInput("takagi_frame: Theta is not symmetric");
  }
  const linalg::CompactSVD svd = linalg::compact_svd(theta, kScatteringRankTol);
  for (double s : svd.singular_values) {
    if (std::abs(s - 1.0) > 1e-6) throw InvalidInput("takagi_frame: nonzero singular values of Theta must equal 1");
  }
  const ComplexMatrix& us = svd.left;
  // C = U_s^H Theta U_s^* is symmetric unitary, so Re C and Im C are commuting real
  // symmetric matrices sharing an orthogonal eigenbasis O; C = O diag(e^{j a}) O^T.
  const ComplexMatrix c = linalg::adjoint(us) * theta * linalg::conj(us);
  const linalg::RealMatrix re = linalg::real_part(c);
  const linalg::RealMatrix im = linalg::imag_part(c);
  const std::size_t s = c.rows();
  for (double mix : {0.6180339887498949, 0.3141592653589793, 1.4142135623730951}) {
    linalg::RealMatrix comb = re;
    for (std::size_t k = 0; k < comb.size(); ++k) comb.data()[k] += mix * im.data()[k];
    // Symmetrize against rounding.
    for (std::size_t i = 0; i < s; ++i) {
      for (std::size_t j = i + 1; j < s; ++j) {
        const double avg = 0.5 * (comb(i, j) + comb(j, i));
        comb(i, j) = avg;
        comb(j, i) = avg;
      }
    }
    const linalg::SymmetricEigen eig = linalg::symmetric_eigen(comb);
    const ComplexMatrix o = linalg::to_complex(eig.vectors);
    const ComplexMatrix d = linalg::transpose(o) * c * o;
    ComplexMatrix w = o;
    for (std::size_t k = 0; k < s; ++k) {
      const cplx root = std::polar(1.0, 0.5 * std::arg(d(k, k)));
      for (std::size_t i = 0; i < s; ++i) w(i, k) *= root;
    }
    const ComplexMatrix q = us * w;
    if (linalg::frobenius_norm(q * linalg::transpose(q) - theta) <= tol * std::max(1.0, linalg::frobenius_norm(theta))) {
      return StiefelFrame(q, 1e-8);
    }
  }
  throw NumericalError("takagi_frame: could not factor Theta as Q Q^T");
}

}  // namespace bdris::designs
