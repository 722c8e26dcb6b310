#pragma once

// Rate and determinant metrics. Rates are in bits (log base 2) and always computed
// from singular values, never from an explicit det(I + rho H H^H).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "bdris/channel.hpp"
#include "bdris/error.hpp"
#include "bdris/linalg.hpp"

namespace bdris::metrics {

using channel::ChannelSet;
using linalg::ComplexMatrix;
using linalg::cplx;

struct MetricsRecord {
  double rate_bits = 0.0;
  double abs_det = 0.0;
  std::vector<double> sigma_h;  // descending
  double d_max = 0.0;
  double rate_gap_bound_bits = 0.0;
  double error_term_bits = 0.0;
};

/// h_direct + e^{j phase} F Theta G^H (direct term only when present).
inline ComplexMatrix equivalent_channel(const ChannelSet& channels, const ComplexMatrix& theta, double phase = 0.0) {
  if (theta.rows() != channels.m() || theta.cols() != channels.m()) {
    throw DimensionError("equivalent_channel: Theta must be M x M");
  }
  ComplexMatrix h = channels.f * theta * linalg::adjoint(channels.g);
  if (phase != 0.0) h *= std::polar(1.0, phase);
  if (channels.h_direct) h += *channels.h_direct;
  return h;
}

/// The r = min(rows, cols) singular values of h, descending.
inline std::vector<double> channel_singular_values(const ComplexMatrix& h) { return linalg::singular_values(h); }

/// log2 det(I + rho H H^H) = sum log2(1 + rho sigma_i^2).
inline double rate_from_singular_values(std::span<const double> sigma, double rho) {
  if (!(rho > 0.0)) throw DomainError("rate: rho must be > 0");
  double r = 0.0;
  for (double s : sigma) r += std::log2(1.0 + rho * s * s);
  return r;
}

inline double achievable_rate(const ComplexMatrix& h, double rho) {
  if (!(rho > 0.0)) throw DomainError("achievable_rate: rho must be > 0");
  return rate_from_singular_values(channel_singular_values(h), rho);
}

/// |det| generalized to rectangular channels: product of the r singular values, i.e.
/// sqrt(det(H H^H)) for N_r <= N_t and sqrt(det(H^H H)) otherwise.
inline double abs_det(const ComplexMatrix& h) {
  double p = 1.0;
  for (double s : channel_singular_values(h)) p *= s;
  return p;
}

struct RateDecomposition {
  double r_log_rho = 0.0;
  double log_det_gram = 0.0;
  double error_term = 0.0;

  double total() const { return r_log_rho + log_det_gram + error_term; }
};

inline std::vector<double> full_rank_singular_values(const ComplexMatrix& h, const char* what) {
  auto s = channel_singular_values(h);
  if (s.empty() || !(s.back() > 0.0) || s.back() <= linalg::default_rank_tol(h.rows(), h.cols()) * s.front()) {
    throw DomainError(std::string(what) + ": channel is rank deficient");
  }
  return s;
}

/// rate = r log2(rho) + log2 det(H H^H) + sum log2(1 + 1/(rho sigma_i^2)).
inline RateDecomposition rate_decomposition(const ComplexMatrix& h, double rho) {
  if (!(rho > 0.0)) throw DomainError("rate_decomposition: rho must be > 0");
  const auto s = full_rank_singular_values(h, "rate_decomposition");
  RateDecomposition d;
  d.r_log_rho = static_cast<double>(s.size()) * std::log2(rho);
  for (double x : s) {
    d.log_det_gram += 2.0 * std::log2(x);
    d.error_term += std::log2(1.0 + 1.0 / (rho * x * x));
  }
  return d;
}

/// r / (rho sigma_r^2 ln 2), an upper bound on the residual term of the decomposition.
inline double error_term_bound(const ComplexMatrix& h, double rho) {
  if (!(rho > 0.0)) throw DomainError("error_term_bound: rho must be > 0");
  const auto s = full_rank_singular_values(h, "error_term_bound");
  const double smin = s.back();
  return static_cast<double>(s.size()) / (rho * smin * smin * std::numbers::ln2);
}

/// Upper bound on rate(unitary alignment) - rate(symmetric max-det):
/// r log2[(1 + rho a_r) a_1 / ((1 + rho a_1) a_r)] with a_i = sigma_fi^2 sigma_gi^2.
inline double rate_gap_bound(std::span<const double> sigma_f, std::span<const double> sigma_g, double rho) {
  if (sigma_f.empty() || sigma_f.size() != sigma_g.size()) {
    throw DimensionError("rate_gap_bound: need equally many nonzero singular values of F and G");
  }
  if (!(rho > 0.0)) throw DomainError("rate_gap_bound: rho must be > 0");
  const double f1 = *std::max_element(sigma_f.begin(), sigma_f.end());
  const double fr = *std::min_element(sigma_f.begin(), sigma_f.end());
  const double g1 = *std::max_element(sigma_g.begin(), sigma_g.end());
  const double gr = *std::min_element(sigma_g.begin(), sigma_g.end());
  if (!(fr > 0.0) || !(gr > 0.0)) throw DomainError("rate_gap_bound: zero minimum singular value");
  const double a1 = f1 * f1 * g1 * g1;
  const double ar = fr * fr * gr * gr;
  const double r = static_cast<double>(sigma_f.size());
  // log2((1 + rho ar)/(rho ar)) - log2((1 + rho a1)/(rho a1)), written to avoid overflow.
  return r * (std::log2(1.0 + 1.0 / (rho * ar)) - std::log2(1.0 + 1.0 / (rho * a1)));
}

/// The r = min(N_t, N_r) largest singular values of F and of G.
struct LeadingSingularValues {
  std::vector<double> f;
  std::vector<double> g;
};

inline LeadingSingularValues leading_singular_values(const ChannelSet& channels) {
  const std::size_t r = channels.dof();
  auto sf = linalg::singular_values(channels.f);
  auto sg = linalg::singular_values(channels.g);
  sf.resize(r);
  sg.resize(r);
  return {std::move(sf), std::move(sg)};
}

/// Product of the r leading singular values of F and of G.
inline double d_max(const ChannelSet& channels) {
  const auto lead = leading_singular_values(channels);
  double p = 1.0;
  for (std::size_t i = 0; i < lead.f.size(); ++i) p *= lead.f[i] * lead.g[i];
  return p;
}

/// Rate, |det|, singular values and bounds of one design on one channel.
inline MetricsRecord evaluate(const ChannelSet& channels, const ComplexMatrix& theta, double rho, double phase = 0.0) {
  MetricsRecord rec;
  const ComplexMatrix h = equivalent_channel(channels, theta, phase);
  rec.sigma_h = channel_singular_values(h);
  rec.rate_bits = rate_from_singular_values(rec.sigma_h, rho);
  rec.abs_det = 1.0;
  for (double s : rec.sigma_h) rec.abs_det *= s;
  const auto lead = leading_singular_values(channels);
  rec.d_max = 1.0;
  for (std::size_t i = 0; i < lead.f.size(); ++i) rec.d_max *= lead.f[i] * lead.g[i];
  if (lead.f.back() > 0.0 && lead.g.back() > 0.0) rec.rate_gap_bound_bits = rate_gap_bound(lead.f, lead.g, rho);
  if (!rec.sigma_h.empty() && rec.sigma_h.back() > 0.0) {
    for (double s : rec.sigma_h) rec.error_term_bits += std::log2(1.0 + 1.0 / (rho * s * s));
  }
  return rec;
}

}  // namespace bdris::metrics
