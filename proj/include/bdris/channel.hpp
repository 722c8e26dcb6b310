#pragma once

// Channel generation for the RIS-assisted MIMO link: Rician RIS links, Rayleigh direct
// link, distance-based path loss. All generators are pure functions of their seed.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>

#include "bdris/error.hpp"
#include "bdris/linalg.hpp"
#include "bdris/rng.hpp"

namespace bdris::channel {

using linalg::ComplexMatrix;
using linalg::cplx;

using Vec3 = std::array<double, 3>;

inline double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

struct Geometry {
  Vec3 tx_pos{0.0, 0.0, 1.5};
  Vec3 rx_pos{50.0, 0.0, 1.5};
  Vec3 ris_pos{5.0, 3.0, 3.0};

  void validate() const {
    if (!(distance(tx_pos, rx_pos) > 0.0) || !(distance(tx_pos, ris_pos) > 0.0) ||
        !(distance(ris_pos, rx_pos) > 0.0)) {
      throw InvalidInput("geometry: Tx, Rx and RIS positions must be distinct");
    }
  }
};

/// How the direct link is scaled before direct_scale is applied.
///  path_loss: d^(-alpha_direct/2) from the Tx-Rx distance.
///  reference: entry power equal to that of F G^H, i.e. ||F G^H||_F / sqrt(N_r N_t),
///             so direct_scale = 1 puts both links at the same reference SNR.
enum class DirectNormalization { path_loss, reference };

struct ChannelParams {
  std::size_t n_t = 4;
  std::size_t n_r = 4;
  std::size_t m = 16;
  double rician_k = 2.0;
  double alpha_ris = 2.0;
  double alpha_direct = 4.0;
  double direct_scale = 1.0;
  double carrier_wavelength = 0.1;
  bool direct_blocked = true;
  bool apply_path_loss = true;
  DirectNormalization direct_normalization = DirectNormalization::path_loss;

  void validate() const {
    if (n_t < 1 || n_r < 1) throw InvalidInput("channel: antenna counts must be >= 1");
    if (m < 1) throw InvalidInput("channel: RIS must have at least one element");
    if (!(rician_k >= 0.0)) throw InvalidInput("channel: Rician K-factor must be >= 0");
    if (!(alpha_ris >= 0.0) || !(alpha_direct >= 0.0)) throw InvalidInput("channel: path-loss exponents must be >= 0");
    if (!(direct_scale >= 0.0)) throw InvalidInput("channel: direct_scale must be >= 0");
    if (!(carrier_wavelength > 0.0)) throw InvalidInput("channel: carrier wavelength must be > 0");
  }
};

/// F: RIS -> Rx (N_r x M), G: Tx -> RIS (N_t x M), optional direct Tx -> Rx (N_r x N_t).
/// The equivalent channel is h_direct + F Theta G^H.
struct ChannelSet {
  ComplexMatrix f;
  ComplexMatrix g;
  std::optional<ComplexMatrix> h_direct;

  std::size_t n_r() const noexcept { return f.rows(); }
  std::size_t n_t() const noexcept { return g.rows(); }
  std::size_t m() const noexcept { return f.cols(); }
  std::size_t dof() const noexcept { return std::min(n_r(), n_t()); }

  void validate() const {
    if (f.empty() || g.empty()) throw DimensionError("channel set: F and G must be nonempty");
    if (f.cols() != g.cols()) throw DimensionError("channel set: F and G must have the same number of columns (M)");
    if (h_direct && (h_direct->rows() != f.rows() || h_direct->cols() != g.rows())) {
      throw DimensionError("channel set: direct link must be N_r x N_t");
    }
    if (!f.all_finite() || !g.all_finite() || (h_direct && !h_direct->all_finite())) {
      throw InvalidInput("channel set: non-finite entries");
    }
  }
};

struct LinkBudget {
  double power = 1.0;
  double noise_var = 1.0;
  std::size_t n_t = 1;

  /// Per-antenna SNR P / (N_t sigma^2).
  double rho() const {
    if (!(power > 0.0) || !(noise_var > 0.0) || n_t == 0) throw DomainError("link budget: P, sigma^2 and N_t must be positive");
    return power / (static_cast<double>(n_t) * noise_var);
  }
};

/// Amplitude gain d^(-alpha/2) (power gain d^(-alpha)), 1 m reference distance.
inline double path_loss(double distance_m, double exponent) {
  if (!(distance_m > 0.0)) throw DomainError("path_loss: distance must be > 0");
  return std::pow(distance_m, -exponent / 2.0);
}

/// Half-wavelength ULA steering vector (unit-modulus entries) for a plane wave whose
/// direction makes cosine `cos_to_axis` with the array axis.
inline std::vector<cplx> steering_vector(std::size_t n, double cos_to_axis, double wavelength) {
  const double spacing = wavelength / 2.0;
  const double k = 2.0 * std::numbers::pi / wavelength;
  std::vector<cplx> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = std::polar(1.0, k * spacing * static_cast<double>(i) * cos_to_axis);
  return a;
}

/// All arrays are ULAs along the y axis.
inline double cos_to_array_axis(const Vec3& from, const Vec3& to) {
  const double d = distance(from, to);
  return (to[1] - from[1]) / d;
}

/// Rank-one LoS component a_rx a_tx^H for a link from `tx` (cols elements) to `rx`
/// (rows elements).
inline ComplexMatrix los_component(std::size_t rows, std::size_t cols, const Vec3& tx, const Vec3& rx,
                                   double wavelength) {
  const double c = cos_to_array_axis(tx, rx);
  const auto a_rx = steering_vector(rows, c, wavelength);
  const auto a_tx = steering_vector(cols, c, wavelength);
  ComplexMatrix h(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) h(i, j) = a_rx[i] * std::conj(a_tx[j]);
  }
  return h;
}

/// i.i.d. CN(0, 1) entries.
inline ComplexMatrix gen_rayleigh(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  rng::ComplexGaussian draw(seed);
  ComplexMatrix h(rows, cols);
  for (auto& z : h.data()) z = draw();
  return h;
}

/// sqrt(K/(K+1)) * los + sqrt(1/(K+1)) * CN(0,1) scatter. `los` must have unit-modulus entries.
inline ComplexMatrix gen_rician(std::size_t rows, std::size_t cols, double k_factor, std::uint64_t seed,
                                const ComplexMatrix& los) {
  if (!(k_factor >= 0.0)) throw DomainError("gen_rician: K-factor must be >= 0");
  if (los.rows() != rows || los.cols() != cols) throw DimensionError("gen_rician: LoS component has wrong shape");
  const double w_los = std::sqrt(k_factor / (k_factor + 1.0));
  const double w_nlos = std::sqrt(1.0 / (k_factor + 1.0));
  ComplexMatrix h = gen_rayleigh(rows, cols, seed);
  for (std::size_t k = 0; k < h.size(); ++k) h.data()[k] = w_los * los.data()[k] + w_nlos * h.data()[k];
  return h;
}

/// Broadside LoS (all-ones) overload.
inline ComplexMatrix gen_rician(std::size_t rows, std::size_t cols, double k_factor, std::uint64_t seed) {
  ComplexMatrix ones(rows, cols);
  for (auto& z : ones.data()) z = 1.0;
  return gen_rician(rows, cols, k_factor, seed, ones);
}

/// F, G Rician with geometry-driven LoS and path loss; direct link Rayleigh scaled by
/// direct_scale (absent when blocked).
inline ChannelSet build_channel_set(const Geometry& geometry, const ChannelParams& params, std::uint64_t seed) {
  geometry.validate();
  params.validate();
  const double lambda = params.carrier_wavelength;

  // G is N_t x M with G^H carrying Tx -> RIS, so its LoS term is a_tx a_ris^H.
  const ComplexMatrix g_los = los_component(params.n_t, params.m, geometry.ris_pos, geometry.tx_pos, lambda);
  const ComplexMatrix f_los = los_component(params.n_r, params.m, geometry.ris_pos, geometry.rx_pos, lambda);

  ChannelSet set;
  set.f = gen_rician(params.n_r, params.m, params.rician_k, rng::derive_seed(seed, rng::Stream::forward), f_los);
  set.g = gen_rician(params.n_t, params.m, params.rician_k, rng::derive_seed(seed, rng::Stream::backward), g_los);
  if (params.apply_path_loss) {
    set.f *= cplx{path_loss(distance(geometry.ris_pos, geometry.rx_pos), params.alpha_ris)};
    set.g *= cplx{path_loss(distance(geometry.tx_pos, geometry.ris_pos), params.alpha_ris)};
  }
  if (!params.direct_blocked) {
    ComplexMatrix hd = gen_rayleigh(params.n_r, params.n_t, rng::derive_seed(seed, rng::Stream::direct));
    double gain = params.direct_scale;
    if (params.direct_normalization == DirectNormalization::reference) {
      const double fg = linalg::frobenius_norm(set.f * linalg::adjoint(set.g));
      gain *= fg / std::sqrt(static_cast<double>(params.n_r * params.n_t));
    } else if (params.apply_path_loss) {
      gain *= path_loss(distance(geometry.tx_pos, geometry.rx_pos), params.alpha_direct);
    }
    hd *= cplx{gain};
    set.h_direct = std::move(hd);
  }
  return set;
}

/// 10 log10(P ||F G^H||_F^2 / (N_t N_r sigma^2)), the SNR with Theta = I.
inline double reference_snr_db(const ChannelSet& channels, const LinkBudget& budget) {
  const double fg = linalg::frobenius_norm(channels.f * linalg::adjoint(channels.g));
  const double denom = static_cast<double>(channels.n_t() * channels.n_r()) * budget.noise_var;
  return 10.0 * std::log10(budget.power * fg * fg / denom);
}

/// Per-antenna SNR rho that makes reference_snr_db equal `snr_db` for these channels.
inline double rho_for_reference_snr(const ChannelSet& channels, double snr_db) {
  const double fg = linalg::frobenius_norm(channels.f * linalg::adjoint(channels.g));
  if (!(fg > 0.0)) throw DegenerateChannel("reference SNR undefined: F G^H = 0");
  return std::pow(10.0, snr_db / 10.0) * static_cast<double>(channels.n_r()) / (fg * fg);
}

}  // namespace bdris::channel
