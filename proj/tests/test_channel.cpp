#include <catch_amalgamated.hpp>
#include <cmath>

#include "bdris/channel.hpp"
#include "bdris/rng.hpp"
#include "test_util.hpp"

using namespace bdris;
using namespace bdris::channel;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("path_loss") {
  CHECK_THAT(path_loss(1.0, 2.0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(path_loss(10.0, 2.0), WithinRel(0.1, 1e-14));
  CHECK_THAT(path_loss(50.0, 4.0), WithinRel(4e-4, 1e-14));
  REQUIRE_THROWS_AS(path_loss(0.0, 2.0), DomainError);
  REQUIRE_THROWS_AS(path_loss(-1.0, 2.0), DomainError);
}

TEST_CASE("default geometry distances") {
  const Geometry g;
  CHECK_THAT(distance(g.tx_pos, g.ris_pos), WithinRel(std::sqrt(36.25), 1e-14));
  CHECK_THAT(distance(g.tx_pos, g.ris_pos), WithinAbs(6.021, 1e-3));
  CHECK_THAT(distance(g.tx_pos, g.rx_pos), WithinAbs(50.0, 1e-14));
}

TEST_CASE("geometry and params validation") {
  Geometry g;
  g.rx_pos = g.tx_pos;
  REQUIRE_THROWS_AS(g.validate(), InvalidInput);
  ChannelParams p;
  p.rician_k = -1.0;
  REQUIRE_THROWS_AS(p.validate(), InvalidInput);
  p = {};
  p.m = 0;
  REQUIRE_THROWS_AS(p.validate(), InvalidInput);
}

TEST_CASE("gen_rayleigh moments") {
  const auto h = gen_rayleigh(100, 100, 42);
  linalg::cplx mean = 0.0;
  double power = 0.0;
  for (const auto& z : h.data()) {
    mean += z;
    power += std::norm(z);
  }
  const double n = static_cast<double>(h.size());
  mean /= n;
  power /= n;
  // Standard error of the mean is 1/sqrt(n) per complex entry.
  CHECK(std::abs(mean) < 3.0 / std::sqrt(n) * std::sqrt(2.0));
  CHECK_THAT(power, WithinAbs(1.0, 0.05));
}

TEST_CASE("gen_rician with K = 0 is Rayleigh with unit variance") {
  const auto h = gen_rician(100, 100, 0.0, 7);
  double power = 0.0;
  for (const auto& z : h.data()) power += std::norm(z);
  CHECK_THAT(power / static_cast<double>(h.size()), WithinAbs(1.0, 0.05));
}

TEST_CASE("gen_rician with large K is nearly rank one") {
  const auto h = gen_rician(6, 10, 1e6, 3);
  const auto s = testutil::eigen_singular_values(h);
  CHECK(s[1] / s[0] < 1e-2);
}

TEST_CASE("generators are deterministic") {
  CHECK(gen_rayleigh(4, 16, 5) == gen_rayleigh(4, 16, 5));
  CHECK_FALSE(gen_rayleigh(4, 16, 5) == gen_rayleigh(4, 16, 6));
  CHECK(gen_rician(4, 16, 2.0, 5) == gen_rician(4, 16, 2.0, 5));
  ChannelParams p;
  p.direct_blocked = false;
  const auto a = build_channel_set({}, p, 9);
  const auto b = build_channel_set({}, p, 9);
  CHECK(a.f == b.f);
  CHECK(a.g == b.g);
  CHECK(*a.h_direct == *b.h_direct);
}

TEST_CASE("LoS component has unit-modulus entries and rank one") {
  const Geometry g;
  const auto los = los_component(4, 16, g.ris_pos, g.rx_pos, 0.1);
  for (const auto& z : los.data()) CHECK_THAT(std::abs(z), WithinAbs(1.0, 1e-14));
  const auto s = testutil::eigen_singular_values(los);
  CHECK(s[1] < 1e-10 * s[0]);
}

TEST_CASE("build_channel_set shapes, path loss and blocked direct link") {
  ChannelParams p;
  p.n_t = 3;
  p.n_r = 2;
  p.m = 8;
  const auto set = build_channel_set({}, p, 1);
  CHECK(set.f.rows() == 2);
  CHECK(set.f.cols() == 8);
  CHECK(set.g.rows() == 3);
  CHECK(set.g.cols() == 8);
  CHECK_FALSE(set.h_direct.has_value());
  CHECK(set.dof() == 2);

  // Path loss is a scalar amplitude on the whole matrix.
  ChannelParams raw = p;
  raw.apply_path_loss = false;
  const auto unscaled = build_channel_set({}, raw, 1);
  const Geometry geo;
  const double gf = path_loss(distance(geo.ris_pos, geo.rx_pos), 2.0);
  const double gg = path_loss(distance(geo.tx_pos, geo.ris_pos), 2.0);
  CHECK(linalg::frobenius_norm(set.f - unscaled.f * linalg::cplx{gf}) < 1e-15);
  CHECK(linalg::frobenius_norm(set.g - unscaled.g * linalg::cplx{gg}) < 1e-15);
}

TEST_CASE("direct link scales linearly in direct_scale") {
  ChannelParams p;
  p.direct_blocked = false;
  for (auto norm : {DirectNormalization::path_loss, DirectNormalization::reference}) {
    p.direct_normalization = norm;
    p.direct_scale = 1.0;
    const auto one = build_channel_set({}, p, 4);
    p.direct_scale = 7.5;
    const auto scaled = build_channel_set({}, p, 4);
    CHECK(linalg::frobenius_norm(*scaled.h_direct - *one.h_direct * linalg::cplx{7.5}) <
          1e-14 * linalg::frobenius_norm(*scaled.h_direct));
    CHECK(scaled.f == one.f);
  }
  p.direct_normalization = DirectNormalization::path_loss;
  p.direct_scale = 1.0;
  p.apply_path_loss = false;
  const auto raw = build_channel_set({}, p, 4);
  p.apply_path_loss = true;
  const auto pl = build_channel_set({}, p, 4);
  CHECK(linalg::frobenius_norm(*pl.h_direct - *raw.h_direct * linalg::cplx{4e-4}) < 1e-15);
}

TEST_CASE("reference normalization matches the entry power of F G^H") {
  ChannelParams p;
  p.direct_blocked = false;
  p.direct_normalization = DirectNormalization::reference;
  double ratio = 0.0;
  const int n = 400;
  for (int t = 0; t < n; ++t) {
    const auto set = build_channel_set({}, p, rng::derive_seed(77, t));
    const double hd = linalg::frobenius_norm(*set.h_direct);
    const double fg = linalg::frobenius_norm(set.f * linalg::adjoint(set.g));
    ratio += hd * hd / (fg * fg);
  }
  CHECK_THAT(ratio / n, WithinAbs(1.0, 0.1));
}

TEST_CASE("reference SNR") {
  ChannelSet unit;
  unit.f = linalg::ComplexMatrix{{1.0}};
  unit.g = linalg::ComplexMatrix{{1.0}};
  CHECK_THAT(reference_snr_db(unit, {1.0, 1.0, 1}), WithinAbs(0.0, 1e-14));
  CHECK_THAT(reference_snr_db(unit, {100.0, 1.0, 1}), WithinAbs(20.0, 1e-12));

  ChannelParams p;
  const auto set = build_channel_set({}, p, 12);
  const LinkBudget budget{3.0, 0.5, 4};
  const double fg = testutil::to_eigen(set.f * linalg::adjoint(set.g)).norm();
  const double hand = 10.0 * std::log10(3.0 * fg * fg / (4.0 * 4.0 * 0.5));
  CHECK_THAT(reference_snr_db(set, budget), WithinAbs(hand, 1e-12));

  // rho_for_reference_snr inverts reference_snr_db through rho = P / (N_t sigma^2).
  const double rho = rho_for_reference_snr(set, 10.0);
  const LinkBudget b2{rho * 4.0, 1.0, 4};
  CHECK_THAT(b2.rho(), WithinRel(rho, 1e-14));
  CHECK_THAT(reference_snr_db(set, b2), WithinAbs(10.0, 1e-10));
}

TEST_CASE("channel set validation") {
  ChannelSet s;
  s.f = linalg::ComplexMatrix(2, 4);
  s.g = linalg::ComplexMatrix(2, 5);
  REQUIRE_THROWS_AS(s.validate(), DimensionError);
  s.g = linalg::ComplexMatrix(3, 4);
  s.h_direct = linalg::ComplexMatrix(3, 3);
  REQUIRE_THROWS_AS(s.validate(), DimensionError);
  s.h_direct = linalg::ComplexMatrix(2, 3);
  REQUIRE_NOTHROW(s.validate());
}

TEST_CASE("derived seeds are distinct across trials and streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    seen.insert(rng::derive_seed(1, t));
    seen.insert(rng::derive_seed(rng::derive_seed(1, t), rng::Stream::forward));
  }
  CHECK(seen.size() == 2000);
}
