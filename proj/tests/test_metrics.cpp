#include <catch_amalgamated.hpp>
#include <cmath>
#include <numbers>

#include "bdris/channel.hpp"
#include "bdris/designs.hpp"
#include "bdris/metrics.hpp"
#include "test_util.hpp"

using namespace bdris;
using namespace bdris::metrics;
using linalg::ComplexMatrix;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ComplexMatrix diag12() { return ComplexMatrix{{1.0, 0.0}, {0.0, 2.0}}; }

channel::ChannelSet seeded(std::size_t nr, std::size_t nt, std::size_t m, std::uint64_t seed) {
  channel::ChannelSet c;
  c.f = channel::gen_rayleigh(nr, m, rng::derive_seed(seed, rng::Stream::forward));
  c.g = channel::gen_rayleigh(nt, m, rng::derive_seed(seed, rng::Stream::backward));
  return c;
}

}  // namespace

TEST_CASE("achievable_rate examples") {
  CHECK_THAT(achievable_rate(ComplexMatrix::identity(2), 1.0), WithinAbs(2.0, 1e-14));
  CHECK_THAT(achievable_rate(ComplexMatrix(2, 2), 1.0), WithinAbs(0.0, 1e-14));
  CHECK_THAT(achievable_rate(diag12(), 1.0), WithinAbs(std::log2(10.0), 1e-13));
  REQUIRE_THROWS_AS(achievable_rate(diag12(), 0.0), DomainError);
}

TEST_CASE("achievable_rate uses the smaller Gram for rectangular channels") {
  const ComplexMatrix h = channel::gen_rayleigh(2, 5, 3);
  Eigen::MatrixXcd e = testutil::to_eigen(h);
  const double rho = 2.5;
  const Eigen::MatrixXcd gram = Eigen::MatrixXcd::Identity(2, 2) + rho * e * e.adjoint();
  CHECK_THAT(achievable_rate(h, rho), WithinAbs(std::log2(std::abs(gram.determinant())), 1e-12));
  CHECK_THAT(achievable_rate(linalg::adjoint(h), rho), WithinAbs(achievable_rate(h, rho), 1e-12));
}

TEST_CASE("achievable_rate is monotone in rho and in the singular values") {
  const ComplexMatrix h = channel::gen_rayleigh(3, 3, 8);
  double prev = 0.0;
  for (double rho : {0.01, 0.1, 1.0, 10.0, 100.0}) {
    const double r = achievable_rate(h, rho);
    CHECK(r >= prev);
    prev = r;
  }
  std::vector<double> s{3.0, 2.0, 1.0};
  const double base = rate_from_singular_values(s, 2.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto t = s;
    t[i] *= 1.1;
    CHECK(rate_from_singular_values(t, 2.0) > base);
  }
}

TEST_CASE("rate_decomposition examples") {
  const auto d = rate_decomposition(diag12(), 4.0);
  CHECK_THAT(d.r_log_rho, WithinAbs(4.0, 1e-14));
  CHECK_THAT(d.log_det_gram, WithinAbs(2.0, 1e-14));
  CHECK_THAT(d.error_term, WithinAbs(std::log2(1.25) + std::log2(1.0625), 1e-14));
  CHECK_THAT(d.error_term, WithinAbs(0.40939, 1e-5));
  CHECK_THAT(d.total(), WithinAbs(std::log2(85.0), 1e-13));

  const auto id = rate_decomposition(ComplexMatrix::identity(3), 1.0);
  CHECK_THAT(id.r_log_rho, WithinAbs(0.0, 1e-15));
  CHECK_THAT(id.log_det_gram, WithinAbs(0.0, 1e-14));
  CHECK_THAT(id.error_term, WithinAbs(3.0, 1e-14));

  REQUIRE_THROWS_AS(rate_decomposition(ComplexMatrix{{1.0, 0.0}, {0.0, 0.0}}, 1.0), DomainError);
}

TEST_CASE("rate_decomposition identity on random channels") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const ComplexMatrix h = channel::gen_rayleigh(1 + seed % 4, 1 + (seed * 3) % 5, seed);
    for (double rho : {0.1, 1.0, 1e3}) {
      const auto d = rate_decomposition(h, rho);
      CHECK_THAT(d.total(), WithinAbs(achievable_rate(h, rho), 1e-10));
      CHECK(error_term_bound(h, rho) >= d.error_term);
    }
  }
}

TEST_CASE("error_term_bound examples") {
  CHECK_THAT(error_term_bound(diag12(), 1.0), WithinAbs(2.0 / std::numbers::ln2, 1e-13));
  CHECK_THAT(error_term_bound(diag12(), 1.0), WithinAbs(2.88539, 1e-5));
  // Actual error term at rho = 1: log2(2) + log2(1.25).
  const double actual = rate_decomposition(diag12(), 1.0).error_term;
  CHECK_THAT(actual, WithinAbs(1.0 + std::log2(1.25), 1e-14));
  CHECK(error_term_bound(diag12(), 1.0) >= actual);
  CHECK_THAT(error_term_bound(diag12(), 10.0), WithinRel(error_term_bound(diag12(), 1.0) / 10.0, 1e-14));
  CHECK_THAT(error_term_bound(ComplexMatrix::identity(3), 1.0), WithinAbs(3.0 / std::numbers::ln2, 1e-13));
  REQUIRE_THROWS_AS(error_term_bound(ComplexMatrix(2, 2), 1.0), DomainError);
}

TEST_CASE("rate_gap_bound examples") {
  const std::vector<double> f{2.0, 1.0}, g{3.0, 1.0};
  CHECK_THAT(rate_gap_bound(f, g, 1.0), WithinAbs(2.0 * std::log2(72.0 / 37.0), 1e-13));
  CHECK_THAT(rate_gap_bound(f, g, 1.0), WithinAbs(1.92094, 1e-5));
  const std::vector<double> flat{1.5, 1.5, 1.5};
  CHECK_THAT(rate_gap_bound(flat, flat, 3.0), WithinAbs(0.0, 1e-14));
  REQUIRE_THROWS_AS(rate_gap_bound(std::vector<double>{1.0, 0.0}, g, 1.0), DomainError);
  REQUIRE_THROWS_AS(rate_gap_bound(f, std::vector<double>{1.0}, 1.0), DimensionError);
}

TEST_CASE("rate_gap_bound matches the literal formula at high rho") {
  const std::vector<double> f{2.0, 0.5}, g{1.5, 0.25};
  for (double rho : {1e-2, 1.0, 1e4}) {
    const double a1 = 4.0 * 2.25, ar = 0.25 * 0.0625;
    const double literal = 2.0 * std::log2((1.0 + rho * ar) * a1 / ((1.0 + rho * a1) * ar));
    CHECK_THAT(rate_gap_bound(f, g, rho), WithinRel(literal, 1e-12));
  }
}

TEST_CASE("d_max examples") {
  channel::ChannelSet c;
  c.f = ComplexMatrix{{2.0, 0.0}};
  c.g = ComplexMatrix{{3.0, 0.0}};
  CHECK_THAT(d_max(c), WithinAbs(6.0, 1e-14));
  c.f = ComplexMatrix::identity(2);
  c.g = ComplexMatrix::identity(2);
  CHECK_THAT(d_max(c), WithinAbs(1.0, 1e-14));

  const auto s = seeded(4, 4, 16, 5);
  const auto sf = testutil::eigen_singular_values(s.f);
  const auto sg = testutil::eigen_singular_values(s.g);
  double oracle = 1.0;
  for (std::size_t i = 0; i < 4; ++i) oracle *= sf[i] * sg[i];
  CHECK_THAT(d_max(s), WithinRel(oracle, 1e-10));
}

TEST_CASE("equivalent_channel examples") {
  auto c = seeded(3, 2, 6, 1);
  CHECK(linalg::frobenius_norm(equivalent_channel(c, ComplexMatrix(6, 6))) == 0.0);
  CHECK(linalg::frobenius_norm(equivalent_channel(c, ComplexMatrix::identity(6)) - c.f * linalg::adjoint(c.g)) <
        1e-14);
  c.h_direct = channel::gen_rayleigh(3, 2, 77);
  const ComplexMatrix theta = designs::random_symmetric_unitary(6, 3).theta;
  const ComplexMatrix want = *c.h_direct - c.f * theta * linalg::adjoint(c.g);
  CHECK(linalg::frobenius_norm(equivalent_channel(c, theta, std::numbers::pi) - want) < 1e-14);
  REQUIRE_THROWS_AS(equivalent_channel(c, ComplexMatrix::identity(5)), DimensionError);
}

TEST_CASE("abs_det is sqrt det of the smaller Gram") {
  const ComplexMatrix h = channel::gen_rayleigh(2, 4, 13);
  const Eigen::MatrixXcd e = testutil::to_eigen(h);
  const double want = std::sqrt(std::abs((e * e.adjoint()).determinant()));
  CHECK_THAT(abs_det(h), WithinRel(want, 1e-12));
  CHECK_THAT(abs_det(linalg::adjoint(h)), WithinRel(want, 1e-12));
  const ComplexMatrix sq = channel::gen_rayleigh(3, 3, 14);
  CHECK_THAT(abs_det(sq), WithinRel(std::abs(testutil::to_eigen(sq).determinant()), 1e-12));
}

TEST_CASE("evaluate fills a consistent record") {
  const auto c = seeded(2, 2, 8, 21);
  const auto sol = designs::solve_maxdet(c);
  const auto rec = evaluate(c, sol.theta.theta, 10.0);
  CHECK(rec.rate_bits >= 0.0);
  CHECK(std::is_sorted(rec.sigma_h.rbegin(), rec.sigma_h.rend()));
  CHECK_THAT(rec.abs_det, WithinRel(rec.d_max, 1e-8));
  const auto lead = leading_singular_values(c);
  CHECK_THAT(rec.rate_gap_bound_bits, WithinRel(rate_gap_bound(lead.f, lead.g, 10.0), 1e-14));
  CHECK_THAT(rec.error_term_bits, WithinAbs(rate_decomposition(equivalent_channel(c, sol.theta.theta), 10.0).error_term, 1e-12));
}
