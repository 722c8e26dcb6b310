#include <catch_amalgamated.hpp>
#include <cmath>
#include <numbers>

#include "bdris/channel.hpp"
#include "bdris/designs.hpp"
#include "bdris/harness/matrix_io.hpp"
#include "bdris/metrics.hpp"
#include "bdris/qstem.hpp"
#include "test_util.hpp"

using namespace bdris;
using namespace bdris::qstem;
using linalg::ComplexMatrix;
using linalg::cplx;
using linalg::RealMatrix;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

channel::ChannelSet seeded(std::size_t r, std::size_t m, std::uint64_t seed) {
  channel::ChannelSet c;
  c.f = channel::gen_rayleigh(r, m, rng::derive_seed(seed, rng::Stream::forward));
  c.g = channel::gen_rayleigh(r, m, rng::derive_seed(seed, rng::Stream::backward));
  return c;
}

RealMatrix random_pattern_b(std::size_t m, std::size_t q, std::uint64_t seed, double scale) {
  rng::ComplexGaussian gen(seed);
  RealMatrix b(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      if (!in_pattern(i, j, q)) continue;
      const double v = scale * gen().real();
      b(i, j) = v;
      b(j, i) = v;
    }
  }
  return b;
}

}  // namespace

TEST_CASE("element_count") {
  CHECK(element_count(2, 6) == 15);
  CHECK(element_count(7, 16) == 100);
  for (std::size_t m = 1; m <= 12; ++m) {
    CHECK(element_count(m, m) == m * (m + 1) / 2);
    CHECK(element_count(1, m) == 2 * m - 1);
  }
  // q = 2r - 1 for an r-stream system.
  for (std::size_t r = 1; r <= 4; ++r) {
    const std::size_t m = 16, q = 2 * r - 1;
    CHECK(element_count(q, m) == q * (q + 1) / 2 + (m - q) * (q + 1));
  }
  REQUIRE_THROWS_AS(element_count(0, 4), DomainError);
  REQUIRE_THROWS_AS(element_count(5, 4), DomainError);
}

TEST_CASE("selection matrix for M = 2, q = 1") {
  const auto sel = build_selection_matrix(1, 2);
  const RealMatrix r = sel.dense();
  CHECK(r.rows() == 4);
  CHECK(r.cols() == 3);
  CHECK(sel.nu() == element_count(1, 2));
  // vec(B) = [b11, b21, b12, b22]; the b21 column hits both off-diagonal rows.
  const RealMatrix want{{1, 0, 0}, {0, 1, 0}, {0, 1, 0}, {0, 0, 1}};
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(r(i, j) == want(i, j));
  }
}

TEST_CASE("selection matrix zero rows match the pattern") {
  for (std::size_t m : {4u, 6u, 9u}) {
    for (std::size_t q = 1; q <= m; ++q) {
      const auto sel = build_selection_matrix(q, m);
      const RealMatrix r = sel.dense();
      CHECK(sel.nu() == element_count(q, m));
      std::size_t zero_rows = 0;
      for (std::size_t row = 0; row < m * m; ++row) {
        double sum = 0.0;
        for (std::size_t p = 0; p < sel.nu(); ++p) sum += r(row, p);
        const std::size_t i = row % m, j = row / m;
        CHECK(sum == (in_pattern(i, j, q) ? 1.0 : 0.0));
        if (sum == 0.0) ++zero_rows;
      }
      CHECK(zero_rows == (m - q) * (m - q - 1));
    }
  }
  CHECK(build_selection_matrix(2, 6).dense().rows() == 36);
  const auto sel = build_selection_matrix(2, 6);
  std::size_t zero = 0;
  const RealMatrix r = sel.dense();
  for (std::size_t row = 0; row < 36; ++row) {
    double s = 0.0;
    for (std::size_t p = 0; p < sel.nu(); ++p) s += r(row, p);
    if (s == 0.0) ++zero;
  }
  CHECK(zero == 12);
  CHECK(build_selection_matrix(2, 6, 2).nu() == 13);
  REQUIRE_THROWS_AS(build_selection_matrix(2, 6, 5), DomainError);
}

TEST_CASE("susceptance matrix storage") {
  SusceptanceMatrix b(4, 1, 50.0);
  b.set(2, 0, 0.3);
  CHECK(b.at(0, 2) == 0.3);
  b.set(3, 3, -1.0);
  REQUIRE_THROWS_AS(b.set(2, 1, 0.1), InvalidInput);
  REQUIRE_NOTHROW(b.set(2, 1, 0.0));
  const RealMatrix d = b.dense();
  CHECK(d(0, 2) == d(2, 0));
  CHECK(b.nonzeros_in_pattern() == 7);
  RealMatrix asym(2, 2);
  asym(0, 1) = 1.0;
  REQUIRE_THROWS_AS(SusceptanceMatrix::from_dense(asym, 2, 50.0), InvalidInput);
  REQUIRE_THROWS_AS(SusceptanceMatrix(3, 1, 0.0), DomainError);
}

TEST_CASE("real frames need zero susceptance") {
  const StiefelFrame frame(ComplexMatrix{{1.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}});
  const auto res = synthesize_qstem(frame, 1);
  CHECK(res.residual < 1e-14);
  CHECK(res.exact);
  CHECK(linalg::frobenius_norm(res.b.dense()) < 1e-14);
}

TEST_CASE("q-stem reproduces the Max-Det frame with q = 2r - 1") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto c = seeded(2, 8, seed);
    const auto sol = designs::solve_maxdet(c);
    const auto res = synthesize_qstem(sol.frame, 3);
    INFO("seed " << seed);
    CHECK(res.residual < 1e-8);
    CHECK(res.exact);
    CHECK(res.nu == element_count(3, 8));
    const auto theta = b_to_theta(res.b);
    const ComplexMatrix q = sol.frame.q();
    CHECK(linalg::frobenius_norm(theta.theta * linalg::conj(q) - q) < 1e-7);
    CHECK_THAT(testutil::eigen_abs_det_r(metrics::equivalent_channel(c, theta.theta)),
               WithinRel(metrics::d_max(c), 1e-7));
    // Hard zeros outside the pattern.
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < 8; ++j) {
        if (!in_pattern(i, j, 3)) CHECK(res.b.at(i, j) == 0.0);
      }
    }
  }
}

TEST_CASE("q = 1 is not enough for two streams") {
  const auto c = seeded(2, 8, 4);
  const auto sol = designs::solve_maxdet(c);
  const auto res = synthesize_qstem(sol.frame, 1);
  CHECK(res.residual > 1e-3);
  CHECK_FALSE(res.exact);
}

TEST_CASE("q-stem residual is nonincreasing in q") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto c = seeded(4, 16, seed);
    const auto sol = designs::solve_maxdet(c);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t q = 1; q <= 10; ++q) {
      const double res = synthesize_qstem(sol.frame, q).residual;
      CHECK(res <= prev + 1e-10);
      prev = res;
    }
    CHECK(synthesize_qstem(sol.frame, 7).residual < 1e-8);
  }
}

TEST_CASE("b_to_theta examples") {
  const auto id = b_to_theta(SusceptanceMatrix(3, 1, 50.0));
  CHECK(linalg::frobenius_norm(id.theta - ComplexMatrix::identity(3)) < 1e-15);

  SusceptanceMatrix one(1, 1, 50.0);
  one.set(0, 0, 1.0 / 50.0);
  CHECK(std::abs(b_to_theta(one).theta(0, 0) - cplx{0.0, -1.0}) < 1e-14);

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto b = SusceptanceMatrix::from_dense(random_pattern_b(6, 2, seed, 0.05), 2, 50.0);
    const auto t = b_to_theta(b);
    CHECK(linalg::symmetry_defect(t.theta) < 1e-12);
    CHECK(designs::feasibility(t.theta).unitarity_defect < 1e-12);
  }
}

TEST_CASE("theta_to_b examples and round trip") {
  CHECK(linalg::frobenius_norm(theta_to_b(ComplexMatrix::identity(3)).dense()) < 1e-15);
  const auto b = theta_to_b(ComplexMatrix::identity(2) * cplx{0.0, -1.0});
  CHECK_THAT(b.at(0, 0), WithinAbs(1.0 / 50.0, 1e-15));
  CHECK_THAT(b.at(1, 0), WithinAbs(0.0, 1e-15));
  CHECK(b.q() == b.m());

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto t = designs::random_symmetric_unitary(6, seed).theta;
    if (detail::distance_to_minus_one(t) < 1e-3) continue;
    const auto back = b_to_theta(theta_to_b(t));
    CHECK(linalg::frobenius_norm(back.theta - t) < 1e-9);
  }
  const auto bb = SusceptanceMatrix::from_dense(random_pattern_b(5, 5, 3, 0.02), 5, 50.0);
  const auto again = theta_to_b(b_to_theta(bb).theta);
  CHECK(linalg::frobenius_norm(again.dense() - bb.dense()) < 1e-12);
}

TEST_CASE("Cayley singularity and phase fallback") {
  const ComplexMatrix minus = ComplexMatrix::identity(4) * cplx{-1.0};
  try {
    (void)theta_to_b(minus);
    FAIL("expected CayleySingularity");
  } catch (const CayleySingularity& e) {
    CHECK_THAT(e.suggested_phase(), WithinAbs(std::numbers::pi / 8.0, 1e-15));
  }
  const auto fb = theta_to_b_with_fallback(minus);
  CHECK(fb.applied_phase > 0.0);
  const auto back = b_to_theta(fb.b).theta;
  CHECK(linalg::frobenius_norm(back - minus * std::polar(1.0, fb.applied_phase)) < 1e-9);
  CHECK(theta_to_b_with_fallback(ComplexMatrix::identity(2)).applied_phase == 0.0);
  REQUIRE_THROWS_AS(theta_to_b(ComplexMatrix(2, 3)), DimensionError);
}

TEST_CASE("complete_to_unitary") {
  const auto c = seeded(2, 8, 17);
  const auto sol = designs::solve_maxdet(c);
  const auto full = complete_to_unitary(sol.frame);
  CHECK(designs::feasibility(full.theta).unitarity_defect < 1e-10);
  CHECK(linalg::symmetry_defect(full.theta) < 1e-10);
  const auto h0 = metrics::equivalent_channel(c, sol.theta.theta);
  const auto h1 = metrics::equivalent_channel(c, full.theta);
  CHECK(linalg::frobenius_norm(h1 - h0) < 1e-10 * linalg::frobenius_norm(h0));

  const auto square = designs::takagi_frame(designs::random_symmetric_unitary(4, 5).theta);
  CHECK(linalg::frobenius_norm(complete_to_unitary(square).theta - square.theta()) < 1e-10);
}

TEST_CASE("susceptance text round trip") {
  const auto c = seeded(2, 8, 19);
  const auto res = synthesize_qstem(designs::solve_maxdet(c).frame, 3);
  const std::string text = harness::format_susceptance(res.b);
  CHECK(text.rfind("# qstem q=3 M=8 Z0=50", 0) == 0);
  const auto back = harness::parse_susceptance(text);
  CHECK(back.q() == 3);
  CHECK(back.m() == 8);
  CHECK(back.z0() == 50.0);
  CHECK(back.dense() == res.b.dense());
}
