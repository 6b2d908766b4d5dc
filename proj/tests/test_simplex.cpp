#include <cmath>
#include <numeric>

#include "doctest.h"
#include "qnpg/errors.hpp"
#include "qnpg/regularizer.hpp"
#include "qnpg/simplex.hpp"
#include "support.hpp"

using namespace qnpg;

namespace {

DecreasingMap inverse_square() {
  return {[](double y) { return 1.0 / (y * y); },
          [](double x) { return 1.0 / std::sqrt(x); }, 0.0};
}

DecreasingMap reciprocal() {
  return {[](double y) { return 1.0 / y; }, [](double x) { return 1.0 / x; },
          0.0};
}

MultiplierProblem problem_for(const Divergence& d, std::vector<double> mu,
                              std::vector<double> x) {
  return {std::move(mu), std::move(x), DecreasingMap::from_divergence(d)};
}

}  // namespace

TEST_CASE("bracket for a single reciprocal term contains its root") {
  const MultiplierProblem p{{1.0}, {0.0}, reciprocal()};
  const Bracket b = bracket(p);
  CHECK(b.lo <= 1.0);
  CHECK(b.hi >= 1.0);
  CHECK(solve_multiplier(p, 1e-14) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("equal shifts collapse the bracket") {
  const double a = 0.4;
  const MultiplierProblem p{{0.5, 0.5}, {a, a}, inverse_square()};
  const Bracket b = bracket(p);
  CHECK(b.lo == doctest::Approx(1.0 - a).epsilon(1e-15));
  CHECK(b.hi == doctest::Approx(1.0 - a).epsilon(1e-15));
  const auto root = solve_multiplier_detailed(p, 1e-14);
  CHECK(root.steps == 0);
  CHECK(root.root == doctest::Approx(1.0 - a).epsilon(1e-15));

  // The library's Hellinger generator is unscaled, so ψ⁻¹(1) = 2.
  const auto h = problem_for(Divergence::hellinger(), {0.5, 0.5}, {a, a});
  CHECK(solve_multiplier(h, 1e-14) == doctest::Approx(2.0 - a).epsilon(1e-15));
}

TEST_CASE("bracket endpoints straddle the target") {
  for (const auto& d : {Divergence::hellinger(), Divergence::reverse_kl(),
                        Divergence::alpha(-3.0), Divergence::kl()}) {
    CAPTURE(d.name());
    const auto p = problem_for(d, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {0.0, 1.0, 2.0});
    const Bracket b = bracket(p);
    CHECK(b.lo < b.hi);
    CHECK(multiplier_sum(p, b.hi) <= 1.0 + 1e-15);
    // With min x = 0, lo may sit on the domain edge c = L where g is
    // unbounded; step just inside.
    const double inside = d.domain_bound() == -INFINITY
                              ? b.lo
                              : std::max(b.lo, std::nextafter(0.0, 1.0));
    CHECK(multiplier_sum(p, inside) >= 1.0 - 1e-15);
  }
}

TEST_CASE("closed-form KL multiplier") {
  const auto p = problem_for(Divergence::kl(), {0.5, 0.5}, {0.0, 0.0});
  CHECK(solve_multiplier(p, 1e-15) == doctest::Approx(-1.0).epsilon(1e-15));

  // Σ μ exp(−c − x − 1) = 1 ⇒ c = log Σ μ e^{−x} − 1.
  const std::vector<double> mu = {0.2, 0.3, 0.5};
  const std::vector<double> x = {-4.0, 1.5, 30.0};
  double acc = 0.0;
  for (int i = 0; i < 3; ++i) acc += mu[i] * std::exp(-x[i]);
  const auto q = problem_for(Divergence::kl(), mu, x);
  CHECK(solve_multiplier(q, 1e-15) ==
        doctest::Approx(std::log(acc) - 1.0).epsilon(1e-13));
}

TEST_CASE("multiplier matches a grid scan") {
  for (const auto& d : {Divergence::hellinger(), Divergence::alpha(-3.0),
                        Divergence::reverse_kl()}) {
    CAPTURE(d.name());
    const auto p = problem_for(d, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {0.0, 1.0, 2.0});
    const double c = solve_multiplier(p, 1e-14);
    const Bracket b = bracket(p);
    const double lo = std::max(b.lo, 1e-9);
    const double scan = test::grid_scan_root(
        [&](double y) { return multiplier_sum(p, y) - 1.0; }, lo, b.hi, 400000);
    // Polish the scan with a few secant steps, independent of bisection.
    double x0 = scan - 1e-6, x1 = scan + 1e-6;
    for (int i = 0; i < 20; ++i) {
      const double f0 = multiplier_sum(p, x0) - 1.0;
      const double f1 = multiplier_sum(p, x1) - 1.0;
      if (f1 == f0) break;
      const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
      x0 = x1;
      x1 = x2;
    }
    CHECK(std::abs(scan - c) < 1e-5);
    CHECK(std::abs(x1 - c) < 1e-10);
    CHECK(std::abs(multiplier_sum(p, c) - 1.0) <= 1e-14);
  }
}

TEST_CASE("alpha(-3) single state row against the grid oracle") {
  // ψ(y) = (2y)^(−1/2); μ uniform over four actions.
  const std::vector<double> x = {0.3, 0.1, 2.0, 0.75};
  const auto p = problem_for(Divergence::alpha(-3.0), {0.25, 0.25, 0.25, 0.25}, x);
  auto g = [&](double c) {
    double s = 0.0;
    for (double xi : x) s += 0.25 / std::sqrt(2.0 * (c + xi));
    return s - 1.0;
  };
  const double scan = test::grid_scan_root(g, -0.1 + 1e-12, 5.0, 1000000);
  CHECK(solve_multiplier(p, 1e-14) == doctest::Approx(scan).epsilon(1e-6));
}

TEST_CASE("large shifts do not overflow") {
  // Shifts of the size seen at τ = 1e-3 (|Q|/τ ≈ 1e5).
  const auto p = problem_for(Divergence::kl(), {0.5, 0.5}, {-1e5, -1e5 + 3.0});
  const auto row = apply_update_row(p, 1e-14);
  CHECK(row[0] + row[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(row[0] / row[1] == doctest::Approx(std::exp(3.0)).epsilon(1e-12));
  for (const auto& d : {Divergence::reverse_kl(), Divergence::alpha(-3.0),
                        Divergence::hellinger()}) {
    const auto q = problem_for(d, {0.25, 0.25, 0.25, 0.25},
                               {-5e4, -5e4 + 10.0, -5e4 + 1e-3, 7e4});
    const auto r = apply_update_row(q, 1e-14);
    CHECK(std::accumulate(r.begin(), r.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("update rows") {
  SUBCASE("symmetric inputs give the uniform row") {
    for (const auto& d : {Divergence::kl(), Divergence::hellinger()}) {
      const auto row = apply_update_row(
          problem_for(d, {0.25, 0.25, 0.25, 0.25}, {1.0, 1.0, 1.0, 1.0}), 1e-14);
      for (double v : row) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
    }
  }
  SUBCASE("mass concentrates on the smaller shift") {
    for (const auto& d : {Divergence::kl(), Divergence::reverse_kl(),
                          Divergence::hellinger(), Divergence::alpha(-3.0)}) {
      CAPTURE(d.name());
      const auto row =
          apply_update_row(problem_for(d, {0.5, 0.5}, {0.0, 50.0}), 1e-14);
      CHECK(row[0] > 0.9);
      CHECK(row[1] > 0.0);
      CHECK(row[0] + row[1] == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
  SUBCASE("KL row equals the softmax") {
    const std::vector<double> mu = {0.1, 0.6, 0.3};
    const std::vector<double> x = {-1.0, 0.5, 2.0};
    const auto row = apply_update_row(problem_for(Divergence::kl(), mu, x), 1e-15);
    double z = 0.0;
    for (int i = 0; i < 3; ++i) z += mu[i] * std::exp(-x[i]);
    for (int i = 0; i < 3; ++i) {
      CHECK(row[i] == doctest::Approx(mu[i] * std::exp(-x[i]) / z).epsilon(1e-13));
    }
  }
}

TEST_CASE("invalid multiplier problems") {
  CHECK_THROWS_AS(bracket({{}, {}, reciprocal()}), DimensionError);
  CHECK_THROWS_AS(solve_multiplier({{0.5, 0.5}, {0.0}, reciprocal()}, 1e-12),
                  DimensionError);
  CHECK_THROWS_AS(solve_multiplier({{1.0, 0.0}, {0.0, 1.0}, reciprocal()}, 1e-12),
                  DomainError);
}

TEST_CASE("unreachable tolerance raises ConvergenceError") {
  const auto p = problem_for(Divergence::hellinger(), {0.3, 0.7}, {0.0, 1.3});
  try {
    solve_multiplier(p, 0.0);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.steps >= 1);
    CHECK(e.steps <= kMaxBisectionSteps);
    CHECK(e.residual < 1e-14);
  }
}

TEST_CASE("shifting every x moves the multiplier the other way") {
  const std::vector<double> x = {0.2, 1.1, 3.0};
  const std::vector<double> mu = {0.2, 0.5, 0.3};
  for (const auto& d : {Divergence::kl(), Divergence::reverse_kl(),
                        Divergence::hellinger(), Divergence::alpha(-3.0)}) {
    CAPTURE(d.name());
    const double c = solve_multiplier(problem_for(d, mu, x), 1e-15);
    for (double delta : {-0.15, 0.7, 25.0}) {
      std::vector<double> shifted = x;
      for (double& v : shifted) v += delta;
      const double c2 = solve_multiplier(problem_for(d, mu, shifted), 1e-15);
      CHECK(std::abs(c2 - (c - delta)) <= 1e-10 * std::max(1.0, std::abs(c)));
    }
  }
}

TEST_CASE("g decreases across the bracket") {
  for (const auto& d : {Divergence::kl(), Divergence::reverse_kl(),
                        Divergence::hellinger(), Divergence::alpha(-3.0)}) {
    CAPTURE(d.name());
    const auto p = problem_for(d, {0.25, 0.25, 0.5}, {0.5, 1.0, 4.0});
    const Bracket b = bracket(p);
    const double lo = b.lo + 1e-9 * (b.hi - b.lo);
    const double mid = 0.5 * (b.lo + b.hi);
    CHECK(multiplier_sum(p, b.hi) < multiplier_sum(p, mid));
    CHECK(multiplier_sum(p, lo) > multiplier_sum(p, mid));
  }
}

TEST_CASE("KL rows ignore a common shift") {
  const std::vector<double> mu = {0.25, 0.25, 0.25, 0.25};
  const std::vector<double> x = {0.0, 2.0, -1.0, 0.5};
  const auto base = apply_update_row(problem_for(Divergence::kl(), mu, x), 1e-15);
  std::vector<double> shifted = x;
  for (double& v : shifted) v += 1234.5;
  const auto row = apply_update_row(problem_for(Divergence::kl(), mu, shifted), 1e-15);
  for (int i = 0; i < 4; ++i) CHECK(row[i] == doctest::Approx(base[i]).epsilon(1e-14));
}
