#include <doctest.h>

#include <liyau/error.hpp>
#include <liyau/exponents.hpp>

#include <cmath>

using namespace liyau;
using namespace liyau::exponents;

TEST_CASE("exponent table values")
{
  const auto t1 = exponent_table(1);
  CHECK(t1.p_star == 8.0);
  CHECK(std::isinf(t1.p_bidaut_veron));
  CHECK(std::isinf(t1.p_sobolev));
  CHECK(t1.p_fujita == 3.0);

  const auto t2 = exponent_table(2);
  CHECK(t2.p_star == doctest::Approx(2.0 + std::sqrt(5.0)).epsilon(1e-14));
  CHECK(t2.p_star == doctest::Approx(4.23607).epsilon(1e-6));
  CHECK(t2.p_bidaut_veron == 8.0);
  CHECK(t2.p_fujita == 2.0);
  CHECK(std::isinf(t2.p_sobolev));

  const auto t3 = exponent_table(3);
  CHECK(t3.p_sobolev == 5.0);
  CHECK(t3.p_star == doctest::Approx((5.0 + std::sqrt(33.0)) / 4.0).epsilon(1e-14));
  CHECK(t3.p_star == doctest::Approx(2.68614).epsilon(1e-6));
  CHECK(t3.p_bidaut_veron == 3.75);

  CHECK_THROWS_AS(exponent_table(0), InvalidArgument);
}

TEST_CASE("table invariants for 2 <= N <= 10")
{
  double previous = exponent_table(1).p_star;
  for (int N = 1; N <= 10; ++N)
    {
      CAPTURE(N);
      const auto t = exponent_table(N);
      CHECK(t.p_fujita == doctest::Approx(1.0 + 2.0 / N));
      CHECK(t.p_fujita > 1.0);
      CHECK(t.p_star > 1.0);
      if (N >= 2)
        {
          CHECK(t.p_fujita < t.p_star);
          CHECK(t.p_star < t.p_sobolev);
          CHECK(t.p_star < previous);
          // landmark of the case analysis
          CHECK((N + 2 + std::sqrt(N * N + 12.0 * N + 4)) / (2.0 * N) < 1.0 + 4.0 / N);
        }
      previous = t.p_star;
    }
}

TEST_CASE("classification with half-open intervals")
{
  CHECK(classify(3, 1.5) == Regime::below_fujita);
  CHECK(classify(3, 5.0) == Regime::sobolev_and_above);
  CHECK(classify(2, 3.0) == Regime::fujita_to_star);
  CHECK(classify(3, 3.0) == Regime::star_to_sobolev);
  CHECK(classify(3, 5.0 / 3.0) == Regime::fujita_to_star);
  CHECK(classify(3, exponent_table(3).p_star) == Regime::star_to_sobolev);
  // no finite Sobolev exponent in low dimension
  CHECK(classify(1, 100.0) == Regime::star_to_sobolev);
  CHECK(to_string(Regime::fujita_to_star) == "fujita_to_star");
  CHECK_THROWS_AS(classify(3, 1.0), InvalidArgument);
  CHECK_THROWS_AS(classify(3, 0.5), InvalidArgument);
}
