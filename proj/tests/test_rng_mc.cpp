#include <doctest.h>

#include <cmath>
#include <set>

#include "scanstat/mc.hpp"
#include "scanstat/rng.hpp"

using namespace scanstat;

TEST_CASE("streams are deterministic and replicate-indexed") {
  RngStream a(42, "mod", 7);
  RngStream b(42, "mod", 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream c(42, "mod", 8);
  RngStream d(42, "other", 7);
  RngStream e(43, "mod", 7);
  RngStream f(42, "mod", 7);
  std::set<std::uint64_t> firsts{c.next_u64(), d.next_u64(), e.next_u64(), f.next_u64()};
  CHECK(firsts.size() == 4);
}

TEST_CASE("uniform, normal, exponential, poisson moments") {
  RngStream rng(7, "moments", 0);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, se = 0, sp = 0, sp2 = 0;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    su += u;
    double g = rng.normal();
    sn += g;
    sn2 += g * g;
    se += rng.exponential();
    double p = static_cast<double>(rng.poisson(3.7));
    sp += p;
    sp2 += p * p;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sn / n == doctest::Approx(0.0).epsilon(1).scale(5.0 / std::sqrt(n)));
  CHECK(std::abs(sn / n) < 5.0 / std::sqrt(n));
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(se / n == doctest::Approx(1.0).epsilon(0.02));
  double pm = sp / n;
  CHECK(pm == doctest::Approx(3.7).epsilon(0.01));
  CHECK(sp2 / n - pm * pm == doctest::Approx(3.7).epsilon(0.05));
}

TEST_CASE("large-mean poisson chunking") {
  RngStream rng(11, "poisson_large", 0);
  const int n = 4000;
  const double mean = 1234.5;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    double p = static_cast<double>(rng.poisson(mean));
    s += p;
    s2 += p * p;
  }
  double m = s / n;
  CHECK(std::abs(m - mean) < 5.0 * std::sqrt(mean / n));
  CHECK(s2 / n - m * m == doctest::Approx(mean).epsilon(0.1));
}

TEST_CASE("pairwise sum is exact on adversarial ordering") {
  std::vector<double> xs;
  for (int i = 0; i < 1000; ++i) {
    xs.push_back(1e16);
    xs.push_back(1.0);
    xs.push_back(-1e16);
  }
  double s = pairwise_sum(xs);
  CHECK(s == doctest::Approx(1000.0).epsilon(1e-9));
}

TEST_CASE("replicate driver is worker-count invariant") {
  auto body = [](std::uint64_t i, RngStream& rng, double* row) {
    double s = 0;
    for (int k = 0; k < 10; ++k) s += rng.uniform();
    row[0] = s + static_cast<double>(i);
  };
  std::vector<double> with1, with4;
  run_replicates(99, "workers", 5000, 1, 1, body, with1);
  run_replicates(99, "workers", 5000, 4, 1, body, with4);
  REQUIRE(with1.size() == with4.size());
  for (std::size_t i = 0; i < with1.size(); ++i) CHECK(with1[i] == with4[i]);
}

TEST_CASE("summarize_mean matches direct moments") {
  std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  McEstimate e = summarize_mean(xs, 5);
  CHECK(e.value == doctest::Approx(2.5));
  CHECK(e.se == doctest::Approx(std::sqrt((5.0 / 3.0) / 4.0)));
  CHECK(e.reps == 4);
  CHECK(e.seed == 5);
}
