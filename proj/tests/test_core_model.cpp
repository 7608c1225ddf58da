#include <cmath>

#include "doctest.h"
#include "jcmtomo/core_model.hpp"
#include "oracles.hpp"

using namespace jcmtomo;

TEST_CASE("rabi frequency") {
  const JcmConfig resonant = JcmConfig::from_nbar(2.0, 50.0, 0.0);
  CHECK(rabi_frequency(0, resonant) == doctest::Approx(100.0).epsilon(1e-15));
  CHECK(rabi_frequency(1, JcmConfig::from_nbar(2.0, 50.0, 10.0)) ==
        doctest::Approx(std::sqrt(20100.0)).epsilon(1e-15));
  CHECK(rabi_frequency(1, JcmConfig::from_nbar(2.0, 50.0, 10.0)) == doctest::Approx(141.774).epsilon(1e-5));
  CHECK(rabi_frequency(0, JcmConfig::from_nbar(2.0, 50.0, 100.0)) == doctest::Approx(141.421).epsilon(1e-5));
}

TEST_CASE("rabi frequency increases with n and |delta|") {
  for (double d : {-100.0, -10.0, 0.0, 10.0, 100.0}) {
    const auto cfg = JcmConfig::from_nbar(1.0, 50.0, d);
    for (int n = 0; n < 40; ++n) CHECK(rabi_frequency(n + 1, cfg) > rabi_frequency(n, cfg));
  }
  for (int n = 0; n < 5; ++n)
    CHECK(rabi_frequency(n, JcmConfig::from_nbar(1.0, 50.0, -30.0)) >
          rabi_frequency(n, JcmConfig::from_nbar(1.0, 50.0, 20.0)));
}

TEST_CASE("poisson weights") {
  CHECK(poisson_weight(0, std::complex<double>(0.0)) == 1.0);
  CHECK(poisson_weight(3, std::complex<double>(0.0)) == 0.0);
  CHECK(poisson_weight(2, std::complex<double>(std::sqrt(2.0))) == doctest::Approx(std::exp(-2.0) * 2.0).epsilon(1e-14));
  CHECK(poisson_weight(2, std::complex<double>(std::sqrt(2.0))) == doctest::Approx(0.270671).epsilon(1e-6));
  // Only |alpha| matters.
  CHECK(poisson_weight(4, std::polar(1.3, 0.7)) == doctest::Approx(poisson_weight(4, 1.69)).epsilon(1e-14));

  for (double nbar : {0.5, 2.0, 5.0, 10.0, 30.0}) {
    const int N = auto_cutoff(nbar);
    CompensatedSum s;
    for (double w : poisson_weights(nbar, N + 1)) s.add(w);
    CHECK(s.value() >= 1.0 - 1e-12);
    CHECK(s.value() <= 1.0 + 4e-16);
  }
}

TEST_CASE("auto cutoff never under-approximates the tail") {
  CHECK(auto_cutoff(0.0) == 1);
  for (double nbar : {0.5, 2.0, 5.0, 10.0}) {
    const int N = auto_cutoff(nbar, 1e-12);
    CHECK(N == oracle::cutoff_by_search(nbar, 1e-12));
    CHECK(oracle::poisson_tail(nbar, N) < 1e-12);
  }
  CHECK(auto_cutoff(10.0) > auto_cutoff(2.0));
  CHECK_THROWS_AS(auto_cutoff(-1.0), InvalidArgument);
  CHECK_THROWS_AS(auto_cutoff(1.0, 0.0), InvalidArgument);
}

TEST_CASE("unit convention: 50 kHz over 20 us is one radian") {
  CHECK(50.0 * 20.0 * kPhaseScale == 1.0);
}

TEST_CASE("config validation") {
  JcmConfig cfg = JcmConfig::from_nbar(2.0, 50.0, 10.0);
  CHECK(cfg.nbar() == doctest::Approx(2.0));
  CHECK_NOTHROW(cfg.validate());
  cfg.g = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.g = 50.0;
  cfg.fock_cutoff = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.fock_cutoff = 12;
  CHECK(cfg.cutoff() == 12);
  CHECK_THROWS_AS(JcmConfig::from_nbar(-1.0, 50.0, 0.0), InvalidArgument);
}

TEST_CASE("bloch vectors") {
  CHECK(BlochVector{0.6, 0.0, 0.8}.is_physical());
  CHECK_FALSE(BlochVector{0.6, 0.1, 0.8}.is_physical());
  CHECK_THROWS_AS(BlochVector::physical(1.0, 1.0, 0.0), UnphysicalBloch);
  CHECK_NOTHROW(BlochVector::physical(0.0, 0.0, -1.0));
}

TEST_CASE("time grid") {
  const TimeGrid grid{0.0, 400.0, 4000};
  const auto pts = grid.points();
  REQUIRE(pts.size() == 4001);
  CHECK(pts[10] == doctest::Approx(1.0));
  CHECK(pts.back() == 400.0);
  CHECK(TimeGrid{5.0, 5.0, 3}.points().size() == 1);
  CHECK_THROWS_AS((TimeGrid{1.0, 0.0, 3}).validate(), InvalidArgument);
  CHECK_THROWS_AS((TimeGrid{0.0, 1.0, 0}).validate(), InvalidArgument);
}
