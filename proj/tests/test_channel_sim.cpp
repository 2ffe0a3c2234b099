#include "fvsbl/channel_sim.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace fvsbl;

TEST_SUITE("channel_sim") {

TEST_CASE("zero deviation gives unit weights") {
  Rng rng(3);
  const auto cal = draw_calibration_weights(0.0, 4, rng);
  CHECK((cal.w - CVector<double>::Ones(4)).norm() == 0.0);
}

TEST_CASE("weight deviation moments") {
  Rng rng(11);
  const int draws = 100000;
  const auto cal = draw_calibration_weights(0.1, draws, rng);
  const Complex<double> mean = cal.w.mean();
  const double var = (cal.w.array() - mean).abs2().sum() / (draws - 1);
  CHECK(std::abs(mean - Complex<double>(1, 0)) < 0.01);
  CHECK(var == doctest::Approx(0.01).epsilon(0.1));
}

TEST_CASE("amplitude from component SNR") {
  SUBCASE("unit case") {
    // a single element and sample with a unit spectrum has a unit-norm atom
    const auto setup = testing::small_setup(1, 2);
    auto grid = setup.grid;
    grid.spectrum << 1.0, 0.0;
    CHECK(amplitude_magnitude_for_snr(0.0, {1.0, 0.0}, setup.geometry, grid, 1.0) == doctest::Approx(1.0));
  }
  SUBCASE("evaluation setup") {
    const auto setup = ArraySetup<double>::defaults();
    const double mag = amplitude_magnitude_for_snr(40.0, {0.5, 3e-9}, setup.geometry, setup.grid, 1.0);
    CHECK(mag * mag == doctest::Approx(1e4 / 256.0));
  }
}

TEST_CASE("measurement synthesis") {
  const auto setup = testing::small_setup(2, 8);
  const double inf = std::numeric_limits<double>::infinity();
  Rng rng(4);
  SUBCASE("empty noiseless") {
    const auto y = synthesize_measurement<double>({}, {CVector<double>::Ones(2)}, inf, setup.geometry, setup.grid, rng);
    CHECK(y.size() == 16);
    CHECK(y.norm() == 0.0);
  }
  SUBCASE("single atom") {
    GroundTruth<double> truth;
    const DispersionParams<double> th{0.8, 5e-9};
    truth.components.push_back({Complex<double>(0.3, -1.2), th});
    const auto y = synthesize_measurement(truth, {CVector<double>::Ones(2)}, inf, setup.geometry, setup.grid, rng);
    CHECK((y - Complex<double>(0.3, -1.2) * atom(th, setup.geometry, setup.grid)).norm() == 0.0);
  }
  SUBCASE("noise variance") {
    const auto big = ArraySetup<double>::defaults(1, 100000);
    const auto y = synthesize_measurement<double>({}, {CVector<double>::Ones(1)}, 4.0, big.geometry, big.grid, rng);
    const double var = y.squaredNorm() / double(y.size());
    CHECK(var == doctest::Approx(0.25).epsilon(0.05));
  }
}

TEST_CASE("default scenario") {
  const auto setup = ArraySetup<double>::defaults();
  const auto s0 = default_scenario(0.0, 9, setup);
  CHECK((s0.calibration.w - CVector<double>::Ones(4)).norm() == 0.0);
  REQUIRE(s0.truth.components.size() == 3);
  const double expect[3] = {40, 38, 35};
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& c = s0.truth.components[k];
    const double energy = atom(c.theta, setup.geometry, setup.grid).squaredNorm();
    CHECK(10 * std::log10(std::norm(c.alpha) * energy) == doctest::Approx(expect[k]));
  }
  const auto a = default_scenario(0.1, 42, setup), b = default_scenario(0.1, 42, setup);
  CHECK(a.calibration.w == b.calibration.w);
  CHECK(a.truth.amplitudes() == b.truth.amplitudes());
  CHECK(default_scenario(0.1, 43, setup).calibration.w != a.calibration.w);
}

TEST_CASE("substreams are independent of draw order") {
  Rng a = substream(1, {2, 3}), b = substream(1, {2, 3}), c = substream(1, {3, 2});
  CHECK(a() == b());
  Rng a2 = substream(1, {2, 3});
  CHECK(a2() != c());
}

}
