#include "fvsbl/estimator.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace fvsbl;

namespace {

CVector<double> scenario_measurement(const Scenario<double>& sc, const ArraySetup<double>& setup, std::uint64_t seed) {
  Rng rng = substream(seed, {1});
  return synthesize_measurement(sc.truth, sc.calibration, sc.config.noise_precision, setup.geometry, setup.grid, rng);
}

}  // namespace

TEST_SUITE("estimator") {

TEST_CASE("argument validation") {
  const auto setup = ArraySetup<double>::defaults();
  EstimatorConfig<double> cfg;
  CHECK_THROWS_AS(run_fvsbl(CVector<double>(CVector<double>::Ones(100)), setup.geometry, setup.grid, cfg), std::invalid_argument);
  CHECK_THROWS_AS(run_fvsbl(CVector<double>(CVector<double>::Zero(256)), setup.geometry, setup.grid, cfg), std::invalid_argument);
  cfg.max_iters = 0;
  CHECK_THROWS_AS(run_fvsbl(CVector<double>(CVector<double>::Ones(256)), setup.geometry, setup.grid, cfg), std::invalid_argument);
  cfg.max_iters = 10;
  cfg.tol = 0;
  CHECK_THROWS_AS(run_fvsbl(CVector<double>(CVector<double>::Ones(256)), setup.geometry, setup.grid, cfg), std::invalid_argument);
}

TEST_CASE("single strong path is resolved near the Cramer-Rao bound") {
  const auto setup = ArraySetup<double>::defaults();
  ScenarioLayout<double> layout;
  layout.distances_m = {5.3};
  layout.angles_deg = {72.4};
  layout.snrs_db = {40};

  // Deterministic bound from central differences of the atom, with the
  // complex amplitude projected out as a nuisance.
  const auto sc0 = default_scenario(0.0, 0, setup, layout);
  const auto& truth = sc0.truth.components[0];
  const CVector<double> a = atom(truth.theta, setup.geometry, setup.grid);
  auto bound = [&](double h, bool delay) {
    auto shifted = truth.theta;
    (delay ? shifted.tau : shifted.phi) += h;
    CVector<double> d = atom(shifted, setup.geometry, setup.grid);
    (delay ? shifted.tau : shifted.phi) -= 2 * h;
    d = (d - atom(shifted, setup.geometry, setup.grid)) / (2 * h);
    d -= a * (a.dot(d) / a.squaredNorm());
    return 1 / std::sqrt(2 * std::norm(truth.alpha) * d.squaredNorm());  // noise precision 1
  };
  const double crb_d = bound(1e-14, true) * setup.grid.c, crb_phi = rad2deg(bound(1e-7, false));
  CHECK(crb_d == doctest::Approx(1.17e-3).epsilon(0.02));
  CHECK(crb_phi == doctest::Approx(0.12).epsilon(0.05));

  int single = 0;
  double se_d = 0, se_phi = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto sc = default_scenario(0.0, seed, setup, layout);
    const auto res = run_fvsbl(scenario_measurement(sc, setup, seed), setup.geometry, setup.grid, {});
    REQUIRE(res.k_hat >= 1);
    CHECK(res.converged);
    CHECK(res.alpha_hat.size() == res.k_hat);
    CHECK(res.gamma_hat.size() == std::size_t(res.k_hat));
    CHECK(res.objective_trace.size() == std::size_t(res.iterations));
    // strongest estimate is the path
    Index best = 0;
    res.alpha_hat.cwiseAbs().maxCoeff(&best);
    const auto& th = res.thetas[std::size_t(best)];
    se_d += std::pow((th.tau - sc.truth.components[0].theta.tau) * setup.grid.c, 2);
    se_phi += std::pow(rad2deg(th.phi - sc.truth.components[0].theta.phi), 2);
    single += res.k_hat == 1;
  }
  CHECK(single >= 18);
  CHECK(std::sqrt(se_d / 20) < 1.5 * crb_d);
  CHECK(std::sqrt(se_phi / 20) < 1.5 * crb_phi);
}

TEST_CASE("phase order of one iteration") {
  const auto setup = ArraySetup<double>::defaults();
  const auto sc = default_scenario(0.05, 3, setup);
  const auto y = scenario_measurement(sc, setup, 3);
  EstimatorConfig<double> cfg;
  cfg.max_iters = 1;
  auto res = run_fvsbl(y, setup.geometry, setup.grid, cfg);
  REQUIRE(res.objective_trace.size() == 1);
  const std::vector<Phase> with_cal{Phase::Detection, Phase::DetectionUpdate, Phase::CalibrationWeights,
                                    Phase::ComponentUpdate, Phase::AmplitudeNoise};
  CHECK(res.objective_trace[0].phases == with_cal);
  CHECK(res.objective_trace[0].detected);
  CHECK(res.k_hat == 1);
  CHECK_FALSE(res.converged);

  cfg.calibration_enabled = false;
  res = run_fvsbl(y, setup.geometry, setup.grid, cfg);
  const std::vector<Phase> without_cal{Phase::Detection, Phase::DetectionUpdate, Phase::ComponentUpdate,
                                       Phase::AmplitudeNoise};
  CHECK(res.objective_trace[0].phases == without_cal);
  CHECK((res.w_hat - CVector<double>::Ones(4)).norm() == 0.0);
}

TEST_CASE("identical inputs give identical results") {
  const auto setup = ArraySetup<double>::defaults();
  const auto sc = default_scenario(0.1, 17, setup);
  const auto y = scenario_measurement(sc, setup, 17);
  const auto a = run_fvsbl(y, setup.geometry, setup.grid, EstimatorConfig<double>{});
  const auto b = run_fvsbl(y, setup.geometry, setup.grid, EstimatorConfig<double>{});
  CHECK(a.k_hat == b.k_hat);
  CHECK(a.thetas == b.thetas);
  CHECK(a.alpha_hat == b.alpha_hat);
  CHECK(a.w_hat == b.w_hat);
  CHECK(a.lambda_hat == b.lambda_hat);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("disabled calibration is the limit of a tightening weight prior") {
  const auto setup = ArraySetup<double>::defaults();
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto sc = default_scenario(0.01, seed, setup);
    const auto y = scenario_measurement(sc, setup, seed);
    EstimatorConfig<double> off;
    off.calibration_enabled = false;
    const auto ref = run_fvsbl(y, setup.geometry, setup.grid, off);
    double w_gap[2], other_gap[2];
    for (int i = 0; i < 2; ++i) {
      EstimatorConfig<double> tight;
      tight.weight_prior = WeightPrior<double>::uniform(4, 1.0, i == 0 ? 1e-8 : 1e-10);
      const auto r = run_fvsbl(y, setup.geometry, setup.grid, tight);
      REQUIRE(r.k_hat == ref.k_hat);
      w_gap[i] = (r.w_hat - ref.w_hat).cwiseAbs().maxCoeff();
      other_gap[i] = (r.alpha_hat - ref.alpha_hat).cwiseAbs().maxCoeff();
      for (std::size_t k = 0; k < r.thetas.size(); ++k) {
        other_gap[i] = std::max(other_gap[i], std::abs(r.thetas[k].phi - ref.thetas[k].phi));
        other_gap[i] = std::max(other_gap[i], std::abs(r.thetas[k].tau - ref.thetas[k].tau) * setup.grid.bandwidth());
      }
    }
    // the weights leak linearly in the prior variance
    CHECK(w_gap[0] < 1e-5);
    CHECK(w_gap[1] == doctest::Approx(w_gap[0] / 100).epsilon(0.05));
    CHECK(other_gap[0] < 1e-5);
    CHECK(other_gap[1] < 1e-5);
  }
}

TEST_CASE("calibration avoids the cardinality errors of the uncalibrated model") {
  const auto setup = ArraySetup<double>::defaults();
  int wrong_cal = 0, wrong_nocal = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto sc = default_scenario(0.1, 100 + seed, setup);
    const auto y = scenario_measurement(sc, setup, 100 + seed);
    EstimatorConfig<double> cfg;
    wrong_cal += run_fvsbl(y, setup.geometry, setup.grid, cfg).k_hat != 3;
    cfg.calibration_enabled = false;
    cfg.max_iters = 50;
    wrong_nocal += run_fvsbl(y, setup.geometry, setup.grid, cfg).k_hat != 3;
  }
  CHECK(wrong_cal <= 1);
  CHECK(wrong_nocal >= 5);
}

TEST_CASE("noise only input rarely produces detections") {
  const auto setup = ArraySetup<double>::defaults();
  int empty = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = substream(555, {seed});
    const auto y =
        synthesize_measurement<double>({}, {CVector<double>::Ones(4)}, 1.0, setup.geometry, setup.grid, rng);
    empty += run_fvsbl(y, setup.geometry, setup.grid, EstimatorConfig<double>{}).k_hat == 0;
  }
  CHECK(empty >= 18);
}

}
