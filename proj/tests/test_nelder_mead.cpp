#include "fvsbl/nelder_mead.hpp"

#include <doctest.h>

using fvsbl::nelder_mead;
using Vec = Eigen::VectorXd;

TEST_SUITE("nelder_mead") {

TEST_CASE("quadratic bowl") {
  auto f = [](const Vec& x) { return (x(0) - 1.5) * (x(0) - 1.5) + 3 * (x(1) + 0.25) * (x(1) + 0.25); };
  fvsbl::SimplexOptions<double> opt;
  opt.max_evaluations = 1000;
  const auto r = nelder_mead<double>(f, Vec::Zero(2), Vec::Ones(2), opt);
  CHECK(r.x(0) == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(r.x(1) == doctest::Approx(-0.25).epsilon(1e-6));
  CHECK_FALSE(r.budget_exhausted);
}

TEST_CASE("Rosenbrock with a generous budget") {
  auto f = [](const Vec& x) { return 100 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1 - x(0), 2); };
  fvsbl::SimplexOptions<double> opt;
  opt.max_evaluations = 5000;
  const auto r = nelder_mead<double>(f, Vec::Constant(2, -1.2), Vec::Constant(2, 0.5), opt);
  CHECK(r.value < 1e-10);
}

TEST_CASE("budget is respected and the start is never beaten by the result") {
  auto f = [](const Vec& x) { return std::sin(5 * x(0)) * std::cos(3 * x(1)) + 0.1 * x.squaredNorm(); };
  fvsbl::SimplexOptions<double> opt;
  opt.max_evaluations = 20;
  const Vec x0 = Vec::Constant(2, 0.3);
  const auto r = nelder_mead<double>(f, x0, Vec::Constant(2, 0.1), opt);
  CHECK(r.evaluations <= 20);
  CHECK(r.value <= f(x0));
}

TEST_CASE("non-finite values are treated as +inf") {
  auto f = [](const Vec& x) { return x(0) < 0 ? std::nan("") : (x(0) - 2) * (x(0) - 2); };
  fvsbl::SimplexOptions<double> opt;
  opt.max_evaluations = 500;
  const auto r = nelder_mead<double>(f, Vec::Constant(1, 0.5), Vec::Constant(1, -1.0), opt);
  CHECK(r.x(0) == doctest::Approx(2.0).epsilon(1e-6));
}

}
