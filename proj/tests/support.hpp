// SPDX-License-Identifier: Apache-2.0
//
// Small random instances shared by the unit tests.

#pragma once

#include "fvsbl/channel_sim.hpp"
#include "fvsbl/vsbl_core.hpp"

#include <random>
#include <vector>

namespace fvsbl::testing {

inline Complex<double> randn_c(Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n;
  return {scale * n(rng), scale * n(rng)};
}

inline CVector<double> randn_cvec(Index len, Rng& rng, double scale = 1.0) {
  CVector<double> v(len);
  for (Index i = 0; i < len; ++i) v(i) = randn_c(rng, scale);
  return v;
}

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

/// Half-wavelength ULA and flat grid of the given size at 60 GHz / 1 GHz.
inline ArraySetup<double> small_setup(Index p, Index n) { return ArraySetup<double>::defaults(p, n); }

inline DispersionParams<double> random_theta(Rng& rng, const SignalGrid<double>& grid) {
  return {uniform(rng, 0.2, kPi<double> - 0.2), uniform(rng, 0.05, 0.9) * grid.max_delay()};
}

/// Random state with `k` well-separated components and finite precisions.
inline PosteriorState<double> random_state(const ArraySetup<double>& setup, Index k, Rng& rng,
                                           bool zero_weight_variance = false) {
  auto s = PosteriorState<double>::empty(setup.geometry, setup.grid,
                                         WeightPrior<double>::uniform(setup.geometry.size()), uniform(rng, 0.5, 2.0));
  const double span = setup.grid.max_delay();
  for (Index i = 0; i < k; ++i) {
    DispersionParams<double> th{uniform(rng, 0.3, 2.8), span * (0.1 + 0.8 * (double(i) + uniform(rng, 0.2, 0.8)) / double(k))};
    s.add_component(th, uniform(rng, 0.1, 2.0), randn_c(rng));
  }
  for (Index p = 0; p < s.w_hat.size(); ++p) s.w_hat(p) = Complex<double>(1, 0) + randn_c(rng, 0.2);
  for (Index p = 0; p < s.var_w_hat.size(); ++p) s.var_w_hat(p) = zero_weight_variance ? 0.0 : uniform(rng, 0.0, 0.05);
  CVector<double> half = randn_cvec(k * k, rng, 0.1);
  CMatrix<double> l = Eigen::Map<CMatrix<double>>(half.data(), k, k);
  s.sigma_alpha = l * l.adjoint();
  return s;
}

}  // namespace fvsbl::testing
