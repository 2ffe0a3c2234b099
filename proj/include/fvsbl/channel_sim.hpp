// SPDX-License-Identifier: Apache-2.0
//
// Synthetic measurements y = D(w) A(theta) alpha + n.

#pragma once

#include "fvsbl/array_model.hpp"

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <vector>

namespace fvsbl {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Independent generator for the work item identified by `keys`, so that a
/// trial draws the same numbers regardless of execution order.
inline Rng substream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(master_seed);
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k + 0x632BE59BD9B4E019ull));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return Rng(seq);
}

template <typename Real>
struct GroundTruth {
  struct Component {
    Complex<Real> alpha;
    DispersionParams<Real> theta;
  };
  std::vector<Component> components;

  std::vector<DispersionParams<Real>> thetas() const {
    std::vector<DispersionParams<Real>> t;
    for (const auto& c : components) t.push_back(c.theta);
    return t;
  }
  CVector<Real> amplitudes() const {
    CVector<Real> a(static_cast<Index>(components.size()));
    for (std::size_t k = 0; k < components.size(); ++k) a(static_cast<Index>(k)) = components[k].alpha;
    return a;
  }
};

template <typename Real>
struct CalibrationTruth {
  CVector<Real> w;
};

template <typename Real>
struct SimConfig {
  Real sigma_w_sim = 0;
  std::vector<Real> component_snrs_db;
  Real noise_precision = 1;  // +inf disables noise
  std::uint64_t seed = 0;
};

/// w_p = 1 + sigma (g1 + j g2) / sqrt(2), i.e. CN(1, sigma^2).
template <typename Real>
CalibrationTruth<Real> draw_calibration_weights(Real sigma_w_sim, Index num_elements, Rng& rng) {
  if (sigma_w_sim < 0) throw std::invalid_argument("draw_calibration_weights: sigma must be >= 0");
  std::normal_distribution<Real> normal;
  CalibrationTruth<Real> cal{CVector<Real>::Ones(num_elements)};
  const Real scale = sigma_w_sim / std::sqrt(Real(2));
  for (Index p = 0; p < num_elements; ++p) {
    const Real g1 = normal(rng);
    const Real g2 = normal(rng);
    cal.w(p) += Complex<Real>(scale * g1, scale * g2);
  }
  return cal;
}

/// Component SNR is the integrated quantity lambda |alpha|^2 ||atom||^2.
template <typename Real>
Real amplitude_magnitude_for_snr(Real snr_db, const DispersionParams<Real>& theta, const ArrayGeometry<Real>& geom,
                                 const SignalGrid<Real>& grid, Real noise_precision) {
  if (!(noise_precision > 0)) throw std::invalid_argument("amplitude_from_component_snr: lambda must be positive");
  const Real energy = atom(theta, geom, grid).squaredNorm();
  return std::sqrt(std::pow(Real(10), snr_db / Real(10)) / (noise_precision * energy));
}

template <typename Real>
Complex<Real> amplitude_from_component_snr(Real snr_db, const DispersionParams<Real>& theta,
                                           const ArrayGeometry<Real>& geom, const SignalGrid<Real>& grid,
                                           Real noise_precision, Rng& rng) {
  const Real mag = amplitude_magnitude_for_snr(snr_db, theta, geom, grid, noise_precision);
  std::uniform_real_distribution<Real> phase(-kPi<Real>, kPi<Real>);
  return std::polar(mag, phase(rng));
}

template <typename Real>
CVector<Real> synthesize_measurement(const GroundTruth<Real>& truth, const CalibrationTruth<Real>& cal,
                                     Real noise_precision, const ArrayGeometry<Real>& geom,
                                     const SignalGrid<Real>& grid, Rng& rng) {
  if (cal.w.size() != geom.size()) throw std::invalid_argument("synthesize_measurement: weight/geometry mismatch");
  const Index len = geom.size() * grid.num_samples;
  CVector<Real> clean = CVector<Real>::Zero(len);
  for (const auto& c : truth.components) clean += c.alpha * atom(c.theta, geom, grid);
  CVector<Real> y = apply_calibration<Real>(cal.w, clean);
  if (std::isinf(noise_precision)) return y;
  if (!(noise_precision > 0)) throw std::invalid_argument("synthesize_measurement: lambda must be positive");
  std::normal_distribution<Real> normal;
  const Real scale = std::sqrt(Real(0.5) / noise_precision);
  for (Index i = 0; i < len; ++i) {
    const Real re = normal(rng);
    const Real im = normal(rng);
    y(i) += Complex<Real>(scale * re, scale * im);
  }
  return y;
}

/// Geometry and signal defaults of the evaluation: 4-element
/// half-wavelength ULA, 60 GHz carrier, 1 GHz bandwidth, 64 flat bins.
template <typename Real>
struct ArraySetup {
  ArrayGeometry<Real> geometry;
  SignalGrid<Real> grid;

  static ArraySetup defaults(Index num_elements = 4, Index num_samples = 64, Real bandwidth = Real(1e9),
                             Real carrier = Real(60e9)) {
    return {ArrayGeometry<Real>::half_wavelength_ula(num_elements, carrier),
            SignalGrid<Real>::flat(num_samples, bandwidth, carrier)};
  }
};

/// Placement of the synthetic paths. Distances are c * tau in meters.
template <typename Real>
struct ScenarioLayout {
  std::vector<Real> distances_m{Real(3), Real(7), Real(12)};
  std::vector<Real> angles_deg{Real(40), Real(90), Real(130)};
  std::vector<Real> snrs_db{Real(40), Real(38), Real(35)};
  Real noise_precision = 1;
};

template <typename Real>
struct Scenario {
  GroundTruth<Real> truth;
  CalibrationTruth<Real> calibration;
  SimConfig<Real> config;
};

/// Draws amplitude phases and calibration weights from one generator
/// seeded by `seed`; placement and SNRs come from `layout`.
template <typename Real>
Scenario<Real> default_scenario(Real sigma_w_sim, std::uint64_t seed,
                                const ArraySetup<Real>& setup = ArraySetup<Real>::defaults(),
                                const ScenarioLayout<Real>& layout = {}) {
  if (layout.distances_m.size() != layout.angles_deg.size() || layout.distances_m.size() != layout.snrs_db.size())
    throw std::invalid_argument("default_scenario: layout vectors must have equal length");
  Rng rng = substream(seed, {0});
  Scenario<Real> s;
  s.config.sigma_w_sim = sigma_w_sim;
  s.config.component_snrs_db = layout.snrs_db;
  s.config.noise_precision = layout.noise_precision;
  s.config.seed = seed;
  for (std::size_t k = 0; k < layout.distances_m.size(); ++k) {
    DispersionParams<Real> theta{deg2rad(layout.angles_deg[k]), layout.distances_m[k] / setup.grid.c};
    const auto alpha =
        amplitude_from_component_snr(layout.snrs_db[k], theta, setup.geometry, setup.grid, layout.noise_precision, rng);
    s.truth.components.push_back({alpha, theta});
  }
  s.calibration = draw_calibration_weights(sigma_w_sim, setup.geometry.size(), rng);
  return s;
}

}  // namespace fvsbl
