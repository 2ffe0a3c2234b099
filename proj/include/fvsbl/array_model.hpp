// SPDX-License-Identifier: Apache-2.0
//
// Array geometry, frequency sampling grid and the stacked wideband
// dictionary. Atoms are ordered antenna-major: entry p*N + n belongs to
// element p and frequency bin n.

#pragma once

#include "fvsbl/types.hpp"

#include <cmath>
#include <vector>

namespace fvsbl {

template <typename Real>
struct ArrayGeometry {
  std::vector<Vector2<Real>> positions;

  Index size() const { return static_cast<Index>(positions.size()); }

  void validate() const {
    if (positions.empty()) throw std::invalid_argument("ArrayGeometry: at least one element required");
    for (const auto& r : positions) {
      if (!r.allFinite()) throw std::invalid_argument("ArrayGeometry: non-finite element position");
    }
  }

  /// Uniform linear array along the x-axis with spacing c / (2 f_c).
  static ArrayGeometry half_wavelength_ula(Index num_elements, Real carrier, Real c = kSpeedOfLight<Real>) {
    if (num_elements < 1) throw std::invalid_argument("ArrayGeometry: num_elements must be >= 1");
    ArrayGeometry g;
    const Real spacing = c / (Real(2) * carrier);
    for (Index p = 0; p < num_elements; ++p) g.positions.emplace_back(Real(p) * spacing, Real(0));
    return g;
  }
};

template <typename Real>
struct SignalGrid {
  Index num_samples = 0;  // N, even
  Real delta = 0;         // frequency spacing [Hz]
  Real carrier = 0;       // f_c [Hz]
  Real c = kSpeedOfLight<Real>;
  CVector<Real> spectrum;  // s_f, length N

  Real bandwidth() const { return Real(num_samples) * delta; }
  /// Unambiguous delay range is [0, 1/delta).
  Real max_delay() const { return Real(1) / delta; }

  /// Baseband frequencies -N/2*delta, ..., (N/2-1)*delta.
  RVector<Real> frequencies() const {
    RVector<Real> f(num_samples);
    for (Index n = 0; n < num_samples; ++n) f(n) = Real(n - num_samples / 2) * delta;
    return f;
  }

  void validate() const {
    if (num_samples <= 0 || num_samples % 2 != 0)
      throw std::invalid_argument("SignalGrid: N must be a positive even integer");
    if (!(delta > 0) || !std::isfinite(delta)) throw std::invalid_argument("SignalGrid: delta must be positive");
    if (!(carrier > 0) || !(c > 0)) throw std::invalid_argument("SignalGrid: carrier and c must be positive");
    if (spectrum.size() != num_samples) throw std::invalid_argument("SignalGrid: spectrum length must equal N");
    if (!(spectrum.norm() > 0)) throw std::invalid_argument("SignalGrid: spectrum must be non-zero");
  }

  /// Flat unit transmit spectrum over `bandwidth` with N samples.
  static SignalGrid flat(Index num_samples, Real bandwidth, Real carrier, Real c = kSpeedOfLight<Real>) {
    SignalGrid g;
    g.num_samples = num_samples;
    g.delta = bandwidth / Real(num_samples);
    g.carrier = carrier;
    g.c = c;
    g.spectrum = CVector<Real>::Ones(num_samples);
    g.validate();
    return g;
  }
};

/// Angle of arrival (radians, measured from the array axis) and delay (s).
template <typename Real>
struct DispersionParams {
  Real phi = 0;
  Real tau = 0;

  bool operator==(const DispersionParams&) const = default;
};

/// Array response a_p(phi) = exp(-j 2 pi f_c / c * r_p^T u(phi)), u = [cos, sin].
template <typename Real>
CVector<Real> steering_vector(Real phi, const ArrayGeometry<Real>& geom, const SignalGrid<Real>& grid) {
  if (!std::isfinite(phi)) throw std::invalid_argument("steering_vector: non-finite angle");
  const Real k0 = Real(2) * kPi<Real> * grid.carrier / grid.c;
  const Vector2<Real> u(std::cos(phi), std::sin(phi));
  CVector<Real> a(geom.size());
  for (Index p = 0; p < geom.size(); ++p) a(p) = std::polar(Real(1), -k0 * geom.positions[p].dot(u));
  return a;
}

/// Temporal response exp(-j 2 pi f tau) over the baseband grid.
template <typename Real>
CVector<Real> temporal_vector(Real tau, const SignalGrid<Real>& grid) {
  if (!std::isfinite(tau)) throw std::invalid_argument("temporal_vector: non-finite delay");
  CVector<Real> v(grid.num_samples);
  for (Index n = 0; n < grid.num_samples; ++n) {
    const Real f = Real(n - grid.num_samples / 2) * grid.delta;
    v(n) = std::polar(Real(1), Real(-2) * kPi<Real> * f * tau);
  }
  return v;
}

/// Stacked atom a(phi) kron (diag(s_f) a_tau(tau)), length P*N.
template <typename Real>
CVector<Real> atom(const DispersionParams<Real>& theta, const ArrayGeometry<Real>& geom,
                   const SignalGrid<Real>& grid) {
  const CVector<Real> a = steering_vector(theta.phi, geom, grid);
  const CVector<Real> u = grid.spectrum.cwiseProduct(temporal_vector(theta.tau, grid));
  const Index n = grid.num_samples;
  CVector<Real> out(a.size() * n);
  for (Index p = 0; p < a.size(); ++p) out.segment(p * n, n) = a(p) * u;
  return out;
}

/// Dictionary A(theta). The per-antenna blocks T_p are row slices of the
/// stacked matrix, so both views agree by construction.
template <typename Real>
struct Dictionary {
  CMatrix<Real> columns;  // (P*N) x K
  std::vector<DispersionParams<Real>> thetas;
  Index num_elements = 0;
  Index num_samples = 0;

  Index size() const { return columns.cols(); }

  auto block(Index p) const { return columns.middleRows(p * num_samples, num_samples); }
};

template <typename Real>
Dictionary<Real> build_dictionary(const std::vector<DispersionParams<Real>>& thetas, const ArrayGeometry<Real>& geom,
                                  const SignalGrid<Real>& grid) {
  Dictionary<Real> d;
  d.num_elements = geom.size();
  d.num_samples = grid.num_samples;
  d.thetas = thetas;
  d.columns.resize(geom.size() * grid.num_samples, static_cast<Index>(thetas.size()));
  for (std::size_t k = 0; k < thetas.size(); ++k) d.columns.col(static_cast<Index>(k)) = atom(thetas[k], geom, grid);
  return d;
}

/// Blockwise scaling diag(w kron 1_N) x without forming the diagonal matrix.
template <typename Real, typename Derived>
CVector<Real> apply_calibration(const CVector<Real>& w, const Eigen::MatrixBase<Derived>& x) {
  const Index num_elements = w.size();
  if (num_elements == 0 || x.size() % num_elements != 0)
    throw std::invalid_argument("apply_calibration: length of x must be a multiple of length of w");
  const Index n = x.size() / num_elements;
  CVector<Real> out(x.size());
  for (Index p = 0; p < num_elements; ++p) out.segment(p * n, n) = w(p) * x.segment(p * n, n);
  return out;
}

}  // namespace fvsbl
