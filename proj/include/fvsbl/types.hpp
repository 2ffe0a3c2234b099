// SPDX-License-Identifier: Apache-2.0
//
// Shared dense types and error classes.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace fvsbl {

using Index = Eigen::Index;

template <typename Real>
using Complex = std::complex<Real>;

template <typename Real>
using CVector = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, 1>;

template <typename Real>
using CMatrix = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

template <typename Real>
using Vector2 = Eigen::Matrix<Real, 2, 1>;

template <typename Real>
inline constexpr Real kSpeedOfLight = Real(299792458.0);

template <typename Real>
inline constexpr Real kPi = Real(3.141592653589793238462643383279502884L);

/// Raised when the amplitude system matrix cannot be factorized even after
/// diagonal loading (e.g. two identical dictionary atoms with vanishing
/// prior precision).
class DegenerateGeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a leave-one-out detection statistic has a non-positive
/// variance term s, which happens for near-duplicate components.
class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Real>
inline Real deg2rad(Real deg) { return deg * kPi<Real> / Real(180); }

template <typename Real>
inline Real rad2deg(Real rad) { return rad * Real(180) / kPi<Real>; }

}  // namespace fvsbl
