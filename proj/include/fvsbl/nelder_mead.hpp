// SPDX-License-Identifier: Apache-2.0
//
// Nelder-Mead simplex minimization with an evaluation budget.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace fvsbl {

template <typename Real>
struct SimplexOptions {
  int max_evaluations = 200;
  Real x_tol = Real(1e-10);  // simplex diameter, in the caller's coordinates
  Real f_tol = Real(1e-14);  // relative spread of function values
};

template <typename Real>
struct SimplexResult {
  Eigen::Matrix<Real, Eigen::Dynamic, 1> x;
  Real value = std::numeric_limits<Real>::infinity();
  int evaluations = 0;
  bool budget_exhausted = false;
};

/// Minimizes `f` starting from `x0` with an axis-aligned initial simplex of
/// edge lengths `steps`. Non-finite values are treated as +inf. The result
/// is never worse than f(x0).
template <typename Real, typename F>
SimplexResult<Real> nelder_mead(F&& f, const Eigen::Matrix<Real, Eigen::Dynamic, 1>& x0,
                                const Eigen::Matrix<Real, Eigen::Dynamic, 1>& steps,
                                const SimplexOptions<Real>& opt = {}) {
  using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
  constexpr Real kReflect = 1, kExpand = 2, kContract = Real(0.5), kShrink = Real(0.5);
  const Eigen::Index n = x0.size();

  SimplexResult<Real> res;
  auto eval = [&](const Vec& x) {
    ++res.evaluations;
    const Real v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<Real>::infinity();
  };

  std::vector<Vec> pts(static_cast<std::size_t>(n + 1), x0);
  std::vector<Real> vals(static_cast<std::size_t>(n + 1));
  vals[0] = eval(x0);
  for (Eigen::Index i = 0; i < n; ++i) {
    pts[static_cast<std::size_t>(i + 1)](i) += steps(i);
    vals[static_cast<std::size_t>(i + 1)] = eval(pts[static_cast<std::size_t>(i + 1)]);
  }

  std::vector<std::size_t> order(pts.size());
  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];

    Real diameter = 0;
    for (const auto& p : pts) diameter = std::max(diameter, (p - pts[best]).template lpNorm<Eigen::Infinity>());
    const Real spread = std::abs(vals[worst] - vals[best]);
    const bool flat = std::isfinite(vals[worst]) &&
                      spread <= opt.f_tol * std::max(std::abs(vals[best]), std::numeric_limits<Real>::min());
    if (diameter <= opt.x_tol || flat) break;
    if (res.evaluations + 2 > opt.max_evaluations) {
      res.budget_exhausted = true;
      break;
    }

    Vec centroid = Vec::Zero(n);
    for (std::size_t i : order)
      if (i != worst) centroid += pts[i];
    centroid /= Real(n);

    const Vec xr = centroid + kReflect * (centroid - pts[worst]);
    const Real fr = eval(xr);
    if (fr < vals[best]) {
      const Vec xe = centroid + kExpand * (xr - centroid);
      const Real fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe, vals[worst] = fe;
      } else {
        pts[worst] = xr, vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr, vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Vec xc = outside ? Vec(centroid + kContract * (xr - centroid))
                           : Vec(centroid + kContract * (pts[worst] - centroid));
    const Real fc = eval(xc);
    if (fc < std::min(fr, vals[worst])) {
      pts[worst] = xc, vals[worst] = fc;
      continue;
    }
    if (res.evaluations + n > opt.max_evaluations) {
      res.budget_exhausted = true;
      break;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + kShrink * (pts[i] - pts[best]);
      vals[i] = eval(pts[i]);
    }
  }

  // The best vertex only ever improves, so the result is no worse than f(x0).
  const auto it = std::min_element(vals.begin(), vals.end());
  const auto idx = static_cast<std::size_t>(std::distance(vals.begin(), it));
  res.x = pts[idx];
  res.value = vals[idx];
  return res;
}

}  // namespace fvsbl
