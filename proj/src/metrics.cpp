// SPDX-License-Identifier: Apache-2.0

#include "fvsbl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace fvsbl {

void MetricsConfig::validate() const {
  if (!(cutoff_tau_d > 0) || !(cutoff_phi > 0)) throw std::invalid_argument("MetricsConfig: cutoffs must be positive");
  if (!(ospa_order >= 1)) throw std::invalid_argument("MetricsConfig: OSPA order must be >= 1");
}

// Shortest augmenting path (Jonker-Volgenant style potentials), O(n^2 m).
std::vector<int> hungarian_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  if (n > m) throw std::invalid_argument("hungarian_assignment: rows must not exceed columns");
  if (n == 0) return {};
  constexpr double inf = std::numeric_limits<double>::infinity();

  // 1-based potentials; match[j] is the row assigned to column j.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<int> match(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j)
    if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

double ospa(std::span<const double> estimates, std::span<const double> truths, double cutoff, double order) {
  if (!(cutoff > 0)) throw std::invalid_argument("ospa: cutoff must be positive");
  if (!(order >= 1)) throw std::invalid_argument("ospa: order must be >= 1");
  const bool est_smaller = estimates.size() <= truths.size();
  const auto small = est_smaller ? estimates : truths;
  const auto large = est_smaller ? truths : estimates;
  const auto n = large.size();
  if (n == 0) return 0.0;

  Eigen::MatrixXd cost(small.size(), large.size());
  for (std::size_t i = 0; i < small.size(); ++i)
    for (std::size_t j = 0; j < large.size(); ++j)
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::pow(std::min(std::abs(small[i] - large[j]), cutoff), order);

  double total = 0;
  const auto assignment = hungarian_assignment(cost);
  for (std::size_t i = 0; i < assignment.size(); ++i) total += cost(static_cast<Eigen::Index>(i), assignment[i]);
  total += std::pow(cutoff, order) * static_cast<double>(n - small.size());
  return std::pow(total / static_cast<double>(n), 1.0 / order);
}

double wrap_degrees(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r <= -180.0) r += 360.0;
  if (r > 180.0) r -= 360.0;
  return r;
}

WeightRmse rmse_weights(std::span<const std::complex<double>> w_hat, std::span<const std::complex<double>> w_true,
                        bool calibrated) {
  if (w_hat.size() != w_true.size()) throw std::invalid_argument("rmse_weights: length mismatch");
  if (w_true.empty()) return {};
  double gain = 0, phase = 0;
  for (std::size_t p = 0; p < w_true.size(); ++p) {
    const std::complex<double> est = calibrated ? w_hat[p] : std::complex<double>(1.0, 0.0);
    const double dg = std::abs(est) - std::abs(w_true[p]);
    const double dp = wrap_degrees((std::arg(est) - std::arg(w_true[p])) * 180.0 / std::numbers::pi);
    gain += dg * dg;
    phase += dp * dp;
  }
  const auto count = static_cast<double>(w_true.size());
  return {std::sqrt(gain / count), std::sqrt(phase / count)};
}

double tau_to_distance(double tau, double c) { return c * tau; }

}  // namespace fvsbl
