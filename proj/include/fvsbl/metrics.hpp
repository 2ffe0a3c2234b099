// SPDX-License-Identifier: Apache-2.0
//
// OSPA distance between finite sets of scalars and RMSE of calibration
// weight gains and phases.

#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fvsbl {

struct MetricsConfig {
  double cutoff_tau_d = 0.05;  // meters
  double cutoff_phi = 10.0;    // degrees
  double ospa_order = 1.0;

  void validate() const;
};

/// Minimum-cost assignment of every row to a distinct column of a
/// rows <= cols cost matrix. Returns the column index for each row.
std::vector<int> hungarian_assignment(const Eigen::MatrixXd& cost);

/// OSPA of order p with cutoff c; 0 when both sets are empty.
double ospa(std::span<const double> estimates, std::span<const double> truths, double cutoff, double order = 1.0);

struct WeightRmse {
  double gain = 0;
  double phase_deg = 0;
};

/// Phase errors are wrapped to (-180, 180] degrees. With calibrated=false
/// the estimate is replaced by the nominal weight 1.
WeightRmse rmse_weights(std::span<const std::complex<double>> w_hat, std::span<const std::complex<double>> w_true,
                        bool calibrated);

/// Delay to equivalent path length c * tau.
double tau_to_distance(double tau, double c = 299792458.0);

/// Wraps an angle in degrees to (-180, 180].
double wrap_degrees(double deg);

}  // namespace fvsbl
