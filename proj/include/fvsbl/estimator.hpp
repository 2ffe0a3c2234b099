// SPDX-License-Identifier: Apache-2.0
//
// Fast variational SBL with element self-calibration: detect, calibrate,
// refine/prune, then update amplitudes and noise until convergence.

#pragma once

#include "fvsbl/vsbl_core.hpp"

#include <algorithm>
#include <sstream>
#include <vector>

namespace fvsbl {

template <typename Real>
struct EstimatorConfig {
  std::optional<ThetaGridSpec<Real>> theta_grid;  // defaults from the signal grid
  Hyperparams<Real> hyper;
  std::optional<WeightPrior<Real>> weight_prior;  // defaults to CN(1, 100) per element
  int max_iters = 200;
  Real tol = Real(1e-6);
  bool calibration_enabled = true;
  Index max_components = 20;
  int refinement_evaluations = 200;
  /// Re-anchor the common (w, alpha) scale to the weight prior after every
  /// weight update.
  bool fix_gauge = true;
};

enum class Phase { Detection, DetectionUpdate, CalibrationWeights, ComponentUpdate, AmplitudeNoise };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::Detection: return "detection";
    case Phase::DetectionUpdate: return "detection-amplitude-noise";
    case Phase::CalibrationWeights: return "calibration-weights";
    case Phase::ComponentUpdate: return "component-update";
    case Phase::AmplitudeNoise: return "amplitude-noise";
  }
  return "?";
}

template <typename Real>
struct IterationDiagnostics {
  int iteration = 0;
  std::vector<Phase> phases;
  Index components_before = 0;
  Index components_after = 0;
  bool detected = false;
  Real candidate_ratio = 0;
  Index pruned = 0;
  Real lambda_hat = 0;
  Real max_change = 0;
  bool jitter_applied = false;
  bool budget_exhausted = false;
  /// |mu|^2 / s of each retained component when it was last tested.
  std::vector<Real> retained_ratios;
};

template <typename Real>
struct EstimationResult {
  Index k_hat = 0;
  std::vector<DispersionParams<Real>> thetas;
  CVector<Real> alpha_hat;
  CVector<Real> w_hat;
  RVector<Real> var_w_hat;
  RVector<Real> gamma_hat;
  Real lambda_hat = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<IterationDiagnostics<Real>> objective_trace;
};

namespace detail {

/// Snapshot of the quantities watched by the convergence test.
template <typename Real>
struct ConvergenceSnapshot {
  std::vector<Real> values;

  static ConvergenceSnapshot take(const PosteriorState<Real>& s) {
    ConvergenceSnapshot snap;
    const Real bw = s.grid.bandwidth();
    for (const auto& t : s.thetas()) {
      snap.values.push_back(t.tau * bw);
      snap.values.push_back(t.phi);
    }
    for (Index p = 0; p < s.w_hat.size(); ++p) {
      snap.values.push_back(std::abs(s.w_hat(p)));
      snap.values.push_back(std::arg(s.w_hat(p)));
    }
    snap.values.push_back(std::log(s.lambda_hat));
    return snap;
  }

  /// Largest |new - old| / max(1, |old|); the angle of w is compared modulo 2 pi.
  Real max_change(const ConvergenceSnapshot& old) const {
    if (old.values.size() != values.size()) return std::numeric_limits<Real>::infinity();
    Real m = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      Real d = std::abs(values[i] - old.values[i]);
      d = std::min(d, std::abs(Real(2) * kPi<Real> - d));
      m = std::max(m, d / std::max(Real(1), std::abs(old.values[i])));
    }
    return m;
  }
};

}  // namespace detail

template <typename Real>
EstimationResult<Real> run_fvsbl(const CVector<Real>& y, const ArrayGeometry<Real>& geom,
                                 const SignalGrid<Real>& grid, const EstimatorConfig<Real>& config) {
  geom.validate();
  grid.validate();
  config.hyper.validate();
  if (config.max_iters < 1) throw std::invalid_argument("run_fvsbl: max_iters must be >= 1");
  if (!(config.tol > 0)) throw std::invalid_argument("run_fvsbl: tol must be positive");
  const Index num_el = geom.size(), n = grid.num_samples;
  if (y.size() != num_el * n) throw std::invalid_argument("run_fvsbl: measurement length must equal P*N");
  const Real energy = y.squaredNorm();
  if (!(energy > 0) || !std::isfinite(energy)) throw std::invalid_argument("run_fvsbl: measurement must be non-zero");

  const WeightPrior<Real> prior = config.weight_prior.value_or(WeightPrior<Real>::uniform(num_el));
  prior.validate(num_el);
  const ThetaGridSpec<Real> grid_spec = config.theta_grid.value_or(ThetaGridSpec<Real>::defaults(grid));
  const ThetaGrid<Real> theta_grid(grid_spec, geom, grid);
  const RefinementOptions<Real> ropt{grid_spec.tau_step, grid_spec.phi_step, config.refinement_evaluations};
  const Real chi = config.hyper.resolve_chi(num_el * n);

  auto state = PosteriorState<Real>::empty(geom, grid, prior, Real(num_el * n) / energy);
  // The weight mean starts as a point value at the prior mean; its variance
  // is set by the first weight update.
  state.var_w_hat.setZero();

  std::vector<Real> last_ratio;  // per retained component
  EstimationResult<Real> result;
  auto snapshot = detail::ConvergenceSnapshot<Real>::take(state);

  auto amplitude_noise = [&](IterationDiagnostics<Real>& diag) {
    auto upd = update_amplitudes(state, y);
    diag.jitter_applied |= upd.jitter_applied;
    state.alpha_hat = std::move(upd.alpha_hat);
    state.sigma_alpha = std::move(upd.sigma_alpha);
    state.lambda_hat = update_noise(state, y, config.hyper);
  };

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    IterationDiagnostics<Real> diag;
    diag.iteration = iter;
    diag.components_before = state.num_components();
    bool structure_changed = false;

    try {
      // Detection
      diag.phases.push_back(Phase::Detection);
      if (state.num_components() < config.max_components) {
        CVector<Real> y_res = y;
        if (state.num_components() > 0)
          y_res -= apply_calibration<Real>(state.w_hat, state.dictionary.columns * state.alpha_hat);
        const auto init = beamformer_init(y_res, state, theta_grid);
        const LeaveOneOut<Real> loo(state, y);
        diag.jitter_applied |= loo.jitter_applied();
        const auto cand = optimize_component(init, loo, ropt);
        diag.budget_exhausted |= cand.budget_exhausted;
        diag.candidate_ratio = cand.objective();
        if (cand.valid && cand.stat.ratio() > chi) {
          state.add_component(cand.theta, gamma_fast_update(cand.stat, chi));
          last_ratio.push_back(cand.stat.ratio());
          diag.detected = true;
          structure_changed = true;
          diag.phases.push_back(Phase::DetectionUpdate);
          amplitude_noise(diag);
        }
      }

      // Calibration weights
      if (config.calibration_enabled) {
        diag.phases.push_back(Phase::CalibrationWeights);
        auto w = update_weights(state, prior, y);
        state.w_hat = std::move(w.w_hat);
        state.var_w_hat = std::move(w.var_w_hat);
        if (config.fix_gauge) fix_weight_gauge(state, prior);
      }

      // Component refinement and pruning
      diag.phases.push_back(Phase::ComponentUpdate);
      for (Index k = 0; k < state.num_components();) {
        const LeaveOneOut<Real> loo(state, y, k);
        diag.jitter_applied |= loo.jitter_applied();
        const auto ref = optimize_component(state.thetas()[static_cast<std::size_t>(k)], loo, ropt);
        diag.budget_exhausted |= ref.budget_exhausted;
        if (ref.valid && ref.stat.ratio() > chi) {
          state.set_theta(k, ref.theta);
          state.gamma_hat(k) = gamma_fast_update(ref.stat, chi);
          last_ratio[static_cast<std::size_t>(k)] = ref.stat.ratio();
          ++k;
        } else {
          state.remove_component(k);
          last_ratio.erase(last_ratio.begin() + k);
          ++diag.pruned;
          structure_changed = true;
        }
      }

      // Amplitudes and noise
      diag.phases.push_back(Phase::AmplitudeNoise);
      amplitude_noise(diag);
    } catch (const DegenerateGeometryError& e) {
      std::ostringstream os;
      os << "run_fvsbl iteration " << iter << ": " << e.what();
      throw DegenerateGeometryError(os.str());
    } catch (const ConditioningError& e) {
      std::ostringstream os;
      os << "run_fvsbl iteration " << iter << ": " << e.what();
      throw ConditioningError(os.str());
    }

    diag.components_after = state.num_components();
    diag.lambda_hat = state.lambda_hat;
    diag.retained_ratios = last_ratio;
    const auto next = detail::ConvergenceSnapshot<Real>::take(state);
    diag.max_change = next.max_change(snapshot);
    snapshot = next;
    result.objective_trace.push_back(diag);
    result.iterations = iter;

    if (!structure_changed && diag.max_change < config.tol) {
      result.converged = true;
      break;
    }
  }

  result.k_hat = state.num_components();
  result.thetas = state.thetas();
  result.alpha_hat = state.alpha_hat;
  result.w_hat = state.w_hat;
  result.var_w_hat = state.var_w_hat;
  result.gamma_hat = state.gamma_hat;
  result.lambda_hat = state.lambda_hat;
  return result;
}

}  // namespace fvsbl
