// SPDX-License-Identifier: Apache-2.0
//
// Variational updates for the calibrated sparse line-spectral model:
// posterior of the element weights, amplitudes and noise precision, and the
// fast (leave-one-out) joint update of component precision and dispersion
// parameters.
//
// The amplitude and noise updates take expectations over the weight
// posterior, so their Gram matrices use the per-element gains
// |w_p|^2 + var_p. The detection statistics plug in the weight means only
// (gains |w_p|^2). All blockwise products run over the P antenna blocks of
// length N and never form a (P*N) x (P*N) matrix.

#pragma once

#include "fvsbl/array_model.hpp"
#include "fvsbl/nelder_mead.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace fvsbl {

template <typename Real>
struct Hyperparams {
  Real a = 0;  // noise precision Gamma shape
  Real b = 0;  // noise precision Gamma rate
  Real eps = 0;  // component precision Gamma shape
  Real eta = 0;  // component precision Gamma rate
  /// Pruning threshold; when unset it is derived from `false_alarm`.
  std::optional<Real> chi;
  /// Nominal probability that a noise-only search over the P*N resolution
  /// cells produces a detection.
  Real false_alarm = Real(1e-3);

  /// chi = ln(num_cells / pfa), treating the search as `num_cells`
  /// independent unit-exponential tests.
  static Real chi_for_false_alarm(Real pfa, Real num_cells = 1) {
    return std::max(Real(1), std::log(num_cells / pfa));
  }
  Real resolve_chi(Index num_cells) const { return chi.value_or(chi_for_false_alarm(false_alarm, Real(num_cells))); }

  void validate() const {
    if (a < 0 || b < 0 || eps < 0 || eta < 0) throw std::invalid_argument("Hyperparams: priors must be >= 0");
    if (chi && !(*chi >= 1)) throw std::invalid_argument("Hyperparams: chi must be >= 1");
    if (!(false_alarm > 0 && false_alarm < 1)) throw std::invalid_argument("Hyperparams: false_alarm must be in (0, 1)");
  }
};

template <typename Real>
struct WeightPrior {
  CVector<Real> mean;
  RVector<Real> var;

  static WeightPrior uniform(Index num_elements, Complex<Real> mean = Real(1), Real var = Real(100)) {
    return {CVector<Real>::Constant(num_elements, mean), RVector<Real>::Constant(num_elements, var)};
  }
  void validate(Index num_elements) const {
    if (mean.size() != num_elements || var.size() != num_elements)
      throw std::invalid_argument("WeightPrior: length must equal the number of elements");
    if (!(var.array() > 0).all()) throw std::invalid_argument("WeightPrior: variances must be positive");
  }
};

template <typename Real>
struct DetectionStat {
  Real s = 0;
  Complex<Real> mu{};

  Real ratio() const { return std::norm(mu) / s; }
};

/// Complete variational state. The dictionary caches the atoms of the
/// current dispersion estimates; `thetas()` reads through to it.
template <typename Real>
struct PosteriorState {
  ArrayGeometry<Real> geometry;
  SignalGrid<Real> grid;
  CVector<Real> w_hat;
  RVector<Real> var_w_hat;
  CVector<Real> alpha_hat;
  CMatrix<Real> sigma_alpha;
  RVector<Real> gamma_hat;
  Real lambda_hat = 1;
  Dictionary<Real> dictionary;

  /// Empty model with the weight posterior equal to the prior.
  static PosteriorState empty(const ArrayGeometry<Real>& geom, const SignalGrid<Real>& grid,
                              const WeightPrior<Real>& prior, Real lambda) {
    PosteriorState s;
    s.geometry = geom;
    s.grid = grid;
    s.w_hat = prior.mean;
    s.var_w_hat = prior.var;
    s.alpha_hat.resize(0);
    s.sigma_alpha.resize(0, 0);
    s.gamma_hat.resize(0);
    s.lambda_hat = lambda;
    s.dictionary = build_dictionary<Real>({}, geom, grid);
    return s;
  }

  Index num_elements() const { return geometry.size(); }
  Index num_samples() const { return grid.num_samples; }
  Index num_components() const { return dictionary.size(); }
  const std::vector<DispersionParams<Real>>& thetas() const { return dictionary.thetas; }

  /// E|w_p|^2 under the weight posterior.
  RVector<Real> expected_gains() const { return w_hat.cwiseAbs2() + var_w_hat; }

  void add_component(const DispersionParams<Real>& theta, Real gamma, Complex<Real> alpha = {}) {
    const Index k = num_components();
    dictionary.thetas.push_back(theta);
    dictionary.columns.conservativeResize(Eigen::NoChange, k + 1);
    dictionary.columns.col(k) = atom(theta, geometry, grid);
    gamma_hat.conservativeResize(k + 1);
    gamma_hat(k) = gamma;
    alpha_hat.conservativeResize(k + 1);
    alpha_hat(k) = alpha;
    CMatrix<Real> sig = CMatrix<Real>::Zero(k + 1, k + 1);
    sig.topLeftCorner(k, k) = sigma_alpha;
    sigma_alpha = std::move(sig);
  }

  void remove_component(Index k) {
    const Index n = num_components();
    auto drop_entry = [&](auto& v) {
      for (Index i = k; i + 1 < n; ++i) v(i) = v(i + 1);
      v.conservativeResize(n - 1);
    };
    dictionary.thetas.erase(dictionary.thetas.begin() + k);
    for (Index i = k; i + 1 < n; ++i) dictionary.columns.col(i) = dictionary.columns.col(i + 1);
    dictionary.columns.conservativeResize(Eigen::NoChange, n - 1);
    drop_entry(gamma_hat);
    drop_entry(alpha_hat);
    CMatrix<Real> sig(n - 1, n - 1);
    for (Index i = 0, ii = 0; i < n; ++i) {
      if (i == k) continue;
      for (Index j = 0, jj = 0; j < n; ++j) {
        if (j == k) continue;
        sig(ii, jj++) = sigma_alpha(i, j);
      }
      ++ii;
    }
    sigma_alpha = std::move(sig);
  }

  void set_theta(Index k, const DispersionParams<Real>& theta) {
    dictionary.thetas[static_cast<std::size_t>(k)] = theta;
    dictionary.columns.col(k) = atom(theta, geometry, grid);
  }

  void check_consistent() const {
    const Index k = num_components();
    if (w_hat.size() != num_elements() || var_w_hat.size() != num_elements())
      throw std::logic_error("PosteriorState: weight dimension mismatch");
    if (alpha_hat.size() != k || gamma_hat.size() != k || sigma_alpha.rows() != k || sigma_alpha.cols() != k)
      throw std::logic_error("PosteriorState: component dimension mismatch");
    if (dictionary.columns.rows() != num_elements() * num_samples() ||
        static_cast<Index>(dictionary.thetas.size()) != k)
      throw std::logic_error("PosteriorState: dictionary out of sync");
  }
};

namespace detail {

/// Expands a per-element vector to length P*N by repeating each entry N times.
template <typename Derived>
auto expand_blocks(const Eigen::MatrixBase<Derived>& v, Index n) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(v.size() * n);
  for (Index p = 0; p < v.size(); ++p) out.segment(p * n, n).setConstant(v(p));
  return out;
}

/// sum_p gains_p * M1_p^H M2_p over antenna blocks.
template <typename Real, typename D1, typename D2>
CMatrix<Real> blockwise_gram(const Eigen::MatrixBase<D1>& m1, const Eigen::MatrixBase<D2>& m2,
                             const RVector<Real>& gains, Index n) {
  const RVector<Real> g = expand_blocks(gains, n);
  return m1.adjoint() * (g.asDiagonal() * m2);
}

/// D(w)^H y.
template <typename Real>
CVector<Real> calibrated_adjoint(const CVector<Real>& w, const CVector<Real>& y) {
  return apply_calibration<Real>(CVector<Real>(w.conjugate()), y);
}

template <typename Real>
bool all_finite_positive(const RVector<Real>& v) {
  for (Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v(i)) || !(v(i) >= 0)) return false;
  return true;
}

/// Hermitian positive-definite factorization with one diagonal-loading
/// retry. Returns the factorization and whether loading was needed.
template <typename Real>
std::pair<Eigen::LLT<CMatrix<Real>>, bool> factorize_hpd(const CMatrix<Real>& m, const char* what) {
  Eigen::LLT<CMatrix<Real>> llt(m);
  if (llt.info() == Eigen::Success) return {std::move(llt), false};
  const Index k = m.rows();
  const Real jitter = Real(1e-12) * std::abs(m.trace().real()) / Real(std::max<Index>(k, 1));
  CMatrix<Real> loaded = m;
  loaded.diagonal().array() += jitter;
  llt.compute(loaded);
  if (llt.info() != Eigen::Success) {
    std::ostringstream os;
    os << what << ": system matrix of size " << k << " is not positive definite after diagonal loading "
       << jitter << " (trace " << m.trace().real() << ")";
    throw DegenerateGeometryError(os.str());
  }
  return {std::move(llt), true};
}

}  // namespace detail

template <typename Real>
struct WeightUpdate {
  CVector<Real> w_hat;
  RVector<Real> var_w_hat;
};

/// Per-element complex Gaussian posterior of the calibration weights.
template <typename Real>
WeightUpdate<Real> update_weights(const PosteriorState<Real>& state, const WeightPrior<Real>& prior,
                                  const CVector<Real>& y) {
  state.check_consistent();
  const Index num_el = state.num_elements(), n = state.num_samples();
  prior.validate(num_el);
  if (y.size() != num_el * n) throw std::invalid_argument("update_weights: measurement length mismatch");

  if (state.num_components() == 0) return {prior.mean, prior.var};
  WeightUpdate<Real> out{CVector<Real>(num_el), RVector<Real>(num_el)};
  for (Index p = 0; p < num_el; ++p) {
    const auto tp = state.dictionary.block(p);
    const CVector<Real> v = tp * state.alpha_hat;
    const CMatrix<Real> gram = tp.adjoint() * tp;
    const Real quad = v.squaredNorm() + (gram * state.sigma_alpha).trace().real();
    const Complex<Real> corr = v.dot(y.segment(p * n, n));  // alpha^H T_p^H y_p
    const Real a_p = state.lambda_hat * quad + Real(1) / prior.var(p);
    const Complex<Real> b_p = state.lambda_hat * corr + prior.mean(p) / prior.var(p);
    out.var_w_hat(p) = Real(1) / a_p;
    out.w_hat(p) = b_p / a_p;
  }
  return out;
}

/// The likelihood is invariant under (w, alpha) -> (c w, alpha / c) for any
/// complex c. Picks the c with the highest weight-prior density,
/// c = sum conj(w_p) mu_p / var_p / sum |w_p|^2 / var_p, and rescales every
/// dependent moment. Returns the applied factor.
template <typename Real>
Complex<Real> fix_weight_gauge(PosteriorState<Real>& state, const WeightPrior<Real>& prior) {
  prior.validate(state.num_elements());
  const RVector<Real> inv_var = prior.var.cwiseInverse();
  const Real den = (state.w_hat.cwiseAbs2().cwiseProduct(inv_var)).sum();
  if (!(den > 0) || state.num_components() == 0) return Real(1);
  Complex<Real> num{};
  for (Index p = 0; p < state.w_hat.size(); ++p) num += std::conj(state.w_hat(p)) * prior.mean(p) * inv_var(p);
  const Complex<Real> c = num / den;
  const Real c2 = std::norm(c);
  if (!(c2 > 0) || !std::isfinite(c2)) return Real(1);
  state.w_hat *= c;
  state.var_w_hat *= c2;
  state.alpha_hat /= c;
  state.sigma_alpha /= c2;
  state.gamma_hat *= c2;
  return c;
}

template <typename Real>
struct AmplitudeUpdate {
  CVector<Real> alpha_hat;
  CMatrix<Real> sigma_alpha;
  bool jitter_applied = false;
};

/// Gaussian posterior of the amplitudes given weights, precisions and noise.
template <typename Real>
AmplitudeUpdate<Real> update_amplitudes(const PosteriorState<Real>& state, const CVector<Real>& y) {
  state.check_consistent();
  const Index k = state.num_components(), n = state.num_samples();
  if (y.size() != state.num_elements() * n) throw std::invalid_argument("update_amplitudes: measurement length mismatch");
  if (k == 0) return {CVector<Real>(0), CMatrix<Real>(0, 0), false};
  if (!detail::all_finite_positive(state.gamma_hat))
    throw std::invalid_argument("update_amplitudes: component precisions must be finite (prune first)");

  const auto& a = state.dictionary.columns;
  CMatrix<Real> system = state.lambda_hat * detail::blockwise_gram<Real>(a, a, state.expected_gains(), n);
  system.diagonal() += state.gamma_hat.template cast<Complex<Real>>();
  system = (system + system.adjoint()).eval() * Real(0.5);

  auto [llt, jittered] = detail::factorize_hpd(system, "update_amplitudes");
  AmplitudeUpdate<Real> out;
  out.jitter_applied = jittered;
  out.sigma_alpha = llt.solve(CMatrix<Real>::Identity(k, k));
  out.sigma_alpha = (out.sigma_alpha + out.sigma_alpha.adjoint()).eval() * Real(0.5);
  const CVector<Real> rhs = state.lambda_hat * (a.adjoint() * detail::calibrated_adjoint(state.w_hat, y));
  out.alpha_hat = llt.solve(rhs);
  return out;
}

/// Mean of the Gamma posterior of the noise precision.
template <typename Real>
Real update_noise(const PosteriorState<Real>& state, const CVector<Real>& y, const Hyperparams<Real>& hyper) {
  state.check_consistent();
  const Index n = state.num_samples();
  const Index len = state.num_elements() * n;
  if (y.size() != len) throw std::invalid_argument("update_noise: measurement length mismatch");
  Real rho = 0;
  if (state.num_components() == 0) {
    rho = y.squaredNorm();
  } else {
    const auto& a = state.dictionary.columns;
    const CVector<Real> fit = apply_calibration<Real>(state.w_hat, a * state.alpha_hat);
    const CMatrix<Real> gram = detail::blockwise_gram<Real>(a, a, state.expected_gains(), n);
    rho = (y - fit).squaredNorm() + (gram * state.sigma_alpha).trace().real();
  }
  return (hyper.a + Real(len)) / (hyper.b + rho);
}

/// Single-step mean update of a component precision; +inf when the
/// denominator vanishes.
template <typename Real>
Real gamma_consistency_update(Complex<Real> alpha_k, Real sigma_kk, const Hyperparams<Real>& hyper) {
  if (sigma_kk < 0) throw std::invalid_argument("gamma_consistency_update: negative posterior variance");
  const Real denom = hyper.eta + sigma_kk + std::norm(alpha_k);
  if (denom == 0) return std::numeric_limits<Real>::infinity();
  return (hyper.eps + Real(1)) / denom;
}

/// Leave-one-out view of the model used to score one component (or a new
/// candidate) at arbitrary dispersion parameters. Everything that does not
/// depend on the candidate is factorized once at construction.
template <typename Real>
class LeaveOneOut {
 public:
  /// `exclude` removes that component from the model; std::nullopt keeps all.
  LeaveOneOut(const PosteriorState<Real>& state, const CVector<Real>& y, std::optional<Index> exclude = std::nullopt)
      : geometry_(&state.geometry), grid_(&state.grid), lambda_(state.lambda_hat) {
    state.check_consistent();
    const Index n = state.num_samples(), k = state.num_components();
    if (y.size() != state.num_elements() * n) throw std::invalid_argument("LeaveOneOut: measurement length mismatch");
    if (exclude && (*exclude < 0 || *exclude >= k)) throw std::out_of_range("LeaveOneOut: component index");

    gains_ = detail::expand_blocks(RVector<Real>(state.w_hat.cwiseAbs2()), n);
    yw_ = detail::calibrated_adjoint(state.w_hat, y);

    const Index m = exclude ? k - 1 : k;
    others_.resize(y.size(), m);
    RVector<Real> gamma(m);
    for (Index i = 0, j = 0; i < k; ++i) {
      if (exclude && i == *exclude) continue;
      others_.col(j) = state.dictionary.columns.col(i);
      gamma(j++) = state.gamma_hat(i);
    }
    if (m == 0) return;
    if (!detail::all_finite_positive(gamma))
      throw std::invalid_argument("LeaveOneOut: component precisions must be finite");

    CMatrix<Real> system = lambda_ * (others_.adjoint() * (gains_.asDiagonal() * others_));
    system.diagonal() += gamma.template cast<Complex<Real>>();
    system = (system + system.adjoint()).eval() * Real(0.5);
    auto [llt, jittered] = detail::factorize_hpd(system, "LeaveOneOut");
    jitter_applied_ = jittered;
    sigma_ = llt.solve(CMatrix<Real>::Identity(m, m));
    weighted_others_ = gains_.asDiagonal() * others_;
    sigma_b_ = sigma_ * (others_.adjoint() * yw_);
  }

  /// Statistics of the candidate atom, or std::nullopt when s <= 0.
  std::optional<DetectionStat<Real>> try_evaluate(const DispersionParams<Real>& theta) const {
    const CVector<Real> t = atom(theta, *geometry_, *grid_);
    const Real dd = (gains_.array() * t.array().abs2()).sum();
    const Complex<Real> b = t.dot(yw_);
    Real inv_s = lambda_ * dd;
    Complex<Real> corr = lambda_ * b;
    if (others_.cols() > 0) {
      const CVector<Real> g = weighted_others_.adjoint() * t;  // D_kbar^H d
      inv_s -= lambda_ * lambda_ * g.dot(sigma_ * g).real();
      corr -= lambda_ * lambda_ * g.dot(sigma_b_);
    }
    if (!(inv_s > 0) || !std::isfinite(inv_s)) return std::nullopt;
    const Real s = Real(1) / inv_s;
    return DetectionStat<Real>{s, s * corr};
  }

  DetectionStat<Real> evaluate(const DispersionParams<Real>& theta) const {
    auto stat = try_evaluate(theta);
    if (!stat) {
      std::ostringstream os;
      os << "detection_statistics: non-positive s at phi=" << theta.phi << " tau=" << theta.tau
         << " (near-duplicate component?)";
      throw ConditioningError(os.str());
    }
    return *stat;
  }

  bool jitter_applied() const { return jitter_applied_; }
  const ArrayGeometry<Real>& geometry() const { return *geometry_; }
  const SignalGrid<Real>& grid() const { return *grid_; }

 private:
  const ArrayGeometry<Real>* geometry_;
  const SignalGrid<Real>* grid_;
  Real lambda_;
  RVector<Real> gains_;
  CVector<Real> yw_;
  CMatrix<Real> others_;
  CMatrix<Real> weighted_others_;
  CMatrix<Real> sigma_;
  CVector<Real> sigma_b_;
  bool jitter_applied_ = false;
};

/// Statistics (s, mu) at `theta`; with `exclude`, component `exclude` is left out.
template <typename Real>
DetectionStat<Real> detection_statistics(const DispersionParams<Real>& theta, const PosteriorState<Real>& state,
                                         const CVector<Real>& y, std::optional<Index> exclude = std::nullopt) {
  return LeaveOneOut<Real>(state, y, exclude).evaluate(theta);
}

template <typename Real>
Real component_log_objective(Real gamma, const DetectionStat<Real>& stat) {
  if (std::isinf(gamma)) return 0;
  const Real gs = gamma * stat.s;
  return stat.ratio() / (Real(1) + gs) - std::log1p(Real(1) / gs);
}

/// Closed-form maximizer of the component objective over gamma; +inf
/// (prune) unless |mu|^2 / s exceeds chi.
template <typename Real>
Real gamma_fast_update(const DetectionStat<Real>& stat, Real chi) {
  if (!(chi >= 1)) throw std::invalid_argument("gamma_fast_update: chi must be >= 1");
  if (stat.ratio() > chi) return Real(1) / (std::norm(stat.mu) - stat.s);
  return std::numeric_limits<Real>::infinity();
}

/// Regular search grid over (tau, phi); flat index is tau-major.
template <typename Real>
struct ThetaGridSpec {
  Real tau_step = 0, tau_min = 0, tau_max = 0;
  Real phi_step = 0, phi_min = 0, phi_max = 0;  // phi_max exclusive

  /// Delay step 1/(2B) over [0, 0.9 (N-1)/B]; angle step 1 degree over [0, 180).
  static ThetaGridSpec defaults(const SignalGrid<Real>& grid) {
    const Real bw = grid.bandwidth();
    return {Real(1) / (Real(2) * bw), 0, Real(0.9) * Real(grid.num_samples - 1) / bw, deg2rad(Real(1)), 0, kPi<Real>};
  }
  void validate() const {
    if (!(tau_step > 0) || !(phi_step > 0) || tau_max < tau_min || !(phi_max > phi_min))
      throw std::invalid_argument("ThetaGridSpec: empty or invalid grid");
  }
};

/// Precomputed matched-filter bank for the grid search.
template <typename Real>
class ThetaGrid {
 public:
  ThetaGrid(const ThetaGridSpec<Real>& spec, const ArrayGeometry<Real>& geom, const SignalGrid<Real>& grid)
      : spec_(spec) {
    spec.validate();
    const Index n_tau = static_cast<Index>(std::floor((spec.tau_max - spec.tau_min) / spec.tau_step + Real(1e-9))) + 1;
    for (Index i = 0; i < n_tau; ++i) taus_.push_back(spec.tau_min + Real(i) * spec.tau_step);
    for (Real phi = spec.phi_min; phi < spec.phi_max - Real(1e-12); phi += spec.phi_step) phis_.push_back(phi);
    temporal_.resize(grid.num_samples, n_tau);
    for (Index i = 0; i < n_tau; ++i)
      temporal_.col(i) = grid.spectrum.cwiseProduct(temporal_vector(taus_[static_cast<std::size_t>(i)], grid));
    steering_.resize(geom.size(), static_cast<Index>(phis_.size()));
    for (std::size_t j = 0; j < phis_.size(); ++j)
      steering_.col(static_cast<Index>(j)) = steering_vector(phis_[j], geom, grid);
  }

  Index size() const { return static_cast<Index>(taus_.size() * phis_.size()); }
  DispersionParams<Real> point(Index idx) const {
    const auto n_phi = static_cast<Index>(phis_.size());
    return {phis_[static_cast<std::size_t>(idx % n_phi)], taus_[static_cast<std::size_t>(idx / n_phi)]};
  }
  const ThetaGridSpec<Real>& spec() const { return spec_; }

  /// |d(theta)^H y|^2 for every grid point, shape n_tau x n_phi.
  Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> beam_power(const CVector<Real>& w,
                                                                 const CVector<Real>& y) const {
    const Index n = temporal_.rows(), num_el = steering_.rows();
    if (y.size() != n * num_el || w.size() != num_el) throw std::invalid_argument("ThetaGrid: dimension mismatch");
    const Eigen::Map<const CMatrix<Real>> ymat(y.data(), n, num_el);
    const CMatrix<Real> z = temporal_.adjoint() * ymat;
    const CMatrix<Real> resp = z * (w.conjugate().asDiagonal() * steering_.conjugate());
    return resp.cwiseAbs2();
  }

 private:
  ThetaGridSpec<Real> spec_;
  std::vector<Real> taus_;
  std::vector<Real> phis_;
  CMatrix<Real> temporal_;  // N x n_tau
  CMatrix<Real> steering_;  // P x n_phi
};

/// Grid point maximizing the calibrated beamformer output; ties go to the
/// lowest flat index.
template <typename Real>
DispersionParams<Real> beamformer_init(const CVector<Real>& y_res, const PosteriorState<Real>& state,
                                       const ThetaGrid<Real>& grid) {
  if (grid.size() == 0) throw std::invalid_argument("beamformer_init: empty grid");
  const auto power = grid.beam_power(state.w_hat, y_res);
  Index best = 0;
  Real best_val = power(0, 0);
  for (Index i = 0; i < power.rows(); ++i)
    for (Index j = 0; j < power.cols(); ++j)
      if (power(i, j) > best_val) {
        best_val = power(i, j);
        best = i * power.cols() + j;
      }
  return grid.point(best);
}

/// Folds phi into [0, pi) using cos(-phi) = cos(phi) and clamps tau into
/// [0, tau_max).
template <typename Real>
DispersionParams<Real> fold_into_range(DispersionParams<Real> theta, Real tau_max) {
  constexpr Real two_pi = Real(2) * kPi<Real>;
  Real phi = std::fmod(theta.phi, two_pi);
  if (phi < 0) phi += two_pi;
  if (phi > kPi<Real>) phi = two_pi - phi;
  if (phi >= kPi<Real>) phi = std::nextafter(kPi<Real>, Real(0));
  theta.phi = phi;
  const Real upper = std::nextafter(tau_max, Real(0));
  theta.tau = std::clamp(theta.tau, Real(0), upper);
  return theta;
}

template <typename Real>
struct RefinementResult {
  DispersionParams<Real> theta;
  DetectionStat<Real> stat;
  bool valid = false;  // false when no evaluated point had s > 0
  int evaluations = 0;
  bool budget_exhausted = false;

  Real objective() const { return valid ? stat.ratio() : Real(0); }
};

template <typename Real>
struct RefinementOptions {
  Real tau_scale = 0;  // initial simplex edge in delay [s]
  Real phi_scale = 0;  // initial simplex edge in angle [rad]
  int max_evaluations = 200;
};

/// Simplex search for the maximizer of |mu|^2 / s starting at `init`.
template <typename Real>
RefinementResult<Real> optimize_component(const DispersionParams<Real>& init, const LeaveOneOut<Real>& loo,
                                          const RefinementOptions<Real>& opt) {
  using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
  const Real tau_max = loo.grid().max_delay();
  auto to_theta = [&](const Vec& x) {
    return fold_into_range(DispersionParams<Real>{x(1) * opt.phi_scale, x(0) * opt.tau_scale}, tau_max);
  };
  auto cost = [&](const Vec& x) {
    const auto stat = loo.try_evaluate(to_theta(x));
    return stat ? -stat->ratio() : std::numeric_limits<Real>::infinity();
  };

  const DispersionParams<Real> start = fold_into_range(init, tau_max);
  Vec x0(2);
  x0 << start.tau / opt.tau_scale, start.phi / opt.phi_scale;
  SimplexOptions<Real> sopt;
  sopt.max_evaluations = opt.max_evaluations;
  const auto res = nelder_mead<Real>(cost, x0, Vec::Ones(2), sopt);

  RefinementResult<Real> out;
  out.evaluations = res.evaluations;
  out.budget_exhausted = res.budget_exhausted;
  out.theta = std::isfinite(res.value) ? to_theta(res.x) : start;
  if (auto stat = loo.try_evaluate(out.theta)) {
    out.stat = *stat;
    out.valid = true;
  }
  return out;
}

/// Convenience overload scoring component `exclude` (or a new candidate).
template <typename Real>
RefinementResult<Real> optimize_component(const DispersionParams<Real>& init, const PosteriorState<Real>& state,
                                          const CVector<Real>& y, const RefinementOptions<Real>& opt,
                                          std::optional<Index> exclude = std::nullopt) {
  return optimize_component(init, LeaveOneOut<Real>(state, y, exclude), opt);
}

}  // namespace fvsbl
