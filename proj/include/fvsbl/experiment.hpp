// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo sweep over the calibration-weight deviation: every trial runs
// the estimator with and without self-calibration on the same measurement.

#pragma once

#include "fvsbl/channel_sim.hpp"
#include "fvsbl/estimator.hpp"
#include "fvsbl/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fvsbl {

/// Raised for unreadable or invalid configuration documents.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when the output directory cannot be written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { Cal, NoCal };

const char* to_string(Mode m);

struct ExperimentConfig {
  std::vector<double> sigma_grid = default_sigma_grid();
  int trials_per_sigma = 100;
  ArraySetup<double> setup = ArraySetup<double>::defaults();
  ScenarioLayout<double> layout;
  EstimatorConfig<double> estimator;
  MetricsConfig metrics;
  std::uint64_t master_seed = 1;
  std::filesystem::path out_dir = default_out_dir();
  int parallelism = 0;  // 0: one worker per hardware thread
  bool run_cal = true;
  bool run_nocal = true;

  /// 8 log-spaced values over [1e-3, 0.35].
  static std::vector<double> default_sigma_grid();
  /// $FVSBL_OUT_DIR when set, otherwise "results".
  static std::filesystem::path default_out_dir();

  void validate() const;
  int resolved_parallelism() const;
};

struct TrialRecord {
  double sigma = 0;
  int sigma_index = 0;
  int trial_index = 0;
  Mode mode = Mode::Cal;
  double ospa_tau_d = 0;  // meters
  double ospa_phi = 0;    // degrees
  double gain_rmse = 0;
  double phase_rmse = 0;  // degrees
  int k_hat = 0;
  int iterations = 0;
  bool converged = false;
  /// The estimator threw; metrics are zero and the record is left out of
  /// the aggregates.
  bool failed = false;
  std::string error;
  /// Hash of the measurement the run consumed; equal for the two modes of
  /// one trial.
  std::uint64_t y_hash = 0;
};

/// Per-sigma means over the successful records of each mode. A mode with no
/// successful record has no value.
struct SigmaAggregate {
  double sigma = 0;
  struct ModeStats {
    std::optional<double> ospa_tau_d, ospa_phi, gain_rmse, phase_rmse;
    int runs = 0;
    int failures = 0;
    int converged = 0;
  };
  ModeStats cal, nocal;

  const ModeStats& operator[](Mode m) const { return m == Mode::Cal ? cal : nocal; }
  ModeStats& operator[](Mode m) { return m == Mode::Cal ? cal : nocal; }
};

struct SweepResult {
  std::vector<TrialRecord> records;  // sorted by (sigma_index, trial, mode)
  std::vector<SigmaAggregate> aggregates;
  double wall_seconds = 0;
};

/// Byte-wise FNV-1a of the measurement vector.
std::uint64_t hash_measurement(const CVector<double>& y);

/// The synthetic realization behind one trial.
struct TrialData {
  Scenario<double> scenario;
  CVector<double> y;
};

TrialData make_trial_data(const ExperimentConfig& cfg, int sigma_index, int trial_index);

/// Runs the enabled modes of one trial on the same measurement.
std::vector<TrialRecord> run_trial(const ExperimentConfig& cfg, int sigma_index, int trial_index);

std::vector<SigmaAggregate> aggregate(const std::vector<TrialRecord>& records);

/// Checks that `dir` exists (creating it if needed) and accepts new files.
void ensure_writable(const std::filesystem::path& dir);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Runs every (sigma, trial) work item on a bounded pool. With a non-empty
/// out_dir the directory is checked before any computation.
SweepResult run_sweep(const ExperimentConfig& cfg, const ProgressFn& progress = {});

/// Writes OSPA_tau.csv, OSPA_phi.csv, RMSE_w_gain.csv, RMSE_w_phase.csv,
/// trials.csv and plot_results.py. Each file is written to a temporary name
/// and renamed into place.
void emit_outputs(const std::vector<TrialRecord>& records, const std::filesystem::path& out_dir);

/// Names of the files written by emit_outputs.
std::vector<std::string> output_file_names();

// Configuration documents (JSON). Absent keys keep their defaults; unknown
// keys are rejected.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
std::string dump_config(const ExperimentConfig& cfg);

}  // namespace fvsbl
