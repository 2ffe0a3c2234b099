// SPDX-License-Identifier: Apache-2.0

#include "fvsbl/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>
#include <tuple>

namespace fvsbl {

const char* to_string(Mode m) { return m == Mode::Cal ? "cal" : "nocal"; }

std::vector<double> ExperimentConfig::default_sigma_grid() {
  constexpr int n = 8;
  const double lo = std::log10(1e-3), hi = std::log10(0.35);
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = std::pow(10.0, lo + (hi - lo) * i / (n - 1));
  return g;
}

std::filesystem::path ExperimentConfig::default_out_dir() {
  const char* env = std::getenv("FVSBL_OUT_DIR");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("results");
}

void ExperimentConfig::validate() const {
  if (sigma_grid.empty()) throw ConfigError("sigma_grid must not be empty");
  for (double s : sigma_grid)
    if (!(s >= 0) || !std::isfinite(s)) throw ConfigError("sigma_grid values must be finite and non-negative");
  if (trials_per_sigma < 1) throw ConfigError("trials_per_sigma must be >= 1");
  if (parallelism < 0) throw ConfigError("parallelism must be >= 0");
  if (!run_cal && !run_nocal) throw ConfigError("at least one of the cal and nocal modes must be enabled");
  try {
    setup.geometry.validate();
    setup.grid.validate();
    estimator.hyper.validate();
    if (estimator.theta_grid) estimator.theta_grid->validate();
    if (estimator.weight_prior) estimator.weight_prior->validate(setup.geometry.size());
    metrics.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (estimator.max_iters < 1) throw ConfigError("estimator.max_iters must be >= 1");
  if (!(estimator.tol > 0)) throw ConfigError("estimator.tol must be positive");
  const auto k = layout.distances_m.size();
  if (layout.angles_deg.size() != k || layout.snrs_db.size() != k)
    throw ConfigError("scenario distances, angles and SNRs must have equal length");
  if (!(layout.noise_precision > 0)) throw ConfigError("scenario noise_precision must be positive");
}

int ExperimentConfig::resolved_parallelism() const {
  if (parallelism > 0) return parallelism;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::uint64_t hash_measurement(const CVector<double>& y) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(y.data());
  const std::size_t len = static_cast<std::size_t>(y.size()) * sizeof(std::complex<double>);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

TrialData make_trial_data(const ExperimentConfig& cfg, int sigma_index, int trial_index) {
  Rng trial_rng = substream(cfg.master_seed, {static_cast<std::uint64_t>(sigma_index),
                                              static_cast<std::uint64_t>(trial_index)});
  const std::uint64_t trial_seed = trial_rng();
  TrialData d;
  d.scenario = default_scenario(cfg.sigma_grid.at(static_cast<std::size_t>(sigma_index)), trial_seed, cfg.setup,
                                cfg.layout);
  Rng noise_rng = substream(trial_seed, {1});
  d.y = synthesize_measurement(d.scenario.truth, d.scenario.calibration, d.scenario.config.noise_precision,
                               cfg.setup.geometry, cfg.setup.grid, noise_rng);
  return d;
}

namespace {

TrialRecord evaluate_run(const ExperimentConfig& cfg, const TrialData& data, Mode mode) {
  const auto& setup = cfg.setup;
  TrialRecord rec;
  rec.mode = mode;
  rec.y_hash = hash_measurement(data.y);

  EstimatorConfig<double> ec = cfg.estimator;
  ec.calibration_enabled = mode == Mode::Cal;
  try {
    const auto res = run_fvsbl(data.y, setup.geometry, setup.grid, ec);
    std::vector<double> est_d, est_phi, true_d, true_phi;
    for (const auto& t : res.thetas) {
      est_d.push_back(tau_to_distance(t.tau, setup.grid.c));
      est_phi.push_back(rad2deg(t.phi));
    }
    for (const auto& c : data.scenario.truth.components) {
      true_d.push_back(tau_to_distance(c.theta.tau, setup.grid.c));
      true_phi.push_back(rad2deg(c.theta.phi));
    }
    rec.ospa_tau_d = ospa(est_d, true_d, cfg.metrics.cutoff_tau_d, cfg.metrics.ospa_order);
    rec.ospa_phi = ospa(est_phi, true_phi, cfg.metrics.cutoff_phi, cfg.metrics.ospa_order);
    const auto& w_true = data.scenario.calibration.w;
    const auto rm = rmse_weights({res.w_hat.data(), static_cast<std::size_t>(res.w_hat.size())},
                                 {w_true.data(), static_cast<std::size_t>(w_true.size())}, mode == Mode::Cal);
    rec.gain_rmse = rm.gain;
    rec.phase_rmse = rm.phase_deg;
    rec.k_hat = static_cast<int>(res.k_hat);
    rec.iterations = res.iterations;
    rec.converged = res.converged;
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  return rec;
}

}  // namespace

std::vector<TrialRecord> run_trial(const ExperimentConfig& cfg, int sigma_index, int trial_index) {
  const TrialData data = make_trial_data(cfg, sigma_index, trial_index);
  std::vector<TrialRecord> out;
  for (Mode m : {Mode::Cal, Mode::NoCal}) {
    if ((m == Mode::Cal && !cfg.run_cal) || (m == Mode::NoCal && !cfg.run_nocal)) continue;
    auto rec = evaluate_run(cfg, data, m);
    rec.sigma = cfg.sigma_grid[static_cast<std::size_t>(sigma_index)];
    rec.sigma_index = sigma_index;
    rec.trial_index = trial_index;
    out.push_back(std::move(rec));
  }
  if (out.size() == 2 && out[0].y_hash != out[1].y_hash)
    throw std::logic_error("run_trial: cal and nocal runs saw different measurements");
  return out;
}

std::vector<SigmaAggregate> aggregate(const std::vector<TrialRecord>& records) {
  struct Sums {
    double tau = 0, phi = 0, gain = 0, phase = 0;
    int ok = 0, failed = 0, converged = 0;
  };
  std::map<int, std::pair<double, std::array<Sums, 2>>> by_sigma;
  for (const auto& r : records) {
    auto& [sigma, sums] = by_sigma[r.sigma_index];
    sigma = r.sigma;
    auto& s = sums[r.mode == Mode::Cal ? 0 : 1];
    if (r.failed) {
      ++s.failed;
      continue;
    }
    s.tau += r.ospa_tau_d;
    s.phi += r.ospa_phi;
    s.gain += r.gain_rmse;
    s.phase += r.phase_rmse;
    ++s.ok;
    s.converged += r.converged;
  }
  std::vector<SigmaAggregate> out;
  for (const auto& [idx, entry] : by_sigma) {
    SigmaAggregate a;
    a.sigma = entry.first;
    for (Mode m : {Mode::Cal, Mode::NoCal}) {
      const Sums& s = entry.second[m == Mode::Cal ? 0 : 1];
      auto& st = a[m];
      st.runs = s.ok + s.failed;
      st.failures = s.failed;
      st.converged = s.converged;
      if (s.ok > 0) {
        st.ospa_tau_d = s.tau / s.ok;
        st.ospa_phi = s.phi / s.ok;
        st.gain_rmse = s.gain / s.ok;
        st.phase_rmse = s.phase / s.ok;
      }
    }
    out.push_back(a);
  }
  return out;
}

void ensure_writable(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  if (!fs::is_directory(dir)) throw IoError("output path is not a directory: " + dir.string());
  const fs::path probe = dir / ".fvsbl_write_probe";
  {
    std::ofstream f(probe);
    if (!f || !(f << "ok") || !f.flush()) throw IoError("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

SweepResult run_sweep(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  if (!cfg.out_dir.empty()) ensure_writable(cfg.out_dir);
  const auto t0 = std::chrono::steady_clock::now();

  const std::size_t n_sigma = cfg.sigma_grid.size();
  const std::size_t n_items = n_sigma * static_cast<std::size_t>(cfg.trials_per_sigma);
  std::vector<std::vector<TrialRecord>> slots(n_items);
  std::atomic<std::size_t> next{0}, done{0};
  std::mutex progress_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    for (std::size_t i = next++; i < n_items; i = next++) {
      const int si = static_cast<int>(i / static_cast<std::size_t>(cfg.trials_per_sigma));
      const int ti = static_cast<int>(i % static_cast<std::size_t>(cfg.trials_per_sigma));
      try {
        slots[i] = run_trial(cfg, si, ti);
      } catch (...) {
        std::lock_guard lock(progress_mutex);
        if (!first_error) first_error = std::current_exception();
        next = n_items;
        return;
      }
      const std::size_t d = ++done;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(d, n_items);
      }
    }
  };
  const int workers = std::min<int>(cfg.resolved_parallelism(), static_cast<int>(n_items));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (first_error) std::rethrow_exception(first_error);

  SweepResult res;
  for (auto& s : slots)
    for (auto& r : s) res.records.push_back(std::move(r));
  std::stable_sort(res.records.begin(), res.records.end(), [](const TrialRecord& a, const TrialRecord& b) {
    return std::tie(a.sigma_index, a.trial_index, a.mode) < std::tie(b.sigma_index, b.trial_index, b.mode);
  });
  res.aggregates = aggregate(res.records);
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

namespace {

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string format_optional(const std::optional<double>& v) { return v ? format_value(*v) : std::string(); }

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string());
  }
}

constexpr const char* kPlotScript = R"(#!/usr/bin/env python3
"""Plots the sweep tables written next to this script."""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def read(name):
    with open(os.path.join(HERE, name), newline="") as f:
        rows = list(csv.DictReader(f))
    cols = {k: [] for k in rows[0].keys()} if rows else {}
    for r in rows:
        for k, v in r.items():
            cols[k].append(float(v) if v != "" else float("nan"))
    return cols


def panel(ax, name, key, ylabel, logy):
    d = read(name)
    x = d["sigma_sim2"]
    ax.plot(x, d[key + "_cal"], "o-", label="calibration")
    ax.plot(x, d[key + "_nocal"], "s--", label="no calibration")
    ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlim(1e-3, 3.5e-1)
    ax.set_xlabel(r"$\sigma_{\mathrm{w,sim}}$")
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()


def main():
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    panel(axes[0], "OSPA_tau.csv", "OSPA_tau", "mean OSPA delay distance [m]", False)
    panel(axes[1], "OSPA_phi.csv", "OSPA_phi", "mean OSPA angle [deg]", False)
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, "ospa.png"), dpi=150)

    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    panel(axes[0], "RMSE_w_gain.csv", "RMSE_w_gain", "gain RMSE", True)
    panel(axes[1], "RMSE_w_phase.csv", "RMSE_w_phase", "phase RMSE [deg]", True)
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, "rmse_weights.png"), dpi=150)
    if "--show" in sys.argv:
        plt.show()


if __name__ == "__main__":
    main()
)";

}  // namespace

std::vector<std::string> output_file_names() {
  return {"OSPA_tau.csv", "OSPA_phi.csv", "RMSE_w_gain.csv", "RMSE_w_phase.csv", "trials.csv", "plot_results.py"};
}

void emit_outputs(const std::vector<TrialRecord>& records, const std::filesystem::path& out_dir) {
  if (records.empty()) throw std::invalid_argument("emit_outputs: no records");
  ensure_writable(out_dir);
  const auto aggs = aggregate(records);

  using Field = std::optional<double> SigmaAggregate::ModeStats::*;
  const std::pair<const char*, Field> tables[] = {
      {"OSPA_tau", &SigmaAggregate::ModeStats::ospa_tau_d},
      {"OSPA_phi", &SigmaAggregate::ModeStats::ospa_phi},
      {"RMSE_w_gain", &SigmaAggregate::ModeStats::gain_rmse},
      {"RMSE_w_phase", &SigmaAggregate::ModeStats::phase_rmse},
  };
  for (const auto& [key, field] : tables) {
    std::ostringstream os;
    os << "sigma_sim2," << key << "_cal," << key << "_nocal\n";
    for (const auto& a : aggs)
      os << format_value(a.sigma) << ',' << format_optional(a.cal.*field) << ',' << format_optional(a.nocal.*field)
         << '\n';
    write_atomic(out_dir / (std::string(key) + ".csv"), os.str());
  }

  std::ostringstream os;
  os << "sigma,sigma_index,trial,mode,ospa_tau_d,ospa_phi,gain_rmse,phase_rmse,k_hat,iterations,converged,failed,"
        "y_hash\n";
  for (const auto& r : records) {
    char hash[20];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.y_hash));
    os << format_value(r.sigma) << ',' << r.sigma_index << ',' << r.trial_index << ',' << to_string(r.mode) << ','
       << format_value(r.ospa_tau_d) << ',' << format_value(r.ospa_phi) << ',' << format_value(r.gain_rmse) << ','
       << format_value(r.phase_rmse) << ',' << r.k_hat << ',' << r.iterations << ',' << int(r.converged) << ','
       << int(r.failed) << ',' << hash << '\n';
  }
  write_atomic(out_dir / "trials.csv", os.str());
  write_atomic(out_dir / "plot_results.py", kPlotScript);
}

}  // namespace fvsbl
