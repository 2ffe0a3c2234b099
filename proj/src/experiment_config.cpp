// SPDX-License-Identifier: Apache-2.0
//
// JSON configuration documents for the sweep. Every field is optional and
// overrides the corresponding default; unknown keys are errors so typos do
// not silently fall back to defaults.

#include "fvsbl/experiment.hpp"

#include <json.hpp>

#include <fstream>
#include <initializer_list>
#include <sstream>

namespace fvsbl {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known |= key == a;
    if (!known) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void read_estimator(const json& j, EstimatorConfig<double>& e, Index num_elements) {
  const std::string where = "estimator";
  check_keys(j, where,
             {"max_iters", "tol", "max_components", "refinement_evaluations", "fix_gauge", "hyper", "weight_prior",
              "theta_grid"});
  read(j, "max_iters", e.max_iters, where);
  read(j, "tol", e.tol, where);
  read(j, "max_components", e.max_components, where);
  read(j, "refinement_evaluations", e.refinement_evaluations, where);
  read(j, "fix_gauge", e.fix_gauge, where);

  if (j.contains("hyper")) {
    const auto& h = j.at("hyper");
    check_keys(h, "estimator.hyper", {"a", "b", "eps", "eta", "chi", "false_alarm"});
    read(h, "a", e.hyper.a, "estimator.hyper");
    read(h, "b", e.hyper.b, "estimator.hyper");
    read(h, "eps", e.hyper.eps, "estimator.hyper");
    read(h, "eta", e.hyper.eta, "estimator.hyper");
    read(h, "false_alarm", e.hyper.false_alarm, "estimator.hyper");
    if (h.contains("chi")) {
      if (h.at("chi").is_null()) {
        e.hyper.chi.reset();
      } else {
        double chi = 0;
        read(h, "chi", chi, "estimator.hyper");
        e.hyper.chi = chi;
      }
    }
  }

  if (j.contains("weight_prior")) {
    const auto& w = j.at("weight_prior");
    check_keys(w, "estimator.weight_prior", {"mean_re", "mean_im", "var"});
    double re = 1, im = 0, var = 100;
    read(w, "mean_re", re, "estimator.weight_prior");
    read(w, "mean_im", im, "estimator.weight_prior");
    read(w, "var", var, "estimator.weight_prior");
    e.weight_prior = WeightPrior<double>::uniform(num_elements, {re, im}, var);
  }

  if (j.contains("theta_grid")) {
    const auto& g = j.at("theta_grid");
    const std::string gw = "estimator.theta_grid";
    check_keys(g, gw, {"tau_step_s", "tau_min_s", "tau_max_s", "phi_step_deg", "phi_min_deg", "phi_max_deg"});
    ThetaGridSpec<double> spec = e.theta_grid.value_or(ThetaGridSpec<double>{});
    double phi_step = rad2deg(spec.phi_step), phi_min = rad2deg(spec.phi_min), phi_max = rad2deg(spec.phi_max);
    read(g, "tau_step_s", spec.tau_step, gw);
    read(g, "tau_min_s", spec.tau_min, gw);
    read(g, "tau_max_s", spec.tau_max, gw);
    read(g, "phi_step_deg", phi_step, gw);
    read(g, "phi_min_deg", phi_min, gw);
    read(g, "phi_max_deg", phi_max, gw);
    spec.phi_step = deg2rad(phi_step);
    spec.phi_min = deg2rad(phi_min);
    spec.phi_max = deg2rad(phi_max);
    e.theta_grid = spec;
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, ExperimentConfig cfg) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  check_keys(root, "config",
             {"sigma_grid", "trials_per_sigma", "master_seed", "out_dir", "parallelism", "modes", "array", "scenario",
              "estimator", "metrics"});
  read(root, "sigma_grid", cfg.sigma_grid, "config");
  read(root, "trials_per_sigma", cfg.trials_per_sigma, "config");
  read(root, "master_seed", cfg.master_seed, "config");
  read(root, "parallelism", cfg.parallelism, "config");
  if (root.contains("out_dir")) {
    std::string dir;
    read(root, "out_dir", dir, "config");
    cfg.out_dir = dir;
  }

  if (root.contains("modes")) {
    const auto& m = root.at("modes");
    check_keys(m, "modes", {"cal", "nocal"});
    read(m, "cal", cfg.run_cal, "modes");
    read(m, "nocal", cfg.run_nocal, "modes");
  }

  if (root.contains("array")) {
    const auto& a = root.at("array");
    check_keys(a, "array", {"num_elements", "num_samples", "bandwidth_hz", "carrier_hz"});
    Index num_elements = cfg.setup.geometry.size(), num_samples = cfg.setup.grid.num_samples;
    double bandwidth = cfg.setup.grid.bandwidth(), carrier = cfg.setup.grid.carrier;
    read(a, "num_elements", num_elements, "array");
    read(a, "num_samples", num_samples, "array");
    read(a, "bandwidth_hz", bandwidth, "array");
    read(a, "carrier_hz", carrier, "array");
    if (num_elements < 1 || num_samples < 1 || !(bandwidth > 0) || !(carrier > 0))
      throw ConfigError("array: sizes and frequencies must be positive");
    cfg.setup = ArraySetup<double>::defaults(num_elements, num_samples, bandwidth, carrier);
  }

  if (root.contains("scenario")) {
    const auto& s = root.at("scenario");
    check_keys(s, "scenario", {"distances_m", "angles_deg", "snrs_db", "noise_precision"});
    read(s, "distances_m", cfg.layout.distances_m, "scenario");
    read(s, "angles_deg", cfg.layout.angles_deg, "scenario");
    read(s, "snrs_db", cfg.layout.snrs_db, "scenario");
    read(s, "noise_precision", cfg.layout.noise_precision, "scenario");
  }

  if (root.contains("estimator")) read_estimator(root.at("estimator"), cfg.estimator, cfg.setup.geometry.size());

  if (root.contains("metrics")) {
    const auto& m = root.at("metrics");
    check_keys(m, "metrics", {"cutoff_tau_d_m", "cutoff_phi_deg", "ospa_order"});
    read(m, "cutoff_tau_d_m", cfg.metrics.cutoff_tau_d, "metrics");
    read(m, "cutoff_phi_deg", cfg.metrics.cutoff_phi, "metrics");
    read(m, "ospa_order", cfg.metrics.ospa_order, "metrics");
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read configuration file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string dump_config(const ExperimentConfig& cfg) {
  json j;
  j["sigma_grid"] = cfg.sigma_grid;
  j["trials_per_sigma"] = cfg.trials_per_sigma;
  j["master_seed"] = cfg.master_seed;
  j["out_dir"] = cfg.out_dir.string();
  j["parallelism"] = cfg.parallelism;
  j["modes"] = {{"cal", cfg.run_cal}, {"nocal", cfg.run_nocal}};
  j["array"] = {{"num_elements", cfg.setup.geometry.size()},
                {"num_samples", cfg.setup.grid.num_samples},
                {"bandwidth_hz", cfg.setup.grid.bandwidth()},
                {"carrier_hz", cfg.setup.grid.carrier}};
  j["scenario"] = {{"distances_m", cfg.layout.distances_m},
                   {"angles_deg", cfg.layout.angles_deg},
                   {"snrs_db", cfg.layout.snrs_db},
                   {"noise_precision", cfg.layout.noise_precision}};
  const auto& e = cfg.estimator;
  json hyper = {{"a", e.hyper.a}, {"b", e.hyper.b}, {"eps", e.hyper.eps}, {"eta", e.hyper.eta},
                {"false_alarm", e.hyper.false_alarm}};
  hyper["chi"] = e.hyper.chi ? json(*e.hyper.chi) : json(nullptr);
  json est = {{"max_iters", e.max_iters},
              {"tol", e.tol},
              {"max_components", e.max_components},
              {"refinement_evaluations", e.refinement_evaluations},
              {"fix_gauge", e.fix_gauge},
              {"hyper", hyper}};
  if (e.weight_prior && e.weight_prior->mean.size() > 0) {
    const auto& wp = *e.weight_prior;
    est["weight_prior"] = {{"mean_re", wp.mean(0).real()}, {"mean_im", wp.mean(0).imag()}, {"var", wp.var(0)}};
  }
  if (e.theta_grid) {
    const auto& g = *e.theta_grid;
    est["theta_grid"] = {{"tau_step_s", g.tau_step},          {"tau_min_s", g.tau_min},
                         {"tau_max_s", g.tau_max},            {"phi_step_deg", rad2deg(g.phi_step)},
                         {"phi_min_deg", rad2deg(g.phi_min)}, {"phi_max_deg", rad2deg(g.phi_max)}};
  }
  j["estimator"] = est;
  j["metrics"] = {{"cutoff_tau_d_m", cfg.metrics.cutoff_tau_d},
                  {"cutoff_phi_deg", cfg.metrics.cutoff_phi},
                  {"ospa_order", cfg.metrics.ospa_order}};
  return j.dump(2) + "\n";
}

}  // namespace fvsbl
