#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "millibot/scenario.hpp"

namespace millibot::harness {

struct Metrics {
  double rmse = 0.0;
  double p95 = 0.0;  // linear interpolation between order statistics
  double max = 0.0;
};

Metrics metrics(const std::vector<double>& err);  // EmptySeriesError if empty

struct StepRecord {
  double t = 0.0;
  Vec2 pos_mm{0.0, 0.0};   // true position
  Vec2 des_mm{0.0, 0.0};   // reference position
  double err_mm = 0.0;
  Vec2 f_des_n{0.0, 0.0};  // commanded force before allocation
  std::array<double, 8> currents_a{};
  Vec2 s{0.0, 0.0};
  Vec2 d_hat{0.0, 0.0};
  bool saturated = false;
  bool meas_valid = true;
  bool retune_active = false;
};

struct TrialResult {
  std::vector<StepRecord> steps;
  Metrics err;
  bool completed = false;
  std::optional<std::string> failure_reason;
  double duration_s = 0.0;
  double saturated_fraction = 0.0;  // ticks with clipped allocation
  std::vector<Vec2> waypoints_mm;
  std::uint64_t hash = 0;
};

// One closed-loop mission at a fixed sensing/actuation rate: measure,
// estimate, advance the reference, retune, run the controller (holding the
// last command through dropouts), allocate coil currents, re-derive the
// wrench the coils actually apply at the true pose, integrate the plant.
TrialResult run_trial(const Scenario& scenario);

struct ScenarioStats {
  std::string name;
  int n_trials = 0;
  int n_completed = 0;
  double rmse_mean = 0.0, rmse_std = 0.0;
  double p95_mean = 0.0, p95_std = 0.0;
  double max_mean = 0.0, max_std = 0.0;
  std::vector<TrialResult> trials;
};

struct SuiteResult {
  std::string name;
  std::vector<ScenarioStats> scenarios;
};

// Runs every scenario n_trials times (trial k uses seed + k). Trials execute
// in parallel, at most MILLIBOT_THREADS workers (hardware concurrency when
// unset); results are merged in declaration order so output is stable.
SuiteResult run_suite(const SuiteConfig& cfg);

// File emitters. All floats go through shortest round-trip formatting, so
// identical runs produce identical bytes.
void write_steps_csv(const std::string& path, const TrialResult& r);
void write_trial_summary(const std::string& path, const Scenario& s,
                         const TrialResult& r);
void write_trial_overlay(const std::string& path, const Scenario& s,
                         const TrialResult& r);
void emit_trial(const std::string& dir, const Scenario& s, const TrialResult& r);

void write_suite_summary(const std::string& path, const SuiteResult& r);
std::string suite_table(const SuiteResult& r);

// Re-derives (rmse, p95, max) from an emitted steps.csv.
Metrics metrics_from_steps_csv(const std::string& path);

}  // namespace millibot::harness
