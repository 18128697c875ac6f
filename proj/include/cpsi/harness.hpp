#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpsi/covariance.hpp"
#include "cpsi/detector.hpp"
#include "cpsi/distributions.hpp"
#include "cpsi/inference.hpp"
#include "cpsi/rnn.hpp"

namespace cpsi {

enum class SignalKind { null_flat, mean_shift_staircase, linear_trend_piecewise };

struct SignalSpec {
  SignalKind kind = SignalKind::null_flat;
  int n = 60;
  double delta = 0.0;
  std::vector<int> true_cps;  // 1-based

  std::vector<double> mean() const;

  static SignalSpec null_spec(int n);
  // thirds at 0, delta, 2*delta; true CPs at n/3, 2n/3
  static SignalSpec mean_shift_staircase(int n, double delta);
  // flat, slope delta, flat again; true CPs at n/3, 2n/3
  static SignalSpec linear_trend_piecewise(int n, double delta);
};

struct NoiseModel {
  Covariance sigma;
  NoiseFamily family = NoiseFamily::gaussian;
  double family_param = 0.0;
};

// x = mu + L eps with L the Cholesky factor of Sigma and eps standardized
// i.i.d. draws from the family.
std::vector<double> sample_sequence(const SignalSpec& spec, const NoiseModel& noise,
                                    std::mt19937_64& rng);

// CP-free training sequences: per-sequence constant level (level_sd * N(0,1))
// plus unit white noise.
std::vector<std::vector<double>> make_training_sequences(int count, int len, double level_sd,
                                                         std::uint64_t seed);

// True iff, after sorting both, every detected CP is within +-L of its true
// counterpart. Requires equal lengths.
bool detection_correct(const std::vector<int>& tau_det, const std::vector<int>& true_cps, int L);

// Max over the K+1 detected segments of the within-segment sample variance;
// segments shorter than 2 are skipped.
double estimate_variance_robust(std::span<const double> x, const std::vector<int>& tau_det);

// Deterministic per-trial RNG stream.
std::uint64_t splitmix64(std::uint64_t x);
std::mt19937_64 trial_rng(std::uint64_t master_seed, std::uint64_t cell, std::uint64_t trial);

// ---------------------------------------------------------------------------
// Monte Carlo experiment runners

enum class Method { selective, oc, naive };
constexpr int kMethodCount = 3;
const char* method_name(Method m);

struct ExperimentConfig {
  std::string kind = "type1";  // type1 | power
  Problem problem = Problem::mean_shift;
  std::vector<int> n_list = {40};              // type1 cells
  std::vector<double> delta_list = {1, 2, 3, 4};  // power cells
  int n_power = 60;
  int trials = 500;
  double alpha = 0.05;
  int match_window = 2;  // L
  bool methods[kMethodCount] = {true, true, true};
  std::string sigma_kind = "identity";  // identity | ar
  double rho = 0.5;
  double sigma_scale = 1.0;
  NoiseFamily family = NoiseFamily::gaussian;
  double family_param = 0.0;
  bool estimate_variance = false;
  int threads = 0;  // 0 = hardware concurrency
  std::uint64_t seed = 1;
  DetectorConfig detector;
  PathOptions si;

  nlohmann::json echo() const;
};

struct TrialTestRecord {
  int k = 0;
  int tau = 0;
  double p[kMethodCount] = {-1.0, -1.0, -1.0};     // -1 = not computed
  int rejected[kMethodCount] = {-1, -1, -1};       // -1 = n/a
  double p_sel_lower = -1.0, p_sel_upper = -1.0;
  bool sel_decided = false;
  long iterations = 0;
};

struct TrialRecord {
  long trial = 0;
  double cell = 0.0;  // n (type1) or delta (power)
  bool detected = false;
  bool correct = false;
  std::vector<TrialTestRecord> tests;
  std::string failure;  // nonempty when the trial was excluded
};

struct CellSummary {
  double cell = 0.0;
  long trials = 0;
  long detected = 0;
  long correct = 0;
  long failures = 0;
  long tested[kMethodCount] = {0, 0, 0};
  long rejected[kMethodCount] = {0, 0, 0};
  long all_rejected_trials[kMethodCount] = {0, 0, 0};  // every k rejected
  double rate(Method m) const;
  double power_per_cp(Method m) const { return rate(m); }
  double power_per_trial(Method m) const;
};

struct ExperimentReport {
  std::string kind;
  nlohmann::json config;
  std::uint64_t master_seed = 0;
  std::vector<TrialRecord> trials;
  std::vector<CellSummary> cells;
};

ExperimentReport run_type1(const ExperimentConfig& cfg, const RnnWeights& weights);
ExperimentReport run_power(const ExperimentConfig& cfg, const RnnWeights& weights);

// ---------------------------------------------------------------------------
// Reporting

// One-sample Kolmogorov-Smirnov test against Uniform[0,1].
double ks_uniform_pvalue(std::vector<double> sample);

struct BinomialCi {
  double lo = 0.0, hi = 1.0;
};
BinomialCi wilson_ci(long successes, long n);

void write_trials_csv(const ExperimentReport& report, const std::string& path);
nlohmann::json summary_json(const ExperimentReport& report);
void write_summary_json(const ExperimentReport& report, const std::string& path);
// Simple rate-vs-cell line chart.
void write_rate_svg(const ExperimentReport& report, const std::string& path);

}  // namespace cpsi
