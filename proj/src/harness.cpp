#include "cpsi/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "cpsi/errors.hpp"

namespace cpsi {

std::vector<double> SignalSpec::mean() const {
  std::vector<double> mu(n, 0.0);
  switch (kind) {
    case SignalKind::null_flat:
      break;
    case SignalKind::mean_shift_staircase: {
      const int a = true_cps[0], b = true_cps[1];
      for (int i = a; i < b; ++i) mu[i] = delta;
      for (int i = b; i < n; ++i) mu[i] = 2.0 * delta;
      break;
    }
    case SignalKind::linear_trend_piecewise: {
      const int a = true_cps[0], b = true_cps[1];
      for (int i = a; i < b; ++i) mu[i] = (i + 1 - a) * delta;
      for (int i = b; i < n; ++i) mu[i] = (b - a) * delta;
      break;
    }
  }
  return mu;
}

SignalSpec SignalSpec::null_spec(int n) {
  SignalSpec s;
  s.kind = SignalKind::null_flat;
  s.n = n;
  return s;
}

SignalSpec SignalSpec::mean_shift_staircase(int n, double delta) {
  SignalSpec s;
  s.kind = SignalKind::mean_shift_staircase;
  s.n = n;
  s.delta = delta;
  s.true_cps = {n / 3, 2 * n / 3};
  return s;
}

SignalSpec SignalSpec::linear_trend_piecewise(int n, double delta) {
  SignalSpec s;
  s.kind = SignalKind::linear_trend_piecewise;
  s.n = n;
  s.delta = delta;
  s.true_cps = {n / 3, 2 * n / 3};
  return s;
}

std::vector<double> sample_sequence(const SignalSpec& spec, const NoiseModel& noise,
                                    std::mt19937_64& rng) {
  const int n = spec.n;
  if (noise.sigma.dim() != n) throw ModelError("sample_sequence: covariance dimension mismatch");
  std::vector<double> eps(n);
  for (int i = 0; i < n; ++i) eps[i] = family_sample(noise.family, noise.family_param, rng);
  std::vector<double> x = spec.mean();
  const std::vector<double>& L = noise.sigma.cholesky();
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    const double* row = L.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j <= i; ++j) s += row[j] * eps[j];
    x[i] += s;
  }
  return x;
}

std::vector<std::vector<double>> make_training_sequences(int count, int len, double level_sd,
                                                         std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed ^ 0x7261696e5f736571ULL));
  std::normal_distribution<double> stdnorm(0.0, 1.0);
  std::vector<std::vector<double>> out(count);
  for (auto& seq : out) {
    const double level = level_sd * stdnorm(rng);
    seq.resize(len);
    for (double& v : seq) v = level + stdnorm(rng);
  }
  return out;
}

bool detection_correct(const std::vector<int>& tau_det, const std::vector<int>& true_cps, int L) {
  if (tau_det.size() != true_cps.size()) throw InvalidInput("detection_correct: length mismatch");
  std::vector<int> a = tau_det, b = true_cps;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > L) return false;
  return true;
}

double estimate_variance_robust(std::span<const double> x, const std::vector<int>& tau_det) {
  const int n = static_cast<int>(x.size());
  std::vector<int> cuts;
  cuts.push_back(0);
  for (int t : tau_det) cuts.push_back(t);
  cuts.push_back(n);
  double best = -1.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const int a = cuts[s], b = cuts[s + 1];
    const int len = b - a;
    if (len < 2) continue;
    double mean = 0.0;
    for (int i = a; i < b; ++i) mean += x[i];
    mean /= len;
    double ss = 0.0;
    for (int i = a; i < b; ++i) ss += (x[i] - mean) * (x[i] - mean);
    best = std::max(best, ss / (len - 1));
  }
  if (best <= 0.0)
    throw ModelError("estimate_variance_robust: no segment of length >= 2 with positive variance");
  return best;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 trial_rng(std::uint64_t master_seed, std::uint64_t cell, std::uint64_t trial) {
  return std::mt19937_64(splitmix64(master_seed ^ splitmix64((cell << 32) + trial)));
}

const char* method_name(Method m) {
  switch (m) {
    case Method::selective: return "selective";
    case Method::oc: return "oc";
    case Method::naive: return "naive";
  }
  return "?";
}

nlohmann::json ExperimentConfig::echo() const {
  nlohmann::json j;
  j["kind"] = kind;
  j["problem"] = problem == Problem::mean_shift ? "mean" : "trend";
  j["n_list"] = n_list;
  j["delta_list"] = delta_list;
  j["n_power"] = n_power;
  j["trials"] = trials;
  j["alpha"] = alpha;
  j["match_window"] = match_window;
  nlohmann::json ms = nlohmann::json::array();
  for (int m = 0; m < kMethodCount; ++m)
    if (methods[m]) ms.push_back(method_name(static_cast<Method>(m)));
  j["methods"] = ms;
  j["sigma"] = sigma_kind == "identity"
                   ? nlohmann::json{{"kind", "identity"}, {"scale", sigma_scale}}
                   : nlohmann::json{{"kind", "ar"}, {"rho", rho}, {"scale", sigma_scale}};
  j["family"] = family_name(family);
  j["family_param"] = family_param;
  j["estimate_variance"] = estimate_variance;
  j["seed"] = seed;
  j["detector"] = {{"K", detector.K}, {"l", detector.l}, {"m", detector.m}, {"w", detector.w}};
  j["si"] = {{"bounds_mult", si.bounds_mult},
             {"step_fraction", si.step_fraction},
             {"max_iterations", si.max_iterations},
             {"stop_on_tol", si.stop_on_tol},
             {"tol", si.tol},
             {"stop_on_alpha", si.stop_on_alpha},
             {"alpha", si.alpha}};
  return j;
}

double CellSummary::rate(Method m) const {
  const int i = static_cast<int>(m);
  return tested[i] > 0 ? static_cast<double>(rejected[i]) / tested[i] : 0.0;
}

double CellSummary::power_per_trial(Method m) const {
  const int i = static_cast<int>(m);
  return correct > 0 ? static_cast<double>(all_rejected_trials[i]) / correct : 0.0;
}

namespace {

Covariance build_sigma(const ExperimentConfig& cfg, int n) {
  if (cfg.sigma_kind == "identity") return Covariance::identity(n, cfg.sigma_scale);
  if (cfg.sigma_kind == "ar") return Covariance::ar(n, cfg.rho, cfg.sigma_scale);
  throw InvalidInput("experiment: sigma kind must be identity or ar");
}

// One trial; fills rec. Throwing errors are caught by the caller and recorded
// as trial failures.
void run_trial(const ExperimentConfig& cfg, const RnnWeights& weights, const SignalSpec& spec,
               const NoiseModel& noise, const Covariance& sigma_known, std::mt19937_64 rng,
               TrialRecord& rec) {
  const std::vector<double> x = sample_sequence(spec, noise, rng);

  DetectionResult det;
  try {
    det = detect(x, weights, cfg.detector);
  } catch (const DetectionFailure&) {
    rec.detected = false;
    return;
  }
  rec.detected = true;

  if (cfg.kind == "power") {
    rec.correct = detection_correct(det.tau_det, spec.true_cps, cfg.match_window);
    if (!rec.correct) return;  // tests run only on correctly detected trials
  } else {
    rec.correct = true;
  }

  const int n = spec.n;
  Covariance sigma_test = cfg.estimate_variance
                              ? Covariance::identity(n, estimate_variance_robust(x, det.tau_det))
                              : sigma_known;

  const bool want_sel = cfg.methods[static_cast<int>(Method::selective)];
  const bool want_oc = cfg.methods[static_cast<int>(Method::oc)];
  const bool want_naive = cfg.methods[static_cast<int>(Method::naive)];

  for (int k = 1; k <= cfg.detector.K; ++k) {
    const std::vector<double> eta = (cfg.problem == Problem::mean_shift)
                                        ? eta_mean_shift(det.tau_det, k, n)
                                        : eta_trend_shift(det.tau_det, k, n);
    TestDirection dir = line_params(x, eta, sigma_test);
    dir.k = k;
    dir.problem = cfg.problem;

    TrialTestRecord t;
    t.k = k;
    t.tau = det.tau_det[k - 1];

    if (want_sel || want_oc) {
      PathOptions opts = cfg.si;
      if (!want_sel) {
        // only the witness region is needed
        opts.max_iterations = 1;
        opts.stop_on_tol = opts.stop_on_alpha = false;
      }
      PathResult path;
      if (want_sel) {
        path = compute_solution_path(dir, det.tau_det, weights, cfg.detector, opts);
        t.iterations = path.iterations;
        t.p_sel_lower = path.p_lower;
        t.p_sel_upper = path.p_upper;
        t.sel_decided = path.decided || path.exhausted;
        const double mid = path.exhausted ? path.p_lower : 0.5 * (path.p_lower + path.p_upper);
        t.p[0] = mid;
        int rej;
        if (path.p_upper <= cfg.alpha)
          rej = 1;
        else if (path.p_lower > cfg.alpha)
          rej = 0;
        else
          rej = mid <= cfg.alpha ? 1 : 0;
        t.rejected[0] = rej;
        if (want_oc) {
          const double p_oc = truncated_normal_p(
              dir.z_obs, dir.sd, path.oc_witness_region.clip(path.bound_lo, path.bound_hi));
          t.p[1] = p_oc;
          t.rejected[1] = p_oc <= cfg.alpha ? 1 : 0;
        }
      } else {
        const AffineVector line{dir.a_line, dir.b_line};
        OcRegionResult oc = oc_region(line, dir.z_obs, weights, cfg.detector);
        const double blo = dir.z_obs - opts.bounds_mult * dir.sd;
        const double bhi = dir.z_obs + opts.bounds_mult * dir.sd;
        const double p_oc = truncated_normal_p(dir.z_obs, dir.sd, oc.region.clip(blo, bhi));
        t.p[1] = p_oc;
        t.rejected[1] = p_oc <= cfg.alpha ? 1 : 0;
      }
    }
    if (want_naive) {
      const double p_naive = truncated_normal_p(dir.z_obs, dir.sd, IntervalSet::full_line());
      t.p[2] = p_naive;
      t.rejected[2] = p_naive <= cfg.alpha ? 1 : 0;
    }
    rec.tests.push_back(std::move(t));
  }
}

ExperimentReport run_cells(const ExperimentConfig& cfg, const RnnWeights& weights,
                           const std::vector<double>& cells,
                           const std::vector<SignalSpec>& specs) {
  ExperimentReport report;
  report.kind = cfg.kind;
  report.config = cfg.echo();
  report.master_seed = cfg.seed;

  const int threads = cfg.threads > 0 ? cfg.threads
                                      : std::max(1u, std::thread::hardware_concurrency());

  for (std::size_t c = 0; c < cells.size(); ++c) {
    const SignalSpec& spec = specs[c];
    const Covariance sigma_known = build_sigma(cfg, spec.n);
    const NoiseModel noise{build_sigma(cfg, spec.n), cfg.family, cfg.family_param};

    std::vector<TrialRecord> recs(cfg.trials);
    std::atomic<long> next{0};
    auto worker = [&]() {
      for (;;) {
        const long i = next.fetch_add(1);
        if (i >= cfg.trials) return;
        TrialRecord& rec = recs[i];
        rec.trial = i;
        rec.cell = cells[c];
        try {
          run_trial(cfg, weights, spec, noise, sigma_known, trial_rng(cfg.seed, c, i), rec);
        } catch (const std::exception& e) {
          rec.failure = e.what();
          rec.tests.clear();
        }
      }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    CellSummary sum;
    sum.cell = cells[c];
    sum.trials = cfg.trials;
    for (const TrialRecord& rec : recs) {
      if (!rec.failure.empty()) {
        ++sum.failures;
        continue;
      }
      if (rec.detected) ++sum.detected;
      if (rec.detected && rec.correct) ++sum.correct;
      bool all_rej[kMethodCount] = {!rec.tests.empty(), !rec.tests.empty(), !rec.tests.empty()};
      for (const TrialTestRecord& t : rec.tests) {
        for (int m = 0; m < kMethodCount; ++m) {
          if (t.rejected[m] >= 0) {
            ++sum.tested[m];
            sum.rejected[m] += t.rejected[m];
            if (t.rejected[m] == 0) all_rej[m] = false;
          } else {
            all_rej[m] = false;
          }
        }
      }
      for (int m = 0; m < kMethodCount; ++m)
        if (all_rej[m] && !rec.tests.empty()) ++sum.all_rejected_trials[m];
    }
    report.cells.push_back(sum);
    for (TrialRecord& rec : recs) report.trials.push_back(std::move(rec));
  }
  return report;
}

}  // namespace

ExperimentReport run_type1(const ExperimentConfig& cfg, const RnnWeights& weights) {
  std::vector<double> cells;
  std::vector<SignalSpec> specs;
  for (int n : cfg.n_list) {
    cells.push_back(n);
    specs.push_back(SignalSpec::null_spec(n));
  }
  return run_cells(cfg, weights, cells, specs);
}

ExperimentReport run_power(const ExperimentConfig& cfg, const RnnWeights& weights) {
  std::vector<double> cells;
  std::vector<SignalSpec> specs;
  for (double d : cfg.delta_list) {
    cells.push_back(d);
    specs.push_back(cfg.problem == Problem::mean_shift
                        ? SignalSpec::mean_shift_staircase(cfg.n_power, d)
                        : SignalSpec::linear_trend_piecewise(cfg.n_power, d));
  }
  return run_cells(cfg, weights, cells, specs);
}

double ks_uniform_pvalue(std::vector<double> sample) {
  if (sample.empty()) throw InvalidInput("ks_uniform_pvalue: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double u = std::clamp(sample[i], 0.0, 1.0);
    d = std::max(d, (i + 1) / n - u);
    d = std::max(d, u - i / n);
  }
  // Stephens' finite-sample adjustment with the asymptotic Kolmogorov series.
  const double lambda = d * (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n));
  double p = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = 2.0 * std::exp(-2.0 * j * j * lambda * lambda);
    p += (j % 2 == 1) ? term : -term;
  }
  return std::clamp(p, 0.0, 1.0);
}

BinomialCi wilson_ci(long successes, long n) {
  if (n <= 0) return {0.0, 1.0};
  const double z = 1.959963984540054;
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (phat + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

void write_trials_csv(const ExperimentReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << "trial,cell,detected,correct,failure,method,k,tau,p,rejected,iterations\n";
  for (const TrialRecord& rec : report.trials) {
    if (!rec.failure.empty() || rec.tests.empty()) {
      os << rec.trial << "," << rec.cell << "," << rec.detected << "," << rec.correct << ",\""
         << rec.failure << "\",,,,,,\n";
      continue;
    }
    for (const TrialTestRecord& t : rec.tests) {
      for (int m = 0; m < kMethodCount; ++m) {
        if (t.rejected[m] < 0) continue;
        os << rec.trial << "," << rec.cell << "," << rec.detected << "," << rec.correct << ",,"
           << method_name(static_cast<Method>(m)) << "," << t.k << "," << t.tau << "," << t.p[m]
           << "," << t.rejected[m] << "," << (m == 0 ? t.iterations : 0) << "\n";
      }
    }
  }
  if (!os) throw IoError("write failed: " + path);
}

nlohmann::json summary_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["kind"] = report.kind;
  j["config"] = report.config;
  j["master_seed"] = report.master_seed;
  nlohmann::json cells = nlohmann::json::array();
  for (const CellSummary& c : report.cells) {
    nlohmann::json jc;
    jc["cell"] = c.cell;
    jc["trials"] = c.trials;
    jc["detected"] = c.detected;
    jc["correct"] = c.correct;
    jc["failures"] = c.failures;
    nlohmann::json methods;
    for (int m = 0; m < kMethodCount; ++m) {
      if (c.tested[m] == 0) continue;
      const auto ci = wilson_ci(c.rejected[m], c.tested[m]);
      methods[method_name(static_cast<Method>(m))] = {
          {"tested", c.tested[m]},
          {"rejected", c.rejected[m]},
          {"rate", c.rate(static_cast<Method>(m))},
          {"ci_lo", ci.lo},
          {"ci_hi", ci.hi},
          {"all_k_rejected_trials", c.all_rejected_trials[m]},
          {"power_per_trial", c.power_per_trial(static_cast<Method>(m))}};
    }
    jc["methods"] = methods;
    cells.push_back(jc);
  }
  j["cells"] = cells;
  return j;
}

void write_summary_json(const ExperimentReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << summary_json(report).dump(1) << "\n";
  if (!os) throw IoError("write failed: " + path);
}

void write_rate_svg(const ExperimentReport& report, const std::string& path) {
  const int W = 560, H = 400, ML = 60, MR = 20, MT = 20, MB = 50;
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);

  double cell_lo = 1e300, cell_hi = -1e300, rate_hi = 0.0;
  for (const CellSummary& c : report.cells) {
    cell_lo = std::min(cell_lo, c.cell);
    cell_hi = std::max(cell_hi, c.cell);
    for (int m = 0; m < kMethodCount; ++m)
      if (c.tested[m] > 0) rate_hi = std::max(rate_hi, c.rate(static_cast<Method>(m)));
  }
  if (report.cells.empty() || cell_hi <= cell_lo) {
    cell_lo = 0;
    cell_hi = 1;
  }
  rate_hi = std::max(0.1, std::min(1.0, rate_hi * 1.15));

  auto px = [&](double cell) {
    return ML + (cell - cell_lo) / (cell_hi - cell_lo) * (W - ML - MR);
  };
  auto py = [&](double rate) { return H - MB - rate / rate_hi * (H - MT - MB); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR << "\" y2=\""
     << H - MB << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\"" << H - MB
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double r = rate_hi * i / 4.0;
    os << "<text x=\"" << ML - 8 << "\" y=\"" << py(r) + 4
       << "\" text-anchor=\"end\" font-size=\"11\">" << r << "</text>\n";
  }
  const char* colors[kMethodCount] = {"#1f77b4", "#ff7f0e", "#2ca02c"};
  for (int m = 0; m < kMethodCount; ++m) {
    std::ostringstream pts;
    bool any = false;
    for (const CellSummary& c : report.cells) {
      if (c.tested[m] == 0) continue;
      pts << px(c.cell) << "," << py(c.rate(static_cast<Method>(m))) << " ";
      any = true;
    }
    if (!any) continue;
    os << "<polyline fill=\"none\" stroke=\"" << colors[m] << "\" stroke-width=\"2\" points=\""
       << pts.str() << "\"/>\n";
    os << "<text x=\"" << W - MR - 90 << "\" y=\"" << MT + 16 * (m + 1) << "\" fill=\""
       << colors[m] << "\" font-size=\"12\">" << method_name(static_cast<Method>(m))
       << "</text>\n";
  }
  for (const CellSummary& c : report.cells)
    os << "<text x=\"" << px(c.cell) << "\" y=\"" << H - MB + 18
       << "\" text-anchor=\"middle\" font-size=\"11\">" << c.cell << "</text>\n";
  os << "<text x=\"" << (ML + W - MR) / 2 << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\" font-size=\"12\">" << (report.kind == "power" ? "delta" : "n")
     << "</text>\n";
  os << "</svg>\n";
  if (!os) throw IoError("write failed: " + path);
}

}  // namespace cpsi
