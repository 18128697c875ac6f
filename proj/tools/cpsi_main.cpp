// cpsi: change-point detection with selective inference.
// Subcommands: train, detect, test, experiment.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cpsi/errors.hpp"
#include "cpsi/harness.hpp"
#include "cpsi/kernels.hpp"
#include "cpsi/train.hpp"

namespace {

using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitDetection = 4;
constexpr int kExitNumeric = 5;

std::vector<double> read_series_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw cpsi::IoError("cannot open input: " + path);
  std::vector<double> out;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    // strip whitespace and trailing commas
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == ','))
      line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    line = line.substr(start);
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      const double v = std::stod(line, &used);
      if (used != line.size()) throw std::invalid_argument(line);
      out.push_back(v);
    } catch (const std::exception&) {
      if (first) {
        first = false;
        continue;  // header row
      }
      throw cpsi::IoError("malformed CSV value in " + path + ": " + line);
    }
    first = false;
  }
  if (out.empty()) throw cpsi::IoError("no numeric rows in " + path);
  return out;
}

cpsi::Covariance parse_sigma(const std::string& spec, int n) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ':')) parts.push_back(tok);
  if (parts.empty()) throw CLI::ValidationError("--sigma", "empty sigma spec");
  if (parts[0] == "identity") {
    const double v = parts.size() > 1 ? std::stod(parts[1]) : 1.0;
    return cpsi::Covariance::identity(n, v);
  }
  if (parts[0] == "ar") {
    if (parts.size() < 2) throw CLI::ValidationError("--sigma", "ar needs ar:RHO[:SCALE]");
    const double rho = std::stod(parts[1]);
    const double v = parts.size() > 2 ? std::stod(parts[2]) : 1.0;
    return cpsi::Covariance::ar(n, rho, v);
  }
  if (parts[0] == "file") {
    if (parts.size() < 2) throw CLI::ValidationError("--sigma", "file needs file:PATH");
    std::ifstream is(parts[1]);
    if (!is) throw cpsi::IoError("cannot open sigma file: " + parts[1]);
    std::vector<double> vals;
    double v;
    while (is >> v) vals.push_back(v);
    if (vals.size() != static_cast<std::size_t>(n) * n)
      throw cpsi::LoadError("sigma file: expected n*n entries");
    return cpsi::Covariance::dense(std::move(vals), n);
  }
  throw CLI::ValidationError("--sigma", "unknown sigma kind: " + parts[0]);
}

// Apply a JSON config file underneath CLI flags: a key fills its option only
// when the flag was not given on the command line. Unknown keys are rejected.
void apply_config(CLI::App* cmd, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw cpsi::IoError("cannot open config: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw cpsi::LoadError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw cpsi::LoadError("config: top level must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    CLI::Option* opt = nullptr;
    const std::string flag = "--" + it.key();
    for (CLI::Option* o : cmd->get_options()) {
      if (o->check_name(flag)) {
        opt = o;
        break;
      }
    }
    if (opt == nullptr) throw cpsi::LoadError("config: unknown key: " + it.key());
    if (opt->count() > 0) continue;  // flag wins
    if (it.value().is_array()) {
      std::vector<std::string> vals;
      for (const json& e : it.value()) vals.push_back(e.dump());
      opt->add_result(vals);
    } else if (it.value().is_string()) {
      opt->add_result(it.value().get<std::string>());
    } else {
      opt->add_result(it.value().dump());
    }
    opt->run_callback();
  }
}

struct TrainArgs {
  std::string out = "weights.json";
  std::string config;
  std::uint64_t seed = 1;
  int d_h = 8;
  int window = 10;
  int epochs = 200;
  double lr = 1e-2;
  double init_scale = 0.2;
  double half_range = 4.0;
  int segments = 512;
  int train_count = 64;
  int train_len = 100;
  double level_sd = 2.5;
};

int cmd_train(const TrainArgs& a) {
  cpsi::TrainConfig cfg;
  cfg.d_h = a.d_h;
  cfg.window_len = a.window;
  cfg.epochs = a.epochs;
  cfg.learning_rate = a.lr;
  cfg.seed = a.seed;
  cfg.init_scale = a.init_scale;
  cfg.pl_half_range = a.half_range;
  cfg.pl_segments = a.segments;
  const auto data = cpsi::make_training_sequences(a.train_count, a.train_len, a.level_sd, a.seed);
  const cpsi::TrainResult res = cpsi::train_bptt(data, cfg);
  cpsi::save_weights(res.weights, a.out);
  std::cout << "trained d_h=" << a.d_h << " l=" << a.window << " epochs=" << res.epoch_loss.size()
            << " final_loss=" << res.epoch_loss.back() << "\n";
  std::cout << "weights written to " << a.out << "\n";
  return 0;
}

struct DetectArgs {
  std::string weights;
  std::string input;
  std::string config;
  std::string scores_out;
  int K = 2;
  int l = 0;  // 0 = use the trained window length
  int m = 10;
  int w = 5;
};

cpsi::DetectorConfig detector_config(int K, int l, int m, int w, const cpsi::RnnWeights& net) {
  cpsi::DetectorConfig cfg;
  cfg.K = K;
  cfg.l = l > 0 ? l : net.window_len;
  cfg.m = m;
  cfg.w = w;
  return cfg;
}

int cmd_detect(const DetectArgs& a) {
  const cpsi::RnnWeights net = cpsi::load_weights(a.weights);
  const std::vector<double> x = read_series_csv(a.input);
  const cpsi::DetectorConfig cfg = detector_config(a.K, a.l, a.m, a.w, net);
  const cpsi::DetectionResult det = cpsi::detect(x, net, cfg);

  std::cout << "tau:";
  for (int t : det.tau_det) std::cout << " " << t;
  std::cout << "\nscore_rank:";
  for (int r : det.score_rank) std::cout << " " << r;
  std::cout << "\nmaxima:";
  for (int m_ : det.maxima) std::cout << " " << m_;
  std::cout << "\n";
  if (!a.scores_out.empty()) {
    std::ofstream os(a.scores_out);
    if (!os) throw cpsi::IoError("cannot open for writing: " + a.scores_out);
    os << "position,x,e,s_ano\n";
    for (std::size_t i = 0; i < x.size(); ++i)
      os << i + 1 << "," << x[i] << "," << det.e[i] << "," << det.s_ano[i] << "\n";
  }
  return 0;
}

struct TestArgs {
  std::string weights;
  std::string input;
  std::string config;
  std::string out;
  std::string problem = "mean";
  std::string sigma;
  bool estimate_variance = false;
  double alpha = 0.05;
  std::vector<std::string> methods = {"selective", "oc", "naive"};
  double bounds = 10.0;
  long pp_cap = 100000;
  std::string pp = "exact";  // exact | bounded
  double tol = 1e-3;
  int K = 2;
  int l = 0;
  int m = 10;
  int w = 5;
};

int cmd_test(const TestArgs& a) {
  const cpsi::RnnWeights net = cpsi::load_weights(a.weights);
  const std::vector<double> x = read_series_csv(a.input);
  const int n = static_cast<int>(x.size());
  const cpsi::DetectorConfig cfg = detector_config(a.K, a.l, a.m, a.w, net);

  if (a.sigma.empty() && !a.estimate_variance)
    throw CLI::ValidationError("--sigma", "give --sigma or --estimate-variance explicitly");

  bool want[cpsi::kMethodCount] = {false, false, false};
  for (const std::string& m : a.methods) {
    if (m == "selective") want[0] = true;
    else if (m == "oc") want[1] = true;
    else if (m == "naive") want[2] = true;
    else throw CLI::ValidationError("--method", "unknown method: " + m);
  }

  const cpsi::DetectionResult det = cpsi::detect(x, net, cfg);
  const cpsi::Covariance sigma =
      a.estimate_variance
          ? cpsi::Covariance::identity(n, cpsi::estimate_variance_robust(x, det.tau_det))
          : parse_sigma(a.sigma, n);

  cpsi::PathOptions opts;
  opts.bounds_mult = a.bounds;
  opts.max_iterations = a.pp_cap;
  if (a.pp == "bounded") {
    opts.stop_on_tol = true;
    opts.tol = a.tol;
  } else if (a.pp != "exact") {
    throw CLI::ValidationError("--pp", "must be exact or bounded");
  }

  const cpsi::Problem problem =
      a.problem == "trend" ? cpsi::Problem::trend_shift : cpsi::Problem::mean_shift;

  std::ostringstream csv;
  csv << "k,tau";
  if (want[0]) csv << ",p_selective,regions,iterations";
  if (want[1]) csv << ",p_oc";
  if (want[2]) csv << ",p_naive";
  csv << "\n";

  for (int k = 1; k <= cfg.K; ++k) {
    const std::vector<double> eta = problem == cpsi::Problem::mean_shift
                                        ? cpsi::eta_mean_shift(det.tau_det, k, n)
                                        : cpsi::eta_trend_shift(det.tau_det, k, n);
    cpsi::TestDirection dir = cpsi::line_params(x, eta, sigma);
    dir.k = k;
    dir.problem = problem;

    csv << k << "," << det.tau_det[k - 1];
    std::optional<cpsi::PathResult> path;
    if (want[0] || want[1]) {
      cpsi::PathOptions o = opts;
      if (!want[0]) o.max_iterations = 1;
      path = cpsi::compute_solution_path(dir, det.tau_det, net, cfg, o);
    }
    if (want[0]) {
      const double p = path->exhausted
                           ? cpsi::truncated_normal_p(dir.z_obs, dir.sd, path->region)
                           : 0.5 * (path->p_lower + path->p_upper);
      csv << "," << p << "," << path->region.size() << "," << path->iterations;
      std::cout << "k=" << k << " tau=" << det.tau_det[k - 1] << " p_selective=" << p;
      if (!path->exhausted)
        std::cout << " [" << path->p_lower << ", " << path->p_upper << "]";
      std::cout << "\n";
    }
    if (want[1]) {
      const double p_oc = cpsi::truncated_normal_p(
          dir.z_obs, dir.sd, path->oc_witness_region.clip(path->bound_lo, path->bound_hi));
      csv << "," << p_oc;
      std::cout << "k=" << k << " tau=" << det.tau_det[k - 1] << " p_oc=" << p_oc << "\n";
    }
    if (want[2]) {
      const double p_naive =
          cpsi::truncated_normal_p(dir.z_obs, dir.sd, cpsi::IntervalSet::full_line());
      csv << "," << p_naive;
      std::cout << "k=" << k << " tau=" << det.tau_det[k - 1] << " p_naive=" << p_naive << "\n";
    }
    csv << "\n";
  }
  if (!a.out.empty()) {
    std::ofstream os(a.out);
    if (!os) throw cpsi::IoError("cannot open for writing: " + a.out);
    os << csv.str();
  } else {
    std::cout << csv.str();
  }
  return 0;
}

struct ExperimentArgs {
  std::string kind = "type1";
  std::string weights;
  std::string config;
  std::string out_dir = ".";
  std::string problem = "mean";
  std::vector<int> n_list;
  std::vector<double> delta_list;
  int n_power = 60;
  int trials = 500;
  double alpha = 0.05;
  int L = 2;
  std::vector<std::string> methods = {"selective", "oc", "naive"};
  std::string sigma = "identity";
  std::string family = "gaussian";
  double wasserstein_d = 0.0;
  int threads = 0;
  std::uint64_t seed = 1;
  int K = 2;
  int l = 0;
  int m = 10;
  int w = 5;
  double pp_tol = 1e-3;
  bool pp_alpha_decide = false;
  long pp_cap = 100000;
  double bounds = 10.0;
  bool svg = false;
};

int cmd_experiment(const ExperimentArgs& a) {
  const cpsi::RnnWeights net = cpsi::load_weights(a.weights);
  cpsi::ExperimentConfig cfg;
  cfg.problem = a.problem == "trend" ? cpsi::Problem::trend_shift : cpsi::Problem::mean_shift;
  cfg.trials = a.trials;
  cfg.alpha = a.alpha;
  cfg.match_window = a.L;
  cfg.n_power = a.n_power;
  cfg.threads = a.threads;
  cfg.seed = a.seed;
  cfg.detector = detector_config(a.K, a.l, a.m, a.w, net);
  cfg.si.bounds_mult = a.bounds;
  cfg.si.max_iterations = a.pp_cap;
  cfg.si.stop_on_tol = true;
  cfg.si.tol = a.pp_tol;
  cfg.si.stop_on_alpha = a.pp_alpha_decide;
  cfg.si.alpha = a.alpha;
  if (!a.n_list.empty()) cfg.n_list = a.n_list;
  if (!a.delta_list.empty()) cfg.delta_list = a.delta_list;
  for (int m_ = 0; m_ < cpsi::kMethodCount; ++m_) cfg.methods[m_] = false;
  for (const std::string& m_ : a.methods) {
    if (m_ == "selective") cfg.methods[0] = true;
    else if (m_ == "oc") cfg.methods[1] = true;
    else if (m_ == "naive") cfg.methods[2] = true;
    else throw CLI::ValidationError("--method", "unknown method: " + m_);
  }

  {
    std::vector<std::string> parts;
    std::stringstream ss(a.sigma);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(tok);
    if (parts.empty() || (parts[0] != "identity" && parts[0] != "ar"))
      throw CLI::ValidationError("--sigma", "experiments support identity or ar:RHO[:SCALE]");
    cfg.sigma_kind = parts[0];
    if (parts[0] == "ar" && parts.size() > 1) cfg.rho = std::stod(parts[1]);
    const std::size_t scale_idx = parts[0] == "ar" ? 2 : 1;
    if (parts.size() > scale_idx) cfg.sigma_scale = std::stod(parts[scale_idx]);
  }

  std::string kind = a.kind;
  if (kind == "robust-variance") {
    cfg.estimate_variance = true;
    kind = "type1";
  } else if (kind == "robust-noise") {
    cfg.family = cpsi::family_from_name(a.family);
    if (cfg.family == cpsi::NoiseFamily::gaussian)
      throw CLI::ValidationError("--family", "robust-noise needs a non-gaussian family");
    if (!(a.wasserstein_d > 0.0))
      throw CLI::ValidationError("--wasserstein-d", "robust-noise needs --wasserstein-d > 0");
    cfg.family_param = cpsi::calibrate_family(cfg.family, a.wasserstein_d);
    std::cout << "calibrated " << cpsi::family_name(cfg.family) << " parameter "
              << cfg.family_param << " at wasserstein distance " << a.wasserstein_d << "\n";
    if (cfg.n_list.empty()) cfg.n_list = {60};
    kind = "type1";
  } else if (kind != "type1" && kind != "power") {
    throw CLI::ValidationError("--kind",
                               "must be type1, power, robust-variance, or robust-noise");
  }
  cfg.kind = kind;

  std::filesystem::create_directories(a.out_dir);
  const cpsi::ExperimentReport report =
      kind == "power" ? cpsi::run_power(cfg, net) : cpsi::run_type1(cfg, net);

  const std::string base = a.out_dir + "/" + a.kind;
  cpsi::write_trials_csv(report, base + "_trials.csv");
  cpsi::write_summary_json(report, base + "_summary.json");
  if (a.svg) cpsi::write_rate_svg(report, base + "_rates.svg");

  for (const cpsi::CellSummary& c : report.cells) {
    std::cout << "cell=" << c.cell << " detected=" << c.detected << "/" << c.trials
              << " failures=" << c.failures;
    for (int m_ = 0; m_ < cpsi::kMethodCount; ++m_) {
      if (c.tested[m_] == 0) continue;
      std::cout << " " << cpsi::method_name(static_cast<cpsi::Method>(m_)) << "="
                << c.rate(static_cast<cpsi::Method>(m_));
    }
    std::cout << "\n";
  }
  std::cout << "reports written to " << base << "_trials.csv, " << base << "_summary.json"
            << (a.svg ? ", " + base + "_rates.svg" : "") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RNN change-point detection with selective inference"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("cpsi 1.0 (kernels: ") +
                                        cpsi::kernels::backend_name(
                                            cpsi::kernels::active_backend()) +
                                        ")");

  TrainArgs ta;
  CLI::App* train = app.add_subcommand("train", "train the recurrent predictor");
  train->add_option("--out", ta.out, "output weight file");
  train->add_option("--config", ta.config, "JSON config file");
  train->add_option("--seed", ta.seed, "master seed");
  train->add_option("--d-h", ta.d_h, "hidden dimension");
  train->add_option("--window", ta.window, "input window length l");
  train->add_option("--epochs", ta.epochs, "training epochs");
  train->add_option("--lr", ta.lr, "learning rate");
  train->add_option("--init-scale", ta.init_scale, "uniform init scale");
  train->add_option("--half-range", ta.half_range, "piecewise-linear tanh half range");
  train->add_option("--segments", ta.segments, "piecewise-linear tanh segments");
  train->add_option("--train-count", ta.train_count, "number of training sequences");
  train->add_option("--train-len", ta.train_len, "training sequence length");
  train->add_option("--level-sd", ta.level_sd, "sd of per-sequence levels in training data");

  DetectArgs da;
  CLI::App* detect = app.add_subcommand("detect", "detect change points in a CSV series");
  detect->add_option("--weights", da.weights, "weight file")->required();
  detect->add_option("--input", da.input, "input CSV (single numeric column)")->required();
  detect->add_option("--config", da.config, "JSON config file");
  detect->add_option("--scores", da.scores_out, "write per-position scores CSV");
  detect->add_option("--K", da.K, "number of change points");
  detect->add_option("--l", da.l, "window length (default: trained value)");
  detect->add_option("--m", da.m, "rollout horizon");
  detect->add_option("--w", da.w, "smoothing width (odd)");

  TestArgs sa;
  CLI::App* test = app.add_subcommand("test", "selective inference on detected change points");
  test->add_option("--weights", sa.weights, "weight file")->required();
  test->add_option("--input", sa.input, "input CSV")->required();
  test->add_option("--config", sa.config, "JSON config file");
  test->add_option("--out", sa.out, "write per-CP results CSV");
  test->add_option("--problem", sa.problem, "mean | trend");
  test->add_option("--sigma", sa.sigma, "identity[:V] | ar:RHO[:V] | file:PATH");
  test->add_flag("--estimate-variance", sa.estimate_variance,
                 "estimate the variance from detected segments");
  test->add_option("--alpha", sa.alpha, "significance level");
  test->add_option("--method", sa.methods, "methods: selective oc naive");
  test->add_option("--bounds", sa.bounds, "search bounds in sd units");
  test->add_option("--pp-cap", sa.pp_cap, "parametric-programming iteration cap");
  test->add_option("--pp", sa.pp, "exact | bounded");
  test->add_option("--tol", sa.tol, "bounded-mode p-value tolerance");
  test->add_option("--K", sa.K, "number of change points");
  test->add_option("--l", sa.l, "window length (default: trained value)");
  test->add_option("--m", sa.m, "rollout horizon");
  test->add_option("--w", sa.w, "smoothing width (odd)");

  ExperimentArgs ea;
  CLI::App* exp = app.add_subcommand("experiment", "Monte Carlo experiment runner");
  exp->add_option("--kind", ea.kind, "type1 | power | robust-variance | robust-noise");
  exp->add_option("--weights", ea.weights, "weight file")->required();
  exp->add_option("--config", ea.config, "JSON config file");
  exp->add_option("--out-dir", ea.out_dir, "output directory");
  exp->add_option("--problem", ea.problem, "mean | trend");
  exp->add_option("--n-list", ea.n_list, "sequence lengths (type1)");
  exp->add_option("--delta-list", ea.delta_list, "shift magnitudes (power)");
  exp->add_option("--n-power", ea.n_power, "sequence length for power runs");
  exp->add_option("--trials", ea.trials, "trials per cell");
  exp->add_option("--alpha", ea.alpha, "significance level");
  exp->add_option("--L", ea.L, "detection match window");
  exp->add_option("--method", ea.methods, "methods: selective oc naive");
  exp->add_option("--sigma", ea.sigma, "identity[:V] | ar:RHO[:V]");
  exp->add_option("--family", ea.family, "noise family (robust-noise)");
  exp->add_option("--wasserstein-d", ea.wasserstein_d, "target 1-Wasserstein distance");
  exp->add_option("--threads", ea.threads, "worker threads (0 = hardware)");
  exp->add_option("--seed", ea.seed, "master seed");
  exp->add_option("--K", ea.K, "number of change points");
  exp->add_option("--l", ea.l, "window length (default: trained value)");
  exp->add_option("--m", ea.m, "rollout horizon");
  exp->add_option("--w", ea.w, "smoothing width (odd)");
  exp->add_option("--pp-tol", ea.pp_tol, "p-value bound tolerance");
  exp->add_flag("--pp-alpha-decide", ea.pp_alpha_decide, "stop once the alpha decision is known");
  exp->add_option("--pp-cap", ea.pp_cap, "parametric-programming iteration cap");
  exp->add_option("--bounds", ea.bounds, "search bounds in sd units");
  exp->add_flag("--svg", ea.svg, "also write a rate-vs-cell SVG chart");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (train->parsed()) {
      if (!ta.config.empty()) apply_config(train, ta.config);
      return cmd_train(ta);
    }
    if (detect->parsed()) {
      if (!da.config.empty()) apply_config(detect, da.config);
      return cmd_detect(da);
    }
    if (test->parsed()) {
      if (!sa.config.empty()) apply_config(test, sa.config);
      return cmd_test(sa);
    }
    if (exp->parsed()) {
      if (!ea.config.empty()) apply_config(exp, ea.config);
      return cmd_experiment(ea);
    }
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const cpsi::DetectionFailure& e) {
    std::cerr << "detection failure: " << e.what() << "\n";
    return kExitDetection;
  } catch (const cpsi::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const cpsi::LoadError& e) {
    std::cerr << "load error: " << e.what() << "\n";
    return kExitIo;
  } catch (const cpsi::PpCapExceeded& e) {
    std::cerr << "pp cap exceeded: " << e.what() << " [" << e.p_lower << ", " << e.p_upper
              << "]\n";
    return kExitNumeric;
  } catch (const cpsi::TrainingFailure& e) {
    std::cerr << "training failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
