#include "cpsi/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cpsi/errors.hpp"
#include "cpsi/kernels.hpp"

namespace cpsi {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void segment_bounds(const std::vector<int>& tau_det, int k, int n, int& t_prev, int& t_k,
                    int& t_next) {
  const int K = static_cast<int>(tau_det.size());
  if (k < 1 || k > K) throw InvalidInput("eta: k out of range");
  t_prev = (k >= 2) ? tau_det[k - 2] : 0;
  t_k = tau_det[k - 1];
  t_next = (k < K) ? tau_det[k] : n;
  if (!(0 <= t_prev && t_prev < t_k && t_k < t_next && t_next <= n))
    throw InvalidInput("eta: tau_det not strictly increasing within [1, n]");
}

}  // namespace

std::vector<double> eta_mean_shift(const std::vector<int>& tau_det, int k, int n) {
  int t_prev, t_k, t_next;
  segment_bounds(tau_det, k, n, t_prev, t_k, t_next);
  const int len_l = t_k - t_prev;
  const int len_r = t_next - t_k;
  if (len_l < 1 || len_r < 1) throw InvalidInput("eta_mean_shift: degenerate segment");
  std::vector<double> eta(n, 0.0);
  for (int i = t_prev; i < t_k; ++i) eta[i] = 1.0 / len_l;
  for (int i = t_k; i < t_next; ++i) eta[i] = -1.0 / len_r;
  return eta;
}

std::vector<double> segment_slope_weights(int length) {
  if (length < 2) throw InvalidInput("segment_slope_weights: segment shorter than 2");
  const double L = length;
  std::vector<double> g(length);
  const double denom = (L - 1.0) * L * (L + 1.0);
  for (int i = 0; i < length; ++i) g[i] = 6.0 * (2.0 * (i + 1) - L - 1.0) / denom;
  return g;
}

std::vector<double> eta_trend_shift(const std::vector<int>& tau_det, int k, int n) {
  int t_prev, t_k, t_next;
  segment_bounds(tau_det, k, n, t_prev, t_k, t_next);
  const int len_l = t_k - t_prev;
  const int len_r = t_next - t_k;
  if (len_l < 2 || len_r < 2) throw InvalidInput("eta_trend_shift: degenerate segment");
  std::vector<double> eta(n, 0.0);
  const std::vector<double> gl = segment_slope_weights(len_l);
  const std::vector<double> gr = segment_slope_weights(len_r);
  for (int i = 0; i < len_l; ++i) eta[t_prev + i] = gl[i];
  for (int i = 0; i < len_r; ++i) eta[t_k + i] -= gr[i];
  return eta;
}

TestDirection line_params(std::span<const double> x, std::span<const double> eta,
                          const Covariance& sigma) {
  if (x.size() != eta.size() || static_cast<int>(x.size()) != sigma.dim())
    throw InvalidInput("line_params: dimension mismatch");
  TestDirection dir;
  dir.eta.assign(eta.begin(), eta.end());
  const std::vector<double> sv = sigma.mul(eta);
  const double denom = kernels::dot(eta.data(), sv.data(), eta.size());
  if (!(denom > 0.0)) throw ModelError("line_params: eta^T Sigma eta must be positive");
  dir.sd = std::sqrt(denom);
  dir.z_obs = kernels::dot(eta.data(), x.data(), x.size());
  dir.b_line.resize(x.size());
  dir.a_line.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    dir.b_line[i] = sv[i] / denom;
    dir.a_line[i] = x[i] - dir.b_line[i] * dir.z_obs;
  }
  return dir;
}

namespace {

// Mass bookkeeping for the early-termination bounds. All masses are logs of
// N(0, sd^2) probabilities restricted to the search bounds.
struct BoundState {
  double p_lower = 0.0;
  double p_upper = 1.0;
  double log_num_r = -kInf;
  double log_den_r = -kInf;
};

BoundState evaluate_bounds(const IntervalSet& matched, const IntervalSet& explored,
                           const IntervalSet& tail, double lo, double hi, double sd) {
  BoundState st;
  st.log_den_r = log_norm_mass(matched, sd);
  st.log_num_r = log_norm_mass(matched.intersect(tail), sd);
  const IntervalSet uncovered = explored.complement().clip(lo, hi);
  const double log_mt = log_norm_mass(uncovered.intersect(tail), sd);
  const double log_mc = log_norm_mass(uncovered.intersect(tail.complement()), sd);

  const double den_low = log_sum_exp(st.log_den_r, log_mc);
  st.p_lower = (st.log_num_r == -kInf || den_low == -kInf)
                   ? 0.0
                   : std::clamp(std::exp(st.log_num_r - den_low), 0.0, 1.0);
  const double num_up = log_sum_exp(st.log_num_r, log_mt);
  const double den_up = log_sum_exp(st.log_den_r, log_mt);
  st.p_upper = (den_up == -kInf) ? 1.0 : std::clamp(std::exp(num_up - den_up), 0.0, 1.0);
  if (st.p_upper < st.p_lower) st.p_upper = st.p_lower;
  return st;
}

IntervalSet two_sided_tail(double t) {
  IntervalSet s;
  s.add(-kInf, -t);
  s.add(t, kInf);
  return s;
}

}  // namespace

PathResult compute_solution_path(const TestDirection& dir, const std::vector<int>& tau_det,
                                 const RnnWeights& w, const DetectorConfig& cfg,
                                 const PathOptions& opt) {
  const double sd = dir.sd;
  const double z_obs = dir.z_obs;
  const double lo = z_obs - opt.bounds_mult * sd;
  const double hi = z_obs + opt.bounds_mult * sd;
  const double delta = opt.step_fraction * sd;
  const double span = std::max(std::abs(lo), std::abs(hi));
  const double min_gap = std::max(1e-12 * sd, 4.0 * (std::nextafter(span, kInf) - span));

  AffineVector line{dir.a_line, dir.b_line};
  const IntervalSet tail = two_sided_tail(std::abs(z_obs));

  PathResult res;
  res.bound_lo = lo;
  res.bound_hi = hi;

  OcRegionResult first = oc_region_any(line, z_obs, w, cfg);
  if (first.event.detection != tau_det)
    throw InconsistencyError(
        "compute_solution_path: detection at the observed witness does not match tau_det");
  res.oc_witness_region = first.region;
  res.iterations = 1;

  IntervalSet S = first.region.clip(lo, hi);
  IntervalSet R = S;

  const bool bounded_mode = opt.stop_on_tol || opt.stop_on_alpha;
  long next_check = bounded_mode ? 16 : std::numeric_limits<long>::max();

  bool from_center = true;  // alternate exploration fronts: nearest 0, nearest z_obs
  long safety = 0;
  const long safety_cap = opt.max_iterations * 8 + 1024;

  while (true) {
    if (++safety > safety_cap)
      throw NumericError("compute_solution_path: sweep failed to make progress");

    double target = from_center ? 0.0 : z_obs;
    auto gap = S.nearest_gap(target, lo, hi);
    if (!gap) {
      target = from_center ? z_obs : 0.0;
      gap = S.nearest_gap(target, lo, hi);
    }
    from_center = !from_center;
    if (!gap) {
      res.exhausted = true;
      break;
    }
    const double width = gap->hi - gap->lo;
    if (width < min_gap || std::nextafter(gap->lo, kInf) >= gap->hi) {
      // Sliver with no usable interior; mark covered.
      S.add(gap->lo, gap->hi);
      continue;
    }

    double z;
    int dir_sign;
    if (gap->lo < target && target < gap->hi) {
      z = target;
      dir_sign = (gap->hi - target >= target - gap->lo) ? 1 : -1;
    } else if (gap->lo >= target) {
      z = gap->lo + std::min(delta, 0.5 * width);
      dir_sign = 1;
    } else {
      z = gap->hi - std::min(delta, 0.5 * width);
      dir_sign = -1;
    }

    OcRegionResult oc;
    bool have = false;
    double retry_step = std::max(delta, min_gap);
    for (int attempt = 0; attempt <= opt.tie_retry_cap; ++attempt) {
      if (res.iterations >= opt.max_iterations) {
        const BoundState st = evaluate_bounds(R, S, tail, lo, hi, sd);
        throw PpCapExceeded("compute_solution_path: iteration cap exceeded", st.p_lower,
                            st.p_upper, res.iterations);
      }
      try {
        ++res.iterations;
        oc = oc_region_any(line, z, w, cfg);
        have = true;
        break;
      } catch (const DegenerateTie&) {
        double znew = z + dir_sign * retry_step;
        if (znew <= gap->lo || znew >= gap->hi)
          znew = 0.5 * (z + (dir_sign > 0 ? gap->hi : gap->lo));
        if (znew == z) break;
        z = znew;
        retry_step *= 2.0;
      }
    }
    if (!have)
      throw DegenerateTie(
          "compute_solution_path: persistent score ties while exploring the line");

    const IntervalSet piece = oc.region.clip(lo, hi);
    S = S.unite(piece);
    if (oc.event.detection == tau_det) R = R.unite(piece);

    if (res.iterations >= next_check) {
      const BoundState st = evaluate_bounds(R, S, tail, lo, hi, sd);
      res.p_lower = st.p_lower;
      res.p_upper = st.p_upper;
      bool stop = false;
      if (opt.stop_on_tol && st.p_upper - st.p_lower < opt.tol) stop = true;
      if (opt.stop_on_alpha && (st.p_upper <= opt.alpha || st.p_lower > opt.alpha)) stop = true;
      if (stop) {
        res.decided = true;
        break;
      }
      next_check = res.iterations + std::max<long>(16, res.iterations / 4);
    }
  }

  res.region = R;
  res.explored = S;
  if (res.exhausted) {
    const double p = truncated_normal_p(z_obs, sd, R);
    res.p_lower = res.p_upper = p;
  } else {
    const BoundState st = evaluate_bounds(R, S, tail, lo, hi, sd);
    res.p_lower = st.p_lower;
    res.p_upper = st.p_upper;
  }
  return res;
}

BoundedP bounded_selective_p(const TestDirection& dir, const std::vector<int>& tau_det,
                             const RnnWeights& w, const DetectorConfig& cfg, double alpha,
                             double tol, PathOptions base) {
  base.stop_on_tol = true;
  base.tol = tol;
  base.stop_on_alpha = true;
  base.alpha = alpha;
  const PathResult path = compute_solution_path(dir, tau_det, w, cfg, base);
  return BoundedP{path.p_lower, path.p_upper, path.decided, path.iterations};
}

std::vector<SiResult> run_si(std::span<const double> x, const Covariance& sigma,
                             const RnnWeights& w, const DetectorConfig& cfg, Problem problem,
                             const PathOptions& opt) {
  const int n = static_cast<int>(x.size());
  const DetectionResult det = detect(x, w, cfg);
  std::vector<SiResult> out;
  for (int k = 1; k <= cfg.K; ++k) {
    const std::vector<double> eta = (problem == Problem::mean_shift)
                                        ? eta_mean_shift(det.tau_det, k, n)
                                        : eta_trend_shift(det.tau_det, k, n);
    TestDirection dir = line_params(x, eta, sigma);
    dir.k = k;
    dir.problem = problem;

    const PathResult path = compute_solution_path(dir, det.tau_det, w, cfg, opt);

    SiResult r;
    r.k = k;
    r.tau_k = det.tau_det[k - 1];
    r.region = path.region;
    r.explored = path.explored;
    r.iterations = path.iterations;
    if (path.exhausted) {
      r.p_selective = truncated_normal_p(dir.z_obs, dir.sd, path.region);
    } else {
      r.p_selective = 0.5 * (path.p_lower + path.p_upper);
      r.bounds = std::make_pair(path.p_lower, path.p_upper);
    }
    r.p_oc = truncated_normal_p(dir.z_obs, dir.sd,
                                path.oc_witness_region.clip(path.bound_lo, path.bound_hi));
    r.p_naive = truncated_normal_p(dir.z_obs, dir.sd, IntervalSet::full_line());
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace cpsi
