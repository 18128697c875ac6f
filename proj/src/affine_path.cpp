#include "cpsi/affine_path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "cpsi/errors.hpp"
#include "cpsi/kernels.hpp"

namespace cpsi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieEps = 1e-12;

struct ActBounds {
  double lo = -kInf;
  double hi = kInf;
  void lower(double v) {
    if (v > lo) lo = v;
  }
  void upper(double v) {
    if (v < hi) hi = v;
  }
};

// One window of the fixed-piece recursion. Updates bounds with every
// activation constraint and writes the piece grid into trace (l * d_h).
std::pair<double, double> propagate_core(const double* wa, const double* wb, int l,
                                         const RnnWeights& w, double z, ActBounds& bounds,
                                         std::uint16_t* trace, std::vector<double>& ha,
                                         std::vector<double>& hb, std::vector<double>& ua,
                                         std::vector<double>& ub) {
  const int d = w.d_h;
  const auto& act = w.activation;
  const int J = static_cast<int>(act.knots.size());
  std::fill(ha.begin(), ha.end(), 0.0);
  std::fill(hb.begin(), hb.end(), 0.0);
  std::fill(ub.begin(), ub.end(), 0.0);

  bool b_on = false;
  for (int t = 0; t < l; ++t) {
    if (!b_on && wb[t] != 0.0) b_on = true;
    if (b_on) {
      kernels::preact_pair(w.W_h.data(), d, ha.data(), hb.data(), w.W_x.data(), wa[t], wb[t],
                           w.W_b.data(), ua.data(), ub.data());
    } else {
      kernels::preact(w.W_h.data(), d, ha.data(), w.W_x.data(), wa[t], w.W_b.data(), ua.data());
    }
    for (int j = 0; j < d; ++j) {
      const double va = ua[j];
      const double vb = ub[j];
      const double vz = va + vb * z;
      const int p = act.piece_index(vz);
      trace[t * d + j] = static_cast<std::uint16_t>(p);
      if (vb != 0.0) {
        // Piece p is active on knots[p-1] <= va + vb r <= knots[p].
        const double inv = 1.0 / vb;
        if (vb > 0.0) {
          if (p > 0) bounds.lower((act.knots[p - 1] - va) * inv);
          if (p < J) bounds.upper((act.knots[p] - va) * inv);
        } else {
          if (p > 0) bounds.upper((act.knots[p - 1] - va) * inv);
          if (p < J) bounds.lower((act.knots[p] - va) * inv);
        }
      }
      const double slope = act.slopes[p];
      ha[j] = slope * va + act.intercepts[p];
      if (b_on) hb[j] = slope * vb;
    }
  }
  const double pa = kernels::dot(w.W_p.data(), ha.data(), d);
  const double pb = b_on ? kernels::dot(w.W_p.data(), hb.data(), d) : 0.0;
  return {pa, pb};
}

// Absorb <= 1e-9-scale rounding of constraint endpoints, then insist the
// witness is inside.
IntervalSet finish_act_region(ActBounds bounds, double z, const char* who) {
  const double tol = 1e-9 * (1.0 + std::abs(z));
  if (bounds.lo > z && bounds.lo - z <= tol) bounds.lo = z;
  if (bounds.hi < z && z - bounds.hi <= tol) bounds.hi = z;
  if (!(bounds.lo <= z && z <= bounds.hi)) {
    std::ostringstream os;
    os << who << ": witness " << z << " outside activation region [" << bounds.lo << ", "
       << bounds.hi << "]";
    throw InconsistencyError(os.str());
  }
  return IntervalSet::single(bounds.lo, bounds.hi);
}

}  // namespace

std::vector<double> AffineVector::eval(double r) const {
  std::vector<double> x(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) x[i] = a[i] + b[i] * r;
  return x;
}

void AffineVector::validate() const {
  if (a.size() != b.size()) throw InvalidInput("AffineVector: size mismatch");
  if (a.empty()) throw InvalidInput("AffineVector: empty");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!std::isfinite(a[i]) || !std::isfinite(b[i]))
      throw InvalidInput("AffineVector: non-finite entry");
}

PropagateResult propagate_window(std::span<const double> wa, std::span<const double> wb,
                                 const RnnWeights& w, double witness) {
  if (wa.size() != wb.size() || wa.empty())
    throw InvalidInput("propagate_window: window size mismatch");
  if (!std::isfinite(witness)) throw InvalidInput("propagate_window: non-finite witness");
  const int l = static_cast<int>(wa.size());
  const int d = w.d_h;
  PropagateResult res;
  res.trace.resize(static_cast<std::size_t>(l) * d);
  ActBounds bounds;
  std::vector<double> ha(d), hb(d), ua(d), ub(d);
  auto [pa, pb] =
      propagate_core(wa.data(), wb.data(), l, w, witness, bounds, res.trace.data(), ha, hb, ua, ub);
  if (!std::isfinite(pa) || !std::isfinite(pb))
    throw NumericError("propagate_window: non-finite propagation");
  res.pred_a = pa;
  res.pred_b = pb;
  res.constraints = finish_act_region(bounds, witness, "propagate_window");
  return res;
}

ErrorQuadratics error_quadratics(const AffineVector& line, const RnnWeights& w,
                                 const DetectorConfig& cfg, double witness) {
  line.validate();
  const int n = static_cast<int>(line.size());
  cfg.validate(n);
  if (!std::isfinite(witness)) throw InvalidInput("error_quadratics: non-finite witness");

  const int l = cfg.l, m = cfg.m, d = w.d_h;
  ErrorQuadratics out;
  out.n_pos = n - l - m + 1;
  out.m = m;
  out.l = l;
  out.d_h = d;
  out.q.assign(n, QuadraticPolynomial{});
  out.activation.resize(static_cast<std::size_t>(out.n_pos) * m * l * d);

  ActBounds bounds;
  std::vector<double> wa(l), wb(l), preds_a(m), preds_b(m), da(m), db(m);
  std::vector<double> ha(d), hb(d), ua(d), ub(d);
  const double inv_m = 1.0 / m;

  for (int pos = l; pos <= n - m; ++pos) {
    std::copy(line.a.begin() + (pos - l), line.a.begin() + pos, wa.begin());
    std::copy(line.b.begin() + (pos - l), line.b.begin() + pos, wb.begin());
    for (int j = 0; j < m; ++j) {
      std::uint16_t* trace =
          out.activation.data() +
          (static_cast<std::size_t>(pos - l) * m + j) * (static_cast<std::size_t>(l) * d);
      auto [pa, pb] = propagate_core(wa.data(), wb.data(), l, w, witness, bounds, trace, ha, hb,
                                     ua, ub);
      if (!std::isfinite(pa) || !std::isfinite(pb))
        throw NumericError("error_quadratics: non-finite propagation");
      preds_a[j] = pa;
      preds_b[j] = pb;
      std::rotate(wa.begin(), wa.begin() + 1, wa.end());
      std::rotate(wb.begin(), wb.begin() + 1, wb.end());
      wa.back() = pa;
      wb.back() = pb;
    }
    for (int j = 0; j < m; ++j) {
      da[j] = preds_a[j] - line.a[pos + j];
      db[j] = preds_b[j] - line.b[pos + j];
    }
    double saa, sab, sbb;
    kernels::quad_sums(da.data(), db.data(), m, saa, sab, sbb);
    out.q[pos - 1] = QuadraticPolynomial{sbb * inv_m, 2.0 * sab * inv_m, saa * inv_m};
  }
  out.act_region = finish_act_region(bounds, witness, "error_quadratics");
  return out;
}

std::vector<QuadraticPolynomial> anomaly_quadratics(const std::vector<QuadraticPolynomial>& q,
                                                    int w) {
  if (w < 1 || w % 2 == 0) throw InvalidInput("anomaly_quadratics: w must be odd and >= 1");
  const std::size_t n = q.size();
  std::vector<double> coef(n), sm(n);
  std::vector<QuadraticPolynomial> out(n);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n; ++i)
      coef[i] = c == 0 ? q[i].alpha : (c == 1 ? q[i].beta : q[i].gamma);
    kernels::moving_average(coef.data(), n, w, sm.data());
    for (std::size_t i = 0; i < n; ++i) {
      if (c == 0)
        out[i].alpha = sm[i];
      else if (c == 1)
        out[i].beta = sm[i];
      else
        out[i].gamma = sm[i];
    }
  }
  return out;
}

SignRegion sign_region(const std::vector<QuadraticPolynomial>& s_q, double witness) {
  const std::size_t n = s_q.size();
  SignRegion out;
  out.region = IntervalSet::full_line();
  out.signs.assign(n > 0 ? n - 1 : 0, 0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const QuadraticPolynomial d = s_q[i + 1] - s_q[i];
    if (d.is_zero()) continue;  // constant zero along the whole line
    const double v = d.eval(witness);
    const double tol =
        kTieEps * (1.0 + std::abs(s_q[i].eval(witness)) + std::abs(s_q[i + 1].eval(witness)));
    if (std::abs(v) < tol) {
      std::ostringstream os;
      os << "sign_region: tied adjacent anomaly scores at positions " << i + 1 << "/" << i + 2;
      throw DegenerateTie(os.str());
    }
    out.signs[i] = v > 0.0 ? 1 : -1;
    out.region = out.region.intersect(
        solve_quadratic_inequality(d, v > 0.0 ? Relation::gt : Relation::lt, witness));
  }
  return out;
}

std::vector<int> maxima_from_signs(const std::vector<std::int8_t>& signs) {
  std::vector<int> maxima;
  for (std::size_t i = 1; i < signs.size(); ++i)
    if (signs[i - 1] == 1 && signs[i] == -1) maxima.push_back(static_cast<int>(i) + 1);
  return maxima;
}

SortRegion sort_region(const std::vector<QuadraticPolynomial>& s_q, const std::vector<int>& maxima,
                       double witness) {
  if (maxima.empty()) throw InvalidInput("sort_region: empty maxima set");
  SortRegion out;
  out.region = IntervalSet::full_line();
  const std::size_t nm = maxima.size();
  std::vector<double> score(nm);
  for (std::size_t i = 0; i < nm; ++i) score[i] = s_q[maxima[i] - 1].eval(witness);

  out.sort_perm.resize(nm);
  std::iota(out.sort_perm.begin(), out.sort_perm.end(), 0);
  std::sort(out.sort_perm.begin(), out.sort_perm.end(), [&](int x, int y) {
    if (score[x] != score[y]) return score[x] > score[y];
    return x < y;
  });

  for (std::size_t r = 0; r + 1 < nm; ++r) {
    const int hi = out.sort_perm[r];
    const int lo = out.sort_perm[r + 1];
    const double tol = kTieEps * (1.0 + std::abs(score[hi]) + std::abs(score[lo]));
    if (std::abs(score[hi] - score[lo]) < tol) {
      std::ostringstream os;
      os << "sort_region: tied maxima scores at positions " << maxima[hi] << "/" << maxima[lo];
      throw DegenerateTie(os.str());
    }
    const QuadraticPolynomial d = s_q[maxima[hi] - 1] - s_q[maxima[lo] - 1];
    out.region = out.region.intersect(solve_quadratic_inequality(d, Relation::ge, witness));
  }
  return out;
}

OcRegionResult oc_region_any(const AffineVector& line, double witness, const RnnWeights& w,
                             const DetectorConfig& cfg) {
  ErrorQuadratics eq = error_quadratics(line, w, cfg, witness);
  const std::vector<QuadraticPolynomial> sq = anomaly_quadratics(eq.q, cfg.w);
  SignRegion sr = sign_region(sq, witness);

  OcRegionResult out;
  out.event.n_pos = eq.n_pos;
  out.event.m = eq.m;
  out.event.l = eq.l;
  out.event.d_h = eq.d_h;
  out.event.activation = std::move(eq.activation);
  out.event.maxima = maxima_from_signs(sr.signs);
  out.event.signs = std::move(sr.signs);

  IntervalSet region = eq.act_region.intersect(sr.region);
  if (!out.event.maxima.empty()) {
    SortRegion so = sort_region(sq, out.event.maxima, witness);
    region = region.intersect(so.region);
    out.event.sort_perm = std::move(so.sort_perm);
    if (static_cast<int>(out.event.maxima.size()) >= cfg.K) {
      std::vector<int> taus(cfg.K);
      for (int k = 0; k < cfg.K; ++k) taus[k] = out.event.maxima[out.event.sort_perm[k]];
      std::sort(taus.begin(), taus.end());
      out.event.detection = std::move(taus);
    }
  }
  if (!region.contains(witness)) {
    std::ostringstream os;
    os << "oc_region: witness " << witness << " fell outside its own region";
    throw InconsistencyError(os.str());
  }
  out.region = std::move(region);
  return out;
}

OcRegionResult oc_region(const AffineVector& line, double witness, const RnnWeights& w,
                         const DetectorConfig& cfg) {
  OcRegionResult res = oc_region_any(line, witness, w, cfg);
  if (res.event.detection.empty()) {
    std::ostringstream os;
    os << "oc_region: detection fails at witness " << witness << " (" << res.event.maxima.size()
       << " maxima, need " << cfg.K << ")";
    throw DetectionFailure(os.str());
  }
  return res;
}

}  // namespace cpsi
