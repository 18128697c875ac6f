#include "cpsi/activation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cpsi/errors.hpp"

namespace cpsi {

int PiecewiseLinearActivation::piece_index(double v) const {
  const int J = static_cast<int>(knots.size());
  if (uniform) {
    double t = (v - grid_origin) / grid_spacing;
    int i = static_cast<int>(std::ceil(t));
    i = std::clamp(i, 0, J);
    // Exact fixup so the result matches the lower_bound semantics bit for bit.
    while (i < J && knots[i] < v) ++i;
    while (i > 0 && knots[i - 1] >= v) --i;
    return i;
  }
  return static_cast<int>(std::lower_bound(knots.begin(), knots.end(), v) - knots.begin());
}

void PiecewiseLinearActivation::detect_uniform() {
  uniform = false;
  if (knots.size() < 2) return;
  const double spacing = knots[1] - knots[0];
  if (!(spacing > 0.0)) return;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double d = knots[i + 1] - knots[i];
    if (std::abs(d - spacing) > 1e-12 * std::max(1.0, std::abs(spacing))) return;
  }
  uniform = true;
  grid_origin = knots.front();
  grid_spacing = spacing;
}

void PiecewiseLinearActivation::validate() const {
  if (knots.empty()) throw InvalidInput("activation: needs at least one knot");
  if (slopes.size() != knots.size() + 1 || intercepts.size() != knots.size() + 1)
    throw InvalidInput("activation: pieces must number knots + 1");
  for (double k : knots)
    if (!std::isfinite(k)) throw InvalidInput("activation: non-finite knot");
  for (std::size_t i = 0; i + 1 < knots.size(); ++i)
    if (!(knots[i] < knots[i + 1])) throw InvalidInput("activation: knots not strictly increasing");
  for (std::size_t p = 0; p < slopes.size(); ++p)
    if (!std::isfinite(slopes[p]) || !std::isfinite(intercepts[p]))
      throw InvalidInput("activation: non-finite piece");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const double a = slopes[i] * knots[i] + intercepts[i];
    const double b = slopes[i + 1] * knots[i] + intercepts[i + 1];
    if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a))) {
      std::ostringstream os;
      os << "activation: discontinuity at knot " << knots[i] << " (" << a << " vs " << b << ")";
      throw InvalidInput(os.str());
    }
  }
}

std::pair<double, int> activation_eval(const PiecewiseLinearActivation& act, double v) {
  if (!std::isfinite(v)) throw InvalidInput("activation_eval: non-finite input");
  const int p = act.piece_index(v);
  return {act.eval_piece(v, p), p};
}

PiecewiseLinearActivation make_relu() {
  PiecewiseLinearActivation act;
  act.knots = {0.0};
  act.slopes = {0.0, 1.0};
  act.intercepts = {0.0, 0.0};
  act.detect_uniform();
  return act;
}

PiecewiseLinearActivation make_pl_tanh(double half_range, int segments) {
  if (!(half_range > 0.0)) throw InvalidInput("make_pl_tanh: half_range must be positive");
  if (segments < 2) throw InvalidInput("make_pl_tanh: segments must be >= 2");

  const int s = segments;
  PiecewiseLinearActivation act;
  act.knots.resize(s + 1);
  std::vector<double> tv(s + 1);
  for (int j = 0; j <= s; ++j) act.knots[j] = (2.0 * j - s) * half_range / s;
  // Mirror the tanh samples around the center so the table is exactly odd.
  for (int j = 0; j <= s; ++j) {
    if (2 * j > s)
      tv[j] = std::tanh(act.knots[j]);
    else if (2 * j == s)
      tv[j] = 0.0;
    else
      tv[j] = -0.0;  // filled below
  }
  for (int j = 0; 2 * j < s; ++j) tv[j] = -tv[s - j];

  act.slopes.assign(s + 2, 0.0);
  act.intercepts.assign(s + 2, 0.0);
  act.intercepts[0] = tv[0];
  act.intercepts[s + 1] = tv[s];
  for (int j = 1; j <= s; ++j) {
    const double slope = (tv[j] - tv[j - 1]) / (act.knots[j] - act.knots[j - 1]);
    act.slopes[j] = slope;
    // Anchor at the endpoint nearer zero; mirrored pieces then get exactly
    // negated intercepts.
    if (2 * j <= s)
      act.intercepts[j] = tv[j] - slope * act.knots[j];
    else
      act.intercepts[j] = tv[j - 1] - slope * act.knots[j - 1];
  }
  act.detect_uniform();
  act.validate();
  return act;
}

}  // namespace cpsi
