#pragma once

#include <utility>
#include <vector>

namespace cpsi {

// Continuous piecewise-linear activation. knots t_0 < ... < t_J partition the
// line into pieces (-inf, t_0], [t_0, t_1], ..., [t_J, +inf); piece p applies
// slopes[p] * v + intercepts[p]. A value equal to a knot belongs to the
// lower-index piece; adjacent pieces agree there so evaluation is unambiguous.
struct PiecewiseLinearActivation {
  std::vector<double> knots;
  std::vector<double> slopes;      // size knots.size() + 1
  std::vector<double> intercepts;  // size knots.size() + 1

  // Uniform-grid fast path for piece lookup (set by detect_uniform()).
  bool uniform = false;
  double grid_origin = 0.0;
  double grid_spacing = 1.0;

  int piece_count() const { return static_cast<int>(knots.size()) + 1; }
  int piece_index(double v) const;
  double eval_piece(double v, int p) const { return slopes[p] * v + intercepts[p]; }

  void detect_uniform();
  // Throws InvalidInput when sizes, ordering, finiteness, or the 1e-12
  // continuity condition fail.
  void validate() const;
};

// (value, active piece index); non-finite input raises InvalidInput.
std::pair<double, int> activation_eval(const PiecewiseLinearActivation& act, double v);

PiecewiseLinearActivation make_relu();

// Interpolates tanh at segments+1 uniform knots on [-half_range, half_range];
// the unbounded end pieces are constant at -+tanh(half_range). The knot grid
// and tanh values are mirrored so the table is exactly odd for even segment
// counts.
PiecewiseLinearActivation make_pl_tanh(double half_range, int segments);

}  // namespace cpsi
