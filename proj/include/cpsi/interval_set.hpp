#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

namespace cpsi {

// Closed interval on the extended real line. lo <= hi; either end may be infinite.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool operator==(const Interval&) const = default;
};

// Finite union of disjoint closed intervals, kept sorted with strictly
// positive gaps between members (touching intervals merge on insertion).
class IntervalSet {
 public:
  IntervalSet() = default;

  static IntervalSet empty() { return IntervalSet(); }
  static IntervalSet full_line();
  static IntervalSet single(double lo, double hi);  // throws InvalidInput on lo > hi or NaN

  // Union with [lo, hi].
  void add(double lo, double hi);
  void add(const Interval& iv) { add(iv.lo, iv.hi); }

  IntervalSet unite(const IntervalSet& other) const;
  IntervalSet intersect(const IntervalSet& other) const;
  // Closure of the complement: consecutive pieces share endpoints with this set.
  IntervalSet complement() const;
  IntervalSet clip(double lo, double hi) const;

  bool contains(double x) const;
  bool is_empty() const { return ivs_.empty(); }
  // Sum of widths; +inf when any member is unbounded.
  double total_width() const;

  std::size_t size() const { return ivs_.size(); }
  const Interval& operator[](std::size_t i) const { return ivs_[i]; }
  const std::vector<Interval>& intervals() const { return ivs_; }
  double min() const;  // throws RangeError when empty
  double max() const;

  // Maximal uncovered open subintervals of [lo, hi], in order.
  std::vector<Interval> gaps(double lo, double hi) const;
  // Uncovered point of [lo, hi] nearest to target (gap interior; the returned
  // Interval is the enclosing gap). nullopt when [lo, hi] is fully covered.
  struct GapPoint {
    Interval gap;
  };
  std::optional<Interval> nearest_gap(double target, double lo, double hi) const;

  bool operator==(const IntervalSet&) const = default;

 private:
  std::vector<Interval> ivs_;
};

std::ostream& operator<<(std::ostream& os, const IntervalSet& s);

}  // namespace cpsi
