#include "cpsi/interval_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "cpsi/errors.hpp"

namespace cpsi {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

IntervalSet IntervalSet::full_line() {
  IntervalSet s;
  s.add(-kInf, kInf);
  return s;
}

IntervalSet IntervalSet::single(double lo, double hi) {
  IntervalSet s;
  s.add(lo, hi);
  return s;
}

void IntervalSet::add(double lo, double hi) {
  if (std::isnan(lo) || std::isnan(hi) || lo > hi)
    throw InvalidInput("IntervalSet::add: invalid interval");
  // Intervals that overlap or touch [lo, hi] collapse into one member.
  auto first = std::lower_bound(ivs_.begin(), ivs_.end(), lo,
                                [](const Interval& iv, double v) { return iv.hi < v; });
  auto last = std::upper_bound(first, ivs_.end(), hi,
                               [](double v, const Interval& iv) { return v < iv.lo; });
  if (first == last) {
    ivs_.insert(first, Interval{lo, hi});
    return;
  }
  first->lo = std::min(lo, first->lo);
  first->hi = std::max(hi, (last - 1)->hi);
  ivs_.erase(first + 1, last);
}

IntervalSet IntervalSet::unite(const IntervalSet& other) const {
  if (ivs_.size() < other.ivs_.size()) return other.unite(*this);
  IntervalSet out = *this;
  for (const Interval& iv : other.ivs_) out.add(iv.lo, iv.hi);
  return out;
}

IntervalSet IntervalSet::intersect(const IntervalSet& other) const {
  IntervalSet out;
  std::size_t i = 0, j = 0;
  while (i < ivs_.size() && j < other.ivs_.size()) {
    const double lo = std::max(ivs_[i].lo, other.ivs_[j].lo);
    const double hi = std::min(ivs_[i].hi, other.ivs_[j].hi);
    if (lo <= hi) {
      if (!out.ivs_.empty() && out.ivs_.back().hi >= lo) {
        out.ivs_.back().hi = std::max(out.ivs_.back().hi, hi);
      } else {
        out.ivs_.push_back(Interval{lo, hi});
      }
    }
    if (ivs_[i].hi < other.ivs_[j].hi)
      ++i;
    else
      ++j;
  }
  return out;
}

IntervalSet IntervalSet::complement() const {
  IntervalSet out;
  if (ivs_.empty()) return full_line();
  if (ivs_.front().lo > -kInf) out.ivs_.push_back(Interval{-kInf, ivs_.front().lo});
  for (std::size_t i = 0; i + 1 < ivs_.size(); ++i)
    out.ivs_.push_back(Interval{ivs_[i].hi, ivs_[i + 1].lo});
  if (ivs_.back().hi < kInf) out.ivs_.push_back(Interval{ivs_.back().hi, kInf});
  return out;
}

IntervalSet IntervalSet::clip(double lo, double hi) const { return intersect(single(lo, hi)); }

bool IntervalSet::contains(double x) const {
  auto it = std::lower_bound(ivs_.begin(), ivs_.end(), x,
                             [](const Interval& iv, double v) { return iv.hi < v; });
  return it != ivs_.end() && it->lo <= x;
}

double IntervalSet::total_width() const {
  double w = 0.0;
  for (const Interval& iv : ivs_) w += iv.width();
  return w;
}

double IntervalSet::min() const {
  if (ivs_.empty()) throw RangeError("IntervalSet::min on empty set");
  return ivs_.front().lo;
}

double IntervalSet::max() const {
  if (ivs_.empty()) throw RangeError("IntervalSet::max on empty set");
  return ivs_.back().hi;
}

std::vector<Interval> IntervalSet::gaps(double lo, double hi) const {
  std::vector<Interval> out;
  double cursor = lo;
  for (const Interval& iv : ivs_) {
    if (iv.hi < lo) continue;
    if (iv.lo > hi) break;
    if (iv.lo > cursor) out.push_back(Interval{cursor, std::min(iv.lo, hi)});
    cursor = std::max(cursor, iv.hi);
    if (cursor >= hi) break;
  }
  if (cursor < hi) out.push_back(Interval{cursor, hi});
  return out;
}

std::optional<Interval> IntervalSet::nearest_gap(double target, double lo, double hi) const {
  if (lo > hi) return std::nullopt;
  target = std::clamp(target, lo, hi);
  const std::size_t n = ivs_.size();
  auto it = std::lower_bound(ivs_.begin(), ivs_.end(), target,
                             [](const Interval& iv, double v) { return iv.hi < v; });
  const std::size_t k = static_cast<std::size_t>(it - ivs_.begin());
  if (k == n || ivs_[k].lo > target) {
    // target itself is uncovered
    const double glo = (k > 0) ? std::max(lo, ivs_[k - 1].hi) : lo;
    const double ghi = (k < n) ? std::min(hi, ivs_[k].lo) : hi;
    if (glo < ghi || (glo == ghi && glo == target)) return Interval{glo, ghi};
    return std::nullopt;
  }
  // target covered by ivs_[k]; inspect the adjacent gaps on each side
  std::optional<Interval> left, right;
  {
    const double ghi = ivs_[k].lo;
    if (ghi > lo) {
      const double glo = (k > 0) ? std::max(lo, ivs_[k - 1].hi) : lo;
      if (glo < ghi) left = Interval{glo, ghi};
    }
  }
  {
    const double glo = ivs_[k].hi;
    if (glo < hi) {
      const double ghi = (k + 1 < n) ? std::min(hi, ivs_[k + 1].lo) : hi;
      if (glo < ghi) right = Interval{glo, ghi};
    }
  }
  if (!left) return right;
  if (!right) return left;
  const double dl = target - left->hi;
  const double dr = right->lo - target;
  return (dl <= dr) ? left : right;
}

std::ostream& operator<<(std::ostream& os, const IntervalSet& s) {
  if (s.is_empty()) return os << "{}";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << " u ";
    os << "[" << s[i].lo << ", " << s[i].hi << "]";
  }
  return os;
}

}  // namespace cpsi
