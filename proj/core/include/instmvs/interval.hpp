#pragma once

#include <algorithm>

namespace instmvs {

// Closed depth interval [lo, hi] in millimeters.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
  bool contains(double d) const { return d >= lo && d <= hi; }
  bool contains(const Interval& other) const { return other.lo >= lo && other.hi <= hi; }
  bool empty() const { return !(lo <= hi); }

  Interval intersect(const Interval& other) const {
    return {std::max(lo, other.lo), std::min(hi, other.hi)};
  }

  bool operator==(const Interval&) const = default;
};

}  // namespace instmvs
