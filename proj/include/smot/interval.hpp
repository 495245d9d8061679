#pragma once

#include <limits>
#include <string>

namespace smot {

/// Interval on the extended real line with explicit open/closed endpoint flags.
/// Infinite endpoints are always treated as open.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_closed = false;
  bool hi_closed = false;

  static Interval closed(double a, double b) { return {a, b, true, true}; }
  static Interval open(double a, double b) { return {a, b, false, false}; }
  static Interval all() { return {}; }

  bool contains(double x) const {
    if (x < lo || (x == lo && !lo_closed)) return false;
    if (x > hi || (x == hi && !hi_closed)) return false;
    return true;
  }

  bool empty() const { return lo > hi || (lo == hi && !(lo_closed && hi_closed)); }

  std::string str() const {
    auto fmt = [](double v) {
      if (v == std::numeric_limits<double>::infinity()) return std::string("inf");
      if (v == -std::numeric_limits<double>::infinity()) return std::string("-inf");
      return std::to_string(v);
    };
    return std::string(lo_closed ? "[" : "(") + fmt(lo) + ", " + fmt(hi) +
           (hi_closed ? "]" : ")");
  }
};

}  // namespace smot
