#include "smot/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace smot {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

DiscreteMeasure::DiscreteMeasure(std::vector<double> atoms, std::vector<double> weights) {
  if (atoms.size() != weights.size())
    throw DomainError("atoms/weights length mismatch");
  const std::size_t n = atoms.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
  for (std::size_t k : idx) {
    const double x = atoms[k];
    const double w = weights[k];
    if (!std::isfinite(x)) throw DomainError("non-finite atom position");
    if (!(w > 0) || !std::isfinite(w)) {
      if (w == 0.0) continue;  // drop exact zeros quietly
      throw DomainError("weights must be strictly positive");
    }
    if (!atoms_.empty() && x - atoms_.back() <= kMergeTol) {
      // merge, keeping the mass-weighted position of the merged cluster
      const double wa = weights_.back();
      atoms_.back() = (wa * atoms_.back() + w * x) / (wa + w);
      weights_.back() += w;
    } else {
      atoms_.push_back(x);
      weights_.push_back(w);
    }
  }
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    mass_ += weights_[i];
    moment_ += weights_[i] * atoms_[i];
  }
}

DiscreteMeasure DiscreteMeasure::dirac(double x, double w) {
  return DiscreteMeasure({x}, {w});
}

double DiscreteMeasure::barycentre() const {
  if (mass_ <= 0) throw DomainError("barycentre of the zero measure");
  return moment_ / mass_;
}

double DiscreteMeasure::cdf(double x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms_.size() && atoms_[i] <= x; ++i) s += weights_[i];
  return s;
}

double DiscreteMeasure::weight_at(double x) const {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x - kMergeTol);
  if (it != atoms_.end() && std::abs(*it - x) <= kMergeTol)
    return weights_[static_cast<std::size_t>(it - atoms_.begin())];
  return 0.0;
}

// -- PiecewiseLinearConvex ----------------------------------------------------

PiecewiseLinearConvex::PiecewiseLinearConvex(std::vector<double> breakpoints,
                                             double left_slope,
                                             std::vector<double> increments,
                                             double anchor_value)
    : breakpoints_(std::move(breakpoints)),
      left_slope_(left_slope),
      increments_(std::move(increments)),
      anchor_value_(anchor_value) {
  if (breakpoints_.size() != increments_.size())
    throw InvalidPotentialError("breakpoints/increments length mismatch");
  for (std::size_t i = 1; i < breakpoints_.size(); ++i)
    if (!(breakpoints_[i] > breakpoints_[i - 1]))
      throw InvalidPotentialError("breakpoints not increasing");
  for (double d : increments_)
    if (d < 0) throw InvalidPotentialError("negative slope increment");
}

double PiecewiseLinearConvex::value(double x) const {
  if (breakpoints_.empty()) return anchor_value_ + left_slope_ * x;
  double v = anchor_value_;
  double s = left_slope_;
  double prev = breakpoints_.front();
  if (x <= prev) return v + s * (x - prev);
  for (std::size_t i = 0; i < breakpoints_.size() && breakpoints_[i] <= x; ++i) {
    v += s * (breakpoints_[i] - prev);
    prev = breakpoints_[i];
    s += increments_[i];
  }
  return v + s * (x - prev);
}

double PiecewiseLinearConvex::slope_right_of(double x) const {
  double s = left_slope_;
  for (std::size_t i = 0; i < breakpoints_.size() && breakpoints_[i] <= x; ++i)
    s += increments_[i];
  return s;
}

double PiecewiseLinearFn::value(double x) const {
  if (breakpoints.empty()) return 0.0;
  if (x <= breakpoints.front())
    return values.front() + left_slope * (x - breakpoints.front());
  if (x >= breakpoints.back())
    return values.back() + right_slope * (x - breakpoints.back());
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
  std::size_t i = static_cast<std::size_t>(it - breakpoints.begin());
  const double t = (x - breakpoints[i - 1]) / (breakpoints[i] - breakpoints[i - 1]);
  return values[i - 1] + t * (values[i] - values[i - 1]);
}

// -- Quantiles, potentials, distances ----------------------------------------

double quantile(const DiscreteMeasure& m, double u) {
  if (m.is_zero()) throw DomainError("quantile of the zero measure");
  if (u <= 0 || u > m.mass() * (1 + 1e-15) + 1e-300)
    throw DomainError("quantile level outside (0, mass]");
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    s += m.weights()[i];
    if (s >= u - 1e-15 * m.mass()) return m.atoms()[i];
  }
  return m.atoms().back();
}

double put_value(const DiscreteMeasure& m, double x) {
  double v = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double d = x - m.atoms()[i];
    if (d > 0) v += m.weights()[i] * d;
  }
  return v;
}

PiecewiseLinearConvex put_potential(const DiscreteMeasure& m) {
  if (m.is_zero()) return PiecewiseLinearConvex({}, 0.0, {}, 0.0);
  return PiecewiseLinearConvex(m.atoms(), 0.0, m.weights(), 0.0);
}

DiscreteMeasure measure_from_put(const PiecewiseLinearConvex& f) {
  if (std::abs(f.left_slope()) > 1e-9)
    throw InvalidPotentialError("left slope must vanish for a put potential");
  if (!f.breakpoints().empty() && std::abs(f.anchor_value()) > 1e-9)
    throw InvalidPotentialError("put potential must vanish left of its support");
  std::vector<double> atoms, weights;
  for (std::size_t i = 0; i < f.breakpoints().size(); ++i) {
    if (f.increments()[i] > 0) {
      atoms.push_back(f.breakpoints()[i]);
      weights.push_back(f.increments()[i]);
    }
  }
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

double wasserstein(const DiscreteMeasure& m1, const DiscreteMeasure& m2, double r) {
  if (r < 1) throw DomainError("wasserstein order must be >= 1");
  if (std::abs(m1.mass() - m2.mass()) > order_tol())
    throw MassError("wasserstein: mass mismatch");
  if (m1.is_zero() && m2.is_zero()) return 0.0;
  // integrate |F1^{-1} - F2^{-1}|^r over the union of the cumulative cuts
  std::vector<double> cuts;
  double s = 0.0;
  for (double w : m1.weights()) cuts.push_back(s += w);
  s = 0.0;
  for (double w : m2.weights()) cuts.push_back(s += w);
  cuts.push_back(0.0);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const double mass = std::min(m1.mass(), m2.mass());
  double total = 0.0;
  std::size_t i = 0, j = 0;
  double c1 = m1.weights()[0], c2 = m2.weights()[0];
  for (std::size_t k = 1; k < cuts.size(); ++k) {
    const double lo = cuts[k - 1];
    if (lo >= mass - 1e-15) break;
    const double hi = std::min(cuts[k], mass);
    if (hi <= lo) continue;
    while (c1 <= lo + 1e-15 && i + 1 < m1.size()) c1 += m1.weights()[++i];
    while (c2 <= lo + 1e-15 && j + 1 < m2.size()) c2 += m2.weights()[++j];
    total += (hi - lo) * std::pow(std::abs(m1.atoms()[i] - m2.atoms()[j]), r);
  }
  return std::pow(total, 1.0 / r);
}

// -- Orders -------------------------------------------------------------------

std::pair<double, double> max_put_violation(const DiscreteMeasure& m1,
                                            const DiscreteMeasure& m2) {
  // P_1 - P_2 is piecewise linear with breakpoints at the union of atoms, and
  // 0 far left / affine with slope (mass1 - mass2) far right; with equal
  // masses the extremes live at the breakpoints.
  double worst_x = 0.0, worst_gap = -kInf;
  auto consider = [&](double x) {
    const double g = put_value(m1, x) - put_value(m2, x);
    if (g > worst_gap) {
      worst_gap = g;
      worst_x = x;
    }
  };
  for (double x : m1.atoms()) consider(x);
  for (double x : m2.atoms()) consider(x);
  if (worst_gap == -kInf) return {0.0, 0.0};
  return {worst_x, worst_gap};
}

bool leq_cd(const DiscreteMeasure& m1, const DiscreteMeasure& m2) {
  if (std::abs(m1.mass() - m2.mass()) > order_tol())
    throw MassError("order check: mass mismatch");
  if (m1.is_zero() || m2.is_zero()) return true;
  return max_put_violation(m1, m2).second <= order_tol();
}

bool leq_c(const DiscreteMeasure& m1, const DiscreteMeasure& m2) {
  if (!leq_cd(m1, m2)) return false;
  return std::abs(m1.first_moment() - m2.first_moment()) <= order_tol();
}

// -- Lattice operations -------------------------------------------------------

namespace {

// Reads a measure off sampled values of a convex piecewise-linear put
// potential: points (x_i, v_i) must be the vertices in increasing x order,
// with slope 0 before the first vertex and `mass` after the last.
DiscreteMeasure measure_from_vertices(const std::vector<double>& xs,
                                      const std::vector<double>& vs, double mass) {
  std::vector<double> atoms, weights;
  double prev_slope = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double next_slope =
        (i + 1 < xs.size()) ? (vs[i + 1] - vs[i]) / (xs[i + 1] - xs[i]) : mass;
    const double inc = next_slope - prev_slope;
    if (inc > kMergeTol) {
      atoms.push_back(xs[i]);
      weights.push_back(inc);
    }
    prev_slope = next_slope;
  }
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

std::vector<double> union_breakpoints(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  std::vector<double> xs(a.atoms());
  xs.insert(xs.end(), b.atoms().begin(), b.atoms().end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end(),
                       [](double p, double q) { return q - p <= kMergeTol; }),
           xs.end());
  return xs;
}

}  // namespace

DiscreteMeasure sup_cd(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (std::abs(a.mass() - b.mass()) > order_tol())
    throw MassError("sup_cd: mass mismatch");
  if (a.is_zero()) return b.is_zero() ? a : b;
  if (b.is_zero()) return a;
  const double mass = 0.5 * (a.mass() + b.mass());
  // vertices of max(P_a, P_b): union atoms plus crossing points of segments
  std::vector<double> xs = union_breakpoints(a, b);
  std::vector<double> extra;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double x0 = xs[i], x1 = xs[i + 1];
    const double fa0 = put_value(a, x0), fa1 = put_value(a, x1);
    const double fb0 = put_value(b, x0), fb1 = put_value(b, x1);
    const double d0 = fa0 - fb0, d1 = fa1 - fb1;
    if ((d0 > 0) != (d1 > 0) && d0 != d1) {
      const double t = d0 / (d0 - d1);
      if (t > 1e-12 && t < 1 - 1e-12) extra.push_back(x0 + t * (x1 - x0));
    }
  }
  xs.insert(xs.end(), extra.begin(), extra.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end(),
                       [](double p, double q) { return q - p <= kMergeTol; }),
           xs.end());
  std::vector<double> vs(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    vs[i] = std::max(put_value(a, xs[i]), put_value(b, xs[i]));
  return measure_from_vertices(xs, vs, mass);
}

DiscreteMeasure inf_cd(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (std::abs(a.mass() - b.mass()) > order_tol())
    throw MassError("inf_cd: mass mismatch");
  if (a.is_zero()) return a;
  if (b.is_zero()) return b;
  const double mass = 0.5 * (a.mass() + b.mass());
  // lower convex hull of min(P_a, P_b). All hull vertices sit at union
  // breakpoints: between breakpoints the min is a single affine piece, and a
  // hull vertex needs a slope increase which only happens at candidate kinks
  // pointing upward (kinks of min created by crossings point downward).
  std::vector<double> xs = union_breakpoints(a, b);
  std::vector<double> vs(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    vs[i] = std::min(put_value(a, xs[i]), put_value(b, xs[i]));
  // Monotone-chain lower hull over (xs, vs), honouring the asymptotes: slope 0
  // to the left of the first kept vertex and `mass` to the right of the last.
  std::vector<std::size_t> hull;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    while (hull.size() >= 2) {
      const std::size_t p = hull[hull.size() - 2], q = hull.back();
      const double cross = (xs[q] - xs[p]) * (vs[i] - vs[p]) -
                           (xs[i] - xs[p]) * (vs[q] - vs[p]);
      if (cross <= 1e-15 * std::max(1.0, std::abs(vs[i])))
        hull.pop_back();
      else
        break;
    }
    // the left asymptote has slope 0 and the potential is >= 0, so drop a
    // first vertex that would force a negative entering slope
    while (hull.size() == 1 &&
           vs[i] - vs[hull[0]] < -1e-15 * std::max(1.0, std::abs(vs[i])))
      hull.pop_back();
    hull.push_back(i);
  }
  // trim trailing vertices lying above the right asymptote through the last
  // hull vertex: the hull must end with slope <= mass
  while (hull.size() >= 2) {
    const std::size_t p = hull[hull.size() - 2], q = hull.back();
    const double slope = (vs[q] - vs[p]) / (xs[q] - xs[p]);
    if (slope > mass + 1e-12)
      hull.pop_back();
    else
      break;
  }
  std::vector<double> hx, hv;
  for (std::size_t i : hull) {
    hx.push_back(xs[i]);
    hv.push_back(vs[i]);
  }
  return measure_from_vertices(hx, hv, mass);
}

DiscreteMeasure inf_c(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  return inf_cd(a, b);
}

// -- Elementary transforms ----------------------------------------------------

DiscreteMeasure translate(const DiscreteMeasure& m, double delta) {
  std::vector<double> atoms(m.atoms());
  for (double& x : atoms) x += delta;
  return DiscreteMeasure(std::move(atoms), m.weights());
}

DiscreteMeasure scale_mass(const DiscreteMeasure& m, double s) {
  if (s < 0) throw DomainError("scale_mass: negative factor");
  if (s == 0) return DiscreteMeasure();
  std::vector<double> w(m.weights());
  for (double& x : w) x *= s;
  return DiscreteMeasure(m.atoms(), std::move(w));
}

DiscreteMeasure restrict(const DiscreteMeasure& m, const Interval& I) {
  std::vector<double> atoms, weights;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (I.contains(m.atoms()[i])) {
      atoms.push_back(m.atoms()[i]);
      weights.push_back(m.weights()[i]);
    }
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

DiscreteMeasure add(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  std::vector<double> atoms(a.atoms()), weights(a.weights());
  atoms.insert(atoms.end(), b.atoms().begin(), b.atoms().end());
  weights.insert(weights.end(), b.weights().begin(), b.weights().end());
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

DiscreteMeasure subtract(const DiscreteMeasure& a, const DiscreteMeasure& b,
                         double tol) {
  std::vector<double> atoms, weights;
  std::size_t j = 0;
  auto push = [&](double x, double w) {
    if (w > kMergeTol) {
      atoms.push_back(x);
      weights.push_back(w);
    } else if (w < -tol) {
      throw MassError("subtract: negative remainder at x=" + std::to_string(x));
    }
  };
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.atoms()[i];
    double w = a.weights()[i];
    while (j < b.size() && b.atoms()[j] < x - kMergeTol) {
      if (b.weights()[j] > tol)
        throw MassError("subtract: subtrahend atom missing in minuend at x=" +
                        std::to_string(b.atoms()[j]));
      ++j;
    }
    if (j < b.size() && std::abs(b.atoms()[j] - x) <= kMergeTol) {
      w -= b.weights()[j];
      ++j;
    }
    push(x, w);
  }
  for (; j < b.size(); ++j)
    if (b.weights()[j] > tol)
      throw MassError("subtract: subtrahend atom missing in minuend at x=" +
                      std::to_string(b.atoms()[j]));
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

}  // namespace smot
