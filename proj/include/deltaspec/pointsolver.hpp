#pragma once

/**
 * @file pointsolver.hpp
 * @brief Negative eigenvalues of -Delta + sum_j w_j delta_{x_j}.
 *
 * Between interaction points an eigenfunction for lambda = -kappa^2 is a
 * combination of e^{kappa x} and e^{-kappa x}; at x_j the derivative jumps by
 * w_j f(x_j). Shooting the decaying solution from the left and reading off the
 * coefficient of the growing exponential after the last point gives a
 * continuous function of lambda whose zeros are the eigenvalues.
 *
 * The state is carried as (f, f') rather than as exponential coefficients.
 * Each gap of length L is propagated with the transfer matrix multiplied by
 * e^{-kappa L}, and the state is rescaled by exact powers of two whenever
 * max(|f|, |f'|) leaves [1/2, 2]. Both are positive scalings, so the sign and
 * zero set of the residual are unchanged while no intermediate overflows.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "deltaspec/measures.hpp"

namespace deltaspec {

/// -Delta + sum_j w_j delta_{x_j} on the real line.
struct LineOperator {
  PointMeasure potential;
};

/// -Delta_alpha + sum_j w_j delta_{x_j} on [0, inf) with the Robin condition
/// cos(alpha) f(0) + sin(alpha) f'(0) = 0.
class HalfLineOperator {
 public:
  HalfLineOperator(double alpha, PointMeasure potential)
      : alpha_(alpha), potential_(std::move(potential)) {
    if (!(alpha_ >= 0.0 && alpha_ < std::numbers::pi)) {
      throw std::invalid_argument("Robin parameter alpha must lie in [0, pi)");
    }
    if (!potential_.empty() && !(potential_[0].position > 0.0)) {
      throw std::invalid_argument("half-line atoms must have strictly positive positions");
    }
  }

  [[nodiscard]] double alpha() const noexcept { return alpha_; }
  [[nodiscard]] const PointMeasure& potential() const noexcept { return potential_; }

 private:
  double alpha_;
  PointMeasure potential_;
};

/// (f, f') at the current point, up to the factor 2^exponent and the
/// accumulated positive gap factors.
struct ShootState {
  double u = 1.0;
  double v = 0.0;
  int exponent = 0;

  [[nodiscard]] double log_scale() const noexcept { return exponent * std::numbers::ln2; }
};

struct EigenvalueRecord {
  double lambda = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double residual_at_lambda = 0.0;
  int iterations = 0;
};

struct ScanOptions {
  /// Worker threads for the lambda-grid scan; 0 picks hardware concurrency.
  unsigned threads = 1;
  /// Receives non-fatal diagnostics (tangential dips, unresolved roots near 0).
  std::function<void(std::string_view)> diagnostics;
};

inline constexpr int kDefaultGridPoints = 4096;
inline constexpr double kDefaultTol = 1e-12;

namespace detail {

/// Propagation factors for one gap at fixed kappa.
struct GapFactors {
  double c;        // cosh(kL) e^{-kL}
  double s;        // sinh(kL) e^{-kL}
  double s_over_k; // sinh(kL) e^{-kL} / k

  static GapFactors make(double kappa, double gap) noexcept {
    const double e = std::expm1(-2.0 * kappa * gap);  // e^{-2kL} - 1
    return {1.0 + 0.5 * e, -0.5 * e, -0.5 * e / kappa};
  }
};

inline void renormalize(ShootState& st) noexcept {
  const double m = std::max(std::abs(st.u), std::abs(st.v));
  if (m > 2.0 || m < 0.5) {
    int e = 0;
    std::frexp(m, &e);
    st.u = std::ldexp(st.u, -e);
    st.v = std::ldexp(st.v, -e);
    st.exponent += e;
  }
}

inline void propagate(ShootState& st, const GapFactors& g, double kappa) noexcept {
  const double u = g.c * st.u + g.s_over_k * st.v;
  const double v = kappa * g.s * st.u + g.c * st.v;
  st.u = u;
  st.v = v;
}

/**
 * Walk the atoms starting from `st` located at `start`. `visit(i, state)` is
 * called after the jump at atom i.
 */
template <class Visit>
ShootState shoot(std::span<const Atom> atoms, double kappa, double start, ShootState st,
                 bool renorm, Visit&& visit) {
  double prev_x = start;
  double prev_gap = -1.0;
  GapFactors g{1.0, 0.0, 0.0};
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double gap = atoms[i].position - prev_x;
    if (gap > 0.0) {
      if (gap != prev_gap) {
        g = GapFactors::make(kappa, gap);
        prev_gap = gap;
      }
      propagate(st, g, kappa);
    }
    st.v += atoms[i].weight * st.u;
    if (renorm) renormalize(st);
    visit(i, st);
    prev_x = atoms[i].position;
  }
  return st;
}

struct NoVisit {
  void operator()(std::size_t, const ShootState&) const noexcept {}
};

inline double kappa_of(double lambda) {
  if (!(lambda < 0.0)) {
    throw std::domain_error("such operators can only have negative eigenvalues; lambda must be < 0");
  }
  return std::sqrt(-lambda);
}

inline ShootState line_final_state(const LineOperator& op, double kappa, bool renorm = true) {
  const auto atoms = op.potential.atoms();
  return shoot(atoms, kappa, atoms[0].position, ShootState{1.0, kappa, 0}, renorm, NoVisit{});
}

inline ShootState halfline_initial_state(double alpha) noexcept {
  return ShootState{std::sin(alpha), -std::cos(alpha), 0};
}

inline ShootState halfline_final_state(const HalfLineOperator& op, double kappa,
                                       bool renorm = true) {
  return shoot(op.potential().atoms(), kappa, 0.0, halfline_initial_state(op.alpha()), renorm,
               NoVisit{});
}

/// Coefficient of e^{kappa x} after the last point, with the tracked 2^exponent.
inline double growing_coefficient(const ShootState& st, double kappa) noexcept {
  return std::ldexp((kappa * st.u + st.v) / (2.0 * kappa), st.exponent);
}

/// |kappa u + v| / (kappa |u| + |v|): scale-free size of the residual in [0, 1].
inline double relative_defect(const ShootState& st, double kappa) noexcept {
  const double den = kappa * std::abs(st.u) + std::abs(st.v);
  return den > 0.0 ? std::abs(kappa * st.u + st.v) / den : 1.0;
}

inline int sign_of(double x) noexcept { return (x > 0.0) - (x < 0.0); }

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

struct ScanSample {
  double value;
  double defect;
};

/// Evaluate `f` on every grid point; partitioning never changes the result.
template <class F>
std::vector<ScanSample> scan_grid(const std::vector<double>& grid, unsigned threads, F&& f) {
  std::vector<ScanSample> out(grid.size());
  threads = std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(grid.size()));
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = f(grid[i]);
  };
  if (threads <= 1) {
    work(0, grid.size());
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (grid.size() + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t b = t * chunk;
    const std::size_t e = std::min(grid.size(), b + chunk);
    if (b < e) pool.emplace_back(work, b, e);
  }
  for (auto& th : pool) th.join();
  return out;
}

template <class Residual>
EigenvalueRecord bisect(Residual&& r, double lo, double hi, double r_lo, double tol) {
  EigenvalueRecord rec;
  int s_lo = sign_of(r_lo);
  int it = 0;
  double found = std::numeric_limits<double>::quiet_NaN();
  // width <= tol, and relative width <= tol for |lambda| < 1
  while (hi - lo > tol * std::min(1.0, std::abs(hi)) && it < 400) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    ++it;
    const double rm = r(mid);
    const int s = sign_of(rm);
    if (s == 0) {
      found = mid;
      break;
    }
    if (s == s_lo) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  rec.lo = lo;
  rec.hi = hi;
  rec.lambda = std::isnan(found) ? lo + 0.5 * (hi - lo) : found;
  rec.residual_at_lambda = r(rec.lambda);
  rec.iterations = it;
  return rec;
}

inline std::string format_lambda(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

template <class Residual, class FinalState>
std::vector<EigenvalueRecord> find_roots(Residual&& residual, FinalState&& final_state,
                                         double lambda_lo, int grid_points, double tol,
                                         const ScanOptions& opts) {
  if (grid_points < 2) throw std::invalid_argument("grid_points must be at least 2");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  const double lambda_hi = -tol;
  std::vector<EigenvalueRecord> out;
  if (!(lambda_lo < lambda_hi)) return out;

  std::vector<double> grid(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i) {
    grid[i] = i == grid_points - 1
                  ? lambda_hi
                  : lambda_lo + (lambda_hi - lambda_lo) * static_cast<double>(i) / (grid_points - 1);
  }
  const auto samples = scan_grid(grid, opts.threads, [&](double lam) {
    const double kappa = std::sqrt(-lam);
    const ShootState st = final_state(kappa);
    return ScanSample{growing_coefficient(st, kappa), relative_defect(st, kappa)};
  });

  auto note = [&](const std::string& msg) {
    if (opts.diagnostics) opts.diagnostics(msg);
  };

  for (int i = 0; i + 1 < grid_points; ++i) {
    const int s0 = sign_of(samples[i].value);
    const int s1 = sign_of(samples[i + 1].value);
    if (s0 * s1 < 0) {
      out.push_back(bisect(residual, grid[i], grid[i + 1], samples[i].value, tol));
    } else if (s0 == 0 && i > 0 && sign_of(samples[i - 1].value) * s1 < 0) {
      EigenvalueRecord rec;
      rec.lambda = grid[i];
      rec.lo = grid[i - 1];
      rec.hi = grid[i + 1];
      rec.residual_at_lambda = 0.0;
      out.push_back(rec);
    }
  }

  for (int i = 1; i + 1 < grid_points; ++i) {
    const int s = sign_of(samples[i].value);
    if (s == 0 || s != sign_of(samples[i - 1].value) || s != sign_of(samples[i + 1].value)) continue;
    const double d = samples[i].defect;
    if (d < 1e-3 && d < samples[i - 1].defect && d < samples[i + 1].defect) {
      note("near-zero residual without sign change near lambda = " + format_lambda(grid[i]) +
           "; a tangential root is not reported");
    }
  }

  const double near_zero = lambda_hi * 1e-3;
  if (sign_of(residual(near_zero)) != sign_of(samples.back().value)) {
    note("sign change in [-tol, 0): an eigenvalue above -" + format_lambda(tol) +
         " is not resolved");
  }
  return out;
}

}  // namespace detail

/// Shooting residual r(lambda); same sign as the growing coefficient a_k.
inline double residual(const LineOperator& op, double lambda) {
  const double kappa = detail::kappa_of(lambda);
  if (op.potential.empty()) throw std::invalid_argument("operator has no interaction points");
  return detail::growing_coefficient(detail::line_final_state(op, kappa), kappa);
}

/// Final shooting state, optionally without renormalization.
inline ShootState shoot_state(const LineOperator& op, double lambda, bool renormalize = true) {
  const double kappa = detail::kappa_of(lambda);
  if (op.potential.empty()) throw std::invalid_argument("operator has no interaction points");
  return detail::line_final_state(op, kappa, renormalize);
}

inline double residual_halfline(const HalfLineOperator& op, double lambda) {
  const double kappa = detail::kappa_of(lambda);
  return detail::growing_coefficient(detail::halfline_final_state(op, kappa), kappa);
}

/// Sum of attractive strengths, sum_j max(0, -w_j).
inline double attractive_strength(const PointMeasure& p) noexcept {
  double a = 0.0;
  for (const auto& atom : p.atoms()) a += std::max(0.0, -atom.weight);
  return a;
}

/**
 * All eigenvalues of the line operator lie above -4A^2, A the attractive
 * strength: |f(x)|^2 <= ||f|| ||f'|| on the line, so the form is at least
 * ||f'||^2 - A ||f|| ||f'|| >= -(A^2/4) ||f||^2.
 */
inline double lower_search_bound(const LineOperator& op) noexcept {
  const double a = attractive_strength(op.potential);
  return -4.0 * a * a - 1e-6;
}

/// Half-line analogue. With B = A + max(0, cot alpha), |f(x)|^2 <= 2||f|| ||f'||
/// on [0, inf) bounds the form below by -B^2.
inline double lower_search_bound_halfline(const HalfLineOperator& op) noexcept {
  const double a = attractive_strength(op.potential());
  double bound = 4.0 * a * a;
  const double alpha = op.alpha();
  if (alpha > 0.0 && alpha < 0.5 * std::numbers::pi) {
    const double cot = std::cos(alpha) / std::sin(alpha);
    bound = std::max({bound, cot * cot + 1.0, (a + cot) * (a + cot)});
  }
  return -bound - 1e-6;
}

inline std::vector<EigenvalueRecord> find_eigenvalues(const LineOperator& op,
                                                      int grid_points = kDefaultGridPoints,
                                                      double tol = kDefaultTol,
                                                      const ScanOptions& opts = {}) {
  if (grid_points < 2) throw std::invalid_argument("grid_points must be at least 2");
  if (op.potential.empty() || attractive_strength(op.potential) == 0.0) return {};
  return detail::find_roots([&](double lam) { return residual(op, lam); },
                            [&](double kappa) { return detail::line_final_state(op, kappa); },
                            lower_search_bound(op), grid_points, tol, opts);
}

inline std::vector<EigenvalueRecord> find_eigenvalues_halfline(
    const HalfLineOperator& op, int grid_points = kDefaultGridPoints, double tol = kDefaultTol,
    const ScanOptions& opts = {}) {
  if (grid_points < 2) throw std::invalid_argument("grid_points must be at least 2");
  return detail::find_roots(
      [&](double lam) { return residual_halfline(op, lam); },
      [&](double kappa) { return detail::halfline_final_state(op, kappa); },
      lower_search_bound_halfline(op), grid_points, tol, opts);
}

/**
 * Eigenfunction f(x) = a_j e^{kappa x} + b_j e^{-kappa x} on the j-th interval.
 *
 * Internally each interval keeps the stabilized state at its left end, so
 * value() stays finite where the exponential coefficients would overflow.
 */
class PiecewiseEigenfunction {
 public:
  struct Piece {
    double start;  // left end of the interval (x_j), or the anchor for piece 0
    double u;
    double v;
    int exponent;
  };

  PiecewiseEigenfunction(double lambda, std::vector<Piece> pieces, std::vector<double> breaks)
      : lambda_(lambda), kappa_(std::sqrt(-lambda)), pieces_(std::move(pieces)),
        breaks_(std::move(breaks)) {}

  [[nodiscard]] double lambda() const noexcept { return lambda_; }
  [[nodiscard]] std::size_t intervals() const noexcept { return pieces_.size(); }
  /// Interaction points separating the intervals.
  [[nodiscard]] std::span<const double> breaks() const noexcept { return breaks_; }

  /// (a_j, b_j) for interval j.
  [[nodiscard]] std::pair<double, double> coefficients(std::size_t j) const {
    const Piece& p = pieces_.at(j);
    const double k = kappa_;
    const double a = std::ldexp((k * p.u + p.v) / (2.0 * k), p.exponent);
    const double b = std::ldexp((k * p.u - p.v) / (2.0 * k), p.exponent) * std::exp(2.0 * k * p.start);
    return {a, b};
  }

  /// f and f' on interval j evaluated at x (x may lie on either boundary).
  [[nodiscard]] std::pair<double, double> evaluate_on(std::size_t j, double x) const {
    const Piece& p = pieces_.at(j);
    const double k = kappa_;
    const double d = x - p.start;
    const double ch = std::cosh(k * d);
    const double sh = std::sinh(k * d);
    const double scale = std::ldexp(std::exp(k * p.start), p.exponent);
    return {scale * (p.u * ch + p.v * sh / k), scale * (p.u * k * sh + p.v * ch)};
  }

  /// Index of the interval containing x (right-continuous at the breaks).
  [[nodiscard]] std::size_t interval_of(double x) const {
    return static_cast<std::size_t>(std::upper_bound(breaks_.begin(), breaks_.end(), x) -
                                    breaks_.begin()) -
           (pieces_.size() == breaks_.size() ? 1 : 0);
  }

  [[nodiscard]] double value(double x) const { return evaluate_on(interval_of(x), x).first; }

 private:
  double lambda_;
  double kappa_;
  std::vector<Piece> pieces_;
  std::vector<double> breaks_;
};

/// Relative residual accepted by eigenfunction().
inline constexpr double kEigenfunctionTolerance = 1e-6;

/**
 * Eigenfunction normalized by a_0 = 1, b_0 = 0. Rejects lambda when the
 * relative size of the growing coefficient exceeds `tolerance`.
 */
inline PiecewiseEigenfunction eigenfunction(const LineOperator& op, double lambda,
                                            double tolerance = kEigenfunctionTolerance) {
  const double kappa = detail::kappa_of(lambda);
  if (op.potential.empty()) throw std::invalid_argument("operator has no interaction points");
  const auto atoms = op.potential.atoms();
  std::vector<PiecewiseEigenfunction::Piece> pieces;
  pieces.reserve(atoms.size() + 1);
  std::vector<double> breaks;
  breaks.reserve(atoms.size());
  // Interval 0 is e^{kappa x}: state (1, kappa) at x_1 times e^{kappa x_1}.
  pieces.push_back({atoms[0].position, 1.0, kappa, 0});
  const ShootState last = detail::shoot(
      atoms, kappa, atoms[0].position, ShootState{1.0, kappa, 0}, true,
      [&](std::size_t i, const ShootState& st) {
        pieces.push_back({atoms[i].position, st.u, st.v, st.exponent});
        breaks.push_back(atoms[i].position);
      });
  if (detail::relative_defect(last, kappa) > tolerance) {
    throw std::domain_error("lambda is not an eigenvalue: residual exceeds tolerance");
  }
  return PiecewiseEigenfunction(lambda, std::move(pieces), std::move(breaks));
}

/// Half-line eigenfunction; interval 0 is [0, x_1) and starts from the
/// boundary state (sin alpha, -cos alpha).
inline PiecewiseEigenfunction eigenfunction_halfline(const HalfLineOperator& op, double lambda,
                                                     double tolerance = kEigenfunctionTolerance) {
  const double kappa = detail::kappa_of(lambda);
  const auto atoms = op.potential().atoms();
  std::vector<PiecewiseEigenfunction::Piece> pieces;
  std::vector<double> breaks{0.0};
  const ShootState init = detail::halfline_initial_state(op.alpha());
  pieces.push_back({0.0, init.u, init.v, 0});
  const ShootState last =
      detail::shoot(atoms, kappa, 0.0, init, true, [&](std::size_t i, const ShootState& st) {
        pieces.push_back({atoms[i].position, st.u, st.v, st.exponent});
        breaks.push_back(atoms[i].position);
      });
  if (detail::relative_defect(last, kappa) > tolerance) {
    throw std::domain_error("lambda is not an eigenvalue: residual exceeds tolerance");
  }
  return PiecewiseEigenfunction(lambda, std::move(pieces), std::move(breaks));
}

}  // namespace deltaspec
