#pragma once

/**
 * @file bounds.hpp
 * @brief Error budget from measure distance to eigenvalue enclosures.
 *
 * The chain is
 *
 *   M  = max(|mu|(R), |nu|(R))
 *   c  = common lower bound of a_mu and a_nu, chosen so that the shifted form
 *        (a_mu)_{1-c}[g] >= ||g||_{H^1}^2 / 2
 *   s  = (4/sqrt(pi)) (int |mu^(t) - nu^(t)|^2 / (1+t^2) dt)^{1/2}
 *   delta = s / sqrt(1 - s)          (resolvent distance, requires s < 1)
 *
 * and an eigenvalue E of the operator with potential nu is mapped to a window
 * that contains exactly as many eigenvalues of -Delta + mu, provided the
 * isolation interval around E meets sigma(-Delta + nu) only in E.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "deltaspec/measures.hpp"
#include "deltaspec/pointsolver.hpp"

namespace deltaspec {

struct ErrorBudget {
  double M = 0.0;
  double c = 0.0;
  double s = 0.0;
  double delta = 0.0;
  double alpha_shift = 1.0;
};

struct Window {
  double lo = 0.0;
  double hi = 0.0;
  double isolation_lo = 0.0;
  double isolation_hi = 0.0;
  int multiplicity = 1;

  [[nodiscard]] bool contains(double x) const noexcept { return lo <= x && x <= hi; }
  [[nodiscard]] double width() const noexcept { return hi - lo; }
};

struct ExistenceReport {
  bool mass_negative = false;
  std::map<std::size_t, bool> gap_criterion;
  std::map<std::size_t, bool> exp_criterion;

  [[nodiscard]] bool any() const {
    if (mass_negative) return true;
    for (const auto& [k, v] : gap_criterion) if (v) return true;
    for (const auto& [k, v] : exp_criterion) if (v) return true;
    return false;
  }
};

/**
 * Common lower bound for every form a_mu with |mu|(R) <= M.
 *
 * On the line |g(x)|^2 <= ||g|| ||g'|| <= (eps/2)||g'||^2 + (1/(2 eps))||g||^2.
 * With eps = 1/M, a_mu[g] >= ||g'||^2 - M ||g||_inf^2 >= ||g'||^2/2 - (M^2/2)||g||^2,
 * so c = -M^2/2 bounds a_mu below and (a_mu)_{1-c}[g] >= ||g||_{H^1}^2 / 2.
 */
inline double common_lower_bound(double M) {
  if (!(M >= 0.0)) throw std::invalid_argument("M must be nonnegative");
  return M == 0.0 ? 0.0 : -0.5 * M * M;
}

/// int_{-T}^{T} composite Simpson plus the analytic tails.
struct FormDistance {
  double s = 0.0;
  double central_integral = 0.0;
  double tail_bound = 0.0;
  /// Richardson estimate |S_h - S_2h| / 15 of the central quadrature error.
  double quadrature_error = 0.0;
  double M = 0.0;
};

inline constexpr double kFormDistanceFactor = 4.0 / 1.7724538509055160273;  // 4/sqrt(pi)

/**
 * Form distance s between a_mu and a_nu over the shifted-form unit sphere.
 *
 * The integrand is even for real measures, so [0, T] is integrated with
 * `quad_points` Simpson panels and doubled. Beyond T the integrand is bounded
 * by (|mu|(R) + |nu|(R))^2 / (1 + t^2), which contributes
 * (|mu|(R) + |nu|(R))^2 * 2 arctan(1/T).
 */
inline FormDistance form_distance(const MeasureSpec& m, const MeasureSpec& n, double quad_tmax,
                                  int quad_points) {
  if (quad_points < 16) throw std::invalid_argument("quad_points must be at least 16");
  if (!(quad_tmax > 0.0)) throw std::invalid_argument("quad_tmax must be positive");
  const double tv_m = total_variation(m);
  const double tv_n = total_variation(n);

  auto integrand = [&](double t) {
    const double d = std::norm(fourier(m, t) - fourier(n, t));
    return d / (1.0 + t * t);
  };

  const int panels = quad_points;
  const int intervals = 2 * panels;
  const double h = quad_tmax / intervals;
  std::vector<double> f(static_cast<std::size_t>(intervals) + 1);
  for (int i = 0; i <= intervals; ++i) f[i] = integrand(h * i);

  auto simpson = [&](int stride) {
    // Panels of width 2*stride*h over the sampled values.
    double s = 0.0;
    for (int i = 0; i + 2 * stride <= intervals; i += 2 * stride) {
      s += f[i] + 4.0 * f[i + stride] + f[i + 2 * stride];
    }
    return s * stride * h / 3.0;
  };
  const double fine = 2.0 * simpson(1);
  double coarse = fine;
  if (panels % 2 == 0) coarse = 2.0 * simpson(2);

  FormDistance out;
  out.M = std::max(tv_m, tv_n);
  out.central_integral = fine;
  out.quadrature_error = std::abs(fine - coarse) / 15.0;
  const double tail_const = (tv_m + tv_n) * (tv_m + tv_n);
  out.tail_bound = tail_const * 2.0 * std::atan(1.0 / quad_tmax);
  out.s = kFormDistanceFactor * std::sqrt(std::max(0.0, fine + out.tail_bound));
  return out;
}

namespace detail {

/// Second antiderivative of e^{-|z|}.
inline double exp_kernel_primitive2(double z) noexcept {
  const double a = std::abs(z);
  return std::exp(-a) + a;
}

/// int_lo^hi e^{-|x - y|} dy.
inline double exp_kernel_line(double x, double lo, double hi) noexcept {
  if (x <= lo) return std::exp(-(lo - x)) - std::exp(-(hi - x));
  if (x >= hi) return std::exp(-(x - hi)) - std::exp(-(x - lo));
  return 2.0 - std::exp(-(x - lo)) - std::exp(-(hi - x));
}

/// int_a^b int_c^d k(x - y) dy dx given the second antiderivative of k.
template <class Primitive2>
double box_integral(Primitive2&& phi, double a, double b, double c, double d) {
  return phi(b - c) - phi(a - c) - phi(b - d) + phi(a - d);
}

}  // namespace detail

/**
 * Exact value of int |mu^(t) - nu^(t)|^2 / (1 + t^2) dt for measures made of
 * atoms and piecewise constant densities, via
 *
 *   int e^{itz} / (1 + t^2) dt = pi e^{-|z|},
 *
 * i.e. pi times the double integral of e^{-|x-y|} against (mu - nu)^{x2}.
 * Returns nullopt when either measure has a CDF or Cantor part.
 */
inline std::optional<double> form_integral_exact(const MeasureSpec& m, const MeasureSpec& n) {
  if (m.cdf || m.cantor || n.cdf || n.cantor) return std::nullopt;

  std::vector<Atom> diff(m.point.atoms().begin(), m.point.atoms().end());
  for (const auto& a : n.point.atoms()) diff.push_back({a.position, -a.weight});
  const PointMeasure atoms(std::move(diff));

  std::vector<DensityPiece> pieces(m.density.pieces().begin(), m.density.pieces().end());
  for (const auto& p : n.density.pieces()) pieces.push_back({p.lo, p.hi, -p.value});

  // atoms x atoms: sweep with P_j = sum_{i<j} w_i e^{-(x_j - x_i)}
  double q_aa = 0.0;
  double carry = 0.0;
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    if (j > 0) carry = (carry + atoms[j - 1].weight) * std::exp(-(atoms[j].position - atoms[j - 1].position));
    q_aa += atoms[j].weight * (atoms[j].weight + 2.0 * carry);
  }

  double q_ad = 0.0;
  for (const auto& a : atoms.atoms()) {
    for (const auto& p : pieces) q_ad += a.weight * p.value * detail::exp_kernel_line(a.position, p.lo, p.hi);
  }

  double q_dd = 0.0;
  for (const auto& p : pieces) {
    for (const auto& q : pieces) {
      q_dd += p.value * q.value *
              detail::box_integral(detail::exp_kernel_primitive2, p.lo, p.hi, q.lo, q.hi);
    }
  }
  const double q = q_aa + 2.0 * q_ad + q_dd;
  return std::numbers::pi * std::max(0.0, q);
}

/// s from an exact integral value.
inline double form_distance_from_integral(double integral) {
  return kFormDistanceFactor * std::sqrt(std::max(0.0, integral));
}

/// eps^2 pi + 8 M^2 arctan(1/t_max), bounding the Fourier integral when
/// sup_{|t|<=t_max} |mu^ - nu^| <= eps and |nu|(R) <= |mu|(R) <= M.
inline double split_integral_bound(double eps, double t_max, double M) {
  if (!(eps >= 0.0) || !(t_max > 0.0) || !(M >= 0.0)) {
    throw std::invalid_argument("split_integral_bound requires eps >= 0, t_max > 0, M >= 0");
  }
  return eps * eps * std::numbers::pi + 8.0 * M * M * std::atan(1.0 / t_max);
}

/// ||B^{-1} - A^{-1}|| <= s / sqrt(1 - s).
inline double resolvent_bound(double s) {
  if (!(s >= 0.0)) throw std::invalid_argument("form distance must be nonnegative");
  if (!(s < 1.0)) {
    throw std::domain_error(
        "form distance too large: the form-to-resolvent estimate requires s < 1");
  }
  return s / std::sqrt(1.0 - s);
}

/**
 * Enclosure of the eigenvalues of the perturbed operator near an eigenvalue E
 * of the reference operator, from a resolvent distance delta of the operators
 * shifted by alpha_shift = 1 - c.
 *
 * Resolvent eigenvalue 1/(E + alpha) moves by at most delta, which maps back
 * to (E - alpha d (E+alpha)) / (1 + d (E+alpha)) and (E + alpha d (E+alpha)) /
 * (1 - d (E+alpha)) with d = delta for the window and d = 2 delta for the
 * isolation interval. isolation_hi is +inf when 2 delta (E + alpha) >= 1.
 */
inline Window eigenvalue_window(double E, double delta, double alpha_shift, int multiplicity = 1) {
  if (!(alpha_shift >= 1.0)) throw std::invalid_argument("alpha_shift must be at least 1");
  if (!(delta >= 0.0)) throw std::invalid_argument("delta must be nonnegative");
  if (multiplicity < 1) throw std::invalid_argument("multiplicity must be positive");
  if (!(delta < 1.0 / (2.0 * alpha_shift))) {
    throw std::domain_error("resolvent distance too large: need delta < 1/(2 alpha)");
  }
  const double shifted = E + alpha_shift;
  if (!(shifted >= 1.0)) throw std::domain_error("E lies below the common lower bound");
  if (!(1.0 - delta * shifted > 0.0)) {
    throw std::domain_error("resolvent distance too large for this eigenvalue");
  }
  auto lower = [&](double d) {
    return (E - alpha_shift * d * shifted) / (1.0 + d * shifted);
  };
  auto upper = [&](double d) {
    const double den = 1.0 - d * shifted;
    return den > 0.0 ? (E + alpha_shift * d * shifted) / den
                     : std::numeric_limits<double>::infinity();
  };
  Window w;
  w.lo = lower(delta);
  w.hi = upper(delta);
  w.isolation_lo = lower(2.0 * delta);
  w.isolation_hi = upper(2.0 * delta);
  w.multiplicity = multiplicity;
  return w;
}

/**
 * Upper bound E_1(B) <= E_1(A) + (E_1(A) + c) s, with c > 0 the shift for
 * which A, B >= 1 - c and E_1(A) + c > 0.
 *
 * With `iterate`, the swapped inequality gives the lower bound
 * E_1(B) >= (E_1(A) - c s)/(1 + s), hence the admissible shift
 * 1 - min(E_1(A), (E_1(A) - c s)/(1 + s)); it replaces c while it decreases.
 * s is held fixed, so the caller must ensure it stays valid for the smaller
 * shifts.
 */
inline double ground_state_upper(double e1a, double c, double s, bool iterate = false) {
  if (!(s >= 0.0)) throw std::invalid_argument("s must be nonnegative");
  if (!(s < 1.0)) throw std::domain_error("form distance must satisfy s < 1");
  if (!(c > 0.0) || !(e1a + c > 0.0)) {
    throw std::invalid_argument("shift constant must satisfy c > 0 and E1(A) + c > 0");
  }
  double bound = e1a + (e1a + c) * s;
  if (!iterate) return bound;
  for (int round = 0; round < 100; ++round) {
    const double lower_b = (e1a - c * s) / (1.0 + s);
    const double next_c = 1.0 - std::min(e1a, lower_b);
    if (!(next_c < c)) break;
    c = next_c;
    const double next = e1a + (e1a + c) * s;
    const double change = std::abs(next - bound);
    bound = next;
    if (change < 1e-12) break;
  }
  return bound;
}

/// |mu|(R \ [a, b]) for every part, including partial overlap with
/// continuous parts.
inline double outside_mass(const MeasureSpec& m, double a, double b) {
  if (!(a < b)) throw std::invalid_argument("requires a < b");
  double tail = 0.0;
  for (const auto& atom : m.point.atoms()) {
    if (atom.position < a || atom.position > b) tail += std::abs(atom.weight);
  }
  for (const auto& p : m.density.pieces()) {
    const double inside = std::max(0.0, std::min(b, p.hi) - std::max(a, p.lo));
    tail += std::abs(p.value) * (p.length() - inside);
  }
  if (m.cdf) {
    const auto& c = *m.cdf;
    const double K = c.support_K;
    auto outside = [&](const CdfPart::Cdf& F) {
      if (!F) return 0.0;
      const double lo = std::clamp(a, -K, K);
      const double hi = std::clamp(b, -K, K);
      return F(K) - (F(hi) - F(lo));
    };
    tail += outside(c.cdf_plus) + outside(c.cdf_minus);
  }
  if (m.cantor) {
    tail += std::abs(m.cantor->weight) * (1.0 - (cantor_function(b) - cantor_function(a)));
  }
  return tail;
}

/// Per-unit-H^1 form error 2 |mu|(R \ [a, b]) of replacing mu by its
/// restriction to [a, b].
inline double truncation_form_error(const MeasureSpec& m, double a, double b) {
  return 2.0 * outside_mass(m, a, b);
}

/// 1 + (1/2) int int |x - y| dmu(x) dmu(y) / mu(R) for the negative Jordan
/// part mu = mu_- given as nonnegative atoms.
inline double n0_upper(const PointMeasure& mu_minus) {
  double total = 0.0;
  for (const auto& a : mu_minus.atoms()) {
    if (a.weight < 0.0) throw std::invalid_argument("mu_minus must be nonnegative");
    total += a.weight;
  }
  if (!(total > 0.0)) throw std::invalid_argument("mu_minus has zero mass; bound undefined");
  // sum_{i<j} w_i w_j (x_j - x_i) with running prefix sums
  double w_prefix = 0.0;
  double wx_prefix = 0.0;
  double pairs = 0.0;
  for (const auto& a : mu_minus.atoms()) {
    pairs += a.weight * (a.position * w_prefix - wx_prefix);
    w_prefix += a.weight;
    wx_prefix += a.weight * a.position;
  }
  return 1.0 + pairs / total;  // (1/2) * 2 * pairs / total
}

inline double n0_upper(const PiecewiseDensityPart& mu_minus) {
  double total = 0.0;
  for (const auto& p : mu_minus.pieces()) {
    if (p.value < 0.0) throw std::invalid_argument("mu_minus must be nonnegative");
    total += p.value * p.length();
  }
  if (!(total > 0.0)) throw std::invalid_argument("mu_minus has zero mass; bound undefined");
  auto cube = [](double z) { return std::abs(z) * z * z / 6.0; };
  double dbl = 0.0;
  for (const auto& p : mu_minus.pieces()) {
    for (const auto& q : mu_minus.pieces()) {
      dbl += p.value * q.value * detail::box_integral(cube, p.lo, p.hi, q.lo, q.hi);
    }
  }
  return 1.0 + 0.5 * dbl / total;
}

/// Level at which the Cantor double integral is evaluated.
inline constexpr int kCantorN0Level = 20;

struct CantorN0 {
  double bound;
  int level;
};

/// n0_upper for |weight| times the Cantor measure, on its level-`level` approximant.
inline CantorN0 n0_upper_cantor(int level = kCantorN0Level) {
  return {n0_upper(cantor_level(level)), level};
}

/// mu(R) < 0 certifies at least one negative eigenvalue.
inline bool exists_mass(const MeasureSpec& m) { return mass(m) < 0.0; }

/// 1/d_k^- + 1/d_k^+ < -w_k (gaps to the neighbours, infinite at the ends).
inline bool exists_gap(const LineOperator& op, std::size_t k) {
  const auto atoms = op.potential.atoms();
  if (k >= atoms.size()) throw std::out_of_range("atom index out of range");
  const double w = atoms[k].weight;
  if (!(w < 0.0)) return false;
  double inv = 0.0;
  if (k > 0) inv += 1.0 / (atoms[k].position - atoms[k - 1].position);
  if (k + 1 < atoms.size()) inv += 1.0 / (atoms[k + 1].position - atoms[k].position);
  return inv < -w;
}

/**
 * Energy of the single-delta ground state at x_k in the full potential,
 * scaled by the positive factor e^{w_k x_k}:
 *   w_k/2 + sum_{x_j<x_k} w_j e^{-w_k (x_j - x_k)} + sum_{x_j>x_k} w_j e^{w_k (x_j - x_k)}.
 * Negative value certifies at least one negative eigenvalue.
 */
inline double exp_criterion_value(const LineOperator& op, std::size_t k) {
  const auto atoms = op.potential.atoms();
  if (k >= atoms.size()) throw std::out_of_range("atom index out of range");
  const double wk = atoms[k].weight;
  const double xk = atoms[k].position;
  if (!(wk < 0.0)) throw std::invalid_argument("exponential criterion requires a negative weight at k");
  double sum = 0.5 * wk;
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    if (j == k) continue;
    const double d = atoms[j].position - xk;
    sum += atoms[j].weight * std::exp(d < 0.0 ? -wk * d : wk * d);
  }
  return sum;
}

inline bool exists_exp(const LineOperator& op, std::size_t k) {
  return exp_criterion_value(op, k) < 0.0;
}

inline ExistenceReport existence_report(const LineOperator& op) {
  ExistenceReport r;
  r.mass_negative = op.potential.mass() < 0.0;
  const auto atoms = op.potential.atoms();
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    r.gap_criterion[k] = exists_gap(op, k);
    if (atoms[k].weight < 0.0) r.exp_criterion[k] = exists_exp(op, k);
  }
  return r;
}

struct CertifyOptions {
  double quad_tmax = 1000.0;
  int quad_points = 20000;
  /// Use the closed-form kernel integral when both measures allow it.
  bool prefer_exact = true;
};

struct CertifiedWindow {
  double E = 0.0;
  Window window;
  /// The isolation interval avoids [0, inf) and every other computed eigenvalue.
  bool isolation_checked = false;
};

struct Certificate {
  ErrorBudget budget;
  std::vector<CertifiedWindow> windows;
  std::vector<std::string> caveats;
  bool exact_integral = false;
};

/**
 * Compose the chain for `approx` (pure point, with computed eigenvalues) and
 * the target measure. Each window encloses eigenvalues of the target
 * operator, assuming its isolation interval meets the spectrum of the
 * approximating operator only at E.
 */
inline Certificate certify(const MeasureSpec& target, const MeasureSpec& approx,
                           const std::vector<EigenvalueRecord>& eigs_approx,
                           const CertifyOptions& opts = {}) {
  Certificate cert;
  auto& b = cert.budget;
  b.M = std::max(total_variation(target), total_variation(approx));
  b.c = common_lower_bound(b.M);
  b.alpha_shift = 1.0 - b.c;

  std::optional<double> exact;
  if (opts.prefer_exact) exact = form_integral_exact(target, approx);
  if (exact) {
    b.s = form_distance_from_integral(*exact);
    cert.exact_integral = true;
  } else {
    const FormDistance fd = form_distance(target, approx, opts.quad_tmax, opts.quad_points);
    b.s = fd.s;
    cert.caveats.push_back("form distance from quadrature on [-T, T] plus analytic tail; "
                           "central quadrature error estimate " +
                           detail::format_lambda(fd.quadrature_error));
  }
  b.delta = resolvent_bound(b.s);

  for (const auto& rec : eigs_approx) {
    CertifiedWindow cw;
    cw.E = rec.lambda;
    cw.window = eigenvalue_window(rec.lambda, b.delta, b.alpha_shift, 1);
    bool isolated = cw.window.isolation_hi < 0.0;
    for (const auto& other : eigs_approx) {
      if (&other == &rec) continue;
      if (other.lambda > cw.window.isolation_lo && other.lambda < cw.window.isolation_hi) {
        isolated = false;
      }
    }
    cw.isolation_checked = isolated;
    if (!isolated) {
      cert.caveats.push_back("isolation interval around E = " + detail::format_lambda(rec.lambda) +
                             " meets other spectrum of the approximating operator; "
                             "enclosure count not guaranteed");
    }
    cert.windows.push_back(cw);
  }
  cert.caveats.push_back(
      "isolation check trusts the scan to have found every eigenvalue of the approximating "
      "operator");
  return cert;
}

}  // namespace deltaspec
