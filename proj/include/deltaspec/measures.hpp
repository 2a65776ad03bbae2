#pragma once

/**
 * @file measures.hpp
 * @brief Finite signed Radon measures on the real line.
 *
 * A MeasureSpec is the sum of four mutually singular parts that the caller
 * declares explicitly:
 *   - a finite list of atoms (PointMeasure),
 *   - a piecewise constant density,
 *   - a continuous part given by the Jordan CDFs F+ and F- on [-K, K],
 *   - a signed multiple of the Cantor probability measure on [0, 1].
 *
 * The continuous parts are weakly approximated by pure point measures on the
 * uniform grid x_j = -K + j/N, each grid cell (x_{j-1}, x_j] contributing its
 * mass as an atom at the right endpoint.
 */

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace deltaspec {

using complex = std::complex<double>;

struct Atom {
  double position = 0.0;
  double weight = 0.0;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Finite atomic measure sum_j w_j delta_{x_j} with strictly increasing
/// positions and nonzero weights.
class PointMeasure {
 public:
  PointMeasure() = default;

  /// Sorts, merges equal positions by summing weights and drops zero weights.
  explicit PointMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    for (const auto& a : atoms_) {
      if (!std::isfinite(a.position) || !std::isfinite(a.weight)) {
        throw std::invalid_argument("atom position and weight must be finite");
      }
    }
    std::stable_sort(atoms_.begin(), atoms_.end(),
                     [](const Atom& l, const Atom& r) { return l.position < r.position; });
    std::vector<Atom> merged;
    merged.reserve(atoms_.size());
    for (const auto& a : atoms_) {
      if (!merged.empty() && merged.back().position == a.position) {
        merged.back().weight += a.weight;
      } else {
        merged.push_back(a);
      }
    }
    std::erase_if(merged, [](const Atom& a) { return a.weight == 0.0; });
    atoms_ = std::move(merged);
  }

  /// Positions and weights in separate arrays; positions need not be sorted.
  static PointMeasure from_arrays(std::span<const double> positions,
                                  std::span<const double> weights) {
    if (positions.size() != weights.size()) {
      throw std::invalid_argument("positions and weights differ in length");
    }
    std::vector<Atom> atoms(positions.size());
    for (std::size_t i = 0; i < atoms.size(); ++i) atoms[i] = {positions[i], weights[i]};
    return PointMeasure(std::move(atoms));
  }

  [[nodiscard]] std::span<const Atom> atoms() const noexcept { return atoms_; }
  [[nodiscard]] std::size_t size() const noexcept { return atoms_.size(); }
  [[nodiscard]] bool empty() const noexcept { return atoms_.empty(); }
  [[nodiscard]] const Atom& operator[](std::size_t i) const { return atoms_[i]; }

  [[nodiscard]] double total_variation() const noexcept {
    double s = 0.0;
    for (const auto& a : atoms_) s += std::abs(a.weight);
    return s;
  }

  [[nodiscard]] double mass() const noexcept {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.weight;
    return s;
  }

  [[nodiscard]] complex fourier(double t) const {
    double re = 0.0;
    double im = 0.0;
    for (const auto& a : atoms_) {
      const double phase = t * a.position;
      re += a.weight * std::cos(phase);
      im += a.weight * std::sin(phase);
    }
    return {re, im};
  }

  /// Negative Jordan part as a nonnegative point measure.
  [[nodiscard]] PointMeasure negative_part() const {
    std::vector<Atom> out;
    for (const auto& a : atoms_) {
      if (a.weight < 0.0) out.push_back({a.position, -a.weight});
    }
    return PointMeasure(std::move(out));
  }

  friend bool operator==(const PointMeasure&, const PointMeasure&) = default;

 private:
  std::vector<Atom> atoms_;
};

/// Merge two point measures, summing weights at common positions.
inline PointMeasure merge(const PointMeasure& a, const PointMeasure& b) {
  std::vector<Atom> all(a.atoms().begin(), a.atoms().end());
  all.insert(all.end(), b.atoms().begin(), b.atoms().end());
  return PointMeasure(std::move(all));
}

struct DensityPiece {
  double lo = 0.0;
  double hi = 0.0;
  double value = 0.0;

  [[nodiscard]] double length() const noexcept { return hi - lo; }
  friend bool operator==(const DensityPiece&, const DensityPiece&) = default;
};

/// Piecewise constant density on pairwise disjoint intervals [lo, hi).
class PiecewiseDensityPart {
 public:
  PiecewiseDensityPart() = default;

  explicit PiecewiseDensityPart(std::vector<DensityPiece> pieces) : pieces_(std::move(pieces)) {
    for (const auto& p : pieces_) {
      if (!std::isfinite(p.lo) || !std::isfinite(p.hi) || !std::isfinite(p.value)) {
        throw std::invalid_argument("density piece must be finite");
      }
      if (!(p.lo < p.hi)) throw std::invalid_argument("density piece interval must be nonempty");
    }
    std::sort(pieces_.begin(), pieces_.end(),
              [](const DensityPiece& l, const DensityPiece& r) { return l.lo < r.lo; });
    for (std::size_t i = 1; i < pieces_.size(); ++i) {
      if (pieces_[i].lo < pieces_[i - 1].hi) {
        throw std::invalid_argument("density pieces overlap");
      }
    }
    std::erase_if(pieces_, [](const DensityPiece& p) { return p.value == 0.0; });
  }

  [[nodiscard]] std::span<const DensityPiece> pieces() const noexcept { return pieces_; }
  [[nodiscard]] bool empty() const noexcept { return pieces_.empty(); }

  [[nodiscard]] double total_variation() const noexcept {
    double s = 0.0;
    for (const auto& p : pieces_) s += std::abs(p.value) * p.length();
    return s;
  }

  [[nodiscard]] double mass() const noexcept {
    double s = 0.0;
    for (const auto& p : pieces_) s += p.value * p.length();
    return s;
  }

  /// Signed mass of the interval (a, b].
  [[nodiscard]] double mass_between(double a, double b) const noexcept {
    double s = 0.0;
    for (const auto& p : pieces_) {
      const double overlap = std::min(b, p.hi) - std::max(a, p.lo);
      if (overlap > 0.0) s += p.value * overlap;
    }
    return s;
  }

  [[nodiscard]] complex fourier(double t) const {
    complex s{0.0, 0.0};
    for (const auto& p : pieces_) {
      if (t == 0.0) {
        s += p.value * p.length();
        continue;
      }
      // (e^{itb} - e^{ita}) / (it) = e^{it(a+b)/2} * 2 sin(t(b-a)/2) / t
      const double half = 0.5 * t * p.length();
      const double mid = 0.5 * (p.lo + p.hi);
      const double amplitude = p.value * p.length() * (std::sin(half) / half);
      s += amplitude * std::polar(1.0, t * mid);
    }
    return s;
  }

  [[nodiscard]] double support_lo() const noexcept { return pieces_.empty() ? 0.0 : pieces_.front().lo; }
  [[nodiscard]] double support_hi() const noexcept { return pieces_.empty() ? 0.0 : pieces_.back().hi; }

  friend bool operator==(const PiecewiseDensityPart&, const PiecewiseDensityPart&) = default;

 private:
  std::vector<DensityPiece> pieces_;
};

/// Cantor function (CDF of the Cantor probability measure on [0, 1]).
inline double cantor_function(double x) noexcept {
  if (!(x > 0.0)) return 0.0;
  if (x >= 1.0) return 1.0;
  double result = 0.0;
  double scale = 0.5;
  for (int i = 0; i < 64 && scale > 0.0; ++i) {
    x *= 3.0;
    if (x >= 2.0) {
      result += scale;
      x -= 2.0;
    } else if (x >= 1.0) {
      return result + scale;
    }
    scale *= 0.5;
  }
  return result;
}

/// Continuous part given by the Jordan CDFs F+ and F- on [-K, K].
struct CdfPart {
  using Cdf = std::function<double(double)>;

  int support_K = 1;
  Cdf cdf_plus;   ///< empty means identically zero
  Cdf cdf_minus;  ///< empty means identically zero
  /// Cells per unit length of the Riemann-Stieltjes sums used by fourier().
  int quad_resolution = 4096;
  std::string name;

  [[nodiscard]] double plus(double x) const { return cdf_plus ? cdf_plus(x) : 0.0; }
  [[nodiscard]] double minus(double x) const { return cdf_minus ? cdf_minus(x) : 0.0; }
  [[nodiscard]] double signed_cdf(double x) const { return plus(x) - minus(x); }

  [[nodiscard]] double total_variation() const {
    return plus(support_K) + minus(support_K);
  }
  [[nodiscard]] double mass() const { return plus(support_K) - minus(support_K); }

  /// Signed mass of (a, b].
  [[nodiscard]] double mass_between(double a, double b) const {
    return signed_cdf(b) - signed_cdf(a);
  }

  [[nodiscard]] complex fourier(double t) const {
    const int cells = 2 * support_K * quad_resolution;
    const double h = 1.0 / quad_resolution;
    complex s{0.0, 0.0};
    double prev = signed_cdf(-support_K);
    for (int j = 1; j <= cells; ++j) {
      const double x = -support_K + static_cast<double>(j) * h;
      const double cur = signed_cdf(x);
      const double w = cur - prev;
      prev = cur;
      if (w != 0.0) s += w * std::polar(1.0, t * (x - 0.5 * h));
    }
    return s;
  }

  /// Builtin: weight times the Cantor measure, K = 1.
  static CdfPart cantor(double weight, int quad_resolution = 4096) {
    CdfPart p;
    p.support_K = 1;
    p.quad_resolution = quad_resolution;
    p.name = "cantor";
    const double w = std::abs(weight);
    Cdf f = [w](double x) { return w * cantor_function(x); };
    if (weight > 0.0) p.cdf_plus = f;
    if (weight < 0.0) p.cdf_minus = f;
    return p;
  }
};

/// Cantor product depth used for the transform of a CantorPart.
inline constexpr int kCantorProductDepth = 40;
/// Largest level accepted by cantor_level (2^26 atoms).
inline constexpr int kCantorLevelCap = 26;

/// e^{it/2} prod_{j=1}^{depth} cos(t / 3^j).
inline complex cantor_fourier_level(double t, int depth) {
  if (depth < 0) throw std::invalid_argument("cantor depth must be nonnegative");
  double prod = 1.0;
  double scale = 1.0;
  for (int j = 1; j <= depth; ++j) {
    scale /= 3.0;
    prod *= std::cos(t * scale);
  }
  return prod * std::polar(1.0, 0.5 * t);
}

/// Signed multiple of the Cantor probability measure on [0, 1].
struct CantorPart {
  double weight = 0.0;

  [[nodiscard]] double total_variation() const noexcept { return std::abs(weight); }
  [[nodiscard]] double mass() const noexcept { return weight; }
  [[nodiscard]] complex fourier(double t) const {
    return weight * cantor_fourier_level(t, kCantorProductDepth);
  }
  [[nodiscard]] double mass_between(double a, double b) const noexcept {
    return weight * (cantor_function(b) - cantor_function(a));
  }
};

struct MeasureSpec {
  PointMeasure point;
  PiecewiseDensityPart density;
  std::optional<CdfPart> cdf;
  std::optional<CantorPart> cantor;

  [[nodiscard]] bool has_continuous_part() const noexcept {
    return !density.empty() || cdf.has_value() || cantor.has_value();
  }
  [[nodiscard]] bool is_pure_point() const noexcept { return !has_continuous_part(); }

  static MeasureSpec from_point(PointMeasure p) {
    MeasureSpec m;
    m.point = std::move(p);
    return m;
  }
  static MeasureSpec from_density(PiecewiseDensityPart d) {
    MeasureSpec m;
    m.density = std::move(d);
    return m;
  }
};

/// |mu|(R).
inline double total_variation(const MeasureSpec& m) {
  double s = m.point.total_variation() + m.density.total_variation();
  if (m.cdf) s += m.cdf->total_variation();
  if (m.cantor) s += m.cantor->total_variation();
  return s;
}

/// mu(R).
inline double mass(const MeasureSpec& m) {
  double s = m.point.mass() + m.density.mass();
  if (m.cdf) s += m.cdf->mass();
  if (m.cantor) s += m.cantor->mass();
  return s;
}

/// Fourier transform int e^{itx} dmu(x).
inline complex fourier(const MeasureSpec& m, double t) {
  complex s = m.point.fourier(t) + m.density.fourier(t);
  if (m.cdf) s += m.cdf->fourier(t);
  if (m.cantor) s += m.cantor->fourier(t);
  return s;
}

struct Truncation {
  MeasureSpec measure;
  double tail_mass = 0.0;  ///< |mu|(R \ [a, b])
};

/// Restriction of m to the closed window [a, b].
inline Truncation truncate(const MeasureSpec& m, double a, double b) {
  if (!(a < b)) throw std::invalid_argument("truncate requires a < b");
  Truncation out;
  double tail = 0.0;

  std::vector<Atom> kept;
  for (const auto& atom : m.point.atoms()) {
    if (atom.position >= a && atom.position <= b) {
      kept.push_back(atom);
    } else {
      tail += std::abs(atom.weight);
    }
  }
  out.measure.point = PointMeasure(std::move(kept));

  std::vector<DensityPiece> pieces;
  for (const auto& p : m.density.pieces()) {
    const double lo = std::max(p.lo, a);
    const double hi = std::min(p.hi, b);
    if (lo < hi) {
      pieces.push_back({lo, hi, p.value});
      tail += std::abs(p.value) * (p.length() - (hi - lo));
    } else {
      tail += std::abs(p.value) * p.length();
    }
  }
  out.measure.density = PiecewiseDensityPart(std::move(pieces));

  auto restrict_support = [&](double lo, double hi, double tv) -> bool {
    if (a <= lo && hi <= b) return true;
    if (b < lo || a > hi) {
      tail += tv;
      return false;
    }
    throw std::invalid_argument("unsupported truncation of CDF part inside its support");
  };
  if (m.cdf && restrict_support(-m.cdf->support_K, m.cdf->support_K, m.cdf->total_variation())) {
    out.measure.cdf = m.cdf;
  }
  if (m.cantor && restrict_support(0.0, 1.0, m.cantor->total_variation())) {
    out.measure.cantor = m.cantor;
  }
  out.tail_mass = tail;
  return out;
}

/// Grid node x_j = -K + j/N, computed from exact integers.
inline double grid_node(int K, int N, long long j) {
  return static_cast<double>(j - static_cast<long long>(K) * N) / static_cast<double>(N);
}

/**
 * Weak approximation mu_N = sum_{j=1}^{2NK} a_j delta_{x_j} of the continuous
 * part, with a_j = mu_c((x_{j-1}, x_j]). Atoms of m.point are merged in
 * unchanged.
 */
inline PointMeasure discretize_continuous(const MeasureSpec& m, int K, int N) {
  if (K <= 0 || N <= 0) throw std::invalid_argument("K and N must be positive");
  if (!m.has_continuous_part()) return m.point;

  const double lo = -K;
  const double hi = K;
  if (!m.density.empty() && (m.density.support_lo() < lo || m.density.support_hi() > hi)) {
    throw std::invalid_argument("continuous support exceeds [-K, K]; truncate first");
  }
  if (m.cdf && m.cdf->support_K > K) {
    throw std::invalid_argument("CDF support exceeds [-K, K]; truncate first");
  }
  if (m.cantor && K < 1) {
    throw std::invalid_argument("Cantor support exceeds [-K, K]; truncate first");
  }

  const long long cells = 2LL * K * N;
  std::vector<Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(cells) + m.point.size());
  double x_prev = grid_node(K, N, 0);
  for (long long j = 1; j <= cells; ++j) {
    const double x = grid_node(K, N, j);
    double w = m.density.mass_between(x_prev, x);
    if (m.cdf) w += m.cdf->mass_between(x_prev, x);
    if (m.cantor) w += m.cantor->mass_between(x_prev, x);
    if (w != 0.0) atoms.push_back({x, w});
    x_prev = x;
  }
  atoms.insert(atoms.end(), m.point.atoms().begin(), m.point.atoms().end());
  return PointMeasure(std::move(atoms));
}

/**
 * Smallest N with 1/N < (pi / (2 t_max)) min{1, eps^2/2}. For such N,
 * |mu^(t) - mu_N^(t)| <= eps |mu|(R) for every |t| <= t_max.
 */
inline long long grid_modulus(double t_max, double eps) {
  if (!(t_max > 0.0) || !(eps > 0.0)) throw std::invalid_argument("t_max and eps must be positive");
  const double delta = std::numbers::pi / (2.0 * t_max) * std::min(1.0, 0.5 * eps * eps);
  // 1/N < delta  <=>  N > 1/delta
  const double bound = 1.0 / delta;
  auto n = static_cast<long long>(std::floor(bound)) + 1;
  while (n > 1 && 1.0 / static_cast<double>(n - 1) < delta) --n;
  while (!(1.0 / static_cast<double>(n) < delta)) ++n;
  return n;
}

/**
 * Level-N Cantor approximant 2^{-N} sum_{x in Lambda_N} delta_x with
 * Lambda_0 = {1/2} and Lambda_N = Lambda_{N-1}/3 u (1 - Lambda_{N-1}/3).
 */
inline PointMeasure cantor_level(int level, double weight = 1.0) {
  if (level < 0) throw std::invalid_argument("cantor level must be nonnegative");
  if (level > kCantorLevelCap) throw std::invalid_argument("cantor level exceeds depth cap");
  std::vector<double> pts{0.5};
  pts.reserve(std::size_t{1} << level);
  for (int n = 0; n < level; ++n) {
    const std::size_t m = pts.size();
    pts.resize(2 * m);
    // Lambda_{n-1}/3 is sorted ascending; 1 - x/3 is sorted descending.
    for (std::size_t i = 0; i < m; ++i) pts[m + i] = 1.0 - pts[m - 1 - i] / 3.0;
    for (std::size_t i = 0; i < m; ++i) pts[i] /= 3.0;
  }
  const double w = std::ldexp(weight, -level);
  std::vector<Atom> atoms(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) atoms[i] = {pts[i], w};
  return PointMeasure(std::move(atoms));
}

/// Sampled max of |m^(t) - n^(t)| over a uniform grid of [-t_max, t_max].
/// Diagnostic only; grid_modulus gives the certified route.
inline double fourier_sup_distance(const MeasureSpec& m, const MeasureSpec& n, double t_max,
                                   int samples) {
  if (samples < 2) throw std::invalid_argument("samples must be at least 2");
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double t = -t_max + 2.0 * t_max * static_cast<double>(i) / (samples - 1);
    best = std::max(best, std::abs(fourier(m, t) - fourier(n, t)));
  }
  return best;
}

}  // namespace deltaspec
