#pragma once

// Problem files, result formatting and the command implementations behind the
// deltaspec executable. Commands return process exit codes:
//   0 success, 2 invalid input, 3 rejected by the solver or the bounds.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "deltaspec/bounds.hpp"
#include "deltaspec/measures.hpp"
#include "deltaspec/pointsolver.hpp"
#include "deltaspec/version.hpp"

namespace deltaspec::cli {

using nlohmann::json;

enum ExitCode : int { kOk = 0, kInvalidInput = 2, kRejected = 3 };

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Domain { Line, HalfLine };

struct ProblemFile {
  Domain domain = Domain::Line;
  double boundary_alpha = 0.0;
  MeasureSpec measure;
  int K = 1;
  int N = 1;
  std::optional<int> cantor_level;
  double tol = kDefaultTol;
  int grid_points = kDefaultGridPoints;
  std::optional<CertifyOptions> certify;

  /// Level of the Cantor approximant: explicit, or N - 1 (the first
  /// refinement row uses the single atom at 1/2).
  [[nodiscard]] int effective_cantor_level() const { return cantor_level.value_or(N - 1); }
};

/// 15 significant digits; scientific below 1e-4.
inline std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

namespace detail {

inline void only_keys(const json& obj, std::initializer_list<const char*> allowed,
                      const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ValidationError("unknown field '" + key + "' in " + where);
  }
}

inline double finite_number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ValidationError(what + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError(what + " must be finite");
  return d;
}

inline int positive_int(const json& v, const std::string& what) {
  if (!v.is_number_integer()) throw ValidationError(what + " must be an integer");
  const auto i = v.get<long long>();
  if (i <= 0 || i > 1'000'000'000LL) throw ValidationError(what + " must be a positive integer");
  return static_cast<int>(i);
}

inline MeasureSpec parse_measure(const json& j, ProblemFile& pf) {
  only_keys(j, {"atoms", "density", "cdf", "cantor"}, "measure");
  MeasureSpec m;
  if (j.contains("atoms")) {
    const auto& arr = j.at("atoms");
    if (!arr.is_array()) throw ValidationError("measure.atoms must be an array");
    std::vector<Atom> atoms;
    for (const auto& a : arr) {
      if (!a.is_array() || a.size() != 2) throw ValidationError("each atom must be [x, weight]");
      atoms.push_back({finite_number(a[0], "atom position"), finite_number(a[1], "atom weight")});
    }
    m.point = PointMeasure(std::move(atoms));
  }
  if (j.contains("density")) {
    const auto& arr = j.at("density");
    if (!arr.is_array()) throw ValidationError("measure.density must be an array");
    std::vector<DensityPiece> pieces;
    for (const auto& p : arr) {
      only_keys(p, {"lo", "hi", "value"}, "density piece");
      if (!p.contains("lo") || !p.contains("hi") || !p.contains("value")) {
        throw ValidationError("density piece needs lo, hi and value");
      }
      pieces.push_back({finite_number(p["lo"], "density lo"), finite_number(p["hi"], "density hi"),
                        finite_number(p["value"], "density value")});
    }
    try {
      m.density = PiecewiseDensityPart(std::move(pieces));
    } catch (const std::invalid_argument& e) {
      throw ValidationError(e.what());
    }
  }
  if (j.contains("cdf")) {
    const auto& c = j.at("cdf");
    only_keys(c, {"builtin", "weight"}, "measure.cdf");
    if (!c.contains("builtin") || !c["builtin"].is_string()) {
      throw ValidationError("measure.cdf.builtin must name a builtin CDF");
    }
    const auto name = c["builtin"].get<std::string>();
    if (name != "cantor") throw ValidationError("unknown builtin CDF '" + name + "'");
    const double w = c.contains("weight") ? finite_number(c["weight"], "cdf weight") : 1.0;
    m.cdf = CdfPart::cantor(w);
  }
  if (j.contains("cantor")) {
    const auto& c = j.at("cantor");
    only_keys(c, {"weight", "level"}, "measure.cantor");
    if (!c.contains("weight")) throw ValidationError("measure.cantor.weight is required");
    m.cantor = CantorPart{finite_number(c["weight"], "cantor weight")};
    if (c.contains("level")) {
      if (!c["level"].is_number_integer()) throw ValidationError("cantor level must be an integer");
      const auto level = c["level"].get<long long>();
      if (level < 0 || level > kCantorLevelCap) {
        throw ValidationError("cantor level must lie in [0, " + std::to_string(kCantorLevelCap) + "]");
      }
      pf.cantor_level = static_cast<int>(level);
    }
  }
  return m;
}

}  // namespace detail

inline ProblemFile parse_problem(const json& j) {
  detail::only_keys(j, {"domain", "boundary_alpha", "measure", "discretization", "solver", "certify"},
                    "problem");
  ProblemFile pf;
  if (!j.contains("domain") || !j["domain"].is_string()) {
    throw ValidationError("domain must be \"line\" or \"halfline\"");
  }
  const auto domain = j["domain"].get<std::string>();
  if (domain == "line") {
    pf.domain = Domain::Line;
  } else if (domain == "halfline") {
    pf.domain = Domain::HalfLine;
  } else {
    throw ValidationError("domain must be \"line\" or \"halfline\"");
  }
  if (j.contains("boundary_alpha")) {
    if (pf.domain != Domain::HalfLine) throw ValidationError("boundary_alpha is only valid for halfline");
    pf.boundary_alpha = detail::finite_number(j["boundary_alpha"], "boundary_alpha");
    if (pf.boundary_alpha < 0.0 || pf.boundary_alpha >= std::numbers::pi) {
      throw ValidationError("boundary_alpha must lie in [0, pi)");
    }
  } else if (pf.domain == Domain::HalfLine) {
    throw ValidationError("halfline problems need boundary_alpha");
  }
  if (!j.contains("measure")) throw ValidationError("measure is required");
  pf.measure = detail::parse_measure(j["measure"], pf);

  if (j.contains("discretization")) {
    const auto& d = j["discretization"];
    detail::only_keys(d, {"K", "N"}, "discretization");
    if (!d.contains("K") || !d.contains("N")) throw ValidationError("discretization needs K and N");
    pf.K = detail::positive_int(d["K"], "discretization.K");
    pf.N = detail::positive_int(d["N"], "discretization.N");
  } else if (!pf.measure.density.empty() || pf.measure.cdf ||
             (pf.measure.cantor && !pf.cantor_level)) {
    throw ValidationError("discretization is required for continuous measures");
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    detail::only_keys(s, {"tol", "grid_points"}, "solver");
    if (s.contains("tol")) {
      pf.tol = detail::finite_number(s["tol"], "solver.tol");
      if (!(pf.tol > 0.0)) throw ValidationError("solver.tol must be positive");
    }
    if (s.contains("grid_points")) {
      pf.grid_points = detail::positive_int(s["grid_points"], "solver.grid_points");
      if (pf.grid_points < 2) throw ValidationError("solver.grid_points must be at least 2");
    }
  }
  if (j.contains("certify")) {
    const auto& c = j["certify"];
    detail::only_keys(c, {"quad_tmax", "quad_points"}, "certify");
    CertifyOptions opts;
    if (c.contains("quad_tmax")) {
      opts.quad_tmax = detail::finite_number(c["quad_tmax"], "certify.quad_tmax");
      if (!(opts.quad_tmax > 0.0)) throw ValidationError("certify.quad_tmax must be positive");
    }
    if (c.contains("quad_points")) {
      opts.quad_points = detail::positive_int(c["quad_points"], "certify.quad_points");
      if (opts.quad_points < 16) throw ValidationError("certify.quad_points must be at least 16");
    }
    pf.certify = opts;
  }
  return pf;
}

inline ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open problem file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
  return parse_problem(j);
}

/// Point measure of the problem: grid discretization of density and CDF parts,
/// Cantor part by its self-similar approximant, atoms passed through.
inline PointMeasure discretize(const ProblemFile& pf) {
  MeasureSpec grid_part = pf.measure;
  grid_part.cantor.reset();
  PointMeasure p;
  try {
    p = discretize_continuous(grid_part, pf.K, pf.N);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  if (pf.measure.cantor) {
    const int level = pf.effective_cantor_level();
    if (level < 0 || level > kCantorLevelCap) {
      throw ValidationError("cantor level " + std::to_string(level) + " outside [0, " +
                            std::to_string(kCantorLevelCap) + "]");
    }
    p = merge(p, cantor_level(level, pf.measure.cantor->weight));
  }
  return p;
}

struct SolveOutcome {
  std::vector<EigenvalueRecord> eigenvalues;
  double runtime_ms = 0.0;
};

inline SolveOutcome solve_points(Domain domain, double alpha, const PointMeasure& p, int grid,
                                 double tol, const ScanOptions& scan) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveOutcome out;
  if (domain == Domain::Line) {
    out.eigenvalues = find_eigenvalues(LineOperator{p}, grid, tol, scan);
  } else {
    HalfLineOperator op = [&] {
      try {
        return HalfLineOperator(alpha, p);
      } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
      }
    }();
    out.eigenvalues = find_eigenvalues_halfline(op, grid, tol, scan);
  }
  out.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline constexpr const char* kResultHeader = "n,lambda,bracket_lo,bracket_hi,residual,runtime_ms\n";

inline void append_rows(std::string& csv, long long n, const SolveOutcome& r, bool timing) {
  for (const auto& e : r.eigenvalues) {
    csv += std::to_string(n) + "," + format_number(e.lambda) + "," + format_number(e.lo) + "," +
           format_number(e.hi) + "," + format_number(e.residual_at_lambda) + "," +
           format_number(timing ? std::round(r.runtime_ms * 1000.0) / 1000.0 : 0.0) + "\n";
  }
}

inline std::string atoms_csv(const PointMeasure& p) {
  std::string csv = "x,weight\n";
  for (const auto& a : p.atoms()) csv += format_number(a.position) + "," + format_number(a.weight) + "\n";
  return csv;
}

struct CommandOptions {
  std::string input;
  std::string input2;  // approx file for certify
  std::string output;
  std::optional<double> tol;
  std::optional<int> grid;
  bool allow_long = false;
  bool timing = true;
  unsigned threads = 0;
  std::string which;              // reproduce: square-well | cantor
  std::vector<long long> n_list;  // reproduce: empty means the default table
};

/// Largest N accepted by reproduce without --allow-long.
inline constexpr long long kLongThreshold = 100000;

inline void write_file(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::fwrite(content.data(), 1, content.size(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write output file '" + path + "'");
  out << content;
}

namespace detail {

inline ScanOptions scan_options(const CommandOptions& o, std::ostream& err) {
  ScanOptions s;
  s.threads = o.threads;
  s.diagnostics = [&err](std::string_view msg) { err << "warning: " << msg << "\n"; };
  return s;
}

/// Runs `body`, mapping exceptions to exit codes with a one-line diagnostic.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const std::domain_error& e) {
    err << "rejected: " << e.what() << "\n";
    return kRejected;
  } catch (const std::exception& e) {
    err << "rejected: " << e.what() << "\n";
    return kRejected;
  }
}

}  // namespace detail

inline int cmd_solve(const CommandOptions& o, std::ostream& err) {
  return detail::guarded(err, [&] {
    const ProblemFile pf = load_problem(o.input);
    const PointMeasure p = discretize(pf);
    const SolveOutcome r = solve_points(pf.domain, pf.boundary_alpha, p, o.grid.value_or(pf.grid_points),
                                        o.tol.value_or(pf.tol), detail::scan_options(o, err));
    std::string csv = kResultHeader;
    append_rows(csv, pf.N, r, o.timing);
    write_file(o.output, csv);
    return int{kOk};
  });
}

inline int cmd_discretize(const CommandOptions& o, std::ostream& err) {
  return detail::guarded(err, [&] {
    const ProblemFile pf = load_problem(o.input);
    write_file(o.output, atoms_csv(discretize(pf)));
    return int{kOk};
  });
}

inline json certificate_json(const Certificate& c) {
  json windows = json::array();
  for (const auto& w : c.windows) {
    windows.push_back({{"E", w.E},
                       {"lo", w.window.lo},
                       {"hi", w.window.hi},
                       {"isolation_lo", w.window.isolation_lo},
                       {"isolation_hi", std::isfinite(w.window.isolation_hi) ? json(w.window.isolation_hi)
                                                                             : json("inf")}});
  }
  return {{"M", c.budget.M},
          {"c", c.budget.c},
          {"s", c.budget.s},
          {"delta", c.budget.delta},
          {"windows", windows},
          {"caveats", c.caveats}};
}

inline int cmd_certify(const CommandOptions& o, std::ostream& err) {
  return detail::guarded(err, [&] {
    const ProblemFile target = load_problem(o.input);
    const ProblemFile approx = load_problem(o.input2);
    if (target.domain != approx.domain) throw ValidationError("target and approx domains differ");
    if (target.domain != Domain::Line) {
      throw ValidationError("certification is available for line problems only");
    }
    const PointMeasure p = discretize(approx);
    const SolveOutcome r = solve_points(approx.domain, approx.boundary_alpha, p,
                                        o.grid.value_or(approx.grid_points), o.tol.value_or(approx.tol),
                                        detail::scan_options(o, err));
    const CertifyOptions opts = target.certify.value_or(approx.certify.value_or(CertifyOptions{}));
    const Certificate cert = certify(target.measure, MeasureSpec::from_point(p), r.eigenvalues, opts);
    write_file(o.output, certificate_json(cert).dump(2) + "\n");
    return int{kOk};
  });
}

inline const std::vector<long long>& default_table(const std::string& which) {
  static const std::vector<long long> square{1, 2, 3, 4, 5, 10, 25, 50, 75, 100, 1000, 10000};
  static const std::vector<long long> cantor{1, 2, 3, 4, 5, 10, 15, 20};
  return which == "cantor" ? cantor : square;
}

/// Built-in problem for a table row: the square well -chi_[-1,1] at grid N,
/// or the Cantor approximant of level N - 1.
inline PointMeasure reproduce_measure(const std::string& which, long long n) {
  if (which == "square-well") {
    MeasureSpec well = MeasureSpec::from_density(PiecewiseDensityPart({{-1.0, 1.0, -1.0}}));
    if (n > 1'000'000'000LL) throw ValidationError("N too large");
    return discretize_continuous(well, 1, static_cast<int>(n));
  }
  if (which == "cantor") {
    if (n < 1 || n - 1 > kCantorLevelCap) {
      throw ValidationError("cantor N must lie in [1, " + std::to_string(kCantorLevelCap + 1) + "]");
    }
    return cantor_level(static_cast<int>(n - 1), -1.0);
  }
  throw ValidationError("unknown table '" + which + "' (expected square-well or cantor)");
}

inline int cmd_reproduce(const CommandOptions& o, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (o.which != "square-well" && o.which != "cantor") {
      throw ValidationError("unknown table '" + o.which + "' (expected square-well or cantor)");
    }
    const auto& ns = o.n_list.empty() ? default_table(o.which) : o.n_list;
    for (long long n : ns) {
      if (n < 1) throw ValidationError("N must be positive");
      if (o.which == "square-well" && n > kLongThreshold && !o.allow_long) {
        throw ValidationError("N = " + std::to_string(n) + " is a long computation; pass --allow-long");
      }
    }
    std::string csv = kResultHeader;
    for (long long n : ns) {
      const PointMeasure p = reproduce_measure(o.which, n);
      const SolveOutcome r = solve_points(Domain::Line, 0.0, p, o.grid.value_or(kDefaultGridPoints),
                                          o.tol.value_or(kDefaultTol), detail::scan_options(o, err));
      append_rows(csv, n, r, o.timing);
    }
    write_file(o.output, csv);
    return int{kOk};
  });
}

}  // namespace deltaspec::cli
