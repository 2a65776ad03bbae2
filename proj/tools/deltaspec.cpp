#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "deltaspec/cli.hpp"

namespace {

unsigned threads_from_env() {
  const char* env = std::getenv("DELTASPEC_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  try {
    const long v = std::stol(env);
    return v < 0 ? 0U : static_cast<unsigned>(v);
  } catch (const std::exception&) {
    std::cerr << "warning: ignoring invalid DELTASPEC_THREADS='" << env << "'\n";
    return 0;
  }
}

std::vector<long long> parse_n_list(const std::string& text) {
  std::vector<long long> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const long long v = std::stoll(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad N value '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace deltaspec::cli;

  CLI::App app{"Negative eigenvalues of -Delta + mu via point-interaction approximation"};
  app.set_version_flag("--version", std::string("deltaspec ") + deltaspec::kVersion);
  app.require_subcommand(1);

  CommandOptions opts;
  opts.threads = threads_from_env();
  double tol = 0.0;
  int grid = 0;
  bool no_timing = false;
  std::string n_text;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-o,--output", opts.output, "Output path (stdout when omitted)");
    sub->add_option("--tol", tol, "Bisection tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--grid", grid, "Lambda grid points")->check(CLI::Range(2, 1 << 30));
    sub->add_flag("--no-timing", no_timing, "Write 0 in the runtime_ms column");
  };

  auto* solve = app.add_subcommand("solve", "Discretize a problem file and compute its eigenvalues");
  solve->add_option("-i,--input", opts.input, "Problem file")->required();
  add_common(solve);

  auto* disc = app.add_subcommand("discretize", "Write the atoms of the discretized measure");
  disc->add_option("-i,--input", opts.input, "Problem file")->required();
  disc->add_option("-o,--output", opts.output, "Output path (stdout when omitted)");

  auto* cert = app.add_subcommand("certify", "Error budget and eigenvalue windows for a target measure");
  cert->add_option("-i,--input", opts.input, "Target problem file")->required();
  cert->add_option("-a,--approx", opts.input2, "Approximating problem file")->required();
  add_common(cert);

  auto* repro = app.add_subcommand("reproduce", "Regenerate a reference eigenvalue table");
  repro->add_option("which", opts.which, "square-well or cantor")->required();
  repro->add_option("-n,--n", n_text, "Comma separated N values");
  repro->add_flag("--allow-long", opts.allow_long, "Permit N above 100000");
  add_common(repro);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(kInvalidInput);
  }

  if (tol > 0.0) opts.tol = tol;
  if (grid > 0) opts.grid = grid;
  opts.timing = !no_timing;
  if (!n_text.empty()) {
    try {
      opts.n_list = parse_n_list(n_text);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kInvalidInput;
    }
  }

  if (*solve) return cmd_solve(opts, std::cerr);
  if (*disc) return cmd_discretize(opts, std::cerr);
  if (*cert) return cmd_certify(opts, std::cerr);
  return cmd_reproduce(opts, std::cerr);
}
