// Eigenvalue of the square well -chi_[-1,1] from successively finer point
// approximations, with the certified enclosure for each.
#include <cstdio>
#include <stdexcept>

#include "deltaspec/deltaspec.hpp"

int main() {
  using namespace deltaspec;
  const MeasureSpec well = MeasureSpec::from_density(PiecewiseDensityPart({{-1.0, 1.0, -1.0}}));
  for (int n : {10, 100, 1000}) {
    const PointMeasure approx = discretize_continuous(well, 1, n);
    const auto eigs = find_eigenvalues(LineOperator{approx});
    Certificate cert;
    try {
      cert = certify(well, MeasureSpec::from_point(approx), eigs);
    } catch (const std::domain_error& e) {
      // coarse grids are too far from the well for the window theorem
      std::printf("N=%5d  lambda=% .15f  no window: %s\n", n, eigs.at(0).lambda, e.what());
      continue;
    }
    for (const auto& w : cert.windows) {
      std::printf("N=%5d  lambda=% .15f  s=%.3e  window=[% .6f, % .6f]\n", n, w.E, cert.budget.s,
                  w.window.lo, w.window.hi);
    }
  }
}
