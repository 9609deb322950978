// Tie and hyper-tie probabilities for each Levy family over a small grid.

#include <cstdio>

#include "furbi/dependence.hpp"

int main() {
  using namespace furbi;
  const auto g0 = bivariate_gaussian(0.0, 1.0, -0.6);
  std::printf("%-22s %6s %5s %8s %8s %10s\n", "family", "theta", "z", "beta", "gamma", "corr_xy");
  for (auto f : {LevyFamily::GammaEqualJumps, LevyFamily::InvGaussEqualJumps, LevyFamily::AdditiveGamma})
    for (double theta : {0.5, 1.0, 5.0})
      for (double z : {0.0, 0.5}) {
        if (f != LevyFamily::AdditiveGamma && z > 0) continue;
        const LevySpec spec{f, theta, z};
        const auto c = corr_observables(spec, g0);
        std::printf("%-22s %6.2f %5.2f %8.4f %8.4f %10.4f\n", to_string(f).c_str(), theta, z, beta_closed(spec),
                    gamma_closed(spec), c.across);
      }
}
