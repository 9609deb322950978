// Fit the dependent mixture to two samples with opposite means and print the
// estimated density of the first sample next to its generating law.

#include <cmath>
#include <cstdio>

#include "furbi/experiments.hpp"

int main() {
  using namespace furbi;
  Rng rng(3);
  const Dataset d = generate_two_sample(rng, -10.0);

  McmcConfig mcmc;
  mcmc.iters = 2000;
  mcmc.burn_in = 1000;
  RunOptions ro;
  const auto grid = linspace(6.0, 14.0, 9);
  ro.grids = {grid, {}};
  const auto out = run_chains(sim_density_config("furbi", mcmc), d, ro);

  const auto est = out.densities[0].mean();
  std::printf("posterior mean rho0: %.3f\n", detail::mean(out.trace("rho_12")));
  std::printf("%6s %10s %10s\n", "x", "estimate", "truth");
  for (std::size_t i = 0; i < grid.size(); ++i)
    std::printf("%6.1f %10.4f %10.4f\n", grid[i], est[i], detail::normal_pdf(grid[i], 10.0, 1.0));
}
