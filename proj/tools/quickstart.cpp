// Mix three latent AR(1) series, unmix them again and score the estimate.

#include <iostream>

#include "cbss/genproc.hpp"
#include "cbss/metrics.hpp"
#include "cbss/unmixer.hpp"

int main() {
  using namespace cbss;
  std::vector<LatentComponentSpec> parts;
  for (int half = 0; half < 2; ++half)
    for (double phi : {0.9, 0.5, 0.1}) parts.push_back({Driver::ar1(phi), Transform::identity(), {}});

  ModelSpec model = ModelSpec::trivial(parts);
  model.mixing = CMat{{1.0, Complex(0.4, 0.2), 0.3}, {Complex(0, -0.5), 1.0, 0.2}, {0.1, Complex(0.3, 0.3), 1.0}};
  model.location = {Complex(1, -1), 2.0, Complex(0, 3)};

  for (std::size_t T : {1024u, 4096u, 16384u}) {
    const Generated g = generate(model, T, 42);
    const UnmixingResult r = unmix(g.x, 1);
    std::cout << "T=" << T << "  MD=" << md_index(r.gamma, model.mixing) << "  lambdas:";
    for (double l : r.lambdas) std::cout << ' ' << l;
    std::cout << '\n';
  }
  // where the estimates are heading
  const PopulationSolution pop = population_solution(model, 1);
  std::cout << "population lambdas:";
  for (double l : pop.lambdas) std::cout << ' ' << l;
  std::cout << '\n';
}
