#pragma once
#include <vector>

namespace macap {

// Gauss-Hermite settings for the complex-plane mixture integrals.
// nodes is the per-axis count (the 2-D rule is the tensor product);
// tol > 0 enables a self-check against a coarser rule.
struct IntegrationSpec {
  int nodes = 48;
  double tol = 0.0;
};

struct HermiteRule {
  std::vector<double> x;  // nodes of the physicists' rule, ascending
  std::vector<double> w;  // weights divided by sqrt(pi); sum is exactly 1
};

// Cached per node count. E{g(t)} over t ~ N(0, 1/2) equals sum w_i g(x_i);
// for w ~ CN(0,1), E{g(w)} = sum_ab w_a w_b g(x_a + i x_b).
const HermiteRule& gauss_hermite(int n);

}  // namespace macap
