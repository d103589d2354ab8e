#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace perclim {

struct PowerIterationResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Largest |eigenvalue| of a symmetric operator given by its matvec, estimated
// from the L2 growth factor of the iterates. The growth-factor estimate also
// converges when the spectrum contains +/- pairs of equal modulus (bipartite
// kernels), where the iterate itself oscillates.
//
// Start vector: all ones with coordinate 0 perturbed by 1e-3, so the start is
// never orthogonal to the leading eigenspace of a nonnegative matrix.
template <class MatVec>
PowerIterationResult power_iteration(std::size_t n, MatVec&& matvec, double rel_tol,
                                     int max_iter) {
  std::vector<double> x(n, 1.0), y(n, 0.0);
  if (n == 0) return {0.0, 0, true};
  x[0] += 1e-3;
  double norm = 0.0;
  for (double v : x) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : x) v /= norm;

  double sigma_prev = -1.0;
  for (int it = 1; it <= max_iter; ++it) {
    matvec(x.data(), y.data());
    double sigma = 0.0;
    for (double v : y) sigma += v * v;
    sigma = std::sqrt(sigma);
    if (sigma == 0.0) return {0.0, it, true};
    if (sigma_prev >= 0.0 && std::abs(sigma - sigma_prev) <= rel_tol * sigma) {
      return {sigma, it, true};
    }
    sigma_prev = sigma;
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / sigma;
  }
  return {sigma_prev, max_iter, false};
}

}  // namespace perclim
