#pragma once

#include <functional>
#include <span>
#include <vector>

namespace burrow {

// Box-constrained objective with a gradient. eval/grad must be finite on the
// box; the minimizer never queries outside it.
struct BoundedObjective {
  std::function<double(std::span<const double>)> eval;
  std::function<std::vector<double>(std::span<const double>)> grad;
  std::vector<double> lo;
  std::vector<double> hi;

  int dim() const { return static_cast<int>(lo.size()); }
  void validate() const;
  std::vector<double> project(std::span<const double> x) const;
};

struct TncConfig {
  int max_outer = 50;
  int max_cg = 0;  // 0 = 2 * dim
  double grad_tol = 1e-6;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 30;
  double hvp_step = 1e-6;
  double curvature_tol = 1e-12;

  void validate() const;
};

struct TncResult {
  std::vector<double> x;
  double f = 0.0;
  int outer_iters = 0;
  bool converged = false;
  std::vector<double> trace;  // f per outer iteration, non-increasing
};

struct LineSearchResult {
  double alpha = 0.0;
  double f = 0.0;
  std::vector<double> x;  // projected accepted point (valid when ok)
  bool ok = false;
};

// Forward-difference Hessian-vector product:
// (grad(x + h v) - grad(x)) / h with h = hvp_step * (1 + ||x||) / max(||v||, 1).
std::vector<double> hvp(const BoundedObjective& obj, std::span<const double> x,
                        std::span<const double> v, const TncConfig& cfg);

// Truncated conjugate-gradient solve for d ~ -H^-1 g. Exits on residual
// reduction, the iteration cap, or non-positive curvature; always returns a
// descent direction (falls back to -g).
std::vector<double> cg_solve(const BoundedObjective& obj, std::span<const double> x,
                             std::span<const double> g, const TncConfig& cfg);

// Backtracking Armijo search along d with projection onto the box.
LineSearchResult line_search(const BoundedObjective& obj, std::span<const double> x,
                             double fx, std::span<const double> g,
                             std::span<const double> d, const TncConfig& cfg);

TncResult minimize(const BoundedObjective& obj, std::span<const double> x0,
                   const TncConfig& cfg);

}  // namespace burrow
