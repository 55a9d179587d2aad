#include "burrow/tnc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace burrow {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::runtime_error(std::string("tnc: non-finite ") + what);
}

// coordinates pinned at a bound with the gradient pushing outward
std::vector<bool> active_set(std::span<const double> x, std::span<const double> g,
                             const BoundedObjective& obj) {
  constexpr double kEdge = 1e-12;
  std::vector<bool> active(x.size(), false);
  for (std::size_t i = 0; i < x.size(); ++i) {
    bool at_lo = x[i] <= obj.lo[i] + kEdge * (1.0 + std::abs(obj.lo[i]));
    bool at_hi = x[i] >= obj.hi[i] - kEdge * (1.0 + std::abs(obj.hi[i]));
    active[i] = (at_lo && g[i] > 0) || (at_hi && g[i] < 0);
  }
  return active;
}

void mask(std::vector<double>& v, const std::vector<bool>& active) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (active[i]) v[i] = 0.0;
}

}  // namespace

void BoundedObjective::validate() const {
  if (!eval || !grad) throw std::invalid_argument("BoundedObjective: eval and grad required");
  if (lo.size() != hi.size() || lo.empty())
    throw std::invalid_argument("BoundedObjective: bad bounds");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!(lo[i] <= hi[i])) throw std::invalid_argument("BoundedObjective: lo > hi");
}

std::vector<double> BoundedObjective::project(std::span<const double> x) const {
  std::vector<double> p(x.begin(), x.end());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::clamp(p[i], lo[i], hi[i]);
  return p;
}

void TncConfig::validate() const {
  if (max_outer < 1 || max_backtracks < 1)
    throw std::invalid_argument("TncConfig: iteration caps must be >= 1");
  if (max_cg < 0) throw std::invalid_argument("TncConfig: max_cg must be >= 0");
  if (!(grad_tol > 0) || !(armijo_c1 > 0) || !(hvp_step > 0) || !(curvature_tol > 0))
    throw std::invalid_argument("TncConfig: tolerances must be > 0");
  if (!(backtrack > 0) || !(backtrack < 1))
    throw std::invalid_argument("TncConfig: backtrack must be in (0,1)");
}

std::vector<double> hvp(const BoundedObjective& obj, std::span<const double> x,
                        std::span<const double> v, const TncConfig& cfg) {
  std::vector<double> g0 = obj.grad(x);
  check_finite(g0, "gradient");
  double vnorm = norm(v);
  if (vnorm == 0.0) return std::vector<double>(x.size(), 0.0);
  double h = cfg.hvp_step * (1.0 + norm(x)) / std::max(vnorm, 1.0);
  std::vector<double> xp(x.begin(), x.end());
  for (std::size_t i = 0; i < xp.size(); ++i) xp[i] += h * v[i];
  std::vector<double> g1 = obj.grad(xp);
  check_finite(g1, "gradient");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (g1[i] - g0[i]) / h;
  return out;
}

namespace {

// hvp with the base gradient already known; avoids one grad() per CG iteration
std::vector<double> hvp_cached(const BoundedObjective& obj, std::span<const double> x,
                               std::span<const double> g0, std::span<const double> v,
                               const TncConfig& cfg) {
  double vnorm = norm(v);
  if (vnorm == 0.0) return std::vector<double>(x.size(), 0.0);
  double h = cfg.hvp_step * (1.0 + norm(x)) / std::max(vnorm, 1.0);
  std::vector<double> xp(x.begin(), x.end());
  for (std::size_t i = 0; i < xp.size(); ++i) xp[i] += h * v[i];
  std::vector<double> g1 = obj.grad(xp);
  check_finite(g1, "gradient");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (g1[i] - g0[i]) / h;
  return out;
}

std::vector<double> cg_core(const BoundedObjective& obj, std::span<const double> x,
                            std::span<const double> g, const TncConfig& cfg,
                            const std::vector<bool>* active) {
  const int n = static_cast<int>(x.size());
  const int cap = cfg.max_cg > 0 ? cfg.max_cg : 2 * n;
  const double gnorm = norm(g);
  std::vector<double> d(n, 0.0);
  if (gnorm == 0.0 || cap == 0) return d;

  // tight residual target: with a full budget CG solves the Newton system to
  // machine precision on well-conditioned problems (dimension is small here)
  const double rtol = std::max(1e-12, 1e-8 * gnorm);

  std::vector<double> r(g.begin(), g.end());  // residual of H d = -g, r = -g - H d
  for (double& ri : r) ri = -ri;
  std::vector<double> p = r;
  double rr = dot(r, r);
  for (int it = 0; it < cap; ++it) {
    std::vector<double> q = hvp_cached(obj, x, g, p, cfg);
    if (active) mask(q, *active);
    double curvature = dot(p, q);
    if (curvature <= cfg.curvature_tol) {
      if (it == 0) {
        for (int i = 0; i < n; ++i) d[i] = -g[i];
      }
      break;  // non-positive curvature: keep the last iterate
    }
    double alpha = rr / curvature;
    for (int i = 0; i < n; ++i) {
      d[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    double rr_next = dot(r, r);
    if (std::sqrt(rr_next) <= rtol) break;
    double beta = rr_next / rr;
    rr = rr_next;
    for (int i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  if (dot(d, g) >= 0.0) {
    for (int i = 0; i < n; ++i) d[i] = -g[i];  // descent fallback
  }
  return d;
}

}  // namespace

std::vector<double> cg_solve(const BoundedObjective& obj, std::span<const double> x,
                             std::span<const double> g, const TncConfig& cfg) {
  return cg_core(obj, x, g, cfg, nullptr);
}

LineSearchResult line_search(const BoundedObjective& obj, std::span<const double> x,
                             double fx, std::span<const double> g, std::span<const double> d,
                             const TncConfig& cfg) {
  const double slope = dot(g, d);
  LineSearchResult res;
  double alpha = 1.0;
  for (int i = 0; i < cfg.max_backtracks; ++i) {
    std::vector<double> xt(x.begin(), x.end());
    for (std::size_t j = 0; j < xt.size(); ++j) xt[j] += alpha * d[j];
    xt = obj.project(xt);
    double ft = obj.eval(xt);
    if (!std::isfinite(ft)) throw std::runtime_error("tnc: non-finite objective in line search");
    if (ft <= fx + cfg.armijo_c1 * alpha * slope) {
      res.alpha = alpha;
      res.f = ft;
      res.x = std::move(xt);
      res.ok = true;
      return res;
    }
    alpha *= cfg.backtrack;
  }
  return res;  // alpha = 0, exhausted
}

TncResult minimize(const BoundedObjective& obj, std::span<const double> x0,
                   const TncConfig& cfg) {
  obj.validate();
  cfg.validate();
  if (x0.size() != obj.lo.size()) throw std::invalid_argument("minimize: dim mismatch");

  TncResult res;
  res.x = obj.project(x0);
  res.f = obj.eval(res.x);
  if (!std::isfinite(res.f)) throw std::runtime_error("tnc: non-finite objective at start");
  res.trace.push_back(res.f);

  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    std::vector<double> g = obj.grad(res.x);
    check_finite(g, "gradient");
    std::vector<bool> active = active_set(res.x, g, obj);
    std::vector<double> gm = g;
    mask(gm, active);
    if (norm(gm) < cfg.grad_tol) {
      res.converged = true;
      return res;
    }
    std::vector<double> d = cg_core(obj, res.x, gm, cfg, &active);
    LineSearchResult ls = line_search(obj, res.x, res.f, gm, d, cfg);
    if (!ls.ok) return res;  // no acceptable step; not converged
    res.x = std::move(ls.x);
    res.f = ls.f;
    res.trace.push_back(res.f);
    res.outer_iters = outer + 1;
  }
  return res;
}

}  // namespace burrow
