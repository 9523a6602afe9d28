#pragma once

// Relative least squares, J = sum ((y - f) / f)^2, minimized by Nelder-Mead.
// Relative residuals weigh the tail of a power law as much as its head.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "lmf/error.hpp"

namespace lmf {

struct SimplexOptions {
  double rel_tolerance = 1e-10;
  double abs_tolerance = 1e-26;
  int max_iterations = 10000;
  /// Initial simplex edge per coordinate (relative to |x| or absolute if x == 0).
  double initial_step = 0.1;
};

template <std::size_t Dim>
struct SimplexResult {
  std::array<double, Dim> x{};
  double cost = 0;
  int iterations = 0;
  bool converged = false;
};

/// Nelder-Mead with the standard coefficients (1, 2, 1/2, 1/2). Stops when
/// the spread of costs over the simplex drops below rel_tolerance relative
/// to the best cost, or the cost is exactly zero.
template <std::size_t Dim, typename Cost>
SimplexResult<Dim> nelder_mead(Cost&& cost, std::array<double, Dim> start,
                               const SimplexOptions& opt = {}) {
  using Point = std::array<double, Dim>;
  std::array<Point, Dim + 1> p;
  std::array<double, Dim + 1> f;
  p[0] = start;
  for (std::size_t i = 0; i < Dim; ++i) {
    p[i + 1] = start;
    double h = start[i] != 0 ? opt.initial_step * std::abs(start[i]) : opt.initial_step;
    p[i + 1][i] += h;
  }
  auto eval = [&](const Point& x) {
    double v = cost(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  for (std::size_t i = 0; i <= Dim; ++i) f[i] = eval(p[i]);

  SimplexResult<Dim> res;
  std::array<std::size_t, Dim + 1> idx;
  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it;
    for (std::size_t i = 0; i <= Dim; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return f[a] < f[b]; });
    const double best = f[idx[0]], worst = f[idx[Dim]];
    if (best == 0.0 ||
        (std::isfinite(worst) && worst - best <= opt.rel_tolerance * std::abs(best) + opt.abs_tolerance)) {
      res.converged = true;
      break;
    }
    Point centroid{};
    for (std::size_t k = 0; k < Dim; ++k)
      for (std::size_t d = 0; d < Dim; ++d) centroid[d] += p[idx[k]][d] / Dim;
    auto along = [&](double t) {
      Point q;
      for (std::size_t d = 0; d < Dim; ++d) q[d] = centroid[d] + t * (p[idx[Dim]][d] - centroid[d]);
      return q;
    };
    Point xr = along(-1.0);
    double fr = eval(xr);
    if (fr < best) {
      Point xe = along(-2.0);
      double fe = eval(xe);
      if (fe < fr) {
        p[idx[Dim]] = xe, f[idx[Dim]] = fe;
      } else {
        p[idx[Dim]] = xr, f[idx[Dim]] = fr;
      }
    } else if (fr < f[idx[Dim - 1]]) {
      p[idx[Dim]] = xr, f[idx[Dim]] = fr;
    } else {
      bool outside = fr < worst;
      Point xc = along(outside ? -0.5 : 0.5);
      double fc = eval(xc);
      if (fc < (outside ? fr : worst)) {
        p[idx[Dim]] = xc, f[idx[Dim]] = fc;
      } else {
        for (std::size_t k = 1; k <= Dim; ++k) {
          for (std::size_t d = 0; d < Dim; ++d)
            p[idx[k]][d] = p[idx[0]][d] + 0.5 * (p[idx[k]][d] - p[idx[0]][d]);
          f[idx[k]] = eval(p[idx[k]]);
        }
      }
    }
    res.iterations = it + 1;
  }
  auto b = std::min_element(f.begin(), f.end()) - f.begin();
  res.x = p[static_cast<std::size_t>(b)];
  res.cost = f[static_cast<std::size_t>(b)];
  return res;
}

struct PowerLawFit {
  double exponent = 0;  // y ~ scale * x^(-exponent)
  double scale = 0;
  double cost = 0;      // J_RLS at the optimum
  std::size_t n_points = 0;
  std::size_t n_dropped = 0;  // non-positive y excluded from the fit
  int iterations = 0;
};

/// Ordinary least squares of ln y on ln x (positive points only).
inline PowerLawFit loglog_ols(std::span<const double> x, std::span<const double> y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0, dropped = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0) || !(x[i] > 0)) {
      ++dropped;
      continue;
    }
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    ++n;
  }
  if (n < 2) throw FitError("loglog_ols: fewer than two positive points");
  const double nd = static_cast<double>(n);
  const double den = nd * sxx - sx * sx;
  if (den == 0) throw FitError("loglog_ols: degenerate abscissae");
  double slope = (nd * sxy - sx * sy) / den;
  double intercept = (sy - slope * sx) / nd;
  PowerLawFit fit;
  fit.exponent = -slope;
  fit.scale = std::exp(intercept);
  fit.n_points = n;
  fit.n_dropped = dropped;
  return fit;
}

/// Fits y = A x^(-gamma) by relative least squares over the points whose
/// x lies in [lower, upper]. Non-positive y are excluded (J is undefined
/// there) and counted. Starts from the log-space OLS solution.
inline PowerLawFit rls_powerlaw_fit(std::span<const double> x, std::span<const double> y,
                                    double lower = -std::numeric_limits<double>::infinity(),
                                    double upper = std::numeric_limits<double>::infinity(),
                                    const SimplexOptions& options = {}) {
  if (x.size() != y.size()) throw ParameterError("rls_powerlaw_fit: x and y differ in length");
  std::vector<double> lx, yy;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lower || x[i] > upper) continue;
    if (!(y[i] > 0) || !(x[i] > 0)) {
      ++dropped;
      continue;
    }
    lx.push_back(std::log(x[i]));
    yy.push_back(y[i]);
  }
  if (yy.size() < 5) throw FitError("rls_powerlaw_fit: fewer than 5 positive points in window");

  std::vector<double> xs(lx.size());
  std::transform(lx.begin(), lx.end(), xs.begin(), [](double v) { return std::exp(v); });
  auto init = loglog_ols(xs, yy);

  // parameters: (ln A, gamma)
  auto cost = [&](const std::array<double, 2>& p) {
    double j = 0;
    for (std::size_t i = 0; i < yy.size(); ++i) {
      double f = std::exp(p[0] - p[1] * lx[i]);
      double r = (yy[i] - f) / f;
      j += r * r;
    }
    return j;
  };
  std::array<double, 2> start{std::log(init.scale), init.exponent};
  auto res = nelder_mead<2>(cost, start, options);
  // one restart from the optimum shakes off a collapsed simplex
  if (res.converged && res.cost > 0) {
    auto again = nelder_mead<2>(cost, res.x, options);
    again.iterations += res.iterations;
    if (again.converged && again.cost <= res.cost) res = again;
  }
  if (!res.converged) throw FitError("rls_powerlaw_fit: simplex did not converge");

  PowerLawFit fit;
  fit.scale = std::exp(res.x[0]);
  fit.exponent = res.x[1];
  fit.cost = res.cost;
  fit.n_points = yy.size();
  fit.n_dropped = dropped;
  fit.iterations = res.iterations;
  return fit;
}

}  // namespace lmf
