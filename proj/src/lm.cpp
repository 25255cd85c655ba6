#include "qdyne/lm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qdyne/errors.hpp"

namespace qdyne {

namespace {

using Mat4 = std::array<std::array<double, 4>, 4>;
using Vec4 = std::array<double, 4>;

// partial-pivot Gaussian elimination; returns false when singular
bool solve4(Mat4 a, Vec4 rhs, Vec4& out) {
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int row = col + 1; row < 4; ++row)
      if (std::abs(a[row][col]) > std::abs(a[pivot][col])) pivot = row;
    if (std::abs(a[pivot][col]) < 1e-300) return false;
    std::swap(a[col], a[pivot]);
    std::swap(rhs[col], rhs[pivot]);
    for (int row = col + 1; row < 4; ++row) {
      const double factor = a[row][col] / a[col][col];
      for (int k = col; k < 4; ++k) a[row][k] -= factor * a[col][k];
      rhs[row] -= factor * rhs[col];
    }
  }
  for (int row = 3; row >= 0; --row) {
    double sum = rhs[row];
    for (int k = row + 1; k < 4; ++k) sum -= a[row][k] * out[k];
    out[row] = sum / a[row][row];
  }
  return true;
}

// inverse via elimination against the identity; false when singular
bool invert4(const Mat4& m, Mat4& inv) {
  for (int col = 0; col < 4; ++col) {
    Vec4 e{};
    e[col] = 1.0;
    Vec4 x{};
    if (!solve4(m, e, x)) return false;
    for (int row = 0; row < 4; ++row) inv[row][col] = x[row];
  }
  return true;
}

double weighted_ssr(std::span<const double> xs, std::span<const double> ys,
                    std::span<const double> weights, const LorentzParams& p) {
  double ssr = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - lorentz_eval(p, xs[i]);
    const double w = weights.empty() ? 1.0 : weights[i];
    ssr += w * r * r;
  }
  return ssr;
}

void jacobian_row(const LorentzParams& p, double x, Vec4& row) {
  const double u = 2.0 * (x - p.center) / p.fwhm;
  const double l = 1.0 / (1.0 + u * u);
  row[0] = l;                                                        // d/dA
  row[1] = p.amplitude * l * l * 8.0 * (x - p.center) / (p.fwhm * p.fwhm);  // d/dc
  row[2] = p.amplitude * l * l * 2.0 * u * u / p.fwhm;               // d/dw
  row[3] = 1.0;                                                      // d/db
}

}  // namespace

double lorentz_eval(const LorentzParams& p, double x) {
  const double u = 2.0 * (x - p.center) / p.fwhm;
  return p.amplitude / (1.0 + u * u) + p.floor_level;
}

LorentzFitResult fit_lorentzian(std::span<const double> xs, std::span<const double> ys,
                                std::span<const double> weights,
                                const LorentzParams& init, int max_iterations) {
  const std::size_t n = xs.size();
  if (n < 5 || ys.size() != n || (!weights.empty() && weights.size() != n))
    throw ConfigError("lorentzian fit needs >= 5 points and consistent arrays");
  if (!(init.fwhm > 0.0)) throw ConfigError("lorentzian fit initial width must be > 0");

  LorentzParams p = init;
  double lambda = 1e-3;
  double ssr = weighted_ssr(xs, ys, weights, p);
  bool converged = false;
  int iter = 0;

  for (; iter < max_iterations; ++iter) {
    Mat4 jtj{};
    Vec4 jtr{};
    Vec4 row{};
    for (std::size_t i = 0; i < n; ++i) {
      jacobian_row(p, xs[i], row);
      const double r = ys[i] - lorentz_eval(p, xs[i]);
      const double w = weights.empty() ? 1.0 : weights[i];
      for (int a = 0; a < 4; ++a) {
        jtr[a] += w * row[a] * r;
        for (int b = a; b < 4; ++b) jtj[a][b] += w * row[a] * row[b];
      }
    }
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < a; ++b) jtj[a][b] = jtj[b][a];

    bool stepped = false;
    for (int attempt = 0; attempt < 32 && !stepped; ++attempt) {
      Mat4 damped = jtj;
      for (int a = 0; a < 4; ++a) damped[a][a] *= 1.0 + lambda;
      Vec4 delta{};
      if (!solve4(damped, jtr, delta)) {
        lambda *= 10.0;
        continue;
      }
      LorentzParams trial = p;
      trial.amplitude += delta[0];
      trial.center += delta[1];
      trial.fwhm += delta[2];
      trial.floor_level += delta[3];
      trial.fwhm = std::abs(trial.fwhm);
      if (!(trial.fwhm > 0.0) || !std::isfinite(trial.fwhm) ||
          !std::isfinite(trial.amplitude) || !std::isfinite(trial.center) ||
          !std::isfinite(trial.floor_level)) {
        lambda *= 10.0;
        continue;
      }
      const double trial_ssr = weighted_ssr(xs, ys, weights, trial);
      if (trial_ssr <= ssr) {
        const double scale = std::max({std::abs(p.amplitude), std::abs(p.floor_level),
                                       std::abs(p.fwhm), 1e-300});
        const double step = std::max({std::abs(delta[0]) / scale,
                                      std::abs(delta[1]) / p.fwhm,
                                      std::abs(delta[2]) / p.fwhm});
        const double improvement = (ssr - trial_ssr) / std::max(ssr, 1e-300);
        p = trial;
        ssr = trial_ssr;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        if (step < 1e-10 || improvement < 1e-13) {
          converged = true;
        }
      } else {
        lambda *= 10.0;
      }
    }
    if (!stepped) {
      // no downhill step found at any damping: treat the current point as the
      // optimum if the gradient is already negligible
      double grad = 0.0;
      for (int a = 0; a < 4; ++a) grad = std::max(grad, std::abs(jtr[a]));
      converged = grad <= 1e-8 * std::max(ssr, 1e-300) || ssr == 0.0;
      break;
    }
    if (converged) break;
  }

  LorentzFitResult result;
  result.params = p;
  result.converged = converged;
  result.iterations = iter + 1;
  result.weighted_ssr = ssr;
  result.n_points = n;

  // linearized covariance sigma^2 (J^T W J)^-1 with sigma^2 = ssr/(n-4)
  Mat4 jtj{};
  Vec4 row{};
  for (std::size_t i = 0; i < n; ++i) {
    jacobian_row(p, xs[i], row);
    const double w = weights.empty() ? 1.0 : weights[i];
    for (int a = 0; a < 4; ++a)
      for (int b = a; b < 4; ++b) jtj[a][b] += w * row[a] * row[b];
  }
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < a; ++b) jtj[a][b] = jtj[b][a];
  Mat4 cov{};
  if (n > 4 && invert4(jtj, cov)) {
    const double variance = ssr / static_cast<double>(n - 4);
    for (int a = 0; a < 4; ++a) {
      const double v = cov[a][a] * variance;
      result.stderrs[a] = v > 0.0 ? std::sqrt(v) : 0.0;
    }
  } else {
    result.stderrs.fill(std::numeric_limits<double>::quiet_NaN());
  }
  return result;
}

}  // namespace qdyne
