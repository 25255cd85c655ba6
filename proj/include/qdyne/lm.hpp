#pragma once

#include <array>
#include <span>
#include <vector>

namespace qdyne {

// Lorentzian-plus-constant model y = A / (1 + 4 (x-c)^2 / w^2) + b with
// parameters (A, c, w, b).  Shared by spectrum peak fits (A > 0) and sweep
// dip fits (A < 0).
struct LorentzParams {
  double amplitude = 0.0;
  double center = 0.0;
  double fwhm = 0.0;
  double floor_level = 0.0;
};

double lorentz_eval(const LorentzParams& p, double x);

struct LorentzFitResult {
  LorentzParams params;
  std::array<double, 4> stderrs{};  // 1-sigma, from the linearized covariance
  bool converged = false;
  int iterations = 0;
  double weighted_ssr = 0.0;
  std::size_t n_points = 0;
};

// Damped least squares with analytic Jacobian.  weights are 1/sigma_i^2
// multipliers on the squared residuals; pass empty for unweighted.
LorentzFitResult fit_lorentzian(std::span<const double> xs, std::span<const double> ys,
                                std::span<const double> weights,
                                const LorentzParams& init, int max_iterations = 200);

}  // namespace qdyne
