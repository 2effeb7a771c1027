#pragma once

#include <span>

#include "dadp/grid.hpp"
#include "dadp/schedule.hpp"

namespace dadp {

/// x_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps, elementwise.
/// The caller owns the noise draw; nothing here is random.
void q_sample(std::span<const double> x0, int t, std::span<const double> eps,
              const NoiseSchedule& sched, std::span<double> out);

/// Posterior mean mu = (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps_hat) / sqrt(alpha_t).
/// Adding the sigma_t * z term (sigma_t^2 = beta_t, suppressed at t = 0) is the
/// caller's business.
void denoise_step_mean(std::span<const double> x_t, int t, std::span<const double> eps_hat,
                       const NoiseSchedule& sched, std::span<double> out);

/// Mean squared elementwise difference.
double noise_mse(std::span<const double> eps_hat, std::span<const double> eps);

}  // namespace dadp
