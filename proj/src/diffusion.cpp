#include "dadp/diffusion.hpp"

#include <cmath>

namespace dadp {

namespace {
void check_step(const NoiseSchedule& sched, int t, const char* who) {
    if (!sched.step_in_range(t))
        throw ConfigError(std::string(who) + ": step " + std::to_string(t) +
                               " outside [0, " + std::to_string(sched.T - 1) + "]");
}
void check_shapes(size_t a, size_t b, const char* who) {
    if (a != b)
        throw ShapeError(std::string(who) + ": size mismatch " + std::to_string(a) + " vs " +
                         std::to_string(b));
}
}  // namespace

void q_sample(std::span<const double> x0, int t, std::span<const double> eps,
              const NoiseSchedule& sched, std::span<double> out) {
    check_step(sched, t, "q_sample");
    check_shapes(x0.size(), eps.size(), "q_sample");
    check_shapes(x0.size(), out.size(), "q_sample");
    const double a = std::sqrt(sched.alpha_bar[t]);
    const double b = std::sqrt(1.0 - sched.alpha_bar[t]);
    const long n = long(x0.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) out[i] = a * x0[i] + b * eps[i];
}

void denoise_step_mean(std::span<const double> x_t, int t, std::span<const double> eps_hat,
                       const NoiseSchedule& sched, std::span<double> out) {
    check_step(sched, t, "denoise_step_mean");
    check_shapes(x_t.size(), eps_hat.size(), "denoise_step_mean");
    check_shapes(x_t.size(), out.size(), "denoise_step_mean");
    const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha[t]);
    const double coeff = sched.beta[t] / std::sqrt(1.0 - sched.alpha_bar[t]);
    const long n = long(x_t.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) out[i] = inv_sqrt_alpha * (x_t[i] - coeff * eps_hat[i]);
}

double noise_mse(std::span<const double> eps_hat, std::span<const double> eps) {
    check_shapes(eps_hat.size(), eps.size(), "noise_mse");
    if (eps.empty()) return 0.0;
    const long n = long(eps.size());
    double acc = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : acc)
    for (long i = 0; i < n; ++i) {
        const double d = eps_hat[i] - eps[i];
        acc += d * d;
    }
    return acc / double(n);
}

}  // namespace dadp
