#pragma once

#include <span>

#include "dadp/grid.hpp"
#include "dadp/losses.hpp"
#include "dadp/metrics.hpp"
#include "dadp/schedule.hpp"

// Serial reference implementations, written independently of the OpenMP
// kernels (sort-based medians, naive per-pixel passes). Kept for tests and
// the kernel benchmark; never called from the production path.
namespace dadp::ref {

void q_sample(std::span<const double> x0, int t, std::span<const double> eps,
              const NoiseSchedule& sched, std::span<double> out);

double noise_mse(std::span<const double> eps_hat, std::span<const double> eps);

MetricsReport compute_metrics(const DepthMap& pred, const DepthMap& gt, AlignmentMode mode);

double affinity_loss(const DepthMap& pred, const DepthMap& gt);

/// Same contract as dadp::total_loss without gradients.
LossBreakdown total_loss(const DepthMap& pred, const DepthMap& gt, const ObjectMaskSet& objects,
                         const LossConfig& cfg);

}  // namespace dadp::ref
