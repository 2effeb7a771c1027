#pragma once

#include <torch/torch.h>

#include <vector>

#include "dadp/losses.hpp"

namespace dadp {

struct LossBatchItem {
    const DepthMap* gt = nullptr;
    const ObjectMaskSet* objects = nullptr;
};

/// Batch-mean total loss as a differentiable scalar. Values and gradients come
/// from the 64-bit loss kernels; the gradient enters autograd through a
/// straight-through surrogate so d(out)/d(pred) equals the analytic gradient.
torch::Tensor batch_total_loss(const torch::Tensor& pred, const std::vector<LossBatchItem>& items,
                               const LossConfig& cfg, LossBreakdown* accumulated = nullptr);

}  // namespace dadp
