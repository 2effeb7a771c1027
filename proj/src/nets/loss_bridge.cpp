#include "nets/loss_bridge.hpp"

#include <cstring>

namespace dadp {

torch::Tensor batch_total_loss(const torch::Tensor& pred, const std::vector<LossBatchItem>& items,
                               const LossConfig& cfg, LossBreakdown* accumulated) {
    if (pred.dim() != 4 || pred.size(1) != 1)
        throw ShapeError("batch_total_loss: expected [B,1,H,W] prediction");
    if (size_t(pred.size(0)) != items.size())
        throw ShapeError("batch_total_loss: batch size mismatch");
    const int B = int(pred.size(0));
    const int H = int(pred.size(2)), W = int(pred.size(3));

    auto pred_cpu = pred.detach().to(torch::kFloat64).contiguous();
    const double* pdata = pred_cpu.data_ptr<double>();

    auto grad = torch::zeros({B, 1, H, W}, torch::kFloat64);
    double* gdata = grad.data_ptr<double>();
    double total = 0.0;
    LossBreakdown acc;
    const size_t plane = size_t(H) * W;
    for (int b = 0; b < B; ++b) {
        DepthMap dm(H, W);
        std::memcpy(dm.values.data(), pdata + size_t(b) * plane, sizeof(double) * plane);
        const TotalLossResult r =
            total_loss(dm, *items[size_t(b)].gt, *items[size_t(b)].objects, cfg, true);
        total += r.breakdown.total;
        for (size_t i = 0; i < plane; ++i)
            gdata[size_t(b) * plane + i] =
                r.grad_affinity[i] + cfg.lambda * r.grad_integrality[i];
        acc.affinity += r.breakdown.affinity;
        acc.integrality += r.breakdown.integrality;
        acc.total += r.breakdown.total;
        acc.abnormal_pixels += r.breakdown.abnormal_pixels;
        acc.bound_swaps += r.breakdown.bound_swaps;
        acc.pred_degenerate = acc.pred_degenerate || r.breakdown.pred_degenerate;
        acc.gt_degenerate = acc.gt_degenerate || r.breakdown.gt_degenerate;
        acc.valid_pixels += r.breakdown.valid_pixels;
    }
    const double inv_b = 1.0 / double(B);
    acc.affinity *= inv_b;
    acc.integrality *= inv_b;
    acc.total *= inv_b;
    if (accumulated) *accumulated = acc;

    auto g = (grad * inv_b).to(pred.dtype());
    auto surrogate = (pred * g).sum();
    return surrogate - surrogate.detach() + torch::scalar_tensor(total * inv_b, pred.dtype());
}

}  // namespace dadp
