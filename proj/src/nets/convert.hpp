#pragma once

#include <torch/torch.h>

#include "dadp/grid.hpp"

namespace dadp {

inline torch::Tensor image_to_tensor(const Image& img) {
    auto t = torch::from_blob(const_cast<float*>(img.data.data()), {img.h, img.w, img.c},
                              torch::kFloat32)
                 .clone();
    return t.permute({2, 0, 1}).unsqueeze(0).contiguous();  // [1,C,H,W]
}

inline DepthMap tensor_to_depth(const torch::Tensor& pred_1hw) {
    auto t = pred_1hw.detach().to(torch::kFloat64).contiguous();
    if (t.dim() == 4) t = t.squeeze(0);
    if (t.dim() == 3) t = t.squeeze(0);
    if (t.dim() != 2) throw ShapeError("tensor_to_depth: expected [H,W] after squeezing");
    DepthMap d(int(t.size(0)), int(t.size(1)));
    std::memcpy(d.values.data(), t.data_ptr<double>(), sizeof(double) * size_t(t.numel()));
    return d;
}

}  // namespace dadp
