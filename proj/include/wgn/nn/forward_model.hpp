#pragma once

#include <vector>

#include "wgn/nn/common.hpp"
#include "wgn/nn/graphs.hpp"
#include "wgn/nn/localizer.hpp"

namespace wgn::nn {

/// Candidate coordinate -> non-negative energy deviation per plate-spanning
/// path. Edge-centric residual message passing through node anchors.
class ForwardModel : public torch::nn::Module {
public:
    explicit ForwardModel(const ModelConfig& cfg);

    /// [B, Pf], ordered as the topology's pairs.
    torch::Tensor forward(const ForwardGraph& graph);

private:
    int64_t hidden_;
    Mlp encode_{nullptr};
    torch::nn::Linear node_embed_{nullptr};
    std::vector<Mlp> updates_;
    std::vector<torch::nn::LayerNorm> norms_;
    torch::nn::Linear dec1_{nullptr}, dec2_{nullptr};
};

/// Gradient of each sample's mean squared mismatch between the forward
/// prediction at `candidate` and `observed`, w.r.t. the candidate. Evaluated
/// on a detached copy; builds no graph through the caller's tensors. [B, 2]
torch::Tensor coordinate_gradient(ForwardModel& model, const GraphTopology& topo, const torch::Tensor& candidate,
                                  const torch::Tensor& observed);

}  // namespace wgn::nn
