#pragma once

#include <vector>

#include "wgn/nn/layers.hpp"
#include "wgn/nn/localizer.hpp"

namespace wgn::nn {

struct EdgeEncoding {
    torch::Tensor states;     // [B, 2P, d]
    torch::Tensor attention;  // [B, P, K], one row per path
    torch::Tensor context;    // [B, P, d]
};

/// Frequency-bin attention edge encoder, node init, masked multi-head
/// attention stack, max pool, linear-output regression head.
class InverseModel : public Localizer {
public:
    InverseModel(const ModelConfig& cfg, int64_t bins);

    EdgeEncoding encode_edges(const InverseGraph& graph);
    torch::Tensor init_nodes(const InverseGraph& graph, const torch::Tensor& edge_states);
    torch::Tensor forward(const InverseGraph& graph) override;

    int64_t hidden() const noexcept { return hidden_; }

private:
    int64_t hidden_;
    double dropout_;
    torch::nn::Linear feat_{nullptr}, score_in_{nullptr}, score_out_{nullptr};
    Mlp encode_{nullptr};
    NodeInit node_init_{nullptr};
    std::vector<GatLayer> gat_;
    std::vector<torch::nn::LayerNorm> norms_;
    Mlp head_{nullptr};
};

}  // namespace wgn::nn
