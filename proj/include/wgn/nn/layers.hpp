#pragma once

#include <torch/torch.h>

#include "wgn/nn/common.hpp"
#include "wgn/nn/graphs.hpp"

namespace wgn::nn {

/// Dense masked multi-head attention over node states. Node i attends to
/// every j with adjacency[i][j] set; heads are concatenated.
class GatLayerImpl : public torch::nn::Module {
public:
    GatLayerImpl(int64_t in, int64_t out, int64_t heads, double dropout);
    /// x: [B, N, in] -> [B, N, out]. `adjacency` is [N, N] bool.
    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& adjacency);

    int64_t heads() const noexcept { return heads_; }

private:
    int64_t heads_, head_dim_;
    double dropout_;
    torch::nn::Linear proj_{nullptr};
    torch::Tensor att_src_, att_dst_, bias_;
};
TORCH_MODULE(GatLayer);

/// x_i = phi_node([embed(r_i), mean of incoming edge embeddings]); a node
/// with no incoming edge aggregates to zero.
class NodeInitImpl : public torch::nn::Module {
public:
    explicit NodeInitImpl(int64_t hidden);
    /// edge_states: [B, 2P, d] -> [B, N, d]
    torch::Tensor forward(const GraphTopology& topo, const torch::Tensor& edge_states);

    /// The aggregation alone: [B, N, d].
    static torch::Tensor aggregate(const GraphTopology& topo, const torch::Tensor& edge_states);

private:
    torch::nn::Linear embed_{nullptr};
    Mlp combine_{nullptr};
};
TORCH_MODULE(NodeInit);

/// Spectral block [B, E, 2K] -> per-bin tokens [B, E, K, 2] of (amplitude, phase).
torch::Tensor bin_tokens(const torch::Tensor& spectral);

}  // namespace wgn::nn
