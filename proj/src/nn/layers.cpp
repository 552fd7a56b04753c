#include "wgn/nn/layers.hpp"

#include <cmath>

#include "wgn/error.hpp"

namespace wgn::nn {

GatLayerImpl::GatLayerImpl(int64_t in, int64_t out, int64_t heads, double dropout)
    : heads_(heads), head_dim_(out / heads), dropout_(dropout) {
    if (heads <= 0 || out % heads != 0) fail(ErrorKind::Config, "attention width must be a multiple of the head count");
    proj_ = register_module("proj", torch::nn::Linear(torch::nn::LinearOptions(in, out).bias(false)));
    const double bound = std::sqrt(6.0 / static_cast<double>(head_dim_ + 1));
    att_src_ = register_parameter("att_src", torch::empty({heads_, head_dim_}).uniform_(-bound, bound));
    att_dst_ = register_parameter("att_dst", torch::empty({heads_, head_dim_}).uniform_(-bound, bound));
    bias_ = register_parameter("bias", torch::zeros({out}));
}

torch::Tensor GatLayerImpl::forward(const torch::Tensor& x, const torch::Tensor& adjacency) {
    const auto b = x.size(0), n = x.size(1);
    const auto h = proj_(x).view({b, n, heads_, head_dim_});
    const auto s_src = (h * att_src_).sum(-1);  // [B, N, H]
    const auto s_dst = (h * att_dst_).sum(-1);
    // e[b, h, i, j] scores j -> i
    auto e = s_dst.permute({0, 2, 1}).unsqueeze(3) + s_src.permute({0, 2, 1}).unsqueeze(2);
    e = torch::leaky_relu(e, 0.2);
    e = e.masked_fill(adjacency.logical_not(), -std::numeric_limits<double>::infinity());
    auto alpha = torch::softmax(e, 3);
    alpha = apply_dropout(alpha, dropout_, is_training());
    const auto out = torch::matmul(alpha, h.permute({0, 2, 1, 3}));  // [B, H, N, dh]
    return out.permute({0, 2, 1, 3}).reshape({b, n, heads_ * head_dim_}) + bias_;
}

NodeInitImpl::NodeInitImpl(int64_t hidden) {
    embed_ = register_module("embed", torch::nn::Linear(2, hidden));
    combine_ = register_module("combine", Mlp(std::vector<int64_t>{2 * hidden, hidden, hidden}));
}

torch::Tensor NodeInitImpl::aggregate(const GraphTopology& topo, const torch::Tensor& edge_states) {
    return torch::matmul(topo.incoming.to(edge_states.scalar_type()), edge_states);
}

torch::Tensor NodeInitImpl::forward(const GraphTopology& topo, const torch::Tensor& edge_states) {
    const auto b = edge_states.size(0);
    const auto pos = torch::elu(embed_(topo.node_coords.to(edge_states.scalar_type())));
    const auto pooled = aggregate(topo, edge_states);
    return combine_(torch::cat({pos.unsqueeze(0).expand({b, topo.nodes, pos.size(1)}), pooled}, 2));
}

torch::Tensor bin_tokens(const torch::Tensor& spectral) {
    const auto k = spectral.size(-1) / 2;
    return torch::stack({spectral.narrow(-1, 0, k), spectral.narrow(-1, k, k)}, -1);
}

}  // namespace wgn::nn
