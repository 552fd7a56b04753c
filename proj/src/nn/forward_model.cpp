#include "wgn/nn/forward_model.hpp"

#include "wgn/error.hpp"

namespace wgn::nn {

ForwardModel::ForwardModel(const ModelConfig& cfg) : hidden_(cfg.forward_hidden) {
    cfg.validate();
    const auto h = hidden_;
    encode_ = register_module("edge_encoder", Mlp(std::vector<int64_t>{5, h, h}));
    node_embed_ = register_module("node_embed", torch::nn::Linear(2, h));
    for (int64_t l = 0; l < cfg.forward_layers; ++l) {
        updates_.push_back(register_module("update" + std::to_string(l), Mlp(std::vector<int64_t>{2 * h, h, h})));
        norms_.push_back(register_module("norm" + std::to_string(l),
                                         torch::nn::LayerNorm(torch::nn::LayerNormOptions({h}))));
    }
    dec1_ = register_module("decoder_hidden", torch::nn::Linear(h, h));
    dec2_ = register_module("decoder_out", torch::nn::Linear(h, 1));
}

torch::Tensor ForwardModel::forward(const ForwardGraph& graph) {
    check_finite(graph.edge_features, "forward edge features");
    const auto& topo = graph.topo;
    const auto p = topo.pairs;
    const auto dtype = graph.edge_features.scalar_type();
    // Undirected incidence [N, P]: each path counted once at both endpoints.
    // Summing a path's two directions first makes direction order irrelevant
    // bit for bit (a + b == b + a).
    const auto fwd_src = topo.src.narrow(0, 0, p), fwd_dst = topo.dst.narrow(0, 0, p);
    auto inc = torch::zeros({topo.nodes, p}, dtype);
    const auto cols = torch::arange(p, torch::kInt64);
    inc.index_put_({fwd_src, cols}, 1.0);
    inc.index_put_({fwd_dst, cols}, 1.0);
    const auto deg = (2.0 * inc.sum(1, true)).clamp_min(1.0);
    inc = inc / deg;

    const auto anchors = node_embed_(topo.node_coords.to(dtype));  // [N, h]
    auto u = encode_(graph.edge_features);                        // [B, 2P, h]
    for (std::size_t l = 0; l < updates_.size(); ++l) {
        const auto pair_sum = u.narrow(1, 0, p) + u.narrow(1, p, p);          // [B, P, h]
        const auto node_state = torch::matmul(inc, pair_sum) + anchors;       // [B, N, h]
        const auto m = 0.5 * (node_state.index_select(1, topo.src) + node_state.index_select(1, topo.dst));
        u = norms_[l](u + updates_[l](torch::cat({u, m}, 2)));
        check_finite(u, "forward message-passing layer " + std::to_string(l));
    }
    const auto ubar = 0.5 * (u.narrow(1, 0, p) + u.narrow(1, p, p));
    auto out = torch::softplus(dec2_(torch::elu(dec1_(ubar)))).squeeze(-1);
    check_finite(out, "forward decoder");
    return out;
}

torch::Tensor coordinate_gradient(ForwardModel& model, const GraphTopology& topo, const torch::Tensor& candidate,
                                  const torch::Tensor& observed) {
    torch::AutoGradMode enable(true);
    auto probe = candidate.detach().clone().requires_grad_(true);
    const auto pred = model.forward(build_forward_graph(topo, probe));
    // Sum of per-sample means: samples are independent, so each row of the
    // gradient is that sample's own gradient.
    const auto loss = (pred - observed.detach()).pow(2).mean(1).sum();
    auto grads = torch::autograd::grad({loss}, {probe}, {}, false, false, true);
    if (!grads[0].defined()) return torch::zeros_like(probe).detach();
    return grads[0].detach();
}

}  // namespace wgn::nn
