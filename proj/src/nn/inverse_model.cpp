#include "wgn/nn/inverse_model.hpp"

#include "wgn/error.hpp"

namespace wgn::nn {

InverseModel::InverseModel(const ModelConfig& cfg, int64_t bins)
    : Localizer(bins), hidden_(cfg.hidden), dropout_(cfg.dropout) {
    cfg.validate();
    if (bins <= 0) fail(ErrorKind::Config, "inverse model needs at least one frequency bin");
    const auto d = hidden_;
    feat_ = register_module("bin_feature", torch::nn::Linear(2, d));
    score_in_ = register_module("bin_score_in", torch::nn::Linear(2, cfg.attn_hidden));
    score_out_ = register_module("bin_score_out", torch::nn::Linear(cfg.attn_hidden, 1));
    encode_ = register_module("edge_encoder", Mlp(std::vector<int64_t>{d + 3, d, d}));
    node_init_ = register_module("node_init", NodeInit(d));
    for (int64_t l = 0; l < cfg.layers; ++l) {
        gat_.push_back(register_module("gat" + std::to_string(l), GatLayer(d, d, cfg.heads, cfg.dropout)));
        norms_.push_back(register_module("norm" + std::to_string(l),
                                         torch::nn::LayerNorm(torch::nn::LayerNormOptions({d}))));
    }
    head_ = register_module("head", Mlp(std::vector<int64_t>{d, d, d / 2, 2}));
}

EdgeEncoding InverseModel::encode_edges(const InverseGraph& graph) {
    expect_input(graph);
    // Both directions carry the same spectrum, so attend once per path.
    const auto tokens = bin_tokens(graph.path_tokens().narrow(2, 3, 2 * bins_));  // [B, P, K, 2]
    const auto scores = score_out_(torch::tanh(score_in_(tokens))).squeeze(-1);  // [B, P, K]
    const auto alpha = torch::softmax(scores, -1);
    const auto feats = torch::elu(feat_(tokens));                                  // [B, P, K, d]
    const auto context = (alpha.unsqueeze(-1) * feats).sum(2);                     // [B, P, d]
    const auto ctx2 = torch::cat({context, context}, 1);
    const auto geom = graph.edge_features.narrow(2, 0, 3);
    return {encode_(torch::cat({ctx2, geom}, 2)), alpha, context};
}

torch::Tensor InverseModel::init_nodes(const InverseGraph& graph, const torch::Tensor& edge_states) {
    return node_init_(graph.topo, edge_states);
}

torch::Tensor InverseModel::forward(const InverseGraph& graph) {
    const auto enc = encode_edges(graph);
    check_finite(enc.states, "inverse edge encoder");
    auto x = init_nodes(graph, enc.states);
    check_finite(x, "inverse node init");
    const auto adj = graph.topo.adjacency;
    for (std::size_t l = 0; l < gat_.size(); ++l) {
        // Hidden dropout feeds the next layer only; dropping right before the
        // max pool would bias the pooled maximum between train and eval.
        if (l > 0) x = apply_dropout(x, dropout_, is_training());
        x = torch::elu(norms_[l](gat_[l](x, adj)));
        check_finite(x, "inverse attention layer " + std::to_string(l));
    }
    const auto pooled = std::get<0>(x.max(1));
    auto out = head_(pooled);
    check_finite(out, "inverse regression head");
    return out;
}

}  // namespace wgn::nn
