#include "wgn/nn/baselines.hpp"

#include <cmath>

#include "wgn/error.hpp"

namespace wgn::nn {

namespace {

torch::Tensor checked(torch::Tensor t, const char* where) {
    check_finite(t, where);
    return t;
}

}  // namespace

Cnn1dBaseline::Cnn1dBaseline(const ModelConfig& cfg, int64_t bins) : Localizer(bins) {
    cfg.validate();
    int64_t in = 3 + 2 * bins;
    const int64_t widths[] = {16, 32, 64, 128, 256};
    for (int k = 0; k < 5; ++k) {
        convs_.push_back(register_module("conv" + std::to_string(k),
                                         torch::nn::Conv1d(torch::nn::Conv1dOptions(in, widths[k], 3).padding(1))));
        in = widths[k];
    }
    head_ = register_module("head", Mlp(std::vector<int64_t>{256, 128, 64, 2}, true));
}

torch::Tensor Cnn1dBaseline::forward(const InverseGraph& graph) {
    expect_input(graph);
    auto x = graph.path_tokens().transpose(1, 2);  // [B, C, P]
    for (auto& conv : convs_) {
        x = torch::relu(conv(x));
        // ceil mode keeps short sequences alive through all five blocks
        x = torch::max_pool1d(x, {2}, {2}, {0}, {1}, true);
    }
    return checked(head_(x.mean(2)), "cnn1d head");
}

LstmBaseline::LstmBaseline(const ModelConfig& cfg, int64_t bins) : Localizer(bins) {
    cfg.validate();
    const auto h = cfg.lstm_hidden;
    lstm_ = register_module("lstm", torch::nn::LSTM(torch::nn::LSTMOptions(3 + 2 * bins, h)
                                                        .num_layers(cfg.lstm_layers)
                                                        .dropout(cfg.lstm_dropout)
                                                        .bidirectional(true)
                                                        .batch_first(true)));
    score_in_ = register_module("attn_in", torch::nn::Linear(2 * h, cfg.attn_hidden));
    score_out_ = register_module("attn_out", torch::nn::Linear(cfg.attn_hidden, 1));
    head_ = register_module("head", Mlp(std::vector<int64_t>{2 * h, h, h / 2, 2}));
}

torch::Tensor LstmBaseline::forward(const InverseGraph& graph) {
    expect_input(graph);
    const auto seq = std::get<0>(lstm_(graph.path_tokens()));  // [B, P, 2h]
    const auto w = torch::softmax(score_out_(torch::tanh(score_in_(seq))), 1);
    return checked(head_((w * seq).sum(1)), "lstm head");
}

GnnMlpBaseline::GnnMlpBaseline(const ModelConfig& cfg, int64_t bins) : Localizer(bins) {
    cfg.validate();
    const auto d = cfg.hidden;
    encode_ = register_module("edge_encoder", Mlp(std::vector<int64_t>{3 + 2 * bins, d, d, d, d}));
    node_init_ = register_module("node_init", NodeInit(d));
    for (int64_t l = 0; l < cfg.layers; ++l) {
        layers_.push_back(register_module("mp" + std::to_string(l), torch::nn::Linear(2 * d, d)));
        norms_.push_back(register_module("norm" + std::to_string(l),
                                         torch::nn::LayerNorm(torch::nn::LayerNormOptions({d}))));
    }
    head_ = register_module("head", Mlp(std::vector<int64_t>{d, d, d / 2, 2}));
}

torch::Tensor GnnMlpBaseline::forward(const InverseGraph& graph) {
    expect_input(graph);
    const auto& topo = graph.topo;
    auto x = node_init_(topo, encode_(graph.edge_features));
    // Row-normalized neighbour mean (no self term; the node's own state is
    // concatenated separately).
    auto nb = topo.adjacency.logical_and(torch::eye(topo.nodes, torch::kBool).logical_not()).to(x.scalar_type());
    nb = nb / nb.sum(1, true).clamp_min(1.0);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto agg = torch::matmul(nb, x);
        x = torch::elu(norms_[l](layers_[l](torch::cat({x, agg}, 2))));
    }
    return checked(head_(x.mean(1)), "gnn-mlp head");
}

GatBaseline::GatBaseline(const ModelConfig& cfg, int64_t bins) : Localizer(bins), dropout_(cfg.dropout) {
    cfg.validate();
    const auto d = cfg.hidden;
    encode_ = register_module("edge_encoder", Mlp(std::vector<int64_t>{3 + 2 * bins, d, d, d, d}));
    node_init_ = register_module("node_init", NodeInit(d));
    for (int64_t l = 0; l < cfg.layers; ++l) {
        gat_.push_back(register_module("gat" + std::to_string(l), GatLayer(d, d, cfg.heads, cfg.dropout)));
        norms_.push_back(register_module("norm" + std::to_string(l),
                                         torch::nn::LayerNorm(torch::nn::LayerNormOptions({d}))));
    }
    query_ = register_parameter("pool_query", torch::randn({d}) / std::sqrt(static_cast<double>(d)));
    head_ = register_module("head", Mlp(std::vector<int64_t>{d, d, d / 2, 2}));
}

torch::Tensor GatBaseline::forward(const InverseGraph& graph) {
    expect_input(graph);
    auto x = node_init_(graph.topo, encode_(graph.edge_features));
    for (std::size_t l = 0; l < gat_.size(); ++l) {
        if (l > 0) x = apply_dropout(x, dropout_, is_training());
        x = torch::elu(norms_[l](gat_[l](x, graph.topo.adjacency)));
    }
    const auto w = torch::softmax(torch::matmul(x, query_) / std::sqrt(static_cast<double>(x.size(2))), 1);
    return checked(head_((w.unsqueeze(2) * x).sum(1)), "gat head");
}

}  // namespace wgn::nn
