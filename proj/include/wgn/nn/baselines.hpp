#pragma once

#include <vector>

#include "wgn/nn/layers.hpp"
#include "wgn/nn/localizer.hpp"

namespace wgn::nn {

/// Five conv blocks over the path axis of the token matrix.
class Cnn1dBaseline : public Localizer {
public:
    Cnn1dBaseline(const ModelConfig& cfg, int64_t bins);
    torch::Tensor forward(const InverseGraph& graph) override;

private:
    std::vector<torch::nn::Conv1d> convs_;
    Mlp head_{nullptr};
};

/// Bidirectional LSTM over path tokens with attention pooling.
class LstmBaseline : public Localizer {
public:
    LstmBaseline(const ModelConfig& cfg, int64_t bins);
    torch::Tensor forward(const InverseGraph& graph) override;

private:
    torch::nn::LSTM lstm_{nullptr};
    torch::nn::Linear score_in_{nullptr}, score_out_{nullptr};
    Mlp head_{nullptr};
};

/// Static edge MLP, mean-aggregation message passing, mean pool.
class GnnMlpBaseline : public Localizer {
public:
    GnnMlpBaseline(const ModelConfig& cfg, int64_t bins);
    torch::Tensor forward(const InverseGraph& graph) override;

private:
    Mlp encode_{nullptr};
    NodeInit node_init_{nullptr};
    std::vector<torch::nn::Linear> layers_;
    std::vector<torch::nn::LayerNorm> norms_;
    Mlp head_{nullptr};
};

/// Static edge MLP, attention stack, learned-query attention pooling.
class GatBaseline : public Localizer {
public:
    GatBaseline(const ModelConfig& cfg, int64_t bins);
    torch::Tensor forward(const InverseGraph& graph) override;

private:
    double dropout_;
    Mlp encode_{nullptr};
    NodeInit node_init_{nullptr};
    std::vector<GatLayer> gat_;
    std::vector<torch::nn::LayerNorm> norms_;
    torch::Tensor query_;
    Mlp head_{nullptr};
};

}  // namespace wgn::nn
