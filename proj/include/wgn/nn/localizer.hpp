#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "wgn/nn/graphs.hpp"

namespace wgn::nn {

enum class ModelKind { Cnn1d, Lstm, GnnMlp, Gat, WgnInverse, WgnCoupled };

ModelKind parse_model_kind(const std::string& text);
std::string to_string(ModelKind kind);
bool uses_forward_branch(ModelKind kind) noexcept;

/// Widths shared by every localizer and the forward branch.
struct ModelConfig {
    int64_t hidden = 256;       // inverse / graph baseline width d
    int64_t heads = 16;
    int64_t layers = 4;         // message-passing layers
    int64_t attn_hidden = 64;   // bin-attention scorer width
    double dropout = 0.2;
    int64_t forward_hidden = 128;
    int64_t forward_layers = 3;
    int64_t lstm_hidden = 128;
    int64_t lstm_layers = 3;
    double lstm_dropout = 0.3;

    void validate() const;
    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

/// Anything mapping a measured-response graph to a coordinate.
class Localizer : public torch::nn::Module {
public:
    explicit Localizer(int64_t bins) : bins_(bins) {}
    virtual torch::Tensor forward(const InverseGraph& graph) = 0;
    int64_t bins() const noexcept { return bins_; }

protected:
    /// Config error when the graph's descriptor width is not 2K.
    void expect_input(const InverseGraph& graph) const;

    int64_t bins_;
};

/// `bins` is K, the descriptor width is 2K.
std::shared_ptr<Localizer> make_localizer(ModelKind kind, const ModelConfig& cfg, int64_t bins);

}  // namespace wgn::nn
