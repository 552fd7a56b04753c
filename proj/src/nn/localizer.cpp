#include "wgn/nn/localizer.hpp"

#include "wgn/error.hpp"
#include "wgn/nn/baselines.hpp"
#include "wgn/nn/inverse_model.hpp"

namespace wgn::nn {

namespace {

constexpr std::pair<ModelKind, const char*> kNames[] = {
    {ModelKind::Cnn1d, "cnn1d"}, {ModelKind::Lstm, "lstm"},
    {ModelKind::GnnMlp, "gnn-mlp"}, {ModelKind::Gat, "gat"},
    {ModelKind::WgnInverse, "wgn-inverse"}, {ModelKind::WgnCoupled, "wgn-coupled"},
};

}  // namespace

ModelKind parse_model_kind(const std::string& text) {
    for (const auto& [k, n] : kNames)
        if (text == n) return k;
    fail(ErrorKind::Config, "unknown model kind '" + text + "' (cnn1d, lstm, gnn-mlp, gat, wgn-inverse, wgn-coupled)");
}

std::string to_string(ModelKind kind) {
    for (const auto& [k, n] : kNames)
        if (k == kind) return n;
    return "?";
}

void Localizer::expect_input(const InverseGraph& graph) const {
    if (graph.edge_features.dim() != 3 || graph.bins() != bins_)
        fail(ErrorKind::Config, "input has " + std::to_string(graph.bins()) + " bins; model expects " +
                                    std::to_string(bins_));
}

bool uses_forward_branch(ModelKind kind) noexcept { return kind == ModelKind::WgnCoupled; }

void ModelConfig::validate() const {
    if (hidden <= 0 || heads <= 0 || layers <= 0 || attn_hidden <= 0 || forward_hidden <= 0 || forward_layers <= 0 ||
        lstm_hidden <= 0 || lstm_layers <= 0)
        fail(ErrorKind::Config, "model widths and depths must be positive");
    if (hidden % heads != 0) fail(ErrorKind::Config, "hidden width must be divisible by the head count");
    if (hidden < 2) fail(ErrorKind::Config, "hidden width too small for the regression head");
    if (dropout < 0.0 || dropout >= 1.0 || lstm_dropout < 0.0 || lstm_dropout >= 1.0)
        fail(ErrorKind::Config, "dropout must be in [0, 1)");
}

nlohmann::json ModelConfig::to_json() const {
    return {{"hidden", hidden},           {"heads", heads},
            {"layers", layers},           {"attn_hidden", attn_hidden},
            {"dropout", dropout},         {"forward_hidden", forward_hidden},
            {"forward_layers", forward_layers}, {"lstm_hidden", lstm_hidden},
            {"lstm_layers", lstm_layers}, {"lstm_dropout", lstm_dropout}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.hidden = j.value("hidden", c.hidden);
    c.heads = j.value("heads", c.heads);
    c.layers = j.value("layers", c.layers);
    c.attn_hidden = j.value("attn_hidden", c.attn_hidden);
    c.dropout = j.value("dropout", c.dropout);
    c.forward_hidden = j.value("forward_hidden", c.forward_hidden);
    c.forward_layers = j.value("forward_layers", c.forward_layers);
    c.lstm_hidden = j.value("lstm_hidden", c.lstm_hidden);
    c.lstm_layers = j.value("lstm_layers", c.lstm_layers);
    c.lstm_dropout = j.value("lstm_dropout", c.lstm_dropout);
    c.validate();
    return c;
}

std::shared_ptr<Localizer> make_localizer(ModelKind kind, const ModelConfig& cfg, int64_t bins) {
    switch (kind) {
        case ModelKind::Cnn1d: return std::make_shared<Cnn1dBaseline>(cfg, bins);
        case ModelKind::Lstm: return std::make_shared<LstmBaseline>(cfg, bins);
        case ModelKind::GnnMlp: return std::make_shared<GnnMlpBaseline>(cfg, bins);
        case ModelKind::Gat: return std::make_shared<GatBaseline>(cfg, bins);
        case ModelKind::WgnInverse:
        case ModelKind::WgnCoupled: return std::make_shared<InverseModel>(cfg, bins);
    }
    fail(ErrorKind::Config, "unhandled model kind");
}

}  // namespace wgn::nn
