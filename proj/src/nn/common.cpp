#include "wgn/nn/common.hpp"

#include "wgn/error.hpp"
#include "wgn/hashing.hpp"

namespace wgn::nn {

MlpImpl::MlpImpl(std::vector<int64_t> widths, bool relu) : relu_(relu) {
    if (widths.size() < 2) fail(ErrorKind::Config, "MLP needs at least an input and an output width");
    for (std::size_t k = 0; k + 1 < widths.size(); ++k) layers_->push_back(torch::nn::Linear(widths[k], widths[k + 1]));
    register_module("layers", layers_);
}

torch::Tensor MlpImpl::forward(torch::Tensor x) {
    const auto n = layers_->size();
    for (std::size_t k = 0; k < n; ++k) {
        x = layers_[k]->as<torch::nn::Linear>()->forward(x);
        if (k + 1 < n) x = relu_ ? torch::relu(x) : torch::elu(x);
    }
    return x;
}

torch::Tensor apply_dropout(const torch::Tensor& x, double p, bool training) {
    if (!training || p <= 0.0) return x;
    const auto keep = torch::bernoulli(torch::full_like(x, 1.0 - p));
    return x * keep / (1.0 - p);
}

void check_finite(const torch::Tensor& t, const std::string& where) {
    if (!torch::isfinite(t).all().item<bool>()) fail(ErrorKind::Numeric, "non-finite activation in " + where);
}

std::string parameter_checksum(const torch::nn::Module& module) {
    Sha256 h;
    for (const auto& p : module.named_parameters(true)) {
        h.update(p.key());
        const auto t = p.value().detach().contiguous().cpu();
        for (auto s : t.sizes()) h.update(std::to_string(s) + ",");
        h.update(std::span<const std::byte>(static_cast<const std::byte*>(t.data_ptr()), t.nbytes()));
    }
    return h.hex_digest();
}

int64_t parameter_count(const torch::nn::Module& module) {
    int64_t n = 0;
    for (const auto& p : module.parameters(true)) n += p.numel();
    return n;
}

}  // namespace wgn::nn
