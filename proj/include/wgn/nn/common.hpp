#pragma once

#include <string>
#include <vector>

#include <torch/torch.h>

namespace wgn::nn {

/// Feed-forward stack Linear -> ELU -> ... -> Linear. `widths` lists every
/// layer boundary, input first. The last layer has no activation.
class MlpImpl : public torch::nn::Module {
public:
    MlpImpl(std::vector<int64_t> widths, bool relu = false);
    torch::Tensor forward(torch::Tensor x);

private:
    torch::nn::ModuleList layers_;
    bool relu_;
};
TORCH_MODULE(Mlp);

/// Inverted dropout; identity when not training or p == 0.
torch::Tensor apply_dropout(const torch::Tensor& x, double p, bool training);

/// Throws ErrorKind::Numeric naming `where` when `t` holds NaN or Inf.
void check_finite(const torch::Tensor& t, const std::string& where);

/// SHA-256 over every named parameter (name, shape, raw bytes) in order.
std::string parameter_checksum(const torch::nn::Module& module);

int64_t parameter_count(const torch::nn::Module& module);

}  // namespace wgn::nn
