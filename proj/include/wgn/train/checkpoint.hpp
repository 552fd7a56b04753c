#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

namespace wgn::train {

/// Named modules written into one file; tensor keys are "<prefix>.<param>".
using ModuleSet = std::vector<std::pair<std::string, torch::nn::Module*>>;

/// File layout: "WGNCKPT\0", u64 little-endian header length, JSON header,
/// raw tensor payload. The header lists every tensor (dtype, shape, offset)
/// and the SHA-256 of the payload. Returns that checksum.
std::string save_checkpoint(const std::filesystem::path& path, const ModuleSet& modules, nlohmann::json meta);

struct Checkpoint {
    nlohmann::json header;
    std::map<std::string, torch::Tensor> tensors;

    std::string sha256() const { return header.at("payload_sha256").get<std::string>(); }
    const nlohmann::json& meta() const { return header.at("meta"); }
};

/// Verifies magic and checksum; Io error otherwise.
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies the tensors under `prefix.` into the module (names and shapes must
/// match exactly).
void load_module(const Checkpoint& ckpt, const std::string& prefix, torch::nn::Module& module);

/// In-memory copy of every parameter, for best-epoch retention.
std::vector<torch::Tensor> snapshot(const torch::nn::Module& module);
void restore(torch::nn::Module& module, const std::vector<torch::Tensor>& state);

}  // namespace wgn::train
