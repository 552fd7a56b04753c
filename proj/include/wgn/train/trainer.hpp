#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wgn/evaluation.hpp"
#include "wgn/nn/forward_model.hpp"
#include "wgn/nn/localizer.hpp"
#include "wgn/prep.hpp"
#include "wgn/train/losses.hpp"

namespace wgn::train {

struct StagePlan {
    int stage1_epochs = 150;
    int stage2_epochs = 150;
    int stage3_epochs = 600;
    double stage1_lr = 1e-4;
    double stage2_lr = 1e-4;
    double stage3_lr = 1e-5;
    int batch_size = 8;
    double plateau_factor = 0.8;
    int plateau_patience = 20;
    double grad_clip = 5.0;

    void validate() const;
    nlohmann::json to_json() const;
    static StagePlan from_json(const nlohmann::json& j);
};

struct TrainConfig {
    nn::ModelKind kind = nn::ModelKind::WgnCoupled;
    std::string preset = "paper";
    nn::ModelConfig model;
    StagePlan plan;
    CouplingConfig coupling;
    bool float64 = false;

    /// "paper": the published widths and schedule. "desk": reduced widths and
    /// epochs with larger rates, sized for a laptop CPU.
    static TrainConfig from_preset(const std::string& preset, nn::ModelKind kind);

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
    std::string hash() const;
};

struct EpochRecord {
    int stage = 0;
    int epoch = 0;
    double lr = 0.0;
    double loss = 0.0;
    double loc = 0.0;
    double fwd = 0.0;
    double corr = 0.0;
    double lambda = 0.0;
    double val_metric = 0.0;
    std::optional<double> score;  // checkpoint score (stage 3 only)
    int clipped_steps = 0;

    nlohmann::json to_json() const;
};

struct TrainResult {
    RunRecord record;
    nlohmann::json manifest;
    std::vector<EpochRecord> history;
    std::string forward_checksum_before;
    std::string forward_checksum_after;
};

/// Stage I (inverse on L_loc), Stage II (forward on the focus-weighted loss;
/// coupled model only), Stage III (inverse only, forward frozen). Inverse-only
/// kinds run Stage III with lambda = mu = 0. Writes manifest.json,
/// checkpoint.wgnckpt, predictions.json and steps.csv into `run_dir`.
TrainResult run_stages(const PreparedDataset& data, const TrainConfig& cfg, std::uint64_t seed,
                       const std::filesystem::path& run_dir);

/// A trained localizer (and forward branch when present) rebuilt from a run
/// directory.
struct LoadedRun {
    TrainConfig config;
    std::uint64_t seed = 0;
    std::string split;
    std::string checkpoint_sha256;
    std::shared_ptr<nn::Localizer> localizer;
    std::shared_ptr<nn::ForwardModel> forward;
};

LoadedRun load_run(const std::filesystem::path& run_dir, const PreparedDataset& data);

/// Predictions for every sample of the dataset, in dataset order.
std::vector<SamplePrediction> predict_dataset(nn::Localizer& model, const PreparedDataset& data,
                                              torch::Dtype dtype = torch::kFloat32);

}  // namespace wgn::train
