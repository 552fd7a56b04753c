#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wgn/geometry.hpp"

namespace wgn {

struct MaeResult {
    double normalized = 0.0;
    double mm = 0.0;
};

/// Mean Euclidean distance, in plate-normalized units and in millimetres.
MaeResult mae(std::span<const Vec2> predictions, std::span<const Vec2> truths, double side_length_mm = 500.0);

enum class Classification { Damaged, Undamaged };

/// Damaged iff the prediction lies in the closed square [-margin, 1+margin]^2.
Classification classify_no_damage(Vec2 prediction, double margin = 0.0);

struct FprResult {
    int positives = 0;
    int total = 0;
    double rate = 0.0;

    std::string fraction() const;  // "7/18"
    std::string percent() const;   // "38.9%"
};

FprResult fpr(std::span<const Vec2> pristine_predictions, double margin = 0.0);
FprResult pool(std::span<const FprResult> parts);

struct SamplePrediction {
    std::string id;
    SampleRole role = SampleRole::Train;
    std::optional<std::string> damage_label;
    Vec2 truth;  // defect coordinate, or the no-damage target
    Vec2 prediction;

    bool damaged() const noexcept { return damage_label.has_value(); }
};

nlohmann::json to_json(const SamplePrediction& p);
SamplePrediction prediction_from_json(const nlohmann::json& j);

struct RunMetrics {
    std::optional<MaeResult> train_mae;
    std::optional<MaeResult> seen_mae;    // damaged validation samples
    std::optional<MaeResult> unseen_mae;  // held-out damaged test samples
    std::optional<FprResult> fpr;         // pristine test samples

    nlohmann::json to_json() const;
};

RunMetrics evaluate_run(std::span<const SamplePrediction> predictions, double side_length_mm = 500.0,
                        double margin = 0.0);

/// One completed training run as seen by the report.
struct RunRecord {
    std::string split;
    std::string model;
    std::uint64_t seed = 0;
    std::string checkpoint_sha256;
    std::vector<SamplePrediction> predictions;
    std::vector<Vec2> transducers;
};

/// Mean and spread over seeds; std is the sample standard deviation and is
/// absent for a single seed.
struct Aggregate {
    double mean = 0.0;
    std::optional<double> std;
    int count = 0;
};

Aggregate aggregate(std::span<const double> values);

struct ModelSummary {
    std::string split;
    std::string model;
    std::vector<std::uint64_t> seeds;
    std::vector<RunMetrics> per_seed;
    std::optional<Aggregate> seen_mae;
    std::optional<Aggregate> unseen_mae;
    std::optional<FprResult> fpr;  // pooled over seeds
};

struct EvalReport {
    double side_length_mm = 500.0;
    double margin = 0.0;
    std::vector<ModelSummary> models;  // ordered by split, then canonical model order
    std::vector<RunRecord> runs;

    nlohmann::json to_json() const;
    std::string to_markdown() const;
};

EvalReport build_report(std::vector<RunRecord> runs, double side_length_mm = 500.0, double margin = 0.0);

/// Writes report.json, report.md and maps/<split>_<model>_<seed>.png.
void emit_report(const EvalReport& report, const std::filesystem::path& out_dir);

/// Loads every `<root>/<split>/<model>/seed<k>/predictions.json` below
/// `root`; run directories without predictions are listed in a report error.
std::vector<RunRecord> collect_runs(const std::filesystem::path& root);

nlohmann::json to_json(const RunRecord& run);
RunRecord run_from_json(const nlohmann::json& j);

/// Canonical ordering of model kinds in tables.
int model_rank(const std::string& model);

}  // namespace wgn
