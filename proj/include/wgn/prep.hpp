#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "wgn/geometry.hpp"
#include "wgn/signal_prep.hpp"

namespace wgn {

class SampleStore;

struct PrepConfig {
    int filter_order = 3;
    double cutoff_hz = 20e3;
    double band_low_hz = 69.4e3;
    double band_high_hz = 128e3;
    int bins = 256;
    int nfft = 0;  // 0: signal length

    void validate() const;
    nlohmann::json to_json() const;
    static PrepConfig from_json(const nlohmann::json& j);
};

struct PreparedSample {
    std::string id;
    SampleRole role = SampleRole::Train;
    SampleLabel label;
    Eigen::MatrixXd descriptor;  // 2K x |P|
    Eigen::VectorXd delta_e;     // |P_f|
};

/// Everything downstream models need from one (store, split, seed).
struct PreparedDataset {
    PrepConfig config;
    SplitAssignment assignment;
    std::uint64_t seed = 0;
    BandSelection band;
    NormalizationStats stats;
    Eigen::MatrixXd mean_abs_pristine;  // K x |P|
    LayoutMetadata layout;
    PathSet paths;
    ForwardPathSet forward_paths;
    std::vector<PreparedSample> samples;

    std::vector<const PreparedSample*> select(SampleRole role) const;
    std::vector<const PreparedSample*> select(SampleRole role, bool damaged) const;
    const PreparedSample& sample(const std::string& id) const;
    int bins() const noexcept { return band.size(); }
    /// Run-manifest summary (band bins, E_max, partition sizes).
    nlohmann::json summary() const;
};

/// Filter -> baseline -> differential -> spectrum -> train-only statistics ->
/// descriptors and energy targets for every sample of the split.
PreparedDataset prepare_dataset(const SampleStore& store, SplitName split, std::uint64_t seed,
                                const PrepConfig& config);

/// Key identifying a cached preparation: store manifest, split, seed, config.
std::string prep_cache_key(const SampleStore& store, SplitName split, std::uint64_t seed, const PrepConfig& config);

/// Loads `<dir>` when its key matches, otherwise prepares and writes it.
/// `reused` reports which path was taken.
PreparedDataset prepare_cached(const SampleStore& store, SplitName split, std::uint64_t seed, const PrepConfig& config,
                               const std::filesystem::path& dir, bool* reused = nullptr);

void save_prepared(const PreparedDataset& data, const std::string& key, const std::filesystem::path& dir);
PreparedDataset load_prepared(const std::filesystem::path& dir);

}  // namespace wgn
