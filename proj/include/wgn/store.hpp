#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "wgn/geometry.hpp"
#include "wgn/signal_prep.hpp"

namespace wgn {

/// 8-byte magic of the canonical matrix container.
inline constexpr char kMatrixMagic[8] = {'W', 'G', 'N', 'M', 'A', 'T', '0', '1'};

/// Flat little-endian float64 column-major payload after the magic; the
/// shape lives in the JSON sidecar.
void write_matrix_file(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_file(const std::filesystem::path& path, Eigen::Index rows, Eigen::Index cols);

/// Writes JSON with sorted keys and a trailing newline (byte-stable).
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

nlohmann::json sample_sidecar(const RawSample& sample, const std::string& split_hint = "");

struct StoreEntry {
    std::string id;
    SampleLabel label;
    double sampling_rate_hz = 0.0;
    double excitation_freq_hz = 0.0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
};

/// Read-only view of a canonical store:
///   <root>/samples/<id>.bin, <root>/samples/<id>.json, <root>/manifest.json
class SampleStore {
public:
    static SampleStore open(const std::filesystem::path& root);

    const std::filesystem::path& root() const noexcept { return root_; }
    const nlohmann::json& manifest() const noexcept { return manifest_; }
    const LayoutMetadata& layout() const noexcept { return layout_; }
    const std::vector<StoreEntry>& entries() const noexcept { return entries_; }

    const StoreEntry& entry(const std::string& id) const;
    RawSample load(const std::string& id) const;
    std::vector<SampleRef> refs() const;
    int pristine_count() const;

private:
    std::filesystem::path root_;
    nlohmann::json manifest_;
    LayoutMetadata layout_;
    std::vector<StoreEntry> entries_;
};

/// Builds a store in a staging directory and moves it into place on commit;
/// the manifest is written last and acts as the commit marker. Destroying an
/// uncommitted writer removes the staging directory.
class StoreWriter {
public:
    StoreWriter(std::filesystem::path root, LayoutMetadata layout);
    ~StoreWriter();
    StoreWriter(const StoreWriter&) = delete;
    StoreWriter& operator=(const StoreWriter&) = delete;

    void add(const RawSample& sample, const std::string& split_hint = "");
    /// `extra` is merged into the manifest (source description etc.).
    void commit(const nlohmann::json& extra = nlohmann::json::object());

    const std::filesystem::path& staging_dir() const noexcept { return staging_; }

private:
    std::filesystem::path root_;
    std::filesystem::path staging_;
    LayoutMetadata layout_;
    std::vector<std::string> ids_;
    bool committed_ = false;
};

}  // namespace wgn
