#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace wgn {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
};

double distance(Vec2 a, Vec2 b) noexcept;

/// Out-of-domain regression target assigned to pristine samples.
inline constexpr Vec2 kNoDamageTarget{-0.001, -0.001};

struct PlateSpec {
    double side_length_mm = 500.0;

    void validate() const;
};

bool inside_unit_square(Vec2 p, double margin = 0.0) noexcept;

struct TransducerLayout {
    std::vector<Vec2> coordinates;  // normalized to [0,1]^2
    std::vector<int> top_row;
    std::vector<int> bottom_row;

    int size() const noexcept { return static_cast<int>(coordinates.size()); }
    void validate() const;
};

struct PathPair {
    int i = 0;
    int j = 0;

    friend bool operator==(const PathPair&, const PathPair&) = default;
};

/// All measured pitch-catch channels: one per unordered transducer pair,
/// i < j, lexicographic order.
struct PathSet {
    std::vector<PathPair> pairs;

    int size() const noexcept { return static_cast<int>(pairs.size()); }
    /// Position of the unordered pair {a,b} in the canonical order.
    int index_of(int a, int b) const;
};

/// Plate-spanning subset: paths with one endpoint in each boundary row.
struct ForwardPathSet {
    std::vector<PathPair> pairs;
    std::vector<int> path_index;  // position of each pair inside the PathSet

    int size() const noexcept { return static_cast<int>(pairs.size()); }
};

PathSet enumerate_paths(int transducer_count);
ForwardPathSet select_forward_paths(const PathSet& paths, const TransducerLayout& layout);

struct DamageEntry {
    std::string label;
    Vec2 position;
};

class DamageCatalog {
public:
    DamageCatalog() = default;
    explicit DamageCatalog(std::vector<DamageEntry> entries);

    const std::vector<DamageEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool contains(const std::string& label) const noexcept;
    /// Throws ErrorKind::Catalog for unknown labels.
    Vec2 at(const std::string& label) const;

private:
    std::vector<DamageEntry> entries_;
};

/// Layout and damage catalog as shipped in the metadata file.
struct LayoutMetadata {
    TransducerLayout layout;
    DamageCatalog catalog;
    PlateSpec plate;
};

LayoutMetadata layout_from_json(const nlohmann::json& j);
nlohmann::json layout_to_json(const LayoutMetadata& meta);
LayoutMetadata load_layout_metadata(const std::filesystem::path& path);
/// Metadata file installed with the project (data/ogw1_layout.json).
std::filesystem::path default_layout_path();

enum class SplitName { A, B };

SplitName parse_split_name(const std::string& text);
std::string to_string(SplitName name);

struct PristinePartition {
    int train = 48;
    int val = 6;
    int test = 6;

    int total() const noexcept { return train + val + test; }
};

/// Default partition for a pool of pristine samples: one tenth each to
/// validation and test, the rest to training.
PristinePartition pristine_partition_for(int pristine_count);

struct SplitSpec {
    SplitName name = SplitName::A;
    std::vector<std::string> test_damage_labels;
    std::vector<std::string> train_damage_labels;  // full train pool (incl. validation)
    PristinePartition pristine_partition;
};

SplitSpec make_split(SplitName name, const DamageCatalog& catalog, int pristine_count = 60);

/// Minimal sample descriptor needed for assignment.
struct SampleRef {
    std::string id;
    std::optional<std::string> damage_label;  // empty for pristine samples
};

enum class SampleRole { Train, Validation, Test };

std::string to_string(SampleRole role);

struct SplitAssignment {
    SplitSpec spec;
    std::vector<std::string> train_damaged;
    std::vector<std::string> val_damaged;
    std::vector<std::string> test_damaged;
    std::vector<std::string> train_pristine;
    std::vector<std::string> val_pristine;
    std::vector<std::string> test_pristine;

    std::vector<std::string> train_ids() const;
    std::optional<SampleRole> role_of(const std::string& id) const;
};

nlohmann::json assignment_to_json(const SplitAssignment& a);
SplitAssignment assignment_from_json(const nlohmann::json& j);

/// Number of train-pool damaged samples reserved for validation:
/// ceil(20 %), at least 2, never the whole pool.
int validation_reserve_count(int pool_size);

SplitAssignment assign_samples(const SplitSpec& spec, const std::vector<SampleRef>& samples,
                               std::uint64_t seed);

/// Deterministic Fisher-Yates shuffle driven by mt19937_64; identical on
/// every standard library (std::shuffle is not).
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed);

}  // namespace wgn

#include "wgn/detail/shuffle.hpp"
