#include "wgn/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "wgn/error.hpp"
#include "wgn/hashing.hpp"

#ifndef WGN_DATA_DIR
#define WGN_DATA_DIR "data"
#endif

namespace wgn {

double distance(Vec2 a, Vec2 b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

void PlateSpec::validate() const {
    if (!(side_length_mm > 0.0) || !std::isfinite(side_length_mm))
        fail(ErrorKind::Config, "plate side length must be positive");
}

bool inside_unit_square(Vec2 p, double margin) noexcept {
    return p.x >= -margin && p.x <= 1.0 + margin && p.y >= -margin && p.y <= 1.0 + margin;
}

void TransducerLayout::validate() const {
    const int n = size();
    if (n < 2) fail(ErrorKind::InvalidLayout, "layout needs at least two transducers");
    for (const auto& r : coordinates) {
        if (!inside_unit_square(r))
            fail(ErrorKind::InvalidLayout, "transducer coordinate outside the unit square");
    }
    std::set<int> top(top_row.begin(), top_row.end());
    for (int idx : top_row)
        if (idx < 0 || idx >= n) fail(ErrorKind::InvalidLayout, "top_row index out of range");
    for (int idx : bottom_row) {
        if (idx < 0 || idx >= n) fail(ErrorKind::InvalidLayout, "bottom_row index out of range");
        if (top.contains(idx))
            fail(ErrorKind::InvalidLayout, "transducer " + std::to_string(idx) + " is in both rows");
    }
}

int PathSet::index_of(int a, int b) const {
    const PathPair key{std::min(a, b), std::max(a, b)};
    const auto it = std::find(pairs.begin(), pairs.end(), key);
    if (it == pairs.end())
        fail(ErrorKind::Data, "no measured path between " + std::to_string(a) + " and " + std::to_string(b));
    return static_cast<int>(it - pairs.begin());
}

PathSet enumerate_paths(int transducer_count) {
    if (transducer_count < 2)
        fail(ErrorKind::InvalidLayout, "path enumeration needs at least two transducers");
    PathSet set;
    set.pairs.reserve(static_cast<std::size_t>(transducer_count) * (transducer_count - 1) / 2);
    for (int i = 0; i < transducer_count; ++i)
        for (int j = i + 1; j < transducer_count; ++j) set.pairs.push_back({i, j});
    return set;
}

ForwardPathSet select_forward_paths(const PathSet& paths, const TransducerLayout& layout) {
    if (layout.top_row.empty() || layout.bottom_row.empty())
        fail(ErrorKind::InvalidLayout, "forward path selection needs non-empty top and bottom rows");
    const std::set<int> top(layout.top_row.begin(), layout.top_row.end());
    const std::set<int> bottom(layout.bottom_row.begin(), layout.bottom_row.end());
    ForwardPathSet out;
    for (int k = 0; k < paths.size(); ++k) {
        const auto [i, j] = paths.pairs[k];
        const bool spans = (top.contains(i) && bottom.contains(j)) || (top.contains(j) && bottom.contains(i));
        if (spans) {
            out.pairs.push_back(paths.pairs[k]);
            out.path_index.push_back(k);
        }
    }
    return out;
}

DamageCatalog::DamageCatalog(std::vector<DamageEntry> entries) : entries_(std::move(entries)) {
    std::set<std::string> seen;
    for (const auto& e : entries_) {
        if (!seen.insert(e.label).second) fail(ErrorKind::Catalog, "duplicate damage label " + e.label);
        if (!inside_unit_square(e.position))
            fail(ErrorKind::Catalog, "damage location " + e.label + " outside the unit square");
    }
}

bool DamageCatalog::contains(const std::string& label) const noexcept {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.label == label; });
}

Vec2 DamageCatalog::at(const std::string& label) const {
    for (const auto& e : entries_)
        if (e.label == label) return e.position;
    fail(ErrorKind::Catalog, "unknown damage label " + label);
}

namespace {

Vec2 vec_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) fail(ErrorKind::Schema, "expected [x, y] coordinate");
    return {j[0].get<double>(), j[1].get<double>()};
}

// Natural order so that D2 sorts before D10.
bool label_less(const std::string& a, const std::string& b) {
    auto split = [](const std::string& s) {
        std::size_t k = s.size();
        while (k > 0 && std::isdigit(static_cast<unsigned char>(s[k - 1]))) --k;
        const long num = k < s.size() ? std::strtol(s.c_str() + k, nullptr, 10) : -1;
        return std::pair{s.substr(0, k), num};
    };
    return split(a) < split(b);
}

}  // namespace

LayoutMetadata layout_from_json(const nlohmann::json& j) {
    LayoutMetadata meta;
    try {
        for (const auto& r : j.at("transducers")) meta.layout.coordinates.push_back(vec_from_json(r));
        meta.layout.top_row = j.at("top_row").get<std::vector<int>>();
        meta.layout.bottom_row = j.at("bottom_row").get<std::vector<int>>();
        std::vector<DamageEntry> entries;
        for (const auto& [label, pos] : j.at("damage").items()) entries.push_back({label, vec_from_json(pos)});
        std::sort(entries.begin(), entries.end(),
                  [](const auto& a, const auto& b) { return label_less(a.label, b.label); });
        meta.catalog = DamageCatalog(std::move(entries));
        if (j.contains("plate_side_length_mm")) meta.plate.side_length_mm = j["plate_side_length_mm"].get<double>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Schema, std::string("layout metadata: ") + e.what());
    }
    meta.layout.validate();
    meta.plate.validate();
    return meta;
}

nlohmann::json layout_to_json(const LayoutMetadata& meta) {
    nlohmann::json j;
    j["transducers"] = nlohmann::json::array();
    for (const auto& r : meta.layout.coordinates) j["transducers"].push_back({r.x, r.y});
    j["top_row"] = meta.layout.top_row;
    j["bottom_row"] = meta.layout.bottom_row;
    j["damage"] = nlohmann::json::object();
    for (const auto& e : meta.catalog.entries()) j["damage"][e.label] = {e.position.x, e.position.y};
    j["plate_side_length_mm"] = meta.plate.side_length_mm;
    return j;
}

LayoutMetadata load_layout_metadata(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open layout metadata " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Schema, "layout metadata " + path.string() + ": " + e.what());
    }
    return layout_from_json(j);
}

std::filesystem::path default_layout_path() {
    if (const char* dir = std::getenv("WGN_DATA_DIR")) return std::filesystem::path(dir) / "ogw1_layout.json";
    return std::filesystem::path(WGN_DATA_DIR) / "ogw1_layout.json";
}

SplitName parse_split_name(const std::string& text) {
    if (text == "A" || text == "a") return SplitName::A;
    if (text == "B" || text == "b") return SplitName::B;
    fail(ErrorKind::Config, "unknown split '" + text + "' (expected A or B)");
}

std::string to_string(SplitName name) { return name == SplitName::A ? "A" : "B"; }

std::string to_string(SampleRole role) {
    switch (role) {
        case SampleRole::Train: return "train";
        case SampleRole::Validation: return "val";
        case SampleRole::Test: return "test";
    }
    return "unknown";
}

PristinePartition pristine_partition_for(int pristine_count) {
    if (pristine_count < 3) fail(ErrorKind::InsufficientData, "need at least three pristine samples");
    const int held = std::max(1, pristine_count / 10);
    return {pristine_count - 2 * held, held, held};
}

SplitSpec make_split(SplitName name, const DamageCatalog& catalog, int pristine_count) {
    SplitSpec spec;
    spec.name = name;
    spec.test_damage_labels = {"D21", "D22", "D23", "D24"};
    if (name == SplitName::B) spec.test_damage_labels.insert(spec.test_damage_labels.begin(), {"D1", "D2", "D3", "D4"});
    for (const auto& label : spec.test_damage_labels)
        if (!catalog.contains(label)) fail(ErrorKind::Catalog, "split " + to_string(name) + " needs label " + label);
    const std::set<std::string> test(spec.test_damage_labels.begin(), spec.test_damage_labels.end());
    for (const auto& e : catalog.entries())
        if (!test.contains(e.label)) spec.train_damage_labels.push_back(e.label);
    spec.pristine_partition = pristine_partition_for(pristine_count);
    return spec;
}

int validation_reserve_count(int pool_size) {
    if (pool_size < 3) fail(ErrorKind::InsufficientData, "train pool too small to reserve validation samples");
    const int reserve = std::max(2, (pool_size + 4) / 5);
    return std::min(reserve, pool_size - 1);
}

std::vector<std::string> SplitAssignment::train_ids() const {
    std::vector<std::string> ids = train_damaged;
    ids.insert(ids.end(), train_pristine.begin(), train_pristine.end());
    return ids;
}

std::optional<SampleRole> SplitAssignment::role_of(const std::string& id) const {
    auto in = [&](const std::vector<std::string>& v) { return std::find(v.begin(), v.end(), id) != v.end(); };
    if (in(train_damaged) || in(train_pristine)) return SampleRole::Train;
    if (in(val_damaged) || in(val_pristine)) return SampleRole::Validation;
    if (in(test_damaged) || in(test_pristine)) return SampleRole::Test;
    return std::nullopt;
}

SplitAssignment assign_samples(const SplitSpec& spec, const std::vector<SampleRef>& samples, std::uint64_t seed) {
    const std::set<std::string> test(spec.test_damage_labels.begin(), spec.test_damage_labels.end());
    const std::set<std::string> pool(spec.train_damage_labels.begin(), spec.train_damage_labels.end());

    SplitAssignment out;
    out.spec = spec;
    std::vector<std::string> pool_ids, pristine_ids;
    for (const auto& s : samples) {
        if (!s.damage_label) {
            pristine_ids.push_back(s.id);
        } else if (test.contains(*s.damage_label)) {
            out.test_damaged.push_back(s.id);
        } else if (pool.contains(*s.damage_label)) {
            pool_ids.push_back(s.id);
        } else {
            fail(ErrorKind::Catalog, "sample " + s.id + " has label " + *s.damage_label + " outside the split");
        }
    }
    std::sort(pool_ids.begin(), pool_ids.end());
    std::sort(pristine_ids.begin(), pristine_ids.end());
    std::sort(out.test_damaged.begin(), out.test_damaged.end());

    if (static_cast<int>(pristine_ids.size()) != spec.pristine_partition.total())
        fail(ErrorKind::Data, "split expects " + std::to_string(spec.pristine_partition.total()) +
                                  " pristine samples, store has " + std::to_string(pristine_ids.size()));

    seeded_shuffle(pool_ids, mix_seed(seed, 0x7661'6c69'6461'7465ULL));
    const int reserve = validation_reserve_count(static_cast<int>(pool_ids.size()));
    out.val_damaged.assign(pool_ids.begin(), pool_ids.begin() + reserve);
    out.train_damaged.assign(pool_ids.begin() + reserve, pool_ids.end());

    seeded_shuffle(pristine_ids, mix_seed(seed, 0x7072'6973'7469'6e65ULL));
    const auto& part = spec.pristine_partition;
    out.train_pristine.assign(pristine_ids.begin(), pristine_ids.begin() + part.train);
    out.val_pristine.assign(pristine_ids.begin() + part.train, pristine_ids.begin() + part.train + part.val);
    out.test_pristine.assign(pristine_ids.begin() + part.train + part.val, pristine_ids.end());

    for (auto* v : {&out.train_damaged, &out.val_damaged, &out.train_pristine, &out.val_pristine, &out.test_pristine})
        std::sort(v->begin(), v->end());
    return out;
}

nlohmann::json assignment_to_json(const SplitAssignment& a) {
    return {{"split", to_string(a.spec.name)},
            {"test_damage_labels", a.spec.test_damage_labels},
            {"train_damage_labels", a.spec.train_damage_labels},
            {"pristine_partition", {a.spec.pristine_partition.train, a.spec.pristine_partition.val,
                                    a.spec.pristine_partition.test}},
            {"train_damaged", a.train_damaged},
            {"val_damaged", a.val_damaged},
            {"test_damaged", a.test_damaged},
            {"train_pristine", a.train_pristine},
            {"val_pristine", a.val_pristine},
            {"test_pristine", a.test_pristine}};
}

SplitAssignment assignment_from_json(const nlohmann::json& j) {
    SplitAssignment a;
    try {
        a.spec.name = parse_split_name(j.at("split").get<std::string>());
        a.spec.test_damage_labels = j.at("test_damage_labels").get<std::vector<std::string>>();
        a.spec.train_damage_labels = j.at("train_damage_labels").get<std::vector<std::string>>();
        const auto part = j.at("pristine_partition").get<std::vector<int>>();
        if (part.size() != 3) fail(ErrorKind::Schema, "pristine_partition must have three counts");
        a.spec.pristine_partition = {part[0], part[1], part[2]};
        a.train_damaged = j.at("train_damaged").get<std::vector<std::string>>();
        a.val_damaged = j.at("val_damaged").get<std::vector<std::string>>();
        a.test_damaged = j.at("test_damaged").get<std::vector<std::string>>();
        a.train_pristine = j.at("train_pristine").get<std::vector<std::string>>();
        a.val_pristine = j.at("val_pristine").get<std::vector<std::string>>();
        a.test_pristine = j.at("test_pristine").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Schema, std::string("split assignment: ") + e.what());
    }
    return a;
}

}  // namespace wgn
