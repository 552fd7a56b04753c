#include "wgn/store.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <random>

#include "wgn/error.hpp"

namespace fs = std::filesystem;

namespace wgn {

namespace {

void to_little_endian(double& v) {
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char b[sizeof(double)];
        std::memcpy(b, &v, sizeof b);
        std::reverse(b, b + sizeof b);
        std::memcpy(&v, b, sizeof b);
    }
}

}  // namespace

void write_matrix_file(const fs::path& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out.write(kMatrixMagic, sizeof kMatrixMagic);
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    } else {
        for (Eigen::Index k = 0; k < m.size(); ++k) {
            double v = m.data()[k];
            to_little_endian(v);
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
    }
    if (!out) fail(ErrorKind::Io, "short write to " + path.string());
}

Eigen::MatrixXd read_matrix_file(const fs::path& path, Eigen::Index rows, Eigen::Index cols) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    char magic[sizeof kMatrixMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMatrixMagic, sizeof magic) != 0)
        fail(ErrorKind::Schema, path.string() + " is not a canonical matrix file");
    const auto expected = static_cast<std::uintmax_t>(rows * cols) * sizeof(double) + sizeof kMatrixMagic;
    if (fs::file_size(path) != expected)
        fail(ErrorKind::Schema, path.string() + " size does not match shape " + std::to_string(rows) + "x" +
                                    std::to_string(cols));
    Eigen::MatrixXd m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) fail(ErrorKind::Io, "short read from " + path.string());
    if constexpr (std::endian::native == std::endian::big)
        for (Eigen::Index k = 0; k < m.size(); ++k) to_little_endian(m.data()[k]);
    return m;
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) fail(ErrorKind::Io, "short write to " + path.string());
}

nlohmann::json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Schema, path.string() + ": " + e.what());
    }
}

nlohmann::json sample_sidecar(const RawSample& sample, const std::string& split_hint) {
    nlohmann::json j;
    j["label"] = sample.label.damaged() ? "damaged" : "pristine";
    j["damage_label"] = sample.label.damage_label ? nlohmann::json(*sample.label.damage_label) : nlohmann::json(nullptr);
    if (sample.label.coordinate)
        j["coordinate"] = {sample.label.coordinate->x, sample.label.coordinate->y};
    else
        j["coordinate"] = nullptr;
    j["sampling_rate_hz"] = sample.sampling_rate_hz;
    j["excitation_freq_hz"] = sample.excitation_freq_hz;
    j["split_hint"] = split_hint;
    j["rows"] = sample.signals.rows();
    j["cols"] = sample.signals.cols();
    j["dtype"] = "float64-le";
    j["order"] = "column-major";
    return j;
}

namespace {

StoreEntry entry_from_sidecar(const std::string& id, const nlohmann::json& j) {
    StoreEntry e;
    e.id = id;
    try {
        const auto kind = j.at("label").get<std::string>();
        if (kind == "damaged") {
            e.label.damage_label = j.at("damage_label").get<std::string>();
            const auto& c = j.at("coordinate");
            e.label.coordinate = Vec2{c.at(0).get<double>(), c.at(1).get<double>()};
        } else if (kind != "pristine") {
            fail(ErrorKind::Schema, "sample " + id + ": label must be damaged or pristine");
        }
        e.sampling_rate_hz = j.at("sampling_rate_hz").get<double>();
        e.excitation_freq_hz = j.at("excitation_freq_hz").get<double>();
        e.rows = j.at("rows").get<Eigen::Index>();
        e.cols = j.at("cols").get<Eigen::Index>();
    } catch (const nlohmann::json::exception& ex) {
        fail(ErrorKind::Schema, "sample " + id + " sidecar: " + ex.what());
    }
    return e;
}

}  // namespace

SampleStore SampleStore::open(const fs::path& root) {
    const fs::path manifest_path = root / "manifest.json";
    if (!fs::exists(manifest_path)) fail(ErrorKind::Io, "no store manifest at " + manifest_path.string());
    SampleStore store;
    store.root_ = root;
    store.manifest_ = read_json_file(manifest_path);
    store.layout_ = layout_from_json(store.manifest_.at("layout"));
    for (const auto& id : store.manifest_.at("samples")) {
        const auto sid = id.get<std::string>();
        store.entries_.push_back(entry_from_sidecar(sid, read_json_file(root / "samples" / (sid + ".json"))));
    }
    return store;
}

const StoreEntry& SampleStore::entry(const std::string& id) const {
    for (const auto& e : entries_)
        if (e.id == id) return e;
    fail(ErrorKind::Data, "sample " + id + " not in store " + root_.string());
}

RawSample SampleStore::load(const std::string& id) const {
    const auto& e = entry(id);
    RawSample s;
    s.id = id;
    s.label = e.label;
    s.sampling_rate_hz = e.sampling_rate_hz;
    s.excitation_freq_hz = e.excitation_freq_hz;
    s.signals = read_matrix_file(root_ / "samples" / (id + ".bin"), e.rows, e.cols);
    return s;
}

std::vector<SampleRef> SampleStore::refs() const {
    std::vector<SampleRef> out;
    for (const auto& e : entries_) out.push_back({e.id, e.label.damage_label});
    return out;
}

int SampleStore::pristine_count() const {
    return static_cast<int>(std::count_if(entries_.begin(), entries_.end(), [](auto& e) { return !e.label.damaged(); }));
}

// ------------------------------------------------------------------ writer

StoreWriter::StoreWriter(fs::path root, LayoutMetadata layout) : root_(std::move(root)), layout_(std::move(layout)) {
    std::random_device rd;
    const fs::path parent = root_.has_parent_path() ? root_.parent_path() : fs::current_path();
    fs::create_directories(parent);
    staging_ = parent / (root_.filename().string() + ".staging-" + std::to_string(rd()));
    fs::create_directories(staging_ / "samples");
}

StoreWriter::~StoreWriter() {
    if (!committed_) {
        std::error_code ec;
        fs::remove_all(staging_, ec);
    }
}

void StoreWriter::add(const RawSample& sample, const std::string& split_hint) {
    if (std::find(ids_.begin(), ids_.end(), sample.id) != ids_.end())
        fail(ErrorKind::Data, "duplicate sample id " + sample.id);
    write_matrix_file(staging_ / "samples" / (sample.id + ".bin"), sample.signals);
    write_json_file(staging_ / "samples" / (sample.id + ".json"), sample_sidecar(sample, split_hint));
    ids_.push_back(sample.id);
}

void StoreWriter::commit(const nlohmann::json& extra) {
    std::vector<std::string> ids = ids_;
    std::sort(ids.begin(), ids.end());
    nlohmann::json manifest = extra;
    manifest["format"] = "wgn-store/1";
    manifest["layout"] = layout_to_json(layout_);
    manifest["samples"] = ids;
    write_json_file(staging_ / "manifest.json", manifest);
    std::error_code ec;
    fs::remove_all(root_, ec);
    fs::rename(staging_, root_);
    committed_ = true;
}

}  // namespace wgn
