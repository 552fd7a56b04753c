#include "wgn/prep.hpp"

#include <algorithm>
#include <memory>

#include "wgn/error.hpp"
#include "wgn/hashing.hpp"
#include "wgn/log.hpp"
#include "wgn/store.hpp"

namespace fs = std::filesystem;

namespace wgn {

void PrepConfig::validate() const {
    if (filter_order < 1) fail(ErrorKind::Config, "filter order must be >= 1");
    if (!(cutoff_hz > 0.0)) fail(ErrorKind::Config, "cutoff must be positive");
    if (!(band_low_hz >= 0.0) || !(band_high_hz >= band_low_hz)) fail(ErrorKind::Config, "bad band edges");
    if (bins < 1) fail(ErrorKind::Config, "bins must be >= 1");
    if (nfft < 0) fail(ErrorKind::Config, "nfft must be >= 0");
}

nlohmann::json PrepConfig::to_json() const {
    return {{"filter_order", filter_order}, {"cutoff_hz", cutoff_hz}, {"band_low_hz", band_low_hz},
            {"band_high_hz", band_high_hz}, {"bins", bins},           {"nfft", nfft}};
}

PrepConfig PrepConfig::from_json(const nlohmann::json& j) {
    PrepConfig c;
    c.filter_order = j.value("filter_order", c.filter_order);
    c.cutoff_hz = j.value("cutoff_hz", c.cutoff_hz);
    c.band_low_hz = j.value("band_low_hz", c.band_low_hz);
    c.band_high_hz = j.value("band_high_hz", c.band_high_hz);
    c.bins = j.value("bins", c.bins);
    c.nfft = j.value("nfft", c.nfft);
    c.validate();
    return c;
}

std::vector<const PreparedSample*> PreparedDataset::select(SampleRole role) const {
    std::vector<const PreparedSample*> out;
    for (const auto& s : samples)
        if (s.role == role) out.push_back(&s);
    return out;
}

std::vector<const PreparedSample*> PreparedDataset::select(SampleRole role, bool damaged) const {
    std::vector<const PreparedSample*> out;
    for (const auto& s : samples)
        if (s.role == role && s.label.damaged() == damaged) out.push_back(&s);
    return out;
}

const PreparedSample& PreparedDataset::sample(const std::string& id) const {
    for (const auto& s : samples)
        if (s.id == id) return s;
    fail(ErrorKind::Data, "sample " + id + " not in prepared dataset");
}

nlohmann::json PreparedDataset::summary() const {
    return {{"config", config.to_json()},
            {"band_bins", band.bins},
            {"band_hz", {band.freqs_hz.front(), band.freqs_hz.back()}},
            {"nfft", band.nfft},
            {"sampling_rate_hz", band.sampling_rate_hz},
            {"e_max", stats.e_max},
            {"floored_std_entries", stats.floored_entries},
            {"counts",
             {{"train_damaged", assignment.train_damaged.size()},
              {"val_damaged", assignment.val_damaged.size()},
              {"test_damaged", assignment.test_damaged.size()},
              {"train_pristine", assignment.train_pristine.size()},
              {"val_pristine", assignment.val_pristine.size()},
              {"test_pristine", assignment.test_pristine.size()}}}};
}

PreparedDataset prepare_dataset(const SampleStore& store, SplitName split, std::uint64_t seed,
                                const PrepConfig& config) {
    config.validate();
    PreparedDataset out;
    out.config = config;
    out.seed = seed;
    out.layout = store.layout();
    out.paths = enumerate_paths(out.layout.layout.size());
    out.forward_paths = select_forward_paths(out.paths, out.layout.layout);
    const SplitSpec spec = make_split(split, out.layout.catalog, store.pristine_count());
    out.assignment = assign_samples(spec, store.refs(), seed);

    std::vector<std::string> ids;
    for (const auto& e : store.entries())
        if (out.assignment.role_of(e.id)) ids.push_back(e.id);
    if (ids.empty()) fail(ErrorKind::InsufficientData, "store has no samples for the split");

    auto load_filtered = [&](const std::string& id) {
        RawSample s = store.load(id);
        s.validate(out.paths.size());
        return highpass_filter(s, config.filter_order, config.cutoff_hz);
    };

    // Pass 1: pristine reference signal from training pristine samples only.
    BaselineSet baseline;
    {
        std::vector<RawSample> pristine;
        for (const auto& id : out.assignment.train_pristine) pristine.push_back(load_filtered(id));
        baseline = compute_baseline(pristine);
    }
    const auto t_len = static_cast<int>(baseline.mean_signals.rows());
    const double fs = store.entry(ids.front()).sampling_rate_hz;
    out.band = select_band(fs, config.nfft > 0 ? config.nfft : t_len, config.band_low_hz, config.band_high_hz,
                           config.bins);

    // Pass 2: spectra of every sample in the split.
    std::vector<Spectrum> spectra;
    spectra.reserve(ids.size());
    for (const auto& id : ids) {
        const RawSample s = load_filtered(id);
        if (s.sampling_rate_hz != fs) fail(ErrorKind::Data, "sample " + id + " has a different sampling rate");
        spectra.push_back(compute_spectrum(differential(s, baseline), out.band));
        PreparedSample p;
        p.id = id;
        p.role = *out.assignment.role_of(id);
        p.label = s.label;
        out.samples.push_back(std::move(p));
    }

    std::vector<Spectrum> train;
    std::vector<std::size_t> train_idx;
    for (std::size_t k = 0; k < ids.size(); ++k)
        if (out.samples[k].role == SampleRole::Train) {
            train.push_back(spectra[k]);
            train_idx.push_back(k);
        }
    auto is_pristine = std::make_unique<bool[]>(train.size());
    for (std::size_t t = 0; t < train.size(); ++t) is_pristine[t] = !out.samples[train_idx[t]].label.damaged();
    out.stats = fit_normalization(train, {is_pristine.get(), train.size()}, out.forward_paths, baseline);
    out.mean_abs_pristine = baseline.mean_abs_amplitudes;

    for (std::size_t k = 0; k < ids.size(); ++k) {
        out.samples[k].descriptor = spectral_descriptor(spectra[k], &out.stats);
        out.samples[k].delta_e = energy_deviation(abs_normalized_amplitude(spectra[k], out.stats),
                                                  out.mean_abs_pristine, out.stats.e_max, out.forward_paths);
    }
    return out;
}

std::string prep_cache_key(const SampleStore& store, SplitName split, std::uint64_t seed, const PrepConfig& config) {
    const nlohmann::json key = {{"store", sha256_hex(store.manifest().dump())},
                                {"split", to_string(split)},
                                {"seed", seed},
                                {"config", config.to_json()},
                                {"format", "wgn-prep/1"}};
    return sha256_hex(key.dump());
}

namespace {

nlohmann::json label_json(const SampleLabel& l) {
    if (!l.damaged()) return nullptr;
    return {{"damage_label", l.damage_label.value_or("")}, {"coordinate", {l.coordinate->x, l.coordinate->y}}};
}

SampleLabel label_from(const nlohmann::json& j) {
    SampleLabel l;
    if (j.is_null()) return l;
    l.damage_label = j.at("damage_label").get<std::string>();
    l.coordinate = Vec2{j.at("coordinate").at(0).get<double>(), j.at("coordinate").at(1).get<double>()};
    return l;
}

SampleRole role_from(const std::string& s) {
    if (s == "train") return SampleRole::Train;
    if (s == "val") return SampleRole::Validation;
    if (s == "test") return SampleRole::Test;
    fail(ErrorKind::Schema, "unknown sample role " + s);
}

}  // namespace

void save_prepared(const PreparedDataset& data, const std::string& key, const fs::path& dir) {
    const fs::path staging = dir.parent_path() / (dir.filename().string() + ".staging");
    fs::remove_all(staging);
    fs::create_directories(staging);
    const auto n = static_cast<Eigen::Index>(data.samples.size());
    const auto k2 = data.samples.front().descriptor.rows();
    const auto p = data.samples.front().descriptor.cols();
    const auto f = data.forward_paths.size();
    Eigen::MatrixXd desc(k2 * p, n), de(f, n);
    nlohmann::json samples = nlohmann::json::array();
    for (Eigen::Index s = 0; s < n; ++s) {
        const auto& ps = data.samples[s];
        desc.col(s) = Eigen::Map<const Eigen::VectorXd>(ps.descriptor.data(), k2 * p);
        de.col(s) = ps.delta_e;
        samples.push_back({{"id", ps.id}, {"role", to_string(ps.role)}, {"label", label_json(ps.label)}});
    }
    write_matrix_file(staging / "descriptors.bin", desc);
    write_matrix_file(staging / "delta_e.bin", de);
    write_matrix_file(staging / "amp_mean.bin", data.stats.mean);
    write_matrix_file(staging / "amp_std.bin", data.stats.std);
    write_matrix_file(staging / "mean_abs_pristine.bin", data.mean_abs_pristine);
    nlohmann::json meta = data.summary();
    meta["key"] = key;
    meta["seed"] = data.seed;
    meta["layout"] = layout_to_json(data.layout);
    meta["assignment"] = assignment_to_json(data.assignment);
    meta["samples"] = samples;
    meta["band_freqs_hz"] = data.band.freqs_hz;
    meta["shape"] = {{"descriptor_rows", k2}, {"paths", p}, {"forward_paths", f}, {"samples", n}};
    write_json_file(staging / "prep.json", meta);
    std::error_code ec;
    fs::remove_all(dir, ec);
    fs::rename(staging, dir);
}

PreparedDataset load_prepared(const fs::path& dir) {
    const nlohmann::json meta = read_json_file(dir / "prep.json");
    PreparedDataset d;
    try {
        d.config = PrepConfig::from_json(meta.at("config"));
        d.seed = meta.at("seed").get<std::uint64_t>();
        d.layout = layout_from_json(meta.at("layout"));
        d.paths = enumerate_paths(d.layout.layout.size());
        d.forward_paths = select_forward_paths(d.paths, d.layout.layout);
        d.assignment = assignment_from_json(meta.at("assignment"));
        d.band.bins = meta.at("band_bins").get<std::vector<int>>();
        d.band.freqs_hz = meta.at("band_freqs_hz").get<std::vector<double>>();
        d.band.nfft = meta.at("nfft").get<int>();
        d.band.sampling_rate_hz = meta.at("sampling_rate_hz").get<double>();
        d.stats.e_max = meta.at("e_max").get<double>();
        d.stats.floored_entries = meta.at("floored_std_entries").get<int>();
        const auto& shape = meta.at("shape");
        const auto k2 = shape.at("descriptor_rows").get<Eigen::Index>();
        const auto p = shape.at("paths").get<Eigen::Index>();
        const auto f = shape.at("forward_paths").get<Eigen::Index>();
        const auto n = shape.at("samples").get<Eigen::Index>();
        const Eigen::MatrixXd desc = read_matrix_file(dir / "descriptors.bin", k2 * p, n);
        const Eigen::MatrixXd de = read_matrix_file(dir / "delta_e.bin", f, n);
        d.stats.mean = read_matrix_file(dir / "amp_mean.bin", k2 / 2, p);
        d.stats.std = read_matrix_file(dir / "amp_std.bin", k2 / 2, p);
        d.mean_abs_pristine = read_matrix_file(dir / "mean_abs_pristine.bin", k2 / 2, p);
        const auto& samples = meta.at("samples");
        if (static_cast<Eigen::Index>(samples.size()) != n) fail(ErrorKind::Schema, "prep sample count mismatch");
        for (Eigen::Index s = 0; s < n; ++s) {
            PreparedSample ps;
            ps.id = samples[s].at("id").get<std::string>();
            ps.role = role_from(samples[s].at("role").get<std::string>());
            ps.label = label_from(samples[s].at("label"));
            ps.descriptor = Eigen::Map<const Eigen::MatrixXd>(desc.col(s).data(), k2, p);
            ps.delta_e = de.col(s);
            d.samples.push_back(std::move(ps));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Schema, (dir / "prep.json").string() + ": " + e.what());
    }
    return d;
}

PreparedDataset prepare_cached(const SampleStore& store, SplitName split, std::uint64_t seed, const PrepConfig& config,
                               const fs::path& dir, bool* reused) {
    const std::string key = prep_cache_key(store, split, seed, config);
    if (fs::exists(dir / "prep.json")) {
        try {
            if (read_json_file(dir / "prep.json").value("key", "") == key) {
                PreparedDataset d = load_prepared(dir);
                if (reused) *reused = true;
                log_debug("reusing prepared data in " + dir.string());
                return d;
            }
        } catch (const Error& e) {
            log_warning("ignoring unreadable prep cache " + dir.string() + ": " + e.what());
        }
    }
    PreparedDataset d = prepare_dataset(store, split, seed, config);
    fs::create_directories(dir.parent_path());
    save_prepared(d, key, dir);
    if (reused) *reused = false;
    return d;
}

}  // namespace wgn
