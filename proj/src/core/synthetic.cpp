#include "wgn/synthetic.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <mutex>
#include <numbers>

#include "wgn/error.hpp"
#include "wgn/hashing.hpp"
#include "wgn/store.hpp"

namespace wgn {

void SyntheticConfig::validate() const {
    layout.layout.validate();
    if (!(sigma > 0.0)) fail(ErrorKind::Config, "synthetic sigma must be positive");
    if (!(noise_level >= 0.0) || !(baseline_jitter >= 0.0)) fail(ErrorKind::Config, "noise levels must be >= 0");
    if (samples_per_location < 1) fail(ErrorKind::Config, "samples_per_location must be >= 1");
    if (pristine_count < 3) fail(ErrorKind::Config, "need at least three pristine samples");
    if (time_samples < 16) fail(ErrorKind::Config, "time_samples too small");
    if (!(sampling_rate_hz > 2.0 * (bump_center_hz + 5.0 * bump_width_hz)))
        fail(ErrorKind::Config, "sampling rate too low for the synthetic band");
    if (!(wave_speed_mps > 0.0)) fail(ErrorKind::Config, "wave speed must be positive");
}

nlohmann::json SyntheticConfig::to_json() const {
    return {{"sigma", sigma},
            {"noise_level", noise_level},
            {"baseline_jitter", baseline_jitter},
            {"samples_per_location", samples_per_location},
            {"pristine_count", pristine_count},
            {"time_samples", time_samples},
            {"sampling_rate_hz", sampling_rate_hz},
            {"excitation_hz", excitation_hz},
            {"bump_center_hz", bump_center_hz},
            {"bump_width_hz", bump_width_hz},
            {"damage_amplitude", damage_amplitude},
            {"wave_speed_mps", wave_speed_mps},
            {"pretrigger_s", pretrigger_s}};
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) noexcept {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return distance(p, {a.x + t * dx, a.y + t * dy});
}

DamageCatalog grid_damage_catalog() {
    const auto cell = [](int i, int j) { return Vec2{0.14 + 0.12 * i, 0.2 + 0.2 * j}; };
    const std::vector<std::pair<int, int>> lower_left = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    const std::vector<std::pair<int, int>> upper_right = {{5, 2}, {6, 2}, {5, 3}, {6, 3}};
    std::vector<std::pair<int, int>> rest;
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 7; ++i) {
            const std::pair<int, int> c{i, j};
            if (std::find(lower_left.begin(), lower_left.end(), c) == lower_left.end() &&
                std::find(upper_right.begin(), upper_right.end(), c) == upper_right.end())
                rest.push_back(c);
        }
    std::vector<std::pair<int, int>> order = lower_left;
    order.insert(order.end(), rest.begin(), rest.begin() + 16);
    order.insert(order.end(), upper_right.begin(), upper_right.end());
    order.insert(order.end(), rest.begin() + 16, rest.end());
    std::vector<DamageEntry> entries;
    for (std::size_t k = 0; k < order.size(); ++k)
        entries.push_back({"D" + std::to_string(k + 1), cell(order[k].first, order[k].second)});
    return DamageCatalog(std::move(entries));
}

Eigen::VectorXd true_deviation(const SyntheticConfig& cfg, const PathSet& paths, Vec2 p) {
    const auto& r = cfg.layout.layout.coordinates;
    Eigen::VectorXd dev(paths.size());
    for (int k = 0; k < paths.size(); ++k) {
        const double d = point_segment_distance(p, r[paths.pairs[k].i], r[paths.pairs[k].j]);
        dev[k] = std::exp(-d * d / (2.0 * cfg.sigma * cfg.sigma));
    }
    return dev;
}

double standard_normal(std::mt19937_64& rng) {
    auto unit = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };  // (0,1)
    const double u1 = unit();
    const double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

std::mutex g_plan_mutex;

// x[t] = sum_k amp_k cos(2 pi k t / n + phase_k), via one c2r transform.
Eigen::VectorXd synthesize_cosines(int n, const std::vector<std::complex<double>>& half_spectrum) {
    std::vector<std::complex<double>> spec = half_spectrum;
    std::vector<double> out(static_cast<std::size_t>(n));
    fftw_plan plan;
    {
        std::lock_guard lock(g_plan_mutex);
        plan = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(spec.data()), out.data(), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(g_plan_mutex);
        fftw_destroy_plan(plan);
    }
    return Eigen::Map<Eigen::VectorXd>(out.data(), n);
}

}  // namespace

RawSample synthesize_sample(const SyntheticConfig& cfg, const PathSet& paths, const SampleLabel& label,
                            const std::string& id, std::uint64_t stream_seed) {
    const int n = cfg.time_samples;
    const double fs = cfg.sampling_rate_hz;
    const double side_m = cfg.layout.plate.side_length_mm / 1000.0;
    const auto& r = cfg.layout.layout.coordinates;
    std::mt19937_64 rng(stream_seed);

    RawSample s;
    s.id = id;
    s.label = label;
    s.sampling_rate_hz = fs;
    s.excitation_freq_hz = cfg.excitation_hz;
    s.signals = SignalMatrix::Zero(n, paths.size());

    const double cycles = 5.0;
    const double burst_len = cycles / cfg.excitation_hz;
    Eigen::VectorXd dev = label.coordinate ? true_deviation(cfg, paths, *label.coordinate)
                                           : Eigen::VectorXd::Zero(paths.size());

    for (int k = 0; k < paths.size(); ++k) {
        const Vec2 ri = r[paths.pairs[k].i], rj = r[paths.pairs[k].j];
        const double path_len = distance(ri, rj);
        const double gain = 1.0 / (0.5 + path_len);
        const double jitter = 1.0 + cfg.baseline_jitter * standard_normal(rng);
        const double arrival = cfg.pretrigger_s + path_len * side_m / cfg.wave_speed_mps;
        auto col = s.signals.col(k);
        for (int t = 0; t < n; ++t) {
            const double local = t / fs - arrival;
            if (local < 0.0 || local > burst_len) continue;
            const double window = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * local / burst_len));
            col[t] = jitter * gain * window * std::sin(2.0 * std::numbers::pi * cfg.excitation_hz * local);
        }

        if (label.coordinate && dev[k] > 0.0) {
            const Vec2 p = *label.coordinate;
            const double delay = cfg.pretrigger_s + (distance(p, ri) + distance(p, rj)) * side_m / cfg.wave_speed_mps;
            std::vector<std::complex<double>> half(static_cast<std::size_t>(n / 2 + 1));
            for (int b = 1; b < n / 2; ++b) {
                const double f = b * fs / n;
                const double z = (f - cfg.bump_center_hz) / cfg.bump_width_hz;
                if (std::abs(z) > 6.0) continue;
                const double amp = cfg.damage_amplitude * dev[k] * std::exp(-0.5 * z * z);
                half[b] = std::polar(0.5 * amp, -2.0 * std::numbers::pi * f * delay);
            }
            col += synthesize_cosines(n, half);
        }
        if (cfg.noise_level > 0.0)
            for (int t = 0; t < n; ++t) col[t] += cfg.noise_level * standard_normal(rng);
    }
    return s;
}

void generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed, const std::filesystem::path& root) {
    cfg.validate();
    const PathSet paths = enumerate_paths(cfg.layout.layout.size());
    const ForwardPathSet fwd = select_forward_paths(paths, cfg.layout.layout);

    StoreWriter writer(root, cfg.layout);
    nlohmann::json oracle;
    oracle["sigma"] = cfg.sigma;
    oracle["samples"] = nlohmann::json::object();
    std::uint64_t stream = 0;
    char buf[64];
    for (const auto& entry : cfg.layout.catalog.entries()) {
        for (int rep = 0; rep < cfg.samples_per_location; ++rep) {
            std::snprintf(buf, sizeof buf, "damaged_%s_r%d", entry.label.c_str(), rep);
            SampleLabel label{entry.label, entry.position};
            const RawSample s = synthesize_sample(cfg, paths, label, buf, mix_seed(seed, stream++));
            writer.add(s);
            const Eigen::VectorXd dev = true_deviation(cfg, paths, entry.position);
            std::vector<double> fdev;
            for (int idx : fwd.path_index) fdev.push_back(dev[idx]);
            oracle["samples"][s.id] = {{"deviation", std::vector<double>(dev.data(), dev.data() + dev.size())},
                                       {"forward_deviation", fdev}};
        }
    }
    for (int k = 0; k < cfg.pristine_count; ++k) {
        std::snprintf(buf, sizeof buf, "pristine_%03d", k);
        const RawSample s = synthesize_sample(cfg, paths, SampleLabel{}, buf, mix_seed(seed, stream++));
        writer.add(s);
        oracle["samples"][s.id] = {{"deviation", std::vector<double>(static_cast<std::size_t>(paths.size()), 0.0)},
                                   {"forward_deviation", std::vector<double>(static_cast<std::size_t>(fwd.size()), 0.0)}};
    }
    write_json_file(writer.staging_dir() / "oracle.json", oracle);
    writer.commit({{"source", "synthetic"}, {"seed", seed}, {"synthetic_config", cfg.to_json()}});
}

}  // namespace wgn
