#pragma once

#include <cstdint>
#include <filesystem>
#include <random>

#include <nlohmann/json.hpp>

#include "wgn/geometry.hpp"
#include "wgn/signal_prep.hpp"

namespace wgn {

/// Desk-scale dataset generator with a known forward mechanism: a defect at
/// p shadows path (i,j) by exp(-d^2 / 2 sigma^2), d the distance from p to
/// the segment r_i r_j. The deviation scales a band-limited scattered wave
/// packet added on top of a pristine direct arrival.
struct SyntheticConfig {
    LayoutMetadata layout;
    double sigma = 0.05;
    double noise_level = 0.002;
    double baseline_jitter = 0.001;
    int samples_per_location = 1;
    int pristine_count = 60;
    int time_samples = 1024;
    double sampling_rate_hz = 1e6;
    double excitation_hz = 100e3;
    double bump_center_hz = 100e3;
    double bump_width_hz = 15e3;
    double damage_amplitude = 0.2;
    double wave_speed_mps = 2000.0;
    double pretrigger_s = 50e-6;

    void validate() const;
    nlohmann::json to_json() const;
};

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) noexcept;

/// 28 defects on a 7 x 4 grid (x 0.14..0.86, y 0.2..0.8). D1-D4 is the
/// lower-left 2x2 block and D21-D24 the upper-right one, so both hold-out
/// splits apply; the other labels fill the remaining cells row by row.
/// Every held-out cell has trained neighbours, which keeps the paths around
/// the corners excited during training.
DamageCatalog grid_damage_catalog();

/// True (pre-normalization) deviation of every measured path for a defect at p.
Eigen::VectorXd true_deviation(const SyntheticConfig& cfg, const PathSet& paths, Vec2 p);

/// Standard normal draw from raw mt19937_64 output (Box-Muller), identical
/// across standard libraries.
double standard_normal(std::mt19937_64& rng);

/// One synthetic acquisition. `label` empty -> pristine.
RawSample synthesize_sample(const SyntheticConfig& cfg, const PathSet& paths, const SampleLabel& label,
                            const std::string& id, std::uint64_t stream_seed);

/// Writes a canonical store at `root` plus `oracle.json` holding the true
/// deviation per sample (all paths and forward paths).
void generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed, const std::filesystem::path& root);

}  // namespace wgn
