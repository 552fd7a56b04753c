#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wgn/geometry.hpp"

namespace wgn {

/// Column-major T x |P| matrix, one column per canonical path.
using SignalMatrix = Eigen::MatrixXd;

struct SampleLabel {
    std::optional<std::string> damage_label;  // empty for pristine
    std::optional<Vec2> coordinate;

    bool damaged() const noexcept { return coordinate.has_value(); }
    /// Regression target: defect coordinate, or the no-damage target.
    Vec2 target() const noexcept { return coordinate.value_or(kNoDamageTarget); }
};

struct RawSample {
    std::string id;
    SignalMatrix signals;
    SampleLabel label;
    double sampling_rate_hz = 0.0;
    double excitation_freq_hz = 100e3;

    void validate(int path_count) const;
};

// ---------------------------------------------------------------- filtering

/// One biquad in transposed direct form II: b0 b1 b2 / 1 a1 a2.
struct Biquad {
    double b0, b1, b2, a1, a2;
};

struct SosFilter {
    std::vector<Biquad> sections;

    /// Complex response magnitude at frequency f (digital, sampling fs).
    double magnitude(double f_hz, double fs_hz) const;
};

/// Digital Butterworth high-pass via prewarped bilinear transform.
SosFilter design_butterworth_highpass(int order, double cutoff_hz, double fs_hz);

/// Zero-phase forward-backward filtering with odd-extension padding and
/// steady-state initial conditions (same construction as scipy's sosfiltfilt).
Eigen::VectorXd filtfilt(const SosFilter& filter, const Eigen::VectorXd& x);

RawSample highpass_filter(const RawSample& sample, int order = 3, double cutoff_hz = 20e3);

// ---------------------------------------------------------------- baseline

struct BaselineSet {
    SignalMatrix mean_signals;          // T x |P|
    Eigen::MatrixXd mean_abs_amplitudes;  // K x |P|, filled once normalization is fit
};

BaselineSet compute_baseline(std::span<const RawSample> pristine_train);

SignalMatrix differential(const RawSample& sample, const BaselineSet& baseline);

// ---------------------------------------------------------------- spectra

struct BandSelection {
    std::vector<int> bins;
    std::vector<double> freqs_hz;
    int nfft = 0;
    double sampling_rate_hz = 0.0;

    int size() const noexcept { return static_cast<int>(bins.size()); }
};

/// Contiguous run of bins whose centers lie in [low, high], truncated or
/// extended upward to exactly `count` bins starting from the low edge.
BandSelection select_band(double sampling_rate_hz, int nfft, double low_hz, double high_hz, int count);

/// Per-path amplitude and phase at the selected bins (K x |P| each).
struct Spectrum {
    Eigen::MatrixXd amplitude;
    Eigen::MatrixXd phase;
};

/// One-sided DFT per column, amplitude scaled by 2/T so a unit cosine on a
/// bin centre reads 1. Phase in (-pi, pi]; exactly-zero bins report 0.
Spectrum compute_spectrum(const SignalMatrix& diff, const BandSelection& band);

struct NormalizationStats {
    Eigen::MatrixXd mean;  // K x |P|
    Eigen::MatrixXd std;   // K x |P|, floored
    double e_max = 0.0;
    int floored_entries = 0;
};

inline constexpr double kStdFloor = 1e-8;

/// Per-path descriptor: [z-scored amplitudes (K), phases (K)] per column,
/// i.e. a 2K x |P| matrix. Without stats the amplitudes are left raw.
Eigen::MatrixXd spectral_descriptor(const Spectrum& spectrum, const NormalizationStats* stats);

/// |z-scored amplitude| per (bin, path): the absolute normalized amplitude.
Eigen::MatrixXd abs_normalized_amplitude(const Spectrum& spectrum, const NormalizationStats& stats);

/// Fits per-(bin, path) mean/std over the training spectra, the pristine
/// reference mean |normalized amplitude| (written into baseline), and E_max
/// over training samples and forward paths.
NormalizationStats fit_normalization(std::span<const Spectrum> train, std::span<const bool> train_is_pristine,
                                     const ForwardPathSet& fwd_paths, BaselineSet& baseline);

/// Unnormalized positive mean deviation per forward path (before /E_max).
Eigen::VectorXd raw_energy_deviation(const Eigen::MatrixXd& abs_normalized, const Eigen::MatrixXd& mean_abs_pristine,
                                     const ForwardPathSet& fwd_paths);

/// Delta E in [0,1] per forward path.
Eigen::VectorXd energy_deviation(const Eigen::MatrixXd& abs_normalized, const Eigen::MatrixXd& mean_abs_pristine,
                                 double e_max, const ForwardPathSet& fwd_paths);

}  // namespace wgn
