#include "wgn/signal_prep.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include "wgn/error.hpp"
#include "wgn/log.hpp"

namespace wgn {

using cd = std::complex<double>;

void RawSample::validate(int path_count) const {
    if (signals.rows() <= 0) fail(ErrorKind::Data, "sample " + id + " has no time samples");
    if (signals.cols() != path_count)
        fail(ErrorKind::Schema, "sample " + id + " has " + std::to_string(signals.cols()) + " path columns, expected " +
                                    std::to_string(path_count));
    if (!(sampling_rate_hz > 0.0)) fail(ErrorKind::Data, "sample " + id + " has no sampling rate");
}

// ------------------------------------------------------------------ filter

double SosFilter::magnitude(double f_hz, double fs_hz) const {
    const cd z1 = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / fs_hz);  // z^-1
    cd h = 1.0;
    for (const auto& s : sections) {
        const cd num = s.b0 + z1 * (s.b1 + z1 * s.b2);
        const cd den = 1.0 + z1 * (s.a1 + z1 * s.a2);
        h *= num / den;
    }
    return std::abs(h);
}

SosFilter design_butterworth_highpass(int order, double cutoff_hz, double fs_hz) {
    if (order < 1) fail(ErrorKind::Config, "filter order must be >= 1");
    if (!(fs_hz > 0.0)) fail(ErrorKind::Config, "sampling rate must be positive");
    if (!(cutoff_hz > 0.0) || cutoff_hz >= fs_hz / 2.0)
        fail(ErrorKind::Config, "high-pass cutoff must lie in (0, Nyquist)");

    const double fs2 = 2.0 * fs_hz;
    const double warped = fs2 * std::tan(std::numbers::pi * cutoff_hz / fs_hz);

    SosFilter filter;
    for (int k = 0; k < order; ++k) {
        const cd proto = std::polar(1.0, std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order));
        if (proto.imag() < -1e-12) continue;  // conjugate handled with its partner
        const cd s = warped / proto;          // low-pass -> high-pass
        const cd z = (fs2 + s) / (fs2 - s);   // bilinear
        if (std::abs(proto.imag()) <= 1e-12) {
            filter.sections.push_back({1.0, -1.0, 0.0, -z.real(), 0.0});
        } else {
            filter.sections.push_back({1.0, -2.0, 1.0, -2.0 * z.real(), std::norm(z)});
        }
    }
    const double nyquist_gain = filter.magnitude(fs_hz / 2.0, fs_hz);
    auto& first = filter.sections.front();
    first.b0 /= nyquist_gain;
    first.b1 /= nyquist_gain;
    first.b2 /= nyquist_gain;
    return filter;
}

namespace {

struct SectionState {
    double z1 = 0.0, z2 = 0.0;
};

// Steady-state TDF-II state for a unit step input.
SectionState step_state(const Biquad& s) {
    const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    SectionState st;
    st.z2 = s.b2 - s.a2 * gain;
    st.z1 = s.b1 - s.a1 * gain + st.z2;
    return st;
}

double dc_gain(const Biquad& s) { return (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2); }

void run_cascade(const SosFilter& filter, std::vector<double>& x) {
    const double x0 = x.front();
    double scale = x0;
    for (const auto& s : filter.sections) {
        SectionState st = step_state(s);
        st.z1 *= scale;
        st.z2 *= scale;
        for (double& v : x) {
            const double in = v;
            const double out = s.b0 * in + st.z1;
            st.z1 = s.b1 * in - s.a1 * out + st.z2;
            st.z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
        scale *= dc_gain(s);
    }
}

}  // namespace

Eigen::VectorXd filtfilt(const SosFilter& filter, const Eigen::VectorXd& x) {
    const auto n = static_cast<int>(x.size());
    if (n == 0) return x;
    int taps = 2 * static_cast<int>(filter.sections.size()) + 1;
    const auto zero_b2 = std::count_if(filter.sections.begin(), filter.sections.end(), [](auto& s) { return s.b2 == 0.0; });
    const auto zero_a2 = std::count_if(filter.sections.begin(), filter.sections.end(), [](auto& s) { return s.a2 == 0.0; });
    taps -= static_cast<int>(std::min(zero_b2, zero_a2));
    const int pad = std::min(3 * taps, n - 1);

    std::vector<double> ext(static_cast<std::size_t>(n + 2 * pad));
    for (int k = 0; k < pad; ++k) ext[k] = 2.0 * x[0] - x[pad - k];
    for (int k = 0; k < n; ++k) ext[pad + k] = x[k];
    for (int k = 0; k < pad; ++k) ext[pad + n + k] = 2.0 * x[n - 1] - x[n - 2 - k];

    run_cascade(filter, ext);
    std::reverse(ext.begin(), ext.end());
    run_cascade(filter, ext);
    std::reverse(ext.begin(), ext.end());

    Eigen::VectorXd y(n);
    for (int k = 0; k < n; ++k) y[k] = ext[pad + k];
    return y;
}

RawSample highpass_filter(const RawSample& sample, int order, double cutoff_hz) {
    const SosFilter filter = design_butterworth_highpass(order, cutoff_hz, sample.sampling_rate_hz);
    RawSample out = sample;
    for (Eigen::Index c = 0; c < sample.signals.cols(); ++c) out.signals.col(c) = filtfilt(filter, sample.signals.col(c));
    return out;
}

// ---------------------------------------------------------------- baseline

BaselineSet compute_baseline(std::span<const RawSample> pristine_train) {
    if (pristine_train.empty()) fail(ErrorKind::InsufficientData, "baseline needs at least one pristine training sample");
    const auto& first = pristine_train.front().signals;
    BaselineSet baseline;
    baseline.mean_signals = SignalMatrix::Zero(first.rows(), first.cols());
    for (const auto& s : pristine_train) {
        if (s.signals.rows() != first.rows() || s.signals.cols() != first.cols())
            fail(ErrorKind::Data, "pristine sample " + s.id + " shape differs from the first baseline sample");
        baseline.mean_signals += s.signals;
    }
    baseline.mean_signals /= static_cast<double>(pristine_train.size());
    return baseline;
}

SignalMatrix differential(const RawSample& sample, const BaselineSet& baseline) {
    if (sample.signals.rows() != baseline.mean_signals.rows() || sample.signals.cols() != baseline.mean_signals.cols())
        fail(ErrorKind::Data, "sample " + sample.id + " shape does not match the baseline");
    return sample.signals - baseline.mean_signals;
}

// ----------------------------------------------------------------- spectra

BandSelection select_band(double sampling_rate_hz, int nfft, double low_hz, double high_hz, int count) {
    if (!(sampling_rate_hz > 0.0) || nfft < 2) fail(ErrorKind::Config, "band selection needs fs > 0 and nfft >= 2");
    if (count < 1) fail(ErrorKind::Config, "band must contain at least one bin");
    if (!(low_hz >= 0.0) || !(high_hz >= low_hz)) fail(ErrorKind::Config, "band edges must satisfy 0 <= low <= high");
    const double df = sampling_rate_hz / nfft;
    const int nyquist_bin = nfft / 2;
    const int first = static_cast<int>(std::ceil(low_hz / df - 1e-9));
    if (first > nyquist_bin || low_hz > sampling_rate_hz / 2.0)
        fail(ErrorKind::Config, "band low edge lies above the Nyquist frequency");
    if (first + count - 1 > nyquist_bin)
        fail(ErrorKind::Config, "band of " + std::to_string(count) + " bins from " + std::to_string(low_hz) +
                                    " Hz exceeds the Nyquist bin");
    const int last_in_band = std::min(nyquist_bin, static_cast<int>(std::floor(high_hz / df + 1e-9)));
    if (last_in_band - first + 1 < count)
        log_debug("band [" + std::to_string(low_hz) + ", " + std::to_string(high_hz) + "] Hz holds " +
                  std::to_string(std::max(0, last_in_band - first + 1)) + " bins; extending to " + std::to_string(count));

    BandSelection band;
    band.nfft = nfft;
    band.sampling_rate_hz = sampling_rate_hz;
    for (int k = 0; k < count; ++k) {
        band.bins.push_back(first + k);
        band.freqs_hz.push_back((first + k) * df);
    }
    return band;
}

namespace {
std::mutex g_fftw_plan_mutex;  // FFTW planning is not thread-safe
}

Spectrum compute_spectrum(const SignalMatrix& diff, const BandSelection& band) {
    const auto t_len = static_cast<int>(diff.rows());
    const int nfft = band.nfft;
    if (t_len > nfft) fail(ErrorKind::Config, "nfft shorter than the signal");
    const int out_len = nfft / 2 + 1;
    for (int b : band.bins)
        if (b < 0 || b >= out_len) fail(ErrorKind::Config, "band bin outside the spectrum");

    std::vector<double> in(static_cast<std::size_t>(nfft));
    std::vector<cd> out(static_cast<std::size_t>(out_len));
    fftw_plan plan;
    {
        std::lock_guard lock(g_fftw_plan_mutex);
        plan = fftw_plan_dft_r2c_1d(nfft, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    }

    const int k_bins = band.size();
    Spectrum spec{Eigen::MatrixXd(k_bins, diff.cols()), Eigen::MatrixXd(k_bins, diff.cols())};
    const double scale = 2.0 / t_len;
    for (Eigen::Index c = 0; c < diff.cols(); ++c) {
        std::fill(in.begin(), in.end(), 0.0);
        for (int t = 0; t < t_len; ++t) in[t] = diff(t, c);
        fftw_execute(plan);
        for (int k = 0; k < k_bins; ++k) {
            const double re = out[band.bins[k]].real();
            const double im = out[band.bins[k]].imag();
            spec.amplitude(k, c) = scale * std::hypot(re, im);
            double phase = (re == 0.0 && im == 0.0) ? 0.0 : std::atan2(im, re);
            if (phase <= -std::numbers::pi) phase = std::numbers::pi;
            spec.phase(k, c) = phase;
        }
    }
    {
        std::lock_guard lock(g_fftw_plan_mutex);
        fftw_destroy_plan(plan);
    }
    return spec;
}

Eigen::MatrixXd spectral_descriptor(const Spectrum& spectrum, const NormalizationStats* stats) {
    const auto k_bins = spectrum.amplitude.rows();
    Eigen::MatrixXd z(2 * k_bins, spectrum.amplitude.cols());
    if (stats) {
        z.topRows(k_bins) = ((spectrum.amplitude - stats->mean).array() / stats->std.array()).matrix();
    } else {
        z.topRows(k_bins) = spectrum.amplitude;
    }
    z.bottomRows(k_bins) = spectrum.phase;
    return z;
}

Eigen::MatrixXd abs_normalized_amplitude(const Spectrum& spectrum, const NormalizationStats& stats) {
    return ((spectrum.amplitude - stats.mean).array() / stats.std.array()).abs().matrix();
}

Eigen::VectorXd raw_energy_deviation(const Eigen::MatrixXd& abs_normalized, const Eigen::MatrixXd& mean_abs_pristine,
                                     const ForwardPathSet& fwd_paths) {
    if (abs_normalized.rows() != mean_abs_pristine.rows() || abs_normalized.cols() != mean_abs_pristine.cols())
        fail(ErrorKind::Data, "amplitude and pristine reference shapes differ");
    Eigen::VectorXd dev(fwd_paths.size());
    for (int f = 0; f < fwd_paths.size(); ++f) {
        const int p = fwd_paths.path_index[f];
        const double mean_dev = (abs_normalized.col(p) - mean_abs_pristine.col(p)).mean();
        dev[f] = std::max(mean_dev, 0.0);
    }
    return dev;
}

Eigen::VectorXd energy_deviation(const Eigen::MatrixXd& abs_normalized, const Eigen::MatrixXd& mean_abs_pristine,
                                 double e_max, const ForwardPathSet& fwd_paths) {
    if (!(e_max > 0.0)) fail(ErrorKind::Config, "E_max must be positive");
    Eigen::VectorXd de = raw_energy_deviation(abs_normalized, mean_abs_pristine, fwd_paths) / e_max;
    return de.cwiseMin(1.0).cwiseMax(0.0);
}

NormalizationStats fit_normalization(std::span<const Spectrum> train, std::span<const bool> train_is_pristine,
                                     const ForwardPathSet& fwd_paths, BaselineSet& baseline) {
    if (train.empty()) fail(ErrorKind::InsufficientData, "normalization needs a non-empty training partition");
    if (train.size() != train_is_pristine.size()) fail(ErrorKind::Data, "pristine mask length differs from training set");
    const auto rows = train.front().amplitude.rows();
    const auto cols = train.front().amplitude.cols();
    const double n = static_cast<double>(train.size());

    NormalizationStats stats;
    stats.mean = Eigen::MatrixXd::Zero(rows, cols);
    for (const auto& s : train) {
        if (s.amplitude.rows() != rows || s.amplitude.cols() != cols)
            fail(ErrorKind::Data, "training spectra differ in shape");
        stats.mean += s.amplitude;
    }
    stats.mean /= n;
    Eigen::MatrixXd var = Eigen::MatrixXd::Zero(rows, cols);
    for (const auto& s : train) var += (s.amplitude - stats.mean).array().square().matrix();
    stats.std = (var / n).array().sqrt().matrix();
    for (Eigen::Index k = 0; k < stats.std.size(); ++k) {
        if (!(stats.std(k) >= kStdFloor)) {
            stats.std(k) = kStdFloor;
            ++stats.floored_entries;
        }
    }
    if (stats.floored_entries > 0)
        log_warning(std::to_string(stats.floored_entries) + " amplitude std entries below 1e-8 floored");

    int pristine_count = 0;
    baseline.mean_abs_amplitudes = Eigen::MatrixXd::Zero(rows, cols);
    for (std::size_t s = 0; s < train.size(); ++s) {
        if (!train_is_pristine[s]) continue;
        baseline.mean_abs_amplitudes += abs_normalized_amplitude(train[s], stats);
        ++pristine_count;
    }
    if (pristine_count == 0) fail(ErrorKind::InsufficientData, "training partition has no pristine samples");
    baseline.mean_abs_amplitudes /= pristine_count;

    double e_max = 0.0;
    for (const auto& s : train)
        e_max = std::max(e_max, raw_energy_deviation(abs_normalized_amplitude(s, stats), baseline.mean_abs_amplitudes,
                                                     fwd_paths).maxCoeff());
    if (!(e_max > 0.0)) {
        log_warning("no positive energy deviation in the training partition; E_max floored");
        e_max = kStdFloor;
    }
    stats.e_max = e_max;
    return stats;
}

}  // namespace wgn
