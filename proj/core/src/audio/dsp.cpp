#include "melvq/audio/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "melvq/errors.hpp"

namespace melvq::audio {

namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

// Wraps an angle into (-pi, pi].
double princarg(double phase) {
    return phase - 2.0 * kPi * std::round(phase / (2.0 * kPi));
}

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

}  // namespace

std::vector<double> hann_window(int n) {
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
    }
    return w;
}

void fft_inplace(std::vector<std::complex<double>>& buf, bool inverse) {
    const std::size_t n = buf.size();
    if (n == 0 || (n & (n - 1)) != 0) throw UsageError("fft: length must be a power of two");
    // bit reversal
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(buf[i], buf[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = buf[i + k];
                const auto v = buf[i + k + len / 2] * w;
                buf[i + k] = u + v;
                buf[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        for (auto& x : buf) x /= static_cast<double>(n);
    }
}

std::vector<std::vector<std::complex<double>>> stft(const std::vector<double>& x, int n_fft,
                                                    int hop) {
    if (n_fft <= 0 || (n_fft & (n_fft - 1)) != 0) throw ConfigError("stft: n_fft must be 2^k");
    if (hop <= 0) throw ConfigError("stft: hop must be positive");
    const int n = static_cast<int>(x.size());
    if (n == 0) throw UsageError("stft: empty signal");
    const auto window = hann_window(n_fft);
    const int n_frames = 1 + n / hop;
    const int half = n_fft / 2;

    std::vector<std::vector<std::complex<double>>> frames(
        n_frames, std::vector<std::complex<double>>(half + 1));
    std::vector<std::complex<double>> buf(n_fft);
    for (int t = 0; t < n_frames; ++t) {
        const int start = t * hop - half;  // centered frames
        for (int i = 0; i < n_fft; ++i) {
            buf[i] = x[reflect_index(start + i, n)] * window[i];
        }
        fft_inplace(buf, false);
        for (int k = 0; k <= half; ++k) frames[t][k] = buf[k];
    }
    return frames;
}

Waveform resample(const Waveform& w, int target_rate) {
    if (target_rate <= 0) throw ConfigError("resample: target rate must be positive");
    if (w.sample_rate <= 0) throw UsageError("resample: source rate missing");
    Waveform out = w;
    out.sample_rate = target_rate;
    if (target_rate == w.sample_rate || w.samples.empty()) return out;

    const double ratio = static_cast<double>(target_rate) / w.sample_rate;
    const double cutoff = std::min(1.0, ratio);  // band-limit when downsampling
    const int taps = 32;
    const double span = taps / cutoff;
    const int n_in = static_cast<int>(w.samples.size());
    const auto n_out =
        static_cast<std::size_t>(std::llround(static_cast<double>(n_in) * ratio));
    out.samples.assign(n_out, 0.0);
    for (std::size_t n = 0; n < n_out; ++n) {
        const double center = static_cast<double>(n) / ratio;
        const int lo = std::max(0, static_cast<int>(std::ceil(center - span)));
        const int hi = std::min(n_in - 1, static_cast<int>(std::floor(center + span)));
        double acc = 0.0;
        for (int j = lo; j <= hi; ++j) {
            const double d = center - j;
            const double win = 0.5 + 0.5 * std::cos(kPi * d / span);  // Hann taper
            acc += w.samples[j] * cutoff * sinc(cutoff * d) * win;
        }
        out.samples[n] = acc;
    }
    return out;
}

Waveform trim_silence(const Waveform& w, double threshold_db) {
    if (w.samples.empty()) throw UsageError("trim_silence: empty waveform");
    const int frame = 2048, hop = 512;
    const int n = static_cast<int>(w.samples.size());
    const int n_frames = std::max(1, 1 + (n - frame) / hop);

    std::vector<double> rms(n_frames, 0.0);
    double peak = 0.0;
    for (int t = 0; t < n_frames; ++t) {
        const int start = t * hop;
        const int end = std::min(n, start + frame);
        double acc = 0.0;
        for (int i = start; i < end; ++i) acc += w.samples[i] * w.samples[i];
        rms[t] = std::sqrt(acc / std::max(1, end - start));
        peak = std::max(peak, rms[t]);
    }
    const double floor_amp = peak * std::pow(10.0, -threshold_db / 20.0);
    int first = -1, last = -1;
    for (int t = 0; t < n_frames; ++t) {
        if (rms[t] >= floor_amp && rms[t] > 0.0) {
            if (first < 0) first = t;
            last = t;
        }
    }
    if (first < 0) throw EmptySignalError("trim_silence: signal entirely below threshold");

    const int begin = first * hop;
    const int end = std::min(n, last * hop + frame);
    Waveform out = w;
    out.samples.assign(w.samples.begin() + begin, w.samples.begin() + end);
    return out;
}

Waveform time_stretch(const Waveform& w, double target_duration_s) {
    if (w.samples.empty()) throw UsageError("time_stretch: empty waveform");
    if (target_duration_s <= 0) throw ConfigError("time_stretch: duration must be positive");
    const int n_out = static_cast<int>(std::llround(target_duration_s * w.sample_rate));
    const int n_in = static_cast<int>(w.samples.size());

    const int n_fft = 1024, hop = 256, half = n_fft / 2;
    const double rate = static_cast<double>(n_in) / n_out;  // >1 compresses

    const auto frames = stft(w.samples, n_fft, hop);
    const int n_src = static_cast<int>(frames.size());
    const int n_syn = n_out / hop + 2;

    // Bin center frequencies in radians per hop.
    std::vector<double> omega(half + 1);
    for (int k = 0; k <= half; ++k) omega[k] = 2.0 * kPi * k * hop / n_fft;

    std::vector<double> phase(half + 1), out_frame(n_fft);
    for (int k = 0; k <= half; ++k) phase[k] = std::arg(frames[0][k]);

    const auto window = hann_window(n_fft);
    std::vector<double> acc(static_cast<std::size_t>(n_syn - 1) * hop + n_fft, 0.0);
    std::vector<double> norm(acc.size(), 0.0);
    std::vector<std::complex<double>> buf(n_fft);

    for (int m = 0; m < n_syn; ++m) {
        const double pos = std::min(m * rate, static_cast<double>(n_src - 1));
        const int i0 = std::min(static_cast<int>(pos), n_src - 1);
        const int i1 = std::min(i0 + 1, n_src - 1);
        const double frac = pos - i0;

        for (int k = 0; k <= half; ++k) {
            const double mag =
                (1.0 - frac) * std::abs(frames[i0][k]) + frac * std::abs(frames[i1][k]);
            buf[k] = std::polar(mag, phase[k]);
            // Phase advance measured between the bracketing source frames.
            const double dphi =
                princarg(std::arg(frames[i1][k]) - std::arg(frames[i0][k]) - omega[k]) +
                omega[k];
            phase[k] = princarg(phase[k] + (i1 > i0 ? dphi : omega[k]));
        }
        for (int k = half + 1; k < n_fft; ++k) buf[k] = std::conj(buf[n_fft - k]);
        fft_inplace(buf, true);
        const int start = m * hop;
        for (int i = 0; i < n_fft; ++i) {
            acc[start + i] += buf[i].real() * window[i];
            norm[start + i] += window[i] * window[i];
        }
    }

    Waveform out = w;
    out.samples.assign(n_out, 0.0);
    // Synthesis frame m = 0 corresponds to signal position 0 (centered STFT).
    for (int i = 0; i < n_out; ++i) {
        const std::size_t j = static_cast<std::size_t>(i) + half;
        if (j < acc.size() && norm[j] > 1e-9) out.samples[i] = acc[j] / norm[j];
    }
    return out;
}

}  // namespace melvq::audio
