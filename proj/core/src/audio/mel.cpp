#include "melvq/audio/mel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "melvq/audio/dsp.hpp"
#include "melvq/errors.hpp"
#include "melvq/nn/io.hpp"

namespace melvq::audio {

namespace {

using nlohmann::json;

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

constexpr double kDbFloor = 1e-10;

}  // namespace

void PreprocessConfig::validate() const {
    if (n_mels != 64) throw ConfigError("preprocess: n_mels must be 64");
    if (target_sample_rate <= 0 || n_fft <= 0 || hop_length <= 0 || n_frames <= 0) {
        throw ConfigError("preprocess: non-positive field");
    }
    // The centered STFT yields 1 + floor(len / hop) frames.
    const auto len = static_cast<long long>(
        std::llround(target_duration_s * target_sample_rate));
    if (1 + len / hop_length != n_frames) {
        throw ConfigError("preprocess: duration and hop do not produce the target frame count");
    }
}

std::vector<double> mel_center_frequencies(int n_mels, double sample_rate, double f_min,
                                           double f_max) {
    const double mel_lo = hz_to_mel(f_min);
    const double mel_hi = hz_to_mel(std::min(f_max, sample_rate / 2.0));
    std::vector<double> centers(n_mels);
    for (int m = 1; m <= n_mels; ++m) {
        centers[m - 1] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (n_mels + 1));
    }
    return centers;
}

std::vector<std::vector<double>> mel_filterbank(int n_mels, int n_fft, double sample_rate,
                                                double f_min, double f_max) {
    const int n_bins = n_fft / 2 + 1;
    const double mel_lo = hz_to_mel(f_min);
    const double mel_hi = hz_to_mel(std::min(f_max, sample_rate / 2.0));
    std::vector<double> edges(n_mels + 2);
    for (int m = 0; m < n_mels + 2; ++m) {
        edges[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (n_mels + 1));
    }
    std::vector<std::vector<double>> fb(n_mels, std::vector<double>(n_bins, 0.0));
    for (int m = 0; m < n_mels; ++m) {
        const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
        for (int k = 0; k < n_bins; ++k) {
            const double f = k * sample_rate / n_fft;
            if (f <= left || f >= right) continue;
            fb[m][k] = f <= center ? (f - left) / (center - left) : (right - f) / (right - center);
        }
    }
    return fb;
}

nn::TensorPtr mel_spectrogram(const Waveform& w, const PreprocessConfig& cfg) {
    cfg.validate();
    if (w.sample_rate != cfg.target_sample_rate) {
        throw UsageError("mel_spectrogram: waveform not at the target sample rate");
    }
    const auto frames = stft(w.samples, cfg.n_fft, cfg.hop_length);
    if (static_cast<int>(frames.size()) != cfg.n_frames) {
        throw ConfigError("mel_spectrogram: got " + std::to_string(frames.size()) +
                          " frames, expected " + std::to_string(cfg.n_frames) +
                          " (hop/duration mismatch)");
    }
    const auto fb = mel_filterbank(cfg.n_mels, cfg.n_fft, cfg.target_sample_rate, 0.0,
                                   cfg.target_sample_rate / 2.0);
    const int n_bins = cfg.n_fft / 2 + 1;
    auto out = nn::make_tensor({1, cfg.n_mels, cfg.n_frames});
    std::vector<double> power(n_bins);
    for (int t = 0; t < cfg.n_frames; ++t) {
        for (int k = 0; k < n_bins; ++k) power[k] = std::norm(frames[t][k]);
        for (int m = 0; m < cfg.n_mels; ++m) {
            double acc = 0.0;
            for (int k = 0; k < n_bins; ++k) acc += fb[m][k] * power[k];
            out->data[static_cast<std::size_t>(m) * cfg.n_frames + t] = acc;
        }
    }
    return out;
}

MelSpectrogram to_db_and_normalize(const nn::TensorPtr& power_spec) {
    MelSpectrogram spec;
    spec.values.resize(power_spec->data.size());
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
        const double p = power_spec->data[i];
        if (p < 0.0) throw UsageError("to_db_and_normalize: negative power value");
        const double db = 10.0 * std::log10(std::max(p, kDbFloor));
        spec.values[i] = db;
        lo = std::min(lo, db);
        hi = std::max(hi, db);
    }
    if (!(hi > lo)) {
        throw DegenerateInputError("to_db_and_normalize: constant spectrogram");
    }
    spec.scale_min = lo;
    spec.scale_max = hi;
    for (auto& v : spec.values) v = (v - lo) / (hi - lo);
    return spec;
}

std::vector<double> denormalize_db(const MelSpectrogram& spec) {
    std::vector<double> db(spec.values.size());
    for (std::size_t i = 0; i < db.size(); ++i) {
        db[i] = spec.values[i] * (spec.scale_max - spec.scale_min) + spec.scale_min;
    }
    return db;
}

MelSpectrogram preprocess(const Waveform& w, const PreprocessConfig& cfg) {
    cfg.validate();
    auto resampled = resample(w, cfg.target_sample_rate);
    auto trimmed = trim_silence(resampled, cfg.silence_threshold_db);
    auto stretched = time_stretch(trimmed, cfg.target_duration_s);
    auto spec = to_db_and_normalize(mel_spectrogram(stretched, cfg));
    spec.label = w.label;
    return spec;
}

std::vector<double> SpectrogramSet::sample(int index) const {
    const auto n = static_cast<std::size_t>(sample_size());
    std::vector<double> out(n);
    const float* src = values.data() + static_cast<std::size_t>(index) * n;
    for (std::size_t i = 0; i < n; ++i) out[i] = src[i];
    return out;
}

void save_spectrogram_set(const std::filesystem::path& tensor_path, const SpectrogramSet& set) {
    nn::TensorBlob blob;
    blob.dims = {static_cast<std::uint64_t>(set.count), 1, static_cast<std::uint64_t>(set.mels),
                 static_cast<std::uint64_t>(set.frames)};
    blob.dtype = nn::DType::F32;
    blob.f32 = set.values;
    nn::save_tensor_file(tensor_path, blob);

    std::ostringstream manifest;
    for (int i = 0; i < set.count; ++i) {
        json line;
        line["index"] = i;
        line["label"] = set.labels[i];
        line["source"] = i < static_cast<int>(set.sources.size()) ? set.sources[i] : "";
        manifest << line.dump() << "\n";
    }
    auto manifest_path = tensor_path;
    manifest_path += ".manifest.jsonl";
    nn::atomic_write_file(manifest_path, manifest.str());
}

SpectrogramSet load_spectrogram_set(const std::filesystem::path& tensor_path) {
    const auto blob = nn::load_tensor_file(tensor_path);
    if (blob.dims.size() != 4 || blob.dims[1] != 1) {
        throw ParseError("spectrogram set: expected [N, 1, mels, frames]");
    }
    SpectrogramSet set;
    set.count = static_cast<int>(blob.dims[0]);
    set.mels = static_cast<int>(blob.dims[2]);
    set.frames = static_cast<int>(blob.dims[3]);
    if (blob.dtype == nn::DType::F32) {
        set.values = blob.f32;
    } else {
        set.values.assign(blob.f64.begin(), blob.f64.end());
    }
    set.labels.assign(set.count, -1);
    set.sources.assign(set.count, "");

    auto manifest_path = tensor_path;
    manifest_path += ".manifest.jsonl";
    std::ifstream in(manifest_path);
    if (in) {
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto entry = json::parse(line);
            const int i = entry.at("index").get<int>();
            if (i < 0 || i >= set.count) throw ParseError("spectrogram manifest: bad index");
            set.labels[i] = entry.at("label").get<int>();
            set.sources[i] = entry.value("source", "");
        }
    }
    return set;
}

}  // namespace melvq::audio
