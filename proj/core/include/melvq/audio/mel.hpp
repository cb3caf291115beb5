#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "melvq/audio/wav.hpp"
#include "melvq/nn/tensor.hpp"

namespace melvq::audio {

struct PreprocessConfig {
    int target_sample_rate = 22050;
    double silence_threshold_db = 15.0;
    int n_fft = 1024;
    int hop_length = 256;
    int n_mels = 64;
    int n_frames = 88;
    // (n_frames - 1) * hop / rate; keeps the centered STFT at exactly n_frames.
    double target_duration_s = 87.0 * 256.0 / 22050.0;
    std::string mel_scale = "htk";

    void validate() const;
};

struct MelSpectrogram {
    std::vector<double> values;  // [1, 64, 88] row-major, normalized to [0, 1]
    double scale_min = 0.0;      // dB range recorded before min-max scaling
    double scale_max = 0.0;
    int label = -1;
    std::string source;
};

// Triangular Mel filterbank on the HTK scale: [n_mels, n_fft/2 + 1].
std::vector<std::vector<double>> mel_filterbank(int n_mels, int n_fft, double sample_rate,
                                                double f_min, double f_max);
std::vector<double> mel_center_frequencies(int n_mels, double sample_rate, double f_min,
                                           double f_max);

// Power spectrogram through the filterbank; requires exactly cfg.n_frames
// frames. Output is [1, n_mels, n_frames].
nn::TensorPtr mel_spectrogram(const Waveform& w, const PreprocessConfig& cfg);

// 10*log10(max(p, 1e-10)), then min-max to [0, 1]; records the dB range.
MelSpectrogram to_db_and_normalize(const nn::TensorPtr& power_spec);
std::vector<double> denormalize_db(const MelSpectrogram& spec);

// Full six-step pipeline: resample, trim, stretch, Mel, dB, min-max.
MelSpectrogram preprocess(const Waveform& w, const PreprocessConfig& cfg);

// A preprocessed corpus plus its labels, stored as one [N, 1, 64, 88] f32
// tensor container with a JSON-lines manifest alongside.
struct SpectrogramSet {
    int count = 0;
    int mels = 64;
    int frames = 88;
    std::vector<float> values;  // count * mels * frames
    std::vector<int> labels;
    std::vector<std::string> sources;

    std::vector<double> sample(int index) const;
    int sample_size() const { return mels * frames; }
};

void save_spectrogram_set(const std::filesystem::path& tensor_path, const SpectrogramSet& set);
SpectrogramSet load_spectrogram_set(const std::filesystem::path& tensor_path);

}  // namespace melvq::audio
