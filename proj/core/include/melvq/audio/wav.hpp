#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace melvq::audio {

struct Waveform {
    std::vector<double> samples;  // in [-1, 1]
    int sample_rate = 0;
    int label = -1;              // digit 0-9, -1 when unknown
    std::string speaker_id;
};

// Reads a RIFF/PCM WAV (PCM 8/16/24/32-bit or IEEE float32), downmixing to
// mono by averaging. Fills label/speaker from the file name when it follows
// the "digit_speaker_index.wav" layout.
Waveform load_wav(const std::filesystem::path& path);

// 16-bit PCM mono writer; used by tooling and test fixtures.
void save_wav(const std::filesystem::path& path, const Waveform& w);

// Parses "digit_speaker_index.wav"; returns (label, speaker) when it matches.
std::optional<std::pair<int, std::string>> parse_audiomnist_name(const std::filesystem::path& path);

}  // namespace melvq::audio
