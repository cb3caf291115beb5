#include "melvq/audio/wav.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "melvq/errors.hpp"

namespace melvq::audio {

namespace {

struct FmtChunk {
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits_per_sample = 0;
};

template <typename T>
T read_le(const unsigned char* p) {
    T v{};
    std::memcpy(&v, p, sizeof(T));
    return v;  // little-endian host assumed
}

double decode_sample(const unsigned char* p, const FmtChunk& fmt) {
    switch (fmt.bits_per_sample) {
        case 8:
            return (static_cast<int>(p[0]) - 128) / 128.0;
        case 16:
            return read_le<std::int16_t>(p) / 32768.0;
        case 24: {
            std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
            if (v & 0x800000) v |= ~0xffffff;  // sign extend
            return v / 8388608.0;
        }
        case 32:
            if (fmt.format == 3) return static_cast<double>(read_le<float>(p));
            return read_le<std::int32_t>(p) / 2147483648.0;
        default:
            throw UnsupportedFormatError("wav: unsupported bit depth");
    }
}

}  // namespace

std::optional<std::pair<int, std::string>> parse_audiomnist_name(
    const std::filesystem::path& path) {
    const std::string stem = path.stem().string();
    const auto first = stem.find('_');
    const auto second = stem.find('_', first + 1);
    if (first == std::string::npos || second == std::string::npos) return std::nullopt;
    const std::string digit = stem.substr(0, first);
    if (digit.size() != 1 || digit[0] < '0' || digit[0] > '9') return std::nullopt;
    return std::make_pair(digit[0] - '0', stem.substr(first + 1, second - first - 1));
}

Waveform load_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("wav: cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw ParseError("wav: malformed RIFF header in " + path.string());
    }

    FmtChunk fmt;
    bool have_fmt = false;
    const unsigned char* data_ptr = nullptr;
    std::size_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const auto chunk_len = read_le<std::uint32_t>(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + chunk_len > bytes.size()) throw ParseError("wav: truncated chunk");
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (chunk_len < 16) throw ParseError("wav: fmt chunk too small");
            fmt.format = read_le<std::uint16_t>(bytes.data() + body);
            fmt.channels = read_le<std::uint16_t>(bytes.data() + body + 2);
            fmt.sample_rate = read_le<std::uint32_t>(bytes.data() + body + 4);
            fmt.bits_per_sample = read_le<std::uint16_t>(bytes.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data_ptr = bytes.data() + body;
            data_len = chunk_len;
        }
        pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
    }
    if (!have_fmt || data_ptr == nullptr) throw ParseError("wav: missing fmt or data chunk");
    if (fmt.format != 1 && fmt.format != 3) {
        throw UnsupportedFormatError("wav: only PCM and IEEE-float encodings are supported");
    }
    if (fmt.channels == 0 || fmt.sample_rate == 0) throw ParseError("wav: invalid fmt fields");
    if (fmt.format == 3 && fmt.bits_per_sample != 32) {
        throw UnsupportedFormatError("wav: float encoding must be 32-bit");
    }

    const std::size_t bytes_per_sample = fmt.bits_per_sample / 8;
    const std::size_t frame_size = bytes_per_sample * fmt.channels;
    if (frame_size == 0) throw ParseError("wav: zero frame size");
    const std::size_t n_frames = data_len / frame_size;

    Waveform w;
    w.sample_rate = static_cast<int>(fmt.sample_rate);
    w.samples.resize(n_frames);
    for (std::size_t i = 0; i < n_frames; ++i) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < fmt.channels; ++c) {
            acc += decode_sample(data_ptr + i * frame_size + c * bytes_per_sample, fmt);
        }
        w.samples[i] = acc / fmt.channels;
    }
    if (auto meta = parse_audiomnist_name(path)) {
        w.label = meta->first;
        w.speaker_id = meta->second;
    }
    return w;
}

void save_wav(const std::filesystem::path& path, const Waveform& w) {
    if (w.sample_rate <= 0) throw UsageError("save_wav: sample rate must be positive");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("wav: cannot open for write " + path.string());
    const std::uint32_t data_len = static_cast<std::uint32_t>(w.samples.size() * 2);
    auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto put_u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
    out.write("RIFF", 4);
    put_u32(36 + data_len);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(16);
    put_u16(1);  // PCM
    put_u16(1);  // mono
    put_u32(static_cast<std::uint32_t>(w.sample_rate));
    put_u32(static_cast<std::uint32_t>(w.sample_rate) * 2);
    put_u16(2);
    put_u16(16);
    out.write("data", 4);
    put_u32(data_len);
    for (double s : w.samples) {
        const double clamped = std::max(-1.0, std::min(1.0, s));
        const auto v = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
        out.write(reinterpret_cast<const char*>(&v), 2);
    }
    if (!out) throw IoError("wav: write failed " + path.string());
}

}  // namespace melvq::audio
