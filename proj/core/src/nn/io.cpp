#include "melvq/nn/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "melvq/errors.hpp"

namespace melvq::nn {

namespace {

constexpr char kTensorMagic[4] = {'V', 'Q', 'A', 'T'};
constexpr char kCheckpointMagic[4] = {'V', 'Q', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ParseError("tensor container: unexpected end of stream");
    return v;
}

}  // namespace

std::uint64_t TensorBlob::count() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

TensorBlob TensorBlob::from_tensor(const Tensor& t, DType dtype) {
    TensorBlob blob;
    blob.dims.assign(t.shape.begin(), t.shape.end());
    blob.dtype = dtype;
    if (dtype == DType::F64) {
        blob.f64 = t.data;
    } else {
        blob.f32.assign(t.data.begin(), t.data.end());
    }
    return blob;
}

TensorPtr TensorBlob::to_tensor(bool requires_grad) const {
    std::vector<int> shape;
    shape.reserve(dims.size());
    for (auto d : dims) shape.push_back(static_cast<int>(d));
    auto t = make_tensor(std::move(shape), to_doubles());
    t->requires_grad = requires_grad;
    return t;
}

std::vector<double> TensorBlob::to_doubles() const {
    if (dtype == DType::F64) return f64;
    return std::vector<double>(f32.begin(), f32.end());
}

void write_tensor(std::ostream& out, const TensorBlob& blob) {
    out.write(kTensorMagic, 4);
    write_pod<std::uint32_t>(out, kVersion);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(blob.dims.size()));
    for (auto d : blob.dims) write_pod<std::uint64_t>(out, d);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(blob.dtype));
    const std::uint64_t n = blob.count();
    if (blob.dtype == DType::F32) {
        if (blob.f32.size() != n) throw DimensionError("tensor container: payload size mismatch");
        out.write(reinterpret_cast<const char*>(blob.f32.data()),
                  static_cast<std::streamsize>(n * sizeof(float)));
    } else {
        if (blob.f64.size() != n) throw DimensionError("tensor container: payload size mismatch");
        out.write(reinterpret_cast<const char*>(blob.f64.data()),
                  static_cast<std::streamsize>(n * sizeof(double)));
    }
    if (!out) throw IoError("tensor container: write failed");
}

TensorBlob read_tensor(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kTensorMagic, 4) != 0) {
        throw ParseError("tensor container: bad magic");
    }
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kVersion) throw ParseError("tensor container: unsupported version");
    const auto rank = read_pod<std::uint32_t>(in);
    if (rank > 8) throw ParseError("tensor container: implausible rank");
    TensorBlob blob;
    blob.dims.resize(rank);
    for (auto& d : blob.dims) d = read_pod<std::uint64_t>(in);
    const auto tag = read_pod<std::uint32_t>(in);
    if (tag > 1) throw ParseError("tensor container: unknown dtype tag");
    blob.dtype = static_cast<DType>(tag);
    const std::uint64_t n = blob.count();
    if (blob.dtype == DType::F32) {
        blob.f32.resize(n);
        in.read(reinterpret_cast<char*>(blob.f32.data()),
                static_cast<std::streamsize>(n * sizeof(float)));
    } else {
        blob.f64.resize(n);
        in.read(reinterpret_cast<char*>(blob.f64.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
    }
    if (!in) throw ParseError("tensor container: truncated payload");
    return blob;
}

void save_tensor_file(const std::filesystem::path& path, const TensorBlob& blob) {
    std::ostringstream buf(std::ios::binary);
    write_tensor(buf, blob);
    atomic_write_file(path, buf.str());
}

TensorBlob load_tensor_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open tensor file: " + path.string());
    return read_tensor(in);
}

const TensorBlob& Checkpoint::section(const std::string& name) const {
    for (const auto& [key, blob] : sections) {
        if (key == name) return blob;
    }
    throw ParseError("checkpoint: missing section '" + name + "'");
}

bool Checkpoint::has_section(const std::string& name) const {
    for (const auto& [key, blob] : sections) {
        if (key == name) return true;
    }
    return false;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ostringstream buf(std::ios::binary);
    buf.write(kCheckpointMagic, 4);
    write_pod<std::uint32_t>(buf, kVersion);
    write_pod<std::uint64_t>(buf, ckpt.header_json.size());
    buf.write(ckpt.header_json.data(), static_cast<std::streamsize>(ckpt.header_json.size()));
    write_pod<std::uint32_t>(buf, static_cast<std::uint32_t>(ckpt.sections.size()));
    for (const auto& [name, blob] : ckpt.sections) {
        write_pod<std::uint32_t>(buf, static_cast<std::uint32_t>(name.size()));
        buf.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_tensor(buf, blob);
    }
    atomic_write_file(path, buf.str());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
        throw ParseError("checkpoint: bad magic");
    }
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kVersion) throw ParseError("checkpoint: unsupported version");
    Checkpoint ckpt;
    const auto header_len = read_pod<std::uint64_t>(in);
    ckpt.header_json.resize(header_len);
    in.read(ckpt.header_json.data(), static_cast<std::streamsize>(header_len));
    const auto n_sections = read_pod<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < n_sections; ++i) {
        const auto name_len = read_pod<std::uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), static_cast<std::streamsize>(name_len));
        if (!in) throw ParseError("checkpoint: truncated section name");
        ckpt.sections.emplace_back(std::move(name), read_tensor(in));
    }
    return ckpt;
}

void atomic_write_file(const std::filesystem::path& path, const std::string& bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for write: " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace melvq::nn
