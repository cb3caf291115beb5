#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "melvq/nn/tensor.hpp"

namespace melvq::nn {

// Tensor container: magic "VQAT", version u32, rank u32, dims u64 each,
// dtype tag u32 (f32 = 0, f64 = 1), then the raw little-endian payload.
// Every checkpoint and latent-export file is built from these.

enum class DType : std::uint32_t { F32 = 0, F64 = 1 };

struct TensorBlob {
    std::vector<std::uint64_t> dims;
    DType dtype = DType::F32;
    std::vector<float> f32;
    std::vector<double> f64;

    std::uint64_t count() const;
    static TensorBlob from_tensor(const Tensor& t, DType dtype = DType::F64);
    TensorPtr to_tensor(bool requires_grad = false) const;
    std::vector<double> to_doubles() const;
};

void write_tensor(std::ostream& out, const TensorBlob& blob);
TensorBlob read_tensor(std::istream& in);

void save_tensor_file(const std::filesystem::path& path, const TensorBlob& blob);
TensorBlob load_tensor_file(const std::filesystem::path& path);

// Checkpoint: magic "VQCK", version u32, header length u64 + JSON bytes,
// section count u32, then named tensor containers.
struct Checkpoint {
    std::string header_json;
    std::vector<std::pair<std::string, TensorBlob>> sections;

    const TensorBlob& section(const std::string& name) const;
    bool has_section(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Atomic file replace: writes to a sibling temp file, then renames.
void atomic_write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace melvq::nn
