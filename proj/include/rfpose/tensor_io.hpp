#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rfpose {

// On-disk tensor layout, little-endian:
//   magic "RFT1" | u32 rank | u32 dims[rank] | f32 data[prod(dims)]
struct TensorFile {
    std::vector<uint32_t> shape;
    std::vector<float> data;

    size_t count() const {
        size_t n = 1;
        for (uint32_t d : shape) n *= d;
        return n;
    }
};

void write_tensor(const std::string& path, const TensorFile& t);
TensorFile read_tensor(const std::string& path);

// Atomically replaces `path` with `tmp_path` (write tmp, then rename).
void atomic_rename(const std::string& tmp_path, const std::string& path);

}  // namespace rfpose
