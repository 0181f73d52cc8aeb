#include "rfpose/tensor_io.hpp"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "tensor files are little-endian; big-endian hosts are unsupported");

namespace rfpose {

void write_tensor(const std::string& path, const TensorFile& t) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f.write("RFT1", 4);
    uint32_t rank = uint32_t(t.shape.size());
    f.write(reinterpret_cast<const char*>(&rank), 4);
    f.write(reinterpret_cast<const char*>(t.shape.data()), 4 * rank);
    f.write(reinterpret_cast<const char*>(t.data.data()),
            std::streamsize(sizeof(float) * t.data.size()));
    if (!f) throw std::runtime_error("short write: " + path);
}

TensorFile read_tensor(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::string(magic, 4) != "RFT1")
        throw std::runtime_error("bad tensor magic in " + path);
    uint32_t rank = 0;
    f.read(reinterpret_cast<char*>(&rank), 4);
    if (rank > 8) throw std::runtime_error("implausible tensor rank in " + path);
    TensorFile t;
    t.shape.resize(rank);
    f.read(reinterpret_cast<char*>(t.shape.data()), 4 * rank);
    t.data.resize(t.count());
    f.read(reinterpret_cast<char*>(t.data.data()), std::streamsize(sizeof(float) * t.data.size()));
    if (!f) throw std::runtime_error("truncated tensor file: " + path);
    return t;
}

void atomic_rename(const std::string& tmp_path, const std::string& path) {
    std::error_code ec;
    std::filesystem::rename(tmp_path, path, ec);
    if (ec) throw std::runtime_error("rename " + tmp_path + " -> " + path + ": " + ec.message());
}

}  // namespace rfpose
